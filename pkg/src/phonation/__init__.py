"""Phonation-mode classification for sustained singing vowels.

Pipeline pieces: corpus ingestion (16 kHz, peak-normalized), baseline
spectro-temporal features, pooled per-layer embeddings from a binary feature
store, from-scratch SVM (SMO) and gradient-boosted trees, and a stratified
k-fold evaluation protocol with paired splits.
"""

from . import corpus, dsp, embed, evaluate, folds, learn

__version__ = "0.1.0"
__all__ = ["corpus", "dsp", "embed", "evaluate", "folds", "learn", "__version__"]
