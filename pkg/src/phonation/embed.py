"""Layer-wise embedding sets, the binary feature-store format, and mean pooling.

A store file holds, for every clip, one frames x hidden_dim float32 matrix per
layer (layer 0 is the CNN encoder output, layers 1..n the transformer layers).
Byte layout, all integers little-endian:

    magic "V2ME" | version u32 (=1) | model_id u16-len + UTF-8 |
    n_layers u16 | hidden_dim u16 | pooled u8 | clip_count u32 |
    index table: per clip (id u16-len + UTF-8, absolute byte offset u64,
    frames u32) | payload: per clip, layers 0..n_layers in order, each a
    row-major frames x hidden_dim block of float32.

Pooled stores (pooled flag set) hold one pre-averaged frame per layer, so
small fixtures can ship without running a model.
"""

from __future__ import annotations

import mmap
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .dsp import FeatureKind, FeatureVector

MAGIC = b"V2ME"
VERSION = 1


class StoreError(ValueError):
    """Raised for malformed or inconsistent store files."""


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    n_layers: int
    hidden_dim: int

    @property
    def n_vectors(self) -> int:
        """Poolable vectors per clip: the transformer layers plus layer 0."""
        return self.n_layers + 1


KNOWN_MODELS = {
    "wav2vec2-base": ModelSpec("wav2vec2-base", 12, 768),
    "wav2vec2-large": ModelSpec("wav2vec2-large", 24, 1024),
    "hubert-large": ModelSpec("hubert-large", 24, 1024),
}


@dataclass(frozen=True)
class LayerEmbeddingSet:
    clip_id: str
    model: ModelSpec
    layers: np.ndarray  # (n_layers + 1, frames, hidden_dim) float32
    pooled: bool = False

    def __post_init__(self):
        arr = np.ascontiguousarray(self.layers, dtype=np.float32)
        object.__setattr__(self, "layers", arr)
        if arr.ndim != 3:
            raise ValueError("layers must have shape (n_layers + 1, frames, hidden_dim)")
        if arr.shape[0] != self.model.n_vectors or arr.shape[2] != self.model.hidden_dim:
            raise ValueError(f"layer block shape {arr.shape} does not match {self.model}")
        if self.pooled and arr.shape[1] != 1:
            raise ValueError("pooled sets must hold exactly one frame per layer")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in embeddings for clip {self.clip_id!r}")

    @property
    def frames(self) -> int:
        return int(self.layers.shape[1])


def mean_pool(emb: LayerEmbeddingSet, layer: int) -> FeatureVector:
    """Per-dimension mean over frames of one layer, accumulated in float64."""
    if not 0 <= layer < emb.model.n_vectors:
        raise ValueError(f"missing layer index {layer} (have 0..{emb.model.n_layers})")
    if emb.frames < 1:
        raise ValueError(f"clip {emb.clip_id!r} has zero frames")
    values = emb.layers[layer].mean(axis=0, dtype=np.float64)
    return FeatureVector(FeatureKind.EMBEDDING, values, model_id=emb.model.model_id, layer=layer)


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise StoreError(f"string too long for store format: {s[:32]!r}...")
    return struct.pack("<H", len(raw)) + raw


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise StoreError(f"truncated store file while reading {what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]

    def string(self, what: str) -> str:
        return self.take(self.u16(what), what).decode("utf-8")


def write_store(sets: Iterable[LayerEmbeddingSet], path: str | Path) -> None:
    """Write embedding sets to a store file. All sets must share one model spec."""
    sets = list(sets)
    if not sets:
        raise StoreError("refusing to write an empty store")
    model = sets[0].model
    pooled = sets[0].pooled
    seen: set[str] = set()
    for s in sets:
        if s.model != model:
            raise StoreError(f"mixed model specs in one store: {s.model} vs {model}")
        if s.pooled != pooled:
            raise StoreError("mixed pooled and frame-level sets in one store")
        if s.clip_id in seen:
            raise StoreError(f"duplicate clip_id {s.clip_id!r}")
        seen.add(s.clip_id)

    header = bytearray()
    header += MAGIC
    header += struct.pack("<I", VERSION)
    header += _pack_str(model.model_id)
    header += struct.pack("<HHB", model.n_layers, model.hidden_dim, int(pooled))
    header += struct.pack("<I", len(sets))
    index_entries = [_pack_str(s.clip_id) for s in sets]
    index_size = sum(len(e) + 12 for e in index_entries)  # + offset u64 + frames u32
    offset = len(header) + index_size
    for s, entry in zip(sets, index_entries):
        header += entry
        header += struct.pack("<QI", offset, s.frames)
        offset += s.layers.nbytes

    with open(path, "wb") as fh:
        fh.write(header)
        for s in sets:
            fh.write(s.layers.astype("<f4", copy=False).tobytes())


@dataclass(frozen=True)
class _IndexEntry:
    offset: int
    frames: int


class StoreReader:
    """Random access to one store file; any number of readers may coexist."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        # mmap keeps multi-gigabyte frame-level stores out of resident memory
        self._fh = open(self.path, "rb")
        try:
            data = mmap.mmap(self._fh.fileno(), 0, access=mmap.ACCESS_READ)
        except ValueError:
            self._fh.close()
            raise StoreError(f"{self.path}: empty file, not a feature store") from None
        cur = _Cursor(data)
        magic = cur.take(4, "magic")
        if magic != MAGIC:
            raise StoreError(f"{self.path}: bad magic {magic!r}, not a feature store")
        version = cur.u32("version")
        if version != VERSION:
            raise StoreError(f"{self.path}: unsupported store version {version}")
        model_id = cur.string("model_id")
        n_layers = cur.u16("n_layers")
        hidden_dim = cur.u16("hidden_dim")
        self.pooled = bool(cur.u8("pooled flag"))
        self.model = ModelSpec(model_id, n_layers, hidden_dim)
        clip_count = cur.u32("clip count")
        self._index: dict[str, _IndexEntry] = {}
        self._order: list[str] = []
        for _ in range(clip_count):
            cid = cur.string("clip id")
            off = cur.u64(f"offset of clip {cid!r}")
            frames = cur.u32(f"frame count of clip {cid!r}")
            if cid in self._index:
                raise StoreError(f"{self.path}: duplicate clip_id {cid!r} in index")
            self._index[cid] = _IndexEntry(off, frames)
            self._order.append(cid)
        self._data = data

    def close(self) -> None:
        self._data.close()
        self._fh.close()

    def __enter__(self) -> "StoreReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def clip_ids(self) -> list[str]:
        return list(self._order)

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, clip_id: str) -> bool:
        return clip_id in self._index

    def read(self, clip_id: str) -> LayerEmbeddingSet:
        if clip_id not in self._index:
            raise StoreError(f"{self.path}: clip {clip_id!r} not in store")
        entry = self._index[clip_id]
        shape = (self.model.n_vectors, entry.frames, self.model.hidden_dim)
        nbytes = 4 * shape[0] * shape[1] * shape[2]
        block = self._data[entry.offset : entry.offset + nbytes]
        if len(block) != nbytes:
            raise StoreError(f"{self.path}: truncated block for clip {clip_id!r}")
        arr = np.frombuffer(block, dtype="<f4").reshape(shape)
        try:
            return LayerEmbeddingSet(clip_id, self.model, arr, pooled=self.pooled)
        except ValueError as exc:
            raise StoreError(f"{self.path}: {exc}") from None

    def __iter__(self) -> Iterator[LayerEmbeddingSet]:
        for cid in self._order:
            yield self.read(cid)


def open_store(path: str | Path) -> StoreReader:
    return StoreReader(path)


def load_store(path: str | Path) -> Iterator[LayerEmbeddingSet]:
    """Iterate all embedding sets in index order."""
    return iter(StoreReader(path))


def pooled_store_from_vectors(vectors: dict[str, np.ndarray], model_id: str,
                              path: str | Path) -> None:
    """Pack one fixed-length vector per clip as a single-layer pooled store."""
    dims = {v.shape[-1] for v in vectors.values()}
    if len(dims) != 1:
        raise StoreError(f"inconsistent vector dims: {sorted(dims)}")
    spec = ModelSpec(model_id, 0, dims.pop())
    sets = [
        LayerEmbeddingSet(cid, spec, np.asarray(v, dtype=np.float32).reshape(1, 1, -1), pooled=True)
        for cid, v in vectors.items()
    ]
    write_store(sets, path)
