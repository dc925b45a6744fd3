import numpy as np
import pytest

from phonation.learn import (Kernel, SvmParams, fit_svm, kernel_matrix, load_model,
                             predict_svm, save_model, smo_solve)

from helpers import gaussian_blobs

TWO_POINTS = np.array([[-1.0, 0.0], [1.0, 0.0]])
TWO_LABELS = ["A", "B"]


def linear(C=1.0, **kw):
    return SvmParams(kernel=Kernel.LINEAR, C=C, **kw)


class TestTwoPointAnalytic:
    # dual of the 2-point problem has the closed form alpha = (0.5, 0.5),
    # w = (1, 0), b = 0 (standardization leaves these points unchanged)

    def test_alphas(self):
        model = fit_svm(TWO_POINTS, TWO_LABELS, linear())
        (_, _, machine), = model.machines
        np.testing.assert_allclose(machine.alphas, [0.5, 0.5], atol=1e-6)

    def test_weights_and_bias(self):
        model = fit_svm(TWO_POINTS, TWO_LABELS, linear())
        (_, _, machine), = model.machines
        np.testing.assert_allclose(machine.linear_weights(), [1.0, 0.0], atol=1e-6)
        assert abs(machine.bias) < 1e-6

    def test_boundary_point_tie_break(self):
        model = fit_svm(TWO_POINTS, TWO_LABELS, linear())
        assert predict_svm(model, np.array([[0.0, 5.0]])) == ["A"]

    def test_training_points_classified(self):
        model = fit_svm(TWO_POINTS, TWO_LABELS, linear())
        assert predict_svm(model, TWO_POINTS) == ["A", "B"]


class TestSeparable:
    def test_blobs_perfect_training_accuracy(self):
        X, y = gaussian_blobs(30, 2, 4, sep=12.0, seed=0, labels=["A", "B"])
        model = fit_svm(X, y, linear(C=100.0))
        assert predict_svm(model, X) == y

    def test_xor_linear_at_most_75(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = ["A", "A", "B", "B"]
        model = fit_svm(X, y, linear(C=10.0))
        acc = np.mean([p == t for p, t in zip(predict_svm(model, X), y)])
        assert acc <= 0.75  # best achievable by any linear separator on XOR


class TestSmoInvariants:
    def _random_problem(self, seed, n=50, dim=6):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, dim))
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        if np.all(y == y[0]):
            y[0] = -y[0]
        C = float(rng.choice([0.1, 1.0, 10.0]))
        return X, y, C

    @pytest.mark.parametrize("seed", range(10))
    def test_objective_monotone_and_kkt(self, seed):
        X, y, C = self._random_problem(seed)
        K = kernel_matrix(linear(), X, X)
        res = smo_solve(K, y, C, tol=1e-3, max_iters=100_000)
        trace = np.array(res.objective_trace)
        assert np.all(np.diff(trace) >= -1e-9)
        assert res.converged
        assert res.kkt_violation <= 1e-3
        assert np.all(res.alphas >= 0.0)
        assert np.all(res.alphas <= C)

    def test_rbf_also_monotone(self):
        X, y, C = self._random_problem(123)
        params = SvmParams(kernel=Kernel.RBF, C=C, gamma=0.5)
        K = kernel_matrix(params, X, X)
        res = smo_solve(K, y, C, tol=1e-3, max_iters=100_000)
        trace = np.array(res.objective_trace)
        assert np.all(np.diff(trace) >= -1e-9)
        assert res.converged

    def test_linear_weights_match_kernel_expansion(self):
        X, y = gaussian_blobs(25, 2, 5, sep=3.0, seed=4, labels=["A", "B"])
        model = fit_svm(X, y, linear(C=1.0))
        (_, _, machine), = model.machines
        Xs = model.standardizer.transform(X)
        via_w = Xs @ machine.linear_weights() + machine.bias
        via_k = machine.decision(Xs)
        np.testing.assert_allclose(via_w, via_k, atol=1e-8)


class TestMulticlass:
    def test_four_gaussians_heldout(self):
        # Monte-Carlo estimate of the generator's Bayes rate: with 10 sigma
        # separation, nearest-center classification is essentially perfect
        Xbig, ybig = gaussian_blobs(2000, 4, 6, sep=10.0, seed=99)
        centers = {k: Xbig[[lab == k for lab in ybig]].mean(axis=0) for k in set(ybig)}
        nearest = [min(centers, key=lambda c: np.linalg.norm(x - centers[c])) for x in Xbig]
        assert np.mean([p == t for p, t in zip(nearest, ybig)]) >= 0.999

        Xtr, ytr = gaussian_blobs(40, 4, 6, sep=10.0, seed=1)
        Xte, yte = gaussian_blobs(40, 4, 6, sep=10.0, seed=2)
        model = fit_svm(Xtr, ytr, SvmParams(kernel=Kernel.RBF, C=10.0, gamma=1.0 / 6))
        acc = np.mean([p == t for p, t in zip(predict_svm(model, Xte), yte)])
        assert acc >= 0.99

    def test_six_machines_for_four_classes(self):
        X, y = gaussian_blobs(10, 4, 3, sep=8.0, seed=3)
        model = fit_svm(X, y, linear())
        assert len(model.machines) == 6

    def test_scaling_invariance_of_predictions(self):
        X, y = gaussian_blobs(25, 3, 4, sep=6.0, seed=5)
        Xte, _ = gaussian_blobs(10, 3, 4, sep=6.0, seed=6)
        scale = np.array([4.0, 0.25, 2.0, 8.0])  # powers of two: exact fp scaling
        base = fit_svm(X, y, SvmParams(kernel=Kernel.RBF, C=1.0, gamma=0.25))
        scaled = fit_svm(X * scale, y, SvmParams(kernel=Kernel.RBF, C=1.0, gamma=0.25))
        assert predict_svm(base, Xte) == predict_svm(scaled, Xte * scale)

    def test_generic_scaling_invariance(self):
        X, y = gaussian_blobs(25, 3, 4, sep=6.0, seed=7)
        Xte, _ = gaussian_blobs(15, 3, 4, sep=6.0, seed=8)
        scale = np.array([3.3, 0.7, 11.0, 0.02])
        base = fit_svm(X, y, linear(C=1.0))
        scaled = fit_svm(X * scale, y, linear(C=1.0))
        assert predict_svm(base, Xte) == predict_svm(scaled, Xte * scale)


class TestValidation:
    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="at least 2 classes"):
            fit_svm(np.zeros((3, 2)), ["A", "A", "A"], linear())

    def test_non_finite_rejected(self):
        X = np.array([[0.0, np.nan], [1.0, 2.0]])
        with pytest.raises(ValueError, match="non-finite"):
            fit_svm(X, ["A", "B"], linear())

    def test_dimension_mismatch_on_predict(self):
        model = fit_svm(TWO_POINTS, TWO_LABELS, linear())
        with pytest.raises(ValueError, match="dimension mismatch"):
            predict_svm(model, np.zeros((2, 3)))

    def test_bad_params(self):
        with pytest.raises(ValueError, match="C must be positive"):
            SvmParams(kernel=Kernel.LINEAR, C=0.0)
        with pytest.raises(ValueError, match="gamma"):
            SvmParams(kernel=Kernel.RBF, C=1.0)


class TestSerialization:
    def test_round_trip_predictions(self, tmp_path):
        X, y = gaussian_blobs(20, 3, 4, sep=5.0, seed=10)
        Xte, _ = gaussian_blobs(10, 3, 4, sep=5.0, seed=11)
        model = fit_svm(X, y, SvmParams(kernel=Kernel.RBF, C=2.0, gamma=0.1))
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert predict_svm(back, Xte) == predict_svm(model, Xte)

    def test_rejects_foreign_document(self, tmp_path):
        (tmp_path / "x.json").write_text('{"hello": 1}')
        with pytest.raises(ValueError, match="not a serialized model"):
            load_model(tmp_path / "x.json")
