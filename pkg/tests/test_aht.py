from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm
from sklearn.preprocessing import PolynomialFeatures

from qdmd.aht import (
    ControlCoefficients,
    aht_bidmd_fit,
    build_library,
    coefficient_matrix,
    coefficient_names,
    fit_fourier_coefficients,
)
from qdmd.controls import fourier, sawtooth
from qdmd.dmd import bidmd_predict
from qdmd.exceptions import InvalidHarmonicError, ShapeError
from qdmd.experiments import (
    _qubit_generators,
    aht_rollout,
    aht_signal,
    evaluation_controls,
    fit_aht,
    training_controls,
)
from qdmd.metrics import relative_l2_error


@pytest.fixture(scope="module")
def sweep_model():
    return fit_aht(sigma=0.01, seed=0)


class TestFourier:
    @given(st.integers(1, 6), st.floats(0.5, 4.0), st.integers(0, 2**31 - 1), st.integers(1, 4))
    def test_left_inverse_of_synthesis(self, K, w, seed, period_index):
        c = np.random.default_rng(seed).uniform(-1, 1, 2 * K)
        u = fourier(c[:K], c[K:], w)
        got = fit_fourier_coefficients(u, w, K, period_index=period_index)
        assert np.max(np.abs(got - c)) <= 1e-10

    def test_samples_match_callable(self):
        c = np.array([0.3, -0.2, 0.5, 0.1])
        u = fourier(c[:2], c[2:], np.pi)
        t = 2.0 * np.arange(64) / 64
        assert np.allclose(fit_fourier_coefficients(u(t), np.pi, 2), c, atol=1e-12)

    def test_local_time_shifts_phase(self):
        # a drive starting half a period late looks phase-inverted in local time
        u = fourier([1.0], [0.0], np.pi)
        local = fit_fourier_coefficients(u, np.pi, 1, t0=1.0, local_time=True)
        assert np.allclose(local, [-1.0, 0.0], atol=1e-12)

    def test_sawtooth_series(self):
        A = 0.7
        c = fit_fourier_coefficients(sawtooth(A, 2.0), np.pi, 5, n_points=1 << 16)
        k = np.arange(1, 6)
        assert np.allclose(c[:5], 0, atol=1e-3)
        assert np.allclose(c[5:], (-1.0) ** (k + 1) * 2 * A / (k * np.pi), atol=1e-3)

    def test_coefficient_matrix(self):
        u = fourier([0, 1], [0, 0], np.pi)
        cc = coefficient_matrix(u, np.pi, 2, 3)
        assert cc.n_periods == 3 and cc.period == pytest.approx(2.0)
        assert np.allclose(cc.cosine, [[0, 0, 0], [1, 1, 1]], atol=1e-12)
        assert cc.names == ["a1", "a2", "b1", "b2"]
        with pytest.raises(ShapeError):
            ControlCoefficients(np.zeros((3, 2)), 2, np.pi)

    def test_errors(self):
        with pytest.raises(InvalidHarmonicError):
            fit_fourier_coefficients(np.ones(8), np.pi, 0)
        with pytest.raises(InvalidHarmonicError):
            fit_fourier_coefficients(np.ones(8), -1.0, 1)
        with pytest.raises(ShapeError):
            fit_fourier_coefficients(np.ones(4), np.pi, 2)


class TestLibrary:
    def test_matches_sklearn(self, rng):
        U = rng.standard_normal((10, 7))
        lib = build_library(U, 2)
        ref = PolynomialFeatures(2, include_bias=False).fit_transform(U.T).T
        assert lib.n_features == 65
        assert np.allclose(lib.features, ref)
        assert lib.names[:3] == ("a1", "a2", "a3")
        assert lib.names[10] == "a1^2" and lib.names[11] == "a1 a2"

    @given(st.integers(1, 6), st.integers(1, 3))
    def test_row_count(self, n_in, degree):
        U = np.ones((n_in, 2))
        assert build_library(U, degree).n_features == comb(n_in + degree, degree) - 1

    def test_monomials_and_transform(self, rng):
        U = rng.standard_normal((2, 5))
        lib = build_library(U, 3, ["p", "q"])
        assert lib.names == ("p", "q", "p^2", "p q", "q^2", "p^3", "p^2 q", "p q^2", "q^3")
        p, q = U
        assert np.allclose(lib.features[6], p**2 * q)
        V = rng.standard_normal((2, 3))
        assert np.allclose(lib.transform(V), build_library(V, 3).features)

    def test_errors(self):
        with pytest.raises(ValueError):
            build_library(np.ones((2, 2)), 0)
        with pytest.raises(ShapeError):
            build_library(np.ones((2, 2)), 1, ["a"])
        assert coefficient_names(2) == ["a1", "a2", "b1", "b2"]


class TestAHTFit:
    def test_exact_for_linear_in_features(self, rng):
        d, K = 3, 2
        U = rng.uniform(-1, 1, (2 * K, 80))
        lib = build_library(U, 2)
        A = 0.5 * rng.standard_normal((d, d))
        B = 0.1 * rng.standard_normal((d, lib.n_features * d))
        X = rng.standard_normal((d, 80))
        Xp = np.column_stack([A @ X[:, m] + B @ np.kron(lib.features[:, m], X[:, m]) for m in range(80)])
        model = aht_bidmd_fit(X, Xp, lib, dt=2.0)
        G = np.hstack([A, B])
        assert np.linalg.norm(np.hstack([model.A, model.B]) - G) <= 1e-8 * np.linalg.norm(G)
        assert model.feature_names == lib.names
        assert model.dt == 2.0

    def test_sweep_layout(self):
        controls = training_controls()
        assert len(controls) == 101
        assert np.count_nonzero(controls[0]) == 0
        assert all(np.count_nonzero(c) == 1 for c in controls[1:])

    def test_drift_near_bare_evolution(self, sweep_model):
        model, _ = sweep_model
        L0, _ = _qubit_generators()
        assert np.max(np.abs(model.A - expm(2.0 * L0))) < 0.05

    def test_weak_in_span_drive(self, sweep_model):
        model, lib = sweep_model
        ref, pred, _ = aht_rollout(model, 2, aht_signal("resonance", 0.25, evaluation_controls()["resonance"]))
        assert relative_l2_error(pred, ref.states) < 0.3

    def test_error_grows_with_amplitude(self, sweep_model):
        model, _ = sweep_model
        coeffs = evaluation_controls()["resonance"]
        errs = {}
        for amp in (0.5, 2.0):
            ref, pred, _ = aht_rollout(model, 2, aht_signal("resonance", amp, coeffs))
            errs[amp] = relative_l2_error(pred, ref.states)
        assert errs[2.0] > errs[0.5]

    def test_sawtooth_worse_than_in_span(self, sweep_model):
        model, _ = sweep_model
        tests = evaluation_controls()
        errs = {}
        for name in ("multifrequency", "sawtooth"):
            ref, pred, _ = aht_rollout(model, 2, aht_signal(name, 1.0, tests.get(name)))
            errs[name] = relative_l2_error(pred, ref.states)
        assert errs["sawtooth"] > errs["multifrequency"]

    def test_predict_uses_feature_rows(self, sweep_model):
        model, lib = sweep_model
        theta = lib.features[:, :1]
        x0 = np.array([0.0, 0.0, 1.0])
        step = bidmd_predict(model, x0, theta)[:, 1]
        blocks = model.control_blocks()
        manual = model.A @ x0 + sum(theta[i, 0] * blocks[i] @ x0 for i in range(lib.n_features))
        assert np.allclose(step, manual)
