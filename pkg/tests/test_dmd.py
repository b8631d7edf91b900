import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import khatri_rao as scipy_khatri_rao

from qdmd.controls import pure_tone
from qdmd.dmd import (
    SnapshotSet,
    assemble_snapshots,
    bidmd_fit,
    bidmd_predict,
    dmd_fit,
    dmd_predict,
    dmdc_fit,
    dmdc_predict,
    khatri_rao,
    resonance_estimate,
    truncated_pinv,
)
from qdmd.exceptions import (
    DegenerateDataError,
    IdentifiabilityError,
    InsufficientDataError,
    RankError,
    ShapeError,
)
from qdmd.simulator import integrate_bilinear


def random_bilinear(rng, d, nc, n=None):
    """Snapshots of a random stable bilinear recurrence driven by random controls."""
    A = rng.standard_normal((d, d))
    A *= 0.9 / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    B = 0.3 * rng.standard_normal((d, nc * d))
    n = n or 4 * d * (nc + 1)
    U = rng.uniform(-1, 1, (nc, n))
    X = np.empty((d, n + 1))
    X[:, 0] = rng.standard_normal(d)
    for m in range(n):
        X[:, m + 1] = A @ X[:, m] + B @ np.kron(U[:, m], X[:, m])
        # restart from a fresh state now and then to keep the record well scaled
        if m % 7 == 6:
            X[:, m + 1] = rng.standard_normal(d)
    keep = [m for m in range(n) if m % 7 != 6]
    snap = SnapshotSet(X[:, keep], X[:, 1:][:, keep], U[:, keep])
    return A, B, snap


class TestKhatriRao:
    @given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_matches_brute_force(self, p, d, n, seed):
        rng = np.random.default_rng(seed)
        U = rng.standard_normal((p, n))
        X = rng.standard_normal((d, n))
        brute = np.column_stack([np.kron(U[:, m], X[:, m]) for m in range(n)])
        assert np.array_equal(khatri_rao(U, X), brute)
        assert np.allclose(khatri_rao(U, X), scipy_khatri_rao(U, X))

    def test_vector_control(self):
        X = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(khatri_rao(np.array([1.0, 2.0, 3.0]), X), X * [1, 2, 3])

    def test_column_mismatch(self):
        with pytest.raises(ShapeError):
            khatri_rao(np.ones((1, 3)), np.ones((2, 4)))


class TestSnapshots:
    def test_assemble_pairs_within_runs(self, qubit):
        L0, L1 = qubit
        a = integrate_bilinear(L0, [L1], [pure_tone(1.1)], (0, 0, 1), 0, 1, 0.25)
        b = integrate_bilinear(L0, [L1], [pure_tone(1.1)], (1, 0, 0), 0, 1, 0.25)
        snap = assemble_snapshots([a, b])
        assert snap.n_snapshots == 8
        assert np.array_equal(snap.Xp[:, 3], a.states[:, 4])
        assert np.array_equal(snap.X[:, 4], b.states[:, 0])
        assert snap.n_controls == 1

    def test_errors(self):
        with pytest.raises(ShapeError):
            SnapshotSet(np.ones((2, 3)), np.ones((2, 4)))
        with pytest.raises(ShapeError):
            SnapshotSet(np.ones((2, 3)), np.ones((2, 3)), np.ones((1, 2)))
        with pytest.raises(InsufficientDataError):
            SnapshotSet.concatenate([])
        with pytest.raises(ShapeError):
            SnapshotSet.concatenate([SnapshotSet(np.ones((2, 2)), np.ones((2, 2)), dt=1.0),
                                     SnapshotSet(np.ones((2, 2)), np.ones((2, 2)), dt=2.0)])


class TestDMD:
    def test_recovers_linear_map(self, rng):
        A = rng.standard_normal((4, 4)) * 0.4
        X = rng.standard_normal((4, 20))
        model = dmd_fit(SnapshotSet(X, A @ X))
        assert np.allclose(model.A, A, atol=1e-12)
        assert np.allclose(np.sort_complex(model.eigenvalues), np.sort_complex(np.linalg.eigvals(A)))
        for lam, w in zip(model.eigenvalues, model.modes.T):
            assert np.allclose(A @ w, lam * w, atol=1e-10)

    def test_predict_matches_powers(self, rng):
        A = rng.standard_normal((3, 3)) * 0.5
        X = rng.standard_normal((3, 10))
        model = dmd_fit(SnapshotSet(X, A @ X))
        x0 = rng.standard_normal(3)
        pred = dmd_predict(model, x0, 5)
        assert np.allclose(pred[:, 5], np.linalg.matrix_power(A, 5) @ x0, atol=1e-10)

    @given(st.integers(2, 6), st.integers(0, 2**31 - 1))
    def test_pinv_local_optimality(self, d, seed):
        # no small perturbation of Xp pinv(X) lowers the Frobenius residual
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((d, 3 * d))
        Xp = rng.standard_normal((d, 3 * d))
        A = Xp @ truncated_pinv(X)
        base = np.linalg.norm(Xp - A @ X)
        for _ in range(10):
            delta = 1e-4 * rng.standard_normal((d, d))
            assert np.linalg.norm(Xp - (A + delta) @ X) >= base - 1e-12

    def test_truncated_rank(self, rng):
        X = rng.standard_normal((5, 30))
        model = dmd_fit(SnapshotSet(X, X), rank=2)
        assert model.rank == 2
        assert model.eigenvalues.shape == (2,)
        assert np.linalg.matrix_rank(model.A) == 2

    def test_errors(self, rng):
        with pytest.raises(DegenerateDataError):
            dmd_fit(SnapshotSet(np.zeros((2, 3)), np.ones((2, 3))))
        X = rng.standard_normal((3, 5))
        with pytest.raises(RankError):
            dmd_fit(SnapshotSet(X, X), rank=4)
        with pytest.raises(RankError):
            dmd_fit(SnapshotSet(X, X), rank=0)


class TestDMDc:
    def test_recovers_affine_actuation(self, rng):
        A = rng.standard_normal((3, 3)) * 0.5
        B = rng.standard_normal((3, 2))
        X = rng.standard_normal((3, 15))
        U = rng.standard_normal((2, 15))
        model = dmdc_fit(SnapshotSet(X, A @ X + B @ U, U))
        assert np.allclose(model.A, A, atol=1e-10)
        assert np.allclose(model.B, B, atol=1e-10)
        out = dmdc_predict(model, X[:, 0], U[:, :3])
        assert np.allclose(out[:, 1], A @ X[:, 0] + B @ U[:, 0])

    def test_zero_control_is_unidentifiable(self):
        X = np.vstack([np.ones(5), np.arange(5.0)])
        with pytest.raises(IdentifiabilityError):
            dmdc_fit(SnapshotSet(np.vstack([X, X[:1]]), np.vstack([X, X[:1]]), np.zeros((1, 5))))

    def test_needs_controls(self, rng):
        X = rng.standard_normal((2, 4))
        with pytest.raises(ShapeError):
            dmdc_fit(SnapshotSet(X, X))


class TestBiDMD:
    @given(st.integers(2, 6), st.integers(1, 2), st.integers(0, 2**31 - 1))
    def test_exact_recovery(self, d, nc, seed):
        A, B, snap = random_bilinear(np.random.default_rng(seed), d, nc)
        model = bidmd_fit(snap)
        G = np.hstack([A, B])
        est = np.hstack([model.A, model.B])
        assert np.linalg.norm(est - G) <= 1e-8 * np.linalg.norm(G)

    def test_predict_reproduces_record(self, rng):
        A, B, snap = random_bilinear(rng, 3, 1)
        model = bidmd_fit(snap)
        x = snap.X[:, 0]
        out = bidmd_predict(model, x, snap.U[:, :1])
        assert np.allclose(out[:, 1], snap.Xp[:, 0], atol=1e-10)
        assert len(model.control_blocks()) == 1

    def test_drift_modes_are_eigenvectors(self, rng):
        A, B, snap = random_bilinear(rng, 4, 1)
        model = bidmd_fit(snap)
        for lam, w in zip(model.eigenvalues, model.modes.T):
            assert np.allclose(model.A @ w, lam * w, atol=1e-8 * np.linalg.norm(w))

    def test_rank_errors(self, rng):
        _, _, snap = random_bilinear(rng, 3, 1)
        with pytest.raises(RankError):
            bidmd_fit(snap, rank=0)
        with pytest.raises(RankError):
            bidmd_fit(snap, rank=100)
        with pytest.raises(RankError):
            bidmd_fit(snap, rank_hat=4)
        with pytest.raises(ShapeError):
            bidmd_fit(SnapshotSet(snap.X, snap.Xp))

    def test_excess_rank_warns_and_truncates(self, rng):
        X = rng.standard_normal((2, 12))
        snap = SnapshotSet(np.vstack([X, X[:1]]), np.vstack([X, X[:1]]), rng.standard_normal((1, 12)))
        with pytest.warns(RuntimeWarning):
            model = bidmd_fit(snap, rank=6)
        assert model.rank == 4


class TestResonance:
    def test_rotation_frequency(self):
        theta = 2 * np.pi * 0.25 / 16
        lam = np.array([np.exp(1j * theta), np.exp(-1j * theta), 1.0])
        assert resonance_estimate(lam, dt=1 / 16) == pytest.approx([0.25])

    def test_real_spectrum_warns(self):
        with pytest.warns(RuntimeWarning):
            assert resonance_estimate(np.array([0.5, 0.9]), dt=1.0).size == 0

    def test_noiseless_qubit_resonance(self, qubit):
        L0, L1 = qubit
        traj = integrate_bilinear(L0, [L1], [pure_tone(1.1)], (0, 0, 1), 0, 5, 1 / 16)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            model = bidmd_fit(assemble_snapshots(traj), rank_hat=3)
        assert resonance_estimate(model)[0] == pytest.approx(1.0, abs=0.01)


class TestControlPairing:
    def test_midpoint_pairing_tightens_extrapolation(self):
        from qdmd.experiments import example1

        left = example1(sigma=0.0, control_sampling="left")
        mid = example1(sigma=0.0, control_sampling="midpoint")
        assert mid["relative_error"] < left["relative_error"]
        assert mid["relative_error"] <= 0.05
        assert 0.99 <= mid["resonance"] <= 1.01
        with pytest.raises(ValueError):
            example1(control_sampling="right")
