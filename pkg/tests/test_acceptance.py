"""End-to-end acceptance checks, one verdict line per criterion."""

import time

import numpy as np
import pytest

from qdmd.bloch import build_basis, density_to_bloch, bloch_to_density, structure_constants, vectorize_hamiltonian
from qdmd.controls import fourier, pure_tone
from qdmd.dmd import SnapshotSet, bidmd_fit, khatri_rao, truncated_pinv
from qdmd.experiments import (
    aht_rollout,
    aht_signal,
    evaluation_controls,
    example1,
    example2,
    fit_aht,
    match_eigenvalues,
    write_bundle,
)
from qdmd.floquet import quasi_energies
from qdmd.magnus import magnus_floquet_analytic, magnus_floquet_numeric
from qdmd.metrics import relative_l2_error
from qdmd.simulator import integrate_bilinear


@pytest.fixture(scope="module")
def aht_errors():
    model, _ = fit_aht(sigma=0.01, seed=0)
    tests = evaluation_controls()
    errs = {}
    for name in ("resonance", "multifrequency", "sawtooth"):
        ref, pred, _ = aht_rollout(model, 2, aht_signal(name, 1.0, tests.get(name)), n_periods=10)
        errs[name] = relative_l2_error(pred, ref.states)
    return errs


def test_resonance_identification(verdict):
    start = time.perf_counter()
    estimates = [example1(seed=s, sigma=0.01)["resonance"] for s in range(20)]
    elapsed = time.perf_counter() - start
    med = float(np.median(np.abs(np.array(estimates) - 1.0)))
    ok = med <= 0.01 and elapsed < 5.0
    verdict("AC1 resonance identification", ok, f"median |error| {med:.4f} over 20 seeds, {elapsed:.2f} s")
    assert ok


def _random_recurrence(rng):
    d = int(rng.integers(2, 7))
    nc = int(rng.integers(1, 3))
    A = rng.standard_normal((d, d))
    A *= 0.9 / np.max(np.abs(np.linalg.eigvals(A)))
    B = 0.3 * rng.standard_normal((d, nc * d))
    n = 3 * d * (nc + 1)
    # independent initial states and uniform random controls excite every direction
    X = rng.standard_normal((d, n))
    U = rng.uniform(-1, 1, (nc, n))
    Xp = A @ X + B @ khatri_rao(U, X)
    return np.hstack([A, B]), SnapshotSet(X, Xp, U)


def test_noiseless_exact_recovery(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        G, snap = _random_recurrence(rng)
        model = bidmd_fit(snap)
        worst = max(worst, np.linalg.norm(np.hstack([model.A, model.B]) - G) / np.linalg.norm(G))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 10.0
    verdict("AC2 noiseless exact recovery", ok, f"worst relative error {worst:.2e} over 50 systems, {elapsed:.2f} s")
    assert ok


def test_floquet_oracle(verdict):
    r = example2(sigma=0.0)
    model = r["model"]
    ref = match_eigenvalues(model.eigenvalues, r["exact_eigenvalues"])
    eps_err = float(np.max(np.abs(model.quasi_energies - quasi_energies(ref, model.period))))
    held = r["held_out_error"]
    ok = eps_err <= 1e-6 and held <= 0.02
    verdict("AC3 Floquet oracle equivalence", ok, f"quasi-energy error {eps_err:.2e}, held-out error {held:.2e}")
    assert ok


def test_magnus_convergence(verdict, qubit):
    L0, L1 = qubit
    start = time.perf_counter()
    omegas = np.array([8, 16, 32, 64]) * np.pi
    errs = []
    for w in omegas:
        u = fourier([1.0], [0.5], w)
        exact = magnus_floquet_numeric(L0, [L1], [u], 2 * np.pi / w).exact_generator
        errs.append(np.linalg.norm(magnus_floquet_analytic(1.0, 0.5, 1, w).generator() - exact))
    slope = float(np.polyfit(np.log(omegas), np.log(errs), 1)[0])
    elapsed = time.perf_counter() - start
    ok = -3.5 <= slope <= -2.5 and elapsed < 30.0
    verdict("AC4 Magnus convergence", ok, f"log-log slope {slope:.2f}, {elapsed:.2f} s")
    assert ok


def test_aht_in_span_multifrequency(verdict, aht_errors):
    err = aht_errors["multifrequency"]
    ok = err <= 0.10
    verdict("AC5a AHT multi-frequency control", ok, f"relative l2 error {err:.3f} at unit amplitude")
    assert ok


def test_aht_resonance_drive(verdict, aht_errors):
    err = aht_errors["resonance"]
    ok = err <= 0.10
    verdict("AC5b AHT resonance drive", ok, f"relative l2 error {err:.3f} at unit amplitude")
    assert ok


def test_aht_sawtooth_ordering(verdict, aht_errors):
    saw, mf = aht_errors["sawtooth"], aht_errors["multifrequency"]
    ok = saw > mf
    verdict("AC5c AHT sawtooth ordering", ok, f"sawtooth {saw:.3f} vs in-span {mf:.3f}")
    assert ok


def _property_failures(rng):
    failures = []
    for _ in range(25):
        N = int(rng.integers(2, 5))
        b = build_basis(N)
        A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        rho = A @ A.conj().T
        rho /= np.trace(rho)
        if np.max(np.abs(bloch_to_density(density_to_bloch(rho, b), b) - rho)) > 1e-12:
            failures.append("round trip")
        H = (A + A.conj().T) / 2
        H -= np.trace(H) / N * np.eye(N)
        L = vectorize_hamiltonian(H, b).L
        if np.max(np.abs(L + L.T)) > 1e-10 * max(1.0, np.max(np.abs(L))):
            failures.append("antisymmetry")
        sc = structure_constants(b)
        if not np.allclose(sc.f, -sc.f.transpose(1, 0, 2), atol=1e-13):
            failures.append("structure constants")

        X = rng.standard_normal((N, 3 * N))
        U = rng.standard_normal((2, 3 * N))
        brute = np.column_stack([np.kron(U[:, m], X[:, m]) for m in range(X.shape[1])])
        if not np.array_equal(khatri_rao(U, X), brute):
            failures.append("khatri-rao")
        Xp = rng.standard_normal(X.shape)
        G = Xp @ truncated_pinv(X)
        base = np.linalg.norm(Xp - G @ X)
        if any(np.linalg.norm(Xp - (G + 1e-4 * rng.standard_normal(G.shape)) @ X) < base - 1e-12 for _ in range(5)):
            failures.append("pinv optimality")

        lam = rng.uniform(0.05, 3) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        T = rng.uniform(0.1, 5)
        if abs(np.exp(quasi_energies([lam], T)[0] * T) - lam) > 1e-12 * max(1.0, abs(lam)):
            failures.append("branch identity")

    pauli = structure_constants(build_basis(2, "standard_pauli"))
    if abs(pauli.f[0, 1, 2] - 2.0) > 1e-14:
        failures.append("f123")
    b2 = build_basis(2, "standard_pauli")
    L0 = vectorize_hamiltonian(np.diag([np.pi, -np.pi]), b2).L
    L1 = vectorize_hamiltonian(np.array([[0, 1], [1, 0]]), b2).L
    for _ in range(5):
        x0 = rng.standard_normal(3)
        x0 /= np.linalg.norm(x0)
        freq = rng.uniform(0.5, 3)
        traj = integrate_bilinear(L0, [L1], [pure_tone(freq, rng.uniform(0.1, 2))], x0, 0, 10 / freq, 1 / (16 * freq))
        if np.max(np.abs(np.linalg.norm(traj.states, axis=0) - 1)) > 1e-8:
            failures.append("norm conservation")
    return sorted(set(failures))


def test_property_suites(verdict):
    failures = _property_failures(np.random.default_rng(7))
    ok = not failures
    verdict("AC6 property suites", ok, "all properties hold" if ok else "failed: " + ", ".join(failures))
    assert ok


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_bundle_reproducibility(verdict, tmp_path):
    differing = []
    for n in (1, 2, 3):
        a = _snapshot(write_bundle(n, tmp_path / "a"))
        b = _snapshot(write_bundle(n, tmp_path / "b"))
        if a != b or not a:
            differing.append(n)
    ok = not differing
    verdict("AC7 bundle reproducibility", ok,
            "bundles 1-3 identical across two runs" if ok else f"bundles {differing} differ")
    assert ok
