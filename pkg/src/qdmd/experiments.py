"""Config-driven pipelines and the three reference experiments.

The functions here are what the command line calls; they return plain
Python data and write files only through the ``write_*`` helpers so that
bundles are byte-for-byte reproducible (no timestamps or timings in files).
"""

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .aht import build_library, coefficient_names, fit_fourier_coefficients
from .bloch import PAULI, build_basis, vectorize_hamiltonian
from .config import parse_config
from .controls import fourier, pure_tone, sawtooth
from .dmd import (
    BiDMDModel,
    DMDcModel,
    DMDModel,
    SnapshotSet,
    assemble_snapshots,
    bidmd_fit,
    bidmd_predict,
    dmd_fit,
    dmd_predict,
    dmdc_fit,
    dmdc_predict,
    resonance_estimate,
)
from .exceptions import InsufficientDataError, SamplingGridError, ShapeError
from .floquet import (
    FloquetModel,
    fix_phase,
    floquet_dmd_fit,
    floquet_predict,
    reshape_stroboscopic,
    rwa_reference,
    unstack,
)
from .io import model_to_dict, save_coefficient_csv, save_feature_manifest, save_quasi_energy_csv, write_json
from .metrics import relative_l2_error, stepwise_percent_error
from .simulator import (
    BlochTrajectory,
    NoiseModel,
    add_noise,
    integrate_bilinear,
    propagator,
    save_trajectory_csv,
)

__all__ = [
    "thread_count",
    "simulate_config",
    "fit_config",
    "predict_config",
    "stroboscopic_coefficients",
    "example1",
    "example2",
    "example3",
    "write_bundle",
    "EXAMPLE_CONFIGS",
]

DRIFT = [0.0, 0.0, np.pi]
SIGMA_X = [1.0, 0.0, 0.0]


def thread_count():
    """Worker threads for parallel sweeps: ``QDMD_THREADS`` if set, else the CPU count."""
    env = os.environ.get("QDMD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def _qubit_generators():
    basis = build_basis(2, "standard_pauli")
    return vectorize_hamiltonian(np.pi * PAULI[2], basis).L, vectorize_hamiltonian(PAULI[0], basis).L


# ---------------------------------------------------------------- config driven


def _grid(cfg):
    s = cfg.sampling
    if "period" in s and "samples_per_period" in s:
        dt = s.get("dt", s["period"] / s["samples_per_period"])
        n_periods = s.get("n_periods", 1)
        return dt, s["period"] * n_periods
    return s["dt"], s["t_end"]


def simulate_config(cfg, noise=True):
    """Simulate the configured system; measurement noise is added unless ``noise=False``."""
    L0, ctrl = cfg.generators()
    dt, t_end = _grid(cfg)
    traj = integrate_bilinear(L0, ctrl, cfg.control_signals(), cfg.initial_state(), 0.0, t_end, dt,
                              substeps=cfg.sampling.get("substeps", 64))
    meta = dict(traj.meta)
    if "period" in cfg.sampling:
        meta["T"] = cfg.sampling["period"]
    traj = BlochTrajectory(traj.times, traj.states, traj.controls, traj.dt, meta)
    if noise:
        traj = add_noise(traj, NoiseModel(cfg.noise["sigma"], cfg.noise["seed"]))
    return traj


def stroboscopic_coefficients(traj, base_frequency, n_harmonics, signals=None):
    """Boundary states ``(d, n+1)`` and per-period coefficients ``(2K, n)`` of a record.

    Coefficients come from ``signals`` when given, otherwise from the
    recorded control samples (which then need more than ``2K`` samples per
    period).
    """
    T = 2 * np.pi / base_frequency
    ratio = T / traj.dt
    s = int(round(ratio))
    if s < 1 or abs(ratio - s) > 1e-9 * ratio:
        raise SamplingGridError(f"control period {T:.12g} is not a multiple of dt = {traj.dt:.12g}")
    n = (traj.n_samples - 1) // s
    if n < 1:
        raise InsufficientDataError("record shorter than one control period")
    X = traj.states[:, : n * s + 1 : s]
    if signals is not None:
        u = signals[0]
        U = np.column_stack([fit_fourier_coefficients(u, base_frequency, n_harmonics, k + 1, t0=traj.times[0])
                             for k in range(n)])
    else:
        if traj.n_controls != 1:
            raise ShapeError("Fourier coefficients need exactly one control channel")
        if s <= 2 * n_harmonics:
            raise SamplingGridError(f"{s} samples per period cannot resolve {n_harmonics} harmonics")
        U = np.column_stack([
            fit_fourier_coefficients(traj.controls[0, k * s:(k + 1) * s], base_frequency, n_harmonics)
            for k in range(n)
        ])
    return X, U


def fit_config(cfg, trajectories):
    """Fit the configured algorithm to trajectories; returns ``(model, report, extras)``."""
    trajectories = list(trajectories)
    if not trajectories:
        raise InsufficientDataError("no trajectories supplied")
    dims = {t.n_states for t in trajectories}
    if len(dims) > 1:
        raise ShapeError(f"trajectories have different state dimensions: {sorted(dims)}")
    alg = cfg.algorithm
    name = alg["name"]
    rank, rank_hat = alg.get("rank"), alg.get("rank_hat")
    extras = {}
    t0 = time.perf_counter()
    if name == "dmd":
        snap = assemble_snapshots(trajectories)
        model = dmd_fit(SnapshotSet(snap.X, snap.Xp, None, snap.dt), rank)
    elif name in ("dmdc", "bidmd"):
        if any(t.n_controls == 0 for t in trajectories):
            raise InsufficientDataError(f"{name} needs recorded controls")
        snap = assemble_snapshots(trajectories)
        model = dmdc_fit(snap, rank) if name == "dmdc" else bidmd_fit(snap, rank, rank_hat)
    elif name == "floquet":
        period = alg.get("period", cfg.sampling.get("period"))
        s = alg.get("samples_per_period", cfg.sampling.get("samples_per_period"))
        if period is None or s is None:
            raise SamplingGridError("floquet fits need a period and samples_per_period")
        snap = SnapshotSet.concatenate([reshape_stroboscopic(t, period, s) for t in trajectories])
        model = floquet_dmd_fit(snap, period, rank, n_states=trajectories[0].n_states)
    else:
        W, K = alg.get("base_frequency"), alg.get("n_harmonics")
        if W is None or K is None:
            raise SamplingGridError("aht fits need base_frequency and n_harmonics")
        degree = alg.get("degree", 2)
        pairs = [stroboscopic_coefficients(t, W, K) for t in trajectories]
        X = np.hstack([p[0][:, :-1] for p in pairs])
        Xp = np.hstack([p[0][:, 1:] for p in pairs])
        lib = build_library(np.hstack([p[1] for p in pairs]), degree)
        model = bidmd_fit(SnapshotSet(X, Xp, lib.features, 2 * np.pi / W), rank, rank_hat,
                          feature_names=lib.names)
        extras["library"] = {"base_frequency": W, "n_harmonics": K, "degree": degree}
        extras["coefficients"] = np.hstack([p[1] for p in pairs])
    elapsed = time.perf_counter() - t0
    report = run_report(cfg, model)
    report["timings"] = {"fit_seconds": elapsed}
    return model, report, extras


def _eigen_table(lam):
    return [{"re": float(z.real), "im": float(z.imag), "abs": float(abs(z)), "arg": float(np.angle(z))}
            for z in np.asarray(lam)]


def run_report(cfg, model, errors=None, **fields):
    report = {"tool": "qdmd", "version": __version__, "config": cfg.to_dict()}
    if model is not None:
        lam = getattr(model, "eigenvalues", None)
        if lam is None and isinstance(model, DMDcModel):
            lam = np.linalg.eigvals(model.A)
        report["eigenvalues"] = _eigen_table(lam)
        if isinstance(model, (BiDMDModel, DMDModel)) and np.any(np.asarray(lam).imag > 0):
            report["resonance"] = [float(f) for f in resonance_estimate(model)]
        if isinstance(model, FloquetModel):
            report["quasi_energies"] = [{"re": float(e.real), "im": float(e.imag)} for e in model.quasi_energies]
    if errors is not None:
        report["errors"] = errors
    report.update(fields)
    return report


def _control_rows(signals, times):
    return np.array([np.broadcast_to(u(times), times.shape) for u in signals], dtype=float)


def predict_config(model, x0, signals, n_steps, library=None, truth=None):
    """Roll a fitted model forward from ``x0`` under ``signals``.

    Returns ``(times, states)`` with states as columns, plus the relative
    error and per-step percentages against ``truth`` (a ``(d, n+1)`` array)
    when supplied.
    """
    n_steps = int(n_steps)
    if isinstance(model, FloquetModel):
        Z = floquet_predict(model, x0, n_steps)
        states = unstack(Z, model.n_states)
        times = model.period / model.samples_per_period * np.arange(states.shape[1])
    elif isinstance(model, BiDMDModel) and library is not None:
        W, K = library["base_frequency"], library["n_harmonics"]
        U = np.column_stack([fit_fourier_coefficients(signals[0], W, K, k + 1) for k in range(n_steps)]) \
            if n_steps else np.zeros((2 * K, 0))
        lib = build_library(U if n_steps else np.zeros((2 * K, 1)), library["degree"])
        features = lib.features[:, :n_steps]
        states = bidmd_predict(model, x0, features)
        times = model.dt * np.arange(n_steps + 1)
    elif isinstance(model, BiDMDModel):
        times = model.dt * np.arange(n_steps + 1)
        states = bidmd_predict(model, x0, _control_rows(signals, times[:-1]).reshape(len(signals), n_steps))
    elif isinstance(model, DMDcModel):
        times = model.dt * np.arange(n_steps + 1)
        states = dmdc_predict(model, x0, _control_rows(signals, times[:-1]).reshape(len(signals), n_steps))
    else:
        times = model.dt * np.arange(n_steps + 1)
        states = dmd_predict(model, x0, n_steps)
    err = None
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != states.shape:
            raise ShapeError(f"truth has shape {truth.shape}, prediction {states.shape}")
        err = {"relative_l2": relative_l2_error(states, truth),
               "stepwise_percent": stepwise_percent_error(states, truth).tolist()}
    return times, states, err


# ---------------------------------------------------------------- example 1


EXAMPLE_CONFIGS = {
    1: {
        "version": 1,
        "name": "example1",
        "system": {"dimension": 2, "basis": "standard_pauli", "drift": DRIFT, "controls": [SIGMA_X]},
        "initial_state": [0.0, 0.0, 1.0],
        "controls": [{"kind": "pure_tone", "frequency": 1.1}],
        "sampling": {"dt": 0.0625, "t_end": 5.0},
        "noise": {"sigma": 0.01, "seed": 0},
        "algorithm": {"name": "bidmd", "rank": None, "rank_hat": 3},
    },
    2: {
        "version": 1,
        "name": "example2",
        "system": {"dimension": 2, "basis": "standard_pauli", "drift": DRIFT, "controls": [SIGMA_X]},
        "initial_state": [0.0, 0.0, 1.0],
        "controls": [{"kind": "pure_tone", "frequency": 1.1}],
        "sampling": {"period": 1 / 1.1, "samples_per_period": 4, "n_periods": 4},
        "noise": {"sigma": 0.0, "seed": 0},
        "algorithm": {"name": "floquet", "rank": None},
    },
    3: {
        "version": 1,
        "name": "example3",
        "system": {"dimension": 2, "basis": "standard_pauli", "drift": DRIFT, "controls": [SIGMA_X]},
        "initial_state": [0.0, 0.0, 1.0],
        "controls": [{"kind": "fourier_series", "a": [0, 1, 0, 0, 0], "b": [0, 0, 0, 0, 0],
                      "base_frequency": np.pi}],
        "sampling": {"period": 2.0, "samples_per_period": 32, "n_periods": 5},
        "noise": {"sigma": 0.01, "seed": 0},
        "algorithm": {"name": "aht", "rank": None, "rank_hat": None, "degree": 2,
                      "n_harmonics": 5, "base_frequency": np.pi},
    },
}


def _control_samples(u, times, dt, sampling):
    if sampling == "left":
        return np.asarray(u(times), dtype=float) * np.ones_like(times)
    if sampling == "midpoint":
        return np.asarray(u(times + 0.5 * dt), dtype=float) * np.ones_like(times)
    raise ValueError(f"control sampling must be 'left' or 'midpoint', got {sampling!r}")


def example1(seed=0, sigma=0.01, rank=None, rank_hat=3, n_periods=5, horizon_periods=5,
             control_sampling="left"):
    """Off-resonant drive, biDMD fit, resonance estimate and extrapolation at the estimate.

    ``control_sampling`` chooses which control value pairs with each
    snapshot: the value at the start of the step (``left``) or at its
    midpoint, which removes the leading discretization error.
    """
    L0, L1 = _qubit_generators()
    dt, T = 1.0 / 16, 1.0
    drive = pure_tone(1.1)
    truth = integrate_bilinear(L0, [L1], [drive], (0, 0, 1), 0.0, n_periods * T, dt)
    data = add_noise(truth, NoiseModel(sigma, seed))
    u = _control_samples(drive, data.times[:-1], dt, control_sampling)
    snap = SnapshotSet(data.states[:, :-1], data.states[:, 1:], u[None, :], dt)
    model = bidmd_fit(snap, rank, rank_hat)
    freqs = resonance_estimate(model)
    omega = float(freqs[0]) if freqs.size else float("nan")

    new_drive = pure_tone(omega)
    n_steps = int(round(horizon_periods * T / dt))
    ref = integrate_bilinear(L0, [L1], [new_drive], (0, 0, 1), 0.0, n_steps * dt, dt)
    u_new = _control_samples(new_drive, ref.times[:-1], dt, control_sampling)
    pred = bidmd_predict(model, ref.states[:, 0], u_new[None, :])
    return {
        "truth": truth,
        "data": data,
        "model": model,
        "resonance": omega,
        "reference": ref,
        "prediction": pred,
        "relative_error": relative_l2_error(pred, ref.states),
        "stepwise_error": stepwise_percent_error(pred, ref.states),
        "control_sampling": control_sampling,
        "horizon_periods": horizon_periods,
    }


# ---------------------------------------------------------------- example 2


def exact_floquet(period, samples_per_period, drive_frequency=1.1, amplitude=1.0, substeps=4096):
    """Monodromy spectrum and stacked exact Floquet modes of the driven qubit."""
    L0, L1 = _qubit_generators()
    u = pure_tone(drive_frequency, amplitude)
    P = propagator(L0, [L1], [u], 0.0, period, substeps)
    lam, V = np.linalg.eig(P)
    s = samples_per_period
    blocks = [np.eye(3)] + [propagator(L0, [L1], [u], 0.0, r * period / s, substeps) for r in range(1, s)]
    stacked = np.vstack([B @ V for B in blocks])
    stacked = fix_phase(stacked / np.linalg.norm(stacked, axis=0))
    return P, lam, stacked


def match_eigenvalues(estimated, reference):
    """Reorder ``reference`` to pair with ``estimated`` (greedy nearest match)."""
    ref = list(np.asarray(reference))
    out = []
    for z in np.asarray(estimated):
        j = int(np.argmin([abs(z - r) for r in ref]))
        out.append(ref.pop(j))
    return np.array(out)


def example2(sigma=0.0, seed=0, rank=None, samples_per_period=4, n_periods=4, extra_periods=4):
    """Floquet DMD on ``n_periods`` of stroboscopic data plus held-out extrapolation."""
    L0, L1 = _qubit_generators()
    T = 1 / 1.1
    s = samples_per_period
    dt = T / s
    total = n_periods + extra_periods
    full = integrate_bilinear(L0, [L1], [pure_tone(1.1)], (0, 0, 1), 0.0, total * T, dt, substeps=256)
    M = n_periods * s
    train = BlochTrajectory(full.times[:M], full.states[:, :M], full.controls[:, :M], dt, {"T": T})
    train = add_noise(train, NoiseModel(sigma, seed))
    snap = reshape_stroboscopic(train, T, s)
    model = floquet_dmd_fit(snap, T, rank, n_states=3)
    P, lam_exact, modes_exact = exact_floquet(T, s)
    rwa = rwa_reference(1.1, 1.0)

    # one held-out period: start from the last training period
    z_last = train.states[:, (n_periods - 1) * s:n_periods * s].T.reshape(-1)
    held = floquet_predict(model, z_last, 1)[:, 1]
    held_truth = full.states[:, n_periods * s:(n_periods + 1) * s].T.reshape(-1)
    # longer extrapolation started from the first held-out (fifth) period
    z5 = full.states[:, n_periods * s:(n_periods + 1) * s].T.reshape(-1)
    Z = floquet_predict(model, z5, extra_periods - 1)
    ext = unstack(Z, 3)
    ext_truth = full.states[:, n_periods * s:(n_periods + extra_periods) * s]
    return {
        "truth": full,
        "data": train,
        "model": model,
        "monodromy": P,
        "exact_eigenvalues": lam_exact,
        "exact_modes": modes_exact,
        "rwa": rwa,
        "held_out_error": relative_l2_error(held, held_truth),
        "extrapolation": ext,
        "extrapolation_truth": ext_truth,
        "extrapolation_error": relative_l2_error(ext, ext_truth),
    }


# ---------------------------------------------------------------- example 3


AHT_PERIOD = 2.0
AHT_FREQUENCY = np.pi
AHT_HARMONICS = 5


def training_controls(n_harmonics=AHT_HARMONICS, amplitudes=None):
    """One coefficient vector per (coefficient, amplitude) pair; the zero control appears once."""
    if amplitudes is None:
        amplitudes = np.round(np.arange(1, 11) / 10, 12)
    out = [np.zeros(2 * n_harmonics)]
    for i in range(2 * n_harmonics):
        for a in amplitudes:
            if a == 0:
                continue
            c = np.zeros(2 * n_harmonics)
            c[i] = a
            out.append(c)
    return out


def _random_unit(seed):
    v = np.random.default_rng(seed).standard_normal(3)
    return v / np.linalg.norm(v)


def _run_training(j, coeffs, sigma, seed, n_periods, random_initial, L0, L1):
    K = coeffs.size // 2
    u = fourier(coeffs[:K], coeffs[K:], AHT_FREQUENCY)
    x0 = _random_unit(seed + 100_000 + j) if random_initial else np.array([0.0, 0.0, 1.0])
    traj = integrate_bilinear(L0, [L1], [u], x0, 0.0, n_periods * AHT_PERIOD, AHT_PERIOD)
    return add_noise(traj, NoiseModel(sigma, seed + j)).states


def aht_training_set(sigma=0.01, seed=0, n_periods=5, random_initial=True, threads=None):
    """Simulate the amplitude sweep in parallel; results are ordered by experiment."""
    L0, L1 = _qubit_generators()
    controls = training_controls()
    workers = thread_count() if threads is None else max(1, int(threads))
    args = [(j, c, sigma, seed, n_periods, random_initial, L0, L1) for j, c in enumerate(controls)]
    if workers == 1:
        states = [_run_training(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            states = list(pool.map(lambda a: _run_training(*a), args))
    X = np.hstack([s[:, :-1] for s in states])
    Xp = np.hstack([s[:, 1:] for s in states])
    U = np.hstack([np.repeat(c[:, None], s.shape[1] - 1, axis=1) for c, s in zip(controls, states)])
    return X, Xp, U


def fit_aht(sigma=0.01, seed=0, degree=2, rank=None, rank_hat=None, random_initial=True, threads=None):
    X, Xp, U = aht_training_set(sigma, seed, random_initial=random_initial, threads=threads)
    lib = build_library(U, degree)
    return bidmd_fit(SnapshotSet(X, Xp, lib.features, AHT_PERIOD), rank, rank_hat,
                     feature_names=lib.names), lib


def evaluation_controls(seed=1, n_harmonics=AHT_HARMONICS):
    """Unit-peak coefficient vectors for the resonance drive and a random in-span drive."""
    K = n_harmonics
    res = np.zeros(2 * K)
    res[1] = 1.0  # cos(2 pi t): the resonance drive
    mf = np.random.default_rng(seed).uniform(-1, 1, 2 * K)
    t = np.linspace(0, AHT_PERIOD, 4001)
    mf /= np.max(np.abs(fourier(mf[:K], mf[K:], AHT_FREQUENCY)(t)))
    return {"resonance": res, "multifrequency": mf}


def aht_signal(name, amplitude, coeffs=None):
    if name == "sawtooth":
        return sawtooth(amplitude, AHT_PERIOD)
    c = amplitude * coeffs
    K = c.size // 2
    return fourier(c[:K], c[K:], AHT_FREQUENCY)


def aht_rollout(model, library_degree, signal, n_periods=10, x0=(0.0, 0.0, 1.0),
                n_harmonics=AHT_HARMONICS):
    """Model and reference stroboscopic states under ``signal``."""
    L0, L1 = _qubit_generators()
    ref = integrate_bilinear(L0, [L1], [signal], x0, 0.0, n_periods * AHT_PERIOD, AHT_PERIOD, substeps=256)
    U = np.column_stack([fit_fourier_coefficients(signal, AHT_FREQUENCY, n_harmonics, k + 1)
                         for k in range(n_periods)])
    theta = build_library(U, library_degree).features
    pred = bidmd_predict(model, ref.states[:, 0], theta)
    return ref, pred, U


def example3(sigma=0.01, seed=0, degree=2, rank=None, rank_hat=None, amplitudes=(0.25, 0.5, 1.0, 1.5, 2.0),
             n_periods=10, random_initial=True, threads=None):
    """AHT-biDMD trained on the coefficient sweep and tested on three controls."""
    model, lib = fit_aht(sigma, seed, degree, rank, rank_hat, random_initial, threads)
    tests = evaluation_controls()
    sweep = []
    runs = {}
    for name in ("resonance", "multifrequency", "sawtooth"):
        for amp in amplitudes:
            sig = aht_signal(name, amp, tests.get(name))
            ref, pred, U = aht_rollout(model, degree, sig, n_periods)
            err = relative_l2_error(pred, ref.states)
            sweep.append({"control": name, "amplitude": float(amp), "relative_l2": err})
            runs[(name, float(amp))] = (ref, pred, U, sig)
    return {"model": model, "library": lib, "tests": tests, "sweep": sweep, "runs": runs}


# ---------------------------------------------------------------- bundles


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (str, int)) else repr(float(v)) for v in row])


class _Bundle:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest = {}

    def csv(self, name, header, rows, description, columns=None):
        _write_csv(self.root / name, header, rows)
        self.manifest[name] = {"description": description,
                               "columns": columns or {h: "" for h in header}}

    def json(self, name, obj, description):
        write_json(obj, self.root / name)
        self.manifest[name] = {"description": description}

    def finish(self):
        write_json(self.manifest, self.root / "manifest.json")


def _state_cols(prefix, d=3):
    return [f"{prefix}x{j + 1}" for j in range(d)]


def _bundle1(b, cfg):
    r = example1()
    data, truth, ref, pred = r["data"], r["truth"], r["reference"], r["prediction"]
    b.json("config.json", cfg.to_dict(), "experiment configuration")
    save_trajectory_csv(data, b.root / "training.csv")
    b.manifest["training.csv"] = {"description": "noisy training record (trajectory CSV format)"}
    b.csv("measurements.csv", ["t"] + _state_cols("true_") + _state_cols("meas_") + ["u"],
          np.column_stack([truth.times, truth.states.T, data.states.T, data.controls[0]]),
          "Pauli-spin measurements of the driven qubit: noiseless and noisy")
    write_json(model_to_dict(r["model"]), b.root / "model.json")
    b.manifest["model.json"] = {"description": "fitted biDMD model"}
    lam = r["model"].eigenvalues
    b.csv("eigenvalues.csv", ["index", "re", "im", "abs", "arg"],
          [[j, z.real, z.imag, abs(z), np.angle(z)] for j, z in enumerate(lam)],
          "discrete-time eigenvalues of the fitted drift operator")
    err = r["stepwise_error"]
    b.csv("extrapolation.csv", ["t", "u"] + _state_cols("true_") + _state_cols("pred_") + ["error_percent"],
          np.column_stack([ref.times, ref.controls[0], ref.states.T, pred.T, err]),
          "prediction from the initial state under a drive at the estimated resonance")
    report = run_report(cfg, r["model"], errors={"relative_l2": r["relative_error"],
                                                 "stepwise_percent": err.tolist()},
                        resonance_estimate=r["resonance"], horizon_periods=r["horizon_periods"],
                        control_sampling=r["control_sampling"])
    b.json("report.json", report, "run report")


def _bundle2(b, cfg):
    r = example2()
    model = r["model"]
    b.json("config.json", cfg.to_dict(), "experiment configuration")
    save_trajectory_csv(r["data"], b.root / "training.csv")
    b.manifest["training.csv"] = {"description": "stroboscopic training record (trajectory CSV format)"}
    write_json(model_to_dict(model), b.root / "model.json")
    b.manifest["model.json"] = {"description": "fitted Floquet DMD model with stacked modes"}
    save_quasi_energy_csv(model, b.root / "quasi_energies.csv")
    b.manifest["quasi_energies.csv"] = {"description": "Floquet DMD quasi-energies"}
    exact = match_eigenvalues(model.eigenvalues, r["exact_eigenvalues"])
    T = model.period
    rows = []
    for src, lam in (("floquet_dmd", model.eigenvalues), ("monodromy", exact)):
        for j, z in enumerate(lam):
            e = np.log(z) / T
            rows.append([src, j, e.real, e.imag])
    for j, z in enumerate(r["rwa"].eigenvalues):
        rows.append(["rwa", j, z.real, z.imag])
    b.csv("quasi_energy_comparison.csv", ["source", "index", "re_eps", "im_eps"], rows,
          "quasi-energies from Floquet DMD, the exact monodromy matrix and the rotating-wave model")
    s = model.samples_per_period
    mode_rows = []
    for src, W in (("floquet_dmd", model.stacked_modes), ("exact", r["exact_modes"])):
        for j in range(W.shape[1]):
            for k in range(s):
                blk = W[k * 3:(k + 1) * 3, j]
                mode_rows.append([src, j, model.offsets[k], *blk.real, *blk.imag])
    b.csv("floquet_modes.csv", ["source", "mode", "tau", "re_x1", "re_x2", "re_x3", "im_x1", "im_x2", "im_x3"],
          mode_rows, "stacked Floquet modes at the sampling offsets tau = t mod T")
    ext, ext_truth = r["extrapolation"], r["extrapolation_truth"]
    t = r["truth"].times[r["data"].n_samples:r["data"].n_samples + ext.shape[1]]
    b.csv("extrapolation.csv", ["t"] + _state_cols("true_") + _state_cols("pred_"),
          np.column_stack([t, ext_truth.T, ext.T]),
          "extrapolation started from the first held-out period")
    report = run_report(cfg, model, errors={"held_out_relative_l2": r["held_out_error"],
                                            "extrapolation_relative_l2": r["extrapolation_error"]},
                        monodromy_eigenvalues=_eigen_table(exact))
    b.json("report.json", report, "run report")


def _bundle3(b, cfg):
    r = example3()
    model, lib = r["model"], r["library"]
    b.json("config.json", cfg.to_dict(), "experiment configuration (training sweep is built in)")
    doc = model_to_dict(model)
    doc["library"] = {"base_frequency": AHT_FREQUENCY, "n_harmonics": AHT_HARMONICS, "degree": lib.degree}
    write_json(doc, b.root / "model.json")
    b.manifest["model.json"] = {"description": "fitted AHT-biDMD model"}
    save_feature_manifest(lib.names, b.root / "features.json")
    b.manifest["features.json"] = {"description": "library feature names, one per B block"}
    b.csv("amplitude_sweep.csv", ["control", "amplitude", "relative_l2"],
          [[s["control"], s["amplitude"], s["relative_l2"]] for s in r["sweep"]],
          "10-period prediction error per control and amplitude")
    t_fine = np.linspace(0, AHT_PERIOD, 401)
    names = coefficient_names(AHT_HARMONICS)
    for name in ("resonance", "multifrequency", "sawtooth"):
        ref, pred, U, sig = r["runs"][(name, 1.0)]
        b.csv(f"{name}_trajectory.csv", ["t"] + _state_cols("true_") + _state_cols("pred_"),
              np.column_stack([ref.times, ref.states.T, pred.T]),
              f"stroboscopic truth and prediction, {name} control at unit amplitude")
        c = U[:, 0]
        approx = fourier(c[:AHT_HARMONICS], c[AHT_HARMONICS:], AHT_FREQUENCY)(t_fine)
        b.csv(f"{name}_control.csv", ["t", "u", "fourier_u"],
              np.column_stack([t_fine, sig(t_fine), approx]),
              f"{name} control over one period and its truncated Fourier series")
        save_coefficient_csv(U, b.root / f"{name}_coefficients.csv")
        b.manifest[f"{name}_coefficients.csv"] = {"description": "per-period control coefficients",
                                                   "columns": ["period_index"] + names}
        rows = []
        for (nm, amp), (ref, pred, _, _) in sorted(r["runs"].items()):
            if nm == name:
                for n, e in enumerate(stepwise_percent_error(pred, ref.states)):
                    rows.append([amp, n, e])
        b.csv(f"{name}_errors.csv", ["amplitude", "period", "error_percent"], rows,
              f"per-period prediction error of the {name} control for several amplitudes")
    report = run_report(cfg, model, errors={"sweep": r["sweep"]}, feature_count=lib.n_features)
    b.json("report.json", report, "run report")


def write_bundle(n, out_dir):
    """Write the full, deterministic artifact bundle of example ``n`` under ``out_dir``."""
    if n not in EXAMPLE_CONFIGS:
        raise ValueError(f"example must be 1, 2 or 3, got {n}")
    cfg = parse_config(EXAMPLE_CONFIGS[n])
    b = _Bundle(Path(out_dir) / f"example{n}")
    {1: _bundle1, 2: _bundle2, 3: _bundle3}[n](b, cfg)
    b.finish()
    return b.root
