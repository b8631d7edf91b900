"""Floquet DMD for stroboscopically sampled periodic systems.

Samples taken ``s`` times per drive period ``T`` are stacked period by
period: column ``n`` of ``X`` holds the ``s`` samples of period ``n`` on
top of each other and the same column of ``Xp`` holds period ``n + 1``.
DMD on these stacked snapshots approximates the one-period map, its
eigenvalues give quasi-energies ``log(lambda) / T`` and its modes are
Floquet modes discretized at the ``s`` intra-period offsets.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import as_vector, frozen
from .bloch import PAULI, build_basis, vectorize_hamiltonian
from .dmd import SnapshotSet, dmd_fit
from .exceptions import InsufficientDataError, SamplingGridError
from .simulator import sample_stroboscopic

__all__ = [
    "FloquetModel",
    "RWAReference",
    "reshape_stroboscopic",
    "unstack",
    "floquet_dmd_fit",
    "floquet_predict",
    "quasi_energies",
    "rwa_reference",
    "rotating_frame_hamiltonian",
    "fix_phase",
]


@dataclass(frozen=True)
class FloquetModel:
    stacked_modes: np.ndarray
    eigenvalues: np.ndarray
    quasi_energies: np.ndarray
    period: float
    offsets: np.ndarray
    n_states: int
    rank: int
    propagator: np.ndarray

    @property
    def samples_per_period(self):
        return self.offsets.shape[0]

    def mode_at_offset(self, j, r):
        """Block of Floquet mode ``j`` at offset index ``r``."""
        d = self.n_states
        return self.stacked_modes[r * d:(r + 1) * d, j]


@dataclass(frozen=True)
class RWAReference:
    """Constant rotating-frame model ``pi (1 - nu) s3 + (u0 / 2) s1`` of a driven qubit."""

    drive_frequency: float
    amplitude: float
    hamiltonian: np.ndarray
    generator: np.ndarray
    eigenvalues: np.ndarray
    eigenmodes: np.ndarray

    @property
    def detuning(self):
        return np.pi * (1.0 - self.drive_frequency)


def reshape_stroboscopic(traj, period, samples_per_period):
    """Stack ``s`` samples per period into Floquet snapshot matrices.

    If the trajectory is sampled more finely than ``period / s`` it is first
    subsampled. Only whole periods are used; a trailing partial period is
    dropped so that every ``Xp`` column is exactly one period ahead of the
    matching ``X`` column.
    """
    s = int(samples_per_period)
    step = period / s
    if abs(traj.dt - step) > 1e-9 * step:
        traj = sample_stroboscopic(traj, period, s)
    # a uniform grid with spacing T/s revisits the same offsets every s samples
    if abs(traj.dt * s - period) > 1e-9 * period:
        raise SamplingGridError(f"sampling interval {traj.dt:.12g} is not period/{s}")
    M = traj.n_samples
    if M < 2 * s:
        raise InsufficientDataError(f"need at least two full periods ({2 * s} samples), got {M}")
    n_periods = M // s
    d = traj.n_states
    blocks = traj.states[:, : n_periods * s].reshape(d, n_periods, s)
    stacked = blocks.transpose(2, 0, 1).reshape(s * d, n_periods)
    return SnapshotSet(stacked[:, :-1], stacked[:, 1:], None, period)


def unstack(stacked, n_states):
    """Inverse of the stacking: ``(s*d, n)`` columns back to ``(d, s*n)`` in time order."""
    sd, n = stacked.shape
    s = sd // n_states
    return stacked.reshape(s, n_states, n).transpose(1, 2, 0).reshape(n_states, n * s)


def quasi_energies(eigenvalues, period):
    """Principal-branch ``log(lambda) / T``; imaginary parts lie in ``(-pi/T, pi/T]``."""
    return np.log(np.asarray(eigenvalues, dtype=complex)) / period


def fix_phase(modes):
    """Rotate each column so its largest-magnitude entry is real and positive."""
    modes = np.array(modes, dtype=complex)
    idx = np.argmax(np.abs(modes), axis=0)
    pivots = modes[idx, np.arange(modes.shape[1])]
    phase = np.where(np.abs(pivots) > 0, pivots / np.where(pivots == 0, 1, np.abs(pivots)), 1.0)
    return modes / phase


def floquet_dmd_fit(snap, period, rank=None, n_states=None):
    """DMD on stacked stroboscopic snapshots.

    Zero eigenvalues (no logarithm) are dropped with a warning.
    """
    model = dmd_fit(snap, rank)
    lam = model.eigenvalues
    keep = np.abs(lam) > 0
    if not np.all(keep):
        warnings.warn("dropping exactly-zero eigenvalues (quasi-energy undefined)", RuntimeWarning, stacklevel=2)
    lam = lam[keep]
    modes = fix_phase(model.modes[:, keep])
    sd = snap.n_states
    if n_states is None:
        n_states = sd
    s = sd // n_states
    return FloquetModel(
        stacked_modes=frozen(modes),
        eigenvalues=frozen(lam),
        quasi_energies=frozen(quasi_energies(lam, period)),
        period=float(period),
        offsets=frozen(np.arange(s) * period / s),
        n_states=n_states,
        rank=model.rank,
        propagator=model.A,
    )


def floquet_predict(model, stacked_x0, n_periods):
    """Stacked states for periods ``0..n`` (columns) from ``sum_j xi_j lambda_j^n c_j``."""
    W = model.stacked_modes
    z0 = as_vector(stacked_x0, "stacked_x0", W.shape[0])
    sv = np.linalg.svd(W, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        warnings.warn("Floquet mode matrix is rank deficient; projection is ill-posed", RuntimeWarning, stacklevel=2)
    c = np.linalg.lstsq(W, z0.astype(complex), rcond=None)[0]
    powers = model.eigenvalues[:, None] ** np.arange(n_periods + 1)[None, :]
    Z = W @ (powers * c[:, None])
    return Z.real


def rwa_reference(drive_frequency, amplitude):
    """Rotating-wave model of ``pi s3 + u0 cos(2 pi nu t) s1`` in the frame rotating at ``nu``.

    The frame is ``V(t) = exp(i pi nu (I - s3) t)``; dropping the identity
    term and the terms oscillating at ``2 nu`` leaves
    ``pi (1 - nu) s3 + (u0 / 2) s1``. At stroboscopic times ``t = n / nu``
    the frame transformation is the identity, so the eigenvalues of the
    Bloch generator are directly comparable with Floquet quasi-energies.
    """
    nu = float(drive_frequency)
    if not nu > 0:
        raise ValueError("drive frequency must be positive")
    H = np.pi * (1.0 - nu) * PAULI[2] + 0.5 * amplitude * PAULI[0]
    basis = build_basis(2, "standard_pauli")
    L = vectorize_hamiltonian(H, basis).L
    lam, V = np.linalg.eig(L)
    order = np.argsort(lam.imag)
    return RWAReference(
        drive_frequency=nu,
        amplitude=float(amplitude),
        hamiltonian=frozen(H),
        generator=frozen(L),
        eigenvalues=frozen(lam[order]),
        eigenmodes=frozen(fix_phase(V[:, order])),
    )


def rotating_frame_hamiltonian(t, drive_frequency, amplitude):
    """Full rotating-frame Hamiltonian ``V^+ H V - i V^+ dV/dt`` (trace term included).

    Equals ``pi nu I + pi (1 - nu) s3 + (u0/2) s1
    + (u0/2) (cos(4 pi nu t) s1 - sin(4 pi nu t) s2)``; the fast term
    carries a sine on ``s2``.
    """
    nu = float(drive_frequency)
    phase = 2 * np.pi * nu * t
    # V = exp(i pi nu (I - s3) t) = diag(1, exp(2 i pi nu t))
    V = np.diag([1.0, np.exp(1j * phase)])
    dV = np.diag([0.0, 2j * np.pi * nu * np.exp(1j * phase)])
    H = np.pi * PAULI[2] + amplitude * np.cos(phase) * PAULI[0]
    return V.conj().T @ H @ V - 1j * V.conj().T @ dV
