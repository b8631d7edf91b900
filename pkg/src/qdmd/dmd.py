"""Regression engines: DMD, DMDc and bilinear DMD.

Snapshots follow the column convention throughout: ``X`` is ``(d, M-1)``
with one state per column and ``Xp`` is the same record shifted by one
sample.
"""

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._validation import as_real_matrix, as_vector, check_same_columns, frozen
from .exceptions import (
    DegenerateDataError,
    IdentifiabilityError,
    InsufficientDataError,
    RankError,
    ShapeError,
)

__all__ = [
    "SnapshotSet",
    "DMDModel",
    "DMDcModel",
    "BiDMDModel",
    "assemble_snapshots",
    "truncated_svd",
    "truncated_pinv",
    "dmd_fit",
    "dmd_predict",
    "dmdc_fit",
    "dmdc_predict",
    "khatri_rao",
    "bidmd_fit",
    "bidmd_predict",
    "resonance_estimate",
]

# default rank for biDMD: keep singular values above this fraction of the largest
DEFAULT_RANK_RTOL = 1e-10
# requested ranks may not reach below this fraction of the largest singular value
MIN_SINGULAR_RTOL = 1e-12
DEFECTIVE_COND = 1e12
IMAG_RESIDUE_TOL = 1e-8


@dataclass(frozen=True)
class SnapshotSet:
    """Paired snapshot matrices ``X -> Xp`` with optional control matrix ``U``."""

    X: np.ndarray
    Xp: np.ndarray
    U: Optional[np.ndarray] = None
    dt: float = 1.0

    def __post_init__(self):
        X = as_real_matrix(self.X, "X")
        Xp = as_real_matrix(self.Xp, "Xp")
        if X.shape != Xp.shape:
            raise ShapeError(f"X {X.shape} and Xp {Xp.shape} must have equal shape")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Xp", Xp)
        if self.U is not None:
            U = np.asarray(self.U, dtype=float)
            if U.ndim == 1:
                U = U[None, :]
            U = as_real_matrix(U, "U")
            check_same_columns(("X", X), ("U", U))
            object.__setattr__(self, "U", U)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_states(self):
        return self.X.shape[0]

    @property
    def n_snapshots(self):
        return self.X.shape[1]

    @property
    def n_controls(self):
        return 0 if self.U is None else self.U.shape[0]

    @classmethod
    def concatenate(cls, sets):
        """Horizontally stack snapshot sets from separate experiments.

        Columns are only ever paired within a set, never across the seam.
        """
        sets = list(sets)
        if not sets:
            raise InsufficientDataError("no snapshot sets to concatenate")
        dts = {s.dt for s in sets}
        if len(dts) > 1 and max(dts) - min(dts) > 1e-12 * max(dts):
            raise ShapeError(f"snapshot sets have different sampling intervals: {sorted(dts)}")
        has_u = {s.U is not None for s in sets}
        if len(has_u) > 1:
            raise ShapeError("either all or none of the snapshot sets must carry controls")
        X = np.hstack([s.X for s in sets])
        Xp = np.hstack([s.Xp for s in sets])
        U = np.hstack([s.U for s in sets]) if sets[0].U is not None else None
        return cls(X, Xp, U, sets[0].dt)


def assemble_snapshots(traj):
    """Build ``X``, ``Xp`` and ``U`` from one trajectory or a list of them."""
    if isinstance(traj, (list, tuple)):
        return SnapshotSet.concatenate(assemble_snapshots(t) for t in traj)
    if traj.n_samples < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {traj.n_samples}")
    U = traj.controls[:, :-1] if traj.n_controls else None
    return SnapshotSet(traj.states[:, :-1], traj.states[:, 1:], U, traj.dt)


def _pinv_tol(shape, smax):
    return max(shape) * np.finfo(float).eps * smax


def truncated_svd(A, rank=None):
    """Thin SVD truncated to ``rank`` (default: numerical rank)."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if rank is None:
        rank = int(np.sum(s > _pinv_tol(A.shape, s[0]))) if s.size and s[0] > 0 else 0
    return U[:, :rank], s[:rank], Vt[:rank]


def truncated_pinv(A, rank=None):
    U, s, Vt = truncated_svd(A, rank)
    return (Vt.T / s) @ U.T


@dataclass(frozen=True)
class DMDModel:
    """Fitted DMD propagator.

    ``A`` is the full ``d x d`` estimate ``Xp pinv_r(X)``; ``modes`` are
    the exact DMD modes (unit columns) and ``eigenvalues`` the per-``dt``
    discrete-time eigenvalues.
    """

    A: np.ndarray
    modes: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    dt: float
    reduced_operator: np.ndarray
    pod_basis: np.ndarray
    defective: bool = False


class DMDcModel(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    dt: float = 1.0


@dataclass(frozen=True)
class BiDMDModel:
    """Bilinear model ``x_{n+1} = A x_n + B (u_n kron x_n)``.

    ``modes`` and ``eigenvalues`` describe the drift only. When the control
    rows are library features (AHT-biDMD) their names are kept in
    ``feature_names``.
    """

    A: np.ndarray
    B: np.ndarray
    modes: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    rank_hat: int
    dt: float
    feature_names: Optional[tuple] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_controls(self):
        return self.B.shape[1] // self.A.shape[0]

    def control_blocks(self):
        """``B`` split into one ``d x d`` block per control row."""
        d = self.n_states
        return [self.B[:, i * d:(i + 1) * d] for i in range(self.n_controls)]


def _normalize_columns(M):
    norms = np.linalg.norm(M, axis=0)
    norms[norms == 0] = 1.0
    return M / norms


def dmd_fit(snap, rank=None):
    """Fit ``Xp ~ A X`` with a rank-``r`` truncated pseudoinverse.

    Raises
    ------
    DegenerateDataError
        If ``X`` is identically zero.
    RankError
        If ``rank`` is below 1 or exceeds the numerical rank of ``X``.
    """
    X, Xp = snap.X, snap.Xp
    if not np.any(X):
        raise DegenerateDataError("snapshot matrix X is identically zero")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    data_rank = int(np.sum(s > _pinv_tol(X.shape, s[0])))
    if rank is None:
        rank = data_rank
    if rank < 1 or rank > data_rank:
        raise RankError(f"rank {rank} outside [1, {data_rank}] (numerical rank of X)")
    Ur, sr, Vr = U[:, :rank], s[:rank], Vt[:rank].T
    XpVS = Xp @ Vr / sr
    A = XpVS @ Ur.T
    Atilde = Ur.T @ XpVS
    lam, w = np.linalg.eig(Atilde)
    # complex even for a real spectrum so saved and loaded models agree
    lam, w = lam.astype(complex), w.astype(complex)
    modes = XpVS @ w
    # exact modes vanish for zero eigenvalues; use projected modes there
    small = np.abs(lam) <= 1e-12 * max(1.0, np.max(np.abs(lam)))
    if np.any(small):
        modes[:, small] = Ur @ w[:, small]
    modes = _normalize_columns(modes)
    sv = np.linalg.svd(modes, compute_uv=False)
    defective = bool(sv[-1] == 0 or sv[0] / sv[-1] > DEFECTIVE_COND)
    return DMDModel(
        A=frozen(A),
        modes=frozen(modes),
        eigenvalues=frozen(lam),
        rank=rank,
        dt=snap.dt,
        reduced_operator=frozen(Atilde),
        pod_basis=frozen(Ur),
        defective=defective,
    )


def _realize(Z, what):
    scale = max(1.0, float(np.max(np.abs(Z.real), initial=0.0)))
    resid = float(np.max(np.abs(Z.imag), initial=0.0))
    if resid > IMAG_RESIDUE_TOL * scale:
        warnings.warn(f"{what}: imaginary residue {resid:.2e} discarded", RuntimeWarning, stacklevel=3)
    return Z.real


def dmd_predict(model, x0, n_steps):
    """States ``x_0 .. x_n`` (as columns) from the modal expansion ``W Lambda^n b``.

    Defective models (ill-conditioned mode matrix) fall back to matrix
    powers of ``A``.
    """
    d = model.A.shape[0]
    x0 = as_vector(x0, "x0", d)
    out = np.empty((d, n_steps + 1))
    if model.defective:
        x = x0.copy()
        out[:, 0] = x
        for n in range(n_steps):
            x = model.A @ x
            out[:, n + 1] = x
        return out
    W = model.modes
    b = np.linalg.lstsq(W, x0.astype(complex), rcond=None)[0]
    powers = model.eigenvalues[:, None] ** np.arange(n_steps + 1)[None, :]
    return _realize(W @ (powers * b[:, None]), "dmd_predict")


def dmdc_fit(snap, rank=None):
    """Direct-actuation fit ``[A B] = Xp pinv([X; U])``."""
    if snap.U is None:
        raise ShapeError("DMDc needs a control matrix U")
    X, Xp, U = snap.X, snap.Xp, snap.U
    d = X.shape[0]
    if not np.any(U):
        sx = np.linalg.svd(X, compute_uv=False)
        if sx[0] == 0 or np.sum(sx > _pinv_tol(X.shape, sx[0])) < d:
            raise IdentifiabilityError(
                "control record is identically zero and X is rank deficient; B is undetermined"
            )
    Xi = np.vstack([X, U])
    G = Xp @ truncated_pinv(Xi, rank)
    return DMDcModel(frozen(G[:, :d]), frozen(G[:, d:]), snap.dt)


def dmdc_predict(model, x0, u_sequence):
    A, B = model.A, model.B
    x = as_vector(x0, "x0", A.shape[0])
    u_sequence = np.asarray(u_sequence, dtype=float).reshape(B.shape[1], -1)
    out = np.empty((A.shape[0], u_sequence.shape[1] + 1))
    out[:, 0] = x
    for n in range(u_sequence.shape[1]):
        x = A @ x + B @ u_sequence[:, n]
        out[:, n + 1] = x
    return out


def khatri_rao(U, X):
    """Column-wise Kronecker product.

    Column ``m`` is ``kron(U[:, m], X[:, m])`` ordered
    ``[u1 x1, .., u1 xd, u2 x1, ..]``.
    """
    U = np.asarray(U, dtype=float)
    X = np.asarray(X, dtype=float)
    if U.ndim == 1:
        U = U[None, :]
    if X.ndim == 1:
        X = X[:, None]
    if U.ndim != 2 or X.ndim != 2 or U.shape[1] != X.shape[1]:
        raise ShapeError(f"khatri_rao needs equal column counts, got {U.shape} and {X.shape}")
    return (U[:, None, :] * X[None, :, :]).reshape(U.shape[0] * X.shape[0], X.shape[1])


def _choose_rank(s, rank, what):
    if s.size == 0 or s[0] == 0:
        raise DegenerateDataError(f"{what} is identically zero")
    if rank is None:
        return int(np.sum(s > DEFAULT_RANK_RTOL * s[0]))
    rank = int(rank)
    if rank < 1:
        raise RankError(f"{what} rank must be >= 1, got {rank}")
    if rank > s.size:
        raise RankError(f"{what} rank {rank} exceeds available singular values ({s.size})")
    usable = int(np.sum(s > MIN_SINGULAR_RTOL * s[0]))
    if rank > usable:
        warnings.warn(
            f"{what}: requested rank {rank} but only {usable} singular values exceed "
            f"{MIN_SINGULAR_RTOL:g} * sigma_max; truncating to {usable}",
            RuntimeWarning,
            stacklevel=3,
        )
        rank = usable
    return rank


def bidmd_fit(snap, rank=None, rank_hat=None, *, feature_names=None):
    """Bilinear DMD.

    1. ``Xi = [X; U (.) X]`` and its rank-``rank`` SVD ``U~ S~ V~^T``.
    2. Split ``U~`` into the first ``d`` rows (drift) and the rest (control).
    3. ``A = Xp V~ S~^-1 U~_A^T`` and ``B = Xp V~ S~^-1 U~_B^T``.
    4. Project the drift on the leading ``rank_hat`` left singular vectors
       ``U^`` of ``Xp``, diagonalize ``U^T A U^ = W Lambda W^-1`` and lift
       the modes as ``A U^ W``.

    ``rank`` defaults to the number of singular values of ``Xi`` above
    ``1e-10 * sigma_max``; ``rank_hat`` likewise for ``Xp``, capped at ``d``.
    """
    if snap.U is None:
        raise ShapeError("biDMD needs a control matrix U")
    X, Xp, U = snap.X, snap.Xp, snap.U
    d = X.shape[0]
    Xi = np.vstack([X, khatri_rao(U, X)])
    Ut, st, Vtt = np.linalg.svd(Xi, full_matrices=False)
    r = _choose_rank(st, rank, "Xi")
    Ut, st, Vt = Ut[:, :r], st[:r], Vtt[:r].T
    XpVS = Xp @ Vt / st
    A = XpVS @ Ut[:d].T
    B = XpVS @ Ut[d:].T

    Uh, sh, _ = np.linalg.svd(Xp, full_matrices=False)
    if rank_hat is not None and rank_hat > d:
        raise RankError(f"rank_hat {rank_hat} exceeds state dimension {d}")
    rh = _choose_rank(sh, rank_hat, "Xp")
    Uh = Uh[:, :rh]
    Ahat = Uh.T @ A @ Uh
    lam, W = np.linalg.eig(Ahat)
    lam, W = lam.astype(complex), W.astype(complex)
    modes = A @ Uh @ W
    return BiDMDModel(
        A=frozen(A),
        B=frozen(B),
        modes=frozen(modes),
        eigenvalues=frozen(lam),
        rank=r,
        rank_hat=rh,
        dt=snap.dt,
        feature_names=None if feature_names is None else tuple(feature_names),
        meta={"projection": frozen(Uh)},
    )


def bidmd_predict(model, x0, u_sequence):
    """Roll ``x_{n+1} = A x_n + B (u_n kron x_n)`` forward; returns states as columns."""
    A, B = model.A, model.B
    d = A.shape[0]
    nc = model.n_controls
    x = as_vector(x0, "x0", d)
    u_sequence = np.asarray(u_sequence, dtype=float)
    if u_sequence.ndim == 1:
        u_sequence = u_sequence[None, :] if nc == 1 else u_sequence[:, None]
    if u_sequence.shape[0] != nc:
        raise ShapeError(f"control sequence must have {nc} rows, got shape {u_sequence.shape}")
    n = u_sequence.shape[1]
    blocks = np.stack(model.control_blocks()) if nc else np.zeros((0, d, d))
    out = np.empty((d, n + 1))
    out[:, 0] = x
    for m in range(n):
        step = A + np.tensordot(u_sequence[:, m], blocks, axes=1)
        x = step @ x
        out[:, m + 1] = x
    return out


def resonance_estimate(model, dt=None):
    """Frequencies (cycles per unit time) ``|arg lambda| / (2 pi dt)``, one per conjugate pair.

    Sorted by decreasing ``|lambda|``. Returns an empty array (with a
    warning) when the spectrum is real.
    """
    lam = np.asarray(model.eigenvalues if hasattr(model, "eigenvalues") else model)
    if dt is None:
        dt = model.dt
    tol = 1e-12 * max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    upper = lam[lam.imag > tol]
    if upper.size == 0:
        warnings.warn("all eigenvalues are real; no oscillation frequency", RuntimeWarning, stacklevel=2)
        return np.empty(0)
    upper = upper[np.argsort(-np.abs(upper), kind="stable")]
    return np.abs(np.angle(upper)) / (2 * np.pi * dt)
