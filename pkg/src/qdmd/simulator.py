"""Ground-truth trajectories for bilinear Bloch dynamics.

The integrator is a fixed-step classical Runge-Kutta scheme. Because the
right-hand side is (affine) linear in ``x``, one RK4 substep is itself a
matrix; the substep matrices of each output interval are built in a single
vectorized pass and multiplied together, so only one matrix-vector product
per output sample happens in Python.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from ._validation import as_real_matrix, as_square, as_vector
from .bloch import VectorizedGenerator
from .exceptions import InsufficientDataError, InvalidStepError, SamplingGridError, ShapeError

__all__ = [
    "BlochTrajectory",
    "NoiseModel",
    "integrate_bilinear",
    "zero_order_hold_propagate",
    "add_noise",
    "sample_stroboscopic",
    "propagator",
    "save_trajectory_csv",
    "load_trajectory_csv",
]

DEFAULT_SUBSTEPS = 64


@dataclass(frozen=True)
class BlochTrajectory:
    """Uniformly sampled trajectory.

    ``states`` is ``(d, M)`` and ``controls`` is ``(Nc, M)``: column ``m``
    holds the state and the applied control at ``times[m]``.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = as_vector(self.times, "times")
        states = as_real_matrix(self.states, "states")
        controls = np.asarray(self.controls, dtype=float)
        if controls.ndim == 1:
            controls = controls[None, :]
        if controls.size == 0:
            controls = np.zeros((0, times.shape[0]))
        if states.shape[1] != times.shape[0] or controls.shape[1] != times.shape[0]:
            raise ShapeError(
                f"times ({times.shape[0]}), state columns ({states.shape[1]}) and "
                f"control columns ({controls.shape[1]}) must agree"
            )
        if times.shape[0] > 1:
            steps = np.diff(times)
            if np.any(steps <= 0):
                raise ShapeError("times must be strictly increasing")
            if np.max(np.abs(steps - self.dt)) > 1e-9 * max(abs(self.dt), 1e-300) + 1e-12 * np.max(np.abs(times)):
                raise ShapeError("times must be uniformly spaced by dt")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n_samples(self):
        return self.times.shape[0]

    @property
    def n_states(self):
        return self.states.shape[0]

    @property
    def n_controls(self):
        return self.controls.shape[0]

    def __len__(self):
        return self.n_samples

    def subsample(self, step, start=0):
        sl = slice(start, None, step)
        return BlochTrajectory(
            self.times[sl], self.states[:, sl], self.controls[:, sl], self.dt * step, self.meta
        )


@dataclass(frozen=True)
class NoiseModel:
    """Additive i.i.d. Gaussian measurement noise on every Bloch coordinate."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma}")


def _as_generator(g, d=None):
    if isinstance(g, VectorizedGenerator):
        gen = g
    else:
        gen = VectorizedGenerator.linear(as_square(g, "generator"))
    if d is not None and gen.dimension != d:
        raise ShapeError(f"generator has dimension {gen.dimension}, expected {d}")
    return gen


def _augmented(gen):
    """Homogeneous ``(d+1) x (d+1)`` form of an affine generator."""
    d = gen.dimension
    out = np.zeros((d + 1, d + 1))
    out[:d, :d] = gen.L
    out[:d, d] = gen.c
    return out


def _rk4_step_matrices(G1, G2, G4, h):
    """One RK4 substep of ``y' = G(t) y`` as a matrix, batched over axis 0."""
    eye = np.eye(G1.shape[-1])
    K1 = G1
    K2 = G2 @ (eye + 0.5 * h * K1)
    K3 = G2 @ (eye + 0.5 * h * K2)
    K4 = G4 @ (eye + h * K3)
    return eye + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)


def _chain_product(mats):
    """``mats[..., n-1, :, :] @ ... @ mats[..., 0, :, :]`` via pairwise reduction."""
    while mats.shape[-3] > 1:
        n = mats.shape[-3]
        if n % 2:
            pad = np.broadcast_to(np.eye(mats.shape[-1]), mats.shape[:-3] + (1,) + mats.shape[-2:])
            mats = np.concatenate([mats, pad], axis=-3)
        mats = mats[..., 1::2, :, :] @ mats[..., 0::2, :, :]
    return mats[..., 0, :, :]


def propagator(L0, L_ctrl, u, t_start, t_stop, substeps=4096):
    """RK4 propagator of the homogeneous bilinear system over ``[t_start, t_stop]``.

    Returns the ``d x d`` matrix ``P`` with ``x(t_stop) = P x(t_start)``
    (affine terms are ignored). Used as the monodromy oracle.
    """
    L0 = _as_generator(L0)
    L_ctrl = [_as_generator(g, L0.dimension) for g in L_ctrl]
    if len(L_ctrl) != len(u):
        raise ShapeError("need one control signal per control generator")
    h = (t_stop - t_start) / substeps
    t = t_start + h * np.arange(substeps)

    def gen(times):
        G = np.broadcast_to(L0.L, times.shape + L0.L.shape).copy()
        for Lj, uj in zip(L_ctrl, u):
            G += np.multiply.outer(np.asarray(uj(times), dtype=float) * np.ones_like(times), Lj.L)
        return G

    steps = _rk4_step_matrices(gen(t), gen(t + 0.5 * h), gen(t + h), h)
    return _chain_product(steps)


def integrate_bilinear(L0, L_ctrl, u, x0, t0, t_end, dt_out, substeps=DEFAULT_SUBSTEPS):
    """Integrate ``dx/dt = (L0 + sum_j u_j(t) L_j) x + c`` on a uniform output grid.

    Parameters
    ----------
    L0 : VectorizedGenerator or (d, d) array
        Drift generator (its affine part ``c`` is honoured).
    L_ctrl : sequence of VectorizedGenerator or (d, d) arrays
        One generator per control channel.
    u : sequence of callables
        Control signals ``u_j(t)``, same length as ``L_ctrl``.
    x0 : (d,) array
    t0, t_end, dt_out : float
        Output grid ``t0, t0 + dt_out, ...`` up to ``t_end`` (inclusive when
        commensurate).
    substeps : int
        RK4 substeps per output interval.
    """
    L0 = _as_generator(L0)
    d = L0.dimension
    L_ctrl = [_as_generator(g, d) for g in L_ctrl]
    if len(L_ctrl) != len(u):
        raise ShapeError(f"{len(L_ctrl)} control generators but {len(u)} control signals")
    x0 = as_vector(x0, "x0", d)
    if not dt_out > 0:
        raise InvalidStepError(f"output step must be positive, got {dt_out}")
    if substeps < 1:
        raise InvalidStepError("substeps must be >= 1")
    n_out = int(math.floor((t_end - t0) / dt_out + 1e-9))
    times = t0 + dt_out * np.arange(n_out + 1)
    controls = np.array([np.broadcast_to(uj(times), times.shape) for uj in u], dtype=float)
    controls = controls.reshape(len(u), times.shape[0])

    states = np.empty((d, n_out + 1))
    states[:, 0] = x0
    if n_out > 0:
        h = dt_out / substeps
        sub = times[:-1, None] + h * np.arange(substeps)[None, :]
        A0 = _augmented(L0)
        Aj = [_augmented(g) for g in L_ctrl]

        def gen(tt):
            G = np.broadcast_to(A0, tt.shape + A0.shape).copy()
            for A, uj in zip(Aj, u):
                G += np.multiply.outer(np.broadcast_to(uj(tt), tt.shape).astype(float), A)
            return G

        steps = _rk4_step_matrices(gen(sub), gen(sub + 0.5 * h), gen(sub + h), h)
        blocks = _chain_product(steps)
        y = np.append(x0, 1.0)
        for m in range(n_out):
            y = blocks[m] @ y
            states[:, m + 1] = y[:d]
    return BlochTrajectory(times, states, controls, dt_out, {"substeps": substeps})


def zero_order_hold_propagate(L0, L_B, u_samples, x0, dt):
    """Exact discretization of ``dx/dt = L0 x + L_B u`` under a zero-order hold.

    ``x_{n+1} = expm(L0 dt) x_n + (int_0^dt expm(L0 (dt - s)) L_B ds) u_n``.
    Both blocks come from one exponential of the augmented matrix
    ``[[L0, L_B], [0, 0]]``.
    """
    if not dt > 0:
        raise InvalidStepError(f"step must be positive, got {dt}")
    L0 = as_square(L0, "L0")
    d = L0.shape[0]
    L_B = np.asarray(L_B, dtype=float)
    if L_B.ndim == 1:
        L_B = L_B[:, None]
    if L_B.shape[0] != d:
        raise ShapeError(f"L_B must have {d} rows, got shape {L_B.shape}")
    nc = L_B.shape[1]
    u_samples = np.asarray(u_samples, dtype=float)
    if u_samples.ndim == 1:
        u_samples = u_samples[None, :]
    if u_samples.shape[0] != nc:
        raise ShapeError(f"u_samples must have {nc} rows, got shape {u_samples.shape}")
    x0 = as_vector(x0, "x0", d)

    aug = np.zeros((d + nc, d + nc))
    aug[:d, :d] = L0
    aug[:d, d:] = L_B
    E = expm(aug * dt)
    Phi, Gamma = E[:d, :d], E[:d, d:]

    n = u_samples.shape[1]
    states = np.empty((d, n + 1))
    states[:, 0] = x0
    for m in range(n):
        states[:, m + 1] = Phi @ states[:, m] + Gamma @ u_samples[:, m]
    controls = np.concatenate([u_samples, u_samples[:, -1:]], axis=1) if n else np.zeros((nc, 1))
    times = dt * np.arange(n + 1)
    return BlochTrajectory(times, states, controls, dt, {"hold": "zero_order"})


def add_noise(traj, noise):
    """Add i.i.d. Gaussian noise to every state entry; controls are untouched."""
    if not isinstance(noise, NoiseModel):
        noise = NoiseModel(*noise)
    meta = dict(traj.meta, sigma=noise.sigma, seed=noise.seed)
    if noise.sigma == 0:
        return replace(traj, meta=meta)
    rng = np.random.default_rng(noise.seed)
    noisy = traj.states + noise.sigma * rng.standard_normal(traj.states.shape)
    return replace(traj, states=noisy, meta=meta)


def sample_stroboscopic(traj, period, samples_per_period):
    """Keep every sample at offsets ``r * period / s`` (the grid must be commensurate)."""
    if samples_per_period < 1:
        raise SamplingGridError("samples_per_period must be >= 1")
    step = period / samples_per_period
    ratio = step / traj.dt
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise SamplingGridError(
            f"period/s = {step:.12g} is not an integer multiple of dt = {traj.dt:.12g}"
        )
    out = traj.subsample(k)
    meta = dict(out.meta, T=period, samples_per_period=samples_per_period)
    return replace(out, dt=step, meta=meta)


_META_KEYS = ("dt", "sigma", "seed", "T")


def save_trajectory_csv(traj, path):
    """Write ``t, x1..xd, u1..uNc`` rows (17 significant digits) with ``# key=value`` metadata."""
    lines = [f"# dt={traj.dt!r}"]
    for key in ("sigma", "seed", "T"):
        if key in traj.meta:
            lines.append(f"# {key}={traj.meta[key]!r}")
    header = ["t"] + [f"x{j + 1}" for j in range(traj.n_states)]
    header += [f"u{j + 1}" for j in range(traj.n_controls)]
    lines.append(",".join(header))
    data = np.vstack([traj.times[None, :], traj.states, traj.controls]).T
    for row in data:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trajectory_csv(path):
    meta = {}
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = _parse_meta(value.strip())
            elif header is None:
                header = [h.strip() for h in line.split(",")]
            else:
                rows.append([float(v) for v in line.split(",")])
    if header is None or not rows:
        raise InsufficientDataError(f"{path}: no trajectory samples")
    data = np.array(rows)
    if data.shape[1] != len(header):
        raise ShapeError(f"{path}: rows have {data.shape[1]} fields, header has {len(header)}")
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    ucols = [i for i, h in enumerate(header) if h.startswith("u")]
    times = data[:, 0]
    dt = meta.pop("dt", times[1] - times[0] if len(times) > 1 else 1.0)
    return BlochTrajectory(times, data[:, xcols].T, data[:, ucols].T, dt, meta)


def _parse_meta(value):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value
