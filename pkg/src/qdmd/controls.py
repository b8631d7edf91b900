"""Scalar control signals ``u(t)``.

All signals are small frozen dataclasses that are callable on scalars or
arrays of times, and serialize to/from plain dicts for the experiment config.
"""

from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "ControlSignal",
    "PureTone",
    "FourierSeries",
    "Sawtooth",
    "PiecewiseConstant",
    "pure_tone",
    "fourier",
    "sawtooth",
    "piecewise",
    "constant",
    "make_control",
    "control_from_dict",
]


class ControlSignal:
    kind = None

    def __call__(self, t):
        raise NotImplementedError

    def to_dict(self):
        d = {"kind": self.kind}
        for key, value in asdict(self).items():
            d[key] = list(value) if isinstance(value, tuple) else value
        return d


@dataclass(frozen=True)
class PureTone(ControlSignal):
    """``amplitude * cos(2 pi frequency t + phase)``; ``frequency`` in cycles per unit time."""

    frequency: float
    amplitude: float = 1.0
    phase: float = 0.0
    kind = "pure_tone"

    def __call__(self, t):
        return self.amplitude * np.cos(2 * np.pi * self.frequency * np.asarray(t) + self.phase)

    @property
    def period(self):
        return 1.0 / abs(self.frequency) if self.frequency else np.inf


@dataclass(frozen=True)
class FourierSeries(ControlSignal):
    """``sum_k a_k cos(k W t) + b_k sin(k W t)`` for ``k = 1..K`` and base frequency ``W`` (rad/time)."""

    a: tuple
    b: tuple
    base_frequency: float
    kind = "fourier_series"

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if len(self.a) != len(self.b):
            raise ValueError("cosine and sine coefficient lists must have equal length")
        if not self.base_frequency > 0:
            raise ValueError("base frequency must be positive")

    @property
    def n_harmonics(self):
        return len(self.a)

    @property
    def period(self):
        return 2 * np.pi / self.base_frequency

    @property
    def coefficients(self):
        """Coefficient vector ``[a_1..a_K, b_1..b_K]``."""
        return np.array(self.a + self.b)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.arange(1, self.n_harmonics + 1)
        phase = np.multiply.outer(t, k * self.base_frequency)
        return np.cos(phase) @ np.array(self.a) + np.sin(phase) @ np.array(self.b)


@dataclass(frozen=True)
class Sawtooth(ControlSignal):
    """Rising ramp through zero at ``t = 0``: ``amplitude * (2 frac(t / period + 1/2) - 1)``.

    It jumps from ``+amplitude`` to ``-amplitude`` at half periods. The sine
    coefficients on the base frequency ``2 pi / period`` are
    ``b_k = (-1)^(k+1) 2 amplitude / (k pi)``; all cosine coefficients vanish.
    """

    amplitude: float
    period: float
    kind = "sawtooth"

    def __call__(self, t):
        frac = np.mod(np.asarray(t, dtype=float) / self.period + 0.5, 1.0)
        return self.amplitude * (2.0 * frac - 1.0)


@dataclass(frozen=True)
class PiecewiseConstant(ControlSignal):
    """Zero-order hold: ``values[i]`` on ``[t0 + i dt, t0 + (i+1) dt)``; the last value is held."""

    values: tuple
    dt: float
    t0: float = 0.0
    kind = "piecewise_constant"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("piecewise control needs at least one value")
        if not self.dt > 0:
            raise ValueError("piecewise interval must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        # small slack so grid points land in the interval they start
        idx = np.floor((t - self.t0) / self.dt + 1e-9).astype(int)
        idx = np.clip(idx, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]


def pure_tone(frequency, amplitude=1.0, phase=0.0):
    return PureTone(float(frequency), float(amplitude), float(phase))


def fourier(a, b, base_frequency):
    return FourierSeries(tuple(a), tuple(b), float(base_frequency))


def sawtooth(amplitude, period):
    return Sawtooth(float(amplitude), float(period))


def piecewise(values, dt, t0=0.0):
    return PiecewiseConstant(tuple(values), float(dt), float(t0))


def constant(value):
    return PiecewiseConstant((float(value),), 1.0)


_KINDS = {
    "pure_tone": pure_tone,
    "fourier_series": fourier,
    "fourier": fourier,
    "sawtooth": sawtooth,
    "piecewise_constant": piecewise,
    "piecewise": piecewise,
    "constant": constant,
}


def make_control(kind, **params):
    try:
        ctor = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown control kind {kind!r}; expected one of {sorted(_KINDS)}") from None
    return ctor(**params)


def control_from_dict(spec):
    spec = dict(spec)
    kind = spec.pop("kind")
    return make_control(kind, **spec)
