"""Stroboscopic bilinear DMD with parametric (Fourier-coefficient) controls.

Over each control period the signal is described by its Fourier
coefficients ``u_n = [a_1..a_K, b_1..b_K]``. The one-period map depends
on ``u_n`` only, so the stroboscopic record obeys a time-invariant
recurrence ``x_{n+1} = A x_n + B (theta(u_n) kron x_n)`` where ``theta`` is
a polynomial feature library in the coefficients.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from ._validation import as_real_matrix, frozen
from .dmd import SnapshotSet, bidmd_fit
from .exceptions import InvalidHarmonicError, ShapeError

__all__ = [
    "ControlCoefficients",
    "PolynomialLibrary",
    "fit_fourier_coefficients",
    "coefficient_matrix",
    "coefficient_names",
    "build_library",
    "aht_bidmd_fit",
]

MIN_QUADRATURE_POINTS = 512


@dataclass(frozen=True)
class ControlCoefficients:
    """Per-period Fourier coefficients, one column ``[a_1..a_K, b_1..b_K]`` per period."""

    values: np.ndarray
    n_harmonics: int
    base_frequency: float

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.shape[0] != 2 * self.n_harmonics:
            raise ShapeError(f"coefficient vectors must have length {2 * self.n_harmonics}, got {v.shape[0]}")
        object.__setattr__(self, "values", frozen(v))

    @property
    def period(self):
        return 2 * np.pi / self.base_frequency

    @property
    def n_periods(self):
        return self.values.shape[1]

    @property
    def cosine(self):
        return self.values[: self.n_harmonics]

    @property
    def sine(self):
        return self.values[self.n_harmonics:]

    @property
    def names(self):
        return coefficient_names(self.n_harmonics)


def coefficient_names(K):
    return [f"a{k}" for k in range(1, K + 1)] + [f"b{k}" for k in range(1, K + 1)]


def _check_harmonics(base_frequency, K):
    if int(K) != K or K < 1:
        raise InvalidHarmonicError(f"harmonic count must be a positive integer, got {K}")
    if not base_frequency > 0:
        raise InvalidHarmonicError(f"base frequency must be positive, got {base_frequency}")


def fit_fourier_coefficients(u, base_frequency, K, period_index=1, n_points=4096,
                             t0=0.0, local_time=False):
    """Fourier coefficients of ``u`` on the period ``[t0 + (n-1) T, t0 + n T]``.

    ``u`` is either a callable or an array of samples taken uniformly over
    that period (endpoint excluded). Projection uses the periodic trapezoid
    rule, which is exact for trigonometric polynomials of degree below half
    the point count. With ``local_time=True`` the phases are measured from
    the start of the period rather than from ``t = 0``.
    """
    _check_harmonics(base_frequency, K)
    T = 2 * np.pi / base_frequency
    start = t0 + (int(period_index) - 1) * T
    if callable(u):
        n = max(int(n_points), MIN_QUADRATURE_POINTS)
        t = start + T * np.arange(n) / n
        samples = np.asarray(u(t), dtype=float) * np.ones(n)
    else:
        samples = np.asarray(u, dtype=float).ravel()
        n = samples.size
        if n <= 2 * K:
            raise ShapeError(f"need more than {2 * K} samples per period for {K} harmonics, got {n}")
        t = start + T * np.arange(n) / n
    phase_t = t - start if local_time else t
    k = np.arange(1, K + 1)
    phase = np.multiply.outer(k * base_frequency, phase_t)
    a = 2.0 / n * np.cos(phase) @ samples
    b = 2.0 / n * np.sin(phase) @ samples
    return np.concatenate([a, b])


def coefficient_matrix(u, base_frequency, K, n_periods, **kwargs):
    """``ControlCoefficients`` for periods ``1..n_periods``."""
    cols = [fit_fourier_coefficients(u, base_frequency, K, n, **kwargs) for n in range(1, n_periods + 1)]
    return ControlCoefficients(np.column_stack(cols), K, base_frequency)


@dataclass(frozen=True)
class PolynomialLibrary:
    """Monomials of degree ``1..degree`` in the rows of ``U_hat``.

    ``exponents[i]`` holds the input-row indices multiplied together for
    feature ``i`` (with repetition), so ``features[i]`` equals
    ``prod(U_hat[exponents[i]], axis=0)``.
    """

    degree: int
    features: np.ndarray
    names: tuple
    exponents: tuple

    @property
    def n_features(self):
        return self.features.shape[0]

    def transform(self, U_hat):
        """Evaluate the same monomials on new coefficient columns."""
        U_hat = np.atleast_2d(np.asarray(U_hat, dtype=float))
        return _evaluate(U_hat, self.exponents)


def _monomials(n_inputs, degree):
    return [c for p in range(1, degree + 1) for c in combinations_with_replacement(range(n_inputs), p)]


def _evaluate(U_hat, exponents):
    out = np.empty((len(exponents), U_hat.shape[1]))
    for i, idx in enumerate(exponents):
        row = U_hat[idx[0]].copy()
        for j in idx[1:]:
            row *= U_hat[j]
        out[i] = row
    return out


def _monomial_name(idx, names):
    parts = []
    for j in sorted(set(idx)):
        power = idx.count(j)
        parts.append(names[j] if power == 1 else f"{names[j]}^{power}")
    return " ".join(parts)


def build_library(U_hat, degree, input_names=None):
    """Polynomial library, degree-major and lexicographic within a degree.

    For coefficients ``(a, b)`` and degree 2 the rows are
    ``a, b, a^2, a b, b^2``. No constant row is included; the drift term
    plays that role.
    """
    if int(degree) != degree or degree < 1:
        raise ValueError(f"library degree must be a positive integer, got {degree}")
    U_hat = as_real_matrix(U_hat, "U_hat")
    n_in = U_hat.shape[0]
    if input_names is None:
        input_names = coefficient_names(n_in // 2) if n_in % 2 == 0 else [f"u{j + 1}" for j in range(n_in)]
    if len(input_names) != n_in:
        raise ShapeError(f"{len(input_names)} input names for {n_in} coefficient rows")
    exps = tuple(_monomials(n_in, int(degree)))
    names = tuple(_monomial_name(list(e), list(input_names)) for e in exps)
    return PolynomialLibrary(int(degree), frozen(_evaluate(U_hat, exps)), names, exps)


def aht_bidmd_fit(X, Xp, library, rank=None, rank_hat=None, dt=1.0, feature_names=None):
    """Bilinear DMD on stroboscopic snapshots with library features as controls.

    ``library`` is a :class:`PolynomialLibrary` or a raw ``(F, M-1)`` feature
    matrix; ``B`` then has one ``d``-column block per feature.
    """
    if isinstance(library, PolynomialLibrary):
        features, names = library.features, library.names
    else:
        features, names = library, feature_names
    snap = SnapshotSet(X, Xp, features, dt)
    return bidmd_fit(snap, rank, rank_hat, feature_names=names)
