"""scikit-learn style wrappers around the functional fits.

Data follow the scikit-learn row convention: each row of ``X`` is one
time sample and each column one Bloch coordinate. ``fit`` also accepts a
list of arrays, one per experiment; snapshot pairs never straddle two
experiments. The fitted models of :mod:`qdmd.dmd`, :mod:`qdmd.floquet` and
:mod:`qdmd.aht` are available as ``model_``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.metrics import r2_score
from sklearn.utils.validation import check_array, check_is_fitted

from . import aht, dmd, floquet
from .exceptions import InsufficientDataError, ShapeError
from .simulator import BlochTrajectory

__all__ = [
    "DMD",
    "DMDc",
    "BiDMD",
    "FloquetDMD",
    "PolynomialControlFeatures",
    "AHTBiDMD",
]


def _as_runs(X, name="X"):
    runs = list(X) if isinstance(X, (list, tuple)) else [X]
    if not runs:
        raise InsufficientDataError(f"{name} is empty")
    return [check_array(r, ensure_min_samples=1, dtype=float) for r in runs]


def _pair_runs(X, U):
    """Snapshot set built from row-major experiments ``X`` with optional controls ``U``."""
    xs = _as_runs(X)
    us = [None] * len(xs) if U is None else _as_runs(U, "U")
    if len(us) != len(xs):
        raise ShapeError(f"{len(xs)} state records but {len(us)} control records")
    sets = []
    for x, u in zip(xs, us):
        if x.shape[0] < 2:
            raise InsufficientDataError("each experiment needs at least 2 samples")
        if u is not None:
            if u.shape[0] < x.shape[0] - 1:
                raise ShapeError(f"control record has {u.shape[0]} rows for {x.shape[0]} states")
            u = u[: x.shape[0] - 1].T
        sets.append(dmd.SnapshotSet(x[:-1].T, x[1:].T, u))
    d = {s.n_states for s in sets}
    if len(d) > 1:
        raise ShapeError(f"experiments have different state dimensions: {sorted(d)}")
    return dmd.SnapshotSet.concatenate(sets)


class _SnapshotRegressor(RegressorMixin, BaseEstimator):
    """Shared one-step ``predict`` / ``score`` for the linear-in-state models."""

    def _step(self, X, U=None):
        raise NotImplementedError

    def predict(self, X, U=None):
        """One-step-ahead predictions: row ``n`` of the result estimates ``x_{n+1}``."""
        check_is_fitted(self)
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"X has {X.shape[1]} columns, model expects {self.n_features_in_}")
        if U is not None:
            U = check_array(U, dtype=float)
            if U.shape[0] != X.shape[0]:
                raise ShapeError("X and U must have the same number of rows")
        return self._step(X, U)

    def score(self, X, U=None, sample_weight=None):
        """R^2 of one-step predictions over each consecutive pair of rows of ``X``."""
        scores = []
        us = [None] * len(_as_runs(X)) if U is None else _as_runs(U, "U")
        for x, u in zip(_as_runs(X), us):
            pred = self.predict(x[:-1], None if u is None else u[: x.shape[0] - 1])
            scores.append(r2_score(x[1:], pred, multioutput="variance_weighted"))
        return float(np.mean(scores))


class DMD(_SnapshotRegressor):
    """Exact DMD, ``x_{n+1} = A x_n``."""

    def __init__(self, rank=None, dt=1.0):
        self.rank = rank
        self.dt = dt

    def fit(self, X, y=None):
        snap = _pair_runs(X, None)
        snap = dmd.SnapshotSet(snap.X, snap.Xp, None, self.dt)
        self.model_ = dmd.dmd_fit(snap, self.rank)
        self.A_ = self.model_.A
        self.eigenvalues_ = self.model_.eigenvalues
        self.modes_ = self.model_.modes
        self.n_features_in_ = snap.n_states
        return self

    def _step(self, X, U=None):
        return X @ self.A_.T

    def simulate(self, x0, n_steps):
        check_is_fitted(self)
        return dmd.dmd_predict(self.model_, x0, int(n_steps)).T


class DMDc(_SnapshotRegressor):
    """DMD with direct actuation, ``x_{n+1} = A x_n + B u_n``."""

    def __init__(self, rank=None, dt=1.0):
        self.rank = rank
        self.dt = dt

    def fit(self, X, U):
        snap = _pair_runs(X, U)
        snap = dmd.SnapshotSet(snap.X, snap.Xp, snap.U, self.dt)
        self.model_ = dmd.dmdc_fit(snap, self.rank)
        self.A_, self.B_ = self.model_.A, self.model_.B
        self.n_features_in_ = snap.n_states
        self.n_controls_ = snap.n_controls
        return self

    def _step(self, X, U=None):
        if U is None:
            raise ShapeError("DMDc predictions need the control record U")
        return X @ self.A_.T + U @ self.B_.T

    def simulate(self, x0, U):
        check_is_fitted(self)
        U = check_array(U, dtype=float)
        return dmd.dmdc_predict(self.model_, x0, U.T).T


class BiDMD(_SnapshotRegressor):
    """Bilinear DMD, ``x_{n+1} = A x_n + B (u_n kron x_n)``."""

    def __init__(self, rank=None, rank_hat=None, dt=1.0):
        self.rank = rank
        self.rank_hat = rank_hat
        self.dt = dt

    def fit(self, X, U):
        snap = _pair_runs(X, U)
        snap = dmd.SnapshotSet(snap.X, snap.Xp, snap.U, self.dt)
        self.model_ = dmd.bidmd_fit(snap, self.rank, self.rank_hat)
        self._set_fitted(snap.n_states)
        return self

    def _set_fitted(self, d):
        m = self.model_
        self.A_, self.B_ = m.A, m.B
        self.eigenvalues_ = m.eigenvalues
        self.modes_ = m.modes
        self.rank_, self.rank_hat_ = m.rank, m.rank_hat
        self.n_features_in_ = d
        self.n_controls_ = m.n_controls

    @property
    def resonance_frequencies_(self):
        check_is_fitted(self)
        return dmd.resonance_estimate(self.model_)

    def _step(self, X, U=None):
        if U is None:
            raise ShapeError("biDMD predictions need the control record U")
        blocks = np.stack(self.model_.control_blocks())
        return X @ self.A_.T + np.einsum("nc,cij,nj->ni", U, blocks, X)

    def simulate(self, x0, U):
        """Roll the model forward from ``x0`` under the control rows ``U``."""
        check_is_fitted(self)
        U = check_array(U, dtype=float)
        return dmd.bidmd_predict(self.model_, x0, U.T).T


class FloquetDMD(BaseEstimator):
    """DMD on period-stacked snapshots of a periodically driven system.

    ``X`` rows are samples spaced by ``period / samples_per_period`` (or
    finer, given ``dt``) starting at a period boundary.
    """

    def __init__(self, period=1.0, samples_per_period=1, rank=None, dt=None):
        self.period = period
        self.samples_per_period = samples_per_period
        self.rank = rank
        self.dt = dt

    def _stack(self, x):
        dt = self.period / self.samples_per_period if self.dt is None else self.dt
        traj = BlochTrajectory(dt * np.arange(x.shape[0]), x.T, np.zeros((0, x.shape[0])), dt)
        return floquet.reshape_stroboscopic(traj, self.period, self.samples_per_period)

    def fit(self, X, y=None):
        runs = _as_runs(X)
        snap = dmd.SnapshotSet.concatenate([self._stack(x) for x in runs])
        d = runs[0].shape[1]
        self.model_ = floquet.floquet_dmd_fit(snap, self.period, self.rank, n_states=d)
        self.eigenvalues_ = self.model_.eigenvalues
        self.quasi_energies_ = self.model_.quasi_energies
        self.modes_ = self.model_.stacked_modes
        self.n_features_in_ = d
        return self

    def simulate(self, first_period, n_periods):
        """Rows for ``n_periods + 1`` periods starting from one period of samples ``(s, d)``."""
        check_is_fitted(self)
        first = check_array(first_period, dtype=float)
        z0 = first.reshape(-1)
        Z = floquet.floquet_predict(self.model_, z0, int(n_periods))
        return floquet.unstack(Z, self.n_features_in_).T


class PolynomialControlFeatures(TransformerMixin, BaseEstimator):
    """Monomials of the per-period control coefficients (rows are periods)."""

    def __init__(self, degree=2):
        self.degree = degree

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        self.library_ = aht.build_library(X.T, self.degree)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"expected {self.n_features_in_} coefficient columns, got {X.shape[1]}")
        return self.library_.transform(X.T).T

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        if input_features is None:
            return np.asarray(self.library_.names, dtype=object)
        lib = aht.build_library(np.zeros((self.n_features_in_, 1)), self.degree, list(input_features))
        return np.asarray(lib.names, dtype=object)


class AHTBiDMD(BiDMD):
    """Stroboscopic bilinear DMD driven by polynomial features of Fourier coefficients.

    ``X`` rows are states at control-period boundaries and ``C`` rows the
    coefficient vectors ``[a_1..a_K, b_1..b_K]`` of the period that follows.
    """

    def __init__(self, degree=2, rank=None, rank_hat=None, period=1.0):
        self.degree = degree
        self.rank = rank
        self.rank_hat = rank_hat
        self.period = period

    @property
    def dt(self):
        return self.period

    def fit(self, X, C):
        cs = _as_runs(C, "C")
        self.features_ = PolynomialControlFeatures(self.degree).fit(np.vstack(cs))
        thetas = [self.features_.transform(c) for c in cs]
        snap = _pair_runs(X, thetas)
        self.model_ = aht.aht_bidmd_fit(
            snap.X, snap.Xp, snap.U, self.rank, self.rank_hat, dt=self.period,
            feature_names=self.features_.library_.names,
        )
        self._set_fitted(snap.n_states)
        self.feature_names_ = self.model_.feature_names
        return self

    def predict(self, X, C=None):
        check_is_fitted(self)
        if C is None:
            raise ShapeError("predictions need the control coefficients C")
        return super().predict(X, self.features_.transform(C))

    def score(self, X, C=None, sample_weight=None):
        return super().score(X, C)

    def simulate(self, x0, C):
        check_is_fitted(self)
        return super().simulate(x0, self.features_.transform(C))

