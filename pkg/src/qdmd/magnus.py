"""Magnus expansion of a periodically driven linear generator.

For ``dx/dt = L(t) x`` with ``L(t + T) = L(t)`` the one-period map is
``exp(T L_F)``. The Magnus series writes ``L_F`` as a sum of constant
terms whose size falls off with the period::

    L_F^(0) = 1/T   int L
    L_F^(1) = 1/(2T) int int_{t2<t1} [L(t1), L(t2)]
    L_F^(2) = 1/(6T) int int int_{t3<t2<t1} [L1,[L2,L3]] + [L3,[L2,L1]]

With ``L(t) = sum_a c_a(t) G_a`` every term reduces to scalar nested
integrals of the coefficients times fixed commutators, so only the scalar
integrals need quadrature.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import expm, logm

from ._validation import as_square, frozen
from .bloch import rotation_generators
from .exceptions import AccuracyError, InvalidHarmonicError, ShapeError
from .simulator import propagator

__all__ = [
    "MagnusExpansion",
    "magnus_floquet_analytic",
    "magnus_floquet_numeric",
    "floquet_generator",
]

MAX_ORDER = 3
_PANEL_NODES = 16


@dataclass(frozen=True)
class MagnusExpansion:
    """Truncated Magnus series ``L_F ~ sum_j terms[j]``.

    ``omega_powers[j]`` is the power of the drive frequency the term scales
    with (``0, -1, -2``). ``exact_generator`` is the principal
    ``log(monodromy) / T`` when it was computed.
    """

    terms: tuple
    period: float
    omega_powers: tuple = (0, -1, -2)
    exact_generator: Optional[np.ndarray] = field(default=None, compare=False)

    @property
    def order(self):
        return len(self.terms)

    def generator(self, order=None):
        order = self.order if order is None else int(order)
        if not 1 <= order <= self.order:
            raise ValueError(f"order must be in 1..{self.order}, got {order}")
        return sum(self.terms[:order])

    def monodromy(self, order=None):
        return expm(self.period * self.generator(order))


def floquet_generator(monodromy, period):
    """Principal real logarithm of a one-period map divided by the period."""
    G = logm(np.asarray(monodromy, dtype=float)) / period
    if np.max(np.abs(G.imag), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(G))):
        raise AccuracyError("monodromy has no real principal logarithm")
    return np.real(G)


def magnus_floquet_analytic(u, v, k, omega):
    """Closed-form terms for ``H = pi s3 + (u cos(k W t) + v sin(k W t)) s1``.

    The generator is ``2 pi J_z + 2 u(t) J_x`` over the period ``T = 2 pi / W``::

        L_F^(0) = 2 pi J_z
        L_F^(1) = (4 pi v / (k W)) J_y
        L_F^(2) = -(2 pi (u^2 + 3 v^2) J_z + 8 pi^2 u J_x) / (k W)^2
    """
    if int(k) != k or k <= 0:
        raise InvalidHarmonicError(f"harmonic index must be a positive integer, got {k}")
    if not omega > 0:
        raise InvalidHarmonicError("base frequency must be positive")
    Jx, Jy, Jz = rotation_generators()
    kw = k * omega
    terms = (
        2 * np.pi * Jz,
        (4 * np.pi * v / kw) * Jy,
        -(2 * np.pi * (u**2 + 3 * v**2) * Jz + 8 * np.pi**2 * u * Jx) / kw**2,
    )
    return MagnusExpansion(tuple(frozen(t) for t in terms), 2 * np.pi / omega)


def _panel_rule(n_nodes, period):
    """Composite Gauss-Legendre nodes plus a cumulative-integration operator.

    ``cum @ f(nodes)`` approximates ``int_0^{t_i} f`` at every node, using the
    exact integral of the per-panel interpolating polynomial.
    """
    q = _PANEL_NODES
    n_panels = max(1, int(np.ceil(n_nodes / q)))
    x, w = legendre.leggauss(q)
    V = legendre.legvander(x, q - 1)
    coeff = np.linalg.inv(V)
    # integrals of P_m from -1 to x_i
    Pint = np.column_stack([
        legendre.legval(x, legendre.legint(np.eye(q)[m], lbnd=-1)) for m in range(q)
    ])
    local = Pint @ coeff
    h = period / n_panels
    nodes = (np.arange(n_panels)[:, None] * h + (x[None, :] + 1) * h / 2).ravel()
    n = nodes.size
    cum = np.zeros((n, n))
    for p in range(n_panels):
        rows = slice(p * q, (p + 1) * q)
        for pp in range(p):
            cum[rows, pp * q:(pp + 1) * q] = w * h / 2
        cum[rows, p * q:(p + 1) * q] = local * h / 2
    weights = np.tile(w * h / 2, n_panels)
    return nodes, weights, cum


def _scalar_integrals(coef, weights, cum):
    """Nested integrals of the coefficient functions over the ordered simplex.

    Returns ``m0[a] = int c_a``, ``I[a, b] = int_{t2<t1} c_a(t1) c_b(t2)``
    and ``J[a, b, g] = int_{t3<t2<t1} c_a(t1) c_b(t2) c_g(t3)``.
    """
    m0 = coef @ weights
    F = coef @ cum.T  # F[g, i] = int_0^{t_i} c_g
    I = np.einsum("ai,bi,i->ab", coef, F, weights)
    # G[b, g, i] = int_0^{t_i} c_b(s) F_g(s) ds
    G = np.einsum("ij,bj,gj->bgi", cum, coef, F)
    J = np.einsum("ai,bgi,i->abg", coef, G, weights)
    return m0, I, J


def _terms(gens, coef, weights, cum, period, order):
    m0, I, J = _scalar_integrals(coef, weights, cum)
    terms = [np.tensordot(m0, gens, axes=1) / period]
    if order >= 2:
        comm = np.einsum("aij,bjk->abik", gens, gens)
        comm = comm - comm.transpose(1, 0, 2, 3)
        terms.append(np.einsum("ab,abik->ik", I, comm) / (2 * period))
    if order >= 3:
        # [G_a, [G_b, G_g]] + [G_g, [G_b, G_a]]
        nested = np.einsum("aij,bgjk->abgik", gens, comm) - np.einsum("bgij,ajk->abgik", comm, gens)
        sym = nested + nested.transpose(2, 1, 0, 3, 4)
        terms.append(np.einsum("abg,abgik->ik", J, sym) / (6 * period))
    return terms


def magnus_floquet_numeric(L0, L_ctrl, u, period, order=MAX_ORDER, n_nodes=256, t0=0.0,
                           exact=True):
    """Magnus terms of ``L(t) = L0 + sum_i u_i(t) L_ctrl[i]`` over one period.

    ``order`` counts terms (``1..3``). The scalar nested integrals use a
    composite Gauss-Legendre rule with ``n_nodes`` nodes; the same terms are
    recomputed on half the nodes and an order-of-magnitude disagreement
    raises :class:`AccuracyError`. With ``exact=True`` the principal
    ``log(monodromy) / T`` is attached for reference.
    """
    if not 1 <= int(order) <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
    if n_nodes < 2 * _PANEL_NODES:
        raise ValueError(f"need at least {2 * _PANEL_NODES} quadrature nodes")
    L0 = np.asarray(getattr(L0, "L", L0), dtype=float)
    L0 = as_square(L0, "L0")
    d = L0.shape[0]
    ctrl = [np.asarray(getattr(g, "L", g), dtype=float) for g in _as_list(L_ctrl)]
    controls = _as_list(u)
    if len(ctrl) != len(controls):
        raise ShapeError(f"{len(ctrl)} control generators but {len(controls)} control signals")
    for g in ctrl:
        if g.shape != (d, d):
            raise ShapeError(f"control generator must be {d}x{d}, got {g.shape}")
    gens = np.stack([L0] + ctrl)

    def evaluate(n):
        nodes, weights, cum = _panel_rule(n, period)
        coef = np.vstack([np.ones_like(nodes)] + [np.asarray(c(t0 + nodes), dtype=float) * np.ones_like(nodes) for c in controls])
        return _terms(gens, coef, weights, cum, period, int(order))

    fine = evaluate(n_nodes)
    coarse = evaluate(n_nodes // 2)
    scale = max(np.linalg.norm(t) for t in fine)
    for j, (a, b) in enumerate(zip(fine, coarse)):
        diff = np.linalg.norm(a - b)
        if diff > 1e-6 * scale and diff > 0.1 * np.linalg.norm(a):
            raise AccuracyError(
                f"Magnus term {j} did not converge: halving the nodes changes it by {diff:.3e}"
            )
    exact_gen = None
    if exact:
        P = propagator(L0, ctrl, controls, t0, t0 + period)
        exact_gen = frozen(floquet_generator(P, period))
    return MagnusExpansion(tuple(frozen(t) for t in fine), float(period),
                           exact_generator=exact_gen)


def _as_list(x):
    if isinstance(x, (list, tuple)):
        return list(x)
    if isinstance(x, np.ndarray) and x.ndim == 3:
        return list(x)
    return [x]
