"""Operator bases, structure constants and Bloch-vector vectorization.

A density matrix on ``C^N`` is written as::

    rho = I / N + sum_j x_j sigma_j / g0,      x_j = Tr(rho sigma_j)

where ``{sigma_j}`` are ``N**2 - 1`` traceless Hermitian matrices with
``Tr(sigma_j sigma_k) = g0 delta_jk``. Two conventions are supported:
``standard_pauli`` (qubit only, ``g0 = 2``) and ``orthonormal`` (generalized
Gell-Mann matrices scaled to ``g0 = 1``).

Everything returned by this module is real; complex arithmetic stays here.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_square, frozen
from .exceptions import (
    InvalidDimensionError,
    InvalidDissipatorError,
    InvalidHamiltonianError,
    InvalidStateError,
    ShapeError,
    UnsupportedConventionError,
)

__all__ = [
    "HermitianBasis",
    "StructureConstants",
    "VectorizedGenerator",
    "build_basis",
    "structure_constants",
    "vectorize_hamiltonian",
    "vectorize_dissipator",
    "density_to_bloch",
    "bloch_to_density",
    "rotation_generators",
    "PAULI",
]

CONVENTIONS = ("standard_pauli", "orthonormal")

PAULI = frozen(
    np.array(
        [
            [[0, 1], [1, 0]],
            [[0, -1j], [1j, 0]],
            [[1, 0], [0, -1]],
        ],
        dtype=complex,
    )
)

_HAMILTONIAN_TRACE_TOL = 1e-10
_HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class HermitianBasis:
    """Traceless Hermitian operator basis with ``Tr(s_j s_k) = gram_factor * delta_jk``."""

    dimension: int
    matrices: np.ndarray
    gram_factor: float
    convention: str

    @property
    def size(self):
        return self.matrices.shape[0]

    def __len__(self):
        return self.size

    def expand(self, coefficients):
        """Return ``sum_j c_j sigma_j`` for a coefficient vector ``c``."""
        coefficients = np.asarray(coefficients)
        if coefficients.shape != (self.size,):
            raise ShapeError(
                f"expected {self.size} basis coefficients, got shape {coefficients.shape}"
            )
        return np.tensordot(coefficients, self.matrices, axes=1)


@dataclass(frozen=True)
class StructureConstants:
    """Commutator (``f``) and anticommutator (``g``) constants of a basis.

    ``[s_j, s_k] = i sum_l f[j, k, l] s_l`` and
    ``{s_j, s_k} = identity_coefficient * delta_jk * I + sum_l g[j, k, l] s_l``
    with ``identity_coefficient = 2 * g0 / N``.
    """

    f: np.ndarray
    g: np.ndarray
    identity_coefficient: float


@dataclass(frozen=True)
class VectorizedGenerator:
    """Real affine generator ``dx/dt = L x + c`` acting on Bloch vectors."""

    L: np.ndarray
    c: np.ndarray

    @property
    def dimension(self):
        return self.L.shape[0]

    @classmethod
    def linear(cls, L):
        L = as_square(L, "L")
        return cls(frozen(np.array(L, dtype=float)), frozen(np.zeros(L.shape[0])))

    def __add__(self, other):
        if not isinstance(other, VectorizedGenerator):
            return NotImplemented
        if other.dimension != self.dimension:
            raise ShapeError("generator dimensions differ")
        return VectorizedGenerator(frozen(self.L + other.L), frozen(self.c + other.c))

    def scaled(self, factor):
        return VectorizedGenerator(frozen(factor * self.L), frozen(factor * self.c))


def _gell_mann(N):
    """Generalized Gell-Mann matrices, normalized to ``Tr(s_j s_k) = 2 delta_jk``."""
    mats = []
    for j in range(N):
        for k in range(j + 1, N):
            sym = np.zeros((N, N), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((N, N), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats.extend([sym, anti])
    for l in range(1, N):
        diag = np.zeros(N)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex))
    return np.array(mats)


def build_basis(N, convention="orthonormal"):
    """Build a traceless Hermitian operator basis for ``C^N``.

    ``standard_pauli`` returns the Pauli matrices (``N == 2`` only, ``g0 = 2``);
    ``orthonormal`` returns generalized Gell-Mann matrices scaled so ``g0 = 1``.
    For ``N == 2`` the orthonormal basis is the Pauli matrices over ``sqrt(2)``,
    in the same order.
    """
    if int(N) != N or N < 2:
        raise InvalidDimensionError(f"Hilbert-space dimension must be an integer >= 2, got {N}")
    N = int(N)
    if convention not in CONVENTIONS:
        raise UnsupportedConventionError(
            f"unknown convention {convention!r}; expected one of {CONVENTIONS}"
        )
    if convention == "standard_pauli":
        if N != 2:
            raise UnsupportedConventionError("standard_pauli is only defined for N = 2")
        return HermitianBasis(2, PAULI, 2.0, convention)
    mats = _gell_mann(N) / np.sqrt(2.0)
    return HermitianBasis(N, frozen(mats), 1.0, convention)


def structure_constants(basis):
    """Extract ``f`` and ``g`` by trace projection onto the basis."""
    s = basis.matrices
    g0 = basis.gram_factor
    prod = np.einsum("jab,kbc->jkac", s, s)
    comm = prod - prod.transpose(1, 0, 2, 3)
    anti = prod + prod.transpose(1, 0, 2, 3)
    # Tr(M s_l) = sum_ab M_ab (s_l)_ba
    f = np.einsum("jkab,lba->jkl", comm, s) / (1j * g0)
    g = np.einsum("jkab,lba->jkl", anti, s) / g0
    return StructureConstants(
        f=frozen(f.real.copy()),
        g=frozen(g.real.copy()),
        identity_coefficient=2.0 * g0 / basis.dimension,
    )


def _check_operator(H, basis, error, what):
    H = np.asarray(H, dtype=complex)
    N = basis.dimension
    if H.shape != (N, N):
        raise error(f"{what} must be {N}x{N}, got shape {H.shape}")
    if np.max(np.abs(H - H.conj().T)) > _HERMITIAN_TOL * max(1.0, np.max(np.abs(H))):
        raise error(f"{what} is not Hermitian")
    return H


def vectorize_hamiltonian(H, basis, constants=None):
    """Real generator of ``d rho/dt = -i [H, rho]`` in Bloch coordinates.

    Uses ``L[j, k] = (1/g0) sum_l Tr(H s_l) f[j, l, k]``. The result is
    antisymmetric, so ``expm(L t)`` is orthogonal.
    """
    H = _check_operator(H, basis, InvalidHamiltonianError, "Hamiltonian")
    if abs(np.trace(H)) > _HAMILTONIAN_TRACE_TOL:
        raise InvalidHamiltonianError(
            f"Hamiltonian must be traceless (|Tr H| = {abs(np.trace(H)):.3e})"
        )
    if constants is None:
        constants = structure_constants(basis)
    h = np.einsum("ab,lba->l", H, basis.matrices).real
    L = np.einsum("l,jlk->jk", h, constants.f) / basis.gram_factor
    return VectorizedGenerator.linear(L)


def _gksl(rho, C, D_ops):
    out = np.zeros_like(rho, dtype=complex)
    for j, Dj in enumerate(D_ops):
        for k, Dk in enumerate(D_ops):
            if C[j, k] == 0:
                continue
            Dk_dag = Dk.conj().T
            out += 0.5 * C[j, k] * (
                Dj @ rho @ Dk_dag - rho @ Dk_dag @ Dj + Dj @ rho @ Dk_dag - Dk_dag @ Dj @ rho
            )
    return out


def vectorize_dissipator(C, D_ops, basis):
    """Bloch-coordinate form ``(L_D, c)`` of the GKSL dissipator.

    The dissipator is
    ``1/2 sum_jk C_jk ([D_j, rho D_k^+] + [D_j rho, D_k^+])``; it is projected
    onto the basis column by column, which works for either normalization
    convention.
    """
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    D_ops = np.asarray(D_ops, dtype=complex)
    if D_ops.ndim == 2:
        D_ops = D_ops[None]
    N = basis.dimension
    if D_ops.shape[1:] != (N, N):
        raise InvalidDissipatorError(f"dissipation operators must be {N}x{N}")
    if C.shape != (len(D_ops), len(D_ops)):
        raise InvalidDissipatorError(
            f"rate matrix must be {len(D_ops)}x{len(D_ops)}, got {C.shape}"
        )
    if np.max(np.abs(C - C.conj().T), initial=0.0) > _HERMITIAN_TOL:
        raise InvalidDissipatorError("rate matrix must be Hermitian")
    if np.linalg.eigvalsh(C).min() < -1e-10:
        raise InvalidDissipatorError("rate matrix must be positive semi-definite")

    g0 = basis.gram_factor
    s = basis.matrices
    n = basis.size
    L = np.empty((n, n))
    for k in range(n):
        image = _gksl(s[k] / g0, C, D_ops)
        L[:, k] = np.einsum("ab,jba->j", image, s).real
    image = _gksl(np.eye(N) / N, C, D_ops)
    c = np.einsum("ab,jba->j", image, s).real
    return VectorizedGenerator(frozen(L), frozen(c))


def density_to_bloch(rho, basis):
    rho = np.asarray(rho, dtype=complex)
    N = basis.dimension
    if rho.shape != (N, N):
        raise InvalidStateError(f"density matrix must be {N}x{N}, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > _HERMITIAN_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise InvalidStateError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    return np.einsum("ab,jba->j", rho, basis.matrices).real


def bloch_to_density(x, basis):
    x = np.asarray(x, dtype=float)
    if x.shape != (basis.size,):
        raise InvalidStateError(f"Bloch vector must have length {basis.size}, got {x.shape}")
    N = basis.dimension
    return np.eye(N, dtype=complex) / N + basis.expand(x) / basis.gram_factor


def rotation_generators():
    """The three ``so(3)`` generators ``(J_x, J_y, J_z)``.

    ``J_x`` generates rotation about the first Bloch axis, etc. With the
    standard Pauli basis, ``vectorize_hamiltonian(sigma_j)`` equals
    ``2 * J_j``.
    """
    Jx = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    Jy = np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], dtype=float)
    Jz = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], dtype=float)
    return Jx, Jy, Jz
