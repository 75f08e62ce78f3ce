"""Truncated bosonic and collective-spin operators, states and tensor products.

Basis ordering is fixed everywhere in the package: on the product space the
field (Fock) index is the outer/major index and the spin index is the
inner/minor one, i.e. ``index = n * (N + 1) + k`` where ``k`` enumerates the
S_z eigenvalues ``-N/2, -N/2 + 1, ..., N/2`` in ascending order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from .errors import SpaceMismatchError, TruncationLossError

HERMITIAN_RTOL = 1e-12
NORM_TOL = 1e-10
COHERENT_DEFICIT_TOL = 1e-8


@dataclass(frozen=True)
class FockSpace:
    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"Fock cutoff must be an integer >= 1, got {self.cutoff!r}")

    @property
    def dim(self) -> int:
        return self.cutoff + 1


@dataclass(frozen=True)
class SpinSpace:
    """Symmetric (J = N/2) sector of N spin-1/2 constituents."""

    n_spins: int

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be an integer >= 1, got {self.n_spins!r}")

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    @property
    def j(self) -> float:
        return self.n_spins / 2


@dataclass(frozen=True)
class ProductSpace:
    fock: FockSpace
    spin: SpinSpace

    @property
    def dim(self) -> int:
        return self.fock.dim * self.spin.dim


Space = Union[FockSpace, SpinSpace, ProductSpace]


def fock_part(space: Space) -> FockSpace:
    if isinstance(space, FockSpace):
        return space
    if isinstance(space, ProductSpace):
        return space.fock
    raise SpaceMismatchError(f"{space!r} has no field factor")


def _as_matrix(m):
    if sp.issparse(m):
        return m.tocsr()
    return np.asarray(m)


@dataclass(frozen=True, eq=False)
class Operator:
    """A square matrix on a tagged space. Storage may be dense or CSR."""

    matrix: object
    space: Space

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SpaceMismatchError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != self.space.dim:
            raise SpaceMismatchError(
                f"matrix dimension {m.shape[0]} does not match {self.space!r} (dim {self.space.dim})"
            )

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.array(self.matrix)

    def tocsr(self) -> sp.csr_matrix:
        return self.matrix.tocsr() if self.is_sparse else sp.csr_matrix(self.matrix)

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def hermiticity_error(self) -> float:
        """Relative Frobenius norm of A - A^dagger."""
        diff = self.matrix - self.matrix.conj().T
        if self.is_sparse:
            num = sp.linalg.norm(diff)
            den = sp.linalg.norm(self.matrix)
        else:
            num = np.linalg.norm(diff)
            den = np.linalg.norm(self.matrix)
        return float(num / den) if den > 0 else float(num)

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return self.hermiticity_error() <= rtol

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space!r} vs {other.space!r}")

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.matrix + other.matrix, self.space)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.matrix - other.matrix, self.space)

    def __neg__(self):
        return Operator(-self.matrix, self.space)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator) or not np.isscalar(scalar):
            return NotImplemented
        return Operator(self.matrix * scalar, self.space)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.matrix / scalar, self.space)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix @ other.matrix, self.space)
        return self.matrix @ other


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    space: Space

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        object.__setattr__(self, "amplitudes", v)
        if v.size != self.space.dim:
            raise SpaceMismatchError(f"state of size {v.size} on {self.space!r}")
        norm2 = float(np.vdot(v, v).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")

    @classmethod
    def _wrap(cls, amplitudes, space):
        # skip validation for kets produced by a propagator (norm drift is tracked there)
        obj = object.__new__(cls)
        object.__setattr__(obj, "amplitudes", np.asarray(amplitudes, dtype=complex))
        object.__setattr__(obj, "space", space)
        return obj

    def expect(self, op: Operator) -> complex:
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def to_density(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.space)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Dense mixed state. Positivity is only checked up to ``EIG_CHECK_MAX_DIM``."""

    matrix: np.ndarray
    space: Space

    EIG_CHECK_MAX_DIM = 4096

    def __post_init__(self):
        m = np.asarray(self.matrix.toarray() if sp.issparse(self.matrix) else self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d = self.space.dim
        if m.shape != (d, d):
            raise SpaceMismatchError(f"density matrix of shape {m.shape} on {self.space!r}")
        herm = np.max(np.abs(m - m.conj().T)) if d else 0.0
        if herm > 1e-10:
            raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"density matrix trace {tr!r} != 1")
        if d <= self.EIG_CHECK_MAX_DIM:
            lo = np.linalg.eigvalsh(m)[0]
            if lo < -1e-8:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")

    @classmethod
    def _wrap(cls, matrix, space):
        obj = object.__new__(cls)
        object.__setattr__(obj, "matrix", np.asarray(matrix, dtype=complex))
        object.__setattr__(obj, "space", space)
        return obj

    def expect(self, op: Operator) -> complex:
        # tr(A rho) = sum_ij A_ij rho_ji
        A = op.matrix
        if sp.issparse(A):
            return complex((A.multiply(self.matrix.T)).sum())
        return complex(np.sum(A * self.matrix.T))


# ---------------------------------------------------------------- field


def destroy(space: FockSpace) -> Operator:
    n = np.arange(1, space.dim)
    return Operator(sp.diags(np.sqrt(n), 1, shape=(space.dim, space.dim), format="csr", dtype=complex), space)


def create(space: FockSpace) -> Operator:
    return destroy(space).dag()


def number_operator(space: FockSpace) -> Operator:
    return Operator(sp.diags(np.arange(space.dim, dtype=complex), 0, format="csr"), space)


def quadratures(space: FockSpace) -> tuple[Operator, Operator]:
    """X = (a + a^dagger)/sqrt(2) and P = (a - a^dagger)/(sqrt(2) i)."""
    a = destroy(space)
    ad = a.dag()
    X = (a + ad) / np.sqrt(2)
    P = (a - ad) / (np.sqrt(2) * 1j)
    return X, P


def identity(space: Space) -> Operator:
    return Operator(sp.identity(space.dim, dtype=complex, format="csr"), space)


# ----------------------------------------------------------------- spin


def spin_operators(space: SpinSpace):
    """Return (Sx, Sy, Sz, Sminus) for spin J = N/2, S_z ascending."""
    j = space.j
    m = np.arange(space.dim) - j
    d = space.dim
    # S_+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>
    up = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    splus = sp.diags(up, -1, shape=(d, d), format="csr", dtype=complex)
    sminus = splus.conj().T.tocsr()
    Sx = Operator((splus + sminus) / 2, space)
    Sy = Operator((splus - sminus) / 2j, space)
    Sz = Operator(sp.diags(m.astype(complex), 0, format="csr"), space)
    Sm = Operator(sminus, space)
    return Sx, Sy, Sz, Sm


# -------------------------------------------------------------- products


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product a (field, outer) x b (spin, inner)."""
    if not isinstance(a.space, FockSpace) or not isinstance(b.space, SpinSpace):
        raise SpaceMismatchError(
            f"tensor expects (FockSpace, SpinSpace) operands, got ({a.space!r}, {b.space!r})"
        )
    if a.matrix.shape[0] != a.space.dim or b.matrix.shape[0] != b.space.dim:
        raise SpaceMismatchError("operand dimension does not match its declared space")
    out = ProductSpace(a.space, b.space)
    if a.is_sparse or b.is_sparse:
        return Operator(sp.kron(a.tocsr(), b.tocsr(), format="csr"), out)
    return Operator(np.kron(a.matrix, b.matrix), out)


def embed_field(op: Operator, space: ProductSpace) -> Operator:
    """op (on the field) tensored with the spin identity."""
    if op.space != space.fock:
        raise SpaceMismatchError(f"{op.space!r} is not the field factor of {space!r}")
    return tensor(op, identity(space.spin))


def embed_spin(op: Operator, space: ProductSpace) -> Operator:
    if op.space != space.spin:
        raise SpaceMismatchError(f"{op.space!r} is not the spin factor of {space!r}")
    return tensor(identity(space.fock), op)


# ---------------------------------------------------------------- states


def fock_state(n: int, space: FockSpace) -> StateVector:
    if not 0 <= n <= space.cutoff:
        raise ValueError(f"level {n} outside 0..{space.cutoff}")
    v = np.zeros(space.dim, dtype=complex)
    v[n] = 1.0
    return StateVector(v, space)


def vacuum_spin_down(fock: FockSpace, spin: SpinSpace) -> StateVector:
    """|0> (x) |m = -N/2>."""
    space = ProductSpace(fock, spin)
    v = np.zeros(space.dim, dtype=complex)
    v[0] = 1.0
    return StateVector(v, space)


def coherent_amplitudes(alpha, cutoff: int) -> np.ndarray:
    """Unnormalized coherent-state amplitudes on levels 0..cutoff.

    ``alpha`` may be an array; the Fock index is appended as the last axis.
    The values are exactly the projections <n|alpha> of the untruncated state.
    """
    alpha = np.asarray(alpha, dtype=complex)
    out = np.empty(alpha.shape + (cutoff + 1,), dtype=complex)
    out[..., 0] = np.exp(-0.5 * np.abs(alpha) ** 2)
    sq = np.sqrt(np.arange(1, cutoff + 1))
    for n in range(1, cutoff + 1):
        out[..., n] = out[..., n - 1] * alpha / sq[n - 1]
    return out


def coherent_state(alpha: complex, space: FockSpace) -> StateVector:
    c = coherent_amplitudes(alpha, space.cutoff)
    kept = float(np.vdot(c, c).real)
    deficit = 1.0 - kept
    if deficit > COHERENT_DEFICIT_TOL:
        raise TruncationLossError(
            f"|alpha|^2 = {abs(alpha) ** 2:.4g} loses {deficit:.3e} of its norm at cutoff {space.cutoff}",
            deficit=deficit,
        )
    return StateVector(c / np.sqrt(kept), space)
