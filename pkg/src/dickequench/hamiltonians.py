"""Dicke-model Hamiltonians and the closed-form quench thresholds.

Units: hbar = 1, the field frequency ``omega`` sets the time scale. All
Hamiltonians act either on the Fock space alone (field-only reductions) or on
Fock (x) spin with the ordering documented in :mod:`dickequench.fock_algebra`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import RegimeError, SubcriticalCouplingError
from .fock_algebra import (
    FockSpace,
    Operator,
    ProductSpace,
    SpinSpace,
    destroy,
    identity,
    number_operator,
    spin_operators,
    tensor,
)


class ModelKind(str, enum.Enum):
    FULL_DICKE = "full_dicke"
    EFFECTIVE_SPIN_FIELD = "effective_spin_field"
    FIELD_ONLY = "field_only"
    QUADRATURE_OSCILLATOR = "quadrature_oscillator"

    @property
    def has_spin(self) -> bool:
        return self in (ModelKind.FULL_DICKE, ModelKind.EFFECTIVE_SPIN_FIELD)

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "dicke": cls.FULL_DICKE,
            "full": cls.FULL_DICKE,
            "effective": cls.EFFECTIVE_SPIN_FIELD,
            "field": cls.FIELD_ONLY,
            "quadrature": cls.QUADRATURE_OSCILLATOR,
            "inverted_oscillator": cls.QUADRATURE_OSCILLATOR,
        }
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters plus Fock truncation.

    ``well_fraction`` is the fraction of the well-minimum position taken as
    the critical position x_c (0.25 by default).
    """

    omega: float = 1.0
    Omega: float = 1.0
    n_spins: int = 1
    g: float = 0.0
    kappa: float = 0.0
    gamma: float = 0.0
    cutoff: int = 40
    well_fraction: float = 0.25

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega!r}")
        if not self.Omega > 0:
            raise ValueError(f"Omega must be > 0, got {self.Omega!r}")
        if not self.g >= 0:
            raise ValueError(f"g must be >= 0, got {self.g!r}")
        if not self.kappa >= 0 or not self.gamma >= 0:
            raise ValueError("damping rates kappa, gamma must be >= 0")
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be an integer >= 1, got {self.n_spins!r}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"cutoff must be an integer >= 1, got {self.cutoff!r}")
        if not 0 < self.well_fraction <= 1:
            raise ValueError("well_fraction must lie in (0, 1]")

    @classmethod
    def from_ratios(cls, thermo: float, g_over_gc: float, *, omega=1.0, n_spins=1, **kw) -> "ModelParams":
        """Build from sqrt(Omega N / omega) and g/g_c."""
        Omega = thermo**2 * omega / n_spins
        g = g_over_gc * math.sqrt(omega * Omega)
        return cls(omega=omega, Omega=Omega, n_spins=n_spins, g=g, **kw)

    @property
    def g_c(self) -> float:
        return math.sqrt(self.omega * self.Omega)

    @property
    def g_ratio(self) -> float:
        return self.g / self.g_c

    @property
    def thermo(self) -> float:
        """sqrt(Omega N / omega); the effective description is exact as it diverges."""
        return math.sqrt(self.Omega * self.n_spins / self.omega)

    @property
    def fock(self) -> FockSpace:
        return FockSpace(self.cutoff)

    @property
    def spin(self) -> SpinSpace:
        return SpinSpace(self.n_spins)

    @property
    def product(self) -> ProductSpace:
        return ProductSpace(self.fock, self.spin)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def _field_ops(space: FockSpace):
    a = destroy(space).tocsr()
    ad = a.conj().T.tocsr()
    n = number_operator(space).tocsr()
    # (a + a^dagger)^2 in normal order, so the truncated top level keeps 2n + 1
    x2 = a @ a + ad @ ad + 2 * n + sp.identity(space.dim, format="csr")
    return a, ad, n, x2


def build_hamiltonian(kind, p: ModelParams) -> Operator:
    kind = ModelKind.parse(kind)
    fock = p.fock
    a, ad, n, xx = _field_ops(fock)

    if kind is ModelKind.FULL_DICKE or kind is ModelKind.EFFECTIVE_SPIN_FIELD:
        spin = p.spin
        Sx, _, Sz, _ = spin_operators(spin)
        n_op = Operator(n, fock)
        one_f = identity(fock)
        one_s = identity(spin)
        H = p.omega * tensor(n_op, one_s) + p.Omega * tensor(one_f, Sz)
        if kind is ModelKind.FULL_DICKE:
            H = H + (p.g / math.sqrt(p.n_spins)) * tensor(Operator(a + ad, fock), Sx)
        else:
            H = H + (p.g**2 / (2 * p.Omega * p.n_spins)) * tensor(Operator(xx, fock), Sz)
        return H

    if kind is ModelKind.FIELD_ONLY:
        w = p.omega - p.g**2 / (2 * p.Omega)
        sq = p.g**2 / (4 * p.Omega)
        return Operator(w * n - sq * (a @ a + ad @ ad), fock)

    # quadrature form: (omega/2) P^2 + (omega^2 - omega g^2/Omega)/(2 omega) X^2
    one = sp.identity(fock.dim, format="csr")
    X2 = 0.5 * xx
    P2 = 0.5 * (2 * n + one - a @ a - ad @ ad)
    stiffness = (p.omega**2 - p.omega * p.g**2 / p.Omega) / (2 * p.omega)
    return Operator(0.5 * p.omega * P2 + stiffness * X2, fock)


def quadrature_shift(p: ModelParams) -> float:
    """Constant separating the quadrature form from the field-only form."""
    return 0.5 * (p.omega - p.g**2 / (2 * p.Omega))


def parity_operator(p: ModelParams) -> Operator:
    """exp(i pi (a^dagger a + S_z + N/2)); diagonal with entries +-1."""
    n = np.arange(p.fock.dim)[:, None]
    k = np.arange(p.spin.dim)[None, :]  # k = m + N/2
    signs = np.where((n + k) % 2 == 0, 1.0, -1.0).ravel().astype(complex)
    return Operator(sp.diags(signs, 0, format="csr"), p.product)


def critical_coupling(p: ModelParams) -> float:
    return p.g_c


def effective_frequency(p: ModelParams) -> complex:
    """omega sqrt(1 - g^2/g_c^2), on the positive-imaginary branch above g_c."""
    r = 1.0 - (p.g / p.g_c) ** 2
    if r >= 0:
        return complex(p.omega * math.sqrt(r), 0.0)
    return complex(0.0, p.omega * math.sqrt(-r))


def _rotation_generator_eig(space: FockSpace, spin: SpinSpace):
    # eigen-decompositions of (a + a^dagger) and S_y; their Kronecker product diagonalizes the generator
    a = destroy(space).toarray()
    x_vals, x_vecs = np.linalg.eigh(a + a.conj().T)
    _, Sy, _, _ = spin_operators(spin)
    s_vals, s_vecs = np.linalg.eigh(Sy.toarray())
    return x_vals, x_vecs, s_vals, s_vecs


def polaron_transform(p: ModelParams) -> Operator:
    """U = exp{i (g / (sqrt(N) Omega)) (a + a^dagger) S_y} as a dense unitary."""
    theta = p.g / (math.sqrt(p.n_spins) * p.Omega)
    x_vals, x_vecs, s_vals, s_vecs = _rotation_generator_eig(p.fock, p.spin)
    V = np.kron(x_vecs, s_vecs)
    phases = np.exp(1j * theta * np.outer(x_vals, s_vals).ravel())
    U = (V * phases) @ V.conj().T
    return Operator(U, p.product)


def double_well_potential(x, p: ModelParams):
    """V(x) = (omega/2) x^2 - (1/2) sqrt(N) sqrt(2 g^2 x^2 + N Omega^2)."""
    x = np.asarray(x, dtype=float)
    N = p.n_spins
    v = 0.5 * p.omega * x**2 - 0.5 * math.sqrt(N) * np.sqrt(2 * p.g**2 * x**2 + N * p.Omega**2)
    return float(v) if v.ndim == 0 else v


def _require_supercritical(p: ModelParams, what: str):
    if p.g <= p.g_c:
        raise SubcriticalCouplingError(f"{what} requires g > g_c (g/g_c = {p.g_ratio:.6g})")


def well_minima(p: ModelParams) -> float:
    """Positive minimum x0 of the double well; the pair is (-x0, x0)."""
    _require_supercritical(p, "well_minima")
    r2 = (p.g / p.g_c) ** 2
    return math.sqrt(p.n_spins * p.Omega / (2 * p.omega)) * math.sqrt(r2 - 1.0 / r2)


def critical_position(p: ModelParams) -> float:
    return p.well_fraction * well_minima(p)


def critical_photon_number(p: ModelParams) -> float:
    """Photon bound below which the inverted-oscillator picture holds.

    With the default quarter-minimum rule this is
    (1/32)(N Omega/omega)(g^2/g_c^2 - g_c^2/g^2).
    """
    _require_supercritical(p, "critical_photon_number")
    r2 = (p.g / p.g_c) ** 2
    f = p.well_fraction
    return 0.5 * f**2 * (p.n_spins * p.Omega / p.omega) * (r2 - 1.0 / r2)


def critical_time(p: ModelParams) -> float:
    """Logarithmic critical time ln[2 sqrt(n_c)] / omega with n_c taken at g = sqrt(2) g_c.

    For the default quarter-minimum rule the argument is
    sqrt(3/16) sqrt(N Omega / omega). Independent of p.g; valid for omega t > 1.
    """
    f = p.well_fraction
    nc = 0.75 * f**2 * p.n_spins * p.Omega / p.omega
    arg = 2.0 * math.sqrt(nc)
    if arg <= math.e:
        raise RegimeError(
            f"log critical-time formula needs its argument > e (got {arg:.4g}); use critical_time_exact"
        )
    return math.log(arg) / p.omega


def critical_time_exact(p: ModelParams) -> float:
    """Time at which the vacuum-quench photon number first reaches critical_photon_number.

    Exact inversion of the inverted-oscillator photon law at the actual g;
    at g = sqrt(2) g_c this is arcsinh(sqrt(n_c)) / omega.
    """
    nc = critical_photon_number(p)
    w = p.omega
    r = (p.g / p.g_c) ** 2 - 1.0
    mu = w * math.sqrt(r)
    return math.asinh(2.0 * math.sqrt(nc) / (w / mu + mu / w)) / mu
