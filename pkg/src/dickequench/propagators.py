"""Time evolution: closed unitary dynamics, the Lindblad master equation,
echo overlaps and the exact Gaussian oracle for quadratic field Hamiltonians.

Both propagators use a Chebyshev expansion of the exponential on long runs.
For a generator A with spectrum inside c + R*[-i, i] (widened into an ellipse
for the dissipative case) and Y = (A - c)/R,

    exp(tA) v = exp(tc) sum_k (2 - delta_k0) J_k(R t) phi_k,
    phi_0 = v, phi_1 = Y v, phi_{k+1} = 2 Y phi_k + phi_{k-1},

which for A = -iH is the usual Bessel expansion of the Schroedinger propagator.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.special import jv

from . import _kernels
from .errors import NumericalFailure, PositivityWarning, SpaceMismatchError, TruncationLossError
from .fock_algebra import (
    DensityOperator,
    FockSpace,
    Operator,
    ProductSpace,
    StateVector,
    destroy,
    embed_field,
    embed_spin,
    spin_operators,
)
from .hamiltonians import ModelParams, effective_frequency
from .observables import RECORD_FIELDS, ObservableSet

TAIL_TOLERANCE = 1e-6
EIGH_MAX_DIM = 2500
BREACH_MODES = ("truncate", "continue", "raise")


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing output times (units of 1/omega), all >= 0."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        if s.size == 0:
            raise ValueError("time grid needs at least one sample")
        if not np.all(np.isfinite(s)) or s[0] < 0:
            raise ValueError("time samples must be finite and >= 0")
        if np.any(np.diff(s) <= 0):
            raise ValueError("time samples must be strictly increasing")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def uniform(cls, t_end: float, n: int, t_start: float = 0.0) -> "TimeGrid":
        if n < 2:
            return cls(np.array([t_start]))
        return cls(np.linspace(t_start, t_end, n))

    @property
    def t_start(self) -> float:
        return float(self.samples[0])

    @property
    def t_end(self) -> float:
        return float(self.samples[-1])

    def __len__(self):
        return self.samples.size


@dataclass(eq=False)
class Trajectory:
    """Per-sample observables. After a truncation breach ``times`` is shorter than the grid."""

    grid: TimeGrid
    times: np.ndarray
    records: dict
    states: list | None = None
    breached: bool = False
    breach_time: float | None = None
    tail_tolerance: float = TAIL_TOLERANCE
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.records[name]

    def __len__(self):
        return self.times.size

    @property
    def complete(self) -> bool:
        return self.times.size == len(self.grid)

    @property
    def reliable(self) -> np.ndarray:
        return self.records["tail"] <= self.tail_tolerance


class _Recorder:
    def __init__(self, grid, space, retain, tail_tolerance, on_breach):
        if on_breach not in BREACH_MODES:
            raise ValueError(f"on_breach must be one of {BREACH_MODES}")
        self.grid = grid
        self.space = space
        self.obs = ObservableSet(space)
        self.rows = []
        self.times = []
        self.states = [] if retain is not False else None
        # True keeps every sample; a sequence of times keeps only those (None elsewhere)
        self.keep = None if isinstance(retain, bool) else np.asarray(retain, dtype=float)
        self.tol = tail_tolerance
        self.on_breach = on_breach
        self.breach_time = None

    def add(self, t, rec, state=None) -> bool:
        """Store one sample; False means stop propagating."""
        if rec["tail"] > self.tol and self.breach_time is None:
            self.breach_time = float(t)
            if self.on_breach == "raise":
                raise TruncationLossError(
                    f"tail population {rec['tail']:.3e} exceeds {self.tol:g} at t = {t:g}", rec["tail"]
                )
            if self.on_breach == "truncate":
                return False
        self.rows.append(rec)
        self.times.append(float(t))
        if self.states is not None:
            self.states.append(state)
        return True

    def wants(self, t) -> bool:
        if self.states is None:
            return False
        return self.keep is None or bool(np.any(np.isclose(t, self.keep, rtol=1e-12, atol=1e-12)))

    def finish(self, **meta) -> Trajectory:
        records = {k: np.array([r[k] for r in self.rows], dtype=float) for k in RECORD_FIELDS}
        return Trajectory(
            grid=self.grid,
            times=np.array(self.times),
            records=records,
            states=self.states,
            breached=self.breach_time is not None,
            breach_time=self.breach_time,
            tail_tolerance=self.tol,
            meta=meta,
        )


def _check_norm(value, t, what, tol=1e-6):
    if abs(value - 1.0) > tol:
        raise NumericalFailure(f"{what} drifted to {value:.12g} at t = {t:g}")


# ------------------------------------------------------------ spectral tools


def spectral_bounds(H) -> tuple[float, float]:
    """Enclosing interval for the spectrum of a Hermitian matrix."""
    d = H.shape[0]
    if d <= 600:
        M = H.toarray() if sp.issparse(H) else np.asarray(H)
        e = np.linalg.eigvalsh(M)
        lo, hi = float(e[0]), float(e[-1])
    else:
        Hs = sp.csr_matrix(H)
        try:
            hi = float(eigsh(Hs, k=1, which="LA", tol=1e-8, return_eigenvectors=False)[0])
            lo = float(eigsh(Hs, k=1, which="SA", tol=1e-8, return_eigenvectors=False)[0])
        except ArpackNoConvergence:
            # Gershgorin discs
            A = abs(Hs)
            diag = Hs.diagonal().real
            radius = np.asarray(A.sum(axis=1)).ravel() - np.abs(diag)
            lo, hi = float(np.min(diag - radius)), float(np.max(diag + radius))
    pad = 1e-6 * max(hi - lo, 1.0) + 1e-9 * max(abs(lo), abs(hi))
    return lo - pad, hi + pad


def chebyshev_coefficients(z: float, tol: float, growth: float = 1.0) -> np.ndarray:
    """(2 - delta_k0) J_k(z), cut where |J_k(z)| growth^k stays below tol."""
    kmax = int(z * growth + 12.0 * max(z, 1.0) ** (1 / 3) + 40)
    k = np.arange(kmax)
    J = jv(k, z)
    weight = np.abs(J) * np.exp(k * math.log(growth))
    above = np.nonzero(weight > tol)[0]
    last = int(above[-1]) if above.size else 0
    if last >= kmax - 1:
        raise NumericalFailure("Chebyshev series did not reach the requested tolerance")
    c = 2.0 * J[: last + 1]
    c[0] = J[0]
    return c


# ------------------------------------------------------------------ unitary


def _as_hermitian_csr(H: Operator):
    if not H.is_hermitian(rtol=1e-10):
        raise ValueError(f"Hamiltonian is not Hermitian (relative error {H.hermiticity_error():.3e})")
    return H.tocsr()


class _EighStepper:
    def __init__(self, Hs, psi0):
        M = Hs.toarray()
        if np.max(np.abs(M.imag), initial=0.0) == 0.0:
            E, V = np.linalg.eigh(M.real)
        else:
            E, V = np.linalg.eigh(M)
        self.E, self.V = E, V
        self.c0 = V.conj().T @ psi0

    def at(self, t):
        return self.V @ (np.exp(-1j * self.E * t) * self.c0)


class _ChebyshevStepper:
    def __init__(self, Hs, psi0, tol, max_step):
        self.H = Hs.astype(complex)
        lo, hi = spectral_bounds(Hs)
        self.center = 0.5 * (hi + lo)
        self.R = 0.5 * (hi - lo) or 1.0
        self.tol = tol
        self.max_step = max_step if max_step is not None else 200.0 / self.R
        self.psi = np.asarray(psi0, dtype=complex).copy()
        self.t = 0.0
        self.matvecs = 0
        self._cache = {}

    def _step(self, v, tau):
        key = round(tau * self.R, 12)
        c = self._cache.get(key)
        if c is None:
            c = chebyshev_coefficients(self.R * tau, self.tol)
            self._cache[key] = c
        H, ctr, R = self.H, self.center, self.R
        scale = -1j / R
        prev = v
        cur = scale * (H @ v - ctr * v)
        acc = c[0] * prev + c[1] * cur if c.size > 1 else c[0] * prev
        for k in range(2, c.size):
            nxt = 2 * scale * (H @ cur - ctr * cur) + prev
            acc += c[k] * nxt
            prev, cur = cur, nxt
        self.matvecs += c.size
        return np.exp(-1j * ctr * tau) * acc

    def advance(self, t):
        gap = t - self.t
        if gap > 0:
            n = max(1, math.ceil(gap / self.max_step - 1e-12))
            tau = gap / n
            for _ in range(n):
                self.psi = self._step(self.psi, tau)
        self.t = t
        return self.psi


def evolve_unitary(
    H: Operator,
    psi0: StateVector,
    grid: TimeGrid,
    retain_states: bool | Sequence[float] = False,
    *,
    method: str = "auto",
    tail_tolerance: float = TAIL_TOLERANCE,
    on_breach: str = "truncate",
    tol: float = 1e-13,
    max_step: float | None = None,
) -> Trajectory:
    """psi(t) = exp(-iHt) psi0 on every grid sample.

    ``method`` is "eigh" (dense diagonalization), "chebyshev", or "auto"
    (eigh up to dimension 2500). A sample whose top-5% Fock population exceeds
    ``tail_tolerance`` ends the run in "truncate" mode and is flagged.
    ``retain_states`` is a flag or a list of sample times whose states to keep.
    """
    if H.space != psi0.space:
        raise SpaceMismatchError(f"H on {H.space!r}, psi0 on {psi0.space!r}")
    Hs = _as_hermitian_csr(H)
    if method == "auto":
        method = "eigh" if H.space.dim <= EIGH_MAX_DIM else "chebyshev"
    if method == "eigh":
        stepper = _EighStepper(Hs, psi0.amplitudes)
        at = stepper.at
    elif method == "chebyshev":
        stepper = _ChebyshevStepper(Hs, psi0.amplitudes, tol, max_step)
        at = stepper.advance
    else:
        raise ValueError(f"unknown method {method!r}")

    rec = _Recorder(grid, H.space, retain_states, tail_tolerance, on_breach)
    for t in grid.samples:
        psi = at(t)
        r = rec.obs.of_ket(psi)
        _check_norm(r["norm"], t, "norm")
        if not rec.add(t, r, StateVector._wrap(psi.copy(), H.space) if rec.wants(t) else None):
            break
    return rec.finish(method=method)


# ------------------------------------------------------------------ Lindblad


def jump_operators(p: ModelParams, space) -> list[tuple[float, Operator]]:
    """(rate, A) pairs for field loss and, with a spin factor, collective spin decay."""
    out = []
    a = destroy(space.fock if isinstance(space, ProductSpace) else space)
    if p.kappa > 0:
        out.append((p.kappa, embed_field(a, space) if isinstance(space, ProductSpace) else a))
    if p.gamma > 0 and isinstance(space, ProductSpace):
        _, _, _, Sm = spin_operators(space.spin)
        out.append((p.gamma, embed_spin(Sm, space)))
    return out


def _csr_arrays(M):
    M = sp.csr_matrix(M, dtype=complex)
    M.sum_duplicates()
    M.sort_indices()
    return M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data.astype(np.complex128)


def _parity_labels(space) -> np.ndarray:
    if isinstance(space, ProductSpace):
        n = np.arange(space.fock.dim)[:, None]
        k = np.arange(space.spin.dim)[None, :]
        return ((n + k) % 2).ravel().astype(np.int64)
    return (np.arange(space.dim) % 2).astype(np.int64)


class _LindbladChebyshev:
    def __init__(self, Hs, jumps, sector, tol, max_step):
        d = Hs.shape[0]
        Heff = sp.csr_matrix(Hs, dtype=complex)
        for r, A in jumps:
            Heff = Heff - 1j * r * (A.conj().T @ A)
        self.hp, self.hi, self.hd = _csr_arrays(Heff)
        if jumps:
            parts = [_csr_arrays(A) for _, A in jumps]
            offs, ptrs, nnz = [], [], 0
            for k, (ip, ix, dx) in enumerate(parts):
                offs.append(k * (d + 1))
                ptrs.append(ip + nnz)
                nnz += dx.size
            self.jp = np.concatenate(ptrs)
            self.ji = np.concatenate([q[1] for q in parts])
            self.jd = np.concatenate([q[2] for q in parts])
            self.jop = np.array(offs, dtype=np.int64)
            self.rates = np.array([r for r, _ in jumps], dtype=float)
        else:
            self.jp = np.zeros(d + 1, dtype=np.int64)
            self.ji = np.zeros(0, dtype=np.int64)
            self.jd = np.zeros(0, dtype=np.complex128)
            self.jop = np.zeros(0, dtype=np.int64)
            self.rates = np.zeros(0)
        self.sector = sector
        lo, hi = spectral_bounds(Hs)
        # |Re| of the Liouvillian numerical range is at most 4 sum_m r_m ||A_m||^2
        dmax = sum(4.0 * r * _norm2_sq(A) for r, A in jumps)
        self.c = -0.5 * dmax
        self.R = (hi - lo) + 0.5 * dmax
        b = 0.5 * dmax / self.R
        self.growth = b + math.sqrt(1.0 + b * b)
        self.tol = tol
        # keep the transient amplification exp(dmax tau / 2) of the recursion modest
        cap = 8.0 / dmax if dmax > 0 else np.inf
        self.max_step = min(max_step if max_step is not None else 200.0 / self.R, cap)
        self.applications = 0
        self._cache = {}

    def _apply(self, s, t, R, prev, out):
        _kernels.fused_liouvillian(
            self.hp, self.hi, self.hd, self.jp, self.ji, self.jd, self.jop, self.rates,
            self.sector, R, complex(s), complex(t), prev, out,
        )
        self.applications += 1

    def step(self, rho, tau):
        key = round(tau * self.R, 12)
        coef = self._cache.get(key)
        if coef is None:
            coef = chebyshev_coefficients(self.R * tau, self.tol, self.growth)
            self._cache[key] = coef
        R, c = self.R, self.c
        zero = np.zeros_like(rho)
        prev = rho.copy()
        cur = np.empty_like(rho)
        self._apply(1.0 / R, -c / R, prev, zero, cur)
        acc = coef[0] * prev
        if coef.size > 1:
            acc += coef[1] * cur
        for k in range(2, coef.size):
            # phi_{k+1} = (2/R) L phi_k - (2c/R) phi_k + phi_{k-1}, written over phi_{k-1}
            self._apply(2.0 / R, -2.0 * c / R, cur, prev, prev)
            acc += coef[k] * prev
            prev, cur = cur, prev
        acc *= math.exp(c * tau)
        return acc


def _norm2_sq(A) -> float:
    """Squared spectral norm of a sparse operator."""
    A = sp.csr_matrix(A)
    G = (A.conj().T @ A).tocsr()
    if G.shape[0] <= 600:
        return float(np.linalg.eigvalsh(G.toarray())[-1])
    return float(eigsh(G, k=1, which="LA", tol=1e-8, return_eigenvectors=False)[0]) * (1 + 1e-6)


def evolve_lindblad(
    H: Operator,
    p: ModelParams,
    rho0: DensityOperator,
    grid: TimeGrid,
    retain_states: bool | Sequence[float] = False,
    *,
    tail_tolerance: float = TAIL_TOLERANCE,
    on_breach: str = "truncate",
    tol: float = 1e-12,
    max_step: float | None = None,
    use_sectors: bool = True,
) -> Trajectory:
    """Integrate d rho/dt = -i[H, rho] + kappa D[a] rho + gamma D[S-] rho.

    D[A] rho = 2 A rho A^dagger - {A^dagger A, rho} (trace preserving).
    The rates come from ``p``; H must live on ``rho0.space``.
    """
    space = rho0.space
    if H.space != space:
        raise SpaceMismatchError(f"H on {H.space!r}, rho0 on {space!r}")
    Hs = _as_hermitian_csr(H)
    jumps = [(r, A.tocsr()) for r, A in jump_operators(p, space)]
    rho = np.array(rho0.matrix, dtype=complex, order="C")

    sector = np.zeros(space.dim, dtype=np.int64)
    if use_sectors:
        lab = _parity_labels(space)
        sector = _sectors_if_conserved(lab, Hs, [A for _, A in jumps], rho)

    prop = _LindbladChebyshev(Hs, jumps, sector, tol, max_step)
    rec = _Recorder(grid, space, retain_states, tail_tolerance, on_breach)
    t_now = 0.0
    warned = False
    for t in grid.samples:
        gap = t - t_now
        if gap > 0:
            n = max(1, math.ceil(gap / prop.max_step - 1e-12))
            for _ in range(n):
                rho = prop.step(rho, gap / n)
            t_now = t
        rho = 0.5 * (rho + rho.conj().T)
        r = rec.obs.of_density(rho)
        if abs(r["norm"] - 1.0) > 1e-8 * (1.0 + t):
            raise NumericalFailure(f"trace drifted to {r['norm']:.12g} at t = {t:g}")
        if not warned and space.dim <= DensityOperator.EIG_CHECK_MAX_DIM:
            lo = float(np.linalg.eigvalsh(rho)[0])
            if lo < -1e-6:
                warnings.warn(f"density operator eigenvalue {lo:.3e} at t = {t:g}", PositivityWarning, stacklevel=2)
                warned = True
        if not rec.add(t, r, DensityOperator._wrap(rho.copy(), space) if rec.wants(t) else None):
            break
    return rec.finish(
        method="chebyshev-lindblad",
        liouvillian_applications=prop.applications,
        sectors=int(np.unique(sector).size),
    )


def _sectors_if_conserved(lab, H, jumps, rho0) -> np.ndarray:
    """Return ``lab`` if the dynamics keeps rho block-diagonal in it, else all zeros."""
    trivial = np.zeros_like(lab)
    Hc = sp.coo_matrix(H)
    if np.any(lab[Hc.row] != lab[Hc.col]):
        return trivial
    for A in jumps:
        Ac = sp.coo_matrix(A)
        if Ac.nnz and np.unique((lab[Ac.row] - lab[Ac.col]) % 2).size > 1:
            return trivial
    if np.any(rho0[lab[:, None] != lab[None, :]] != 0):
        return trivial
    return lab


# ---------------------------------------------------------- Gaussian oracle


@dataclass(frozen=True, eq=False)
class CovarianceState:
    """Mean and symmetrized covariance of (X, P) at time ``t``."""

    t: float
    mean: tuple[float, float]
    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.shape != (2, 2) or abs(s[0, 1] - s[1, 0]) > 1e-12 * (1 + abs(s[0, 1])):
            raise ValueError("sigma must be a symmetric 2x2 matrix")
        object.__setattr__(self, "sigma", s)

    @property
    def var_x(self) -> float:
        return float(self.sigma[0, 0])

    @property
    def var_p(self) -> float:
        return float(self.sigma[1, 1])

    @property
    def cov_xp(self) -> float:
        return float(self.sigma[0, 1])

    @property
    def x2(self) -> float:
        return self.var_x + self.mean[0] ** 2

    @property
    def p2(self) -> float:
        return self.var_p + self.mean[1] ** 2

    @property
    def n(self) -> float:
        return 0.5 * (self.x2 + self.p2 - 1.0)

    def det(self) -> float:
        return float(np.linalg.det(self.sigma))


def gaussian_oracle(p: ModelParams, grid: TimeGrid) -> list[CovarianceState]:
    """Exact vacuum-quench moments of the quadratic field Hamiltonian."""
    w = p.omega
    w_eff = effective_frequency(p)
    out = []
    for t in grid.samples:
        if w_eff.imag > 0:
            mu = w_eff.imag
            ch, sh = math.cosh(mu * t), math.sinh(mu * t)
            xx = 0.5 * (ch * ch + (w / mu) ** 2 * sh * sh)
            pp = 0.5 * (ch * ch + (mu / w) ** 2 * sh * sh)
            xp = 0.5 * ch * sh * (w / mu + mu / w)
        elif w_eff.real > 0:
            we = w_eff.real
            c, s = math.cos(we * t), math.sin(we * t)
            xx = 0.5 * (c * c + (w / we) ** 2 * s * s)
            pp = 0.5 * (c * c + (we / w) ** 2 * s * s)
            xp = 0.5 * c * s * (w / we - we / w)
        else:
            xx = 0.5 * (1.0 + (w * t) ** 2)
            pp = 0.5
            xp = 0.5 * w * t
        out.append(CovarianceState(float(t), (0.0, 0.0), np.array([[xx, xp], [xp, pp]])))
    return out


# -------------------------------------------------------------------- echo


@dataclass(eq=False)
class EchoTrace:
    times: np.ndarray
    overlap: np.ndarray
    breached: bool
    breach_time: float | None
    tails: tuple = ()

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.overlap)

    @property
    def log10_modulus(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log10(self.modulus)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.overlap)

    def __len__(self):
        return self.times.size


def echo_overlap(
    H_a: Operator,
    H_b: Operator,
    psi0: StateVector,
    grid: TimeGrid,
    reference_kw: dict | None = None,
    **evolve_kw,
) -> EchoTrace:
    """<psi(t; H_b) | psi(t; H_a)> from two forward evolutions.

    H_b may be a field-only Hamiltonian while H_a and psi0 live on Fock x spin;
    psi0 must then have its spin in the lowest S_z state and H_b acts on that
    slice. H_b's cutoff may exceed H_a's, in which case its state is projected
    onto the shared levels before the inner product.

    ``evolve_kw`` goes to both evolutions; ``reference_kw`` overrides it for
    the H_b side only. That is useful when H_b runs on a larger cutoff whose
    top levels never enter the projected inner product.
    """
    if H_a.space != psi0.space:
        raise SpaceMismatchError(f"H_a on {H_a.space!r}, psi0 on {psi0.space!r}")
    kw = dict(evolve_kw, retain_states=True)
    kw_b = dict(kw, **(reference_kw or {}))
    if H_b.space == H_a.space:
        ta = evolve_unitary(H_a, psi0, grid, **kw)
        tb = evolve_unitary(H_b, psi0, grid, **kw_b)
        project = lambda v: v  # noqa: E731
    elif isinstance(H_a.space, ProductSpace) and isinstance(H_b.space, FockSpace):
        fock_a, spin = H_a.space.fock, H_a.space.spin
        if H_b.space.dim < fock_a.dim:
            raise SpaceMismatchError("field-only Hamiltonian needs a cutoff >= the Fock x spin cutoff")
        amp = psi0.amplitudes.reshape(fock_a.dim, spin.dim)
        if np.max(np.abs(amp[:, 1:]), initial=0.0) > 0:
            raise SpaceMismatchError("psi0 must have its spin factor in the lowest S_z state")
        phi0 = np.zeros(H_b.space.dim, dtype=complex)
        phi0[: fock_a.dim] = amp[:, 0]
        ta = evolve_unitary(H_a, psi0, grid, **kw)
        tb = evolve_unitary(H_b, StateVector(phi0, H_b.space), grid, **kw_b)

        def project(v):
            full = np.zeros((fock_a.dim, spin.dim), dtype=complex)
            full[:, 0] = v[: fock_a.dim]
            return full.ravel()

    else:
        raise SpaceMismatchError(f"cannot compare {H_a.space!r} with {H_b.space!r}")

    n = min(len(ta), len(tb))
    ov = np.array([np.vdot(project(tb.states[i].amplitudes), ta.states[i].amplitudes) for i in range(n)])
    breaches = [t.breach_time for t in (ta, tb) if t.breach_time is not None]
    return EchoTrace(
        times=ta.times[:n],
        overlap=ov,
        breached=bool(breaches),
        breach_time=min(breaches) if breaches else None,
        tails=(ta["tail"][:n], tb["tail"][:n]),
    )
