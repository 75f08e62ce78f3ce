"""Expectation values, field marginals and Husimi Q frames."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import SpaceMismatchError
from .fock_algebra import (
    COHERENT_DEFICIT_TOL,
    DensityOperator,
    FockSpace,
    Operator,
    ProductSpace,
    StateVector,
    embed_field,
    embed_spin,
    fock_part,
    number_operator,
    quadratures,
    spin_operators,
)
from .hamiltonians import ModelParams, polaron_transform

ALPHA_CONVENTION = "alpha = (X + iP)/sqrt(2); axes hold X = sqrt(2) Re(alpha), P = sqrt(2) Im(alpha)"

RECORD_FIELDS = ("n", "sx", "sy", "sz", "x", "p", "var_x", "var_p", "cov_xp", "norm", "tail")


def tail_levels(cutoff: int) -> int:
    """Number of Fock levels in the top 5% used by the truncation guard."""
    return max(1, math.ceil(0.05 * (cutoff + 1)))


class ObservableSet:
    """Pre-built operators for computing a full trajectory record on one space."""

    def __init__(self, space):
        self.space = space
        fock = fock_part(space)
        self.fock = fock
        X, P = quadratures(fock)
        field_ops = {"n": number_operator(fock), "x": X, "p": P}
        if isinstance(space, ProductSpace):
            self.ops = {k: embed_field(v, space).tocsr() for k, v in field_ops.items()}
            Sx, Sy, Sz, _ = spin_operators(space.spin)
            for k, S in (("sx", Sx), ("sy", Sy), ("sz", Sz)):
                self.ops[k] = embed_spin(S, space).tocsr()
            spin_dim = space.spin.dim
        else:
            self.ops = {k: v.tocsr() for k, v in field_ops.items()}
            spin_dim = 1
        self.ops["xx"] = (self.ops["x"] @ self.ops["x"]).tocsr()
        self.ops["pp"] = (self.ops["p"] @ self.ops["p"]).tocsr()
        self.ops["xp"] = (self.ops["x"] @ self.ops["p"]).tocsr()
        levels = np.repeat(np.arange(fock.dim), spin_dim)
        self.tail_mask = levels >= fock.dim - tail_levels(fock.cutoff)

    def _finish(self, ev, norm, tail):
        x, p = ev["x"].real, ev["p"].real
        rec = {
            "n": ev["n"].real,
            "x": x,
            "p": p,
            "var_x": ev["xx"].real - x * x,
            "var_p": ev["pp"].real - p * p,
            # symmetrized: Re<XP> = <XP + PX>/2 since [X, P] = i away from the cutoff
            "cov_xp": ev["xp"].real - x * p,
            "norm": norm,
            "tail": tail,
        }
        for k in ("sx", "sy", "sz"):
            rec[k] = ev[k].real if k in ev else float("nan")
        return rec

    def of_ket(self, v: np.ndarray) -> dict:
        ev = {k: complex(np.vdot(v, A @ v)) for k, A in self.ops.items()}
        prob = np.abs(v) ** 2
        return self._finish(ev, float(prob.sum()), float(prob[self.tail_mask].sum()))

    def of_density(self, rho: np.ndarray) -> dict:
        ev = {k: complex(A.multiply(rho.T).sum()) for k, A in self.ops.items()}
        diag = np.real(np.diag(rho))
        return self._finish(ev, float(np.trace(rho).real), float(diag[self.tail_mask].sum()))


def _raw(state):
    if isinstance(state, StateVector):
        return "ket", state.amplitudes
    if isinstance(state, DensityOperator):
        return "dm", state.matrix
    raise TypeError(f"expected StateVector or DensityOperator, got {type(state).__name__}")


def expect(op: Operator, state) -> complex:
    if op.space != state.space:
        raise SpaceMismatchError(f"{op.space!r} vs {state.space!r}")
    return state.expect(op)


def _field_op(op: Operator, space):
    return embed_field(op, space) if isinstance(space, ProductSpace) else op


def photon_number(state) -> float:
    fock = fock_part(state.space)
    return float(expect(_field_op(number_operator(fock), state.space), state).real)


def quadrature_means(state) -> tuple[float, float]:
    X, P = quadratures(fock_part(state.space))
    return (
        float(expect(_field_op(X, state.space), state).real),
        float(expect(_field_op(P, state.space), state).real),
    )


def quadrature_variances(state) -> tuple[float, float, float]:
    """(Var X, Var P, symmetrized covariance) of the field quadratures."""
    kind, raw = _raw(state)
    rec = ObservableSet(state.space)
    r = rec.of_ket(raw) if kind == "ket" else rec.of_density(raw)
    return r["var_x"], r["var_p"], r["cov_xp"]


def spin_expectations(state) -> tuple[float, float, float]:
    if not isinstance(state.space, ProductSpace):
        raise SpaceMismatchError("state has no spin factor")
    Sx, Sy, Sz, _ = spin_operators(state.space.spin)
    return tuple(float(expect(embed_spin(S, state.space), state).real) for S in (Sx, Sy, Sz))


def reduce_field(state) -> DensityOperator:
    """Partial trace over the spin factor."""
    if not isinstance(state.space, ProductSpace):
        raise SpaceMismatchError(f"reduce_field needs a Fock x spin state, got {state.space!r}")
    fock, spin = state.space.fock, state.space.spin
    kind, raw = _raw(state)
    if kind == "ket":
        psi = raw.reshape(fock.dim, spin.dim)
        rho_f = psi @ psi.conj().T
    else:
        r4 = raw.reshape(fock.dim, spin.dim, fock.dim, spin.dim)
        rho_f = np.einsum("isjs->ij", r4)
    rho_f = 0.5 * (rho_f + rho_f.conj().T)
    return DensityOperator._wrap(rho_f, fock)


# ---------------------------------------------------------------- Husimi


@dataclass(frozen=True)
class FrameSpec:
    """Square phase-space window |Re alpha|, |Im alpha| <= alpha_max on n x n points."""

    alpha_max: float = 4.0
    n_points: int = 201

    @classmethod
    def default_for(cls, p: ModelParams | None = None, n_points: int = 201) -> "FrameSpec":
        lobe = 0.0
        if p is not None and p.g > p.g_c:
            from .hamiltonians import well_minima

            lobe = well_minima(p) / math.sqrt(2)
        return cls(alpha_max=1.2 * max(3.0, lobe + 3.0), n_points=n_points)


@dataclass(frozen=True, eq=False)
class HusimiFrame:
    """Q on a grid. ``values[i, j]`` sits at (x_axis[j], p_axis[i])."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    flagged: np.ndarray
    alpha_convention: str = ALPHA_CONVENTION
    meta: dict = field(default_factory=dict)

    @property
    def dx(self) -> float:
        return float(self.x_axis[1] - self.x_axis[0])

    @property
    def dp(self) -> float:
        return float(self.p_axis[1] - self.p_axis[0])

    @property
    def alpha_cell(self) -> float:
        """Grid spacing in units of Re(alpha)."""
        return self.dx / math.sqrt(2)

    def normalization(self) -> float:
        # d^2 alpha = dX dP / 2
        return float(self.values.sum() * self.dx * self.dp / 2)

    def local_maxima(self, rel_height: float = 0.05) -> list[tuple[float, float, float]]:
        """Strict interior local maxima above rel_height * global max, as (X, P, Q)."""
        Q = self.values
        core = Q[1:-1, 1:-1]
        is_max = np.ones_like(core, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                nb = Q[1 + di : Q.shape[0] - 1 + di, 1 + dj : Q.shape[1] - 1 + dj]
                is_max &= core > nb
        is_max &= core >= rel_height * Q.max()
        ii, jj = np.nonzero(is_max)
        out = [(float(self.x_axis[j + 1]), float(self.p_axis[i + 1]), float(core[i, j])) for i, j in zip(ii, jj)]
        return sorted(out, key=lambda r: -r[2])

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.x_axis[j]), float(self.p_axis[i])


def log_coherent_amplitudes(alpha: np.ndarray, cutoff: int) -> np.ndarray:
    """log <n|alpha> for n = 0..cutoff, last axis = n. Stable for large |alpha|."""
    alpha = np.asarray(alpha, dtype=complex)
    n = np.arange(cutoff + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_a = np.log(alpha)[..., None]
        out = -0.5 * np.abs(alpha)[..., None] ** 2 + n * log_a - 0.5 * gammaln(n + 1)
    zero = alpha == 0
    if np.any(zero):
        out[zero] = -np.inf
        out[zero, 0] = 0.0
    out[..., 0] = -0.5 * np.abs(alpha) ** 2
    return out


def husimi_q(rho_field, frame_spec: FrameSpec | None = None, chunk: int = 4096) -> HusimiFrame:
    """Q(alpha) = <alpha|rho|alpha>/pi on the grid of ``frame_spec``.

    The projections <n|alpha> are exact (not renormalized), so Q is exact for
    the truncated state; grid points whose coherent state leaks more than
    1e-8 of its norm past the cutoff are marked in ``flagged``.
    """
    if isinstance(rho_field, StateVector):
        rho_field = rho_field.to_density() if isinstance(rho_field.space, FockSpace) else reduce_field(rho_field)
    elif isinstance(rho_field.space, ProductSpace):
        rho_field = reduce_field(rho_field)
    if not isinstance(rho_field.space, FockSpace):
        raise SpaceMismatchError("husimi_q needs a field density operator")
    spec = frame_spec or FrameSpec()
    cutoff = rho_field.space.cutoff
    re = np.linspace(-spec.alpha_max, spec.alpha_max, spec.n_points)
    A = re[None, :] + 1j * re[:, None]
    flat = A.ravel()
    rho = rho_field.matrix
    Q = np.empty(flat.size)
    kept = np.empty(flat.size)
    for s in range(0, flat.size, chunk):
        c = np.exp(log_coherent_amplitudes(flat[s : s + chunk], cutoff))
        Q[s : s + chunk] = np.einsum("gm,mn,gn->g", c.conj(), rho, c, optimize=True).real / math.pi
        kept[s : s + chunk] = np.sum(np.abs(c) ** 2, axis=1)
    # c^dagger rho c >= 0 for a density operator; drop rounding-level negatives only
    Q[(Q < 0) & (Q > -1e-14 * np.max(np.abs(Q)))] = 0.0
    shape = A.shape
    return HusimiFrame(
        x_axis=re * math.sqrt(2),
        p_axis=re * math.sqrt(2),
        values=Q.reshape(shape),
        flagged=(1.0 - kept > COHERENT_DEFICIT_TOL).reshape(shape),
        meta={"cutoff": cutoff, "alpha_max": spec.alpha_max, "n_points": spec.n_points},
    )


# ------------------------------------------------------- polaron invariance


@dataclass(frozen=True)
class InvarianceResult:
    overlap: float
    series_prediction: float
    condition: float


def invariance_overlap(p: ModelParams) -> InvarianceResult:
    """Re <0,down| U |0,down> for the polaron transform, with its series estimate.

    ``series_prediction`` is 1 - g^2/(4 Omega^2) and ``condition`` is
    (1/4)(g^2/g_c^2)(omega/Omega).
    """
    U = polaron_transform(p)
    overlap = float(U.matrix[0, 0].real)
    series = 1.0 - p.g**2 / (4 * p.Omega**2)
    cond = 0.25 * (p.g / p.g_c) ** 2 * (p.omega / p.Omega)
    return InvarianceResult(overlap, series, cond)
