"""Run configuration: parsing, validation and the figure presets."""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..hamiltonians import ModelKind, ModelParams
from ..propagators import TAIL_TOLERANCE, TimeGrid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

THERMO_31 = 31.6**2  # Omega/omega for sqrt(Omega N / omega) ~ 31.6 at N = 1


@dataclass(frozen=True)
class RunConfig:
    omega: float = 1.0
    Omega_ratio: float = 1.0e4
    n_spins: int = 1
    g_over_gc: tuple = (1.0,)
    kappa_over_omega: float = 0.0
    gamma_over_Omega: float = 0.0
    cutoff: int = 200
    model: ModelKind = ModelKind.FULL_DICKE
    t_max_omega: float = 25.0
    n_times: int = 251
    husimi_times_omega: tuple = ()
    tolerance: float = TAIL_TOLERANCE

    @property
    def open_system(self) -> bool:
        return self.kappa_over_omega > 0 or self.gamma_over_Omega > 0

    @property
    def Omega(self) -> float:
        return self.Omega_ratio * self.omega

    def params(self, g_over_gc: float, *, open_system: bool | None = None, cutoff: int | None = None) -> ModelParams:
        open_ = self.open_system if open_system is None else open_system
        g_c = math.sqrt(self.omega * self.Omega)
        return ModelParams(
            omega=self.omega,
            Omega=self.Omega,
            n_spins=self.n_spins,
            g=g_over_gc * g_c,
            kappa=self.kappa_over_omega * self.omega if open_ else 0.0,
            gamma=self.gamma_over_Omega * self.Omega if open_ else 0.0,
            cutoff=self.cutoff if cutoff is None else cutoff,
        )

    def grid(self) -> TimeGrid:
        """Uniform samples in units of 1/omega, merged with the Husimi snapshot times."""
        t = np.linspace(0.0, self.t_max_omega, self.n_times) / self.omega
        if self.husimi_times_omega:
            t = np.union1d(np.round(t, 12), np.asarray(self.husimi_times_omega) / self.omega)
        return TimeGrid(t)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        d["g_over_gc"] = list(self.g_over_gc)
        d["husimi_times_omega"] = list(self.husimi_times_omega)
        return d

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


KEYS = tuple(f.name for f in fields(RunConfig))


def _line_of(text: str | None, key: str):
    if not text:
        return None
    m = re.search(rf'^\s*"?{re.escape(key)}"?\s*[=:]', text, flags=re.M)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _number(raw, key, text, *, integer=False, positive=False, nonneg=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"expected a number, got {raw!r}", key, _line_of(text, key))
    if integer and int(raw) != raw:
        raise ConfigError(f"expected an integer, got {raw!r}", key, _line_of(text, key))
    if not math.isfinite(raw):
        raise ConfigError("must be finite", key, _line_of(text, key))
    if positive and not raw > 0:
        raise ConfigError(f"must be > 0, got {raw!r}", key, _line_of(text, key))
    if nonneg and not raw >= 0:
        raise ConfigError(f"must be >= 0, got {raw!r}", key, _line_of(text, key))
    return int(raw) if integer else float(raw)


def _number_list(raw, key, text, *, nonneg=True):
    items = raw if isinstance(raw, (list, tuple)) else [raw]
    if not items:
        raise ConfigError("sweep list must not be empty", key, _line_of(text, key))
    vals = sorted(_number(v, key, text, nonneg=nonneg) for v in items)
    if any(b == a for a, b in zip(vals, vals[1:])):
        raise ConfigError("sweep list has duplicate values", key, _line_of(text, key))
    return tuple(vals)


def from_mapping(data: dict, base: RunConfig | None = None, text: str | None = None) -> RunConfig:
    """Validate a key/value mapping into a RunConfig layered over ``base``."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table of keys")
    unknown = sorted(set(data) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown key (allowed: {', '.join(KEYS)})", unknown[0], _line_of(text, unknown[0]))
    cfg = base or RunConfig()
    kw = {}
    for key, raw in data.items():
        if key in ("omega", "Omega_ratio", "tolerance", "t_max_omega"):
            kw[key] = _number(raw, key, text, positive=True)
        elif key in ("kappa_over_omega", "gamma_over_Omega"):
            kw[key] = _number(raw, key, text, nonneg=True)
        elif key in ("n_spins", "cutoff"):
            kw[key] = _number(raw, key, text, integer=True, positive=True)
        elif key == "n_times":
            kw[key] = _number(raw, key, text, integer=True, positive=True)
        elif key == "g_over_gc":
            kw[key] = _number_list(raw, key, text)
        elif key == "husimi_times_omega":
            kw[key] = () if raw in ([], ()) else _number_list(raw, key, text)
        elif key == "model":
            try:
                kw[key] = ModelKind.parse(raw)
            except ValueError:
                names = ", ".join(m.value for m in ModelKind)
                raise ConfigError(f"unknown model {raw!r} (one of {names})", key, _line_of(text, key)) from None
    cfg = replace(cfg, **kw)
    _check(cfg, text)
    return cfg


def _check(cfg: RunConfig, text):
    if cfg.gamma_over_Omega > 0 and not cfg.model.has_spin:
        raise ConfigError(f"spin damping needs a model with spins, not {cfg.model.value}", "gamma_over_Omega",
                          _line_of(text, "gamma_over_Omega"))
    if cfg.husimi_times_omega and cfg.husimi_times_omega[-1] > cfg.t_max_omega:
        raise ConfigError("snapshot time beyond t_max_omega", "husimi_times_omega", _line_of(text, "husimi_times_omega"))
    if cfg.n_times < 2:
        raise ConfigError("need at least two time samples", "n_times", _line_of(text, "n_times"))


def load_file(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, line=exc.lineno) from None
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"line (\d+)", str(exc))
            raise ConfigError(str(exc), line=int(m.group(1)) if m else None) from None
    return from_mapping(data, base, text)


# ------------------------------------------------------------------ presets

_FIG1_SWEEP = [round(x, 10) for x in np.linspace(0.0, 1.6, 161)]
_DESK_SWEEP = [round(x, 10) for x in np.linspace(0.0, 1.6, 33)]

PRESETS: dict[str, dict] = {
    "fig1a": dict(Omega_ratio=1.0e4, cutoff=3000, g_over_gc=_FIG1_SWEEP),
    "fig1b": dict(Omega_ratio=THERMO_31, cutoff=3000, g_over_gc=_FIG1_SWEEP),
    "fig1c": dict(Omega_ratio=100.0, cutoff=3000, g_over_gc=_FIG1_SWEEP),
    "fig3": dict(
        Omega_ratio=1.0e4, cutoff=3000, g_over_gc=[1.03], kappa_over_omega=0.1, gamma_over_Omega=0.01,
        husimi_times_omega=[5.0, 10.0, 15.0, 20.0, 25.0],
    ),
    "figA1s": dict(Omega_ratio=1.0e4, cutoff=3000, g_over_gc=_FIG1_SWEEP),
    "figA2a": dict(Omega_ratio=THERMO_31, cutoff=200, g_over_gc=_FIG1_SWEEP, kappa_over_omega=0.01, gamma_over_Omega=0.1),
    "figA2b": dict(Omega_ratio=THERMO_31, cutoff=200, g_over_gc=_FIG1_SWEEP, kappa_over_omega=0.1, gamma_over_Omega=0.1),
    "figA2c": dict(Omega_ratio=THERMO_31, cutoff=200, g_over_gc=_FIG1_SWEEP, kappa_over_omega=0.5, gamma_over_Omega=0.1),
    "figA4osc": dict(
        Omega_ratio=1.0e4, cutoff=200, g_over_gc=[0.9], t_max_omega=7.2,
        husimi_times_omega=[0.0, 0.8, 1.6, 2.4, 3.2, 4.0, 4.8, 5.6, 6.4, 7.2],
    ),
}

_DESK = dict(n_times=101, g_over_gc=_DESK_SWEEP)
PRESETS.update({
    "fig1a-desk": {**PRESETS["fig1a"], **_DESK, "cutoff": 600},
    "fig1b-desk": {**PRESETS["fig1b"], **_DESK, "cutoff": 600},
    "fig1c-desk": {**PRESETS["fig1c"], **_DESK, "cutoff": 600},
    "figA1s-desk": {**PRESETS["figA1s"], **_DESK, "cutoff": 600, "t_max_omega": 10.0},
    # the open run at Omega/omega = 1e4 is out of desk reach; this keeps g, kappa, gamma and the snapshots
    "fig3-desk": {**PRESETS["fig3"], "Omega_ratio": THERMO_31, "cutoff": 200, "n_times": 101},
    "figA2a-desk": {**PRESETS["figA2a"], **_DESK, "g_over_gc": [0.5, 0.9, 1.1, 1.2, 1.4]},
    "figA2b-desk": {**PRESETS["figA2b"], **_DESK, "g_over_gc": [0.5, 0.9, 1.1, 1.2, 1.4]},
    "figA2c-desk": {**PRESETS["figA2c"], **_DESK, "g_over_gc": [0.5, 0.9, 1.1, 1.2, 1.4]},
    "figA4osc-desk": {**PRESETS["figA4osc"], "n_times": 73},
})


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (one of {', '.join(sorted(PRESETS))})", "preset")
    return from_mapping(dict(PRESETS[name]))
