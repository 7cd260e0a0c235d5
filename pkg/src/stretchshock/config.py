"""INI run configurations.

A configuration has the sections ``[params]``, ``[data]``, ``[solver]``,
``[scenario]`` and ``[output]``.  Perturbations are declared in ``[data]``
with dotted keys, e.g. ``chi0.kind = rational_bump``.  Command-line
overrides use ``section.key=value``.

Errors are raised as :class:`ConfigError` and name the file, line and key
where possible.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .material import MaterialParams, NondimensionalParams, RelationMode, nondimensionalize
from .profiles import PerturbationKind, PerturbationSpec, WeightPower
from .tracker import TrackerOptions

__all__ = ["Scenario", "RunConfig", "load_config", "parse_config", "apply_override"]


class Scenario(str, Enum):
    SIMULATE = "simulate"
    ORACLE_COMPARE = "oracle_compare"
    STABILITY_ZETA0 = "stability_zeta0"
    STABILITY_ZETAPOS = "stability_zetapos"
    INSTABILITY_DEMO = "instability_demo"
    ENERGY_AUDIT = "energy_audit"
    CROSSVALIDATE = "crossvalidate"


SECTIONS = ("params", "data", "solver", "scenario", "output")

_PARAM_KEYS = {"N1", "nu1", "eta", "tau", "zeta", "gamma", "relation_mode"}
_PERT_FIELDS = {"kind", "amplitude", "center", "width", "order", "plateau", "table"}
_DATA_KEYS = {"sigma0", "sigma1", "check", "scale_to_B", "r", "weight"} | {
    f"{p}.{k}" for p in ("chi0", "chi1") for k in _PERT_FIELDS
}
_SOLVER_KEYS = {"rtol", "atol", "margin", "blow_up_factor", "guard_rel", "max_steps", "event_tol",
                "per_decade", "monitor_L", "refine_monitor", "h_max", "horizon"}
_SCENARIO_KEYS = {"name", "r", "fit_t0", "fit_t1", "fit_points", "fit_decades", "tolerance",
                  "audit_a", "audit_b", "audit_points", "audit_t0", "audit_t1",
                  "fv_S", "fv_ds", "fv_t_end", "fv_refine", "fv_window",
                  "restart_t", "expected_event_t", "tension_target"}
_OUTPUT_KEYS = {"dir", "formats", "sample_times", "snapshot_s_max", "snapshot_points"}
_KNOWN = {"params": _PARAM_KEYS, "data": _DATA_KEYS, "solver": _SOLVER_KEYS,
          "scenario": _SCENARIO_KEYS, "output": _OUTPUT_KEYS}


@dataclass
class RunConfig:
    """Validated run configuration.

    ``raw`` keeps the string values (after overrides) so the summary can echo
    exactly what was run; ``digest`` is the sha256 of the canonical echo.
    """

    material: MaterialParams
    params: NondimensionalParams
    sigma0: float
    sigma1: float
    chi0: PerturbationSpec
    chi1: PerturbationSpec
    scenario: Scenario
    options: TrackerOptions
    horizon: Optional[float] = None
    check_data: bool = True
    scale_to_B: Optional[float] = None
    r: float = 1.0
    weight: WeightPower = WeightPower.R_PLUS_1
    scenario_opts: dict = field(default_factory=dict)
    out_dir: Optional[str] = None
    formats: tuple = ("csv", "json")
    sample_times: tuple = ()
    snapshot_s_max: Optional[float] = None
    snapshot_points: int = 201
    source: str = "<string>"
    raw: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return hashlib.sha256(canonical_text(self.raw).encode()).hexdigest()

    def echo(self) -> dict:
        return {sec: dict(sorted(vals.items())) for sec, vals in sorted(self.raw.items())}


def canonical_text(raw: dict) -> str:
    lines = []
    for sec in sorted(raw):
        lines.append(f"[{sec}]")
        for k in sorted(raw[sec]):
            lines.append(f"{k} = {raw[sec][k]}")
    return "\n".join(lines) + "\n"


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` to the 1-based line where the key is set."""
    idx = {}
    sec = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            sec = s[1:-1].strip()
            continue
        for sep in ("=", ":"):
            if sep in s:
                idx[(sec, s.split(sep, 1)[0].strip())] = n
                break
    return idx


class _Reader:
    """Typed access to the raw values with located error messages."""

    def __init__(self, raw, lines, source):
        self.raw = raw
        self.lines = lines
        self.source = source
        self.used = set()

    def where(self, sec, key):
        n = self.lines.get((sec, key))
        loc = f"{self.source}:{n}" if n else f"{self.source} (override)" if key in self.raw.get(sec, {}) \
            else self.source
        return f"{loc}: [{sec}] {key}"

    def fail(self, sec, key, msg):
        raise ConfigError(f"{self.where(sec, key)}: {msg}")

    def has(self, sec, key):
        return key in self.raw.get(sec, {})

    def get(self, sec, key, conv=float, default=None, required=False):
        self.used.add((sec, key))
        if not self.has(sec, key):
            if required:
                raise ConfigError(f"{self.source}: [{sec}] missing required key {key!r}")
            return default
        text = self.raw[sec][key].strip()
        try:
            return conv(text)
        except (ValueError, TypeError) as exc:
            self.fail(sec, key, f"cannot read {text!r}: {exc}")

    def positive(self, sec, key, default=None, conv=float):
        v = self.get(sec, key, conv, default)
        if v is not None and not v > 0:
            self.fail(sec, key, f"must be positive, got {v!r}")
        return v


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _float_list(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _enum(cls):
    def conv(text):
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"expected one of {[m.value for m in cls]}") from None
    return conv


def apply_override(raw: dict, item: str):
    """Apply ``section.key=value`` to the raw dictionary in place."""
    if "=" not in item:
        raise ConfigError(f"override {item!r}: expected section.key=value")
    lhs, value = item.split("=", 1)
    if "." not in lhs:
        raise ConfigError(f"override {item!r}: key must be qualified by its section")
    sec, key = lhs.strip().split(".", 1)
    if sec not in SECTIONS:
        raise ConfigError(f"override {item!r}: unknown section {sec!r}")
    raw.setdefault(sec, {})[key.strip()] = value.strip()


def parse_config(text: str, source="<string>", overrides=(), base_dir=None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    raw = {sec: dict(cp[sec]) for sec in cp.sections()}
    for sec in raw:
        if sec not in SECTIONS:
            n = _line_index(text).get((sec, next(iter(raw[sec]), None)))
            raise ConfigError(f"{source}: unknown section [{sec}]" + (f" near line {n}" if n else ""))
    for item in overrides:
        apply_override(raw, item)
    lines = _line_index(text)
    rd = _Reader(raw, lines, source)
    for sec, keys in raw.items():
        for k in keys:
            if k not in _KNOWN[sec]:
                rd.fail(sec, k, "unknown key")

    # -- params
    mode = rd.get("params", "relation_mode", _enum(RelationMode), RelationMode.STRETCH_LINEAR)
    N1 = rd.get("params", "N1", required=True)
    nu1 = rd.get("params", "nu1", default=None)
    if nu1 is None:
        # unit stiffness by default
        nu1 = N1 if mode is RelationMode.STRETCH_LINEAR else N1 + 1.0
    tau = rd.get("params", "tau", required=True)
    eta = rd.get("params", "eta", default=0.5 * tau)
    zeta = rd.get("params", "zeta", default=0.0)
    gamma = rd.get("params", "gamma", default=1.0)
    try:
        material = MaterialParams(N1=N1, nu1=nu1, eta=eta, tau=tau, zeta=zeta, gamma=gamma,
                                  relation_mode=mode)
    except ValueError as exc:
        raise ConfigError(f"{source}: [params] {exc}") from exc
    params = nondimensionalize(material)

    # -- data
    sigma0 = rd.positive("data", "sigma0", 1.0)
    sigma1 = rd.get("data", "sigma1", default=2.0)
    if not sigma1 > 1:
        rd.fail("data", "sigma1", f"must exceed 1, got {sigma1!r}")
    specs = []
    for name in ("chi0", "chi1"):
        kind = rd.get("data", f"{name}.kind", _enum(PerturbationKind), PerturbationKind.NONE)
        kw = {"kind": kind}
        for k in ("amplitude", "center", "width", "order", "plateau"):
            v = rd.get("data", f"{name}.{k}")
            if v is not None:
                kw[k] = v
        if kind is PerturbationKind.TABULATED:
            table = rd.get("data", f"{name}.table", str, required=True)
            path = Path(table)
            if not path.is_absolute() and base_dir is not None:
                path = Path(base_dir) / path
            if not path.exists():
                rd.fail("data", f"{name}.table", f"file {str(path)!r} does not exist")
            kw["table"] = str(path)
        if kw.get("width", 1.0) <= 0:
            rd.fail("data", f"{name}.width", "must be positive")
        specs.append(PerturbationSpec(**kw))
    check = rd.get("data", "check", _bool, True)
    scale_to_B = rd.positive("data", "scale_to_B", None)
    r = rd.positive("data", "r", 1.0)
    weight = rd.get("data", "weight", _enum(WeightPower),
                    WeightPower.R_PLUS_1 if params.zeta == 0 else WeightPower.R_PLUS_2)

    # -- solver
    opt_kw = {}
    for k in ("rtol", "atol", "margin", "event_tol", "guard_rel", "h_max"):
        v = rd.positive("solver", k)
        if v is not None:
            opt_kw[k] = v
    v = rd.get("solver", "blow_up_factor")
    if v is not None:
        if not v > 1:
            rd.fail("solver", "blow_up_factor", "must exceed 1")
        opt_kw["blow_up_factor"] = v
    for k in ("max_steps", "per_decade"):
        v = rd.positive("solver", k, conv=int)
        if v is not None:
            opt_kw[k] = v
    v = rd.positive("solver", "monitor_L")
    if v is not None:
        opt_kw["monitor_L"] = v
    v = rd.get("solver", "refine_monitor", _bool)
    if v is not None:
        opt_kw["refine_monitor"] = v
    options = TrackerOptions(**opt_kw)
    horizon = rd.positive("solver", "horizon")

    # -- scenario
    scenario = rd.get("scenario", "name", _enum(Scenario), Scenario.SIMULATE)
    sopts = {}
    for k in _SCENARIO_KEYS - {"name", "fv_refine"}:
        if rd.has("scenario", k):
            v = rd.get("scenario", k, float)
            if k in ("fit_points", "audit_points"):
                if v != int(v) or v < 1:
                    rd.fail("scenario", k, "must be a positive integer")
                v = int(v)
            sopts[k] = v
    if rd.has("scenario", "fv_refine"):
        sopts["fv_refine"] = rd.get("scenario", "fv_refine", _bool)
    for k in ("fv_ds", "fv_S", "fv_t_end", "tolerance", "fv_window"):
        if k in sopts and not sopts[k] > 0:
            rd.fail("scenario", k, "must be positive")
    if scenario is Scenario.STABILITY_ZETA0 and params.zeta != 0:
        rd.fail("params", "zeta", "stability_zeta0 needs zeta = 0")
    if scenario is Scenario.STABILITY_ZETAPOS and not params.zeta > 0:
        rd.fail("params", "zeta", "stability_zetapos needs zeta > 0")

    # -- output
    out_dir = rd.get("output", "dir", str)
    formats = rd.get("output", "formats", lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
                     ("csv", "json"))
    for f in formats:
        if f not in ("csv", "json"):
            rd.fail("output", "formats", f"unknown format {f!r}")
    sample_times = rd.get("output", "sample_times", _float_list, ())
    if any(t < 0 for t in sample_times):
        rd.fail("output", "sample_times", "times must be nonnegative")
    snap_max = rd.positive("output", "snapshot_s_max")
    snap_n = rd.positive("output", "snapshot_points", 201, conv=int)

    return RunConfig(
        material=material, params=params, sigma0=sigma0, sigma1=sigma1, chi0=specs[0], chi1=specs[1],
        scenario=scenario, options=options, horizon=horizon, check_data=check, scale_to_B=scale_to_B,
        r=r, weight=weight, scenario_opts=sopts, out_dir=out_dir, formats=formats,
        sample_times=tuple(sample_times), snapshot_s_max=snap_max, snapshot_points=snap_n,
        source=source, raw=raw,
    )


def load_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file {str(path)!r} does not exist")
    return parse_config(path.read_text(), source=str(path), overrides=overrides, base_dir=path.parent)
