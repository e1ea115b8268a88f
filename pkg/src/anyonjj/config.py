"""JSON run configurations.

See ``docs/config.md`` for the schema and ``configs/`` for one example per
command.  Every value is validated here, before any computation starts.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .dynamics import EvolutionConfig, ImprintSpec
from .errors import ConfigError
from .hamiltonian import LatticeSpec, RegionLayout
from .meanfield import MeanFieldParams, MeanFieldState

COMMANDS = ("ground", "gap-scan", "quench", "mft", "commute-test")

# sections each command accepts besides "command" itself
_SECTIONS = {
    "ground": {"lattice", "ground"},
    "gap-scan": {"lattice", "gap_scan"},
    "quench": {"lattice", "imprint", "evolution"},
    "mft": {"meanfield"},
    "commute-test": {"commute_test"},
}

_ANGLE = re.compile(
    r"^\s*(?P<sign>[-+]?)\s*(?P<num>\d+(?:\.\d*)?)?\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$")


def parse_angle(value: Any, name: str) -> float:
    """Number, or a string such as "pi", "pi/4", "3pi/4", "-2*pi"."""
    if isinstance(value, bool):
        raise ConfigError("expected a number", name)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _ANGLE.match(value)
        if m:
            num = float(m.group("num")) if m.group("num") else 1.0
            den = float(m.group("den")) if m.group("den") else 1.0
            if den == 0:
                raise ConfigError("zero denominator", name)
            val = num * math.pi / den
            return -val if m.group("sign") == "-" else val
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"expected a number or a multiple of pi, got {value!r}", name)


class _Section:
    """Dict reader that tracks consumed keys so leftovers can be rejected."""

    def __init__(self, data: Any, path: str, strict: bool):
        if not isinstance(data, dict):
            raise ConfigError("expected an object", path or "<root>")
        self.data = data
        self.path = path
        self.strict = strict
        self.used: set[str] = set()

    def name(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def get(self, key: str, default: Any = None, required: bool = False) -> Any:
        self.used.add(key)
        if key not in self.data:
            if required:
                raise ConfigError("required field missing", self.name(key))
            return default
        return self.data[key]

    def number(self, key: str, default=None, required=False, integer=False, angle=False):
        val = self.get(key, default, required)
        if val is None:
            return None
        if angle:
            return parse_angle(val, self.name(key))
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"expected a number, got {val!r}", self.name(key))
        if integer:
            if float(val) != int(val):
                raise ConfigError("expected an integer", self.name(key))
            return int(val)
        if not math.isfinite(val):
            raise ConfigError("must be finite", self.name(key))
        return float(val)

    def numbers(self, key: str, default=None, required=False, angle=False):
        """Scalar or list of numbers; returned as float or list of float."""
        val = self.get(key, default, required)
        if val is None:
            return None
        if isinstance(val, list):
            return [parse_angle(v, f"{self.name(key)}[{i}]") if angle
                    else _plain_number(v, f"{self.name(key)}[{i}]") for i, v in enumerate(val)]
        return parse_angle(val, self.name(key)) if angle else _plain_number(val, self.name(key))

    def section(self, key: str, required: bool = False) -> "_Section":
        val = self.get(key, {} if not required else None, required)
        return _Section(val, self.name(key), self.strict)

    def finish(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if not extra:
            return
        msg = f"unknown key(s) {extra}"
        if self.strict:
            raise ConfigError(msg, self.path or "<root>")
        warnings.warn(f"{self.path or '<root>'}: {msg} ignored", stacklevel=3)


def _plain_number(v: Any, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", name)
    return float(v)


def _grid(sec: _Section, key: str, angle: bool = False) -> list[float]:
    """List of values, or {"start", "stop", "num"} for an inclusive linspace."""
    raw = sec.get(key, required=True)
    if isinstance(raw, dict):
        g = _Section(raw, sec.name(key), sec.strict)
        start = g.number("start", required=True, angle=angle)
        stop = g.number("stop", required=True, angle=angle)
        num = g.number("num", required=True, integer=True)
        g.finish()
        if num < 1:
            raise ConfigError("must be >= 1", g.name("num"))
        return [float(x) for x in np.linspace(start, stop, num)]
    vals = sec.numbers(key, angle=angle)
    vals = vals if isinstance(vals, list) else [vals]
    if not vals:
        raise ConfigError("must not be empty", sec.name(key))
    return vals


@dataclass
class GroundSettings:
    k: int = 2
    method: str = "auto"


@dataclass
class GapScanSettings:
    J_values: list[float]
    theta_values: list[float]
    method: str = "auto"


@dataclass
class MeanFieldSettings:
    params: MeanFieldParams = field(default_factory=MeanFieldParams)
    initial: MeanFieldState = field(default_factory=lambda: MeanFieldState(math.pi / 4, 0.0))
    t_final: float = 100.0
    dt: float = 1e-3
    record_every: int = 50
    phi_range: tuple[float, float] = (-math.pi, 3 * math.pi)
    z_range: tuple[float, float] = (-0.9, 0.9)
    grid: tuple[int, int] = (33, 19)


@dataclass
class CommuteSettings:
    L: int = 3
    n_max: int = 4
    theta_values: list[float] = field(
        default_factory=lambda: [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi])
    tol: float = 1e-12


@dataclass
class RunConfig:
    command: str
    raw: dict
    lattice: LatticeSpec | None = None
    ground: GroundSettings | None = None
    gap_scan: GapScanSettings | None = None
    imprint: ImprintSpec | None = None
    evolution: EvolutionConfig | None = None
    meanfield: MeanFieldSettings | None = None
    commute: CommuteSettings | None = None


def _parse_lattice(sec: _Section) -> LatticeSpec:
    boundary = sec.get("boundary", "open")
    bond_theta = sec.get("bond_theta", "left")
    J = sec.numbers("J", 1.0)
    layout = None
    if sec.has("regions"):
        for key in ("theta", "U"):
            if sec.has(key):
                raise ConfigError("give either per-site values or regions, not both",
                                  sec.name(key))
        reg = sec.section("regions")
        sizes = reg.get("sizes", required=True)
        if (not isinstance(sizes, list) or len(sizes) != 3
                or not all(isinstance(s, int) and not isinstance(s, bool) for s in sizes)):
            raise ConfigError("expected three integers", reg.name("sizes"))
        theta = reg.numbers("theta", 0.0, angle=True)
        U = reg.numbers("U", 0.0)
        reg.finish()
        for name, vals in (("theta", theta), ("U", U)):
            if isinstance(vals, list) and len(vals) != 3:
                raise ConfigError("expected one value per region", reg.name(name))
        layout = RegionLayout(tuple(sizes),
                              theta if isinstance(theta, list) else (theta,) * 3,
                              U if isinstance(U, list) else (U,) * 3)
        L = sec.number("L", layout.L, integer=True)
        if L != layout.L:
            raise ConfigError(
                f"inconsistent totals: region sizes {list(layout.sizes)} sum to "
                f"{layout.L}, but L={L}", sec.name("regions"))
        N = sec.number("N", L, integer=True)
        sec.finish()
        return LatticeSpec.from_layout(layout, N=N, J=J, boundary=boundary,
                                       bond_theta=bond_theta)
    L = sec.number("L", required=True, integer=True)
    N = sec.number("N", L, integer=True)
    theta = sec.numbers("theta", 0.0, angle=True)
    U = sec.numbers("U", 0.0)
    sec.finish()
    spec = LatticeSpec(L=L, N=N, J=J, theta=theta, U=U, boundary=boundary,
                       bond_theta=bond_theta)
    return spec


def _prefix(err: ConfigError, section: str) -> ConfigError:
    field_name = err.field or ""
    if field_name and field_name != section and not field_name.startswith(section + "."):
        field_name = f"{section}.{field_name}"
    msg = str(err)
    if err.field and msg.startswith(err.field + ": "):
        msg = msg[len(err.field) + 2:]
    return ConfigError(msg, field_name or section)


def validate_config(data: Any, strict: bool = True) -> RunConfig:
    root = _Section(data, "", strict)
    command = root.get("command", required=True)
    if command not in COMMANDS:
        raise ConfigError(f"must be one of {list(COMMANDS)}, got {command!r}", "command")
    allowed = _SECTIONS[command] | {"command"}
    cfg = RunConfig(command=command, raw=data)

    if "lattice" in allowed:
        try:
            cfg.lattice = _parse_lattice(root.section("lattice", required=True))
        except ConfigError as err:
            raise _prefix(err, "lattice") from None

    if command == "ground":
        g = root.section("ground")
        cfg.ground = GroundSettings(k=g.number("k", 2, integer=True), method=g.get("method", "auto"))
        g.finish()
        if cfg.ground.method not in ("auto", "dense", "lanczos"):
            raise ConfigError("must be auto, dense or lanczos", "ground.method")
        if cfg.ground.k < 1:
            raise ConfigError("must be >= 1", "ground.k")

    if command == "gap-scan":
        g = root.section("gap_scan", required=True)
        cfg.gap_scan = GapScanSettings(
            J_values=_grid(g, "J_values"),
            theta_values=_grid(g, "theta_values", angle=True),
            method=g.get("method", "auto"),
        )
        g.finish()
        for i, th in enumerate(cfg.gap_scan.theta_values):
            if not (0 <= th <= math.pi + 1e-12):
                raise ConfigError("theta must lie in [0, π]", f"gap_scan.theta_values[{i}]")

    if command == "quench":
        im = root.section("imprint", required=True)
        site_set = im.get("site_set")
        if site_set is not None and (not isinstance(site_set, list) or not all(
                isinstance(s, int) and not isinstance(s, bool) for s in site_set)):
            raise ConfigError("expected a list of site indices", "imprint.site_set")
        try:
            cfg.imprint = ImprintSpec(
                mode=im.get("mode", "symmetric"),
                phi=im.number("phi", required=True, angle=True),
                split=im.number("split", None, integer=True),
                site_set=tuple(site_set) if site_set is not None else None,
            )
        except ConfigError as err:
            raise _prefix(err, "imprint") from None
        im.finish()
        # resolving now surfaces odd-L / missing-layout errors at parse time
        cfg.imprint.resolve(cfg.lattice.L, cfg.lattice.layout)
        ev = root.section("evolution")
        cfg.evolution = EvolutionConfig(
            t_final=ev.number("t_final", 100.0),
            dt=ev.number("dt", 0.05),
            method=ev.get("method", "auto"),
            krylov_dim=ev.number("krylov_dim", 30, integer=True),
            tol=ev.number("tol", 1e-9),
        )
        ev.finish()

    if command == "mft":
        m = root.section("meanfield")
        d = MeanFieldSettings()
        params = MeanFieldParams(J=m.number("J", d.params.J), U=m.number("U", d.params.U),
                                 N=m.number("N", d.params.N, integer=True))
        initial = MeanFieldState(phi=m.number("phi0", d.initial.phi, angle=True),
                                 z=m.number("z0", d.initial.z))
        if abs(initial.z) >= 1:
            raise ConfigError("must lie strictly inside (-1, 1)", "meanfield.z0")
        phi_range = m.numbers("phi_range", list(d.phi_range), angle=True)
        z_range = m.numbers("z_range", list(d.z_range))
        grid = m.get("grid", list(d.grid))
        for name, val in (("phi_range", phi_range), ("z_range", z_range), ("grid", grid)):
            if not isinstance(val, list) or len(val) != 2:
                raise ConfigError("expected two values", f"meanfield.{name}")
        if not all(isinstance(g, int) and not isinstance(g, bool) and g >= 2 for g in grid):
            raise ConfigError("expected two integers >= 2", "meanfield.grid")
        if not (-1 < z_range[0] < z_range[1] < 1):
            raise ConfigError("must lie strictly inside (-1, 1)", "meanfield.z_range")
        if not phi_range[0] < phi_range[1]:
            raise ConfigError("must be increasing", "meanfield.phi_range")
        cfg.meanfield = MeanFieldSettings(
            params=params, initial=initial,
            t_final=m.number("t_final", d.t_final), dt=m.number("dt", d.dt),
            record_every=m.number("record_every", d.record_every, integer=True),
            phi_range=tuple(phi_range), z_range=tuple(z_range), grid=tuple(grid),
        )
        m.finish()
        if not cfg.meanfield.dt > 0 or cfg.meanfield.t_final < cfg.meanfield.dt:
            raise ConfigError("need dt > 0 and t_final >= dt", "meanfield.dt")
        if cfg.meanfield.record_every < 1:
            raise ConfigError("must be >= 1", "meanfield.record_every")

    if command == "commute-test":
        c = root.section("commute_test")
        d = CommuteSettings()
        thetas = c.numbers("theta_values", d.theta_values, angle=True)
        cfg.commute = CommuteSettings(
            L=c.number("L", d.L, integer=True), n_max=c.number("n_max", d.n_max, integer=True),
            theta_values=thetas if isinstance(thetas, list) else [thetas],
            tol=c.number("tol", d.tol),
        )
        c.finish()
        if cfg.commute.L < 1:
            raise ConfigError("must be >= 1", "commute_test.L")
        if cfg.commute.n_max < 2:
            raise ConfigError("must be >= 2 (interior subspace is empty otherwise)",
                              "commute_test.n_max")
        for i, th in enumerate(cfg.commute.theta_values):
            if not (0 <= th <= math.pi + 1e-12):
                raise ConfigError("theta must lie in [0, π]", f"commute_test.theta_values[{i}]")

    root.finish()
    return cfg


def parse_config(path: str | Path, strict: bool = True) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"JSON syntax error at line {err.lineno}, column {err.colno}: "
                          f"{err.msg}") from None
    return validate_config(data, strict=strict)
