"""JSON run configuration: parsing, validation, and case construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .levelset import LevelSet, make_levelset, parse_radius
from .manufactured import ManufacturedCase, PatchCase, make_case

_KNOWN_KEYS = {
    "domain", "levelset", "example", "mu", "n", "one_over_h", "levels", "ns",
    "solver", "tol", "quad_degree_rhs", "quad_degree_err", "snap_tol",
    "negative_control",
}


@dataclass
class RunConfig:
    """Validated run options shared by all subcommands."""

    domain: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    levelset_spec: dict | None = None
    example: object = None          # 1 or "patch"
    mu: tuple = (1.0, 1.0)
    n: int | None = None
    one_over_h: float | None = None
    levels: list = field(default_factory=list)
    ns: list = field(default_factory=lambda: [8, 16, 32])
    solver: str = "direct"
    tol: float = 1e-10
    quad_degree_rhs: int = 8
    quad_degree_err: int = 8
    snap_tol: float = 1e-8
    negative_control: bool = False

    def make_levelset(self) -> LevelSet | None:
        if self.levelset_spec is None:
            if self.example == 1:
                return make_case(self.mu, self.domain).levelset
            return None
        try:
            return make_levelset(self.levelset_spec)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"config field 'levelset': {exc}") from exc

    def make_case(self):
        if self.example == 1:
            spec = self.levelset_spec or {}
            if spec and spec.get("type") != "circle":
                raise ConfigError("config field 'levelset': example 1 needs a circle")
            radius = parse_radius(spec.get("radius", math.pi / 7.0))
            center = tuple(spec.get("center", (0.0, 0.0)))
            return make_case(self.mu, self.domain, radius=radius, center=center)
        if self.example == "patch":
            return PatchCase(domain=self.domain, levelset=self.make_levelset())
        raise ConfigError("config field 'example': set to 1 or \"patch\" "
                          "to select a manufactured problem")

    def resolve_n(self) -> int:
        (x0, x1), _ = self.domain
        if self.n is not None:
            return self.n
        if self.one_over_h is not None:
            return int(round(self.one_over_h * (x1 - x0)))
        raise ConfigError("config requires 'n' or 'one_over_h'")

    def n_to_one_over_h(self, n: int) -> float:
        (x0, x1), _ = self.domain
        return n / (x1 - x0)


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def validate_config(raw: dict) -> RunConfig:
    """Reject unknown keys and out-of-range values, naming the field."""
    _require(isinstance(raw, dict), "config must be a JSON object")
    unknown = set(raw) - _KNOWN_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig()

    if "domain" in raw:
        d = raw["domain"]
        _require(isinstance(d, (list, tuple)) and len(d) == 2
                 and all(len(ax) == 2 for ax in d),
                 "config field 'domain': expected [[x0,x1],[y0,y1]]")
        (x0, x1), (y0, y1) = (tuple(map(float, ax)) for ax in d)
        _require(x1 > x0 and y1 > y0, "config field 'domain': empty extent")
        _require(abs((x1 - x0) - (y1 - y0)) <= 1e-12 * (x1 - x0),
                 "config field 'domain': axis extents must match (square cells)")
        cfg.domain = ((x0, x1), (y0, y1))

    if "levelset" in raw and raw["levelset"] is not None:
        _require(isinstance(raw["levelset"], dict) and "type" in raw["levelset"],
                 "config field 'levelset': expected an object with a 'type'")
        cfg.levelset_spec = raw["levelset"]

    if "example" in raw:
        _require(raw["example"] in (1, "patch"),
                 "config field 'example': must be 1 or \"patch\"")
        cfg.example = raw["example"]

    if "mu" in raw:
        m = raw["mu"]
        _require(isinstance(m, (list, tuple)) and len(m) == 2,
                 "config field 'mu': expected [mu1, mu2]")
        mu = tuple(float(v) for v in m)
        _require(mu[0] > 0.0 and mu[1] > 0.0,
                 f"config field 'mu': viscosities must be positive, got {list(mu)}")
        cfg.mu = mu

    if "n" in raw:
        _require(isinstance(raw["n"], int) and raw["n"] >= 2,
                 "config field 'n': integer >= 2 required")
        cfg.n = raw["n"]

    if "one_over_h" in raw:
        _require(float(raw["one_over_h"]) > 0,
                 "config field 'one_over_h': must be positive")
        cfg.one_over_h = float(raw["one_over_h"])

    if "levels" in raw:
        lv = raw["levels"]
        _require(isinstance(lv, (list, tuple)) and len(lv) >= 2
                 and all(float(v) > 0 for v in lv)
                 and all(b > a for a, b in zip(lv, lv[1:])),
                 "config field 'levels': strictly increasing positive 1/h values")
        cfg.levels = [float(v) for v in lv]

    if "ns" in raw:
        ns = raw["ns"]
        _require(isinstance(ns, (list, tuple)) and all(isinstance(v, int) and v >= 2 for v in ns),
                 "config field 'ns': list of integers >= 2")
        cfg.ns = list(ns)

    if "solver" in raw:
        _require(raw["solver"] in ("direct", "iterative"),
                 "config field 'solver': 'direct' or 'iterative'")
        cfg.solver = raw["solver"]

    if "tol" in raw:
        t = float(raw["tol"])
        _require(0.0 < t <= 1e-6, "config field 'tol': must lie in (0, 1e-6]")
        cfg.tol = t

    for key in ("quad_degree_rhs", "quad_degree_err"):
        if key in raw:
            _require(isinstance(raw[key], int) and raw[key] >= 1,
                     f"config field '{key}': positive integer required")
            setattr(cfg, key, raw[key])

    if "snap_tol" in raw:
        s = float(raw["snap_tol"])
        _require(0.0 < s < 0.1, "config field 'snap_tol': must lie in (0, 0.1)")
        cfg.snap_tol = s

    if "negative_control" in raw:
        _require(isinstance(raw["negative_control"], bool),
                 "config field 'negative_control': true or false")
        cfg.negative_control = raw["negative_control"]

    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return validate_config(raw)
