"""Experiment configuration files (TOML).

Grammar::

    [domain]
    kind = "disc"            # disc | ellipse | curve
    R = 0.6                  # disc radius; a list makes a sweep
    # p = 0.5; q = 0.4       # ellipse semi-axes
    # file = "shape.txt"     # curve: two-column point file, relative to this config
    center = [0.0, 0.0]      # optional

    [problem]
    H = -1.0                 # number or list
    a = 1.0                  # default 1
    h = 0.05                 # number or list

    [solver]                 # optional, every key has a default
    newton_tol = 1e-10
    max_newton_iters = 50
    continuation_steps = 10
    damping = 0.5
    initial_guess = "boundary-constant"   # or "radial-cap"

    [checks]                 # optional
    ids = ["grad_estimate_1_1", "min_principle_2_1"]   # default: all
    [checks.slack]           # optional overrides of the calibrated constants
    gradient = 1.0

    [output]
    dir = "out"
    formats = ["csv", "json"]   # subset of csv, json, svg
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from hypcmc.analysis import THEOREM_IDS, Slack
from hypcmc.geometry import DomainSpec, load_curve, make_domain
from hypcmc.solver import SolverConfig

FORMATS = ("csv", "json", "svg")
_SECTIONS = {
    "domain": {"kind", "R", "p", "q", "file", "center"},
    "problem": {"H", "a", "h"},
    "solver": {f.name for f in dataclasses.fields(SolverConfig)},
    "checks": {"ids", "slack"},
    "output": {"dir", "formats"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the file, line and key where known."""


def _locate(text: str, section: str, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        head = re.match(r"\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None and re.match(rf"\s*{re.escape(key)}\s*=", line):
            return i
    return None


@dataclass(frozen=True)
class ExperimentConfig:
    domain_kind: str
    domain_params: dict
    center: tuple = (0.0, 0.0)
    H: tuple = (0.0,)
    a: float = 1.0
    h: tuple = (0.05,)
    R: tuple = ()
    solver: SolverConfig = field(default_factory=SolverConfig)
    checks: tuple = THEOREM_IDS
    slack: Slack = field(default_factory=Slack)
    out_dir: Path = Path("out")
    formats: tuple = ("csv", "json")

    def domain(self, R: float | None = None) -> DomainSpec:
        if self.domain_kind == "curve":
            return load_curve(self.domain_params["file"])
        params = dict(self.domain_params)
        if self.domain_kind == "disc":
            params["R"] = self.R[0] if R is None else R
        return make_domain(self.domain_kind, params, self.center)

    @property
    def is_sweep(self) -> bool:
        return len(self.H) > 1 or len(self.h) > 1 or len(self.R) > 1

    def single(self) -> tuple[DomainSpec, float, float]:
        """Domain, ``H`` and ``h`` of a non-sweep config."""
        if self.is_sweep:
            raise ConfigError("list-valued H, h or R is only allowed for the sweep command")
        return self.domain(), self.H[0], self.h[0]

    def with_overrides(self, h=None, out_dir=None, formats=None) -> "ExperimentConfig":
        kw = {}
        if h is not None:
            kw["h"] = (_positive(h, "--h"),)
        if out_dir is not None:
            kw["out_dir"] = Path(out_dir)
        if formats is not None:
            kw["formats"] = _formats(formats, "--format")
        return dataclasses.replace(self, **kw)


def _positive(x, where) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0:
        raise ConfigError(f"{where}: expected a positive number, got {x!r}")
    return float(x)


def _number(x, where) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _number_list(x, where, check) -> tuple:
    if isinstance(x, list):
        if not x:
            raise ConfigError(f"{where}: sweep list is empty")
        return tuple(check(v, where) for v in x)
    return (check(x, where),)


def _formats(x, where) -> tuple:
    if isinstance(x, str):
        x = [f.strip() for f in x.split(",") if f.strip()]
    if not isinstance(x, list) or not x:
        raise ConfigError(f"{where}: at least one output format is required")
    bad = [f for f in x if f not in FORMATS]
    if bad:
        raise ConfigError(f"{where}: unknown format(s) {bad}; choose from {list(FORMATS)}")
    return tuple(f for f in FORMATS if f in x)


def _curvature(H, where) -> float:
    H = _number(H, where)
    if H > 1:
        raise ConfigError(f"{where}: H={H} must be < 1 (or exactly 1 for the horosphere)")
    return H


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    def where(section, key=None):
        line = _locate(text, section, key)
        name = f"[{section}]" + (f".{key}" if key else "")
        return f"{source}:{line}: {name}" if line else f"{source}: {name}"

    for sec, val in raw.items():
        if sec not in _SECTIONS:
            raise ConfigError(f"{where(sec)}: unknown section")
        if not isinstance(val, dict):
            raise ConfigError(f"{where(sec)}: expected a table")
        for key in val:
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"{where(sec, key)}: unknown key")
    for sec in ("domain", "problem"):
        if sec not in raw:
            raise ConfigError(f"{source}: missing required section [{sec}]")

    dom = raw["domain"]
    kind = dom.get("kind")
    if kind not in ("disc", "ellipse", "curve"):
        raise ConfigError(f"{where('domain', 'kind')}: expected disc, ellipse or curve, got {kind!r}")
    params, R = {}, ()
    if kind == "disc":
        if "R" not in dom:
            raise ConfigError(f"{where('domain')}: disc needs R")
        R = _number_list(dom["R"], where("domain", "R"), _number)
    elif "R" in dom:
        raise ConfigError(f"{where('domain', 'R')}: R only applies to discs")
    if kind == "ellipse":
        for k in ("p", "q"):
            if k not in dom:
                raise ConfigError(f"{where('domain')}: ellipse needs p and q")
            params[k] = _number(dom[k], where("domain", k))
    if kind == "curve":
        if not isinstance(dom.get("file"), str):
            raise ConfigError(f"{where('domain', 'file')}: curve needs a point file path")
        path = Path(dom["file"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        params["file"] = str(path)
    center = dom.get("center", [0.0, 0.0])
    if not (isinstance(center, list) and len(center) == 2):
        raise ConfigError(f"{where('domain', 'center')}: expected [x, y]")
    center = tuple(_number(c, where("domain", "center")) for c in center)

    prob = raw["problem"]
    for k in ("H", "h"):
        if k not in prob:
            raise ConfigError(f"{where('problem')}: missing {k}")
    H = _number_list(prob["H"], where("problem", "H"), _curvature)
    h = _number_list(prob["h"], where("problem", "h"), _positive)
    a = _positive(prob.get("a", 1.0), where("problem", "a"))

    try:
        solver = SolverConfig(**raw.get("solver", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where('solver')}: {exc}") from None

    chk = raw.get("checks", {})
    ids = chk.get("ids", list(THEOREM_IDS))
    if not isinstance(ids, list) or not ids:
        raise ConfigError(f"{where('checks', 'ids')}: expected a nonempty list of check ids")
    unknown = sorted(set(ids) - set(THEOREM_IDS))
    if unknown:
        raise ConfigError(f"{where('checks', 'ids')}: unknown check(s) {unknown}")
    try:
        slack = Slack(**{k: _number(v, where("checks.slack", k))
                         for k, v in chk.get("slack", {}).items()})
    except TypeError as exc:
        raise ConfigError(f"{where('checks.slack')}: {exc}") from None

    out = raw.get("output", {})
    out_dir = out.get("dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError(f"{where('output', 'dir')}: expected a path string")
    formats = _formats(out.get("formats", ["csv", "json"]), where("output", "formats"))

    return ExperimentConfig(
        domain_kind=kind, domain_params=params, center=center, H=H, a=a, h=h, R=R,
        solver=solver, checks=tuple(sorted(set(ids))), slack=slack,
        out_dir=Path(out_dir), formats=formats)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path), path.parent)
