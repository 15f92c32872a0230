"""Run configuration: flat ``key = value`` text or JSON, one canonical form.

Lines starting with ``#`` are comments.  Every key has a fixed type; unknown
keys, duplicates and malformed values are rejected.  ``serialize`` writes all
keys in sorted order with ``repr`` floats, so ``serialize(parse(s))`` is a
fixed point after one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

COMMANDS = ("solve", "convexity", "dual-check", "barrier", "counterexample",
            "sums-probe", "catalog")
BACKENDS = ("auto", "compiled", "python", "generic")
U64 = 2 ** 64


class ConfigError(ValueError):
    pass


def _str(v):
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}")
    if "\n" in v or "\r" in v:
        raise ConfigError("string values must be single-line")
    return v.strip()


def _bool(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.strip().lower() in ("true", "false"):
        return v.strip().lower() == "true"
    raise ConfigError(f"expected true or false, got {v!r}")


def _int(v):
    if isinstance(v, bool):
        raise ConfigError(f"expected an integer, got {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, float) and v.is_integer():
        return int(v)
    try:
        return int(str(v).strip())
    except ValueError:
        raise ConfigError(f"expected an integer, got {v!r}") from None


def _float(v):
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {v!r}") from None
    if f != f or f in (float("inf"), float("-inf")):
        raise ConfigError(f"non-finite number {v!r}")
    return f


def _list(conv):
    def parse(v):
        if isinstance(v, (list, tuple)):
            items = list(v)
        elif isinstance(v, str):
            items = [s for s in (t.strip() for t in v.split(",")) if s] if v.strip() else []
        else:
            items = [v]
        return tuple(conv(i) for i in items)
    return parse


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_fmt(i) for i in v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    """All inputs of one CLI run.

    ``metric`` empty means the Euclidean metric of the grid dimension.
    ``domain`` and ``boundary`` are expressions in ``x1 ... x9``; an empty
    domain means the whole box.
    """

    command: str = "solve"
    subequation: str = "laplace:n=2"
    metric: str = ""
    domain: str = ""
    lo: tuple = (0.0, 0.0)
    hi: tuple = (1.0, 1.0)
    grid: tuple = (17, 17)
    boundary: str = "0"
    u: str = ""
    v: str = ""
    lambdas: tuple = (-1.0, 0.0, 1.0)
    eps: tuple = (0.1, 0.01, 0.001)
    tol_iter: float = 1e-10
    tol_residual: float = 1e-8
    max_sweeps: int = 100000
    parallel: bool = False
    threads: int = 0
    backend: str = "auto"
    samples: int = 100
    points: int = 8
    x0: tuple = ()
    c: float = 0.5
    h: float = 0.02
    seed: int = 0
    out: str = ""

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _TYPES[f.name](getattr(self, f.name)))
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if not 0 <= self.seed < U64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        n = len(self.grid)
        if n == 0 or len(self.lo) != n or len(self.hi) != n:
            raise ConfigError("lo, hi and grid must have the same nonzero length")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ConfigError("need lo < hi on every axis")
        if any(k < 3 for k in self.grid):
            raise ConfigError("grid needs at least 3 nodes per axis")
        if self.tol_iter <= 0 or self.tol_residual <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_sweeps < 1 or self.samples < 1 or self.points < 1 or self.threads < 0:
            raise ConfigError("counts must be positive")
        if any(e <= 0 for e in self.eps):
            raise ConfigError("eps ladder entries must be positive")
        if self.x0 and len(self.x0) != n:
            raise ConfigError("x0 must have one coordinate per grid axis")
        if self.h <= 0:
            raise ConfigError("h must be positive")

    @property
    def dim(self):
        return len(self.grid)

    def to_dict(self):
        return {f.name: (list(getattr(self, f.name)) if isinstance(getattr(self, f.name), tuple)
                         else getattr(self, f.name)) for f in fields(self)}

    def replace(self, **kw):
        d = self.to_dict()
        for k in kw:
            if k not in _TYPES:
                raise ConfigError(f"unknown key {k!r}")
        d.update(kw)
        return RunConfig(**d)


_TYPES = {
    "command": _str, "subequation": _str, "metric": _str, "domain": _str,
    "lo": _list(_float), "hi": _list(_float), "grid": _list(_int),
    "boundary": _str, "u": _str, "v": _str,
    "lambdas": _list(_float), "eps": _list(_float),
    "tol_iter": _float, "tol_residual": _float, "max_sweeps": _int,
    "parallel": _bool, "threads": _int, "backend": _str,
    "samples": _int, "points": _int, "x0": _list(_float),
    "c": _float, "h": _float, "seed": _int, "out": _str,
}


def from_mapping(d):
    unknown = sorted(set(d) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    return RunConfig(**d)


def parse_text(text):
    """Parse ``key = value`` lines (or a JSON object) into a RunConfig."""
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("JSON config must be an object")
        return from_mapping(d)
    d = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        k, v = s.split("=", 1)
        k = k.strip()
        if k in d:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        d[k] = v.strip()
    return from_mapping(d)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())


def serialize(cfg):
    """Canonical text form: every key, sorted, one per line."""
    d = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    return "".join(f"{k} = {_fmt(d[k])}\n" for k in sorted(d))


def to_json(cfg):
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"
