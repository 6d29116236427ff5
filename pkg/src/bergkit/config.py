"""Run configuration: defaults, ``key=value`` files and validation."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 1
    alpha: float = 0.0
    p: float = 2.0
    degree: int = 40
    radial_order: Optional[int] = None
    angular_order: Optional[int] = None
    shells: tuple = (0.9, 0.95, 0.98)
    rho: float = 0.5
    radius: float = 0.99  # lattice truncation radius
    sigma: tuple = (1.0, 2.0, 3.0)
    k: int = 1
    k_max: int = 20
    s: float = 4.0
    t: float = 0.0
    disk_radius: float = 0.5
    pairs: int = 10000
    symbol: str = "bump"
    measure: str = "dirac0"
    seed: int = 0
    out: Optional[str] = None
    strict: bool = False

    def validate(self) -> "RunConfig":
        if self.n not in (1, 2):
            raise ConfigError("n must be 1 or 2")
        if not self.alpha > -1:
            raise ConfigError("alpha must exceed -1")
        if not (1 < self.p < math.inf):
            raise ConfigError("p must lie in (1, inf)")
        if self.degree < 1:
            raise ConfigError("degree must be at least 1")
        for o in (self.radial_order, self.angular_order):
            if o is not None and o < 1:
                raise ConfigError("quadrature orders must be positive")
        if not self.shells or any(not 0 < s < 1 for s in self.shells):
            raise ConfigError("shells must lie in (0, 1)")
        if list(self.shells) != sorted(self.shells):
            raise ConfigError("shells must be increasing")
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if not 0 < self.radius < 1:
            raise ConfigError("radius must lie in (0, 1)")
        if not self.sigma or any(not s > 0 for s in self.sigma):
            raise ConfigError("sigma must be positive")
        if self.k < 0 or self.k_max < 0:
            raise ConfigError("k and k_max must be nonnegative")
        if not self.disk_radius > 0:
            raise ConfigError("disk_radius must be positive")
        if self.pairs < 1:
            raise ConfigError("pairs must be positive")
        return self

    def as_dict(self) -> dict:
        """Parameters that determine the output (the output path excluded)."""
        d = asdict(self)
        d.pop("out")
        d["shells"] = list(self.shells)
        d["sigma"] = list(self.sigma)
        return d


def _floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _optional_int(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return int(text)


_CONVERT = {"n": int, "alpha": float, "p": float, "degree": int, "radial_order": _optional_int,
            "angular_order": _optional_int, "shells": _floats, "rho": float, "radius": float,
            "sigma": _floats, "k": int, "k_max": int, "s": float, "t": float,
            "disk_radius": float, "pairs": int, "symbol": str, "measure": str, "seed": int,
            "out": lambda v: None if v in (None, "", "none") else str(v), "strict": _bool}


def update(cfg: RunConfig, values: dict) -> RunConfig:
    """Apply string (or already typed) values; unknown keys are errors."""
    names = {f.name for f in fields(RunConfig)}
    for key, val in values.items():
        key = key.strip().replace("-", "_")
        if key not in names:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(cfg, key, _CONVERT[key](val))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    return cfg


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{num}: expected key=value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out
