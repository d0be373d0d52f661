"""Problem configuration (JSON) and helpers that turn it into solver inputs.

Example::

    {
      "omega1": [4, 0], "omega2": [0, 4],
      "radius": 1.0, "U": 1.0, "N": 64, "placement_ratio": 0.7,
      "mc_samples": 1000000, "seed": 0, "quadrature": "monte_carlo"
    }

Periods and ``z0`` are given in units of the radius as ``[re, im]`` pairs
(a bare number is read as real). ``quadrature = "grid"`` replaces the Monte
Carlo points by a ``ceil(sqrt(mc_samples))``-per-side midpoint grid.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass

from .geometry import CircleObstacle, FundamentalRegion, GeometryError, grid_samples, sample_region
from .lattice import LatticeError, make_lattice

QUADRATURES = ("monte_carlo", "grid")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemConfig:
    omega1: complex
    omega2: complex
    radius: float = 1.0
    U: float = 1.0
    N: int = 64
    placement_ratio: float = 0.7
    mc_samples: int = 1_000_000
    seed: int = 0
    quadrature: str = "monte_carlo"
    z0: complex | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("omega1", "omega2", "z0"):
            if d[key] is not None:
                d[key] = [d[key].real, d[key].imag]
        return d

    def region(self) -> FundamentalRegion:
        r = self.radius
        lattice = make_lattice(self.omega1 * r, self.omega2 * r)
        z0 = None if self.z0 is None else self.z0 * r
        return FundamentalRegion(lattice, CircleObstacle(r), z0)

    def samples(self, region: FundamentalRegion | None = None, stream: int = 0, count: int | None = None):
        region = region or self.region()
        count = self.mc_samples if count is None else count
        if self.quadrature == "grid":
            return grid_samples(region, int(math.ceil(math.sqrt(count))))
        return sample_region(region, count, self.seed, stream)


def _complex(value, name):
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected [re, im] or a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{name}: expected [re, im] or a number, got {value!r}")


def _number(raw, name, kind=float):
    value = raw
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if kind is int:
        if value != int(value):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name}: must be finite")
    return float(value)


def config_from_dict(d: dict) -> ProblemConfig:
    """Validate a decoded JSON object; every failure names the offending field."""
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    known = set(ProblemConfig.__dataclass_fields__)
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    for key in ("omega1", "omega2"):
        if key not in d:
            raise ConfigError(f"missing required field {key!r}")
    kw = {
        "omega1": _complex(d["omega1"], "omega1"),
        "omega2": _complex(d["omega2"], "omega2"),
    }
    if "radius" in d:
        kw["radius"] = _number(d["radius"], "radius")
    if "U" in d:
        kw["U"] = _number(d["U"], "U")
    if "N" in d:
        kw["N"] = _number(d["N"], "N", int)
    if "placement_ratio" in d:
        kw["placement_ratio"] = _number(d["placement_ratio"], "placement_ratio")
    if "mc_samples" in d:
        kw["mc_samples"] = _number(d["mc_samples"], "mc_samples", int)
    if "seed" in d:
        kw["seed"] = _number(d["seed"], "seed", int)
    if "quadrature" in d:
        kw["quadrature"] = d["quadrature"]
    if d.get("z0") is not None:
        kw["z0"] = _complex(d["z0"], "z0")
    cfg = ProblemConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg: ProblemConfig) -> None:
    if not cfg.radius > 0:
        raise ConfigError(f"radius must be positive, got {cfg.radius}")
    if cfg.U == 0:
        raise ConfigError("U must be nonzero (errors are normalised by U*r)")
    if cfg.N < 4:
        raise ConfigError(f"N must be at least 4, got {cfg.N}")
    if not 0 < cfg.placement_ratio < 1:
        raise ConfigError(
            f"placement_ratio must lie strictly between 0 and 1 (charges inside the obstacle), got {cfg.placement_ratio}"
        )
    if cfg.mc_samples < 1:
        raise ConfigError("mc_samples must be at least 1")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    if cfg.quadrature not in QUADRATURES:
        raise ConfigError(f"quadrature must be one of {QUADRATURES}, got {cfg.quadrature!r}")
    if cfg.omega1 == 0:
        raise ConfigError("omega1 must be nonzero")
    tau = cfg.omega2 / cfg.omega1
    if not tau.imag > 0:
        raise ConfigError(
            f"Im(omega2/omega1) must be positive, got {tau.imag:.6g}; swap the periods or negate omega2"
        )
    try:
        cfg.region()
    except (GeometryError, LatticeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ProblemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
