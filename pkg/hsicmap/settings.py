from __future__ import annotations

import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

from hsicmap.kernelcore import Heuristic

_TRUE = ("1", "true", "True", "yes", "YES")


def _env(name: str, default: str | None = None) -> str:
    v = os.getenv(name, default)
    if v is None:
        raise RuntimeError(f"Missing required env var: {name}")
    return v


@dataclass(frozen=True)
class BandwidthSpec:
    """Either a heuristic rule or a fixed sigma for one variable."""

    heuristic: Heuristic
    sigma: float | None = None

    def __post_init__(self) -> None:
        if self.heuristic is Heuristic.FIXED:
            if self.sigma is None or not self.sigma > 0:
                raise ValueError(f"Fixed bandwidth must be positive, got {self.sigma}")


def parse_bandwidth(text: str) -> tuple[BandwidthSpec, BandwidthSpec]:
    """Parse a bandwidth option into (X spec, Y spec).

    Supports:
      - "auto-mean" / "auto-median"
      - "0.7" (same fixed sigma for X and Y)
      - "0.7,1.3" (sigma for X, sigma for Y)
    """
    t = (text or "").strip().lower()
    if t == "auto-mean":
        spec = BandwidthSpec(Heuristic.MEAN)
        return spec, spec
    if t == "auto-median":
        spec = BandwidthSpec(Heuristic.MEDIAN)
        return spec, spec

    parts = [p.strip() for p in t.split(",")]
    if len(parts) not in (1, 2):
        raise ValueError(f"Bad bandwidth: {text!r}")
    try:
        sigmas = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"Bad bandwidth: {text!r}") from None
    if len(sigmas) == 1:
        sigmas = sigmas * 2
    return BandwidthSpec(Heuristic.FIXED, sigmas[0]), BandwidthSpec(Heuristic.FIXED, sigmas[1])


@dataclass(frozen=True)
class Settings:
    log_level: str
    method: str
    features: int
    alpha: float
    null: str
    permutations: int | None
    seed: int
    bandwidth: str
    standardize: bool
    exact_limit: int


def load_settings() -> Settings:
    load_dotenv()

    method = _env("HSICMAP_METHOD", "hsic").strip().lower()
    if method not in ("hsic", "rhsic"):
        raise RuntimeError(f"HSICMAP_METHOD must be hsic or rhsic, got {method!r}")

    null = _env("HSICMAP_NULL", "gamma").strip().lower()
    if null not in ("gamma", "permutation"):
        raise RuntimeError(f"HSICMAP_NULL must be gamma or permutation, got {null!r}")

    perms_raw = _env("HSICMAP_PERMUTATIONS", "").strip()
    bandwidth = _env("HSICMAP_BANDWIDTH", "auto-mean").strip()
    try:
        parse_bandwidth(bandwidth)
        settings = Settings(
            log_level=_env("HSICMAP_LOG_LEVEL", "INFO").strip().upper(),
            method=method,
            features=int(_env("HSICMAP_FEATURES", "30")),
            alpha=float(_env("HSICMAP_ALPHA", "0.05")),
            null=null,
            permutations=int(perms_raw) if perms_raw else None,
            seed=int(_env("HSICMAP_SEED", "0")),
            bandwidth=bandwidth,
            standardize=_env("HSICMAP_STANDARDIZE", "0").strip() in _TRUE,
            exact_limit=int(_env("HSICMAP_EXACT_LIMIT", "4000")),
        )
    except ValueError as e:
        raise RuntimeError(f"Invalid HSICMAP_* setting: {e}") from e

    if not isinstance(logging.getLevelName(settings.log_level), int):
        raise RuntimeError(f"HSICMAP_LOG_LEVEL is not a logging level: {settings.log_level!r}")
    if settings.features < 1:
        raise RuntimeError("HSICMAP_FEATURES must be >= 1")
    if not 0.0 < settings.alpha < 1.0:
        raise RuntimeError("HSICMAP_ALPHA must lie in (0, 1)")
    if settings.permutations is not None and settings.permutations < 1:
        raise RuntimeError("HSICMAP_PERMUTATIONS must be >= 1")
    return settings
