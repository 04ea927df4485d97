"""Synthetic data: association gallery, noise regimes, additive-noise pairs, planted features."""
from __future__ import annotations

from typing import Callable

import numpy as np

from hsicmap.apps import CausalPair, Direction
from hsicmap.errors import InputError
from hsicmap.seeding import generator, spawn_seeds

Pair = tuple[np.ndarray, np.ndarray]


def associations(n: int = 500, seed: int = 0) -> dict[str, Pair]:
    """A gallery of bivariate association shapes, each from its own sub-stream."""
    makers: dict[str, Callable[[np.random.Generator], Pair]] = {
        "linear-low-noise": lambda g: _linear(g, n, 0.1),
        "linear-mid-noise": lambda g: _linear(g, n, 0.5),
        "linear-high-noise": lambda g: _linear(g, n, 1.5),
        "negative-linear": lambda g: _neg_linear(g, n),
        "quadratic": lambda g: _curve(g, n, lambda x: x * x, 0.05),
        "cubic": lambda g: _curve(g, n, lambda x: x ** 3, 0.05),
        "sinusoid": lambda g: _curve(g, n, lambda x: np.sin(4 * x), 0.1),
        "circle": lambda g: _circle(g, n),
        "cross": lambda g: _cross(g, n),
        "step": lambda g: _curve(g, n, np.sign, 0.1),
        "exponential": lambda g: _curve(g, n, np.exp, 0.1),
        "heteroscedastic": lambda g: _hetero(g, n),
        "clusters": lambda g: _clusters(g, n),
        "independent-uniform": lambda g: (g.uniform(-1, 1, n), g.uniform(-1, 1, n)),
        "independent-normal": lambda g: (g.standard_normal(n), g.standard_normal(n)),
    }
    seeds = spawn_seeds(seed, len(makers))
    return {name: make(generator(s)) for (name, make), s in zip(makers.items(), seeds)}


def _linear(g: np.random.Generator, n: int, noise: float) -> Pair:
    x = g.standard_normal(n)
    return x, x + noise * g.standard_normal(n)


def _neg_linear(g: np.random.Generator, n: int) -> Pair:
    x = g.standard_normal(n)
    return x, -x + 0.3 * g.standard_normal(n)


def _curve(g: np.random.Generator, n: int, f: Callable[[np.ndarray], np.ndarray], noise: float) -> Pair:
    x = g.uniform(-1, 1, n)
    return x, f(x) + noise * g.standard_normal(n)


def _circle(g: np.random.Generator, n: int) -> Pair:
    t = g.uniform(0, 2 * np.pi, n)
    r = 1 + 0.05 * g.standard_normal(n)
    return r * np.cos(t), r * np.sin(t)


def _cross(g: np.random.Generator, n: int) -> Pair:
    x = g.uniform(-1, 1, n)
    sign = np.where(g.random(n) < 0.5, 1.0, -1.0)
    return x, sign * x + 0.05 * g.standard_normal(n)


def _hetero(g: np.random.Generator, n: int) -> Pair:
    x = g.uniform(0, 1, n)
    return x, x + x * g.standard_normal(n) * 0.5


def _clusters(g: np.random.Generator, n: int) -> Pair:
    centres = np.array([[-1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    pick = g.integers(0, len(centres), n)
    pts = centres[pick] + 0.2 * g.standard_normal((n, 2))
    return pts[:, 0], pts[:, 1]


def noise_regimes(n: int = 300, seed: int = 0) -> dict[str, Pair]:
    """Linear and nonlinear relations under homoscedastic or heteroscedastic noise."""
    seeds = spawn_seeds(seed, 4)
    out: dict[str, Pair] = {}
    for (name, f, hetero), s in zip(
        [
            ("linear-homoscedastic", lambda x: x, False),
            ("linear-heteroscedastic", lambda x: x, True),
            ("nonlinear-homoscedastic", lambda x: np.sin(3 * x), False),
            ("nonlinear-heteroscedastic", lambda x: np.sin(3 * x), True),
        ],
        seeds,
    ):
        g = generator(s)
        x = g.uniform(-1, 1, n)
        scale = 0.1 + 0.4 * np.abs(x) if hetero else 0.2
        out[name] = (x, f(x) + scale * g.standard_normal(n))
    return out


MECHANISMS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "cubic": lambda x: x ** 3,
    "quadratic-shift": lambda x: 0.5 * (x + 1) ** 2,
    "tanh": lambda x: np.tanh(3 * x),
    "exponential": np.exp,
    "sine-linear": lambda x: x + 0.6 * np.sin(3 * x),
}


def anm_pair(mechanism: str = "cubic", n: int = 200, seed: int = 0, noise: float = 0.2) -> Pair:
    """x ~ U(-1, 1), y = f(x) + noise * N(0, 1)."""
    if mechanism not in MECHANISMS:
        raise InputError(f"Unknown mechanism {mechanism!r}; choose from {sorted(MECHANISMS)}")
    g = generator(seed)
    x = g.uniform(-1, 1, n)
    return x, MECHANISMS[mechanism](x) + noise * g.standard_normal(n)


def anm_suite(n_pairs: int = 100, n: int = 200, seed: int = 0, noise: float = 0.2) -> list[CausalPair]:
    """Additive-noise pairs cycling through MECHANISMS, orientation swapped at random."""
    names = list(MECHANISMS)
    flip_seed, *pair_seeds = spawn_seeds(seed, n_pairs + 1)
    flips = generator(flip_seed).random(n_pairs) < 0.5
    pairs = []
    for i, (s, flip) in enumerate(zip(pair_seeds, flips)):
        x, y = anm_pair(names[i % len(names)], n, s, noise)
        if flip:
            pairs.append(CausalPair(f"pair{i + 1:04d}", y, x, 1.0, Direction.Y_CAUSES_X))
        else:
            pairs.append(CausalPair(f"pair{i + 1:04d}", x, y, 1.0, Direction.X_CAUSES_Y))
    return pairs


def planted_feature(n: int = 200, d: int = 5, j: int = 2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Independent normal features; y is an exact copy of column j."""
    X = generator(seed).standard_normal((n, d))
    return X, X[:, [j]].copy()


def quadratic_feature(n: int = 500, d: int = 3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Uniform features on [-1, 1]; y = X[:, 0]^2 (no linear correlation)."""
    X = generator(seed).uniform(-1, 1, (n, d))
    return X, X[:, [0]] ** 2
