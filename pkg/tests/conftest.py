from __future__ import annotations

from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_pair(rng) -> tuple[np.ndarray, np.ndarray]:
    """n = 20, d_x = 3, d_y = 2 with a nonlinear link between the blocks."""
    X = rng.standard_normal((20, 3))
    Y = np.column_stack([np.sin(X[:, 0]) + 0.3 * rng.standard_normal(20), X[:, 1] * X[:, 2]])
    return X, Y


@pytest.fixture
def write_csv(tmp_path) -> Callable[..., Path]:
    def _write(name: str, values, header: Sequence[str] | None = None) -> Path:
        p = tmp_path / name
        A = np.asarray(values, dtype=np.float64)
        if A.ndim == 1:
            A = A.reshape(-1, 1)
        lines = [",".join(header)] if header is not None else []
        lines += [",".join(f"{v:.17g}" for v in row) for row in A]
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return p

    return _write
