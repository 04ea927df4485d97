from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from hsicmap.apps import CausalPair, Direction
from hsicmap.errors import InputError, ParseError
from hsicmap.seeding import generator, spawn_seeds

logger = logging.getLogger(__name__)

_FORWARD = {"1->2", "1→2", "x->y", "x→y"}
_BACKWARD = {"2->1", "2→1", "y->x", "y→x"}


@dataclass(frozen=True, eq=False)
class LabeledMatrix:
    values: np.ndarray
    names: list[str]

    @property
    def n(self) -> int:
        return self.values.shape[0]


def to_float(v: Any, *, path: str, line: int) -> float:
    s = str(v).strip()
    try:
        out = float(s)
    except ValueError:
        raise ParseError(path, line, f"not a number: {s!r}") from None
    if not np.isfinite(out):
        raise ParseError(path, line, f"non-finite value: {s!r}")
    return out


def _parses(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _is_header(cells: list[str]) -> bool:
    # a mixed row is a malformed data row, not a header
    return not any(_parses(c) for c in cells)


def read_matrix(path: str | Path) -> LabeledMatrix:
    """Read a CSV of decimal numbers, headerless or with one header row."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"File not found: {p}")

    with p.open(newline="", encoding="utf-8") as f:
        rows = [(i, [c.strip() for c in r]) for i, r in enumerate(csv.reader(f), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{p}: file is empty")

    names: list[str] | None = None
    if _is_header(rows[0][1]):
        names = rows[0][1]
        rows = rows[1:]
        if not rows:
            raise InputError(f"{p}: header but no data rows")

    width = len(names) if names is not None else len(rows[0][1])
    values = np.empty((len(rows), width), dtype=np.float64)
    for r, (line, cells) in enumerate(rows):
        if len(cells) != width:
            raise ParseError(str(p), line, f"expected {width} columns, got {len(cells)}")
        for c, cell in enumerate(cells):
            values[r, c] = to_float(cell, path=str(p), line=line)

    if names is None:
        names = [f"{p.stem}{j}" for j in range(width)]
    logger.info("Read %s: %s x %s", p, values.shape[0], values.shape[1])
    return LabeledMatrix(values, names)


def write_matrix(path: str | Path, values: np.ndarray, names: Sequence[str]) -> None:
    values = np.atleast_2d(values)
    write_rows(path, list(names), ([f"{v:.17g}" for v in row] for row in values))


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    logger.info("Wrote %s", p)


def _pair_file(pairdir: Path, pair_id: str) -> Path:
    if pair_id.isdigit():
        return pairdir / f"pair{int(pair_id):04d}.txt"
    return pairdir / f"{pair_id}.txt"


def _parse_direction(raw: str, *, path: str, line: int) -> Direction:
    t = raw.strip().lower().replace(" ", "")
    if t in _FORWARD:
        return Direction.X_CAUSES_Y
    if t in _BACKWARD:
        return Direction.Y_CAUSES_X
    raise ParseError(path, line, f"direction must be 1->2 or 2->1, got {raw!r}")


def _read_pair_columns(p: Path) -> np.ndarray | None:
    rows = []
    for line, text in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        cells = text.split()
        if not cells:
            continue
        rows.append([to_float(c, path=str(p), line=line) for c in cells])
    widths = {len(r) for r in rows}
    if not rows or widths != {2}:
        return None
    return np.asarray(rows, dtype=np.float64)


def read_pairs(
    pairdir: str | Path,
    metafile: str | Path,
    *,
    max_samples: int | None = None,
    seed: int = 0,
) -> list[CausalPair]:
    """Load cause-effect pairs from a directory of two-column files plus a metadata CSV.

    Metadata columns: id, direction (1->2 or 2->1), weight (optional, default 1).
    Pairs whose file does not have exactly two columns are skipped.
    With `max_samples`, larger pairs are subsampled without replacement.
    """
    pairdir = Path(pairdir)
    meta = Path(metafile)
    if not meta.exists():
        raise InputError(f"Metadata file not found: {meta}")

    with meta.open(newline="", encoding="utf-8") as f:
        entries = [(i, [c.strip() for c in r]) for i, r in enumerate(csv.reader(f), start=1) if any(c.strip() for c in r)]
    if entries and entries[0][1][0].lower() == "id":
        entries = entries[1:]

    sub_seeds = spawn_seeds(seed, len(entries)) if entries else []
    pairs: list[CausalPair] = []
    for (line, cells), s in zip(entries, sub_seeds):
        if len(cells) < 2:
            raise ParseError(str(meta), line, "expected at least id and direction")
        pair_id = cells[0]
        truth = _parse_direction(cells[1], path=str(meta), line=line)
        weight = to_float(cells[2], path=str(meta), line=line) if len(cells) > 2 and cells[2] else 1.0

        pf = _pair_file(pairdir, pair_id)
        if not pf.exists():
            raise InputError(f"{meta}:{line}: pair file not found: {pf}")
        data = _read_pair_columns(pf)
        if data is None:
            logger.warning("Skipping %s: not a two-column univariate pair", pf.name)
            continue
        if max_samples is not None and data.shape[0] > max_samples:
            keep = np.sort(generator(s).choice(data.shape[0], size=max_samples, replace=False))
            data = data[keep]
        pairs.append(CausalPair(pair_id, data[:, 0], data[:, 1], weight, truth))

    logger.info("Loaded %s pairs from %s", len(pairs), pairdir)
    return pairs


def write_pairs(pairdir: str | Path, metafile: str | Path, pairs: Sequence[CausalPair]) -> None:
    pairdir = Path(pairdir)
    pairdir.mkdir(parents=True, exist_ok=True)
    for pair in pairs:
        lines = (f"{a:.17g} {b:.17g}" for a, b in zip(pair.x, pair.y))
        _pair_file(pairdir, pair.pair_id).write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_rows(
        metafile,
        ["id", "direction", "weight"],
        ([p.pair_id, "1->2" if p.truth is Direction.X_CAUSES_Y else "2->1", float(p.weight)] for p in pairs),
    )
