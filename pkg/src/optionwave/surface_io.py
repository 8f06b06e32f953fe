"""CSV reading and writing of price surfaces (``s,t,price`` rows, t-major, s ascending)."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .blackscholes import PriceSurface
from .errors import ValidationError
from .numerics import Grid1D

SURFACE_HEADER = ("s", "t", "price")
OVERLAY_HEADER = ("s", "t", "price", "model")


def fmt(x: float) -> str:
    # shortest repr that round-trips exactly (always >= 12 significant digits of information)
    return repr(float(x))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_rows(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def write_surface_csv(surface: PriceSurface, path, model: Optional[np.ndarray] = None) -> None:
    """Write ``s,t,price`` (or ``s,t,price,model`` when ``model`` is given)."""
    s = surface.s_grid.points()
    t = surface.t_grid.points()
    rows = []
    for j, tj in enumerate(t):
        for i, si in enumerate(s):
            row = [fmt(si), fmt(tj), fmt(surface.prices[j, i])]
            if model is not None:
                row.append(fmt(model[j, i]))
            rows.append(row)
    _write_rows(path, OVERLAY_HEADER if model is not None else SURFACE_HEADER, rows)


def _uniform_grid(values: list[float], axis: str) -> Grid1D:
    if len(values) == 1:
        return Grid1D(values[0], 1.0, 1)
    grid = Grid1D.linspace(values[0], values[-1], len(values))
    pts = grid.points()
    tol = 1e-9 * max(1.0, max(abs(v) for v in values))
    bad = [v for v, p in zip(values, pts) if abs(v - p) > tol]
    if bad:
        raise ValidationError(f"{axis} values are not uniformly spaced (first offender {axis}={bad[0]!r})")
    return grid


def parse_surface_csv(data: bytes, source: str = "<memory>") -> PriceSurface:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{source}: not UTF-8 text") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError(f"{source}: empty file") from None
    if tuple(h.strip() for h in header) != SURFACE_HEADER:
        raise ValidationError(f"{source}:1: expected header 's,t,price', got {','.join(header)!r}")

    nodes: dict[tuple[float, float], float] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ValidationError(f"{source}:{line_no}: expected 3 fields, got {len(row)}")
        try:
            s, t, price = (float(cell) for cell in row)
        except ValueError:
            raise ValidationError(f"{source}:{line_no}: non-numeric cell in {row}") from None
        if not all(math.isfinite(v) for v in (s, t, price)):
            raise ValidationError(f"{source}:{line_no}: non-finite value in {row}")
        if price < 0:
            raise ValidationError(f"{source}:{line_no}: negative price {price}")
        if (s, t) in nodes:
            raise ValidationError(f"{source}:{line_no}: duplicate node s={s!r}, t={t!r}")
        nodes[(s, t)] = price
    if not nodes:
        raise ValidationError(f"{source}: no data rows")

    s_vals = sorted({k[0] for k in nodes})
    t_vals = sorted({k[1] for k in nodes})
    missing = [(s, t) for t in t_vals for s in s_vals if (s, t) not in nodes]
    if missing:
        shown = ", ".join(f"(s={s!r}, t={t!r})" for s, t in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        raise ValidationError(f"{source}: incomplete grid, missing {shown}{more}")
    s_grid = _uniform_grid(s_vals, "s")
    t_grid = _uniform_grid(t_vals, "t")
    prices = np.array([[nodes[(s, t)] for s in s_vals] for t in t_vals])
    meta = {"source": source, "sha256": sha256_bytes(data)}
    return PriceSurface(s_grid, t_grid, prices, meta)


def ingest_market_csv(path) -> PriceSurface:
    """Read and validate a ``s,t,price`` CSV; row order does not matter."""
    path = Path(path)
    return parse_surface_csv(path.read_bytes(), str(path))
