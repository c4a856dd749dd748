"""Point-set files and JSON Lines result records."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError
from .geometry import PointSet, QueryResult


def _parse_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for r, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", row=r)
        vals = []
        for c, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell.strip()!r}", row=r, column=c) from None
            if not math.isfinite(v):
                raise ParseError("coordinates must be finite", row=r, column=c)
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise ParseError("no points found")
    return np.array(rows, dtype=np.float64)


def _parse_json(text: str) -> np.ndarray:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", row=e.lineno, column=e.colno) from None
    if not isinstance(doc, dict) or "points" not in doc:
        raise ParseError('expected an object with a "points" list')
    pts = doc["points"]
    dim = doc.get("dim")
    if not isinstance(pts, list) or not pts:
        raise ParseError('"points" must be a non-empty list')
    width = dim if dim is not None else len(pts[0]) if isinstance(pts[0], list) else None
    out = []
    for r, p in enumerate(pts, start=1):
        if not isinstance(p, list):
            raise ParseError("each point must be a list of numbers", row=r)
        if len(p) != width:
            raise DimensionMismatch(f"row {r}: expected {width} coordinates, found {len(p)}")
        for c, v in enumerate(p, start=1):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParseError(f"not a finite number: {v!r}", row=r, column=c)
        out.append([float(v) for v in p])
    return np.array(out, dtype=np.float64)


def load_pointset(path) -> PointSet:
    """Read CSV (one point per row) or JSON ``{"dim": d, "points": [...]}``."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return PointSet(_parse_json(text))
    return PointSet(_parse_csv(text))


def save_pointset(points, path, fmt: str | None = None) -> None:
    """Write points so that ``load_pointset`` reads back identical floats."""
    path = Path(path)
    P = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=np.float64)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt == "json":
        path.write_text(json.dumps({"dim": int(P.shape[1]), "points": P.tolist()}))
    elif fmt == "csv":
        path.write_text("".join(",".join(repr(float(v)) for v in row) + "\n" for row in P))
    else:
        raise ValueError(f"unknown format {fmt!r}")


RECORD_FIELDS = ("variant", "distance", "witness_ids", "tau", "build_ms", "query_ms", "seed",
                 "backend", "query_index", "config", "version")


@dataclass
class ResultRecord:
    variant: str
    distance: float
    witness_ids: list
    tau: list
    build_ms: float
    query_ms: float
    seed: int
    backend: str
    query_index: int = 0
    config: dict = field(default_factory=dict)
    version: str = ""

    @classmethod
    def from_result(cls, res: QueryResult, **kw) -> "ResultRecord":
        return cls(
            variant=res.variant,
            distance=float(res.distance),
            witness_ids=[int(i) for i in res.witness_ids],
            tau=[[int(i), float(w)] for i, w in res.tau],
            **kw,
        )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in RECORD_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, line: str) -> "ResultRecord":
        return cls(**json.loads(line))
