"""
Report and field emission.

JSON reports keep insertion order and write floats with their shortest
round-trip representation, so identical inputs give byte-identical files.
Non-finite floats are written as the strings "inf", "-inf" and "nan".
"""

import json
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from neharilab.core.grid import Grid, GridField, build_grid
from neharilab.errors import GridError
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

PathLike = Union[str, Path]


def _float(value: float) -> Union[float, str]:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_jsonable(obj: Any) -> Any:
    """
    Convert a report object into plain JSON types.

    Handles dataclasses, pydantic models, enums, numpy arrays and scalars,
    grids and fields, mappings and sequences.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, np.bool_):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, GridField):
        return {"grid": to_jsonable(obj.grid), "values": to_jsonable(obj.values)}
    if isinstance(obj, Grid):
        return {"dim": obj.dim, "extents": [list(e) for e in obj.extents], "counts": list(obj.counts)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if hasattr(obj, "model_dump"):
        return to_jsonable(obj.model_dump())
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(getattr(obj, k)) for k in asdict(obj)}
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(obj: Any, path: PathLike) -> Path:
    """
    Write a report as JSON.

    Args:
        obj: Report object (anything to_jsonable accepts).
        path: Output path; parent directories are created.

    Returns:
        The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    logger.info(f"Wrote report {path}")
    return path


def _grid_header(grid: Grid) -> str:
    extents = ",".join(f"{a!r},{b!r}" for a, b in grid.extents)
    counts = ",".join(str(c) for c in grid.counts)
    return f"# dim,{grid.dim}; extents,{extents}; counts,{counts}"


def write_field_csv(field: GridField, path: PathLike) -> Path:
    """One row per node: coordinates, then the nodal value."""
    grid = field.grid
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coords = grid.coordinates()
    names = ["x", "y", "z"][: grid.dim] if grid.dim <= 3 else [f"x{k + 1}" for k in range(grid.dim)]
    lines = [_grid_header(grid), ",".join(names + ["u"])]
    for point, value in zip(coords, field.values):
        lines.append(",".join(repr(float(c)) for c in point) + "," + repr(float(value)))
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote field {path} ({grid.size} nodes)")
    return path


def _parse_header(line: str) -> Tuple[int, List[Tuple[float, float]], List[int]]:
    try:
        parts = [p.strip() for p in line.lstrip("#").split(";")]
        fields = {p.split(",", 1)[0]: p.split(",", 1)[1] for p in parts}
        dim = int(fields["dim"])
        flat = [float(v) for v in fields["extents"].split(",")]
        counts = [int(v) for v in fields["counts"].split(",")]
    except (KeyError, IndexError, ValueError) as e:
        raise GridError(f"malformed field header {line!r}: {e}") from e
    return dim, [(flat[2 * k], flat[2 * k + 1]) for k in range(len(flat) // 2)], counts


def read_field_csv(path: PathLike) -> GridField:
    """
    Read a field written by write_field_csv.

    Raises:
        GridError: malformed header or row count not matching the grid.
    """
    lines = Path(path).read_text().splitlines()
    if len(lines) < 2:
        raise GridError(f"{path}: field file has no header")
    dim, extents, counts = _parse_header(lines[0])
    grid = build_grid(dim, extents, counts)
    rows = [line for line in lines[2:] if line.strip()]
    if len(rows) != grid.size:
        raise GridError(f"{path}: {len(rows)} rows for a grid of {grid.size} nodes")
    values = np.array([float(row.rsplit(",", 1)[1]) for row in rows])
    return GridField(grid, values)


def write_table_csv(rows: Iterable[Union[Mapping[str, Any], Any]], path: PathLike,
                    columns: Sequence[str] = ()) -> Path:
    """Write records (dicts or dataclasses) as CSV; columns default to the first record's keys."""
    records: List[Dict[str, Any]] = [asdict(r) if is_dataclass(r) else dict(r) for r in rows]
    cols = list(columns) or (list(records[0]) if records else [])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(cols)]
    for rec in records:
        cells = []
        for c in cols:
            v = rec.get(c)
            if isinstance(v, (float, np.floating)):
                cells.append(str(_float(float(v))) if not math.isfinite(v) else repr(float(v)))
            else:
                cells.append("" if v is None else str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote table {path} ({len(records)} rows)")
    return path
