"""Bit-stable report emission.

Reports are JSON with every float rendered at 17 significant digits (exact
round-trip), keys sorted, and files written atomically (temp + rename), so a
given (config, seed, version) triple always produces byte-identical output.
CSV series use the same float rendering.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import ConfigError


def _render(obj: Any, pad: str) -> str:
    """JSON rendering with %.17g floats and sorted keys. Hand-rolled because
    the stdlib encoder hardwires float.__repr__ (shortest repr), which is
    round-trip exact but not the fixed 17-digit form reports pin."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ConfigError("reports must not contain NaN or infinity")
        return format(obj, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "tolist"):  # numpy arrays and scalars
        return _render(obj.tolist(), pad)
    inner = pad + "  "
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f"{inner}{json.dumps(str(k))}: {_render(v, inner)}"
            for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{_render(v, inner)}" for v in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    raise ConfigError(f"cannot serialize {type(obj).__name__} into a report")


def canonical_json(obj: Any) -> str:
    return _render(obj, "") + "\n"


def format_float(x: float) -> str:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return format(x, ".17g")


def csv_text(rows: Iterable[Sequence], header: Sequence[str] | None = None) -> str:
    lines = []
    if header is not None:
        lines.append(",".join(str(h) for h in header))
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_report(path: str | Path, report: Any) -> None:
    atomic_write_text(path, canonical_json(report))


def write_csv(path: str | Path, rows: Iterable[Sequence], header: Sequence[str] | None = None) -> None:
    atomic_write_text(path, csv_text(rows, header))


def grid_array_csv(values) -> str:
    """Grid arrays export one value per line, row-major for d >= 2."""
    flat = values.reshape(-1) if hasattr(values, "reshape") else values
    return "\n".join(format_float(float(v)) for v in flat) + "\n"


def spectrum_json(spec) -> dict:
    """SpectralDecomposition as JSON: eigenvalues plus solver residuals."""
    return {
        "eigenvalues": [float(v) for v in spec.eigenvalues],
        "residuals": None if spec.residuals is None else [float(v) for v in spec.residuals],
    }


def eigenfunctions_csv(spec) -> str:
    """One eigenfunction per column, grid points as rows (row-major grid)."""
    phi = spec.eigenfunctions
    header = [f"phi_{j + 1}" for j in range(phi.shape[0])]
    return csv_text(phi.T, header)


def coupling_matrix_json(matrix) -> dict:
    return {
        "ordering": list(matrix.ordering),
        "zero_threshold": matrix.zero_threshold,
        "spectrum_fingerprint": matrix.spectrum_fingerprint,
        "entries": [[float(v) for v in row] for row in matrix.entries],
        "boundary_mass": None
        if matrix.boundary_mass is None
        else [float(v) for v in matrix.boundary_mass],
    }


def coupling_matrix_csv(matrix) -> str:
    return csv_text(matrix.entries)
