"""Result persistence: summary.json, plot-ready series_*.csv and run_meta.json.

``summary.json`` and the CSV files depend only on (config, seed); the run
timestamp lives in ``run_meta.json`` alone.
"""

from __future__ import annotations

import csv
import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


class OutputError(OSError):
    pass


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_csv(path: Path, columns, rows):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                # repr round-trips floats exactly
                writer.writerow([repr(v) if isinstance(v, float) else v for v in _plain(list(row))])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_results(results, out_dir, series: dict | None = None, meta: dict | None = None) -> Path:
    """Write the output files for one CLI invocation into ``out_dir``.

    ``results`` is any JSON-friendly structure (lists of ``SchemeResult``
    are converted through ``to_dict``). ``series`` maps a curve name to
    ``(columns, rows)`` and becomes ``series_<name>.csv``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror or exc}") from exc
    summary = {"results": _plain(results if results is not None else [])}
    _write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name, (columns, rows) in sorted((series or {}).items()):
        write_csv(out / f"series_{name}.csv", columns, rows)
    run_meta = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    run_meta.update(_plain(meta or {}))
    _write(out / "run_meta.json", json.dumps(run_meta, indent=2, sort_keys=True) + "\n")
    return out
