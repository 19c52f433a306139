"""Structured run reports: report.json plus deterministic CSV tables.

Everything numeric is serialized via repr of Python floats so identical runs
produce byte-identical files; wall-clock timings live in their own segregated
block, the single part of a report allowed to differ between runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, is_dataclass, asdict
from typing import Any, Sequence

import numpy as np


@dataclass
class RunReport:
    """One command's outcome: echoed scenario, results, verdicts, timings.

    verdicts rows are {name, pass, detail}; a report fails (CLI exit 1) when
    any verdict has pass False.  Skipped checks carry pass None with the
    gating reason in detail and do not fail the run.
    """

    command: str
    config_sha256: str
    scenario: dict
    results: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def add_verdict(self, name: str, ok: bool | None, detail: str = ""):
        self.verdicts.append({"name": name, "pass": ok, "detail": detail})

    @property
    def passed(self) -> bool:
        return all(v["pass"] is not False for v in self.verdicts)


def _jsonable(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if obj != obj:
            return "nan"
        if obj in (float("inf"), float("-inf")):
            return repr(obj)
        return obj
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in seq]
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    return repr(obj)


def write_report(report: RunReport, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    doc = {
        "command": report.command,
        "config_sha256": report.config_sha256,
        "scenario": _jsonable(report.scenario),
        "results": _jsonable(report.results),
        "verdicts": _jsonable(report.verdicts),
        "files": sorted(report.files),
        "timings": _jsonable(report.timings),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _cell(v: Any) -> str:
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    s = str(v)
    if "," in s or '"' in s or "\n" in s:
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(path: str, header: Sequence[str],
              rows: Sequence[Sequence[Any]]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header {len(header)}")
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path


def measure_dict(est) -> dict:
    """MeasureEstimate / FamilySupEstimate as a provenance-carrying dict."""
    if hasattr(est, "samples"):
        return {
            "value": est.value, "error": est.error, "method": est.method,
            "samples": [[r, q] for r, q in est.samples],
            "extras": dict(est.extras),
        }
    return {
        "value": est.value, "note": est.note,
        "family": [{"field": r.field, "value": r.value,
                    "admissible": r.admissible, "waived": r.waived}
                   for r in est.table],
    }
