"""Count-series CSV files and the JSON report document."""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .changepoint import ChangePointEstimate
from .cusum import TestReport
from .estimate import EstimationResult
from .montecarlo import _jsonable

REPORT_SCHEMA = "inarcusum.report/1"

_INT = re.compile(r"^[+]?\d+$")


def parse_counts(text, source="<input>"):
    """Parse a single-column CSV of nonnegative integers with an optional ``count`` header."""
    rows = [line.strip() for line in text.splitlines()]
    rows = [r for r in rows if r]
    if rows and rows[0].lower().strip('"') == "count":
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{source}: no counts found")
    values = []
    for lineno, row in enumerate(rows, start=1):
        cell = row.split(",")[0].strip().strip('"')
        if "," in row.rstrip(","):
            raise ValueError(f"{source}: row {lineno} has more than one column: {row!r}")
        if cell.startswith("-") and cell[1:].isdigit():
            raise ValueError(f"{source}: row {lineno} is negative: {row!r}")
        if not _INT.match(cell):
            raise ValueError(f"{source}: row {lineno} is not a nonnegative integer: {row!r}")
        values.append(int(cell))
    return np.asarray(values, dtype=np.int64)


def read_counts(path):
    path = Path(path)
    return parse_counts(path.read_text(), source=str(path))


def format_counts(counts, header=True):
    lines = ["count"] if header else []
    lines.extend(str(int(v)) for v in counts)
    return "\n".join(lines) + "\n"


def write_counts(path, counts, header=True):
    Path(path).write_text(format_counts(counts, header))


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def estimation_document(est: EstimationResult):
    return {
        "lag_support": list(est.lag_support),
        "alpha_hat": est.alpha_hat.tolist(),
        "mu_hat": est.mu_hat,
        "theta_hat": est.theta_hat.tolist(),
        "sigma2_hat": est.sigma2_hat,
        "sigma2_negative": est.sigma2_negative,
        "alpha_sum_hat": est.alpha_sum_hat,
        "stable_fit": est.stable_fit,
        "Q_condition_number": est.condition_number,
        "information_matrix": est.I_hat.tolist(),
        "n": est.n,
    }


def decision_document(report: TestReport, path_samples=True):
    doc = {
        "kind": report.config.kind.value,
        "overall_alpha": report.config.overall_alpha,
        "alpha_star": report.alpha_star,
        "critical_value": report.critical,
        "reject": report.reject,
        "components": [
            {
                "component": c.component,
                "statistic": c.statistic,
                "critical_value": c.critical_value,
                "reject": c.reject,
                "direction": c.direction,
                "sup": c.sup,
                "inf": c.inf,
            }
            for c in report.components
        ],
    }
    if path_samples:
        doc["path"] = {"t": report.path.grid.tolist(), "values": report.path.values.tolist()}
    return doc


def changepoint_document(cp: ChangePointEstimate, n_initial):
    return {
        "scan": cp.kind.value,
        "weight_lag": cp.weight_lag,
        "tau_hat": cp.tau_hat,
        "raw_row": cp.tau_hat + n_initial,
        "extremum": cp.extremum,
        "partial_sums": cp.partial_sums.tolist(),
    }


def report_document(command, *, input_path=None, flags=None, seed=None, **sections):
    """Assemble the versioned report; every section is a JSON-ready mapping."""
    doc = {"schema": REPORT_SCHEMA, "command": command}
    if input_path is not None:
        doc["input"] = {"path": str(input_path), "sha256": file_digest(input_path)}
    doc["flags"] = flags or {}
    doc["seed"] = seed
    doc.update(sections)
    return _jsonable(doc)


def dump_report(doc, path=None):
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if path is None or str(path) == "-":
        return text
    Path(path).write_text(text)
    return text
