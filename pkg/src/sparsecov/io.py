"""Data ingestion and result serialization.

CSV in: one observation per row, comma-delimited, UTF-8, with an optional
header row detected by being non-numeric.  Out: estimation results as JSON
(one object, matrices flattened row-major), tabular reports as CSV.  All
writers are deterministic — identical inputs produce identical bytes.
"""

import csv
import json
import math

import numpy as np

from .errors import DataFormatError
from .penalties import format_penalty


def read_data_csv(path):
    """Read an observations table into an (n, p) float array.

    The first non-blank row is skipped as a header when any of its cells
    fails to parse as a number.  Blank lines are ignored.  Ragged rows and
    non-numeric data cells raise :class:`DataFormatError` naming the
    offending 1-based line.
    """
    rows = []
    width = None
    first_content = True
    with open(path, newline="", encoding="utf-8-sig") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            vals = []
            bad = None
            for cell in row:
                try:
                    vals.append(float(cell))
                except ValueError:
                    bad = cell.strip()
                    break
            if bad is not None:
                if first_content:
                    first_content = False
                    continue  # header row
                raise DataFormatError(
                    f"line {lineno}: could not parse {bad!r} as a number"
                )
            first_content = False
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DataFormatError(
                    f"line {lineno}: expected {width} fields, got {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def write_data_csv(Y, path):
    """Write an observations table, one row per observation, no header."""
    Y = np.asarray(Y, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in Y:
            writer.writerow([repr(float(x)) for x in row])


def _flat(M):
    return [float(x) for x in np.asarray(M, dtype=float).ravel()]


def result_to_dict(result):
    """The JSON form of an estimation result.

    Matrices are flattened row-major; ``support_offdiag`` lists upper
    off-diagonal (i, j) pairs.  Cholesky results add ``T`` (and ``D`` when
    the objective carries one); rescaled companions ride along under
    ``companion`` when the target has one.
    """
    out = {
        "target": result.target,
        "p": int(result.p),
        "lambda": float(result.lam),
        "penalty": format_penalty(result.penalty),
        "estimate": _flat(result.estimate),
        "support_offdiag": [[int(i), int(j)] for i, j in result.support],
        "objective_trace": [float(x) for x in result.objective_trace],
        "converged": bool(result.converged),
    }
    if result.companion is not None:
        out["companion"] = _flat(result.companion)
    if result.T is not None:
        out["T"] = _flat(result.T)
    if result.D is not None:
        out["D"] = [float(x) for x in np.asarray(result.D, dtype=float).ravel()]
    return out


def write_result_json(result, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result_to_dict(result), fh)
        fh.write("\n")


def _cell_str(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_selection_csv(table, path):
    """Per-lambda table: ``lambda,bic,support_size,objective,converged``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "bic", "support_size", "objective", "converged"])
        for row in table:
            writer.writerow([
                _cell_str(float(row.lam)),
                _cell_str(float(row.bic)),
                row.support_size,
                _cell_str(float(row.objective)),
                _cell_str(bool(row.converged)),
            ])


RATE_CSV_COLUMNS = (
    "n", "p", "s",
    "mean_sq_frobenius", "sd_sq_frobenius",
    "mean_sq_operator", "sd_sq_operator",
    "true_zero_rate", "true_nonzero_rate",
    "failures", "replicates_used",
)


def write_rate_csv(report, path):
    """One row per (n, p) cell, columns as in ``RATE_CSV_COLUMNS``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RATE_CSV_COLUMNS)
        for c in report.cells:
            writer.writerow([_cell_str(getattr(c, name)) for name in RATE_CSV_COLUMNS])


def _json_num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def write_rate_json(report, path):
    """Summary with the fitted slope, its standard error, and the cells."""
    doc = {
        "slope": _json_num(report.slope),
        "slope_stderr": _json_num(report.slope_stderr),
        "x_definition": report.x_definition,
        "cells": [
            {name: (_json_num(v) if isinstance(v := getattr(c, name), float) else v)
             for name in RATE_CSV_COLUMNS}
            for c in report.cells
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
