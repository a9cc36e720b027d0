"""CSV serialization for every run artifact.

Floats are written with repr(), whose shortest round-trip property makes
parse(serialize(x)) == x bitwise for finite values; readers raise DataError
on structural problems so the CLI can map them to exit code 3.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsReport
from .exceptions import DataError

__all__ = [
    "write_data_csv",
    "read_data_csv",
    "write_truth_csv",
    "read_truth_csv",
    "true_u_from_truth",
    "summarize",
    "write_draws_csv",
    "read_draws_csv",
    "write_summary_csv",
    "read_summary_csv",
    "write_diagnostics_csv",
    "read_diagnostics_csv",
    "write_waic_csv",
    "read_waic_csv",
    "write_sensitivity_csv",
    "read_sensitivity_csv",
]

SUMMARY_COLUMNS = ("parameter", "mean", "sd", "q2.5", "q50", "q97.5")
DIAGNOSTICS_COLUMNS = (
    "parameter",
    "ess",
    "geweke_z",
    "hw_p",
    "hw_pass",
    "halfwidth_pass",
)
WAIC_COLUMNS = ("model", "lppd", "p_waic", "waic", "rank")
SENSITIVITY_COLUMNS = (
    "run",
    "Delta_mean",
    "Delta_sd",
    "tau_mean",
    "tau_sd",
    "recon_error",
    "recon_error_se",
)


def _fmt(value) -> str:
    return repr(float(value))


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise DataError(f"{where}: cannot parse number {text!r}") from exc


def _parse_bool(text: str, where: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise DataError(f"{where}: expected 'true' or 'false', got {text!r}")


def _read_rows(path, expected_header: tuple, where: str) -> list[list[str]]:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{where} file does not exist: {path}")
    with open(p, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or tuple(rows[0]) != expected_header:
        raise DataError(
            f"{where} file {path} must start with header {','.join(expected_header)}"
        )
    return rows[1:]


# -- observations ---------------------------------------------------------------

def write_data_csv(path, y) -> None:
    """Observation vector, header 'y', one value per line."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["y"])
        for value in np.asarray(y, dtype=float):
            writer.writerow([_fmt(value)])


def read_data_csv(path) -> np.ndarray:
    rows = _read_rows(path, ("y",), "data")
    if not rows:
        raise DataError(f"data file {path} holds no observations")
    values = []
    for i, row in enumerate(rows):
        if len(row) != 1:
            raise DataError(f"data file {path} line {i + 2}: expected one value")
        values.append(_parse_float(row[0], f"data line {i + 2}"))
    y = np.array(values)
    if not np.all(np.isfinite(y)):
        raise DataError(f"data file {path} holds non-finite observations")
    return y


# -- ground truth ---------------------------------------------------------------

def write_truth_csv(path, values: dict) -> None:
    """Ground-truth parameters as parameter,value rows."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["parameter", "value"])
        for name, value in values.items():
            writer.writerow([name, _fmt(value)])


def read_truth_csv(path) -> dict:
    rows = _read_rows(path, ("parameter", "value"), "truth")
    out = {}
    for i, row in enumerate(rows):
        if len(row) != 2:
            raise DataError(f"truth file {path} line {i + 2}: expected two fields")
        out[row[0]] = _parse_float(row[1], f"truth line {i + 2}")
    return out


def true_u_from_truth(values: dict) -> np.ndarray:
    """Extract the u_1..u_d entries of a truth table, in index order."""
    indexed = {}
    for name, value in values.items():
        if name.startswith("u_"):
            try:
                indexed[int(name[2:])] = value
            except ValueError as exc:
                raise DataError(f"malformed truth entry {name!r}") from exc
    if not indexed or sorted(indexed) != list(range(1, len(indexed) + 1)):
        raise DataError("truth table lacks a contiguous u_1..u_d block")
    return np.array([indexed[i] for i in range(1, len(indexed) + 1)])


# -- chain draws ----------------------------------------------------------------

def write_draws_csv(path, iters, draws, loglik) -> None:
    """Kept draws: iter, u_1..u_d, Delta, tau, nu, loglik per row."""
    draws = np.asarray(draws, dtype=float)
    d = draws.shape[1] - 3
    header = (
        ["iter"]
        + [f"u_{i + 1}" for i in range(d)]
        + ["Delta", "tau", "nu", "loglik"]
    )
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for it, row, ll in zip(iters, draws, loglik):
            writer.writerow([str(int(it))] + [_fmt(v) for v in row] + [_fmt(ll)])


def read_draws_csv(path) -> dict:
    """Parse a draw file back into arrays: iters, draws (d+3 cols), loglik."""
    p = Path(path)
    if not p.is_file():
        raise DataError(f"draws file does not exist: {path}")
    with open(p, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise DataError(f"draws file {path} is empty")
    header = rows[0]
    if (
        len(header) < 5
        or header[0] != "iter"
        or header[-4:] != ["Delta", "tau", "nu", "loglik"]
        or any(h != f"u_{i + 1}" for i, h in enumerate(header[1:-4]))
    ):
        raise DataError(f"draws file {path} has an unexpected header")
    iters, body, loglik = [], [], []
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise DataError(f"draws file {path} line {i + 2}: wrong field count")
        iters.append(int(_parse_float(row[0], "iter")))
        body.append([_parse_float(v, f"draws line {i + 2}") for v in row[1:-1]])
        loglik.append(_parse_float(row[-1], f"draws line {i + 2}"))
    return {
        "iters": np.array(iters, dtype=int),
        "draws": np.array(body, dtype=float).reshape(len(body), len(header) - 2),
        "loglik": np.array(loglik, dtype=float),
    }


# -- posterior summary ----------------------------------------------------------

def summarize(names, pooled) -> list[tuple]:
    """Posterior mean/sd/quantile rows over pooled draw columns."""
    pooled = np.asarray(pooled, dtype=float)
    rows = []
    for j, name in enumerate(names):
        col = pooled[:, j]
        rows.append(
            (
                name,
                float(np.mean(col)),
                float(np.std(col, ddof=1)),
                float(np.quantile(col, 0.025)),
                float(np.quantile(col, 0.5)),
                float(np.quantile(col, 0.975)),
            )
        )
    return rows


def write_summary_csv(path, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        for name, *stats in rows:
            writer.writerow([name] + [_fmt(v) for v in stats])


def read_summary_csv(path) -> list[tuple]:
    rows = _read_rows(path, SUMMARY_COLUMNS, "summary")
    out = []
    for i, row in enumerate(rows):
        if len(row) != len(SUMMARY_COLUMNS):
            raise DataError(f"summary file {path} line {i + 2}: wrong field count")
        out.append(
            (row[0], *(_parse_float(v, f"summary line {i + 2}") for v in row[1:]))
        )
    return out


# -- diagnostics ----------------------------------------------------------------

def write_diagnostics_csv(path, report: DiagnosticsReport) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(DIAGNOSTICS_COLUMNS)
        for row in report.parameters:
            writer.writerow(
                [
                    row.name,
                    _fmt(row.ess),
                    _fmt(row.geweke_z),
                    _fmt(row.hw.p_value),
                    "true" if row.hw.stationary else "false",
                    "true" if row.hw.halfwidth_ok else "false",
                ]
            )


def read_diagnostics_csv(path) -> list[dict]:
    rows = _read_rows(path, DIAGNOSTICS_COLUMNS, "diagnostics")
    out = []
    for i, row in enumerate(rows):
        if len(row) != len(DIAGNOSTICS_COLUMNS):
            raise DataError(f"diagnostics file {path} line {i + 2}: wrong field count")
        where = f"diagnostics line {i + 2}"
        out.append(
            {
                "parameter": row[0],
                "ess": _parse_float(row[1], where),
                "geweke_z": _parse_float(row[2], where),
                "hw_p": _parse_float(row[3], where),
                "hw_pass": _parse_bool(row[4], where),
                "halfwidth_pass": _parse_bool(row[5], where),
            }
        )
    return out


# -- model comparison -----------------------------------------------------------

def write_waic_csv(path, rows) -> None:
    """rows: (model, lppd, p_waic, waic, rank) tuples, already ranked."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(WAIC_COLUMNS)
        for model, lppd, p_waic, waic_value, rank in rows:
            writer.writerow(
                [model, _fmt(lppd), _fmt(p_waic), _fmt(waic_value), str(int(rank))]
            )


def read_waic_csv(path) -> list[dict]:
    rows = _read_rows(path, WAIC_COLUMNS, "waic")
    out = []
    for i, row in enumerate(rows):
        if len(row) != len(WAIC_COLUMNS):
            raise DataError(f"waic file {path} line {i + 2}: wrong field count")
        where = f"waic line {i + 2}"
        out.append(
            {
                "model": row[0],
                "lppd": _parse_float(row[1], where),
                "p_waic": _parse_float(row[2], where),
                "waic": _parse_float(row[3], where),
                "rank": int(_parse_float(row[4], where)),
            }
        )
    return out


# -- sensitivity ----------------------------------------------------------------

def write_sensitivity_csv(path, rows) -> None:
    """rows: (run, Delta_mean, Delta_sd, tau_mean, tau_sd, err, err_se)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SENSITIVITY_COLUMNS)
        for run, *stats in rows:
            writer.writerow([run] + [_fmt(v) for v in stats])


def read_sensitivity_csv(path) -> list[dict]:
    rows = _read_rows(path, SENSITIVITY_COLUMNS, "sensitivity")
    out = []
    for i, row in enumerate(rows):
        if len(row) != len(SENSITIVITY_COLUMNS):
            raise DataError(f"sensitivity file {path} line {i + 2}: wrong field count")
        where = f"sensitivity line {i + 2}"
        out.append(
            {
                "run": row[0],
                **{
                    key: _parse_float(value, where)
                    for key, value in zip(SENSITIVITY_COLUMNS[1:], row[1:])
                },
            }
        )
    return out
