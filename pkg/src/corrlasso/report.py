"""CSV output of paired theory/simulation results."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

from .config import CONFIG_MARKER, ProblemConfig
from .harness import METRICS, SweepPoint


def columns() -> list[str]:
    cols = ["lambda"]
    for metric in METRICS:
        cols += [f"theory_{metric}", f"emp_{metric}_mean", f"emp_{metric}_stderr"]
    cols += ["alpha_star", "beta_star", "chi_star", "mu_star", "trials", "nonconverged_count",
             "status"]
    return cols


def _num(v) -> str:
    if v is None:
        return ""
    return f"{float(v):.16e}"  # 17 significant digits round-trip a double exactly


def _row(point: SweepPoint) -> list[str]:
    th, emp = point.theory, point.empirical
    row = [_num(point.lam)]
    for metric in METRICS:
        row.append(_num(getattr(th, metric)) if th else "")
        if emp:
            s = emp[metric]
            row += [_num(s.mean), _num(s.stderr)]
        else:
            row += ["", ""]
    if th:
        sp = th.saddle
        row += [_num(sp.alpha_star), _num(sp.beta_star), _num(sp.chi_star), _num(sp.mu_star)]
    else:
        row += [""] * 4
    row += [str(emp.trial_count) if emp else "", str(emp.nonconverged_count) if emp else ""]
    row.append(point.error or "ok")
    return row


def render_csv(results: Sequence[SweepPoint], config: ProblemConfig) -> str:
    if not results:
        raise ValueError("no results to write")
    buf = io.StringIO()
    buf.write(CONFIG_MARKER + "\n")
    for line in config.to_yaml().splitlines():
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns())
    for point in results:
        writer.writerow(_row(point))
    return buf.getvalue()


def emit_csv(results: Sequence[SweepPoint], config: ProblemConfig, path) -> Path:
    """Write the results table, preceded by the config as a ``#`` comment block."""
    text = render_csv(results, config)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_csv(path) -> list[dict[str, str]]:
    """Rows of a results file as dicts, skipping the comment header."""
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))
