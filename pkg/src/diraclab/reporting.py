"""Machine-readable report emission: CSV/JSON writers and the run manifest.

CSV floats are printed with 17 significant digits, locale-independent, so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

TOOL_VERSION = "0.1.0"


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return str(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n",
                    encoding="utf-8", newline="\n")


def nuclearity_table(report) -> Tuple[List[str], List[List]]:
    header = ["beta", "s_trace_norm", "t1"]
    for p in report.p_values:
        header.append(f"det_bound_p{p:g}")
    header += ["nu_bound", "fit_residual"]
    rows = []
    for i, beta in enumerate(report.beta_grid):
        row = [beta, report.s_trace_norms[i], report.t1_values[i]]
        row += [report.det_bounds[p][i] for p in report.p_values]
        row += [report.nu_bounds[i], report.fit_residuals[i]]
        rows.append(row)
    return header, rows


def nuclearity_payload(report) -> dict:
    return {
        "beta_grid": report.beta_grid,
        "s_trace_norms": report.s_trace_norms,
        "t1": report.t1_values,
        "p_norms": {f"{p:g}": report.p_norms[p] for p in report.p_values},
        "det_bounds": {f"{p:g}": report.det_bounds[p] for p in report.p_values},
        "nu_bounds": report.nu_bounds,
        "gap": report.gap,
        "m0": report.m0,
        "fitted_beta0": report.fitted_beta0,
        "fit_rms": report.fit_rms,
        "fit_window": report.fit_window,
        "fit_residuals": report.fit_residuals,
        "violations": report.violations,
        "degenerate": report.degenerate,
    }


def resolvent_table(report) -> Tuple[List[str], List[List]]:
    header = ["beta", "trace_norm", "beta_pow_s_times_norm", "hs_factor_n1",
              "hs_factor_n2", "in_window"]
    rows = []
    for i, beta in enumerate(report.beta_grid):
        rows.append([
            beta,
            report.norms[i],
            beta**report.s_power * report.norms[i],
            report.hs_norms[1][i],
            report.hs_norms[2][i],
            bool(report.window[i]),
        ])
    return header, rows


def resolvent_payload(report) -> dict:
    return {
        "beta_grid": report.beta_grid,
        "norms": report.norms,
        "s_power": report.s_power,
        "lam_max": report.lam_max,
        "window": report.window,
        "slope": report.slope,
        "c_sup": report.c_sup,
        "hs_norms": {str(n): arr for n, arr in report.hs_norms.items()},
    }


def quasiequiv_table(reports) -> Tuple[List[str], List[List]]:
    header = ["n_sites", "region_fraction", "hs_distance", "trace_distance", "slack"]
    rows = [[r.n_sites, r.region_fraction, r.hs_distance, r.trace_distance,
             r.ps_inequality_slack] for r in reports]
    return header, rows


def rescale_table(identity_reports, beta0_reports) -> Tuple[List[str], List[List]]:
    header = ["lambda", "beta", "max_singval_deviation", "trace_norm_rescaled",
              "trace_norm_reference", "beta0_base", "beta0_rescaled", "beta0_ratio"]
    by_lam = {r.lam: r for r in beta0_reports}
    rows = []
    for rep in identity_reports:
        b0 = by_lam.get(rep.lam)
        rows.append([
            rep.lam, rep.beta, rep.max_singval_deviation,
            rep.trace_norm_rescaled, rep.trace_norm_reference,
            b0.beta0_base if b0 else float("nan"),
            b0.beta0_rescaled if b0 else float("nan"),
            b0.ratio if b0 else float("nan"),
        ])
    return header, rows


def verify_table(results) -> Tuple[List[str], List[List]]:
    header = ["suite", "passed", "worst_margin"]
    return header, [[r.name, bool(r.passed), r.worst_margin] for r in results]


@dataclass
class RunManifest:
    """Provenance of one CLI invocation; every emitted file is listed."""

    command: str
    config_hash: str
    seed: int
    tool_version: str = TOOL_VERSION
    created_utc: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    exit_status: int = 0
    outputs: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def record(self, path: Path) -> Path:
        self.outputs.append(path.name)
        return path

    def save(self, directory: Path) -> Path:
        path = directory / "manifest.json"
        write_json(path, {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "created_utc": self.created_utc,
            "exit_status": self.exit_status,
            "outputs": sorted(self.outputs),
            "notes": self.notes,
        })
        return path
