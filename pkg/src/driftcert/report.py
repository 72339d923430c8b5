"""Deterministic artifact emission: JSON certificates, CSV tables, histograms.

Every float in a text output is formatted to 9 significant digits, so a
re-run with the same seed produces byte-identical files regardless of the
worker count.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .certify import DriftCertificate
from .explosion import InstabilityCertificate
from .params import ModelParams
from .sim import EnsembleStats, Histogram2D, PhaseDiagram, Trajectory

__all__ = [
    "fmt9",
    "round9",
    "write_json",
    "write_csv",
    "params_dict",
    "drift_cert_dict",
    "instability_cert_dict",
    "trajectory_to_csv",
    "ensemble_row",
    "ENSEMBLE_HEADER",
    "phase_to_csv",
    "histogram_to_file",
]

ENSEMBLE_HEADER = ["alpha1", "alpha2", "n", "n_exploded", "fraction",
                   "ci_lo", "ci_hi", "mean_t_exp"]


def fmt9(x) -> str:
    """Fixed 9-significant-digit rendering of a float."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def round9(obj):
    """Recursively round floats to 9 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {k: round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round9(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return float(f"{x:.9g}")
        return str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return round9(obj.tolist())
    return obj


def write_json(path, obj) -> None:
    text = json.dumps(round9(obj), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_csv(path, header, rows) -> None:
    """Rows of ints/floats/strings; floats go through fmt9."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif v is None:
                cells.append("nan")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(fmt9(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def params_dict(p: ModelParams) -> dict:
    return {"a1": p.a1, "a2": p.a2, "alpha1": p.alpha1, "alpha2": p.alpha2,
            "kappa1": p.kappa1, "kappa2": p.kappa2}


def drift_cert_dict(cert: DriftCertificate, p: ModelParams) -> dict:
    return {
        "kind": "drift",
        "field": cert.field_label,
        "region": cert.region_label,
        "params": params_dict(p),
        "band": list(cert.radius_band),
        "seed": cert.seed,
        "n_samples": cert.n_samples,
        "C": cert.C_est,
        "D": cert.D_est,
        "min_margin": cert.min_margin,
        "violations": [[v.x, v.y] for v in cert.violations],
        "passed": cert.passed,
    }


def instability_cert_dict(cert: InstabilityCertificate, p: ModelParams) -> dict:
    return {
        "kind": "instability",
        "field": "g",
        "region": f"wedge xi={fmt9(cert.spec.xi)} M={fmt9(cert.spec.M)}",
        "params": params_dict(p),
        "band": list(cert.radius_band),
        "seed": cert.seed,
        "n_samples": cert.n_samples,
        "C": cert.C_g,
        "wedge": {"xi": cert.spec.xi, "M": cert.spec.M, "C_blow": cert.spec.C_blow},
        "min_margin": cert.min_margin,
        "violations": [[v.x, v.y] for v in cert.violations],
        "passed": cert.passed,
    }


def trajectory_to_csv(traj: Trajectory, path) -> None:
    rows = [(t, s[0], s[1]) for t, s in zip(traj.times, traj.states)]
    write_csv(path, ["t", "x", "y"], rows)


def ensemble_row(alpha1: float, alpha2: float, es: EnsembleStats):
    return [alpha1, alpha2, es.n, es.n_exploded, es.explosion_fraction,
            es.wilson_ci95[0], es.wilson_ci95[1], es.mean_t_exp]


def phase_to_csv(pd: PhaseDiagram, path) -> None:
    rows = []
    for i, a1v in enumerate(pd.alpha1s):
        for j, a2v in enumerate(pd.alpha2s):
            rows.append(ensemble_row(float(a1v), float(a2v), pd.stats[i][j]))
    write_csv(path, ENSEMBLE_HEADER, rows)


def histogram_to_file(h: Histogram2D, path) -> None:
    """Text layout: x_edges row, y_edges row, outside mass, then the mass
    matrix row-major (one line per x bin)."""
    lines = ["# histogram v1"]
    lines.append("x_edges," + ",".join(fmt9(v) for v in h.x_edges))
    lines.append("y_edges," + ",".join(fmt9(v) for v in h.y_edges))
    lines.append("outside_mass," + fmt9(h.outside_mass))
    for i in range(h.mass.shape[0]):
        lines.append(",".join(fmt9(v) for v in h.mass[i]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
