"""TSV and SVG output. Numbers are written with 12 significant digits."""

from __future__ import annotations

import csv
from html import escape
from pathlib import Path

import numpy as np

from .harness import IntervalReport

INTERVAL_COLUMNS = ("label", "estimate", "lower", "upper", "level", "correction", "method")


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            return "0"
        return f"{v:.12g}"
    return str(v)


def write_tsv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(fmt(v) for v in row) + "\n")
    return path


def read_tsv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh, delimiter="\t"))


def write_intervals(path, reports):
    rows = [(r.label, r.estimate, r.lower, r.upper, r.level, r.correction, r.method) for r in reports]
    return write_tsv(path, INTERVAL_COLUMNS, rows)


def read_intervals(path):
    return [
        IntervalReport(r["label"], float(r["estimate"]), float(r["lower"]), float(r["upper"]),
                       float(r["level"]), r["correction"], r["method"])
        for r in read_tsv(path)
    ]


def write_selection(path, model):
    rows = [(-1, "(Intercept)", model.intercept)]
    rows += [(j, model.names[j], model.beta_hat[j]) for j in model.subset]
    return write_tsv(path, ("index", "name", "beta_hat"), rows)


def write_cp_trace(path, trace, names):
    rows = []
    for k in trace.steps:
        added = names[trace.order[k - 1]] if k > 0 else ""
        rows.append((k, added, trace.rss[k], trace.cp[k], trace.sigma2_hat, int(k == trace.best_k)))
    return write_tsv(path, ("step", "added", "rss", "cp", "sigma2_hat", "chosen"), rows)


def write_lasso_path(path, lasso_path, names):
    header = ("lambda", "l1_norm", "intercept") + tuple(f"beta[{n}]" for n in names)
    rows = [(lam, l1, b0, *b) for lam, l1, b0, b in
            zip(lasso_path.lambdas, lasso_path.l1_norms, lasso_path.intercepts, lasso_path.betas)]
    return write_tsv(path, header, rows)


def write_conformal(pvalues_path, interval_path, result):
    write_tsv(pvalues_path, ("y", "p_value"), zip(result.grid, result.p_values))
    return write_tsv(interval_path, ("lo", "hi", "length", "alpha", "center", "grid_step", "empty"),
                     [(result.lo, result.hi, result.length, result.alpha, result.center,
                       result.step, result.empty)])


def write_bound_check(path, report):
    cols = ("dgp", "bound_value", "violation_rate", "violations", "reps", "holdout_size",
            "risk_star", "mean_excess", "max_excess")
    return write_tsv(path, cols, [tuple(getattr(report, c) for c in cols)])


# --------------------------------------------------------------------------
# interval-forest SVG


def _panel(reports, x0, width, top, row_h, title, label_w):
    lo = min(min(r.lower for r in reports), 0.0)
    hi = max(max(r.upper for r in reports), 0.0)
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    lo, hi = lo - pad, hi + pad
    plot_x0, plot_w = x0 + label_w, width - label_w - 10

    def sx(v):
        return plot_x0 + (v - lo) / (hi - lo) * plot_w

    bottom = top + row_h * len(reports)
    out = [f'<text x="{x0 + width / 2:.2f}" y="{top - 12:.2f}" text-anchor="middle" '
           f'font-size="13">{escape(title)}</text>',
           f'<line x1="{sx(0.0):.2f}" y1="{top:.2f}" x2="{sx(0.0):.2f}" y2="{bottom:.2f}" '
           f'stroke="#999" stroke-dasharray="3,3"/>']
    for i, r in enumerate(reports):
        y = top + row_h * (i + 0.5)
        out.append(f'<text x="{plot_x0 - 6:.2f}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-size="11">{escape(r.label)}</text>')
        out.append(f'<line x1="{sx(r.lower):.2f}" y1="{y:.2f}" x2="{sx(r.upper):.2f}" '
                   f'y2="{y:.2f}" stroke="black" stroke-width="2"/>')
        out.append(f'<circle cx="{sx(r.estimate):.2f}" cy="{y:.2f}" r="3.5" fill="black"/>')
    out.append(f'<line x1="{plot_x0:.2f}" y1="{bottom:.2f}" x2="{plot_x0 + plot_w:.2f}" '
               f'y2="{bottom:.2f}" stroke="black"/>')
    for v in np.linspace(lo + pad, hi - pad, 3):
        out.append(f'<text x="{sx(v):.2f}" y="{bottom + 14:.2f}" text-anchor="middle" '
                   f'font-size="10">{v:.3g}</text>')
    return out


def write_interval_svg(path, left, right, left_title="Risk inflation R_j",
                       right_title="Projected parameters"):
    """Two side-by-side panels of horizontal intervals, variables top-down."""
    row_h, top, panel_w, label_w = 28, 40, 380, 150
    rows = max(len(left), len(right), 1)
    height = top + row_h * rows + 40
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{2 * panel_w}" height="{height}" '
             f'font-family="sans-serif">',
             f'<rect width="{2 * panel_w}" height="{height}" fill="white"/>']
    if left:
        parts += _panel(left, 0, panel_w, top, row_h, left_title, label_w)
    if right:
        parts += _panel(right, panel_w, panel_w, top, row_h, right_title, label_w)
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
