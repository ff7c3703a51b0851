"""Writing sweep and single-run results as CSV, JSON and SVG."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from xml.sax.saxutils import escape

from .harness import InteractionOutcome, SweepResult

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")

# x column, y column and the columns whose values split rows into series
CHART_LAYOUT = {
    "fig2": ("alpha", "mean_kl", ("frame",)),
    "fig3": ("alpha", "mean_alpha_prime", ("epsilon", "frame")),
    "fig4": ("alpha", "mean_regret", ("frame",)),
    "fig5": ("n_choices", "mean_expected_utility", ("frame", "agent")),
}

SOLVE_COLUMNS = (
    "frame",
    "alpha",
    "epsilon",
    "signal_choice",
    "prior_choice",
    "alice_expected_utility",
    "bob_expected_utility",
    "realized_utility_bob",
    "regret",
    "alpha_prime",
    "manipulation_kl",
    "manipulated",
    "degenerate",
)


class ResultsWriteError(OSError):
    pass


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _rounded(v):
    if isinstance(v, float) and not isinstance(v, bool):
        return float(f"{v:.6g}")
    return v


def _atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file so failures leave nothing behind."""
    tmp = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
        raise ResultsWriteError(f"cannot write {path}: {exc.strerror or exc}") from exc


def csv_text(columns, rows, header_comment: str) -> str:
    lines = [f"# {header_comment}", ",".join(columns)]
    lines += [",".join(fmt(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


def json_text(name: str, columns, rows, provenance: dict) -> str:
    doc = dict(provenance)
    doc["result"] = name
    doc["columns"] = list(columns)
    doc["rows"] = [{c: _rounded(r[c]) for c in columns} for r in rows]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** int(f"{raw:e}".split("e")[1])
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = step * int(lo // step)
    ticks, t = [], start
    while t <= hi + 1e-12 * step:
        if t >= lo - 1e-12 * step:
            ticks.append(round(t, 12))
        t += step
    return ticks


def svg_chart(result: SweepResult) -> str:
    """Line chart of a sweep: one polyline per series."""
    xcol, ycol, keys = CHART_LAYOUT[result.name]
    series: dict[tuple, list[tuple[float, float]]] = {}
    for r in result.rows:
        series.setdefault(tuple(r[k] for k in keys), []).append((float(r[xcol]), float(r[ycol])))
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (y1 - y0) if y1 > y0 else 0.5
    y0, y1 = y0 - pad, y1 + pad

    width, height = 640, 400
    left, right, top, bottom = 70, 170, 30, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<title>{escape(result.name)}: {escape(ycol)} vs {escape(xcol)}</title>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="#333"/>')
        out.append(
            f'<text x="{left - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{fmt(float(t))}</text>'
        )
    for t in sorted(set(xs)):
        out.append(
            f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 4}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{sx(t):.2f}" y="{top + ph + 16}" text-anchor="middle">{fmt(t)}</text>'
        )
    if y0 < 0 < y1:
        out.append(
            f'<line x1="{left}" y1="{sy(0):.2f}" x2="{left + pw}" y2="{sy(0):.2f}" '
            'stroke="#999" stroke-dasharray="4 3"/>'
        )
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xcol)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(ycol)}</text>'
    )
    for i, (key, pts) in enumerate(series.items()):
        colour = PALETTE[i % len(PALETTE)]
        label = " ".join(f"{k}={fmt(v)}" for k, v in zip(keys, key))
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in sorted(pts))
        out.append(
            f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}">'
            f"<title>{escape(label)}</title></polyline>"
        )
        ly = top + 12 + 16 * i
        out.append(
            f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
            f'stroke="{colour}" stroke-width="2"/>'
        )
        out.append(f'<text x="{left + pw + 34}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def solve_rows(outcomes: dict[str, InteractionOutcome], alpha: float, epsilon: float) -> list[dict]:
    rows = []
    for frame, o in outcomes.items():
        d = o.to_dict()
        d.update(frame=frame, alpha=alpha, epsilon=epsilon)
        rows.append(d)
    return rows


def write_results(result, provenance: dict, output_dir, formats=("csv", "json", "svg"), name: str | None = None) -> list[Path]:
    """Write ``result`` under ``output_dir`` in each requested format.

    ``result`` is a :class:`SweepResult` or a list of single-run row dicts
    (``SOLVE_COLUMNS``). ``provenance`` must contain ``seed`` and
    ``config_hash``; it is embedded in every file.
    """
    out = Path(output_dir)
    comment = f"seed={provenance['seed']} config_hash={provenance['config_hash']}"
    if isinstance(result, SweepResult):
        name = name or result.name
        columns, rows = result.columns, result.rows
    else:
        name = name or "solve"
        columns, rows = SOLVE_COLUMNS, result
    written = []
    try:
        for f in formats:
            path = out / f"{name}.{f}"
            if f == "csv":
                _atomic_write(path, csv_text(columns, rows, comment))
            elif f == "json":
                _atomic_write(path, json_text(name, columns, rows, provenance))
            elif f == "svg":
                if not isinstance(result, SweepResult):
                    continue
                _atomic_write(path, svg_chart(result))
            else:
                raise ValueError(f"unknown output format {f!r}")
            written.append(path)
    except ResultsWriteError:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written
