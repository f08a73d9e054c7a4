"""CSV and SVG writers for error traces."""

import math
from statistics import median

from ..errors import ValidationError
from ..metrics import ErrorTrace

CSV_HEADER = "algorithm,run,t,subspace_error,flag"
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _sorted(traces):
    return sorted(traces, key=lambda tr: (tr.algorithm, tr.run))


def format_csv(traces, fingerprint="", sigmas=()):
    """CSV text for ``traces``.

    ``sigmas`` holds ``(algorithm, run, sigma)`` triples recorded as
    ``# sigma=`` comment lines ahead of the header.
    """
    lines = []
    if fingerprint:
        lines.append(f"# fingerprint={fingerprint}")
    lines.append("# rng=numpy.PCG64")
    for alg, run, sigma in sorted(sigmas):
        lines.append(f"# sigma={float(sigma)!r} algorithm={alg} run={run}")
    lines.append(CSV_HEADER)
    for tr in _sorted(traces):
        for t, err in tr.points:
            lines.append(f"{tr.algorithm},{tr.run},{t},{err!r},{tr.flag}")
    return "\n".join(lines) + "\n"


def write_csv(traces, path, fingerprint="", sigmas=()):
    text = format_csv(traces, fingerprint, sigmas)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror}") from exc
    return path


def read_csv(path):
    """Traces (sorted by algorithm, run) and the metadata comments of a results CSV."""
    meta, traces = {}, {}
    with open(path, encoding="utf-8") as fh:
        rows = fh.read().splitlines()
    seen_header = False
    for lineno, line in enumerate(rows, 1):
        if not line:
            continue
        if line.startswith("#"):
            meta.setdefault("comments", []).append(line[1:].strip())
            continue
        if not seen_header:
            if line != CSV_HEADER:
                raise ValidationError(f"{path}: line {lineno}: expected header {CSV_HEADER!r}")
            seen_header = True
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValidationError(f"{path}: line {lineno}: expected 5 fields, got {len(parts)}")
        alg, run, t, err, flag = parts
        key = (alg, int(run))
        tr = traces.get(key)
        if tr is None:
            tr = traces[key] = ErrorTrace(alg, int(run))
            if flag.startswith("diverged:"):
                tr.diverged_at = int(flag.split(":", 1)[1])
        tr.record(int(t), float(err))
    return _sorted(traces.values()), meta


def median_final_errors(traces):
    """Median (over runs) of the final recorded error, per algorithm."""
    by_alg = {}
    for tr in traces:
        if tr.points:
            by_alg.setdefault(tr.algorithm, []).append(tr.final_error)
    return {alg: median(v) for alg, v in sorted(by_alg.items())}


def mean_final_errors(traces):
    by_alg = {}
    for tr in traces:
        if tr.points:
            by_alg.setdefault(tr.algorithm, []).append(tr.final_error)
    return {alg: sum(v) / len(v) for alg, v in sorted(by_alg.items())}


def _log_ticks(lo, hi):
    return [10.0**k for k in range(math.floor(lo), math.ceil(hi) + 1)]


def _fmt(v):
    return f"{v:.2f}"


def render_svg(traces, width=720, height=480, title="subspace alignment error"):
    """Log-log plot of error against sample index as SVG text.

    One polyline per (algorithm, run); colour is shared by algorithm.
    Zero errors are clipped to 1e-16 so they stay on the log axis.
    """
    traces = [tr for tr in _sorted(traces) if tr.points]
    if not traces:
        raise ValidationError("nothing to plot: no trace has recorded points")
    floor = 1e-16
    ts = [t for tr in traces for t, _ in tr.points]
    es = [max(e, floor) for tr in traces for _, e in tr.points]
    x_lo, x_hi = math.log10(min(ts)), math.log10(max(ts))
    y_lo, y_hi = math.floor(math.log10(min(es))), math.ceil(math.log10(max(es)))
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(t):
        return left + pw * (math.log10(t) - x_lo) / (x_hi - x_lo)

    def py(e):
        return top + ph * (y_hi - math.log10(max(e, floor))) / (y_hi - y_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.2f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for tick in _log_ticks(x_lo, x_hi):
        if x_lo - 1e-12 <= math.log10(tick) <= x_hi + 1e-12:
            x = _fmt(px(tick))
            out.append(f'<line x1="{x}" y1="{top + ph}" x2="{x}" y2="{top + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{x}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" '
                       f'font-size="11">1e{round(math.log10(tick))}</text>')
    for k in range(int(y_lo), int(y_hi) + 1):
        y = _fmt(py(10.0**k))
        out.append(f'<line x1="{left - 5}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y}" text-anchor="end" dominant-baseline="middle" '
                   f'font-family="sans-serif" font-size="11">1e{k}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">t (samples)</text>')

    algorithms = sorted({tr.algorithm for tr in traces})
    colour = {alg: PALETTE[i % len(PALETTE)] for i, alg in enumerate(algorithms)}
    for tr in traces:
        pts = " ".join(f"{_fmt(px(t))},{_fmt(py(e))}" for t, e in tr.points)
        out.append(f'<polyline fill="none" stroke="{colour[tr.algorithm]}" stroke-width="1.2" '
                   f'data-algorithm="{tr.algorithm}" data-run="{tr.run}" points="{pts}"/>')
    for i, alg in enumerate(algorithms):
        y = top + 12 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{y}" x2="{left + pw + 36}" y2="{y}" '
                   f'stroke="{colour[alg]}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 42}" y="{y}" dominant-baseline="middle" '
                   f'font-family="sans-serif" font-size="12">{alg}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_plot(traces, path, **kwargs):
    text = render_svg(traces, **kwargs)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc.strerror}") from exc
    return path
