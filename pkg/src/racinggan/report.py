"""CSV and plain-text renderings of convergence results."""

from __future__ import annotations

import csv
from pathlib import Path

from .analysis import BenchmarkSummary, RunSummary, improvement_pct

SUMMARY_HEADER = ["variant", "seed", "net", "convergence_iter", "target", "improvement_pct"]
METRICS_HEADER = ["variant", "seed", "generator", "containment_rate", "diversity", "tracking_distance"]


def _fmt(value, digits: int | None = None) -> str:
    if value is None:
        return ""
    if digits is not None:
        return f"{value:.{digits}f}"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def run_rows(run: RunSummary, baseline: RunSummary | None = None) -> list[list[str]]:
    rep = run.report
    base_d = base_g = None
    if baseline is not None:
        base_d = baseline.report.iterations["d"]
        base_g = baseline.report.best_generator
    g_target = next((rep.targets[k] for k in rep.generator_keys), None)
    rows = [[run.variant, str(run.seed), "d", _fmt(rep.iterations["d"]), f"{rep.targets['d']:.6f}",
             _fmt(improvement_pct(base_d, rep.iterations["d"]), 2)]]
    for key in rep.generator_keys:
        it = rep.iterations[key]
        rows.append([run.variant, str(run.seed), key, _fmt(it), f"{rep.targets[key]:.6f}",
                     _fmt(improvement_pct(base_g, it), 2)])
    rows.append([run.variant, str(run.seed), "g_best", _fmt(rep.best_generator), f"{g_target:.6f}",
                 _fmt(improvement_pct(base_g, rep.best_generator), 2)])
    return rows


def write_run_report(path, run: RunSummary) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        w.writerows(run_rows(run))
    return path


def summary_rows(summary: BenchmarkSummary) -> list[list[str]]:
    rows = []
    for variant in summary.variants():
        for run in summary.by_variant(variant):
            rows.extend(run_rows(run, summary.run(summary.baseline, run.seed)))
    improvements = summary.improvements()
    for variant in summary.variants():
        med = summary.medians(variant)
        if not med:
            continue
        runs = summary.by_variant(variant)
        targets = runs[0].report.targets
        d_imp, g_imp = improvements.get(variant, (None, None))
        g_target = next(v for k, v in targets.items() if k != "d")
        rows.append([variant, "median", "d", _fmt(med["d"]), f"{targets['d']:.6f}", _fmt(d_imp, 2)])
        for key in runs[0].report.generator_keys:
            rows.append([variant, "median", key, _fmt(med[key]), f"{targets[key]:.6f}", ""])
        rows.append([variant, "median", "g_best", _fmt(med["g_best"]), f"{g_target:.6f}",
                     _fmt(g_imp, 2)])
    return rows


def metrics_rows(summary: BenchmarkSummary) -> list[list[str]]:
    rows = []
    for variant in summary.variants():
        for run in summary.by_variant(variant):
            for i, (c, dv) in enumerate(zip(run.containment, run.diversity)):
                rows.append([variant, str(run.seed), str(i), f"{c:.6f}", f"{dv:.6f}",
                             _fmt(run.tracking, 6) if run.tracking is not None else ""])
    return rows


def _cell(v) -> str:
    return "--" if v is None else f"{v:.0f}"


def _pct(v) -> str:
    return "--" if v is None else f"{v:.2f}%"


def format_tables(summary: BenchmarkSummary) -> str:
    """Aligned text tables: median convergence iterations, then improvements."""
    variants = summary.variants()
    k_max = max((len(r.report.generator_keys) for r in summary.runs if r.ok), default=1)
    lines = [f"Median iterations to converge over seeds {summary.seeds()}", ""]
    head = ["Variant", "D"] + [f"G{i + 1}" for i in range(k_max)] + ["best G"]
    table = [head]
    for v in variants:
        med = summary.medians(v)
        if not med:
            table.append([v] + ["failed"] * (len(head) - 1))
            continue
        gs = [_cell(med.get(f"g{i}")) if f"g{i}" in med else "--" for i in range(k_max)]
        table.append([v, _cell(med["d"]), *gs, _cell(med["g_best"])])
    lines += _align(table)

    imps = summary.improvements()
    lines += ["", f"Improvement in convergence iterations over {summary.baseline}", ""]
    table = [["Variant", "D", "best G"]]
    for v in variants:
        if v == summary.baseline:
            continue
        d, g = imps.get(v, (None, None))
        table.append([v, _pct(d), _pct(g)])
    lines += _align(table)

    lines += ["", "Median tracking distance between generator losses", ""]
    table = [["Variant", "tracking"]]
    for v in variants:
        t = summary.median_tracking(v)
        table.append([v, "--" if t is None else f"{t:.4f}"])
    lines += _align(table)

    failed = [r for r in summary.runs if not r.ok]
    if failed:
        lines += ["", "Failed runs:"]
        lines += [f"  {r.variant} seed {r.seed}: {r.error}" for r in failed]
    return "\n".join(lines) + "\n"


def _align(rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for n, r in enumerate(rows):
        out.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
        if n == 0:
            out.append("  ".join("-" * w for w in widths))
    return out


def write_bench_outputs(out_dir, summary: BenchmarkSummary) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"summary": out_dir / "summary.csv", "metrics": out_dir / "metrics.csv",
             "tables": out_dir / "summary.txt"}
    for key, header, rows in (("summary", SUMMARY_HEADER, summary_rows(summary)),
                              ("metrics", METRICS_HEADER, metrics_rows(summary))):
        with paths[key].open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    paths["tables"].write_text(format_tables(summary))
    return paths
