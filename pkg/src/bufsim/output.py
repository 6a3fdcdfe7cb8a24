"""Result serialization: CSV files, gnuplot-friendly .dat mirrors and the
provenance record.

Formats:
  summary.csv        metric,flow,mean,ci95_halfwidth,n
  repetitions.csv    rep,flow,sent,delivered,dropped,loss,mean_delay,
                     max_jitter,smoothed_jitter
  histogram_<m>.csv  bin_lo,bin_hi,fraction
  provenance.json    config hash, seed, tool version

Numeric fields are fixed decimal with 6 significant digits; every CSV gets
a .dat mirror (space-separated, '#' header).
"""
from __future__ import annotations

import json
from pathlib import Path

from .metrics import Histogram
from .scenarios import COMBINED, SUMMARY_METRICS, ExperimentResult, MosEntry
from .units import fmt6


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return fmt6(value)
    return str(value)


def write_table(path: Path, header: list, rows: list) -> None:
    """Write a CSV and its .dat mirror next to it."""
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    dat = path.with_suffix(".dat")
    dat_lines = ["# " + " ".join(header)]
    dat_lines.extend(" ".join(_cell(v) or "nan" for v in row) for row in rows)
    dat.write_text("\n".join(dat_lines) + "\n", encoding="utf-8")


def _histogram_rows(hist: Histogram) -> list:
    return [(lo, hi, frac) for lo, hi, frac in hist.fractions()]


def write_experiment(result: ExperimentResult, outdir) -> None:
    """Write the full result set of one experiment into a directory."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for metric_name in SUMMARY_METRICS:
        for fid in result.flow_ids + (COMBINED,):
            summary = result.summaries[(metric_name, fid)]
            if summary is None:
                rows.append((metric_name, fid, None, None, 0))
            else:
                rows.append((metric_name, fid, summary.mean,
                             summary.half_width, summary.n))
    write_table(out / "summary.csv",
                ["metric", "flow", "mean", "ci95_halfwidth", "n"], rows)

    rows = []
    for i, rep in enumerate(result.repetitions):
        for fid in result.flow_ids + (COMBINED,):
            fr = rep[fid]
            rows.append((i, fid, fr.sent, fr.delivered, fr.dropped, fr.loss,
                         fr.mean_delay, fr.max_jitter, fr.smoothed_jitter))
    write_table(out / "repetitions.csv",
                ["rep", "flow", "sent", "delivered", "dropped", "loss",
                 "mean_delay", "max_jitter", "smoothed_jitter"], rows)

    for fid, hist in result.histograms.items():
        name = "histogram_loss.csv" if fid == COMBINED else f"histogram_loss_{fid}.csv"
        write_table(out / name, ["bin_lo", "bin_hi", "fraction"],
                    _histogram_rows(hist))

    (out / "provenance.json").write_text(
        json.dumps(result.provenance, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def write_sweep(entries, outdir) -> None:
    """One subdirectory per swept value plus an overview table."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for entry in entries:
        subdir = out / f"{entry.parameter}={entry.value}"
        write_experiment(entry.result, subdir)
        for fid in entry.result.flow_ids + (COMBINED,):
            summary = entry.result.summaries[("loss", fid)]
            if summary is None:
                rows.append((entry.value, fid, None, None, 0))
            else:
                rows.append((entry.value, fid, summary.mean,
                             summary.half_width, summary.n))
    write_table(out / "sweep_loss.csv",
                ["value", "flow", "mean_loss", "ci95_halfwidth", "n"], rows)


def write_mos(report: dict, outdir) -> None:
    """MOS histograms (one file per network delay) and a mean-MOS table."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for d, entry in sorted(report.items()):
        tag = fmt6(float(d)).rstrip("0").rstrip(".")
        write_table(out / f"histogram_mos_d{tag}.csv",
                    ["bin_lo", "bin_hi", "fraction"],
                    _histogram_rows(entry.histogram))
        rows.append((d, entry.total_delay_ms, entry.mean_mos,
                     len(entry.mos_values)))
    write_table(out / "mos_summary.csv",
                ["network_delay_ms", "total_delay_ms", "mean_mos", "calls"],
                rows)
