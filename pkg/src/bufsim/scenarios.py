"""Experiment harness: randomized repetitions, sweeps, aggregation and the
VoIP MOS report.

Each repetition draws fresh flow start offsets and traffic randomness from
RNG streams keyed by (seed, repetition, flow_id); statistics are collected
over [warmup, warmup + duration] and aggregated with Student-t 95%
confidence intervals across repetitions.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from . import core, metrics, qoscalc
from .config import (ScenarioConfig, ScenarioError, config_hash,
                     offered_utilization, validate, with_parameter)

# Histogram bin defaults: loss in percentage points, MOS in MOS units.
LOSS_HISTOGRAM_BIN_PP = 0.5
MOS_HISTOGRAM_BIN = 0.25

COMBINED = "combined"
SUMMARY_METRICS = ("loss", "mean_delay", "max_jitter", "smoothed_jitter")


@dataclass
class FlowRepetition:
    """One flow's measurements in one repetition."""

    sent: int
    delivered: int
    dropped: int
    dropped_full: int
    dropped_red: int
    residual: int
    loss: Optional[float]
    mean_delay: Optional[float]
    max_jitter: Optional[float]
    smoothed_jitter: Optional[float]

    def metric(self, name: str) -> Optional[float]:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class ExperimentResult:
    """All repetitions of one scenario plus aggregates and provenance."""

    config: ScenarioConfig
    flow_ids: tuple
    repetitions: list            # list[dict[flow_or_combined, FlowRepetition]]
    summaries: dict              # (metric, flow) -> RepetitionSummary | None
    histograms: dict             # flow_or_combined -> Histogram of loss (%)
    provenance: dict

    def loss_series(self, flow: str = COMBINED) -> list:
        return [rep[flow].loss for rep in self.repetitions]

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "repetitions": [
                {fid: fr.to_dict() for fid, fr in rep.items()}
                for rep in self.repetitions
            ],
        }


def _reduce_run(result: core.SimResult) -> dict:
    """Collapse one SimResult to per-flow repetition records."""
    rep: dict = {}
    for fid, st in result.flows.items():
        jit = metrics.jitter(st.delay_samples)
        rep[fid] = FlowRepetition(
            sent=st.sent, delivered=st.delivered, dropped=st.dropped,
            dropped_full=st.dropped_full, dropped_red=st.dropped_red,
            residual=st.residual,
            loss=st.loss_ratio,
            mean_delay=(sum(st.delay_samples) / len(st.delay_samples)
                        if st.delay_samples else None),
            max_jitter=jit.max_variation if jit else None,
            smoothed_jitter=jit.smoothed if jit else None,
        )
    total = result.combined()
    all_delays = []
    for st in result.flows.values():
        all_delays.extend(st.delay_samples)
    rep[COMBINED] = FlowRepetition(
        sent=total.sent, delivered=total.delivered, dropped=total.dropped,
        dropped_full=total.dropped_full, dropped_red=total.dropped_red,
        residual=total.residual,
        loss=total.loss_ratio,
        mean_delay=sum(all_delays) / len(all_delays) if all_delays else None,
        max_jitter=None, smoothed_jitter=None,
    )
    return rep


def _run_rep(config: ScenarioConfig, rep: int, engine: str) -> dict:
    return _reduce_run(core.run(config, rep=rep, engine=engine))


def run_experiment(config: ScenarioConfig, engine: str = "fast",
                   jobs: int = 1) -> ExperimentResult:
    """Run all repetitions of a validated scenario and aggregate them."""
    errors = validate(config)
    if errors:
        raise ScenarioError(errors)

    indices = range(config.repetitions)
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(_run_rep, [config] * config.repetitions,
                                 indices, [engine] * config.repetitions))
    else:
        reps = [_run_rep(config, i, engine) for i in indices]

    flow_ids = tuple(sorted(f.flow_id for f in config.flows))
    summaries = {}
    for metric_name in SUMMARY_METRICS:
        for fid in flow_ids + (COMBINED,):
            series = [r[fid].metric(metric_name) for r in reps]
            series = [v for v in series if v is not None]
            summaries[(metric_name, fid)] = metrics.ci95(series)

    histograms = {}
    for fid in flow_ids + (COMBINED,):
        losses_pp = [100.0 * r[fid].loss for r in reps if r[fid].loss is not None]
        histograms[fid] = metrics.histogram(losses_pp, LOSS_HISTOGRAM_BIN_PP)

    provenance = {
        "config_hash": config_hash(config),
        "seed": config.seed,
        "repetitions": config.repetitions,
        "tool": "bufsim",
        "version": __version__,
        "engine": engine,
        "offered_utilization": offered_utilization(config),
    }
    return ExperimentResult(config=config, flow_ids=flow_ids, repetitions=reps,
                            summaries=summaries, histograms=histograms,
                            provenance=provenance)


@dataclass
class SweepEntry:
    parameter: str
    value: object
    result: ExperimentResult


def sweep(config: ScenarioConfig, parameter: str, values,
          engine: str = "fast", jobs: int = 1) -> list:
    """One experiment per value of the swept parameter, shared base seed."""
    if not values:
        raise ValueError("sweep needs at least one value")
    entries = []
    for value in values:
        cfg = with_parameter(config, parameter, value)
        entries.append(SweepEntry(parameter=parameter, value=value,
                                  result=run_experiment(cfg, engine=engine, jobs=jobs)))
    return entries


@dataclass
class MosEntry:
    network_delay_ms: float
    total_delay_ms: float
    mos_values: list             # one per (repetition, call)
    mean_mos: float
    histogram: metrics.Histogram


def mos_report(result: ExperimentResult, network_delays_ms,
               voip_flow_ids: Optional[list] = None,
               bin_width: float = MOS_HISTOGRAM_BIN) -> dict:
    """Per-call MOS histograms for a set of network one-way delays.

    Each VoIP call in each repetition is scored with its own measured loss
    ratio; the total delay adds the fixed router+de-jitter budget to the
    network delay. Returns {network_delay_ms: MosEntry}.
    """
    if voip_flow_ids is None:
        voip_flow_ids = [f.flow_id for f in result.config.flows if f.kind == "cbr"]
    if not voip_flow_ids:
        raise ValueError("scenario contains no VoIP (cbr) flows to score")
    unknown = set(voip_flow_ids) - set(result.flow_ids)
    if unknown:
        raise ValueError(f"unknown VoIP flows: {sorted(unknown)}")

    report = {}
    for d in network_delays_ms:
        total = qoscalc.total_delay(d)
        values = []
        for rep in result.repetitions:
            for fid in voip_flow_ids:
                loss = rep[fid].loss
                if loss is None:
                    continue
                r = qoscalc.r_factor(qoscalc.EModelInput(total, loss))
                values.append(qoscalc.mos_from_r(r))
        hist = metrics.histogram(values, bin_width) if values else \
            metrics.Histogram(bin_width=bin_width)
        mean = sum(values) / len(values) if values else float("nan")
        report[d] = MosEntry(network_delay_ms=d, total_delay_ms=total,
                             mos_values=values, mean_mos=mean, histogram=hist)
    return report
