"""Scenario configuration: dataclasses, the .scn file format and validation.

Scenario files are INI-style key-value text with sections ``[link]``,
``[buffer]``, one ``[flow:<id>]`` per flow, ``[run]`` and an optional
``[sweep]``. Values carry unit suffixes (Mbps, ms, KB, ...).
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .buffers import BufferPolicy, RedParams
from .traffic import (BurstParams, CbrParams, FlowSpec, SyntheticVideoParams,
                      TraceParams)
from .units import parse_rate, parse_size, parse_time


@dataclass(frozen=True)
class LinkConfig:
    r_in: float    # internal network rate, bits/s
    r_out: float   # access link rate, bits/s

    def validate(self) -> list[str]:
        errors = []
        if self.r_in <= 0:
            errors.append("link.r_in: must be positive")
        if self.r_out <= 0:
            errors.append("link.r_out: must be positive")
        return errors


@dataclass(frozen=True)
class SweepSpec:
    parameter: str            # buffer_size | r_out | r_in
    values: tuple = ()


@dataclass(frozen=True)
class ScenarioConfig:
    link: LinkConfig
    buffer: BufferPolicy
    flows: tuple
    duration: float = 60.0
    warmup: float = 2.0
    repetitions: int = 1
    seed: int = 1
    start_offset_window: float = 2.0
    sweep: Optional[SweepSpec] = None

    def to_dict(self) -> dict:
        flows = []
        for f in self.flows:
            d = {"flow_id": f.flow_id, "kind": f.kind,
                 "start_offset": f.start_offset, "class": f.cls}
            d.update({k: v for k, v in vars(f.params).items()})
            flows.append(d)
        buf = {"discipline": self.buffer.discipline,
               "capacity_mode": self.buffer.capacity_mode,
               "capacity": self.buffer.capacity}
        if self.buffer.red is not None:
            buf["red"] = vars(self.buffer.red)
        return {
            "link": {"r_in": self.link.r_in, "r_out": self.link.r_out},
            "buffer": buf,
            "flows": flows,
            "run": {"duration": self.duration, "warmup": self.warmup,
                    "repetitions": self.repetitions, "seed": self.seed,
                    "start_offset_window": self.start_offset_window},
        }


def config_hash(config: ScenarioConfig) -> str:
    """Stable hash of everything that determines the results."""
    canonical = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def derive_seed(*parts) -> int:
    """Deterministic 64-bit child seed from arbitrary labeled parts."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def validate(config: ScenarioConfig) -> list[str]:
    """All invariant violations, each tagged with its field path."""
    errors = []
    errors.extend(config.link.validate())
    errors.extend(config.buffer.validate())
    if not config.flows:
        errors.append("flows: at least one flow required")
    seen = set()
    for i, flow in enumerate(config.flows):
        prefix = f"flows[{i}]({flow.flow_id})"
        if flow.flow_id in seen:
            errors.append(f"{prefix}.flow_id: duplicate")
        seen.add(flow.flow_id)
        errors.extend(f"{prefix}.{e}" for e in flow.validate())
    if config.warmup < 0:
        errors.append("run.warmup: must be >= 0")
    if config.duration <= config.warmup:
        errors.append("run.duration: must exceed warmup")
    if config.repetitions < 1:
        errors.append("run.repetitions: must be >= 1")
    if config.start_offset_window < 0:
        errors.append("run.start_offset_window: must be >= 0")
    return errors


def offered_utilization(config: ScenarioConfig) -> float:
    """Advisory utilization: sum of flow mean rates over the access rate."""
    return sum(f.mean_rate() for f in config.flows) / config.link.r_out


class ScenarioError(ValueError):
    """Invalid scenario; carries the per-field error list."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _flow_from_items(flow_id: str, items: dict) -> FlowSpec:
    kind = items.pop("kind", None)
    if kind is None:
        raise ScenarioError([f"flow:{flow_id}.kind: missing"])
    start_offset = parse_time(items.pop("start_offset", 0.0))
    cls = int(items.pop("class", 1))
    try:
        if kind == "cbr":
            params = CbrParams(
                packet_size=int(parse_size(items.pop("packet_size"))),
                interval=parse_time(items.pop("interval")),
            )
        elif kind == "burst":
            params = BurstParams(
                packets_per_burst=int(items.pop("packets_per_burst")),
                packet_size=int(parse_size(items.pop("packet_size"))),
                inter_burst_mean=parse_time(items.pop("inter_burst_mean")),
                inter_burst_stddev=parse_time(items.pop("inter_burst_stddev", 0.0)),
            )
        elif kind == "trace":
            params = TraceParams(
                path=items.pop("path"),
                time_scale=float(items.pop("time_scale", 1.0)),
            )
        elif kind == "synthetic_video":
            params = SyntheticVideoParams(
                mean_bitrate=parse_rate(items.pop("mean_bitrate")),
                frame_interval=parse_time(items.pop("frame_interval")),
                frame_size_cv=float(items.pop("frame_size_cv", 0.0)),
                max_packet_size=int(parse_size(items.pop("max_packet_size", 1400))),
            )
        else:
            raise ScenarioError([f"flow:{flow_id}.kind: unknown {kind!r}"])
    except KeyError as exc:
        raise ScenarioError([f"flow:{flow_id}.{exc.args[0]}: missing"]) from None
    if items:
        unknown = ", ".join(sorted(items))
        raise ScenarioError([f"flow:{flow_id}: unknown keys {unknown}"])
    return FlowSpec(flow_id=flow_id, kind=kind, params=params,
                    start_offset=start_offset, cls=cls)


def _buffer_from_items(items: dict) -> BufferPolicy:
    discipline = items.pop("discipline", "drop_tail")
    mode = items.pop("capacity_mode", "packets")
    raw_cap = items.pop("capacity", None)
    if raw_cap is None:
        raise ScenarioError(["buffer.capacity: missing"])
    capacity = float(parse_size(raw_cap)) if mode == "bytes" else float(raw_cap)
    red = None
    red_keys = {k: items.pop(k) for k in list(items) if k.startswith("red_")}
    if discipline == "red":
        try:
            red = RedParams(
                min_th=float(red_keys.pop("red_min_th")),
                max_th=float(red_keys.pop("red_max_th")),
                max_p=float(red_keys.pop("red_max_p")),
                weight=float(red_keys.pop("red_weight", 0.002)),
            )
        except KeyError as exc:
            raise ScenarioError([f"buffer.{exc.args[0]}: missing"]) from None
    if red_keys:
        raise ScenarioError([f"buffer: unknown keys {', '.join(sorted(red_keys))}"])
    if items:
        raise ScenarioError([f"buffer: unknown keys {', '.join(sorted(items))}"])
    return BufferPolicy(discipline=discipline, capacity_mode=mode,
                        capacity=capacity, red=red)


def apply_overrides(sections: dict, overrides: dict[str, str]) -> None:
    """Apply ``section.key=value`` overrides onto raw parsed sections."""
    for path, value in overrides.items():
        section, _, key = path.partition(".")
        if not key:
            raise ScenarioError([f"override {path!r}: expected section.key=value"])
        if section not in sections:
            raise ScenarioError([f"override {path!r}: unknown section {section!r}"])
        sections[section][key] = value


def parse_scenario_text(text: str, overrides: Optional[dict[str, str]] = None,
                        seed: Optional[int] = None) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep case in keys
    parser.read_string(text)
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    if overrides:
        apply_overrides(sections, overrides)

    for required in ("link", "buffer", "run"):
        if required not in sections:
            raise ScenarioError([f"{required}: section missing"])

    link_items = sections.pop("link")
    link = LinkConfig(r_in=parse_rate(link_items.pop("r_in")),
                      r_out=parse_rate(link_items.pop("r_out")))
    if link_items:
        raise ScenarioError([f"link: unknown keys {', '.join(sorted(link_items))}"])

    buffer = _buffer_from_items(sections.pop("buffer"))

    run = sections.pop("run")
    sweep = None
    if "sweep" in sections:
        sw = sections.pop("sweep")
        sweep = SweepSpec(parameter=sw.get("parameter", ""),
                          values=tuple(v.strip() for v in sw.get("values", "").split(",") if v.strip()))

    flows = []
    for name, items in sections.items():
        if not name.startswith("flow:"):
            raise ScenarioError([f"{name}: unknown section"])
        flows.append(_flow_from_items(name[len("flow:"):], dict(items)))

    config = ScenarioConfig(
        link=link,
        buffer=buffer,
        flows=tuple(flows),
        duration=parse_time(run.pop("duration", 60.0)),
        warmup=parse_time(run.pop("warmup", 2.0)),
        repetitions=int(run.pop("repetitions", 1)),
        seed=seed if seed is not None else int(run.pop("seed", 1)),
        start_offset_window=parse_time(run.pop("start_offset_window", 2.0)),
        sweep=sweep,
    )
    run.pop("seed", None)
    if run:
        raise ScenarioError([f"run: unknown keys {', '.join(sorted(run))}"])
    return config


def load_scenario(path, overrides: Optional[dict[str, str]] = None,
                  seed: Optional[int] = None) -> ScenarioConfig:
    """Parse a scenario file, apply overrides, and return the config."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read(), overrides=overrides, seed=seed)


def bundled_scenario(name: str):
    """Path of a scenario file shipped with the package (e.g. chapter5_2cams)."""
    from importlib.resources import files
    path = files("bufsim") / "data" / f"{name}.scn"
    if not path.is_file():
        available = ", ".join(sorted(p.name[:-4] for p in (files("bufsim") / "data").iterdir()
                                     if p.name.endswith(".scn")))
        raise FileNotFoundError(f"no bundled scenario {name!r} (available: {available})")
    return path


def with_parameter(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    """New config with one swept parameter replaced."""
    if parameter == "buffer_size":
        cap = float(parse_size(value)) if config.buffer.capacity_mode == "bytes" else float(value)
        return replace(config, buffer=replace(config.buffer, capacity=cap))
    if parameter == "r_out":
        return replace(config, link=replace(config.link, r_out=parse_rate(value)))
    if parameter == "r_in":
        return replace(config, link=replace(config.link, r_in=parse_rate(value)))
    raise ValueError(f"unknown sweep parameter {parameter!r}")
