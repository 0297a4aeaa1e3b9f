"""Replicated parameter sweeps over (FA, ND, Adjust-Error, Cutoff-Time)."""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .config import RunConfig, config_from_dict, config_to_dict
from .planner import ExperimentLog, ExperimentPlan, run_experiment
from .stats import StatAccumulator

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # SplitMix64 finalizer: a bijection on 64-bit words
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, cell_index: int, replication: int) -> int:
    """Per-run seed, injective in (cell_index, replication) for a fixed base seed.

    ``splitmix64(splitmix64(base) XOR (cell << 32 | replication))``. Both
    indices must fit in 32 bits. This function is frozen; changing it
    changes every published scan.
    """
    if not (0 <= cell_index < 1 << 32 and 0 <= replication < 1 << 32):
        raise ValueError("cell_index and replication must be in [0, 2**32)")
    word = (cell_index << 32) | replication
    return _splitmix64(_splitmix64(base_seed & _MASK64) ^ word)


class Cell(NamedTuple):
    fa: float
    nd: int
    adjust_error: bool
    cutoff_time: bool


class Facet(NamedTuple):
    name: str
    adjust_error: bool
    cutoff_time: bool
    sweep: str  # "fa" or "nd"


@dataclass(frozen=True)
class ScanSpec:
    name: str
    fa_values: Tuple[float, ...]
    nd_values: Tuple[int, ...]
    adjust_error_values: Tuple[bool, ...]
    cutoff_values: Tuple[bool, ...]
    replications: int = 30
    base_seed: int = 0
    config: RunConfig = field(default_factory=RunConfig)
    facets: Tuple[Facet, ...] = ()

    def __post_init__(self) -> None:
        for label in ("fa_values", "nd_values", "adjust_error_values", "cutoff_values"):
            if not getattr(self, label):
                raise ValueError(f"{label} must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if any(not fa > 0 for fa in self.fa_values):
            raise ValueError("fa values must be > 0")
        if any(nd < 0 for nd in self.nd_values):
            raise ValueError("nd values must be >= 0")

    def cells(self) -> List[Cell]:
        return [
            Cell(fa, nd, adj, cut)
            for fa, nd, adj, cut in itertools.product(
                self.fa_values, self.nd_values, self.adjust_error_values, self.cutoff_values
            )
        ]

    def cell_config(self, cell: Cell) -> RunConfig:
        return self.config.replace(
            fa=cell.fa, nd=cell.nd, adjust_error=cell.adjust_error, cutoff_time=cell.cutoff_time
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "fa_values": list(self.fa_values),
            "nd_values": list(self.nd_values),
            "adjust_error_values": list(self.adjust_error_values),
            "cutoff_values": list(self.cutoff_values),
            "replications": self.replications,
            "base_seed": self.base_seed,
            "config": config_to_dict(self.config),
            "facets": [f._asdict() for f in self.facets],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> ScanSpec:
        return cls(
            name=d["name"],
            fa_values=tuple(float(v) for v in d["fa_values"]),
            nd_values=tuple(int(v) for v in d["nd_values"]),
            adjust_error_values=tuple(bool(v) for v in d["adjust_error_values"]),
            cutoff_values=tuple(bool(v) for v in d["cutoff_values"]),
            replications=int(d["replications"]),
            base_seed=int(d["base_seed"]),
            config=config_from_dict(d["config"]),
            facets=tuple(Facet(**f) for f in d.get("facets", ())),
        )


ND_GRID = (1, 5, 10)

_PRESET_GRIDS: Dict[str, Dict[str, Any]] = {
    "fig7-left": dict(
        fa_values=(0.1, 0.5, 1.0), nd_values=(1,), adjust_error_values=(False,), cutoff_values=(False,),
        facets=(Facet("fig7-left", False, False, "fa"),),
    ),
    "fig7-right": dict(
        fa_values=(0.1,), nd_values=ND_GRID, adjust_error_values=(True,), cutoff_values=(True,),
        facets=(Facet("fig7-right", True, True, "nd"),),
    ),
    "fig8": dict(
        fa_values=(0.1,), nd_values=ND_GRID, adjust_error_values=(False, True), cutoff_values=(False,),
        facets=(Facet("fig8-left", False, False, "nd"), Facet("fig8-right", True, False, "nd")),
    ),
    "fig9": dict(
        fa_values=(0.1,), nd_values=ND_GRID, adjust_error_values=(False, True), cutoff_values=(True,),
        facets=(Facet("fig9-left", False, True, "nd"), Facet("fig9-right", True, True, "nd")),
    ),
}

PRESET_DESCRIPTIONS = {
    "fig7-left": "FA in {0.1, 0.5, 1.0}, ND = 1, fixed TE, no time limit",
    "fig7-right": "FA = 0.1, ND in {1, 5, 10}, adjustable TE, hard time limit",
    "fig8": "FA = 0.1, ND in {1, 5, 10}, fixed and adjustable TE, no time limit",
    "fig9": "FA = 0.1, ND in {1, 5, 10}, fixed and adjustable TE, hard time limit",
}

PRESETS = tuple(_PRESET_GRIDS)


def preset_spec(
    name: str,
    config: Optional[RunConfig] = None,
    replications: Optional[int] = None,
    base_seed: Optional[int] = None,
) -> ScanSpec:
    if name not in _PRESET_GRIDS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    config = config or RunConfig()
    return ScanSpec(
        name=name,
        replications=replications if replications is not None else config.replications,
        base_seed=base_seed if base_seed is not None else config.base_seed,
        config=config,
        **_PRESET_GRIDS[name],
    )


def single_cell_spec(config: RunConfig, name: str = "scan") -> ScanSpec:
    return ScanSpec(
        name=name,
        fa_values=(config.fa,),
        nd_values=(config.nd,),
        adjust_error_values=(config.adjust_error,),
        cutoff_values=(config.cutoff_time,),
        replications=config.replications,
        base_seed=config.base_seed,
        config=config,
        facets=(Facet(name, config.adjust_error, config.cutoff_time, "fa"),),
    )


@dataclass
class CellAggregate:
    pq: float
    events: StatAccumulator = field(default_factory=StatAccumulator)
    ticks: StatAccumulator = field(default_factory=StatAccumulator)
    # only measurements with a defined SE contribute here
    final_se: StatAccumulator = field(default_factory=StatAccumulator)
    reached_te: StatAccumulator = field(default_factory=StatAccumulator)
    target_te: StatAccumulator = field(default_factory=StatAccumulator)

    @property
    def count(self) -> int:
        return self.events.n

    def merge(self, other: CellAggregate) -> CellAggregate:
        return CellAggregate(
            self.pq,
            self.events.merge(other.events),
            self.ticks.merge(other.ticks),
            self.final_se.merge(other.final_se),
            self.reached_te.merge(other.reached_te),
            self.target_te.merge(other.target_te),
        )

    def to_dict(self) -> Dict[str, Any]:
        def acc(a: StatAccumulator) -> Dict[str, Any]:
            return {"n": a.n, "mean": a.mean, "std": a.std}

        return {
            "pq": self.pq,
            "events": acc(self.events),
            "ticks": acc(self.ticks),
            "final_se": acc(self.final_se),
            "reached_te": acc(self.reached_te),
            "target_te": acc(self.target_te),
        }


def _log_aggregates(log: ExperimentLog) -> Dict[str, CellAggregate]:
    out = {}
    for rec in log.records:
        agg = CellAggregate(rec.pq)
        agg.events.update(rec.events)
        agg.ticks.update(rec.ticks_used)
        if math.isfinite(rec.final_se):
            agg.final_se.update(rec.final_se)
        agg.reached_te.update(1.0 if rec.reached_te else 0.0)
        agg.target_te.update(rec.target_te)
        out[rec.sample_id] = agg
    return out


def aggregate(logs: Sequence[ExperimentLog]) -> Dict[str, CellAggregate]:
    """Per-sample statistics over replications of one cell.

    Logs are reduced in seed order, so the result does not depend on the
    order they are passed in.
    """
    if not logs:
        raise ValueError("no logs to aggregate")
    result: Dict[str, CellAggregate] = {}
    for log in sorted(logs, key=lambda lg: lg.seed):
        for sample_id, agg in _log_aggregates(log).items():
            prev = result.get(sample_id)
            result[sample_id] = agg if prev is None else prev.merge(agg)
    return result


class RunSummary(NamedTuple):
    cell: Cell
    replication: int
    seed: int
    log: ExperimentLog


@dataclass
class ScanResult:
    spec: ScanSpec
    cells: Dict[Tuple[float, int, bool, bool, str], CellAggregate]
    runs: List[RunSummary]

    def cell_logs(self, cell: Cell) -> List[ExperimentLog]:
        return [r.log for r in self.runs if r.cell == cell]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "cells": [
                {"key": list(key), **agg.to_dict()} for key, agg in sorted(self.cells.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _run_job(job: Tuple[ScanSpec, Cell, int, int]) -> ExperimentLog:
    spec, cell, replication, seed = job
    cfg = spec.cell_config(cell)
    return run_experiment(ExperimentPlan.from_config(cfg), cfg, seed)


def _jobs(spec: ScanSpec) -> Iterable[Tuple[ScanSpec, Cell, int, int]]:
    for index, cell in enumerate(spec.cells()):
        for rep in range(spec.replications):
            yield spec, cell, rep, derive_seed(spec.base_seed, index, rep)


def execute_scan(spec: ScanSpec, workers: int = 1) -> ScanResult:
    """Run every cell x replication; ``workers=0`` means one per CPU."""
    jobs = list(_jobs(spec))
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        logs = [_run_job(job) for job in jobs]

    runs = [RunSummary(cell, rep, seed, log) for (_, cell, rep, seed), log in zip(jobs, logs)]
    cells: Dict[Tuple[float, int, bool, bool, str], CellAggregate] = {}
    for cell in spec.cells():
        for sample_id, agg in aggregate([r.log for r in runs if r.cell == cell]).items():
            cells[(*cell, sample_id)] = agg
    return ScanResult(spec, cells, runs)
