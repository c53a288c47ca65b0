"""Seeded experiment sweeps, scaling reports, and result emission.

Every replica's seeds are pure functions of (master seed, sweep point,
replica index), so re-running a sweep reproduces the CSV byte for byte.
One CSV row is written per replica plus a JSON summary with per-point
aggregates.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .balance import (
    BalanceConfig,
    default_discrepancy_target,
    required_gamma_balance,
    run_balance,
)
from .graphs import build_graph
from .patterns import PatternSpec, canonical_matchings, max_active_degree
from .records import CSV_HEADER, RunRecord, csv_row
from .shuffle import ShuffleConfig, required_gamma, run_shuffle
from .smoothing import estimate_mixing_time

__all__ = [
    "ExperimentSpec",
    "ScalingRow",
    "derive_counts",
    "assignment_from_counts",
    "run_sweep",
    "write_csv",
    "write_summary",
    "scaling_report",
]


def derive_counts(n: int, k: int, alpha: float) -> tuple:
    """Opinion counts with bias as close to alpha as integrality allows:
    equal-ish split plus a bump of max(1, round(alpha*n)) on label 0."""
    if k < 1 or n < 1:
        raise ValueError("need n >= 1 and k >= 1")
    diff = max(1, round(alpha * n))
    if diff > n - (0 if k == 1 else 0):
        diff = n
    q, r = divmod(n - diff, k)
    counts = [q + 1 if i < r else q for i in range(k)]
    counts[0] += diff
    if k > 1 and counts[0] <= counts[1]:
        raise ValueError("derived counts lost the strict plurality")
    return tuple(counts)


def assignment_from_counts(counts) -> np.ndarray:
    return np.repeat(np.arange(len(counts), dtype=np.int64), counts)


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a protocol and model over a list of graph sizes.

    Either explicit opinion `counts` (single size only) or a target bias
    `alpha` (counts derived per size). Optional keys fall back to
    per-protocol defaults documented in run_sweep.
    """

    protocol: str
    model: str
    sizes: tuple
    graph_kind: str = "complete"
    k: int = 2
    counts: tuple | None = None
    alpha: float | None = None
    T: int = 1
    g: int | None = None
    c: float = 12.0
    epsilon: float | None = None
    replicas: int = 10
    master_seed: int = 0
    horizon: int | None = None
    d: int | None = None
    matching_probability: float = 1.0
    matchings: tuple = ()
    out: str | None = None

    def __post_init__(self):
        if self.protocol not in ("shuffle", "balance"):
            raise ValueError("protocol must be shuffle or balance")
        if self.counts is not None and len(self.sizes) != 1:
            raise ValueError("explicit counts only make sense for a single size")
        if self.counts is None and self.alpha is None:
            raise ValueError("give either counts or alpha")


def _seed_int(*words) -> int:
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1, np.uint64)[0])


def _point_matchings(spec: ExperimentSpec, graph):
    if spec.matchings:
        return spec.matchings
    return canonical_matchings(spec.graph_kind, graph, spec.d)


def _pattern_for(spec: ExperimentSpec, graph, seed: int) -> PatternSpec:
    matchings = ()
    if spec.model == "balancing_circuit":
        matchings = _point_matchings(spec, graph)
    return PatternSpec(
        model=spec.model,
        graph=graph,
        matchings=matchings,
        matching_probability=spec.matching_probability,
        seed=seed,
    )


def run_sweep(spec: ExperimentSpec):
    """Run all (size x replica) runs; deterministic in the master seed.

    Individual replica failures are recorded as zero-round rows and never
    abort the sweep. Returns (records, summary); writes <out>.csv and
    <out>.json when spec.out is set.
    """
    records = []
    summary_points = []
    for point, n in enumerate(spec.sizes):
        graph = build_graph(spec.graph_kind, n, d=spec.d, seed=_seed_int(spec.master_seed, point, 0, 0))
        counts = spec.counts if spec.counts is not None else derive_counts(n, spec.k, spec.alpha)
        assignment = assignment_from_counts(counts)
        alpha = (counts[0] - (counts[1] if len(counts) > 1 else 0)) / n
        ref_pattern = _pattern_for(spec, graph, _seed_int(spec.master_seed, point, 0, 1))
        delta = max_active_degree(ref_pattern)

        t_mix = 0
        gamma = 0
        cfg_error = None
        try:
            if spec.protocol == "shuffle":
                mix_horizon = spec.horizon or max(1024, 64 * n * math.ceil(math.log2(n)))
                t_mix = estimate_mixing_time(
                    ref_pattern, epsilon=spec.epsilon, horizon=mix_horizon, trials=24
                ).rounds
                gamma = required_gamma(n, alpha, spec.T, spec.c, delta)
            else:
                g = spec.g if spec.g is not None else default_discrepancy_target(
                    spec.model, int(graph.degree.max()), n
                )
                gamma = required_gamma_balance(g, alpha, n=n)
        except Exception as exc:  # recorded per replica below
            cfg_error = str(exc)

        point_records = []
        errors = []
        for rep in range(spec.replicas):
            run_seed = _seed_int(spec.master_seed, point, rep, 2)
            if cfg_error is not None:
                errors.append(f"rep {rep}: {cfg_error}")
                point_records.append(
                    RunRecord(run_seed, n, len(counts), alpha, 0, spec.model, spec.protocol, 0, 0, -1, False, 0)
                )
                continue
            pattern = _pattern_for(spec, graph, _seed_int(spec.master_seed, point, rep, 3))
            try:
                if spec.protocol == "shuffle":
                    cfg = ShuffleConfig(
                        gamma=gamma, T=spec.T, t_mix=t_mix, c=spec.c,
                        k=len(counts), assignment=assignment,
                    )
                    point_records.append(run_shuffle(cfg, pattern, run_seed).record)
                else:
                    g = spec.g if spec.g is not None else default_discrepancy_target(
                        spec.model, int(graph.degree.max()), n
                    )
                    horizon = spec.horizon or math.ceil(64 * n * math.log2(n))
                    cfg = BalanceConfig(
                        gamma=gamma, g=g, k=len(counts), assignment=assignment, horizon=horizon,
                    )
                    point_records.append(run_balance(cfg, pattern, run_seed).record)
            except Exception as exc:
                errors.append(f"rep {rep}: {exc}")
                point_records.append(
                    RunRecord(run_seed, n, len(counts), alpha, gamma, spec.model, spec.protocol, t_mix, 0, -1, False, 0)
                )

        records.extend(point_records)
        reached = [r.consensus_round for r in point_records if r.consensus_round >= 0]
        summary_points.append(
            {
                "n": n,
                "model": spec.model,
                "protocol": spec.protocol,
                "replicas": spec.replicas,
                "gamma": gamma,
                "t_mix": t_mix,
                "success_fraction": sum(r.all_correct for r in point_records) / spec.replicas,
                "median_consensus_round": statistics.median(reached) if reached else None,
                "errors": errors,
            }
        )

    summary = {"master_seed": spec.master_seed, "points": summary_points}
    if spec.out:
        write_csv(records, f"{spec.out}.csv")
        write_summary(summary, f"{spec.out}.json")
    return records, summary


def write_csv(records, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(csv_row(r) + "\n")


def write_summary(summary, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class ScalingRow:
    n: int
    predicted: float
    median_consensus: float | None
    ratio: float | None
    ratio_min: float | None
    ratio_max: float | None
    unresolved: int  # replicas that never reached lasting consensus


def predicted_consensus_time(model: str, n: int, lam2: float, T: int = 1, d: int = 1, p_min: float = 1.0) -> float:
    """Model-specific consensus-time form, up to constants."""
    gap = 1.0 - lam2
    base = T * math.log2(n) / gap
    if model == "diffusion":
        return base
    if model == "random_matching":
        return base / (d * p_min)
    if model == "balancing_circuit":
        return base * d
    if model == "sequential":
        return base * n
    raise ValueError(f"unknown model {model!r}")


def scaling_report(records, model: str, lambda2_by_n: dict, T: int = 1, d_by_n: dict | None = None, p_min: float = 1.0):
    """Measured/predicted consensus-time ratios per size.

    lambda2_by_n maps each swept n to its graph's lambda_2; d_by_n (degree
    or matching count, model dependent) defaults to 1.
    """
    by_n = {}
    for r in records:
        by_n.setdefault(r.n, []).append(r)
    if len(by_n) < 3:
        raise ValueError("scaling needs at least 3 sizes")
    rows = []
    for n in sorted(by_n):
        d = (d_by_n or {}).get(n, 1)
        pred = predicted_consensus_time(model, n, lambda2_by_n[n], T=T, d=d, p_min=p_min)
        reached = [r.consensus_round for r in by_n[n] if r.consensus_round >= 0]
        ratios = [m / pred for m in reached]
        rows.append(
            ScalingRow(
                n=n,
                predicted=pred,
                median_consensus=statistics.median(reached) if reached else None,
                ratio=statistics.median(ratios) if ratios else None,
                ratio_min=min(ratios) if ratios else None,
                ratio_max=max(ratios) if ratios else None,
                unresolved=len(by_n[n]) - len(reached),
            )
        )
    return rows
