"""Command-line interface.

Subcommands:
  run      seeded experiment sweep, emitting CSV rows and a JSON summary
  mixing   estimate the smoothing window length of a pattern
  verify   statistical check suites against the independent-walk reference
  report   scaling comparison of measured consensus times to model forms

A config file (--config) holds `key = value` lines using the long flag
names; any flag given on the command line overrides the file.
"""

from __future__ import annotations

import argparse
import json
import sys

from .balance import required_gamma_balance  # noqa: F401  (re-exported for scripts)
from .graphs import build_graph, spectral_gap
from .harness import ExperimentSpec, run_sweep, scaling_report
from .oracle import (
    chernoff_tail_check,
    counter_thresholds,
    marginal_equality_test,
    negative_association_test,
)
from .patterns import PatternSpec, canonical_matchings, matching_from_file
from .records import CSV_HEADER, RunRecord
from .smoothing import estimate_mixing_time


def _load_config(path) -> dict:
    cfg = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def _int_list(text) -> tuple:
    return tuple(int(x) for x in str(text).split(",") if x != "")


def _resolve(args, config, name, conv, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return conv(value) if isinstance(value, str) else value
    if name in config:
        return conv(config[name])
    return default


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pluralitysim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="key = value defaults file")
        sp.add_argument("--model", default=None,
                        help="diffusion | random_matching | balancing_circuit | sequential")
        sp.add_argument("--graph", default=None, help="complete | cycle | hypercube | random_regular | torus")
        sp.add_argument("--n", default=None, help="node count, or comma list for sweeps")
        sp.add_argument("--d", type=int, default=None, help="degree (random_regular) / matching count")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--epsilon", type=float, default=None, help="smoothing target (default n^-5)")
        sp.add_argument("--horizon", type=int, default=None)
        sp.add_argument("--matching-probability", type=float, default=None, dest="matching_probability")
        sp.add_argument("--matchings", default=None, help="comma list of matching files (balancing_circuit)")
        sp.add_argument("--out", default=None)

    rp = sub.add_parser("run", help="run a seeded sweep")
    common(rp)
    rp.add_argument("--protocol", default=None, help="shuffle | balance")
    rp.add_argument("--k", type=int, default=None)
    rp.add_argument("--counts", default=None, help="comma list of opinion counts, plurality first")
    rp.add_argument("--alpha", type=float, default=None)
    rp.add_argument("--T", type=int, default=None, dest="T")
    rp.add_argument("--g", type=int, default=None)
    rp.add_argument("--c", type=float, default=None)
    rp.add_argument("--replicas", type=int, default=None)

    mp = sub.add_parser("mixing", help="estimate the smoothing window length")
    common(mp)
    mp.add_argument("--trials", type=int, default=None)

    vp = sub.add_parser("verify", help="run statistical check suites")
    common(vp)
    vp.add_argument("--suite", default=None,
                    help="marginal | negative | chernoff | thresholds | all")
    vp.add_argument("--samples", type=int, default=None)

    gp = sub.add_parser("report", help="scaling report from a sweep CSV")
    common(gp)
    gp.add_argument("--input", default=None, help="CSV produced by `run`")
    gp.add_argument("--T", type=int, default=None, dest="T")
    gp.add_argument("--p-min", type=float, default=None, dest="p_min")
    return p


def _pattern(args, config, n: int) -> PatternSpec:
    model = _resolve(args, config, "model", str, "diffusion")
    kind = _resolve(args, config, "graph", str, "complete")
    d = _resolve(args, config, "d", int)
    seed = _resolve(args, config, "seed", int, 0)
    prob = _resolve(args, config, "matching_probability", float, 1.0)
    graph = build_graph(kind, n, d=d, seed=seed)
    matchings = ()
    if model == "balancing_circuit":
        files = _resolve(args, config, "matchings", str)
        if files:
            matchings = tuple(matching_from_file(f, graph) for f in files.split(","))
        else:
            matchings = canonical_matchings(kind, graph, d)
    return PatternSpec(model=model, graph=graph, matchings=matchings,
                       matching_probability=prob, seed=seed)


def _cmd_run(args, config) -> int:
    sizes = _resolve(args, config, "n", _int_list)
    if not sizes:
        raise SystemExit("run needs --n")
    matchings = ()
    files = _resolve(args, config, "matchings", str)
    kind = _resolve(args, config, "graph", str, "complete")
    if files:
        graph = build_graph(kind, sizes[0], d=_resolve(args, config, "d", int))
        matchings = tuple(matching_from_file(f, graph) for f in files.split(","))
    counts = _resolve(args, config, "counts", _int_list)
    spec = ExperimentSpec(
        protocol=_resolve(args, config, "protocol", str, "shuffle"),
        model=_resolve(args, config, "model", str, "diffusion"),
        sizes=sizes,
        graph_kind=kind,
        k=_resolve(args, config, "k", int, len(counts) if counts else 2),
        counts=counts,
        alpha=_resolve(args, config, "alpha", float),
        T=_resolve(args, config, "T", int, 1),
        g=_resolve(args, config, "g", int),
        c=_resolve(args, config, "c", float, 12.0),
        epsilon=_resolve(args, config, "epsilon", float),
        replicas=_resolve(args, config, "replicas", int, 10),
        master_seed=_resolve(args, config, "seed", int, 0),
        horizon=_resolve(args, config, "horizon", int),
        d=_resolve(args, config, "d", int),
        matching_probability=_resolve(args, config, "matching_probability", float, 1.0),
        matchings=matchings,
        out=_resolve(args, config, "out", str),
    )
    records, summary = run_sweep(spec)
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    print()
    if spec.out:
        print(f"wrote {spec.out}.csv and {spec.out}.json", file=sys.stderr)
    return 0


def _cmd_mixing(args, config) -> int:
    sizes = _resolve(args, config, "n", _int_list)
    if not sizes or len(sizes) != 1:
        raise SystemExit("mixing needs a single --n")
    spec = _pattern(args, config, sizes[0])
    est = estimate_mixing_time(
        spec,
        epsilon=_resolve(args, config, "epsilon", float),
        horizon=_resolve(args, config, "horizon", int, 1024),
        trials=_resolve(args, config, "trials", int, 32),
    )
    json.dump(
        {"t_mix": est.rounds, "epsilon": est.epsilon, "exact": est.exact,
         "windows": est.windows, "model": spec.model},
        sys.stdout, indent=2, sort_keys=True,
    )
    print()
    return 0


def _cmd_verify(args, config) -> int:
    suite = _resolve(args, config, "suite", str, "all")
    samples = _resolve(args, config, "samples", int, 20000)
    seed = _resolve(args, config, "seed", int, 0)
    sizes = _resolve(args, config, "n", _int_list, (4,))
    spec = _pattern(args, config, sizes[0])
    t_mix = estimate_mixing_time(spec, horizon=_resolve(args, config, "horizon", int, 1024)).rounds
    reports = []
    if suite in ("marginal", "all"):
        reports.append(marginal_equality_test(spec, t_mix, samples, seed=seed).to_json())
    if suite in ("negative", "all"):
        reports.append(
            negative_association_test(spec, [0, 0], [1], min(5, t_mix), samples, seed=seed).to_json()
        )
    if suite in ("chernoff", "all"):
        reports.append(
            chernoff_tail_check(
                spec, list(range(spec.graph.n)), 0, 5, 1.0, samples, t_mix=t_mix, seed=seed
            ).to_json()
        )
    if suite in ("thresholds", "all"):
        th = counter_thresholds(100, (60, 40), T=10, gamma=100, c=12.0)
        reports.append(
            {"statistic": "counter_thresholds", "below": th.bottom, "above": th.top,
             "updates": th.updates, "verdict": "PASS" if th.top > th.bottom else "FAIL"}
        )
    out = _resolve(args, config, "out", str)
    text = json.dumps(reports, indent=2, sort_keys=True)
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if all(r.get("verdict") == "PASS" for r in reports) else 1


def _read_records(path):
    records = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}")
        for line in fh:
            f = line.strip().split(",")
            if len(f) != 12:
                continue
            records.append(
                RunRecord(
                    seed=int(f[0]), n=int(f[1]), k=int(f[2]), alpha=float(f[3]),
                    gamma=int(f[4]), model=f[5], protocol=f[6], t_mix=int(f[7]),
                    rounds=int(f[8]), consensus_round=int(f[9]),
                    all_correct=bool(int(f[10])), memory_bits=int(f[11]),
                )
            )
    return records


def _cmd_report(args, config) -> int:
    path = _resolve(args, config, "input", str)
    if not path:
        raise SystemExit("report needs --input")
    records = _read_records(path)
    model = _resolve(args, config, "model", str, records[0].model if records else "diffusion")
    kind = _resolve(args, config, "graph", str, "complete")
    d = _resolve(args, config, "d", int)
    seed = _resolve(args, config, "seed", int, 0)
    sizes = sorted({r.n for r in records})
    lam2 = {}
    degs = {}
    for n in sizes:
        g = build_graph(kind, n, d=d, seed=seed)
        lam2[n] = 1.0 - spectral_gap(g)
        degs[n] = int(g.degree.max())
    rows = scaling_report(
        records, model, lam2,
        T=_resolve(args, config, "T", int, 1),
        d_by_n=degs,
        p_min=_resolve(args, config, "p_min", float, 1.0),
    )
    json.dump([vars(r) for r in rows], sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = _load_config(args.config) if args.config else {}
    if args.command == "run":
        return _cmd_run(args, config)
    if args.command == "mixing":
        return _cmd_mixing(args, config)
    if args.command == "verify":
        return _cmd_verify(args, config)
    if args.command == "report":
        return _cmd_report(args, config)
    raise SystemExit(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
