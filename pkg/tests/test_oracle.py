import json
import math

import mpmath
import numpy as np
import pytest

from pluralitysim.graphs import build_graph
from pluralitysim.oracle import (
    CounterThresholds,
    ThresholdInversionError,
    WalkEnsemble,
    chernoff_tail_check,
    counter_thresholds,
    marginal_equality_test,
    negative_association_test,
    walk_step,
)
from pluralitysim.patterns import ActiveEdgeSet, PatternSpec
from pluralitysim.smoothing import transition_from_active


def test_walk_step_identity_matrix_no_movement():
    p = transition_from_active(ActiveEdgeSet(round=1, n=3, pairs=()), 1)
    ens = WalkEnsemble(positions=np.array([0, 1, 2, 2]))
    out = walk_step(ens, p, np.random.default_rng(0))
    assert out.positions.tolist() == [0, 1, 2, 2]
    assert out.steps == 1


def test_walk_step_single_edge_half_probability():
    p = transition_from_active(ActiveEdgeSet(round=1, n=2, pairs=((0, 1),)), 1)
    rng = np.random.default_rng(1)
    n = 20_000
    ens = WalkEnsemble(positions=np.zeros(n, dtype=np.int64))
    out = walk_step(ens, p, rng)
    moved = float((out.positions == 1).mean())
    assert abs(moved - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_walk_step_frequencies_match_matrix_entries():
    g = build_graph("complete", 4)
    act = ActiveEdgeSet(round=1, n=4, pairs=g.edges)
    p = transition_from_active(act, 3)
    rng = np.random.default_rng(2)
    n = 60_000
    ens = WalkEnsemble(positions=np.zeros(n, dtype=np.int64))
    out = walk_step(ens, p, rng)
    freq = np.bincount(out.positions, minlength=4) / n
    expect = p.to_float()[0]
    sigma = np.sqrt(expect * (1 - expect) / n)
    assert (np.abs(freq - expect) <= 3 * sigma + 1e-12).all()


def test_marginal_t0_exact_zero():
    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 4))
    rep = marginal_equality_test(spec, 0, 1000)
    assert rep.observed == 0.0
    assert rep.verdict == "PASS"


def test_marginal_k2_one_step():
    # both processes put the token on either node with probability 1/2
    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 2))
    rep = marginal_equality_test(spec, 1, 20_000, seed=4)
    assert rep.verdict == "PASS"
    assert rep.observed <= 0.02


def test_negative_association_k2_exact():
    # two tracked tokens on the same endpoint with gamma=2 must split:
    # the joint probability of landing together is exactly 0 <= (1/2)^2
    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 2))
    rep = negative_association_test(spec, [0, 0], [1], 1, 4000, gamma=2, seed=8)
    assert rep.observed == 0.0
    assert rep.verdict == "PASS"


def test_negative_association_tokens_never_colocated_after_one_step():
    from pluralitysim.oracle import _tracked_runs

    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 2))
    pos_s, _ = _tracked_runs(spec, [0, 0], 1, [1], 2000, 2, 3)
    assert (pos_s[:, 0, 0] != pos_s[:, 0, 1]).all()


def test_negative_association_d_all_nodes_passes_with_equality():
    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 4))
    rep = negative_association_test(spec, [0, 0], [0, 1, 2, 3], 3, 2000, seed=1)
    assert rep.observed == 1.0
    assert rep.bound == 1.0
    assert rep.verdict == "PASS"


def test_negative_association_needs_two_tokens():
    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 4))
    with pytest.raises(ValueError):
        negative_association_test(spec, [0], [1], 1, 100)


def test_chernoff_bound_value_and_trivial_pass():
    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 4))
    # mu = (1/4 + 1/1024) * 4 * 5, forced by the formula
    mu = (0.25 + 4.0**-5) * 4 * 5
    assert mu == pytest.approx(5.01953125, abs=0)
    rep = chernoff_tail_check(spec, [0, 1, 2, 3], 0, 5, 50.0, 500, t_mix=3, seed=2)
    # threshold exceeds |B|*T, so the tail is empty
    assert rep.observed == 0.0
    assert rep.verdict == "PASS"
    assert rep.bound == pytest.approx(math.exp(-(50.0**2) * mu / 3))


def test_report_json_roundtrip_and_verdict_consistency():
    spec = PatternSpec(model="diffusion", graph=build_graph("complete", 4))
    rep = marginal_equality_test(spec, 2, 2000, seed=6)
    blob = json.loads(json.dumps(rep.to_json()))
    assert set(blob) == {"statistic", "samples", "observed", "bound", "slack", "verdict"}
    recomputed = "PASS" if blob["observed"] <= blob["bound"] + 3 * blob["slack"] else "FAIL"
    assert recomputed == blob["verdict"]


def _thresholds_mp(n, counts, T, gamma, c, updates=None):
    """Independent high-precision evaluation of the separation thresholds."""
    mpmath.mp.dps = 50
    u = updates if updates is not None else int(mpmath.ceil(mpmath.mpf(c) * T))
    p = mpmath.mpf(1) / n + mpmath.mpf(1) / mpmath.mpf(n) ** 5
    n1 = counts[0]
    n2 = counts[1] if len(counts) > 1 else 0
    log2n = mpmath.log(n, 2)
    bottom = p * u * gamma * n2 + mpmath.sqrt(mpmath.mpf(c) * log2n * u * gamma * n2 / n)
    top = (
        mpmath.mpf(u) * gamma
        - p * u * gamma * (n - n1)
        - mpmath.sqrt(mpmath.mpf(c) * log2n * u * gamma * (n - n1) / n)
    )
    return float(bottom), float(top)


def test_counter_thresholds_dual_implementation_agrees():
    th = counter_thresholds(100, (60, 40), T=10, gamma=100, c=12.0)
    bot, top = _thresholds_mp(100, (60, 40), 10, 100, 12.0)
    assert th.bottom == pytest.approx(bot, abs=1e-9)
    assert th.top == pytest.approx(top, abs=1e-9)
    assert th.top > th.bottom
    assert th.updates == 120


def test_counter_thresholds_unanimous():
    th = counter_thresholds(10, (10,), T=2, gamma=5, c=12.0)
    assert th.bottom == 0.0
    assert th.top == pytest.approx(th.updates * 5)


def test_counter_thresholds_monotone_gap():
    gaps = []
    for n2 in range(25, 50):
        th = counter_thresholds(100, (50, n2, 50 - n2), T=10, gamma=200, c=12.0)
        gaps.append(th.top - th.bottom)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_counter_thresholds_inversion_reports_both_values():
    with pytest.raises(ThresholdInversionError) as err:
        counter_thresholds(4, (3, 1), T=1, gamma=1, c=12.0)
    assert err.value.bottom >= err.value.top


def test_counter_thresholds_validation():
    with pytest.raises(ValueError):
        counter_thresholds(10, (4, 6), T=1, gamma=10, c=12.0)  # not sorted
    with pytest.raises(ValueError):
        counter_thresholds(10, (5, 5), T=1, gamma=10, c=12.0)  # no strict plurality
    with pytest.raises(ValueError):
        counter_thresholds(10, (6, 4), T=1, gamma=10, c=11.0)  # c below 12
