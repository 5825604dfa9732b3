"""End-to-end acceptance gate.

Each test maps to one numbered criterion; the conftest summary hook rolls
test outcomes into a per-criterion PASS/FAIL scorecard at the end of the
run. Fixtures are frozen: every value asserted here was derived from an
independent oracle (hand arithmetic, exhaustive search, LSDV algebra) or
pre-validated across seeds before being pinned.
"""
import datetime
import json
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import helpers
import oracles
from rewire_kit.community import Partition, louvain, modularity
from rewire_kit.counterfactual import (
    estimate_propensities,
    modularity_series,
    simulate_static,
    simulate_undifferentiated,
)
from rewire_kit.dataset import CSV_FILES, Event, build_dataset
from rewire_kit.econometrics import REGRESSORS, build_panel, fit_fe_panel
from rewire_kit.metrics import (
    InterestDistribution,
    mean_active_tenure,
    novelty,
    novelty_series,
    population_interest_distribution,
    specialization,
    tenure,
    term_adopter_tenure,
)
from rewire_kit.netbuild import AttendanceVector, yearly_slice
from rewire_kit.pipeline import ARTIFACTS, PipelineConfig, run_pipeline
from rewire_kit.synth import SynthConfig, generate_synthetic
from test_econometrics import as_arrays, make_rows


# ----- criterion 1: novelty fixed value -----


def test_criterion_01_novelty_fixed_value():
    cur = AttendanceVector(member="m", year=2012, counts={"g1": 5, "g2": 2})
    prev = AttendanceVector(member="m", year=2011, counts={"g1": 7, "g3": 1})
    want = 1.0 - 35.0 / math.sqrt(1450.0)
    assert abs(novelty(cur, prev) - want) < 1e-6


# ----- criterion 2: tenure span arithmetic -----


def test_criterion_02_tenure_span():
    d = build_dataset(
        events=[Event(id="e1", group="g", date=datetime.date(2007, 6, 1))],
        rsvps=[("m", "e1")],
    )
    assert tenure("m", 2018, d) == 11


# ----- criterion 3: propensity ratio -----


def test_criterion_03_propensity_ratio():
    base = datetime.date(2012, 1, 1)
    events = [
        Event(id=f"e{i}", group="g", date=base + datetime.timedelta(days=30 * i))
        for i in range(10)
    ]
    d = build_dataset(events=events, rsvps=[("m", f"e{i}") for i in range(4)])
    assert estimate_propensities(d).prob("m", "g") == 0.4


# ----- criterion 4: bounds property suites, 1000 cases each -----

_GROUPS = [f"g{i}" for i in range(8)]
_TERMS = [f"t{i}" for i in range(8)]
_MEMBERS = [f"m{i}" for i in range(10)]

_counts = st.dictionaries(
    st.sampled_from(_GROUPS), st.integers(min_value=0, max_value=100),
    min_size=1, max_size=8,
).filter(lambda c: any(v > 0 for v in c.values()))


def _normalize(weights, prefix=""):
    total = sum(weights.values())
    return InterestDistribution({prefix + t: w / total for t, w in weights.items()})


_weights = st.dictionaries(
    st.sampled_from(_TERMS),
    st.floats(min_value=1e-3, max_value=1.0, allow_nan=False),
    min_size=1, max_size=8,
)


@settings(max_examples=1000, derandomize=True, deadline=None)
@given(_counts, _counts)
def test_criterion_04_novelty_bounds(a, b):
    cur = AttendanceVector(member="m", year=2012, counts=a)
    prev = AttendanceVector(member="m", year=2011, counts=b)
    assert 0.0 <= novelty(cur, prev) <= 1.0


@settings(max_examples=1000, derandomize=True, deadline=None)
@given(_weights, _weights)
def test_criterion_04_specialization_bounds(wa, wb):
    f = _normalize(wa)
    g = _normalize(wb)
    h = _normalize(wb, prefix="other-")
    assert 0.0 <= specialization(f, g) <= 2.0 + 1e-9
    assert specialization(f, f) == 0.0
    assert specialization(f, h) == pytest.approx(2.0, abs=1e-9)


@settings(max_examples=1000, derandomize=True, deadline=None)
@given(
    st.lists(
        st.tuples(st.sampled_from(_MEMBERS), st.sampled_from(_TERMS)),
        min_size=1, max_size=30,
    )
)
def test_criterion_04_interest_distribution_sums_to_one(rows):
    d = build_dataset(events=[], rsvps=[], member_interests=rows)
    f = population_interest_distribution(sorted({m for m, _ in rows}), d)
    assert abs(sum(f.mass.values()) - 1.0) <= 1e-9


# ----- criterion 5: modularity identities and exact-search bound -----


def test_criterion_05_single_community_is_exactly_zero():
    rng = np.random.default_rng(2024)
    for trial in range(50):
        n = int(rng.integers(4, 13))
        g = helpers.graph_from_dense(helpers.random_dense_adjacency(rng, n, 0.5))
        p = Partition(nodes=g.nodes, labels=np.zeros(n, dtype=np.int64))
        assert modularity(g, p) == 0.0, f"trial {trial}"


def test_criterion_05_worked_examples():
    part, rep = louvain(helpers.two_triangles(), seed=0)
    assert rep.q == pytest.approx(0.5, abs=1e-9)
    assert rep.n_communities == 2
    part4, rep4 = louvain(helpers.complete_graph(4), seed=0)
    assert rep4.n_communities == 1
    assert rep4.q == 0.0


def test_criterion_05_louvain_bounded_by_exhaustive_search():
    rng = np.random.default_rng(1234)
    for trial in range(100):
        n = int(rng.integers(3, 9))
        p = rng.choice([0.3, 0.5, 0.8])
        adj = helpers.random_dense_adjacency(rng, n, p)
        g = helpers.graph_from_dense(adj)
        _, rep = louvain(g, seed=trial)
        assert rep.q <= oracles.best_partition_q(adj) + 1e-12, f"trial {trial}"


def test_criterion_05_planted_two_clique_is_found_exactly():
    adj = np.zeros((8, 8))
    for block in (range(0, 4), range(4, 8)):
        for i in block:
            for j in block:
                if i < j:
                    adj[i, j] = adj[j, i] = 1.0
    adj[0, 4] = adj[4, 0] = 0.5
    g = helpers.graph_from_dense(adj)
    part, rep = louvain(g, seed=0)
    assert rep.n_communities == 2
    assert abs(rep.q - oracles.best_partition_q(adj)) <= 1e-12


# ----- criterion 6: panel estimator matches the LSDV oracle -----


def test_criterion_06_estimator_matches_lsdv_to_1e8():
    rows = make_rows(n_members=40, n_years=5, noise=0.1, seed=7)
    assert len(rows) == 200
    res = fit_fe_panel(rows)
    beta, se, p, df = oracles.lsdv_hc1(*as_arrays(rows))
    assert res.df_resid == df
    for j, name in enumerate(REGRESSORS):
        assert abs(res.coef[name] - beta[j]) < 1e-8, name
        assert abs(res.robust_se[name] - se[j]) < 1e-8, name
        assert abs(res.p_value[name] - p[j]) < 1e-8, name


def test_criterion_06_noiseless_recovery_is_exact():
    rows = make_rows(n_members=40, n_years=5, noise=0.0, seed=7)
    res = fit_fe_panel(rows)
    want = {"year": 0.001, "novelty": -0.3, "log_events": 0.05, "log_connections": 0.02}
    for name, value in want.items():
        assert res.coef[name] == pytest.approx(value, abs=1e-10), name
    assert res.r_squared_within == pytest.approx(1.0, abs=1e-10)


# ----- criterion 7: attendance-preserving null, planted-cluster direction -----


def _planted_cfg(seed):
    return SynthConfig(
        n_members=500, n_groups=8, n_years=3, events_per_group_year=40,
        n_planted_clusters=2, entry_rate=0.05, exit_rate=0.05, rewiring_rate=0.0,
        cross_cluster_attendance_prob=0.02, terms_per_member=4, seed=seed,
    )


def test_criterion_07_null_preserves_every_attendance_count():
    d = generate_synthetic(_planted_cfg(0))
    for year in (2010, 2011, 2012):
        s = yearly_slice(d, year)
        before = np.asarray(s.incidence.sum(axis=1)).ravel()
        for r in range(3):
            sim = simulate_undifferentiated(s, seed=1000 * year + r)
            after = np.asarray(sim.incidence.sum(axis=1)).ravel()
            np.testing.assert_array_equal(before, after)


def test_criterion_07_observed_q_beats_null_in_19_of_20_seeds():
    wins = 0
    for seed in range(20):
        d = generate_synthetic(_planted_cfg(seed))
        series = modularity_series(d, "undifferentiated", replicates=3, seed=seed)
        rows = series.rows
        assert rows, f"seed {seed}: no usable years"
        if all(r.expected_q_mean < r.observed_q for r in rows):
            wins += 1
    assert wins >= 19, f"only {wins}/20 seeds show the planted direction"


# ----- criterion 8: static simulation: zero novelty, rewiring attribution -----


def _constant_propensity_corpus():
    """Two groups, three 365-day spans, 200 events per group-span, and 30
    members who attend a fixed 0.4 share of window-0 events per group."""
    base = datetime.date(2010, 1, 1)
    groups = ("g1", "g2")
    events = []
    for gid in groups:
        for span, day0 in ((0, 0), (1, 365), (2, 730)):
            for i in range(200):
                day = day0 + (i * 354) // 200
                events.append(
                    Event(id=f"e-{gid}-{span}-{i:03d}", group=gid,
                          date=base + datetime.timedelta(days=day))
                )
    members = [f"m{i:03d}" for i in range(30)]
    rsvps = []
    for m in members:
        for gid in groups:
            for i in range(80):
                rsvps.append((m, f"e-{gid}-0-{i:03d}"))
        rsvps.append((m, "e-g1-2-199"))  # anchors the horizon at span 2
    return build_dataset(
        events=events,
        rsvps=rsvps,
        memberships=[(m, g) for m in members for g in groups],
        member_interests=[(m, "topic-x") for m in members],
        group_topics=[("g1", "tag-a"), ("g2", "tag-b")],
    )


def test_criterion_08_constant_propensities_kill_novelty():
    d = _constant_propensity_corpus()
    pt = estimate_propensities(d)
    assert set(pt.p.values()) == {0.4}
    scores = []
    for r in range(20):
        sim = simulate_static(d, pt, seed=1000 + r)
        scores.extend(novelty_series(sim).values())
    assert scores
    assert float(np.mean(scores)) < 0.05


def _attribution_series(rewiring_rate):
    cfg = SynthConfig(
        n_members=400, n_groups=8, n_years=4, events_per_group_year=25,
        n_planted_clusters=2, entry_rate=0.0, exit_rate=0.0,
        rewiring_rate=rewiring_rate, cross_cluster_attendance_prob=0.0,
        terms_per_member=4, seed=11,
    )
    series = modularity_series(generate_synthetic(cfg), "static", replicates=20, seed=11)
    gaps = [r.gap for r in series.rows]
    stds = [r.expected_q_std for r in series.rows]
    return float(np.mean(gaps)), float(np.mean(stds))


def test_criterion_08_gap_attributes_to_rewiring():
    gap_rw, std_rw = _attribution_series(0.4)
    assert abs(gap_rw) > 10.0 * std_rw
    gap_0, std_0 = _attribution_series(0.0)
    assert abs(gap_0) < std_0


# ----- criterion 9: new-term adopters skew junior -----


def test_criterion_09_new_term_adopters_below_network_mean():
    cfg = SynthConfig(
        n_members=1000, n_groups=20, n_years=6, events_per_group_year=12,
        n_planted_clusters=5, entry_rate=0.08, exit_rate=0.05, rewiring_rate=0.35,
        cross_cluster_attendance_prob=0.03, terms_per_member=5, seed=5,
    )
    d = generate_synthetic(cfg)
    first_year = min(d.active_members_by_year)
    checked = 0
    for year in sorted(d.active_members_by_year):
        if year == first_year:
            # every term is new before any entrant exists
            continue
        new = [r for r in term_adopter_tenure(d, year) if r.is_new]
        if not new:
            continue
        mean_new = float(np.mean([r.mean_adopter_tenure for r in new]))
        assert mean_new < mean_active_tenure(d, year), f"year {year}"
        checked += 1
    assert checked >= 3


# ----- criterion 10: negative novelty coefficient on rewired data -----


def test_criterion_10_novelty_coefficient_negative():
    cfg = SynthConfig(
        n_members=1000, n_groups=20, n_years=5, events_per_group_year=12,
        n_planted_clusters=5, entry_rate=0.05, exit_rate=0.05, rewiring_rate=0.35,
        cross_cluster_attendance_prob=0.03, terms_per_member=5, seed=5,
    )
    res = fit_fe_panel(build_panel(generate_synthetic(cfg)))
    assert res.coef["novelty"] < 0.0
    assert res.p_value["novelty"] < 0.05


# ----- criterion 11: determinism and pipeline runtime -----


def test_criterion_11_identical_config_and_seed_identical_bytes(tmp_path):
    synth = SynthConfig(
        n_members=120, n_groups=6, n_years=3, events_per_group_year=8,
        n_planted_clusters=3, entry_rate=0.1, exit_rate=0.1, rewiring_rate=0.3,
        cross_cluster_attendance_prob=0.05, terms_per_member=4, seed=3,
    )
    dirs = (tmp_path / "a", tmp_path / "b")
    for out in dirs:
        cfg = PipelineConfig(seed=9, out_dir=str(out), synth=synth, replicates=2)
        run_pipeline(cfg)
    names = list(ARTIFACTS) + ["manifest.json"] + [f"dataset/{n}" for n in CSV_FILES]
    for name in names:
        a = (dirs[0] / name).read_bytes()
        b = (dirs[1] / name).read_bytes()
        assert a == b, name


def test_criterion_11_flagship_pipeline_under_60s(tmp_path):
    synth = SynthConfig(
        n_members=5000, n_groups=200, n_years=10, events_per_group_year=10,
        n_planted_clusters=10, entry_rate=0.10, exit_rate=0.08, rewiring_rate=0.35,
        cross_cluster_attendance_prob=0.05, terms_per_member=6, seed=42,
    )
    cfg = PipelineConfig(seed=7, out_dir=str(tmp_path), synth=synth, replicates=20)
    t0 = time.perf_counter()
    manifest = run_pipeline(cfg)
    elapsed = time.perf_counter() - t0
    n_events = synth.n_groups * synth.n_years * synth.events_per_group_year
    assert n_events == 20000
    for name in ARTIFACTS:
        assert (tmp_path / name).is_file(), name
    assert manifest["regression"] is not None
    assert elapsed < 60.0, f"flagship pipeline took {elapsed:.1f}s"
    with open(tmp_path / "manifest.json") as fh:
        assert json.load(fh) == manifest
