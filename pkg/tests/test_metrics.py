import datetime
import math

import pytest

from rewire_kit.dataset import Event, build_dataset
from rewire_kit.errors import DataValidationError
from rewire_kit.metrics import (
    InterestDistribution,
    ego_interest_distribution,
    mean_active_tenure,
    member_turnover,
    novelty,
    novelty_series,
    population_interest_distribution,
    specialization,
    specialization_scores,
    tenure,
    term_adopter_tenure,
)
from rewire_kit.netbuild import AttendanceVector, build_member_graph


def vec(year, **counts):
    return AttendanceVector(member="m", year=year, counts=counts)


def test_tenure_is_year_difference(coattendance):
    assert tenure("alice", 2011, coattendance) == 0
    assert tenure("alice", 2012, coattendance) == 1
    assert tenure("alice", 2020, coattendance) == 9


def test_tenure_unknown_member(coattendance):
    with pytest.raises(DataValidationError):
        tenure("nobody", 2012, coattendance)


def test_mean_active_tenure(coattendance):
    # all three joined in 2011
    assert mean_active_tenure(coattendance, 2011) == 0.0
    assert mean_active_tenure(coattendance, 2012) == 1.0


def test_novelty_identical_and_disjoint():
    assert novelty(vec(2012, g1=3), vec(2011, g1=3)) == 0.0
    assert novelty(vec(2012, g1=4), vec(2011, g1=2)) == 0.0
    assert novelty(vec(2012, g2=5), vec(2011, g1=5)) == 1.0


def test_novelty_hand_value():
    got = novelty(vec(2012, g1=5, g2=2), vec(2011, g1=7, g3=1))
    assert got == pytest.approx(1.0 - 35.0 / math.sqrt(1450.0), abs=1e-12)


def test_novelty_rejects_empty_vector():
    with pytest.raises(DataValidationError, match="zero attendance"):
        novelty(vec(2012), vec(2011, g1=1))


def test_novelty_series_needs_consecutive_years(coattendance):
    series = novelty_series(coattendance)
    assert set(series) == {("alice", 2012), ("bob", 2012), ("carol", 2012)}
    # alice: g1 only -> g2 only, disjoint support
    assert series[("alice", 2012)] == 1.0
    # bob: g1 -> g1
    assert series[("bob", 2012)] == 0.0
    # carol: (1,1) -> (0,2): 1 - 2/(sqrt(2)*2)
    assert series[("carol", 2012)] == pytest.approx(1.0 - 2.0 / (math.sqrt(2.0) * 2.0), abs=1e-12)


def test_interest_distribution_must_sum_to_one():
    InterestDistribution({"a": 0.5, "b": 0.5})
    with pytest.raises(DataValidationError, match="sum"):
        InterestDistribution({"a": 0.5, "b": 0.6})


def test_population_interest_distribution_hand_value(coattendance):
    # alice: {python, hiking, tech, outdoors}; bob: {python, tech}
    f = population_interest_distribution(["alice", "bob"], coattendance)
    assert f.mass["python"] == pytest.approx(2 / 6)
    assert f.mass["tech"] == pytest.approx(2 / 6)
    assert f.mass["hiking"] == pytest.approx(1 / 6)
    assert f.mass["outdoors"] == pytest.approx(1 / 6)
    assert sum(f.mass.values()) == pytest.approx(1.0, abs=1e-12)


def test_population_interest_distribution_empty_raises():
    d = build_dataset(
        events=[Event(id="e", group="g", date=datetime.date(2015, 1, 1))],
        rsvps=[("m", "e")],
    )
    with pytest.raises(DataValidationError, match="interest terms"):
        population_interest_distribution(["m"], d)


def test_specialization_identity_and_disjoint():
    f = InterestDistribution({"a": 0.25, "b": 0.75})
    g = InterestDistribution({"c": 1.0})
    assert specialization(f, f) == 0.0
    assert specialization(f, g) == 2.0


def test_specialization_hand_value():
    f = InterestDistribution({"a": 0.5, "b": 0.5})
    g = InterestDistribution({"a": 0.25, "b": 0.25, "c": 0.5})
    assert specialization(f, g) == pytest.approx(1.0, abs=1e-12)


def test_ego_distribution_and_scores(coattendance):
    g = build_member_graph(coattendance, 2011)
    f_ego = ego_interest_distribution(g, "alice", coattendance)
    assert sum(f_ego.mass.values()) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DataValidationError, match="not in graph"):
        ego_interest_distribution(g, "nobody", coattendance)
    scores = specialization_scores(g, coattendance)
    assert set(scores) <= set(g.nodes)
    assert all(0.0 <= v <= 2.0 for v in scores.values())


def test_term_adopter_tenure_flags_new_terms():
    events = [
        Event(id="e1", group="g", date=datetime.date(2011, 5, 1)),
        Event(id="e2", group="g", date=datetime.date(2012, 5, 1)),
    ]
    d = build_dataset(
        events=events,
        rsvps=[("old", "e1"), ("old", "e2"), ("young", "e2")],
        member_interests=[("old", "classic"), ("young", "fresh")],
    )
    recs = {r.term: r for r in term_adopter_tenure(d, 2012)}
    assert recs["fresh"].is_new
    assert not recs["classic"].is_new
    assert recs["fresh"].mean_adopter_tenure == 0.0
    assert recs["classic"].mean_adopter_tenure == 1.0
    assert recs["fresh"].n_adopters == 1


def test_member_turnover_hand_value():
    events = [
        Event(id="e1", group="g", date=datetime.date(2011, 5, 1)),
        Event(id="e2", group="g", date=datetime.date(2012, 5, 1)),
    ]
    d = build_dataset(
        events=events,
        rsvps=[("a", "e1"), ("b", "e1"), ("b", "e2"), ("c", "e2")],
    )
    # 2012 actives: b (returning), c (new) -> half the year's members are new
    assert member_turnover(d, 2012) == 0.5
