"""Deterministic synthetic RSVP corpus with planted group clusters.

Desk-scale surrogate for a real attendance corpus: groups are assigned
round-robin to planted clusters, members attend mostly within a home
cluster, and yearly entry, exit, and home-cluster rewiring reshape the
population. Every draw comes from one seeded generator, so a config is a
complete recipe for the corpus it produces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Any, Mapping

import numpy as np

from .dataset import Dataset, Event, build_dataset
from .errors import ConfigError

# Generator internals, deliberately not part of the config surface.
START_YEAR = 2010
MEAN_EVENTS_PER_MEMBER_YEAR = 8.0
HOME_GROUPS_JOINED = 2
TAGS_PER_GROUP = 3
CLUSTER_VOCAB_SIZE = 12
FRESH_TERM_PROB = 0.5
# In a rewiring year a member splits attendance between the old and the
# new home cluster; afterwards the new home takes over completely.
TRANSITION_OLD_HOME_PROB = 0.5

_PROB_FIELDS = ("entry_rate", "exit_rate", "rewiring_rate", "cross_cluster_attendance_prob")
_COUNT_FIELDS = ("n_members", "n_groups", "n_years", "events_per_group_year", "n_planted_clusters", "terms_per_member")


@dataclass(frozen=True)
class SynthConfig:
    n_members: int
    n_groups: int
    n_years: int
    events_per_group_year: int
    n_planted_clusters: int
    entry_rate: float
    exit_rate: float
    rewiring_rate: float
    cross_cluster_attendance_prob: float
    terms_per_member: int
    seed: int

    def __post_init__(self):
        for name in _COUNT_FIELDS:
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ConfigError(f"{name} must be a nonnegative integer, got {v!r}")
        for name in _PROB_FIELDS:
            v = getattr(self, name)
            if not (0.0 <= float(v) <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v!r}")
        if self.n_planted_clusters > self.n_groups:
            raise ConfigError("n_planted_clusters cannot exceed n_groups")
        if self.n_groups > 0 and self.n_planted_clusters == 0:
            raise ConfigError("n_planted_clusters must be >= 1 when groups exist")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], default_seed: int | None = None) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown synth config field(s): {', '.join(sorted(unknown))}")
        values = dict(raw)
        if "seed" not in values:
            if default_seed is None:
                raise ConfigError("synth config needs a seed")
            values["seed"] = default_seed
        missing = known - set(values)
        if missing:
            raise ConfigError(f"synth config missing field(s): {', '.join(sorted(missing))}")
        return cls(**values)


@dataclass
class SynthTruth:
    """Planted structure of a generated corpus, for benchmarks and tests."""

    group_cluster: dict[str, int]
    entry_year: dict[str, int]
    exit_year: dict[str, int | None]
    home_by_year: dict[tuple[str, int], int] = field(default_factory=dict)
    rewired: set[tuple[str, int]] = field(default_factory=set)


def _member_id(i: int) -> str:
    return f"m{i:06d}"


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Generate a corpus from the config; byte-identical for equal configs."""
    return generate_synthetic_with_truth(cfg)[0]


def generate_synthetic_with_truth(cfg: SynthConfig) -> tuple[Dataset, SynthTruth]:
    """Generate a corpus plus the planted cluster assignments behind it."""
    rng = np.random.default_rng(cfg.seed)
    n_clusters = cfg.n_planted_clusters

    group_ids = [f"g{i:04d}" for i in range(cfg.n_groups)]
    group_cluster = {g: i % n_clusters for i, g in enumerate(group_ids)} if n_clusters else {}

    # Cluster vocabularies and group topic tags.
    vocab = [
        [f"topic-{c:02d}-{j:02d}" for j in range(CLUSTER_VOCAB_SIZE)] for c in range(n_clusters)
    ]
    group_topics: list[tuple[str, str]] = []
    for g in group_ids:
        terms = vocab[group_cluster[g]]
        picks = rng.choice(len(terms), size=min(TAGS_PER_GROUP, len(terms)), replace=False)
        group_topics.extend((g, terms[int(j)]) for j in np.sort(picks))

    # Events: per year, per group, dated at uniform days of the year.
    events: list[Event] = []
    events_by_cluster_year: dict[tuple[int, int], list[int]] = {}
    seq = 0
    for y in range(cfg.n_years):
        year = START_YEAR + y
        jan1 = date(year, 1, 1)
        for gi, g in enumerate(group_ids):
            days = np.sort(rng.integers(0, 365, size=cfg.events_per_group_year))
            for day in days:
                events.append(Event(id=f"e{seq:07d}", group=g, date=jan1 + timedelta(days=int(day))))
                events_by_cluster_year.setdefault((group_cluster[g], y), []).append(seq)
                seq += 1
    ev_index = {
        key: np.asarray(idx, dtype=np.int64) for key, idx in events_by_cluster_year.items()
    }

    truth = SynthTruth(group_cluster=dict(group_cluster), entry_year={}, exit_year={})
    memberships: list[tuple[str, str]] = []
    member_interests: list[tuple[str, str]] = []
    all_rsvps: list[tuple[np.ndarray, np.ndarray]] = []
    all_members: list[str] = []

    cluster_groups = [
        [g for g in group_ids if group_cluster[g] == c] for c in range(n_clusters)
    ]

    pool: list[int] = []          # member indices currently in the network
    home: dict[int, int] = {}     # member index -> current home cluster
    next_member = 0

    def admit(count: int, year_idx: int) -> list[int]:
        nonlocal next_member
        if count <= 0 or n_clusters == 0:
            return []
        new_idx = list(range(next_member, next_member + count))
        next_member += count
        homes = rng.integers(0, n_clusters, size=count)
        fresh_mask = rng.random((count, cfg.terms_per_member)) < FRESH_TERM_PROB
        vocab_pick = rng.integers(0, CLUSTER_VOCAB_SIZE, size=(count, cfg.terms_per_member))
        for row, mi in enumerate(new_idx):
            mid = _member_id(mi)
            all_members.append(mid)
            c = int(homes[row])
            home[mi] = c
            truth.entry_year[mid] = year_idx
            truth.exit_year[mid] = None
            groups_c = cluster_groups[c]
            k = min(HOME_GROUPS_JOINED, len(groups_c))
            joined = rng.choice(len(groups_c), size=k, replace=False)
            memberships.extend((mid, groups_c[int(j)]) for j in np.sort(joined))
            for t in range(cfg.terms_per_member):
                if fresh_mask[row, t]:
                    member_interests.append((mid, f"novel-{mid}-{t}"))
                else:
                    member_interests.append((mid, vocab[c][int(vocab_pick[row, t])]))
        pool.extend(new_idx)
        return new_idx

    for y in range(cfg.n_years):
        if y == 0:
            entrants = set(admit(cfg.n_members, 0))
        else:
            base = len(pool)
            n_exit = int(cfg.exit_rate * base + 0.5)
            if n_exit > 0:
                gone = rng.choice(base, size=n_exit, replace=False)
                gone_set = {pool[int(i)] for i in gone}
                for mi in sorted(gone_set):
                    truth.exit_year[_member_id(mi)] = y
                pool = [mi for mi in pool if mi not in gone_set]
            n_enter = int(cfg.entry_rate * base + 0.5)
            entrants = set(admit(n_enter, y))

        if not pool or n_clusters == 0 or cfg.events_per_group_year == 0:
            continue

        members_arr = np.asarray(pool, dtype=np.int64)
        n_pool = len(members_arr)
        is_entrant = np.asarray([mi in entrants for mi in pool])

        # Survivors may re-draw their home cluster; the transition year mixes
        # old and new homes in attendance.
        old_home = np.asarray([home[mi] for mi in pool], dtype=np.int64)
        rewire = (rng.random(n_pool) < cfg.rewiring_rate) & ~is_entrant
        redrawn = rng.integers(0, n_clusters, size=n_pool)
        new_home = np.where(rewire, redrawn, old_home)
        for i in np.flatnonzero(rewire):
            mid = _member_id(int(members_arr[i]))
            truth.rewired.add((mid, y))
        for i, mi in enumerate(pool):
            home[mi] = int(new_home[i])
            truth.home_by_year[(_member_id(mi), y)] = int(new_home[i])

        counts = rng.poisson(MEAN_EVENTS_PER_MEMBER_YEAR, size=n_pool)
        counts = np.where(is_entrant, np.maximum(counts, 1), counts)
        total = int(counts.sum())
        if total == 0:
            continue

        rep_member = np.repeat(members_arr, counts)
        rep_new = np.repeat(new_home, counts)
        rep_old = np.repeat(old_home, counts)
        rep_transition = np.repeat(rewire, counts)
        use_old = rep_transition & (rng.random(total) < TRANSITION_OLD_HOME_PROB)
        draw_home = np.where(use_old, rep_old, rep_new)
        if n_clusters > 1 and cfg.cross_cluster_attendance_prob > 0:
            cross = rng.random(total) < cfg.cross_cluster_attendance_prob
            shift = rng.integers(1, n_clusters, size=total)
            draw_cluster = np.where(cross, (draw_home + shift) % n_clusters, draw_home)
        else:
            draw_cluster = draw_home

        # Resolve each draw to a concrete event of that cluster and year.
        starts = np.zeros(n_clusters, dtype=np.int64)
        sizes = np.zeros(n_clusters, dtype=np.int64)
        chunks = []
        offset = 0
        for c in range(n_clusters):
            idx = ev_index.get((c, y))
            if idx is None:
                idx = np.empty(0, dtype=np.int64)
            starts[c] = offset
            sizes[c] = len(idx)
            chunks.append(idx)
            offset += len(idx)
        concat = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        pick = rng.integers(0, np.maximum(sizes[draw_cluster], 1))
        valid = sizes[draw_cluster] > 0
        ev = concat[starts[draw_cluster] + pick]

        pairs = np.unique(rep_member[valid] * len(events) + ev[valid])
        all_rsvps.append((pairs // len(events), pairs % len(events)))

    rsvp_rows = []
    for m_idx, e_idx in all_rsvps:
        for mi, ei in zip(m_idx, e_idx):
            rsvp_rows.append((_member_id(int(mi)), events[int(ei)].id))

    d = build_dataset(
        events=events,
        rsvps=rsvp_rows,
        memberships=memberships,
        member_interests=member_interests,
        group_topics=group_topics,
        extra_members=all_members,
    )
    return d, truth
