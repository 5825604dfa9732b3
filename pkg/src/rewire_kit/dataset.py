"""Event-attendance corpus: loading, validation, and interest-term assembly.

The corpus is five CSV tables (events, rsvps, memberships, member_interests,
group_topics). Members and groups have no table of their own; their universe
is the union of every id referenced by the five tables.
"""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from datetime import date
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DataValidationError

logger = logging.getLogger(__name__)

MemberId = str
GroupId = str
EventId = str
Term = str

CSV_FILES = (
    "events.csv",
    "rsvps.csv",
    "memberships.csv",
    "member_interests.csv",
    "group_topics.csv",
)

_WS = re.compile(r"\s+")


def normalize_term(raw: str) -> Term:
    """Lowercase, trim, and collapse internal whitespace of an interest term."""
    return _WS.sub(" ", raw.strip()).lower()


@dataclass(frozen=True, slots=True)
class Event:
    id: EventId
    group: GroupId
    date: date


@dataclass(frozen=True)
class Dataset:
    """Immutable store of members, groups, events, RSVPs, and annotations.

    Safe to share across concurrent readers. Derived index structures are
    built lazily and cached; they never mutate the declared fields.
    """

    members: frozenset[MemberId]
    groups: frozenset[GroupId]
    events: tuple[Event, ...]
    rsvps: tuple[tuple[MemberId, EventId], ...]
    memberships: tuple[tuple[MemberId, GroupId], ...]
    member_interests: tuple[tuple[MemberId, Term], ...]
    group_topics: tuple[tuple[GroupId, Term], ...]

    # ----- derived indexes (cached, read-only) -----

    @cached_property
    def members_sorted(self) -> tuple[MemberId, ...]:
        return tuple(sorted(self.members))

    @cached_property
    def groups_sorted(self) -> tuple[GroupId, ...]:
        return tuple(sorted(self.groups))

    @cached_property
    def member_index(self) -> dict[MemberId, int]:
        return {m: i for i, m in enumerate(self.members_sorted)}

    @cached_property
    def group_index(self) -> dict[GroupId, int]:
        return {g: i for i, g in enumerate(self.groups_sorted)}

    @cached_property
    def event_index(self) -> dict[EventId, int]:
        return {e.id: i for i, e in enumerate(self.events)}

    @cached_property
    def event_dates(self) -> np.ndarray:
        """Proleptic ordinal of each event date, aligned with ``events``."""
        return np.array([e.date.toordinal() for e in self.events], dtype=np.int64)

    @cached_property
    def event_years(self) -> np.ndarray:
        return np.array([e.date.year for e in self.events], dtype=np.int64)

    @cached_property
    def event_group_idx(self) -> np.ndarray:
        gi = self.group_index
        return np.array([gi[e.group] for e in self.events], dtype=np.int64)

    @cached_property
    def rsvp_member_idx(self) -> np.ndarray:
        mi = self.member_index
        return np.array([mi[m] for m, _ in self.rsvps], dtype=np.int64)

    @cached_property
    def rsvp_event_idx(self) -> np.ndarray:
        ei = self.event_index
        return np.array([ei[e] for _, e in self.rsvps], dtype=np.int64)

    @cached_property
    def first_rsvp_ordinal(self) -> np.ndarray:
        """Per member (sorted order): ordinal date of first RSVP, -1 if none."""
        sentinel = np.iinfo(np.int64).max
        out = np.full(len(self.members_sorted), sentinel, dtype=np.int64)
        dates = self.event_dates[self.rsvp_event_idx]
        np.minimum.at(out, self.rsvp_member_idx, dates)
        out[out == sentinel] = -1
        return out

    @cached_property
    def first_rsvp_year_arr(self) -> np.ndarray:
        """Per member (sorted order): calendar year of first RSVP, -1 if none."""
        sentinel = np.iinfo(np.int64).max
        out = np.full(len(self.members_sorted), sentinel, dtype=np.int64)
        yrs = self.event_years[self.rsvp_event_idx]
        np.minimum.at(out, self.rsvp_member_idx, yrs)
        out[out == sentinel] = -1
        return out

    @cached_property
    def last_rsvp_ordinal(self) -> np.ndarray:
        out = np.full(len(self.members_sorted), -1, dtype=np.int64)
        dates = self.event_dates[self.rsvp_event_idx]
        np.maximum.at(out, self.rsvp_member_idx, dates)
        return out

    @cached_property
    def years(self) -> tuple[int, ...]:
        """Calendar years spanned by the event table, ascending."""
        if not self.events:
            return ()
        ys = np.unique(self.event_years)
        return tuple(int(y) for y in ys)

    @cached_property
    def active_members_by_year(self) -> dict[int, frozenset[MemberId]]:
        """Members with at least one RSVP to an event dated in each year."""
        out: dict[int, set[MemberId]] = {}
        yrs = self.event_years[self.rsvp_event_idx]
        for mi, y in zip(self.rsvp_member_idx, yrs):
            out.setdefault(int(y), set()).add(self.members_sorted[mi])
        return {y: frozenset(s) for y, s in sorted(out.items())}

    @cached_property
    def _self_terms(self) -> dict[MemberId, frozenset[Term]]:
        acc: dict[MemberId, set[Term]] = {}
        for m, t in self.member_interests:
            acc.setdefault(m, set()).add(t)
        return {m: frozenset(s) for m, s in acc.items()}

    @cached_property
    def _group_tags(self) -> dict[GroupId, frozenset[Term]]:
        acc: dict[GroupId, set[Term]] = {}
        for g, t in self.group_topics:
            acc.setdefault(g, set()).add(t)
        return {g: frozenset(s) for g, s in acc.items()}

    @cached_property
    def _member_groups(self) -> dict[MemberId, tuple[GroupId, ...]]:
        acc: dict[MemberId, set[GroupId]] = {}
        for m, g in self.memberships:
            acc.setdefault(m, set()).add(g)
        return {m: tuple(sorted(s)) for m, s in acc.items()}

    @cached_property
    def interest_terms_by_member(self) -> dict[MemberId, frozenset[Term]]:
        """Union of self-reported interests and joined groups' topic tags."""
        out = {}
        empty: frozenset[Term] = frozenset()
        for m in self.members_sorted:
            terms = set(self._self_terms.get(m, empty))
            for g in self._member_groups.get(m, ()):
                terms |= self._group_tags.get(g, empty)
            out[m] = frozenset(terms)
        return out

    def first_rsvp_year(self, m: MemberId) -> int | None:
        idx = self.member_index.get(m)
        if idx is None:
            return None
        ordinal = int(self.first_rsvp_ordinal[idx])
        if ordinal < 0:
            return None
        return date.fromordinal(ordinal).year


def member_interest_terms(m: MemberId, d: Dataset) -> frozenset[Term]:
    """Interest terms of one member: self-reported plus group topic tags.

    Raises DataValidationError for a member id outside the dataset.
    """
    if m not in d.members:
        raise DataValidationError(f"unknown member {m!r}")
    return d.interest_terms_by_member[m]


def build_dataset(
    events: Iterable[Event],
    rsvps: Iterable[tuple[MemberId, EventId]],
    memberships: Iterable[tuple[MemberId, GroupId]] = (),
    member_interests: Iterable[tuple[MemberId, Term]] = (),
    group_topics: Iterable[tuple[GroupId, Term]] = (),
    extra_members: Iterable[MemberId] = (),
) -> Dataset:
    """Assemble a Dataset, deriving the member and group universes.

    Terms are normalized; duplicate rows are collapsed. RSVP deduplication
    here is silent; the CSV loader is the one that counts and warns.
    """
    events = tuple(events)
    rsvps_d = dict.fromkeys((m, e) for m, e in rsvps)
    memberships_d = dict.fromkeys((m, g) for m, g in memberships)
    interests_d = dict.fromkeys((m, normalize_term(t)) for m, t in member_interests)
    topics_d = dict.fromkeys((g, normalize_term(t)) for g, t in group_topics)

    members = set(extra_members)
    members.update(m for m, _ in rsvps_d)
    members.update(m for m, _ in memberships_d)
    members.update(m for m, _ in interests_d)
    groups = {e.group for e in events}
    groups.update(g for _, g in memberships_d)
    groups.update(g for g, _ in topics_d)

    return Dataset(
        members=frozenset(members),
        groups=frozenset(groups),
        events=events,
        rsvps=tuple(rsvps_d),
        memberships=tuple(memberships_d),
        member_interests=tuple(interests_d),
        group_topics=tuple(topics_d),
    )


def validate(d: Dataset) -> list[str]:
    """Check dataset invariants; returns one description per violation.

    An empty list means the dataset is internally consistent.
    """
    problems: list[str] = []
    event_ids = set()
    for ev in d.events:
        if not ev.id:
            problems.append("event with empty id")
        if not ev.group:
            problems.append(f"event {ev.id!r} has empty group id")
        elif ev.group not in d.groups:
            problems.append(f"event {ev.id!r} references unknown group {ev.group!r}")
        if ev.id in event_ids:
            problems.append(f"duplicate event id {ev.id!r}")
        event_ids.add(ev.id)

    seen_rsvps = set()
    for m, e in d.rsvps:
        if not m or not e:
            problems.append(f"RSVP with empty identifier: ({m!r}, {e!r})")
            continue
        if m not in d.members:
            problems.append(f"RSVP by unknown member {m!r}")
        if e not in event_ids:
            problems.append(f"RSVP references unknown event {e!r}")
        if (m, e) in seen_rsvps:
            problems.append(f"duplicate RSVP ({m!r}, {e!r})")
        seen_rsvps.add((m, e))

    for m, g in d.memberships:
        if m not in d.members:
            problems.append(f"membership by unknown member {m!r}")
        if g not in d.groups:
            problems.append(f"membership in unknown group {g!r}")
    for m, t in d.member_interests:
        if m not in d.members:
            problems.append(f"interest row for unknown member {m!r}")
        if not t:
            problems.append(f"empty interest term for member {m!r}")
    for g, t in d.group_topics:
        if g not in d.groups:
            problems.append(f"topic row for unknown group {g!r}")
        if not t:
            problems.append(f"empty topic tag for group {g!r}")
    for m in d.members:
        if not m:
            problems.append("empty member id")
    for g in d.groups:
        if not g:
            problems.append("empty group id")
    return problems


# ----- CSV input/output -----


def _resolve_paths(paths: str | Path | Iterable[str | Path]) -> dict[str, Path]:
    if isinstance(paths, (str, Path)):
        base = Path(paths)
        mapping = {name: base / name for name in CSV_FILES}
    else:
        mapping = {}
        for p in paths:
            p = Path(p)
            if p.name not in CSV_FILES:
                raise DataValidationError(
                    f"unrecognized input file {p.name!r}; expected one of {', '.join(CSV_FILES)}"
                )
            mapping[p.name] = p
        for name in CSV_FILES:
            if name not in mapping:
                raise DataValidationError(f"missing input file {name!r}")
    for name, p in mapping.items():
        if not p.is_file():
            raise DataValidationError(f"missing input file {name!r} (looked at {p})")
    return mapping


def _read_rows(path: Path, name: str, columns: tuple[str, ...]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{name}: empty file, expected header {','.join(columns)}")
        if [h.strip() for h in header] != list(columns):
            raise DataValidationError(
                f"{name} line 1: bad header {','.join(header)!r}, expected {','.join(columns)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise DataValidationError(
                    f"{name} line {lineno}: expected {len(columns)} fields, got {len(row)}"
                )
            cells = [c.strip() for c in row]
            for col, cell in zip(columns, cells):
                if not cell:
                    raise DataValidationError(f"{name} line {lineno}: empty {col}")
            yield lineno, cells


def load_dataset(paths: str | Path | Iterable[str | Path]) -> Dataset:
    """Load and validate the five-table CSV corpus.

    ``paths`` is either a directory containing the conventionally named files
    or an explicit collection of the five file paths. Duplicate RSVP rows are
    collapsed with a logged warning count; any schema violation raises
    DataValidationError naming the file, line, and reason.
    """
    mapping = _resolve_paths(paths)

    events: list[Event] = []
    event_ids: set[EventId] = set()
    for lineno, (eid, gid, iso) in _read_rows(mapping["events.csv"], "events.csv", ("event_id", "group_id", "date")):
        try:
            when = date.fromisoformat(iso)
        except ValueError:
            raise DataValidationError(f"events.csv line {lineno}: bad date {iso!r} (want ISO-8601)")
        if eid in event_ids:
            raise DataValidationError(f"events.csv line {lineno}: duplicate event id {eid!r}")
        event_ids.add(eid)
        events.append(Event(id=eid, group=gid, date=when))

    rsvps: dict[tuple[MemberId, EventId], None] = {}
    duplicates = 0
    for lineno, (mid, eid) in _read_rows(mapping["rsvps.csv"], "rsvps.csv", ("member_id", "event_id")):
        if eid not in event_ids:
            raise DataValidationError(f"rsvps.csv line {lineno}: unknown event {eid!r}")
        if (mid, eid) in rsvps:
            duplicates += 1
        else:
            rsvps[(mid, eid)] = None
    if duplicates:
        logger.warning("rsvps.csv: dropped %d duplicate RSVP row(s)", duplicates)

    memberships = [
        (mid, gid)
        for _, (mid, gid) in _read_rows(mapping["memberships.csv"], "memberships.csv", ("member_id", "group_id"))
    ]
    member_interests = [
        (mid, term)
        for _, (mid, term) in _read_rows(
            mapping["member_interests.csv"], "member_interests.csv", ("member_id", "term")
        )
    ]
    group_topics = [
        (gid, term)
        for _, (gid, term) in _read_rows(mapping["group_topics.csv"], "group_topics.csv", ("group_id", "term"))
    ]

    d = build_dataset(
        events=events,
        rsvps=rsvps,
        memberships=memberships,
        member_interests=member_interests,
        group_topics=group_topics,
    )
    problems = validate(d)
    if problems:
        raise DataValidationError("; ".join(problems[:20]))
    return d


def write_dataset(d: Dataset, out_dir: str | Path) -> list[Path]:
    """Write the corpus back out as the five CSV tables, sorted rows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name: str, header: tuple[str, ...], rows):
        path = out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        written.append(path)

    emit(
        "events.csv",
        ("event_id", "group_id", "date"),
        ((e.id, e.group, e.date.isoformat()) for e in sorted(d.events, key=lambda e: (e.date, e.id))),
    )
    emit("rsvps.csv", ("member_id", "event_id"), sorted(d.rsvps))
    emit("memberships.csv", ("member_id", "group_id"), sorted(d.memberships))
    emit("member_interests.csv", ("member_id", "term"), sorted(d.member_interests))
    emit("group_topics.csv", ("group_id", "term"), sorted(d.group_topics))
    return written
