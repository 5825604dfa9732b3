"""Null-model attendance simulators and observed-vs-expected modularity.

Two counterfactuals: resampling each member's yearly attendance uniformly
over that year's events (count-preserving), and replaying attendance from
propensities frozen in each member's first 365-day window. The series
runner projects each simulated corpus the same way as the observed one
and reports per-year observed Q, replicate-mean expected Q, and the gap.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
import scipy.sparse as sp
from numba import njit

from .community import _louvain_csr, _q_csr
from .dataset import Dataset, GroupId, MemberId
from .errors import DataValidationError
from .netbuild import YearSlice, cosine_csr, tfidf_incidence, yearly_slice

WINDOW_DAYS = 365
DEFAULT_REPLICATES = 20


@njit(cache=True)
def _floyd_fill(counts, n_events, uniforms, out_rows, out_cols):
    """Per row i, a uniform without-replacement sample of counts[i] events."""
    mark = np.full(n_events, -1, dtype=np.int64)
    upos = 0
    opos = 0
    for i in range(len(counts)):
        c = counts[i]
        for j in range(n_events - c, n_events):
            t = int(uniforms[upos] * (j + 1))
            upos += 1
            if mark[t] == i:
                sel = j
            else:
                sel = t
            mark[sel] = i
            out_rows[opos] = i
            out_cols[opos] = sel
            opos += 1


def simulate_undifferentiated(s: YearSlice, seed: int) -> YearSlice:
    """Reassign each member's attendance to uniformly sampled events.

    Member set, event set, and every member's attendance count survive
    exactly; only which events they hit is resampled.
    """
    counts = np.asarray(s.incidence.sum(axis=1)).ravel().astype(np.int64)
    if s.n_events and counts.max(initial=0) > s.n_events:
        raise DataValidationError(
            f"a member attends {counts.max()} of only {s.n_events} events"
        )
    total = int(counts.sum())
    rng = np.random.default_rng(seed)
    uniforms = rng.random(total)
    rows = np.empty(total, dtype=np.int64)
    cols = np.empty(total, dtype=np.int64)
    _floyd_fill(counts, s.n_events, uniforms, rows, cols)
    inc = sp.csr_matrix(
        (np.ones(total), (rows, cols)), shape=(s.n_members, s.n_events)
    )
    return YearSlice(
        year=s.year, active_members=s.active_members, events=s.events, incidence=inc
    )


@dataclass(frozen=True)
class PropensityTable:
    """Per (member, group) first-window attendance rates.

    Only positive propensities are stored; prob() answers 0.0 for the
    rest, including groups that hosted nothing in the member's window.
    """

    p: dict[tuple[MemberId, GroupId], float]
    first_window: dict[MemberId, tuple[date, date]]

    def prob(self, m: MemberId, k: GroupId) -> float:
        return self.p.get((m, k), 0.0)


def estimate_propensities(d: Dataset) -> PropensityTable:
    """Attendance rate per member and group over the member's first
    365 days: events of the group the member attended divided by events
    the group hosted in that window."""
    first = d.first_rsvp_ordinal
    windows = {}
    for i, m in enumerate(d.members_sorted):
        if first[i] >= 0:
            start = date.fromordinal(int(first[i]))
            windows[m] = (start, start + timedelta(days=WINDOW_DAYS - 1))

    if len(d.rsvps) == 0:
        return PropensityTable(p={}, first_window=windows)

    rel = d.event_dates[d.rsvp_event_idx] - first[d.rsvp_member_idx]
    in_w = rel < WINDOW_DAYS          # rel >= 0 by definition of first
    m_idx = d.rsvp_member_idx[in_w]
    g_idx = d.event_group_idx[d.rsvp_event_idx[in_w]]
    n_g = len(d.groups_sorted)
    pairs, attended = np.unique(m_idx * n_g + g_idx, return_counts=True)

    by_group_dates = _group_event_dates(d)
    p: dict[tuple[MemberId, GroupId], float] = {}
    for key, att in zip(pairs, attended):
        mi, gi = int(key // n_g), int(key % n_g)
        dates = by_group_dates[gi]
        lo = np.searchsorted(dates, first[mi], side="left")
        hi = np.searchsorted(dates, first[mi] + WINDOW_DAYS, side="left")
        hosted = int(hi - lo)
        if hosted > 0:
            p[(d.members_sorted[mi], d.groups_sorted[gi])] = float(att) / hosted
    return PropensityTable(p=p, first_window=windows)


def _group_event_dates(d: Dataset) -> list[np.ndarray]:
    """Per group: event dates sorted ascending (ordinals)."""
    out = []
    for gi in range(len(d.groups_sorted)):
        sel = d.event_group_idx == gi
        out.append(np.sort(d.event_dates[sel]))
    return out


def _group_event_table(d: Dataset) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per group: (dates, event indices) sorted by date then index."""
    out = []
    for gi in range(len(d.groups_sorted)):
        sel = np.flatnonzero(d.event_group_idx == gi)
        order = np.lexsort((sel, d.event_dates[sel]))
        sel = sel[order]
        out.append((d.event_dates[sel], sel))
    return out


@dataclass(frozen=True)
class _StaticPlan:
    """Precomputed inputs for the static replay: kept first-window RSVPs
    plus every candidate (member, event, propensity) Bernoulli trial."""

    kept_member: np.ndarray
    kept_event: np.ndarray
    cand_member: np.ndarray
    cand_event: np.ndarray
    cand_p: np.ndarray


def _build_static_plan(d: Dataset, pt: PropensityTable) -> _StaticPlan:
    first = d.first_rsvp_ordinal
    last = d.last_rsvp_ordinal

    rel = d.event_dates[d.rsvp_event_idx] - first[d.rsvp_member_idx]
    keep = rel < WINDOW_DAYS
    kept_member = d.rsvp_member_idx[keep]
    kept_event = d.rsvp_event_idx[keep]

    by_member: dict[int, list[int]] = {}
    for (m, g), prob in pt.p.items():
        if prob > 0:
            by_member.setdefault(d.member_index[m], []).append(d.group_index[g])

    table = _group_event_table(d)
    cm: list[np.ndarray] = []
    ce: list[np.ndarray] = []
    cp: list[np.ndarray] = []
    for mi in sorted(by_member):
        f, l = int(first[mi]), int(last[mi])
        w_last = (l - f) // WINDOW_DAYS
        if w_last < 1:
            continue
        for gi in sorted(by_member[mi]):
            dates, ev_idx = table[gi]
            lo = np.searchsorted(dates, f, side="left")
            win = (dates[lo:] - f) // WINDOW_DAYS
            # a window with no hosted events retires the group for this
            # member permanently, even if it hosts again later
            hosted = np.unique(win)
            expect = 1
            for w in hosted[hosted >= 1]:
                if w > expect or expect > w_last:
                    break
                expect = int(w) + 1
            # expect = first window with no hosted events; cut there if
            # it falls inside the member's span
            cutoff = expect - 1 if expect <= w_last else w_last
            sel = (win >= 1) & (win <= cutoff) & (dates[lo:] <= l)
            chosen = ev_idx[lo:][sel]
            if len(chosen):
                cm.append(np.full(len(chosen), mi, dtype=np.int64))
                ce.append(chosen)
                prob = pt.p[(d.members_sorted[mi], d.groups_sorted[gi])]
                cp.append(np.full(len(chosen), prob))
    empty_i = np.empty(0, dtype=np.int64)
    return _StaticPlan(
        kept_member=kept_member,
        kept_event=kept_event,
        cand_member=np.concatenate(cm) if cm else empty_i,
        cand_event=np.concatenate(ce) if ce else empty_i,
        cand_p=np.concatenate(cp) if cp else np.empty(0),
    )


def _static_rsvp_arrays(plan: _StaticPlan, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    hit = rng.random(len(plan.cand_p)) < plan.cand_p
    members = np.concatenate([plan.kept_member, plan.cand_member[hit]])
    events = np.concatenate([plan.kept_event, plan.cand_event[hit]])
    return members, events


def simulate_static(d: Dataset, pt: PropensityTable, seed: int) -> Dataset:
    """Replay attendance from frozen first-window propensities.

    First-window RSVPs stay observed. Afterwards each event of a group
    with positive propensity, dated within one of the member's later
    365-day windows and no later than their last observed RSVP, is
    attended independently with that propensity. A group that hosts no
    event in some window of the member drops out of all later windows.
    """
    plan = _build_static_plan(d, pt)
    members, events = _static_rsvp_arrays(plan, seed)
    rows = [
        (d.members_sorted[int(m)], d.events[int(e)].id)
        for m, e in zip(members, events)
    ]
    return Dataset(
        members=d.members,
        groups=d.groups,
        events=d.events,
        rsvps=tuple(dict.fromkeys(rows)),
        memberships=d.memberships,
        member_interests=d.member_interests,
        group_topics=d.group_topics,
    )


@dataclass(frozen=True)
class YearModularity:
    year: int
    observed_q: float
    expected_q_mean: float
    expected_q_std: float
    gap: float


@dataclass(frozen=True)
class ModularitySeries:
    mode: str
    replicates: int
    seed: int
    weighted: bool
    rows: tuple[YearModularity, ...]
    skipped_years: tuple[int, ...]


def _louvain_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, np.uint64)[0])


def _slice_from_arrays(
    d: Dataset, member_idx: np.ndarray, event_idx: np.ndarray, year: int
) -> YearSlice:
    ev_mask = d.event_years == year
    ev_global = np.flatnonzero(ev_mask)
    ev_pos = np.full(len(d.events), -1, dtype=np.int64)
    ev_pos[ev_global] = np.arange(len(ev_global))

    sel = ev_mask[event_idx]
    m_sel = member_idx[sel]
    e_sel = ev_pos[event_idx[sel]]
    active = np.unique(m_sel)
    m_pos = np.full(len(d.members_sorted), -1, dtype=np.int64)
    m_pos[active] = np.arange(len(active))

    inc = sp.csr_matrix(
        (np.ones(len(m_sel)), (m_pos[m_sel], e_sel)),
        shape=(len(active), len(ev_global)),
    )
    inc.sum_duplicates()
    inc.data[:] = 1.0
    return YearSlice(
        year=year,
        active_members=tuple(d.members_sorted[int(i)] for i in active),
        events=tuple(d.events[int(i)].id for i in ev_global),
        incidence=inc,
    )


def _slice_q(s: YearSlice, louvain_seed: int, weighted: bool) -> float | None:
    """Project a slice and take Louvain's Q, straight on CSR arrays.

    Same numbers as project_members + louvain + modularity on the graph
    object; the MemberGraph wrapper is skipped because replicate runs
    only need the scalar.
    """
    if s.n_members == 0:
        return None
    a = cosine_csr(tfidf_incidence(s))
    if a.nnz == 0:
        return None
    if not weighted:
        a = a.copy()
        a.data[:] = 1.0
    labels = _louvain_csr(a, louvain_seed)
    return _q_csr(a, labels)


def modularity_series(
    d: Dataset,
    mode: str,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    weighted: bool = True,
) -> ModularitySeries:
    """Observed vs expected Q per year under one of the two null models.

    Each replicate r runs from its own stream (seed XOR r), simulates,
    rebuilds the TF-IDF projection, and takes Louvain's Q; expected Q is
    the replicate mean. Years whose observed projection has no edges are
    skipped and listed, not reported as zero.
    """
    if mode not in ("undifferentiated", "static"):
        raise DataValidationError(f"unknown simulation mode {mode!r}")
    if replicates < 1:
        raise DataValidationError("replicates must be >= 1")

    years = list(d.years)
    observed: dict[int, float] = {}
    skipped: list[int] = []
    slices: dict[int, YearSlice] = {}
    for y in years:
        s = yearly_slice(d, y)
        slices[y] = s
        q = _slice_q(s, _louvain_seed(seed, y), weighted)
        if q is None:
            skipped.append(y)
        else:
            observed[y] = q

    rep_qs: dict[int, list[float]] = {y: [] for y in observed}
    plan = None
    if mode == "static":
        plan = _build_static_plan(d, estimate_propensities(d))
    for r in range(replicates):
        stream = seed ^ r
        if mode == "undifferentiated":
            for y in observed:
                sim = simulate_undifferentiated(slices[y], _louvain_seed(stream, y, 0))
                q = _slice_q(sim, _louvain_seed(stream, y, 1), weighted)
                if q is not None:
                    rep_qs[y].append(q)
        else:
            members, events = _static_rsvp_arrays(plan, stream)
            for y in observed:
                sim = _slice_from_arrays(d, members, events, y)
                q = _slice_q(sim, _louvain_seed(stream, y, 1), weighted)
                if q is not None:
                    rep_qs[y].append(q)

    rows = []
    for y in years:
        if y not in observed:
            continue
        qs = rep_qs[y]
        if not qs:
            skipped.append(y)
            continue
        arr = np.asarray(qs)
        mean = float(arr.mean())
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        rows.append(
            YearModularity(
                year=y,
                observed_q=observed[y],
                expected_q_mean=mean,
                expected_q_std=std,
                gap=observed[y] - mean,
            )
        )
    return ModularitySeries(
        mode=mode,
        replicates=replicates,
        seed=seed,
        weighted=weighted,
        rows=tuple(rows),
        skipped_years=tuple(sorted(skipped)),
    )
