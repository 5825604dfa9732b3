"""Yearly affiliation slices and their weighted member projections.

A year of RSVPs becomes a binary member x event incidence matrix, gets
TF-IDF weighted (binary tf, idf = ln(N/df), no smoothing), and is
projected to an undirected member graph whose edge weights are cosine
similarities of the weighted rows. Attendance vectors aggregate the same
RSVPs per member and period into per-group counts.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Literal

import numpy as np
import scipy.sparse as sp

from .dataset import Dataset
from .errors import DataValidationError

YearDef = Literal["calendar", "member-relative"]


@dataclass(frozen=True)
class YearSlice:
    """One calendar year of the corpus: active members, events, incidence."""

    year: int
    active_members: tuple[str, ...]
    events: tuple[str, ...]
    incidence: sp.csr_matrix

    @cached_property
    def member_pos(self) -> dict[str, int]:
        return {m: i for i, m in enumerate(self.active_members)}

    @property
    def n_members(self) -> int:
        return len(self.active_members)

    @property
    def n_events(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class MemberGraph:
    """Undirected weighted graph over one year's active members.

    Edges are stored once with u_idx < v_idx; weights lie in (0, 1].
    """

    nodes: tuple[str, ...]
    u_idx: np.ndarray
    v_idx: np.ndarray
    weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    def edges(self) -> Iterator[tuple[str, str, float]]:
        for u, v, w in zip(self.u_idx, self.v_idx, self.weights):
            yield self.nodes[int(u)], self.nodes[int(v)], float(w)

    @cached_property
    def degrees(self) -> np.ndarray:
        """Unweighted degree per node."""
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        np.add.at(deg, self.u_idx, 1)
        np.add.at(deg, self.v_idx, 1)
        return deg

    @cached_property
    def strengths(self) -> np.ndarray:
        """Weighted degree per node."""
        s = np.zeros(self.n_nodes, dtype=np.float64)
        np.add.at(s, self.u_idx, self.weights)
        np.add.at(s, self.v_idx, self.weights)
        return s

    def to_csr(self, weighted: bool = True) -> sp.csr_matrix:
        """Symmetric adjacency matrix; unit weights when weighted=False."""
        w = self.weights if weighted else np.ones_like(self.weights)
        n = self.n_nodes
        a = sp.coo_matrix(
            (np.concatenate([w, w]),
             (np.concatenate([self.u_idx, self.v_idx]),
              np.concatenate([self.v_idx, self.u_idx]))),
            shape=(n, n),
        )
        return a.tocsr()

    def neighbors_of(self, i: int) -> np.ndarray:
        mask_u = self.u_idx == i
        mask_v = self.v_idx == i
        return np.concatenate([self.v_idx[mask_u], self.u_idx[mask_v]])


def year_range(d: Dataset) -> tuple[int, int]:
    if not d.events:
        raise DataValidationError("dataset has no events, no year range")
    years = d.event_years
    return int(years.min()), int(years.max())


def yearly_slice(d: Dataset, year: int) -> YearSlice:
    """Slice the corpus to one calendar year.

    Active members are exactly those with at least one RSVP to an event
    dated in that year; the event axis covers every event of the year,
    attended or not.
    """
    lo, hi = year_range(d)
    if not lo <= year <= hi:
        raise DataValidationError(f"year {year} outside dataset range {lo}..{hi}")

    ev_mask = d.event_years == year
    ev_global = np.flatnonzero(ev_mask)
    ev_pos = np.full(len(d.events), -1, dtype=np.int64)
    ev_pos[ev_global] = np.arange(len(ev_global))

    r_mask = ev_mask[d.rsvp_event_idx]
    r_members = d.rsvp_member_idx[r_mask]
    r_events = ev_pos[d.rsvp_event_idx[r_mask]]

    active_global = np.unique(r_members)
    m_pos = np.full(len(d.members_sorted), -1, dtype=np.int64)
    m_pos[active_global] = np.arange(len(active_global))

    rows = m_pos[r_members]
    inc = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.float64), (rows, r_events)),
        shape=(len(active_global), len(ev_global)),
    )
    inc.sum_duplicates()
    inc.data[:] = 1.0

    members = tuple(d.members_sorted[int(i)] for i in active_global)
    events = tuple(d.events[int(i)].id for i in ev_global)
    return YearSlice(year=year, active_members=members, events=events, incidence=inc)


def tfidf_incidence(s: YearSlice) -> sp.csr_matrix:
    """Weight the incidence matrix: entry = 1 x ln(N / df_e).

    An event attended by all N members gets idf 0 and drops out of every
    similarity; events nobody attended have an all-zero column already.
    """
    if s.n_members == 0:
        raise DataValidationError(f"year {s.year} slice is empty")
    n = s.n_members
    df = np.asarray(s.incidence.sum(axis=0)).ravel()
    idf = np.zeros(s.n_events, dtype=np.float64)
    pos = df > 0
    idf[pos] = np.log(n / df[pos])
    return sp.csr_matrix(s.incidence @ sp.diags(idf))


def cosine_csr(w: sp.csr_matrix) -> sp.csr_matrix:
    """Pairwise cosine similarity of the rows of w, as a symmetric CSR
    matrix with a zeroed diagonal and only strictly positive entries."""
    norms = np.sqrt(np.asarray(w.multiply(w).sum(axis=1)).ravel())
    inv = np.zeros_like(norms)
    nz = norms > 0
    inv[nz] = 1.0 / norms[nz]
    wn = sp.csr_matrix(sp.diags(inv) @ w)
    a = sp.csr_matrix(wn @ wn.T)
    a.setdiag(0.0)
    a.eliminate_zeros()
    np.minimum(a.data, 1.0, out=a.data)
    # column order within rows is left as the matmul produced it, which
    # is deterministic; consumers must not assume sorted indices
    return a


def project_members(w: sp.csr_matrix, s: YearSlice) -> MemberGraph:
    """Project the weighted incidence to a member graph.

    Edge weight = cosine similarity of two members' TF-IDF rows; only
    strictly positive similarities become edges, so pairs whose shared
    events all carry zero idf stay unconnected.
    """
    if w.shape != (s.n_members, s.n_events):
        raise DataValidationError(
            f"weighted matrix shape {w.shape} does not match slice "
            f"({s.n_members}, {s.n_events})"
        )
    sim = sp.triu(cosine_csr(w), k=1).tocoo()
    keep = sim.data > 0
    u = sim.row[keep].astype(np.int64)
    v = sim.col[keep].astype(np.int64)
    vals = sim.data[keep]

    order = np.lexsort((v, u))
    return MemberGraph(
        nodes=tuple(s.active_members),
        u_idx=u[order],
        v_idx=v[order],
        weights=vals[order],
    )


def build_member_graph(d: Dataset, year: int) -> MemberGraph:
    """Convenience: slice, weight, and project one year in a single call."""
    s = yearly_slice(d, year)
    if s.n_members == 0:
        return MemberGraph(
            nodes=(),
            u_idx=np.empty(0, dtype=np.int64),
            v_idx=np.empty(0, dtype=np.int64),
            weights=np.empty(0, dtype=np.float64),
        )
    return project_members(tfidf_incidence(s), s)


@dataclass(frozen=True)
class AttendanceVector:
    """Per-group attendance counts for one member and one period."""

    member: str
    year: int
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def _period_index(d: Dataset, year_def: YearDef) -> np.ndarray:
    """Period label per RSVP row: calendar year or 365-day window index."""
    dates = d.event_dates[d.rsvp_event_idx]
    if year_def == "calendar":
        return d.event_years[d.rsvp_event_idx].astype(np.int64)
    if year_def == "member-relative":
        first = d.first_rsvp_ordinal[d.rsvp_member_idx]
        return (dates - first) // 365
    raise DataValidationError(f"unknown year_def {year_def!r}")


def attendance_vectors(d: Dataset, year_def: YearDef = "calendar") -> list[AttendanceVector]:
    """Aggregate RSVPs into per-member, per-period group count vectors.

    Calendar mode keys periods by event year; member-relative mode uses
    consecutive 365-day windows starting at the member's first RSVP, with
    the window index as the period label. Members without RSVPs in a
    period emit nothing for it.
    """
    if len(d.rsvps) == 0:
        return []
    periods = _period_index(d, year_def)
    members = d.rsvp_member_idx
    groups = d.event_group_idx[d.rsvp_event_idx]

    n_g = max(len(d.groups_sorted), 1)
    p_min = int(periods.min())
    p_span = int(periods.max()) - p_min + 1
    key = (members.astype(np.int64) * p_span + (periods - p_min)) * n_g + groups
    uk, cnt = np.unique(key, return_counts=True)

    out: list[AttendanceVector] = []
    cur: tuple[int, int] | None = None
    counts: dict[str, int] = {}
    for k, c in zip(uk, cnt):
        g = int(k % n_g)
        mp = int(k // n_g)
        m, p = mp // p_span, mp % p_span + p_min
        if cur != (m, p):
            if cur is not None:
                out.append(AttendanceVector(d.members_sorted[cur[0]], cur[1], counts))
            cur = (m, p)
            counts = {}
        counts[d.groups_sorted[g]] = int(c)
    if cur is not None:
        out.append(AttendanceVector(d.members_sorted[cur[0]], cur[1], counts))
    return out
