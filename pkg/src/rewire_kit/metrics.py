"""Member-level measures: tenure, novelty, interest distributions, turnover.

Tenure counts years since first RSVP. Novelty compares a member's
consecutive per-group attendance vectors by cosine. Interest
distributions spread unit mass over the terms a population holds, and
specialization is the L1 gap between the network-wide and the ego-network
distribution. Turnover is the entrant share of a year's active members.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .dataset import Dataset, MemberId, Term
from .errors import DataValidationError
from .netbuild import AttendanceVector, MemberGraph, attendance_vectors


def tenure(m: MemberId, year: int, d: Dataset) -> int:
    """Years since the member's first RSVP, as of the given calendar year."""
    first = d.first_rsvp_year(m)
    if first is None:
        raise DataValidationError(f"member {m!r} has no RSVPs, tenure undefined")
    if year < first:
        raise DataValidationError(
            f"member {m!r} has no RSVP by {year} (first RSVP {first})"
        )
    return year - first


def mean_active_tenure(d: Dataset, year: int) -> float:
    """Mean tenure over the year's active members."""
    active = d.active_members_by_year.get(year)
    if not active:
        raise DataValidationError(f"no active members in {year}")
    first = d.first_rsvp_year_arr
    idx = np.asarray(sorted(d.member_index[m] for m in active), dtype=np.int64)
    return float(np.mean(year - first[idx]))


@dataclass(frozen=True)
class TermTenureRecord:
    """Mean tenure of one term's active holders in one year."""

    term: Term
    year: int
    mean_adopter_tenure: float
    is_new: bool
    n_adopters: int


def term_adopter_tenure(d: Dataset, year: int) -> list[TermTenureRecord]:
    """Per interest term held this year: adopter count, mean adopter tenure,
    and whether the term is brand new to the network.

    A term is new when no active member of any earlier year held it.
    Compare mean_adopter_tenure against mean_active_tenure(d, year) to see
    whether a term's adopters skew junior or senior.
    """
    active = d.active_members_by_year.get(year, frozenset())
    if not active:
        return []
    prior_terms: set[Term] = set()
    for y, members in d.active_members_by_year.items():
        if y >= year:
            continue
        for m in members:
            prior_terms.update(d.interest_terms_by_member[m])

    sums: dict[Term, float] = {}
    counts: dict[Term, int] = {}
    first = d.first_rsvp_year_arr
    for m in sorted(active):
        t_m = year - int(first[d.member_index[m]])
        for term in d.interest_terms_by_member[m]:
            sums[term] = sums.get(term, 0.0) + t_m
            counts[term] = counts.get(term, 0) + 1

    return [
        TermTenureRecord(
            term=term,
            year=year,
            mean_adopter_tenure=sums[term] / counts[term],
            is_new=term not in prior_terms,
            n_adopters=counts[term],
        )
        for term in sorted(counts)
    ]


def _cosine_novelty(cur: Mapping[str, int], prev: Mapping[str, int]) -> float:
    dot = sum(c * prev.get(g, 0) for g, c in cur.items())
    n1 = sqrt(sum(c * c for c in cur.values()))
    n2 = sqrt(sum(c * c for c in prev.values()))
    val = 1.0 - dot / (n1 * n2)
    return min(max(val, 0.0), 1.0)


def novelty(x_t: AttendanceVector, x_prev: AttendanceVector) -> float:
    """1 minus the cosine of consecutive attendance vectors; in [0, 1].

    Zero on identical group proportions, one on disjoint group support.
    Raises when either year's vector is empty: the score is undefined then
    and the caller should skip the member-year.
    """
    if x_t.total == 0 or x_prev.total == 0:
        raise DataValidationError(
            f"novelty undefined for member {x_t.member!r}: zero attendance vector"
        )
    return _cosine_novelty(x_t.counts, x_prev.counts)


def novelty_series(d: Dataset) -> dict[tuple[MemberId, int], float]:
    """Novelty for every member-year with activity in both year and year-1."""
    vectors = {(v.member, v.year): v.counts for v in attendance_vectors(d, "calendar")}
    out: dict[tuple[MemberId, int], float] = {}
    for (m, y), cur in vectors.items():
        prev = vectors.get((m, y - 1))
        if prev is not None:
            out[(m, y)] = _cosine_novelty(cur, prev)
    return out


@dataclass(frozen=True)
class InterestDistribution:
    """Probability mass over interest terms; masses sum to 1."""

    mass: dict[Term, float]

    def __post_init__(self):
        total = sum(self.mass.values())
        if self.mass and abs(total - 1.0) > 1e-9:
            raise DataValidationError(f"interest masses sum to {total}, expected 1")


def population_interest_distribution(
    members: Iterable[MemberId], d: Dataset
) -> InterestDistribution:
    """Share of each term across a population.

    mass(term) = holders / sum of per-member term counts. Members without
    any term drop out of both numerator and denominator; a population
    where nobody has terms raises.
    """
    holders: dict[Term, int] = {}
    denom = 0
    for m in members:
        terms = d.interest_terms_by_member.get(m)
        if not terms:
            continue
        denom += len(terms)
        for t in terms:
            holders[t] = holders.get(t, 0) + 1
    if denom == 0:
        raise DataValidationError("no member of the population has interest terms")
    return InterestDistribution({t: holders[t] / denom for t in sorted(holders)})


def ego_interest_distribution(g: MemberGraph, m: MemberId, d: Dataset) -> InterestDistribution:
    """Interest distribution over a member and its graph neighbors."""
    try:
        i = g.nodes.index(m)
    except ValueError:
        raise DataValidationError(f"member {m!r} not in graph") from None
    ego = {m}
    ego.update(g.nodes[int(j)] for j in g.neighbors_of(i))
    return population_interest_distribution(sorted(ego), d)


def specialization(f_g: InterestDistribution, f_ego: InterestDistribution) -> float:
    """L1 distance between two interest distributions; in [0, 2]."""
    support = set(f_g.mass) | set(f_ego.mass)
    return sum(abs(f_g.mass.get(t, 0.0) - f_ego.mass.get(t, 0.0)) for t in support)


def specialization_scores(g: MemberGraph, d: Dataset) -> dict[MemberId, float]:
    """Specialization for every graph node that holds interest terms.

    Same quantity as specialization(population over g.nodes, ego of m),
    computed for all nodes at once through sparse ego aggregation. Nodes
    without terms are omitted (their distribution has no support).
    """
    if g.n_nodes == 0:
        return {}
    terms_of = [sorted(d.interest_terms_by_member.get(m, ())) for m in g.nodes]
    vocab = sorted({t for ts in terms_of for t in ts})
    if not vocab:
        return {}
    t_pos = {t: j for j, t in enumerate(vocab)}

    rows, cols = [], []
    for i, ts in enumerate(terms_of):
        for t in ts:
            rows.append(i)
            cols.append(t_pos[t])
    t_mat = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(g.n_nodes, len(vocab))
    )
    m_counts = np.asarray([len(ts) for ts in terms_of], dtype=np.float64)

    denom_g = m_counts.sum()
    f_g = np.asarray(t_mat.sum(axis=0)).ravel() / denom_g

    ones = np.ones(g.n_edges)
    ego = sp.coo_matrix(
        (np.concatenate([ones, ones, np.ones(g.n_nodes)]),
         (np.concatenate([g.u_idx, g.v_idx, np.arange(g.n_nodes)]),
          np.concatenate([g.v_idx, g.u_idx, np.arange(g.n_nodes)]))),
        shape=(g.n_nodes, g.n_nodes),
    ).tocsr()

    counts = ego @ t_mat            # holders of each term inside each ego
    denom_ego = ego @ m_counts
    out: dict[MemberId, float] = {}
    indptr, indices, data = counts.indptr, counts.indices, counts.data
    for i in range(g.n_nodes):
        if not terms_of[i]:
            continue
        lo, hi = indptr[i], indptr[i + 1]
        f_ego_vals = data[lo:hi] / denom_ego[i]
        f_g_vals = f_g[indices[lo:hi]]
        # union support = ego support plus the tail of f_g outside it
        inside = np.abs(f_g_vals - f_ego_vals).sum() - f_g_vals.sum()
        out[g.nodes[i]] = float(inside + 1.0)
    return out


def member_turnover(d: Dataset, year: int) -> float:
    """Fraction of this year's active members absent from last year's."""
    cur = d.active_members_by_year.get(year)
    prev = d.active_members_by_year.get(year - 1)
    if not cur or not prev:
        raise DataValidationError(
            f"turnover needs active members in both {year - 1} and {year}"
        )
    new = sum(1 for m in cur if m not in prev)
    return new / len(cur)
