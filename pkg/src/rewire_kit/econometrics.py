"""Member-year panel assembly and the within (fixed-effects) regression.

Specialization is regressed on year, novelty, and the two log count
controls, absorbing a member intercept by demeaning. Standard errors are
heteroskedasticity-robust (HC1-style sandwich) with degrees of freedom
corrected for the absorbed member effects, so estimates match a full
dummy-variable OLS on the same rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .dataset import Dataset, MemberId
from .errors import DataValidationError
from .metrics import novelty_series, specialization_scores
from .netbuild import MemberGraph, build_member_graph

REGRESSORS = ("year", "novelty", "log_events", "log_connections")


@dataclass(frozen=True)
class PanelRow:
    member: MemberId
    year: int
    specialization: float
    novelty: float
    log_events: float
    log_connections: float


def build_panel(
    d: Dataset,
    graphs: dict[int, MemberGraph] | None = None,
    spec_by_year: dict[int, dict[MemberId, float]] | None = None,
) -> list[PanelRow]:
    """One row per member-year where both novelty and specialization exist.

    Novelty needs activity in the prior year; specialization needs the
    member to hold interest terms. Controls are ln(1 + events attended)
    and ln(1 + distinct co-attendees in the yearly graph). graphs and
    spec_by_year let a caller that already built the yearly projections
    pass them in; left as None, everything is computed here.
    """
    novelty = novelty_series(d)
    rows: list[PanelRow] = []
    for year in d.years:
        g = graphs.get(year) if graphs is not None else build_member_graph(d, year)
        if g is None or g.n_nodes == 0:
            continue
        spec = (
            spec_by_year[year]
            if spec_by_year is not None and year in spec_by_year
            else specialization_scores(g, d)
        )
        degrees = g.degrees
        pos = {m: i for i, m in enumerate(g.nodes)}
        rows_y = []
        for m in g.nodes:
            nov = novelty.get((m, year))
            s = spec.get(m)
            if nov is None or s is None:
                continue
            rows_y.append((m, nov, s))
        if not rows_y:
            continue
        att = _attendance_counts(d, year)
        for m, nov, s in rows_y:
            rows.append(
                PanelRow(
                    member=m,
                    year=year,
                    specialization=s,
                    novelty=nov,
                    log_events=math.log1p(att.get(m, 0)),
                    log_connections=math.log1p(int(degrees[pos[m]])),
                )
            )
    rows.sort(key=lambda r: (r.member, r.year))
    return rows


def _attendance_counts(d: Dataset, year: int) -> dict[MemberId, int]:
    mask = d.event_years[d.rsvp_event_idx] == year
    idx, cnt = np.unique(d.rsvp_member_idx[mask], return_counts=True)
    return {d.members_sorted[int(i)]: int(c) for i, c in zip(idx, cnt)}


@dataclass(frozen=True)
class RegressionResult:
    coef: dict[str, float]
    robust_se: dict[str, float]
    p_value: dict[str, float]
    n_obs: int
    n_members: int
    r_squared_within: float
    df_resid: int
    std_coef: dict[str, float] | None = None


def fit_fe_panel(rows: list[PanelRow], standardize: bool = False) -> RegressionResult:
    """Within estimator with HC1 sandwich standard errors.

    Demeans every variable by member, runs OLS on the demeaned data, and
    corrects degrees of freedom for the absorbed member intercepts, which
    reproduces per-member-dummy OLS coefficient for coefficient. Members
    with a single row cannot identify anything within and are dropped.
    """
    by_member: dict[MemberId, list[PanelRow]] = {}
    for r in rows:
        by_member.setdefault(r.member, []).append(r)
    kept = {m: rs for m, rs in sorted(by_member.items()) if len(rs) >= 2}
    if not kept:
        raise DataValidationError("panel has no member with >= 2 rows")

    y_parts = []
    x_parts = []
    for m, rs in kept.items():
        y = np.asarray([r.specialization for r in rs])
        x = np.asarray(
            [[r.year, r.novelty, r.log_events, r.log_connections] for r in rs]
        )
        y_parts.append(y - y.mean())
        x_parts.append(x - x.mean(axis=0))
    yd = np.concatenate(y_parts)
    xd = np.vstack(x_parts)
    n, k = xd.shape
    n_members = len(kept)

    within_var = (xd * xd).sum(axis=0)
    dead = [REGRESSORS[j] for j in range(k) if within_var[j] <= 1e-14]
    if dead:
        raise DataValidationError(
            f"regressor(s) with zero within-member variance: {', '.join(dead)}"
        )
    df = n - k - n_members
    if df <= 0:
        raise DataValidationError(f"not enough observations: {n} rows, df {df}")

    xtx = xd.T @ xd
    cond = np.linalg.cond(xtx)
    if not np.isfinite(cond) or cond > 1e12:
        raise DataValidationError("singular design matrix")
    bread = np.linalg.inv(xtx)
    beta = bread @ (xd.T @ yd)
    resid = yd - xd @ beta

    meat = (xd * (resid * resid)[:, None]).T @ xd
    vcov = bread @ meat @ bread * (n / df)
    se = np.sqrt(np.diag(vcov))
    t_stat = beta / se
    p = 2.0 * scipy.stats.t.sf(np.abs(t_stat), df)

    sst = float(yd @ yd)
    ssr = float(resid @ resid)
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0

    std_coef = None
    if standardize:
        sy = float(yd.std(ddof=1))
        std_coef = {
            name: float(beta[j] * xd[:, j].std(ddof=1) / sy)
            for j, name in enumerate(REGRESSORS)
        }

    return RegressionResult(
        coef={name: float(beta[j]) for j, name in enumerate(REGRESSORS)},
        robust_se={name: float(se[j]) for j, name in enumerate(REGRESSORS)},
        p_value={name: float(p[j]) for j, name in enumerate(REGRESSORS)},
        n_obs=n,
        n_members=n_members,
        r_squared_within=r2,
        df_resid=df,
        std_coef=std_coef,
    )


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""
