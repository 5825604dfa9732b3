"""End-to-end run: ingest, yearly networks, metrics, modularity,
simulations, regression, manifest.

Every artifact is a function of (config, seed) alone; running twice with
the same pair reproduces each file byte for byte. A stage failure is
wrapped with the stage name and all files written so far are removed.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from . import __version__
from .community import louvain
from .counterfactual import _louvain_seed, modularity_series
from .dataset import Dataset, build_dataset, load_dataset, write_dataset
from .econometrics import build_panel, fit_fe_panel, significance_stars
from .errors import ConfigError, PipelineError
from .metrics import (
    mean_active_tenure,
    member_turnover,
    novelty_series,
    specialization_scores,
    term_adopter_tenure,
)
from .netbuild import project_members, tfidf_incidence, yearly_slice
from .synth import SynthConfig, generate_synthetic

ARTIFACTS = (
    "turnover.csv",
    "tenure_series.csv",
    "novelty.csv",
    "specialization.csv",
    "panel.csv",
    "modularity_observed.csv",
    "modularity_series.csv",
    "regression.csv",
)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    out_dir: str
    input_dir: str | None = None
    synth: SynthConfig | None = None
    replicates: int = 20
    weighted: bool = True
    years: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.input_dir is None) == (self.synth is None):
            raise ConfigError("exactly one of input_dir and synth must be set")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.years is not None:
            lo, hi = self.years
            if lo > hi:
                raise ConfigError(f"bad year range {lo}..{hi}")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], **overrides: Any) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown pipeline config field(s): {', '.join(sorted(unknown))}")
        values: dict[str, Any] = dict(raw)
        for key, val in overrides.items():
            if val is not None:
                values[key] = val
        if "seed" not in values:
            raise ConfigError("pipeline config needs a seed")
        synth = values.get("synth")
        if isinstance(synth, Mapping):
            values["synth"] = SynthConfig.from_dict(synth, default_seed=values["seed"])
        if values.get("years") is not None:
            values["years"] = tuple(int(y) for y in values["years"])
        if "out_dir" not in values:
            raise ConfigError("pipeline config needs an out_dir")
        return cls(**values)

    def canonical(self) -> dict[str, Any]:
        # out_dir stays out of the canonical form: the hash identifies
        # the analysis, not where its artifacts land
        out: dict[str, Any] = {
            "seed": self.seed,
            "replicates": self.replicates,
            "weighted": self.weighted,
        }
        if self.input_dir is not None:
            out["input_dir"] = self.input_dir
        if self.synth is not None:
            out["synth"] = {
                name: getattr(self.synth, name)
                for name in sorted(SynthConfig.__dataclass_fields__)
            }
        if self.years is not None:
            out["years"] = list(self.years)
        return out


def config_hash(cfg: PipelineConfig) -> str:
    blob = json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _restrict_years(d: Dataset, lo: int, hi: int) -> Dataset:
    keep = {e.id for e in d.events if lo <= e.date.year <= hi}
    return build_dataset(
        events=[e for e in d.events if e.id in keep],
        rsvps=[(m, e) for m, e in d.rsvps if e in keep],
        memberships=d.memberships,
        member_interests=d.member_interests,
        group_topics=d.group_topics,
        extra_members=d.members,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


class _Emitter:
    """Tracks written files so a failed run can remove its own output."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def csv(self, name: str, header: tuple[str, ...], rows) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        self.written.append(path)
        return path

    def cleanup(self):
        for p in self.written:
            try:
                p.unlink()
            except OSError:
                pass


def run_pipeline(cfg: PipelineConfig) -> dict[str, Any]:
    """Run every stage and return the manifest (also written as JSON)."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    em = _Emitter(out_dir)

    def run(name: str, fn: Callable[[], Any]) -> Any:
        try:
            return fn()
        except PipelineError:
            em.cleanup()
            raise
        except Exception as exc:
            em.cleanup()
            raise PipelineError(name, exc) from exc

    def ingest() -> Dataset:
        if cfg.synth is not None:
            d = generate_synthetic(cfg.synth)
            em.written.extend(write_dataset(d, out_dir / "dataset"))
        else:
            d = load_dataset(cfg.input_dir)
        if cfg.years is not None:
            d = _restrict_years(d, *cfg.years)
        if not d.events:
            raise ConfigError("dataset has no events after ingest")
        return d

    d = run("ingest", ingest)

    def networks():
        graphs = {}
        for y in d.years:
            s = yearly_slice(d, y)
            if s.n_members == 0:
                continue
            graphs[y] = project_members(tfidf_incidence(s), s)
        return graphs

    graphs = run("networks", networks)

    def metrics_stage():
        turnover_rows = []
        for y in d.years[1:]:
            if d.active_members_by_year.get(y) and d.active_members_by_year.get(y - 1):
                turnover_rows.append((y, _fmt(member_turnover(d, y))))
        em.csv("turnover.csv", ("year", "turnover"), turnover_rows)

        tenure_rows = []
        for y in d.years:
            if not d.active_members_by_year.get(y):
                continue
            records = term_adopter_tenure(d, y)
            net = mean_active_tenure(d, y)
            tenure_rows.append((y, "network_mean", _fmt(net), len(d.active_members_by_year[y])))
            for label, flag in (("new_terms", True), ("existing_terms", False)):
                vals = [r.mean_adopter_tenure for r in records if r.is_new is flag]
                if vals:
                    tenure_rows.append((y, label, _fmt(sum(vals) / len(vals)), len(vals)))
        em.csv("tenure_series.csv", ("year", "series", "value", "n"), tenure_rows)

        nov = novelty_series(d)
        em.csv(
            "novelty.csv",
            ("member_id", "year", "novelty"),
            ((m, y, _fmt(v)) for (m, y), v in sorted(nov.items())),
        )

        spec_by_year = {y: specialization_scores(g, d) for y, g in graphs.items()}
        spec_rows = []
        for y in sorted(spec_by_year):
            for m in sorted(spec_by_year[y]):
                spec_rows.append((m, y, _fmt(spec_by_year[y][m])))
        em.csv("specialization.csv", ("member_id", "year", "specialization"), spec_rows)

        panel = build_panel(d, graphs=graphs, spec_by_year=spec_by_year)
        em.csv(
            "panel.csv",
            ("member_id", "year", "specialization", "novelty", "log_events", "log_connections"),
            (
                (r.member, r.year, _fmt(r.specialization), _fmt(r.novelty),
                 _fmt(r.log_events), _fmt(r.log_connections))
                for r in panel
            ),
        )
        return panel

    panel = run("metrics", metrics_stage)

    def modularity_stage():
        rows = []
        for y in sorted(graphs):
            g = graphs[y]
            if g.n_edges == 0:
                continue
            part, report = louvain(g, seed=_louvain_seed(cfg.seed, y), weighted=cfg.weighted)
            rows.append((y, _fmt(report.q), part.n_communities, g.n_nodes, g.n_edges))
        em.csv(
            "modularity_observed.csv",
            ("year", "q", "n_communities", "n_members", "n_edges"),
            rows,
        )

    run("modularity", modularity_stage)

    def simulations():
        rows = []
        for mode in ("undifferentiated", "static"):
            series = modularity_series(
                d, mode, replicates=cfg.replicates, seed=cfg.seed, weighted=cfg.weighted
            )
            for r in series.rows:
                rows.append(
                    (mode, r.year, _fmt(r.observed_q), _fmt(r.expected_q_mean),
                     _fmt(r.expected_q_std), _fmt(r.gap))
                )
        em.csv(
            "modularity_series.csv",
            ("mode", "year", "observed_q", "expected_q_mean", "expected_q_std", "gap"),
            rows,
        )

    run("simulations", simulations)

    def regression():
        if not panel:
            em.csv("regression.csv", ("regressor", "coef", "robust_se", "p", "stars"), [])
            return None
        res = fit_fe_panel(panel)
        em.csv(
            "regression.csv",
            ("regressor", "coef", "robust_se", "p", "stars"),
            (
                (name, _fmt(res.coef[name]), _fmt(res.robust_se[name]),
                 _fmt(res.p_value[name]), significance_stars(res.p_value[name]))
                for name in res.coef
            ),
        )
        return {
            "n_obs": res.n_obs,
            "n_members": res.n_members,
            "r_squared_within": res.r_squared_within,
            "df_resid": res.df_resid,
            "coef": res.coef,
        }

    reg_summary = run("regression", regression)

    def manifest_stage():
        manifest = {
            "tool": "rewire-kit",
            "version": __version__,
            "seed": cfg.seed,
            "replicates": cfg.replicates,
            "weighted": cfg.weighted,
            "config": cfg.canonical(),
            "config_hash": config_hash(cfg),
            "years": [int(y) for y in d.years],
            "artifacts": list(ARTIFACTS),
            "dataset_files": (
                sorted(p.name for p in (out_dir / "dataset").iterdir())
                if cfg.synth is not None
                else None
            ),
            "input_dir": cfg.input_dir,
            "regression": reg_summary,
        }
        path = out_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        em.written.append(path)
        return manifest

    return run("manifest", manifest_stage)
