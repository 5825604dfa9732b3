"""Command-line surface: one subcommand per pipeline capability.

Exit codes: 0 on success, 1 when input data or config fails validation,
2 on usage or runtime errors.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import __version__
from .community import louvain
from .counterfactual import modularity_series
from .dataset import load_dataset, write_dataset
from .econometrics import PanelRow, fit_fe_panel, significance_stars
from .errors import ConfigError, DataValidationError, PipelineError
from .metrics import member_turnover, novelty_series, specialization_scores, tenure
from .netbuild import build_member_graph
from .pipeline import PipelineConfig, run_pipeline
from .synth import SynthConfig, generate_synthetic

_input_dir = click.option(
    "--input-dir",
    "input_dir",
    required=True,
    type=click.Path(exists=True, file_okay=False),
    help="Directory with events.csv, rsvps.csv, memberships.csv, member_interests.csv, group_topics.csv.",
)


def _emit(header, rows, out_dir, name):
    """Rows to stdout, or to out_dir/name when a directory is given."""
    if out_dir is None:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
        return None
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    with open(target, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    click.echo(str(target))
    return target


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return raw


@click.group(name="rewire-kit")
@click.version_option(__version__, prog_name="rewire-kit")
def cli():
    """Co-attendance networks, rewiring metrics, and counterfactuals."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Overrides the seed in the config.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def generate(config_path, seed, out_dir):
    """Generate a synthetic corpus and write the five CSV tables."""
    raw = _load_json(config_path)
    if seed is not None:
        raw = {**raw, "seed": seed}
    cfg = SynthConfig.from_dict(raw)
    d = generate_synthetic(cfg)
    paths = write_dataset(d, out_dir)
    click.echo(
        f"wrote {len(paths)} files to {out_dir}: "
        f"{len(d.members)} members, {len(d.groups)} groups, {len(d.events)} events"
    )


@cli.command()
@_input_dir
def validate(input_dir):
    """Load and validate a corpus; exit 1 with reasons when invalid."""
    d = load_dataset(input_dir)
    click.echo(
        f"ok: {len(d.members)} members, {len(d.groups)} groups, "
        f"{len(d.events)} events, {len(d.rsvps)} rsvps"
    )


@cli.command(name="build-network")
@_input_dir
@click.option("--year", required=True, type=int)
@click.option("--out-dir", default=".", type=click.Path(file_okay=False))
def build_network(input_dir, year, out_dir):
    """Project one year to a weighted member graph (nodes.csv, edges.csv)."""
    d = load_dataset(input_dir)
    g = build_member_graph(d, year)
    _emit(("member_id",), ((n,) for n in g.nodes), out_dir, "nodes.csv")
    _emit(
        ("u", "v", "weight"),
        ((u, v, f"{w:.9f}") for u, v, w in g.edges()),
        out_dir,
        "edges.csv",
    )


@cli.command("tenure")
@_input_dir
@click.option("--year", type=int, default=None, help="Restrict to one year.")
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def tenure_cmd(input_dir, year, out_dir):
    """Per active member-year: years since first RSVP."""
    d = load_dataset(input_dir)
    years = [year] if year is not None else list(d.years)
    rows = []
    for y in years:
        for m in sorted(d.active_members_by_year.get(y, ())):
            rows.append((m, y, tenure(m, y, d)))
    _emit(("member_id", "year", "tenure"), rows, out_dir, "tenure.csv")


@cli.command("novelty")
@_input_dir
@click.option("--year", type=int, default=None)
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def novelty_cmd(input_dir, year, out_dir):
    """Per member-year: 1 - cosine of consecutive attendance vectors."""
    d = load_dataset(input_dir)
    rows = [
        (m, y, repr(v))
        for (m, y), v in sorted(novelty_series(d).items())
        if year is None or y == year
    ]
    _emit(("member_id", "year", "novelty"), rows, out_dir, "novelty.csv")


@cli.command("specialization")
@_input_dir
@click.option("--year", type=int, default=None)
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def specialization_cmd(input_dir, year, out_dir):
    """Per member-year: L1 gap between ego and population interests."""
    d = load_dataset(input_dir)
    years = [year] if year is not None else list(d.years)
    rows = []
    for y in years:
        g = build_member_graph(d, y)
        scores = specialization_scores(g, d)
        rows.extend((m, y, repr(scores[m])) for m in sorted(scores))
    _emit(("member_id", "year", "specialization"), rows, out_dir, "specialization.csv")


@cli.command("turnover")
@_input_dir
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def turnover_cmd(input_dir, out_dir):
    """Per year: share of active members new since the prior year."""
    d = load_dataset(input_dir)
    rows = []
    for y in d.years[1:]:
        if d.active_members_by_year.get(y) and d.active_members_by_year.get(y - 1):
            rows.append((y, repr(member_turnover(d, y))))
    _emit(("year", "turnover"), rows, out_dir, "turnover.csv")


@cli.command("modularity")
@_input_dir
@click.option("--year", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--unweighted", is_flag=True, default=False)
@click.option("--out-dir", default=".", type=click.Path(file_okay=False))
def modularity_cmd(input_dir, year, seed, unweighted, out_dir):
    """Louvain partition of one year's graph plus its Q."""
    d = load_dataset(input_dir)
    g = build_member_graph(d, year)
    part, report = louvain(g, seed=seed, weighted=not unweighted)
    _emit(
        ("member_id", "community"),
        zip(part.nodes, (int(c) for c in part.labels)),
        out_dir,
        "partition.csv",
    )
    w = csv.writer(sys.stdout)
    w.writerow(("year", "q", "n_communities", "weighted", "seed"))
    w.writerow((year, repr(report.q), report.n_communities, report.weighted, report.seed))


@cli.command("simulate")
@_input_dir
@click.option(
    "--mode",
    required=True,
    type=click.Choice(["undiff", "undifferentiated", "static"]),
)
@click.option("--replicates", default=20, type=int, show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--unweighted", is_flag=True, default=False)
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def simulate_cmd(input_dir, mode, replicates, seed, unweighted, out_dir):
    """Observed vs expected modularity under a null attendance model."""
    d = load_dataset(input_dir)
    full_mode = "undifferentiated" if mode == "undiff" else mode
    series = modularity_series(
        d, full_mode, replicates=replicates, seed=seed, weighted=not unweighted
    )
    rows = [
        (r.year, repr(r.observed_q), repr(r.expected_q_mean), repr(r.expected_q_std), repr(r.gap))
        for r in series.rows
    ]
    _emit(
        ("year", "observed_q", "expected_q_mean", "expected_q_std", "gap"),
        rows,
        out_dir,
        "modularity_series.csv",
    )
    if series.skipped_years:
        click.echo(f"skipped years without edges: {series.skipped_years}", err=True)


@cli.command("regress")
@click.argument("panel_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--standardize", is_flag=True, default=False)
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def regress_cmd(panel_csv, standardize, out_dir):
    """Fit the fixed-effects model on a panel.csv produced upstream."""
    rows = []
    with open(panel_csv, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"member_id", "year", "specialization", "novelty", "log_events", "log_connections"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise DataValidationError(
                f"{panel_csv}: expected columns {', '.join(sorted(need))}"
            )
        for rec in reader:
            rows.append(
                PanelRow(
                    member=rec["member_id"],
                    year=int(rec["year"]),
                    specialization=float(rec["specialization"]),
                    novelty=float(rec["novelty"]),
                    log_events=float(rec["log_events"]),
                    log_connections=float(rec["log_connections"]),
                )
            )
    res = fit_fe_panel(rows, standardize=standardize)
    out_rows = []
    for name in res.coef:
        row = [name, repr(res.coef[name]), repr(res.robust_se[name]),
               repr(res.p_value[name]), significance_stars(res.p_value[name])]
        if standardize:
            row.append(repr(res.std_coef[name]))
        out_rows.append(row)
    header = ("regressor", "coef", "robust_se", "p", "stars") + (
        ("std_coef",) if standardize else ()
    )
    _emit(header, out_rows, out_dir, "regression.csv")
    click.echo(
        f"n_obs={res.n_obs} n_members={res.n_members} "
        f"r_squared_within={res.r_squared_within:.6f}",
        err=True,
    )


@cli.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
@click.option("--replicates", type=int, default=None)
@click.option("--unweighted", is_flag=True, default=False)
def pipeline_cmd(config_path, seed, out_dir, replicates, unweighted):
    """Run ingest through regression and write all artifacts."""
    raw = _load_json(config_path)
    cfg = PipelineConfig.from_dict(
        raw,
        seed=seed,
        out_dir=out_dir,
        replicates=replicates,
        weighted=False if unweighted else None,
    )
    manifest = run_pipeline(cfg)
    click.echo(
        f"wrote {len(manifest['artifacts'])} artifacts to {cfg.out_dir} "
        f"(config {manifest['config_hash'][:12]})"
    )


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return 2
    except click.ClickException as exc:
        exc.show()
        return 2
    except (DataValidationError, ConfigError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1 if isinstance(exc.cause, (DataValidationError, ConfigError)) else 2
    except Exception as exc:  # operational errors: I/O, numeric failures
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
