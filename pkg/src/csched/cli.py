"""Command-line interface.

Exit codes: 0 success (a timeout that still produced a result counts),
1 I/O problem, 2 invalid input, 3 infeasible instance. Every option can
also come from an environment variable named ``CSCHED_<OPTION>``; a flag
on the command line wins over the environment.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import bench as bench_mod
from .errors import (
    CycleDetected,
    Infeasible,
    MissingDuration,
    ParseError,
    SchemaError,
    TooLarge,
    UnknownDependency,
    ZeroTotalCapacity,
)
from .gantt import render_svg
from .ingest import check_compatible, load_cluster, parse_workload
from .model import Instance, Status
from .report import RunReport, digest, load_schedule
from .solvers import TECHNIQUES, run_technique

EXIT_IO, EXIT_INVALID, EXIT_INFEASIBLE = 1, 2, 3
INVALID = (ParseError, SchemaError, CycleDetected, UnknownDependency, MissingDuration, ValueError)


def _fail(code, msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}")


def _write(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}")


def _load(cluster_path, workload_path):
    ctext, wtext = _read(cluster_path), _read(workload_path)
    try:
        cluster = load_cluster(ctext)
        workflows = parse_workload(wtext)
        check_compatible(cluster.nodes, workflows)
    except INVALID as exc:
        _fail(EXIT_INVALID, f"{type(exc).__name__}: {exc}")
    return cluster, workflows, digest(ctext, wtext)


def _fmt(x):
    return f"{x:.2f}"


def print_table(report: RunReport):
    rows = [("Workflow", "Task", "Node", "Start", "End", "Usage")]
    summary = []
    for wid, r in report.records:
        s = r.schedule
        if s is None:
            summary.append(f"{wid} [{r.technique}] status={r.status.value}")
            continue
        for e in s.entries:
            rows.append((wid, e.task_id, e.node_id, _fmt(e.start), _fmt(e.finish), _fmt(e.usage)))
        summary.append(f"{wid} [{r.technique}] status={r.status.value} makespan={s.makespan:.6f} "
                       f"usage={s.total_usage:.6f} objective={s.objective:.6f} time={r.wall_time:.3f}s")
    widths = [max(len(row[i]) for row in rows) for i in range(6)]
    for row in rows:
        click.echo("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    for line in summary:
        click.echo(line)


@click.group()
@click.version_option(package_name="csched")
def main():
    """Map DAG workflows onto heterogeneous clusters and schedule them."""


@main.command()
@click.argument("cluster", type=click.Path(dir_okay=False))
@click.argument("workload", type=click.Path(dir_okay=False))
def validate(cluster, workload):
    """Check a cluster file and a workload file."""
    c, wfs, _ = _load(cluster, workload)
    ntasks = sum(len(w.tasks) for w in wfs)
    click.echo(f"ok: {len(c.nodes)} nodes, {len(wfs)} workflows, {ntasks} tasks")


@main.command()
@click.argument("cluster", type=click.Path(dir_okay=False))
@click.argument("workload", type=click.Path(dir_okay=False))
@click.option("--technique", type=click.Choice(TECHNIQUES), default="milp", show_default=True,
              envvar="CSCHED_TECHNIQUE")
@click.option("--alpha", type=float, default=1.0, show_default=True, envvar="CSCHED_ALPHA",
              help="Weight of total usage.")
@click.option("--beta", type=float, default=1.0, show_default=True, envvar="CSCHED_BETA",
              help="Weight of makespan.")
@click.option("--usage-mode", type=click.Choice(["requested", "scaled"]), default="requested",
              show_default=True, envvar="CSCHED_USAGE_MODE")
@click.option("--capacity-mode", type=click.Choice(["concurrent", "aggregate", "off"]),
              default="concurrent", show_default=True, envvar="CSCHED_CAPACITY_MODE")
@click.option("--seed", type=int, default=42, show_default=True, envvar="CSCHED_SEED")
@click.option("--time-budget", type=float, default=None, envvar="CSCHED_TIME_BUDGET",
              help="Seconds per workflow (exact search and metaheuristics).")
@click.option("--workflow", "only", multiple=True, help="Solve only these workflow ids.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, envvar="CSCHED_OUT",
              help="Write the schedule JSON here.")
@click.option("--quiet", is_flag=True, help="Skip the results table.")
def solve(cluster, workload, technique, alpha, beta, usage_mode, capacity_mode, seed, time_budget,
          only, out, quiet):
    """Solve every workflow of WORKLOAD on CLUSTER."""
    c, wfs, dig = _load(cluster, workload)
    if only:
        missing = set(only) - {w.id for w in wfs}
        if missing:
            _fail(EXIT_INVALID, f"unknown workflow(s): {', '.join(sorted(missing))}")
        wfs = [w for w in wfs if w.id in only]
    try:
        inst = Instance(c.nodes, wfs, usage_mode, capacity_mode, alpha, beta, c.rates)
    except ValueError as exc:
        _fail(EXIT_INVALID, str(exc))
    report = RunReport([n.id for n in c.nodes], dig)
    infeasible = []
    for wf in wfs:
        try:
            r = run_technique(technique, inst, wf, seed=seed, time_budget=time_budget)
        except Infeasible as exc:
            infeasible.append(f"{wf.id}: {exc}")
            continue
        except (TooLarge, ZeroTotalCapacity, ValueError) as exc:
            _fail(EXIT_INVALID, f"{wf.id}: {exc}")
        report.add(wf.id, r)
        if r.status is Status.INFEASIBLE:
            infeasible.append(f"{wf.id}: no feasible schedule found")
    if out:
        _write(out, report.to_json())
    if not quiet:
        print_table(report)
    if infeasible:
        _fail(EXIT_INFEASIBLE, "infeasible: " + "; ".join(infeasible))


@main.command()
@click.argument("schedule", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default="gantt.svg", show_default=True,
              envvar="CSCHED_GANTT_OUT")
def gantt(schedule, out):
    """Draw a schedule file as an SVG Gantt chart."""
    try:
        doc = load_schedule(_read(schedule))
    except SchemaError as exc:
        _fail(EXIT_INVALID, f"SchemaError: {exc}")
    _write(out, render_svg(doc))
    click.echo(f"wrote {out}")


@main.command()
@click.option("--suite", type=click.Choice(["quality", "scale"]), default="quality", show_default=True,
              envvar="CSCHED_SUITE")
@click.option("--out", type=click.Path(dir_okay=False), default=None, envvar="CSCHED_BENCH_OUT",
              help="CSV path; stdout when omitted.")
@click.option("--seed", type=int, default=42, show_default=True, envvar="CSCHED_SEED")
@click.option("--workers", type=int, default=1, show_default=True, envvar="CSCHED_WORKERS",
              help="Threads used to run cells.")
@click.option("--sizes", default="5,50,500", show_default=True, envvar="CSCHED_SIZES",
              help="Scale suite N (N nodes x N tasks), comma separated.")
@click.option("--include-5000", is_flag=True, envvar="CSCHED_INCLUDE_5000",
              help="Add the 5000x5000 scale case.")
@click.option("--techniques", default=",".join(bench_mod.QUALITY_TECHNIQUES), show_default=True,
              envvar="CSCHED_TECHNIQUES")
@click.option("--exact-budget", type=float, default=None, envvar="CSCHED_EXACT_BUDGET",
              help="Exact search budget in seconds [quality 60, scale 10].")
@click.option("--mh-budget", type=float, default=None, envvar="CSCHED_MH_BUDGET",
              help="Metaheuristic budget in seconds (default: iteration count only).")
def bench(suite, out, seed, workers, sizes, include_5000, techniques, exact_budget, mh_budget):
    """Run the quality or scale benchmark and emit CSV."""
    techs = tuple(t.strip() for t in techniques.split(",") if t.strip())
    bad = [t for t in techs if t not in bench_mod.QUALITY_TECHNIQUES]
    if bad:
        _fail(EXIT_INVALID, f"unknown technique(s): {', '.join(bad)}")
    if suite == "quality":
        rows = bench_mod.run_quality(seed, workers, exact_budget or 60.0, mh_budget, techs)
    else:
        try:
            ns = [int(s) for s in sizes.split(",") if s.strip()]
        except ValueError:
            _fail(EXIT_INVALID, f"bad --sizes {sizes!r}")
        if include_5000 and 5000 not in ns:
            ns.append(5000)
        rows = bench_mod.run_scale(ns, seed, workers, exact_budget or 10.0, mh_budget, techs)
    text = bench_mod.to_csv(rows)
    if out:
        _write(out, text)
        click.echo(f"wrote {len(rows)} rows to {out}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
