# -*- coding: utf-8 -*-

"""
experiment_dispatcher.py

Master orchestrator for tubesim experiment campaigns.

Responsibilities:
    - Parse the command line and the experiment config
    - Build the tube domain for every epsilon
    - Run the trajectory campaign through trajectory_pool
    - Compare against limit_models / metastable_predictor
    - Write manifest.json, CSV/TSV tables and the SQLite ledger
    - Map failures to exit codes (0 ok, 2 config, 3 geometry, 4 simulation,
      5 acceptance failure with --strict)

Commands:
    validate | exit-stats | metastable | ctmc-compare | pde | localization | analytic
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable
import argparse
import logging
import math
import sys

import numpy as np

import analytic_checks
import report_writer
import run_metadata
import trajectory_pool
from errors import AcceptanceFailure, ConfigError, GeometryError, SimulationError, TubeSimError
from exit_statistics import (
    ExitEnsemble,
    InsufficientSample,
    TestReport,
    conditional_means_report,
    exit_place_distribution,
    exit_ratio_trend,
    independence_test,
    inner_exit_report,
    inner_section_ensemble,
    ks_exponential,
    mean_exit_time,
    place_report,
    shrinking_trend,
)
from experiment_config import AUTO, ExperimentConfig, StartSpec, load_config
from graph_core import GraphPoint, MetricGraph
from limit_models import (
    absorption_distribution,
    ctmc_build,
    exit_edge_probability,
    inner_exit_probability,
    inner_exit_time,
    intermediate_chain,
    intermediate_time,
    kappa,
    law_frame,
    mean_exit_scale,
    mu_extended,
    one_cycle_escape_probability,
    timescale_ladder,
)
from metastable_predictor import (
    FiberStart,
    Observable,
    PredictionReport,
    absorption_check,
    bump,
    constant,
    coordinate,
    localization_check,
    mc_observable,
    minimal_vertex,
    pde_solution,
    predict_first_critical,
    predict_intermediate,
    report,
)
from reflected_sde import default_cycle_delta
from run_ledger import RunLedger
from tube_geometry import SectionFamily, TubeDomain, build_domain, collar_adjusted_levels


# ---------------------------------------------------------------------------
# Logging setup
# ---------------------------------------------------------------------------

def configure_logging(level=logging.INFO) -> None:
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )


logger = logging.getLogger("tubesim.experiment_dispatcher")

# Tolerance floor of the first-critical-scale comparison.
CTMC_FLOOR: float = 0.05


# ---------------------------------------------------------------------------
# Run context
# ---------------------------------------------------------------------------

@dataclass
class Run:
    """Mutable state of one campaign: output sinks plus the verdict tally."""
    cfg: ExperimentConfig | None
    out_dir: Path
    workers: int
    seed: int
    manifest: run_metadata.RunManifest
    ledger: RunLedger
    failures: int = 0

    @property
    def config_hash(self) -> str:
        return self.manifest.config_hash

    def record(self, epsilon: float, row: dict) -> None:
        self.ledger.insert_report(self.manifest.run_id, epsilon, row)
        if row["verdict"] != "pass":
            self.failures += 1
            logger.warning("Verdict %s for %s at eps=%g", row["verdict"], row["name"], epsilon)

    def censoring(self, epsilon: float, rate: float) -> None:
        self.manifest = self.manifest.with_censoring(epsilon, rate)
        run_metadata.write_manifest(self.manifest, self.out_dir)


def _open_run(command: str, cfg: ExperimentConfig | None, args: argparse.Namespace) -> Run:
    out_dir = Path(args.out)
    workers = trajectory_pool.resolve_workers(args.workers, cfg.workers if cfg else None)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    manifest = run_metadata.new_manifest(
        command=command,
        config_name=cfg.name if cfg else command,
        config_hash=cfg.config_hash if cfg else "analytic",
        seed=seed,
        workers=workers,
    )
    run_metadata.write_manifest(manifest, out_dir)
    ledger = RunLedger(out_dir)
    ledger.open_run(manifest)
    return Run(cfg, out_dir, workers, seed, manifest, ledger)


def _close_run(run: Run, exit_code: int) -> None:
    run.manifest = run_metadata.finish(run.manifest)
    run_metadata.write_manifest(run.manifest, run.out_dir)
    run.ledger.close_run(run.manifest.run_id, run.manifest.finished_utc, exit_code)
    run.ledger.close()


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _require_kind(cfg: ExperimentConfig, kind: str) -> None:
    if cfg.kind != kind:
        raise ConfigError(f"command expects kind '{kind}', config declares '{cfg.kind}'")


def _graph_point(graph: MetricGraph, spec: StartSpec) -> GraphPoint:
    x = GraphPoint.at_vertex(spec.vertex) if spec.vertex is not None else GraphPoint.on_edge(spec.edge, spec.arclength)
    try:
        graph.check_point(x)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return x


def _observable(graph: MetricGraph, name: str) -> Observable:
    if name.startswith("bump:"):
        return bump(graph.n_vertices, int(name[5:]))
    if name.startswith("const:"):
        return constant(graph.n_vertices, float(name[6:]))
    return coordinate(graph, "xyz".index(name))


def _start_rule(domain: TubeDomain, x: GraphPoint, fiber: str, seed: int):
    return FiberStart(domain, x, seed, randomize=(fiber == "sample"))


def _prediction_row(epsilon: float, rep: PredictionReport, **extra: Any) -> dict:
    return {
        "epsilon": epsilon,
        **extra,
        "observable": rep.observable,
        "mc_estimate": rep.estimate,
        "se": rep.se,
        "limit": rep.prediction,
        "discrepancy_se": rep.discrepancy,
        "tolerance": rep.tolerance,
        "n": rep.n,
        "censored": rep.censored,
        "verdict": rep.verdict,
    }


def _prediction_ledger_row(rep: PredictionReport, name: str) -> dict:
    return {
        "name": name,
        "n": rep.n,
        "censored": rep.censored,
        "statistic": abs(rep.estimate - rep.prediction),
        "threshold": rep.tolerance,
        "p_value": float("nan"),
        "verdict": rep.verdict,
        "notes": f"mc={rep.estimate:.6g} limit={rep.prediction:.6g}",
    }


def _safe_report(builder: Callable[[], TestReport], name: str) -> TestReport | None:
    try:
        return builder()
    except InsufficientSample as exc:
        logger.warning("Skipping %s: %s", name, exc)
        return None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    graph = cfg.build_graph()
    scaling = cfg.build_scaling()
    for eps in cfg.epsilons:
        domain = build_domain(graph, scaling, eps)
        params = cfg.params
        if cfg.kind == "exit-stats" and params.levels != AUTO:
            SectionFamily(params.vertex, params.levels).check(graph)
        if cfg.kind == "exit-stats":
            levels = collar_adjusted_levels(domain, params.vertex) if params.levels == AUTO else params.levels
            for k, lv in levels.items():
                if not lv > domain.collar_level(params.vertex):
                    raise GeometryError(
                        f"eps={eps}: exit level {lv:.6g} on edge {k} does not clear the collar "
                        f"{domain.collar_level(params.vertex):.6g}"
                    )
    if cfg.kind in ("ctmc-compare", "localization"):
        minimal_vertex(scaling)
    if cfg.kind == "metastable":
        intermediate_chain(graph, scaling, cfg.params.chain)
    logger.info("Config %s is valid for eps=%s", cfg.name, list(cfg.epsilons))
    print(f"OK: {cfg.name} ({cfg.kind}), hash {cfg.config_hash}")
    return 0


def cmd_exit_stats(run: Run) -> None:
    cfg = run.cfg
    _require_kind(cfg, "exit-stats")
    p = cfg.params
    graph, scaling = cfg.build_graph(), cfg.build_scaling()
    sim = cfg.simulation_config(run.seed)
    j = p.vertex

    rows, tests, plot_rows, events = [], [], [], []
    for eps in cfg.epsilons:
        logger.info("exit-stats: eps=%g, vertex %d, N=%d", eps, j, p.trajectories)
        domain = build_domain(graph, scaling, eps)
        levels = collar_adjusted_levels(domain, j) if p.levels == AUTO else dict(p.levels)
        delta = p.delta if p.delta is not None else default_cycle_delta(domain, j, levels)

        logs = trajectory_pool.cycles(
            domain, j, levels, sim, p.trajectories, run.workers,
            randomize=p.randomize_start, delta=delta,
        )
        records = [rec for rec, _ in logs]
        ens = ExitEnsemble.from_records(records, eps, j, levels, delta)
        run.censoring(eps, ens.censoring_rate)
        if p.event_log:
            events.extend(report_writer.event_rows(eps, logs))

        target = exit_edge_probability(graph, j, levels)
        scale = mean_exit_scale(graph, scaling, j, levels, eps)
        escape = one_cycle_escape_probability(graph, j, levels, delta)
        uncensored = ens.uncensored
        mean_cycles = float(np.mean([r.cycles for r in uncensored])) if uncensored else math.nan

        try:
            dist = exit_place_distribution(ens)
            mean, se = mean_exit_time(ens)
        except InsufficientSample as exc:
            raise SimulationError(f"eps={eps}: {exc} ({ens.censored} censored)") from exc
        ks = _safe_report(lambda: ks_exponential(ens, scale), "ks_exponential")
        indep = _safe_report(lambda: independence_test(ens), "independence")
        inner = inner_section_ensemble(logs, eps, j, ens.edges, delta)
        inner_limit = inner_exit_time(graph, scaling, eps, j, delta)
        for k in ens.edges:
            f = dist[k]
            rows.append(
                {
                    "epsilon": eps,
                    "edge": k,
                    "level": levels[k],
                    "empirical_p": f.frequency,
                    "wilson_lo": f.low,
                    "wilson_hi": f.high,
                    "limit_p": target[k],
                    "mean_time": mean,
                    "se": se,
                    "limit_scale": scale,
                    "ratio": mean / scale,
                    "ks_d": ks.statistic if ks else math.nan,
                    "chi2_p": indep.p_value if indep else math.nan,
                    "mean_cycles": mean_cycles,
                    "limit_cycles": 1.0 / escape,
                    "n": len(uncensored),
                    "censored": ens.censored,
                }
            )
        plot_rows.append(
            {"epsilon": eps, "ratio": mean / scale, "ratio_se": se / scale,
             "ks_d": ks.statistic if ks else math.nan, "n": len(uncensored)}
        )
        for rep in (
            place_report(ens, target),
            ks,
            indep,
            _safe_report(lambda: conditional_means_report(ens), "conditional_means"),
            _safe_report(
                lambda: inner_exit_report(inner, inner_exit_probability(graph, j), inner_limit),
                "inner_exit_place",
            ),
        ):
            if rep is not None:
                tests.append({"epsilon": eps, **rep.as_row()})
                run.record(eps, rep.as_row())

    if len(cfg.epsilons) > 1:
        eps_min = min(cfg.epsilons)
        ratios = {r["epsilon"]: r["ratio"] for r in plot_rows}
        distances = {r["epsilon"]: r["ks_d"] for r in plot_rows}
        for rep in (
            _safe_report(lambda: exit_ratio_trend(ratios), "exit_ratio_trend"),
            _safe_report(lambda: shrinking_trend("ks_trend", distances), "ks_trend"),
        ):
            if rep is not None:
                tests.append({"epsilon": eps_min, **rep.as_row()})
                run.record(eps_min, rep.as_row())

    report_writer.write_csv(rows, run.out_dir, "exit_stats.csv", run.config_hash)
    report_writer.write_csv(tests, run.out_dir, "exit_stats_tests.csv", run.config_hash)
    report_writer.write_tsv(plot_rows, run.out_dir, "exit_ratio.tsv", run.config_hash)
    if p.event_log:
        report_writer.write_csv(events, run.out_dir, "exit_events.csv", run.config_hash)
    print(report_writer.text_summary(tests))


def cmd_metastable(run: Run) -> None:
    cfg = run.cfg
    _require_kind(cfg, "metastable")
    p = cfg.params
    graph, scaling = cfg.build_graph(), cfg.build_scaling()
    sim = cfg.simulation_config(run.seed)
    ladder = timescale_ladder(scaling)
    x = _graph_point(graph, p.start)
    chain = intermediate_chain(graph, scaling, p.chain)
    dist = absorption_distribution(chain)
    mu_x = mu_extended(dist, graph, x)
    report_writer.write_matrix(dist.to_frame(), run.out_dir, f"mu_{p.chain}.csv", run.config_hash)

    rows = []
    for eps in cfg.epsilons:
        domain = build_domain(graph, scaling, eps)
        t = intermediate_time(ladder, p.chain, eps) if p.time == AUTO else p.time
        logger.info("metastable: eps=%g, chain %d, t=%.4g, x=%s", eps, p.chain, t, p.start.label())
        start = _start_rule(domain, x, p.fiber, run.seed)
        worst_censoring = 0.0
        for name in p.observables:
            obs = _observable(graph, name)
            mc = mc_observable(domain, start, t, obs, p.trajectories, sim, run.workers)
            worst_censoring = max(worst_censoring, mc.censoring_rate)
            rep = report(f"metastable-{p.chain}", obs, mc, predict_intermediate(graph, scaling, p.chain, x, obs))
            rows.append(_prediction_row(eps, rep, chain=p.chain, x=p.start.label(), t=t))
            run.record(eps, _prediction_ledger_row(rep, f"mc:{obs.name}"))

        late, law = absorption_check(domain, p.chain, start, t, p.trajectories, sim, run.workers)
        run.record(eps, late.as_row())
        for j, freq in law.items():
            rows.append(
                {"epsilon": eps, "chain": p.chain, "x": p.start.label(), "t": t,
                 "observable": f"hit:O{j}", "mc_estimate": freq, "se": math.nan,
                 "limit": mu_x[j - 1], "discrepancy_se": math.nan, "tolerance": math.nan,
                 "n": late.sample_size, "censored": late.censored, "verdict": "info"}
            )
        rows.append(
            {"epsilon": eps, "chain": p.chain, "x": p.start.label(), "t": t,
             "observable": "late_absorption", "mc_estimate": late.statistic, "se": math.nan,
             "limit": 0.0, "discrepancy_se": math.nan, "tolerance": late.threshold,
             "n": late.sample_size, "censored": late.censored, "verdict": late.verdict}
        )
        run.censoring(eps, worst_censoring)

    report_writer.write_csv(rows, run.out_dir, "metastable.csv", run.config_hash)


def _ctmc_levels(domain: TubeDomain, j1: int, rule: str):
    return collar_adjusted_levels(domain, j1) if rule == AUTO else None


def cmd_ctmc_compare(run: Run) -> None:
    cfg = run.cfg
    _require_kind(cfg, "ctmc-compare")
    p = cfg.params
    graph, scaling = cfg.build_graph(), cfg.build_scaling()
    sim = cfg.simulation_config(run.seed)
    ladder = timescale_ladder(scaling)
    j1 = minimal_vertex(scaling)
    x = _graph_point(graph, p.start)

    rows = []
    for eps in cfg.epsilons:
        domain = build_domain(graph, scaling, eps)
        levels = _ctmc_levels(domain, j1, p.levels)
        ctmc = ctmc_build(graph, scaling, levels)
        used = levels if levels is not None else {k: graph.edge(k).length for k in graph.incident(j1)}
        rate = kappa(graph, j1, used)
        t1 = ladder.timescale(1, eps)
        start = _start_rule(domain, x, "axis", run.seed)
        report_writer.write_matrix(
            law_frame(ctmc, max(p.s)), run.out_dir, f"ctmc_law_eps{eps:g}.csv", run.config_hash
        )
        worst_censoring = 0.0
        for s in p.s:
            logger.info("ctmc-compare: eps=%g, s=%g (t=%.4g), kappa=%.4g", eps, s, s * t1, rate)
            for name in p.observables:
                obs = _observable(graph, name)
                mc = mc_observable(domain, start, s * t1, obs, p.trajectories, sim, run.workers)
                worst_censoring = max(worst_censoring, mc.censoring_rate)
                limit = predict_first_critical(graph, scaling, levels, x, s, obs)
                rep = report("ctmc-compare", obs, mc, limit, floor=CTMC_FLOOR)
                rows.append(
                    _prediction_row(eps, rep, s=s, x=p.start.label(), kappa=rate,
                                    exp_kappa_s=math.exp(-rate * s))
                )
                run.record(eps, _prediction_ledger_row(rep, f"ctmc:{obs.name}@s={s:g}"))
            if p.localization_delta_fraction is not None:
                delta = p.localization_delta_fraction * min(used.values())
                loc = localization_check(domain, j1, s, delta, p.trajectories, sim, run.workers)
                run.record(eps, loc.as_row())
                rows.append(
                    {"epsilon": eps, "s": s, "x": p.start.label(), "kappa": rate,
                     "exp_kappa_s": math.exp(-rate * s), "observable": "localization",
                     "mc_estimate": loc.statistic, "se": math.nan, "limit": 0.0,
                     "discrepancy_se": math.nan, "tolerance": loc.threshold,
                     "n": loc.sample_size, "censored": loc.censored, "verdict": loc.verdict}
                )
        run.censoring(eps, worst_censoring)

    report_writer.write_csv(rows, run.out_dir, "ctmc_compare.csv", run.config_hash)


def _pde_time(rule: Any, ladder, eps: float) -> tuple[float, str]:
    if isinstance(rule, str) and rule.startswith("intermediate:"):
        i = int(rule.split(":", 1)[1])
        return intermediate_time(ladder, i, eps), rule
    if isinstance(rule, str) and rule.startswith("critical:"):
        return float(rule.split(":", 1)[1]) * ladder.timescale(1, eps), rule
    return float(rule), f"{float(rule):g}"


def cmd_pde(run: Run) -> None:
    cfg = run.cfg
    _require_kind(cfg, "pde")
    p = cfg.params
    graph, scaling = cfg.build_graph(), cfg.build_scaling()
    sim = cfg.simulation_config(run.seed)
    ladder = timescale_ladder(scaling)
    x = _graph_point(graph, p.start)

    rows = []
    for eps in cfg.epsilons:
        domain = build_domain(graph, scaling, eps)
        start = _start_rule(domain, x, p.fiber, run.seed)
        worst_censoring = 0.0
        for rule in p.times:
            t, label = _pde_time(rule, ladder, eps)
            for name in p.observables:
                obs = _observable(graph, name)
                if label.startswith("intermediate:"):
                    limit = predict_intermediate(graph, scaling, int(label.split(":")[1]), x, obs)
                elif label.startswith("critical:"):
                    j1 = minimal_vertex(scaling)
                    limit = predict_first_critical(
                        graph, scaling, collar_adjusted_levels(domain, j1), x,
                        float(label.split(":")[1]), obs,
                    )
                elif obs.is_constant:
                    limit = obs.values[0]
                else:
                    limit = math.nan
                logger.info("pde: eps=%g, t=%s (%.4g), data %s", eps, label, t, obs.name)
                mc = pde_solution(domain, start, t, obs, p.trajectories, sim, run.workers)
                worst_censoring = max(worst_censoring, mc.censoring_rate)
                if math.isnan(limit):
                    rows.append(
                        {"epsilon": eps, "t_rule": label, "t": t, "z": p.start.label(),
                         "observable": obs.name, "mc_estimate": mc.estimate, "se": mc.se,
                         "limit": limit, "discrepancy_se": math.nan, "tolerance": math.nan,
                         "n": mc.n, "censored": mc.censored, "verdict": "info"}
                    )
                    continue
                rep = report("pde", obs, mc, limit)
                rows.append(_prediction_row(eps, rep, t_rule=label, t=t, z=p.start.label()))
                run.record(eps, _prediction_ledger_row(rep, f"pde:{obs.name}@{label}"))
        run.censoring(eps, worst_censoring)

    report_writer.write_csv(rows, run.out_dir, "pde.csv", run.config_hash)


def cmd_localization(run: Run) -> None:
    cfg = run.cfg
    _require_kind(cfg, "localization")
    p = cfg.params
    graph, scaling = cfg.build_graph(), cfg.build_scaling()
    sim = cfg.simulation_config(run.seed)
    j1 = p.vertex if p.vertex is not None else minimal_vertex(scaling)

    rows, trends = [], []
    for eps in cfg.epsilons:
        domain = build_domain(graph, scaling, eps)
        delta = p.delta_fraction * min(collar_adjusted_levels(domain, j1).values())
        for s in p.s:
            rep = localization_check(domain, j1, s, delta, p.trajectories, sim, run.workers)
            rows.append({"epsilon": eps, "s": s, "delta": delta, **rep.as_row()})
            run.record(eps, rep.as_row())
            run.censoring(eps, rep.censored / max(rep.sample_size + rep.censored, 1))

    if len(cfg.epsilons) > 1:
        eps_min = min(cfg.epsilons)
        for s in p.s:
            probabilities = {r["epsilon"]: r["statistic"] for r in rows if r["s"] == s}
            rep = _safe_report(
                lambda: shrinking_trend(f"localization_trend:s={s:g}", probabilities),
                "localization_trend",
            )
            if rep is not None:
                trends.append({"epsilon": eps_min, "s": s, "delta": math.nan, **rep.as_row()})
                run.record(eps_min, rep.as_row())

    report_writer.write_csv(rows + trends, run.out_dir, "localization.csv", run.config_hash)
    report_writer.write_tsv(
        [{"epsilon": r["epsilon"], "s": r["s"], "probability": r["statistic"]} for r in rows],
        run.out_dir, "localization.tsv", run.config_hash,
    )


def cmd_analytic(run: Run) -> None:
    reports = analytic_checks.run_all(seed=run.seed)
    rows = [{"epsilon": math.nan, **rep.as_row()} for rep in reports]
    for rep in reports:
        run.record(math.nan, rep.as_row())
    report_writer.write_csv(rows, run.out_dir, "analytic.csv", run.config_hash)
    print(report_writer.text_summary(rows))


COMMANDS = {
    "exit-stats": cmd_exit_stats,
    "metastable": cmd_metastable,
    "ctmc-compare": cmd_ctmc_compare,
    "pde": cmd_pde,
    "localization": cmd_localization,
    "analytic": cmd_analytic,
}


# ---------------------------------------------------------------------------
# Main dispatcher
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="experiment_dispatcher",
        description="Reflected Brownian motion in narrow tubes: simulation vs limit models.",
    )
    parser.add_argument("command", choices=["validate", *COMMANDS])
    parser.add_argument("--config", help="experiment YAML (not needed for 'analytic')")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--strict", action="store_true", help="exit 5 if any verdict fails")
    return parser


def run_command(args: argparse.Namespace) -> int:
    cfg = None
    if args.command != "analytic" or args.config:
        if not args.config:
            raise ConfigError(f"--config is required for '{args.command}'")
        cfg = load_config(args.config)
    if args.command == "validate":
        return cmd_validate(cfg, args)

    run = _open_run(args.command, cfg, args)
    code = 0
    try:
        COMMANDS[args.command](run)
        if run.failures:
            logger.warning("%d verdict(s) did not pass", run.failures)
            if args.strict:
                raise AcceptanceFailure(f"{run.failures} verdict(s) did not pass")
    except TubeSimError as exc:
        code = exc.exit_code
        raise
    finally:
        _close_run(run, code)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(logging.DEBUG if args.verbose else logging.INFO)

    logger.info("=============================================")
    logger.info(" tubesim - %s", args.command)
    logger.info("=============================================")

    try:
        return run_command(args)
    except AcceptanceFailure as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except TubeSimError as exc:
        logger.exception("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


# ---------------------------------------------------------------------------

if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nExperiment dispatcher stopped by user.\n")
        sys.exit(130)
