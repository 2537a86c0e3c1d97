"""
One handler per subcommand: build inputs from the run config, call the service, write outputs.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List

from semzk.models.carleman import LowerOrderTerms
from semzk.models.run_config import (
    AnnulusSection,
    ApSection,
    CarlemanSection,
    CommutatorSection,
    InterpolationSection,
    PersistenceSection,
    RieszSection,
    RunConfig,
)
from semzk.models.solver import SolverConfig
from semzk.models.uniqueness import ExperimentConfig, Window
from semzk.services import carleman as carleman_service
from semzk.services import reports
from semzk.services import riesz_ops
from semzk.services import sem_solver
from semzk.services import uniqueness_experiments
from semzk.services.initial_data import build_initial_field
from semzk.services.snapshot_io import read_trajectory
from semzk.utils.error_handlers import ValidationError

logger = logging.getLogger(__name__)

Handler = Callable[[RunConfig, Path], List[Path]]


def run_simulate(cfg: RunConfig, out: Path) -> List[Path]:
    solver = SolverConfig(
        model=cfg.model,
        grid=cfg.grid,
        dt=cfg.dt,
        t_end=cfg.t_end,
        snapshot_every=cfg.snapshot_every,
        dealias=cfg.dealias,
        strict=cfg.strict,
        allow_large_dt=cfg.allow_large_dt,
    )
    trajectory = sem_solver.evolve(build_initial_field(cfg.grid, cfg.initial_data), solver)
    written = reports.write_trajectory(trajectory, out)
    written.append(reports.write_invariants_csv(trajectory, out / "invariants.csv"))
    report = sem_solver.simulation_report(trajectory, seed=cfg.seed)
    written.append(reports.write_json(report, out / "run_report.json"))
    return written


def run_riesz_check(cfg: RunConfig, out: Path) -> List[Path]:
    section = cfg.riesz or RieszSection()
    report = riesz_ops.riesz_check(cfg.grid, kind=section.kind, p=section.p, budget=section.budget,
                                   seed=cfg.seed, fields=section.fields, workers=section.workers)
    return [reports.write_json(report, out / "riesz_report.json")]


def run_ap_check(cfg: RunConfig, out: Path) -> List[Path]:
    section = cfg.ap or ApSection()
    report = riesz_ops.ap_check(cfg.grid, p=section.p, R=section.R, alpha=section.alpha, r=section.r,
                                t=section.t, stride=section.stride, refine=section.refine,
                                fields=section.fields, budget=section.budget, operator=section.operator,
                                seed=cfg.seed, workers=section.workers)
    return [reports.write_json(report, out / "ap_report.json")]


def run_carleman_check(cfg: RunConfig, out: Path) -> List[Path]:
    section = cfg.carleman or CarlemanSection()
    params = carleman_service.make_params(section.R, alpha=section.alpha, r=section.r, factor=section.factor)
    report = carleman_service.carleman_sweep(
        params,
        count=section.count,
        seed=cfg.seed,
        representation=section.representation,
        coeffs=section.lower_order or LowerOrderTerms(),
        workers=section.workers,
    )
    return [reports.write_json(report, out / "carleman_report.json")]


def run_commutator_check(cfg: RunConfig, out: Path) -> List[Path]:
    section = cfg.commutator or CommutatorSection()
    params = carleman_service.make_params(section.R, alpha=section.alpha, r=section.r, factor=section.factor)
    report = carleman_service.commutator_check(params, count=section.count, seed=cfg.seed, workers=section.workers)
    return [reports.write_json(report, out / "commutator_report.json")]


def run_persistence_check(cfg: RunConfig, out: Path) -> List[Path]:
    section = cfg.persistence or PersistenceSection()
    report = carleman_service.persistence_check(section.function, section.pairs, seed=cfg.seed,
                                                sigma=section.sigma)
    return [reports.write_json(report, out / "persistence_report.json")]


def run_interp_check(cfg: RunConfig, out: Path) -> List[Path]:
    section = cfg.interpolation or InterpolationSection()
    field = build_initial_field(cfg.grid, cfg.initial_data)
    report = carleman_service.interpolation_check(field, section.thetas, section.beta, section.k, seed=cfg.seed)
    return [reports.write_json(report, out / "interp_report.json")]


def run_annulus_report(cfg: RunConfig, out: Path) -> List[Path]:
    if cfg.annulus is None:
        raise ValidationError("annulus-report needs an 'annulus' section listing snapshot files")
    section: AnnulusSection = cfg.annulus
    trajectory = read_trajectory(section.snapshots)
    profile = uniqueness_experiments.decay_profile(trajectory, section.radii,
                                                   trajectory_id=Path(section.snapshots[0]).parent.name,
                                                   seed=cfg.seed)
    written = [reports.write_annulus_csv(profile, out / "annulus.csv"),
               reports.write_json(profile, out / "annulus_report.json")]
    if section.fit:
        fit = uniqueness_experiments.fit_exponent(profile, Window.INTERVAL, section.convention)
        written.append(reports.write_json(fit, out / "decay_fit.json"))
    return written


def run_uniqueness_experiment(cfg: RunConfig, out: Path) -> List[Path]:
    experiment = cfg.uniqueness or ExperimentConfig()
    if experiment.seed is None:
        experiment = experiment.model_copy(update={"seed": cfg.seed})
    report = uniqueness_experiments.uniqueness_experiment(experiment)
    return [reports.write_json(report, out / "uniqueness_report.json"),
            reports.write_annulus_csv(report.profile, out / "annulus.csv")]


COMMANDS: Dict[str, Handler] = {
    "simulate": run_simulate,
    "riesz-check": run_riesz_check,
    "ap-check": run_ap_check,
    "carleman-check": run_carleman_check,
    "commutator-check": run_commutator_check,
    "persistence-check": run_persistence_check,
    "interp-check": run_interp_check,
    "annulus-report": run_annulus_report,
    "uniqueness-experiment": run_uniqueness_experiment,
}
