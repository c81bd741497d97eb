"""
Experiment runner: algorithm comparisons over a budget schedule, fairness
sweeps and price-of-fairness curves, aggregated over seeded shock batches.

Every (budget level, algorithm[, g]) pair is one cell. Cells of the same
budget level share one shock batch, so algorithms are compared on paired
samples. Cells run in a process pool when more than one worker is allowed
and are merged back in submission order.
"""
import hashlib
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from sqlmodel import Session, SQLModel, create_engine
from tqdm import tqdm

from .bailout import BailoutProblem, SolverReport, allocation_values, brute_force, evaluate_allocation, solve_relaxation
from .config import Config
from .exceptions import ConfigError, DegenerateFairnessError
from .fairness import KINDS as FAIRNESS_KINDS
from .fairness import FairnessSpec, gini, price_of_fairness, property_gini, solve_fair_relaxation, spatial_gini
from .greedy import greedy
from .heuristics import HEURISTICS, heuristic
from .instances import GeneratorSpec, generate
from .models import ResultRow
from .objectives import NAMES as OBJECTIVES
from .objectives import make_objective
from .rounding import round_dependent_best, round_independent
from .shocks import SeededRng, batch_matrix
from .storage import InstanceData, emit_results, instance_digest, load_instance, results_frame
from .telemetry import cell_duration_histogram, tracer

logger = logging.getLogger(__name__)

ALGORITHMS = ("lp", "rounding", "rounding-dep", "greedy", "brute-force") + HEURISTICS
FRACTIONAL = ("lp", "rounding", "rounding-dep")

SHOCK_STREAM = 1
ROUNDING_STREAM = 2
HEURISTIC_STREAM = 3

DEFAULT_ALGORITHMS = ["greedy", "rounding", "wealth-asc", "outdegree", "pagerank", "eigencentrality", "random-perm"]


@dataclass
class ExperimentConfig:
    """
    Settings of one experiment run.

    The budget at level k is ell * k; without k_values the instance's own
    budget is the single level. ell defaults to the largest bailout size.
    """

    instance: Optional[str] = None
    generator: Optional[Dict[str, Any]] = None
    objective: str = "SoP"
    algorithms: List[str] = field(default_factory=lambda: list(DEFAULT_ALGORITHMS))
    ell: Optional[float] = None
    k_values: Optional[List[float]] = None
    m: int = 20
    trials: Optional[int] = None
    overspend: Optional[float] = None
    seed: int = 0
    fairness: str = "GC"
    g_values: List[float] = field(default_factory=list)
    pof_discrete: bool = False
    output: Optional[str] = None
    results_db: Optional[str] = None
    workers: Optional[int] = None
    progress: bool = True
    name: str = "experiment"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if (self.instance is None) == (self.generator is None):
            raise ConfigError("exactly one of instance and generator must be given")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}, expected a subset of {ALGORITHMS}")
        if not self.algorithms:
            raise ConfigError("algorithms list is empty")
        if self.objective not in OBJECTIVES or self.objective == "custom":
            raise ConfigError(f"unknown objective {self.objective!r}")
        if self.k_values is not None and (not self.k_values or any(k < 0 for k in self.k_values)):
            raise ConfigError("k_values must be a non-empty list of non-negative numbers")
        if self.ell is not None and self.ell <= 0:
            raise ConfigError("ell must be positive")
        if self.m < 1:
            raise ConfigError("m must be at least 1")
        if self.fairness not in FAIRNESS_KINDS:
            raise ConfigError(f"unknown fairness kind {self.fairness!r}, expected one of {FAIRNESS_KINDS}")
        if any(g < 0 for g in self.g_values):
            raise ConfigError("fairness bounds g must be non-negative")
        if self.generator is not None and "kind" not in self.generator:
            raise ConfigError("generator needs a kind")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], **overrides) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        merged = dict(data or {})
        merged.update({key: value for key, value in overrides.items() if value is not None})
        unknown = sorted(set(merged) - names)
        if unknown:
            raise ConfigError(f"unknown configuration keys {unknown}")
        return cls(**merged)

    @classmethod
    def from_yaml(cls, path: Union[str, Path], **overrides) -> "ExperimentConfig":
        """Load a YAML file; non-None overrides (the CLI flags) win over file values."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path} does not hold a mapping")
        return cls.from_dict(data, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def run_id(self) -> str:
        keep = {k: v for k, v in self.to_dict().items() if k not in ("output", "results_db", "workers", "progress")}
        return hashlib.md5(json.dumps(keep, sort_keys=True, default=str).encode()).hexdigest()[:12]

    def max_workers(self) -> int:
        return max(1, self.workers if self.workers is not None else Config.MAX_WORKERS)

    def load(self) -> InstanceData:
        if self.instance is not None:
            return load_instance(self.instance)
        spec = GeneratorSpec(self.generator["kind"], dict(self.generator.get("params", {})), int(self.generator.get("seed", self.seed)))
        return generate(spec)

    def instance_name(self) -> str:
        if self.instance is not None:
            return f"{Path(self.instance).name}#{instance_digest(self.instance, 8)}"
        return f"{self.generator['kind']}#{self.generator.get('seed', self.seed)}"

    def budget_levels(self, instance: InstanceData) -> List[Tuple[Optional[float], float]]:
        if self.k_values is None:
            return [(None, instance.budget)]
        ell = float(instance.L.max()) if self.ell is None else self.ell
        return [(float(k), ell * k) for k in self.k_values]


@dataclass(frozen=True)
class Cell:
    experiment: str
    index: int
    k: Optional[float]
    budget: float
    algorithm: str
    g: Optional[float] = None


@dataclass
class ResultsTable:
    run: str
    experiment: str
    rows: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(row["status"] == "error" for row in self.rows)

    def to_frame(self) -> pd.DataFrame:
        return results_frame(self.rows)

    def select(self, algorithm: Optional[str] = None, k: Any = ..., g: Any = ...) -> List[Dict[str, Any]]:
        return [
            row for row in self.rows
            if (algorithm is None or row["algorithm"] == algorithm)
            and (k is ... or row["k"] == k)
            and (g is ... or row["g"] == g)
        ]

    def value(self, algorithm: str, k: Any = ..., g: Any = ..., column: str = "mean"):
        rows = self.select(algorithm, k, g)
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} rows match ({algorithm}, k={k}, g={g})")
        return rows[0][column]

    def emit(self, path: Union[str, Path]):
        emit_results(self, path)

    def persist(self, db_file: str):
        """Append the rows to a SQLite results store."""
        engine = create_engine(f"sqlite:///{db_file}")
        SQLModel.metadata.create_all(engine)
        created = datetime.now()
        with Session(engine) as session:
            session.add_all([ResultRow(**row, created=created) for row in self.rows])
            session.commit()


def shock_batch(config: ExperimentConfig, instance: InstanceData, index: int) -> np.ndarray:
    """The batch shared by every cell of budget level index."""
    m = 1 if instance.shock.deterministic else config.m
    return batch_matrix(instance.shock, SeededRng(config.seed, SHOCK_STREAM).child(index), m)


def _coefficients(z: np.ndarray, instance: InstanceData) -> Dict[str, Optional[float]]:
    out: Dict[str, Optional[float]] = {"gc": None, "pgc": None, "sgc": None}
    try:
        out["gc"] = gini(z, instance.L)
        out["sgc"] = spatial_gini(z, instance.L, instance.net)
        if instance.q is not None:
            out["pgc"] = property_gini(z, instance.L, instance.q)
    except DegenerateFairnessError:
        pass
    return out


def _fractional(prob: BailoutProblem, X: np.ndarray, config: ExperimentConfig, cell: Cell, spec: Optional[FairnessSpec]):
    rng = SeededRng(config.seed, ROUNDING_STREAM).child(cell.index)
    solver = prob.for_solver()
    values, allocations, bounds = [], [], []
    for s in range(X.shape[1]):
        x = X[:, s]
        relaxed = solve_relaxation(solver, x) if spec is None else solve_fair_relaxation(solver, spec, x)
        if cell.algorithm == "lp":
            allocation = relaxed.allocation
        elif cell.algorithm == "rounding":
            allocation = round_independent(relaxed.allocation, solver, rng.child(s), config.trials, config.overspend, x)
        else:
            allocation = round_dependent_best(relaxed.allocation, solver, rng.child(s), config.trials, config.overspend, x)
        values.append(allocation_values(prob, allocation.z, x[:, None])[0, 0])
        allocations.append(allocation)
        bounds.append(relaxed.opt_r)
    return SolverReport.from_values(
        values,
        allocations=tuple(allocations),
        opt_r=float(np.mean(bounds)),
        seed=config.seed,
        algorithm=cell.algorithm,
    )


def _discrete(prob: BailoutProblem, X: np.ndarray, config: ExperimentConfig, cell: Cell) -> SolverReport:
    if cell.algorithm == "greedy":
        allocation = greedy(prob, X)
    elif cell.algorithm == "brute-force":
        allocation, _ = brute_force(prob, X)
    else:
        allocation = heuristic(cell.algorithm, prob, SeededRng(config.seed, HEURISTIC_STREAM).child(cell.index))
    return evaluate_allocation(prob, allocation, X, seed=config.seed, algorithm=cell.algorithm)


def run_cell(config: ExperimentConfig, instance: InstanceData, cell: Cell, run: str = "", name: str = "") -> Dict[str, Any]:
    """Compute one cell; failures become a row with status "error"."""
    start_time = time.time()
    row: Dict[str, Any] = {
        "run": run,
        "experiment": cell.experiment,
        "instance": name,
        "algorithm": cell.algorithm,
        "k": cell.k,
        "budget": float(cell.budget),
        "g": cell.g,
        "seed": config.seed,
        "m": 0,
        "status": "ok",
        "message": "",
    }
    with tracer.start_as_current_span("experiment_cell") as span:
        span.set_attribute("cell.algorithm", cell.algorithm)
        span.set_attribute("cell.budget", float(cell.budget))
        try:
            obj = make_objective(config.objective, instance.net, strict=cell.algorithm in FRACTIONAL + ("pof",))
            prob = instance.problem(obj, cell.budget)
            X = shock_batch(config, instance, cell.index)
            row["m"] = X.shape[1]
            spec = None if cell.g is None else FairnessSpec(config.fairness, cell.g, instance.q)

            if cell.algorithm == "pof":
                pof = price_of_fairness(prob, spec, samples=X, discrete=config.pof_discrete)
                row["pof"] = float(pof)
                if math.isinf(pof):
                    row["status"] = "infinite"
                    row["message"] = f"{spec.kind}-constrained optimum is zero"
            else:
                if cell.algorithm in FRACTIONAL:
                    report = _fractional(prob, X, config, cell, spec)
                    z = np.mean([a.z for a in report.allocations], axis=0)
                    spent = float(np.mean([a.spent for a in report.allocations]))
                else:
                    report = _discrete(prob, X, config, cell)
                    z = report.allocation.z
                    spent = report.allocation.spent
                row.update(mean=report.mean, std=report.std, opt_r=report.opt_r, spent=spent)
                row.update(_coefficients(z, instance))
                warnings = {a.warning for a in report.allocations if a.warning}
                if report.allocation is not None and report.allocation.warning:
                    warnings.add(report.allocation.warning)
                row["message"] = "; ".join(sorted(warnings))
        except Exception as e:
            logger.exception("(%s) [%s]", e.__class__.__name__, e)
            row["status"] = "error"
            row["message"] = f"{e.__class__.__name__}: {e}"

    row["wall_time"] = time.time() - start_time
    cell_duration_histogram.record(row["wall_time"], {"algorithm": cell.algorithm, "status": row["status"]})
    return row


def _run_task(task) -> Dict[str, Any]:
    return run_cell(*task)


def run_cells(config: ExperimentConfig, instance: InstanceData, cells: List[Cell], experiment: str) -> ResultsTable:
    table = ResultsTable(run=config.run_id(), experiment=experiment)
    name = config.instance_name()
    tasks = [(config, instance, cell, table.run, name) for cell in cells]
    workers = min(config.max_workers(), len(tasks))
    logger.info("Running %d %s cells on %s with %d worker(s)", len(tasks), experiment, name, workers)

    with tqdm(total=len(tasks), desc=experiment, unit="cell", file=sys.stderr, disable=not config.progress) as progress:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = [executor.submit(_run_task, task) for task in tasks]
                for _ in as_completed(futures):
                    progress.update(1)
                table.rows = [future.result() for future in futures]
        else:
            for task in tasks:
                table.rows.append(_run_task(task))
                progress.update(1)

    if table.failures:
        logger.warning("%d of %d %s cells failed", table.failures, len(tasks), experiment)
    if config.output:
        table.emit(config.output)
    db_file = config.results_db or Config.RESULTS_DB
    if db_file:
        table.persist(db_file)
    return table


def _fill_upper_bound(table: ResultsTable):
    """Copy the relaxation optimum of each budget level into the opt_r column of its rows."""
    bounds = {(row["k"], row["budget"]): row["opt_r"] for row in table.rows if row["algorithm"] == "lp" and row["status"] == "ok"}
    for row in table.rows:
        if row.get("opt_r") is None:
            row["opt_r"] = bounds.get((row["k"], row["budget"]))


def run_comparison(config: ExperimentConfig, instance: Optional[InstanceData] = None) -> ResultsTable:
    """Every configured algorithm at every budget level, plus the relaxation optimum."""
    instance = instance or config.load()
    algorithms = list(dict.fromkeys(config.algorithms))
    if "lp" not in algorithms:
        algorithms.insert(0, "lp")
    cells = [
        Cell("comparison", index, k, budget, algorithm)
        for index, (k, budget) in enumerate(config.budget_levels(instance))
        for algorithm in algorithms
    ]
    with tracer.start_as_current_span("run_comparison"):
        table = run_cells(config, instance, cells, "comparison")
    _fill_upper_bound(table)
    return table


def run_fairness_sweep(config: ExperimentConfig, instance: Optional[InstanceData] = None) -> ResultsTable:
    """Unconstrained and g-constrained relaxations and roundings at every budget level."""
    if not config.g_values:
        raise ConfigError("fairness sweep needs g_values")
    instance = instance or config.load()
    algorithms = [a for a in config.algorithms if a in FRACTIONAL] or ["lp"]
    if "lp" not in algorithms:
        algorithms.insert(0, "lp")
    cells = []
    for index, (k, budget) in enumerate(config.budget_levels(instance)):
        for g in [None] + sorted(config.g_values):
            cells.extend(Cell("fairness", index, k, budget, algorithm, g) for algorithm in algorithms)
    with tracer.start_as_current_span("run_fairness_sweep"):
        return run_cells(config, instance, cells, "fairness")


def run_pof_curve(config: ExperimentConfig, instance: Optional[InstanceData] = None) -> ResultsTable:
    """Price of fairness for every (budget level, g); infinite values are marked in the status column."""
    if not config.g_values:
        raise ConfigError("price-of-fairness curve needs g_values")
    instance = instance or config.load()
    cells = [
        Cell("pof", index, k, budget, "pof", g)
        for index, (k, budget) in enumerate(config.budget_levels(instance))
        for g in sorted(config.g_values)
    ]
    with tracer.start_as_current_span("run_pof_curve"):
        return run_cells(config, instance, cells, "pof")
