import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
import yaml

from .bailout import brute_force, evaluate_allocation, solve_relaxation
from .config import Config
from .exceptions import PyBailoutError
from .experiment import ALGORITHMS, ExperimentConfig, ResultsTable, run_comparison, run_fairness_sweep, run_pof_curve
from .greedy import greedy
from .heuristics import HEURISTICS, heuristic
from .instances import KINDS as GENERATORS
from .instances import GeneratorSpec, generate
from .network import clear_fixed_point
from .objectives import LINEAR_KINDS, make_objective
from .rounding import round_dependent_best, round_independent
from .shocks import SeededRng, batch_matrix
from .spectral import conductance, hadamard_power
from .storage import load_instance, save_instance
from .telemetry import setup_telemetry
from .utls import default_logger

app = typer.Typer(help="Bailout allocation in Eisenberg-Noe financial networks.")

EXIT_CONFIG = 2
EXIT_PARTIAL = 3


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, "--log-level", help="Overrides LOG_LEVEL")):
    if log_level:
        Config.LOG_LEVEL = log_level.upper()
    default_logger("pybailout")
    setup_telemetry()


def _floats(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    return [float(part) for part in text.split(",") if part.strip()]


def _names(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [part.strip() for part in text.split(",") if part.strip()]


def _params(pairs: List[str]) -> Dict[str, Any]:
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise typer.BadParameter(f"expected key=value, got {pair!r}")
        params[key.strip()] = yaml.safe_load(value)
    return params


def _fail(e: Exception):
    typer.echo(f"error: {e}", err=True)
    raise typer.Exit(code=EXIT_CONFIG)


def _echo_json(data):
    typer.echo(json.dumps(data, indent=2, default=float))


def _finish(table: ResultsTable):
    frame = table.to_frame()
    typer.echo(frame[["algorithm", "k", "g", "mean", "std", "opt_r", "pof", "status"]].to_string(index=False))
    if table.failures:
        typer.echo(f"{table.failures} cell(s) failed, see {Config.LOG_FILE}", err=True)
        raise typer.Exit(code=EXIT_PARTIAL)


def _experiment_config(config_file: Optional[Path], **overrides) -> ExperimentConfig:
    if config_file is not None:
        return ExperimentConfig.from_yaml(config_file, **overrides)
    return ExperimentConfig.from_dict({}, **overrides)


@app.command()
def clear(
    instance: Path = typer.Argument(..., help="Instance file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed of the shock draw when the instance shock is random"),
    objective: str = typer.Option("SoP", "--objective", "-O", help=f"One of {LINEAR_KINDS + ('AS',)}"),
):
    """
    Clear the network under its shock and report payments and defaults.
    """
    try:
        data = load_instance(instance)
        x = batch_matrix(data.shock, SeededRng(seed or 0), 1)[:, 0]
        result = clear_fixed_point(data.net, x)
        value = float(make_objective(objective, data.net, strict=False).values(data.net, result.pbar))
    except (PyBailoutError, ValueError, OSError) as e:
        _fail(e)
    _echo_json({
        "pbar": result.pbar.tolist(),
        "defaults": result.defaults.tolist(),
        "solvents": result.solvents.tolist(),
        "iterations": result.iterations,
        "residual": result.residual,
        objective: value,
    })


@app.command()
def optimize(
    instance: Path = typer.Argument(..., help="Instance file"),
    algorithm: str = typer.Option("greedy", "--algorithm", "-a", help=f"One of {ALGORITHMS}"),
    budget: Optional[float] = typer.Option(None, "--budget", "-b", help="Overrides the instance budget"),
    objective: str = typer.Option("SoP", "--objective", "-O"),
    m: int = typer.Option(20, "--samples", "-m", help="Shock samples for random shock distributions"),
    seed: int = typer.Option(0, "--seed"),
    trials: Optional[int] = typer.Option(None, "--trials", "-T", help="Rounding trials"),
):
    """
    Compute one bailout allocation and evaluate it over a shock batch.
    """
    try:
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        data = load_instance(instance)
        prob = data.problem(make_objective(objective, data.net, strict=algorithm in ("lp", "rounding", "rounding-dep")), budget)
        X = batch_matrix(data.shock, SeededRng(seed, 1), 1 if data.shock.deterministic else m)
        rng = SeededRng(seed, 2)
        if algorithm == "greedy":
            allocation = greedy(prob, X)
        elif algorithm == "brute-force":
            allocation, _ = brute_force(prob, X)
        elif algorithm in HEURISTICS:
            allocation = heuristic(algorithm, prob, SeededRng(seed, 3))
        else:
            # fractional algorithms act on the first shock of the batch
            solver = prob.for_solver()
            relaxed = solve_relaxation(solver, X[:, 0])
            if algorithm == "lp":
                allocation = relaxed.allocation
            elif algorithm == "rounding":
                allocation = round_independent(relaxed.allocation, solver, rng, trials, x=X[:, 0])
            else:
                allocation = round_dependent_best(relaxed.allocation, solver, rng, trials, x=X[:, 0])
            X = X[:, :1]
        report = evaluate_allocation(prob, allocation, X, seed=seed, algorithm=algorithm)
    except (PyBailoutError, ValueError, OSError) as e:
        _fail(e)
    _echo_json({
        "algorithm": algorithm,
        "selected": allocation.selected.tolist(),
        "z": allocation.z.tolist(),
        "spent": allocation.spent,
        "feasible": allocation.feasible,
        "mean": report.mean,
        "std": report.std,
        "m": int(X.shape[1]),
        "wall_time": round(report.wall_time, 6),
        "warning": allocation.warning,
    })


def _sweep_options(config_file, instance, generator, params, seed, algorithms, objective, k_values, ell, m, workers, output, **extra):
    overrides = dict(
        instance=str(instance) if instance else None,
        generator={"kind": generator, "params": _params(params), "seed": seed or 0} if generator else None,
        seed=seed,
        algorithms=_names(algorithms),
        objective=objective,
        k_values=_floats(k_values),
        ell=ell,
        m=m,
        workers=workers,
        output=str(output) if output else None,
    )
    overrides.update(extra)
    return _experiment_config(config_file, **overrides)


CONFIG_OPTION = typer.Option(None, "--config", "-c", help="YAML experiment configuration; flags override it")
INSTANCE_OPTION = typer.Option(None, "--instance", "-i", help="Instance file")
GENERATOR_OPTION = typer.Option(None, "--generator", "-g", help=f"Generator kind, one of {GENERATORS}")
PARAM_OPTION = typer.Option([], "--param", "-p", help="Generator parameter key=value, repeatable")


@app.command("sweep-budget")
def sweep_budget(
    config_file: Optional[Path] = CONFIG_OPTION,
    instance: Optional[Path] = INSTANCE_OPTION,
    generator: Optional[str] = GENERATOR_OPTION,
    params: List[str] = PARAM_OPTION,
    seed: Optional[int] = typer.Option(None, "--seed"),
    algorithms: Optional[str] = typer.Option(None, "--algorithms", "-a", help="Comma separated algorithm names"),
    objective: Optional[str] = typer.Option(None, "--objective", "-O"),
    k_values: Optional[str] = typer.Option(None, "--k-values", help="Comma separated budget levels k, budget = ell * k"),
    ell: Optional[float] = typer.Option(None, "--ell"),
    m: Optional[int] = typer.Option(None, "--samples", "-m"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Results CSV, appended"),
):
    """
    Compare algorithms over a budget schedule.
    """
    try:
        config = _sweep_options(config_file, instance, generator, params, seed, algorithms, objective, k_values, ell, m, workers, output)
        table = run_comparison(config)
    except (PyBailoutError, ValueError, OSError) as e:
        _fail(e)
    _finish(table)


@app.command("sweep-fairness")
def sweep_fairness(
    config_file: Optional[Path] = CONFIG_OPTION,
    instance: Optional[Path] = INSTANCE_OPTION,
    generator: Optional[str] = GENERATOR_OPTION,
    params: List[str] = PARAM_OPTION,
    seed: Optional[int] = typer.Option(None, "--seed"),
    algorithms: Optional[str] = typer.Option(None, "--algorithms", "-a"),
    objective: Optional[str] = typer.Option(None, "--objective", "-O"),
    k_values: Optional[str] = typer.Option(None, "--k-values"),
    ell: Optional[float] = typer.Option(None, "--ell"),
    m: Optional[int] = typer.Option(None, "--samples", "-m"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
    fairness: Optional[str] = typer.Option(None, "--fairness", "-f", help="GC, PGC or SGC"),
    g_values: Optional[str] = typer.Option(None, "--g-values", help="Comma separated fairness bounds"),
):
    """
    Fairness-constrained relaxations and roundings for each bound g.
    """
    try:
        config = _sweep_options(
            config_file, instance, generator, params, seed, algorithms, objective, k_values, ell, m, workers, output,
            fairness=fairness, g_values=_floats(g_values),
        )
        table = run_fairness_sweep(config)
    except (PyBailoutError, ValueError, OSError) as e:
        _fail(e)
    _finish(table)


@app.command("pof-curve")
def pof_curve(
    config_file: Optional[Path] = CONFIG_OPTION,
    instance: Optional[Path] = INSTANCE_OPTION,
    generator: Optional[str] = GENERATOR_OPTION,
    params: List[str] = PARAM_OPTION,
    seed: Optional[int] = typer.Option(None, "--seed"),
    objective: Optional[str] = typer.Option(None, "--objective", "-O"),
    k_values: Optional[str] = typer.Option(None, "--k-values"),
    ell: Optional[float] = typer.Option(None, "--ell"),
    m: Optional[int] = typer.Option(None, "--samples", "-m"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
    fairness: Optional[str] = typer.Option(None, "--fairness", "-f"),
    g_values: Optional[str] = typer.Option(None, "--g-values"),
    discrete: bool = typer.Option(False, "--discrete", help="Brute-force integral optima instead of relaxations"),
):
    """
    Price of fairness as a function of the bound g.
    """
    try:
        config = _sweep_options(
            config_file, instance, generator, params, seed, None, objective, k_values, ell, m, workers, output,
            fairness=fairness, g_values=_floats(g_values), pof_discrete=discrete or None,
        )
        table = run_pof_curve(config)
    except (PyBailoutError, ValueError, OSError) as e:
        _fail(e)
    _finish(table)


@app.command("gen-instance")
def gen_instance(
    kind: str = typer.Argument(..., help=f"One of {GENERATORS}"),
    output: Path = typer.Option(..., "--output", "-o", help="Instance file to write"),
    params: List[str] = PARAM_OPTION,
    seed: int = typer.Option(0, "--seed"),
):
    """
    Write a generated instance to an instance file.
    """
    try:
        instance = generate(GeneratorSpec(kind, _params(params), seed))
        save_instance(instance, output)
    except (PyBailoutError, ValueError, OSError) as e:
        _fail(e)
    typer.echo(f"{output}: n = {instance.net.n}, beta_max = {instance.net.beta_max:.6g}")


@app.command()
def spectral(
    instance: Path = typer.Argument(..., help="Instance file"),
    power: int = typer.Option(1, "--power", help="Elementwise power of the relative liability matrix"),
    normalization: str = typer.Option("volume", "--normalization", help="volume or cardinality"),
):
    """
    Conductance and Laplacian spectrum of the symmetrized relative liability matrix.
    """
    try:
        data = load_instance(instance)
        H = hadamard_power(data.net.dense_A(), power)
        report = conductance(0.5 * (H + H.T), normalization=normalization)
    except (PyBailoutError, ValueError, OSError) as e:
        _fail(e)
    _echo_json({
        "phi": report.phi,
        "lambda2": report.lambda2,
        "normalized_lambda2": report.normalized_lambda2,
        "cut": list(report.cut) if report.cut is not None else None,
        "cheeger": [report.cheeger_lower, report.cheeger_upper],
        "cheeger_holds": report.cheeger_holds if report.phi is not None else None,
        "exact": report.exact,
    })


if __name__ == "__main__":
    app()
