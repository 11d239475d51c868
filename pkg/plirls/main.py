__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Annotated, List, Optional, Tuple, get_args

import typer

from plirls.checks.suites import run_checks
from plirls.config.config import c
from plirls.core.solver import Status
from plirls.core.trace import plot_data_text, read_trace
from plirls.exceptions import ConfigError, InstanceError, PlirlsError, SolverError
from plirls.generate import generate_instance
from plirls.logger.logrr import lm
from plirls.runner import EXIT_CONFIG_ERROR, EXIT_CODES, execute
from plirls.schemas import Dims, GenerateSource, ProblemKind, RunConfig

app = typer.Typer(help="PL-IRLS: smoothed iteratively reweighted solvers for nonsmooth composite problems.",
                  no_args_is_help=True, add_completion=False)

STATUS_STYLES = {Status.CONVERGED: "converged", Status.MAX_ITERS: "maxiters", Status.DIVERGED: "diverged"}


def _run_one(config: RunConfig, out_dir: Optional[Path], seed: Optional[int], label: str) -> Tuple[str, int]:
    try:
        outcome = execute(config, out_dir=out_dir, seed=seed)
    except InstanceError as e:
        lm.lnp(f"{label}: invalid instance: {e}", style="error", level="error")
        return label, EXIT_CONFIG_ERROR
    except SolverError as e:
        lm.lnp(f"{label}: run aborted: {e}", style="diverged", level="error")
        return label, EXIT_CODES[Status.DIVERGED]
    except PlirlsError as e:  # ProxError, NumericalError
        lm.lnp(f"{label}: {type(e).__name__}: {e}", style="error", level="error")
        return label, EXIT_CONFIG_ERROR
    summary = outcome.summary
    lm.lnp(f"{label}: {summary['status']} after {summary['iterations']} iterations, "
           f"objective {summary['final_objective']} -> {outcome.out_dir}", style=STATUS_STYLES[outcome.status])
    return label, outcome.exit_code


@app.command()
def solve(
        config: Annotated[List[Path], typer.Option("--config", help="Run configuration (JSON); repeat for a batch.")],
        seed: Annotated[Optional[int], typer.Option("--seed", help="Override the generator seed.")] = None,
        out: Annotated[Optional[Path], typer.Option("--out", help="Output directory.")] = None,
):
    """
    Solve one or more configured problems and write trace.csv, trace.json and summary.json.
    Exit code: 0 Converged, 2 MaxIters, 3 Diverged, 1 invalid configuration.
    """
    lm.print_start_panel(f"{c.APP_NAME} {c.APP_VERSION}")
    if out is not None:
        lm.attach_log_dir(out)
    codes: List[int] = []
    runs = []
    for path in config:
        try:
            run_config = RunConfig.from_file(path)
        except ConfigError as e:
            lm.lnp(str(e), style="error", level="error")
            codes.append(EXIT_CONFIG_ERROR)
            continue
        out_dir = out if out is None or len(config) == 1 else out / path.stem
        runs.append((run_config, out_dir, seed, str(path)))

    if runs:
        with ThreadPoolExecutor(max_workers=min(c.threads, len(runs))) as pool:
            results = list(pool.map(lambda args: _run_one(*args), runs))
        codes.extend(code for _, code in results)

    code = EXIT_CONFIG_ERROR if EXIT_CONFIG_ERROR in codes else max(codes, default=0)
    lm.flush()
    lm.print_exit_panel(f"exit code {code}", style="success" if code == 0 else "error")
    raise typer.Exit(code=code)


@app.command()
def generate(
        kind: Annotated[str, typer.Option("--kind", help="sparse-lsq | l0-regression | lowrank | multiblock | custom")],
        out: Annotated[Path, typer.Option("--out", help="Directory for the instance files.")],
        seed: Annotated[int, typer.Option("--seed")] = 0,
        m: Annotated[Optional[int], typer.Option("--m", help="Measurements / matrix rows.")] = None,
        n: Annotated[int, typer.Option("--n", help="Unknowns / matrix columns.")] = 10,
        k: Annotated[Optional[int], typer.Option("--k", help="Nonzeros of the ground truth.")] = None,
        rank: Annotated[Optional[int], typer.Option("--rank", help="Rank of the low-rank ground truth.")] = None,
        sparsity: Annotated[float, typer.Option("--sparsity", help="Fraction of corrupted entries.")] = 0.0,
        noise: Annotated[float, typer.Option("--noise", help="Impulse magnitude scale.")] = 1.0,
):
    """Write a deterministic synthetic instance and its ground truth."""
    if kind not in get_args(ProblemKind):
        lm.lnp(f"unknown problem kind {kind!r}", style="error", level="error")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    try:
        source = GenerateSource(seed=seed, dims=Dims(m=m, n=n, k=k, rank=rank), sparsity=sparsity, noise=noise)
        paths = generate_instance(kind, seed, source, out)
    except (ValueError, PlirlsError) as e:
        lm.lnp(f"invalid generator parameters: {e}", style="error", level="error")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    lm.display_list_as_rich_table([{"array": name, "file": str(path)} for name, path in paths.items()],
                                  title=f"{kind} instance (seed {seed})")


@app.command()
def check(
        level: Annotated[str, typer.Option("--level", help="quick | full")] = "quick",
        seed: Annotated[int, typer.Option("--seed", help="Base seed of the suite.")] = 0,
        gamma: Annotated[Optional[float], typer.Option("--gamma", hidden=True)] = None,
):
    """Run the invariant and oracle suites; nonzero exit on any violation."""
    if level not in ("quick", "full"):
        lm.lnp(f"unknown level {level!r}", style="error", level="error")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    report = run_checks(level, base_seed=seed, gamma=gamma)
    lm.flush()
    if report.ok:
        lm.lnp(f"{level} checks passed: {', '.join(report.checks_run)}", style="check")
        return
    lm.display_list_as_rich_table([v.as_row() for v in report.violations], title="Invariant violations")
    lm.lnp(f"{len(report.violations)} violation(s)", style="violation", level="error")
    raise typer.Exit(code=1)


@app.command("trace-plot")
def trace_plot(
        trace: Annotated[Path, typer.Option("--trace", help="trace.csv or trace.json")],
        out: Annotated[Path, typer.Option("--out", help="Data file to write.")],
):
    """Write 'k objective w_norm' columns of a trace for external plotting."""
    try:
        rows = read_trace(trace)
    except (OSError, ValueError, KeyError) as e:
        lm.lnp(f"cannot read trace {trace}: {e}", style="error", level="error")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(plot_data_text(rows), encoding="utf-8")
    lm.lnp(f"wrote {len(rows)} rows to {out}", style="success")


@app.command("show-config")
def show_config():
    """Print the merged settings and environment."""
    lm.print_config_table(config_instance=c)


if __name__ == "__main__":
    app()
