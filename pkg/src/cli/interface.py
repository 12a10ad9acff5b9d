"""
Command Line Interface for SplitReg.

This module provides the `splitreg` command group: fit, cv, predict and simulate.
"""

import asyncio
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import click
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from core.engine import SplitRegEngine, configure_logging
from core.errors import SplitRegError
from core.models import PenaltySpec
from core.tuning import DEFAULT_MODEL_COUNTS
from utils.artifacts import FitArtifact, TuningArtifact

logger = logging.getLogger(__name__)


class SplitRegCLI:
    """Console front end around the SplitReg engine."""

    def __init__(self):
        """Initialize the CLI."""
        self.console = Console()
        self.config = self._load_config()
        configure_logging(self.config)
        self.engine = SplitRegEngine(self.config)

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from environment variables."""
        config = {
            "SPLITREG_THREADS": int(os.getenv("SPLITREG_THREADS", "1")),
            "SPLITREG_TOLERANCE": float(os.getenv("SPLITREG_TOLERANCE", "1e-8")),
            "SPLITREG_MAX_CYCLES": int(os.getenv("SPLITREG_MAX_CYCLES", "10000")),
            "SPLITREG_LOG_LEVEL": os.getenv("SPLITREG_LOG_LEVEL", "INFO").upper(),
            "SPLITREG_LOG_FILE": os.getenv("SPLITREG_LOG_FILE", "logs/splitreg.log"),
            "SPLITREG_OUTPUT_PATH": os.getenv("SPLITREG_OUTPUT_PATH", "./results"),
        }

        return config

    def set_threads(self, threads: Optional[int]) -> None:
        if threads is not None:
            self.config["SPLITREG_THREADS"] = threads
            self.engine.threads = threads

    def run(self, description: str, coroutine):
        """Run a workflow behind a spinner, turning library errors into click errors."""
        try:
            with Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                console=self.console,
                transient=True,
            ) as progress:
                progress.add_task(description, total=None)
                return asyncio.run(coroutine)
        except SplitRegError as e:
            logger.error(str(e))
            raise click.ClickException(str(e)) from e

    def show_fit(self, artifact: FitArtifact, path: Path) -> None:
        diagnostics = artifact.diagnostics
        spec = artifact.penalty

        table = Table(title="Fitted Models")
        table.add_column("Model", style="cyan")
        table.add_column("Nonzero", style="green", justify="right")
        table.add_column("Intercept", style="blue", justify="right")
        for g, (count, intercept) in enumerate(zip(diagnostics.nonzero_counts, artifact.intercepts)):
            table.add_row(str(g + 1), str(count), f"{intercept:.6g}")
        self.console.print(table)

        status = "converged" if diagnostics.converged else "[red]not converged[/red]"
        self.console.print(Panel(
            f"alpha={spec.alpha:g}  lambda_s={spec.lambda_s:.6g}  lambda_d={spec.lambda_d:.6g}  "
            f"G={spec.num_models}\n"
            f"Objective: {diagnostics.objective:.8g}\n"
            f"OVP: {diagnostics.ovp:.4f}\n"
            f"Cycles: {diagnostics.cycles} ({status})\n"
            f"Artifact: {path}",
            title="Fit Summary", border_style="green"))

        if not any(diagnostics.nonzero_counts):
            self.console.print("[yellow]⚠ All models are empty: lambda_s is at or above "
                               "lambda_s_max; predictions are the intercept.[/yellow]")
            logger.warning("All-zero fit written")

    def show_cv(self, artifact: TuningArtifact, path: Path) -> None:
        if len(artifact.model_count_trace) > 1:
            counts = Table(title="Number of Models")
            counts.add_column("G", style="cyan", justify="right")
            counts.add_column("CV MSPE", style="green", justify="right")
            for entry in artifact.model_count_trace:
                score = "failed" if entry.cv_mspe is None else f"{entry.cv_mspe:.6g}"
                counts.add_row(str(entry.num_models), score)
            self.console.print(counts)

        table = Table(title=f"CV Trace ({len(artifact.trace)} points in visit order)")
        table.add_column("G", style="cyan", justify="right")
        table.add_column("lambda_s", style="cyan", justify="right")
        table.add_column("lambda_d", style="magenta", justify="right")
        table.add_column("CV MSPE", style="green", justify="right")
        table.add_column("Sweep", style="blue")
        for point in artifact.trace:
            table.add_row(str(point.num_models), f"{point.lambda_s:.6g}", f"{point.lambda_d:.6g}",
                          f"{point.cv_mspe:.6g}", point.sweep)
        self.console.print(table)

        self.console.print(Panel(
            f"G={artifact.num_models}  lambda_s={artifact.lambda_s_opt:.6g}  "
            f"lambda_d={artifact.lambda_d_opt:.6g}\n"
            f"CV MSPE (standardized response): {artifact.cv_mspe:.6g}\n"
            f"Outer iterations: {artifact.outer_iterations}\n"
            f"Artifact: {path}",
            title="Cross-Validation Summary", border_style="green"))
        if artifact.non_converged:
            self.console.print(f"[yellow]⚠ {artifact.non_converged} grid points had "
                               f"non-converged fits[/yellow]")

    def show_simulation(self, outputs: Dict[str, Any]) -> None:
        summary = outputs["summary_table"]
        if summary.empty:
            self.console.print("[red]No method produced a successful fit; see records.csv[/red]")
            return
        table = Table(title="Experiment Summary")
        for column in ("method", "rho", "snr", "zeta"):
            table.add_column(column, style="cyan")
        table.add_column("MSPE/σ²", style="green", justify="right")
        table.add_column("OVP", style="magenta", justify="right")
        table.add_column("Time (s)", style="blue", justify="right")
        for _, row in summary.iterrows():
            table.add_row(str(row["method"]), f"{row['rho']:g}", f"{row['snr']:g}",
                          f"{row['zeta']:g}", f"{row['mspe_over_sigma2_mean']:.4f}",
                          f"{row['ovp_mean']:.3f}", f"{row['wall_time_mean']:.2f}")
        self.console.print(table)
        self.console.print(f"[green]Outputs written to {Path(outputs['manifest']).parent}[/green]")


def _output_path(path: Optional[Path], default: str) -> Path:
    """User paths are taken relative to the working directory; defaults go under the output path."""
    return path.resolve() if path is not None else Path(default)


_THREADS_OPTION = click.option(
    "--threads", type=click.IntRange(min=1), default=None,
    help="Worker threads for CV folds or replications (overrides SPLITREG_THREADS)")


@click.group()
@click.pass_context
def cli(ctx: click.Context):
    """SplitReg - ensembles of sparse and diverse linear models."""
    ctx.obj = SplitRegCLI()


@cli.command()
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--alpha", type=click.FloatRange(0.0, 1.0), default=0.75, show_default=True)
@click.option("--lambda-s", "lambda_s", type=click.FloatRange(min=0.0), required=True)
@click.option("--lambda-d", "lambda_d", type=click.FloatRange(min=0.0), default=0.0,
              show_default=True)
@click.option("--num-models", "-G", "num_models", type=click.IntRange(min=1), default=1,
              show_default=True)
@click.option("--response", default="y", show_default=True, help="Name of the response column")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Artifact path (default: <output path>/fit.json)")
@click.pass_obj
def fit(app: SplitRegCLI, data_csv: Path, alpha: float, lambda_s: float, lambda_d: float,
        num_models: int, response: str, out: Optional[Path]):
    """Fit G models at fixed penalties."""
    spec = PenaltySpec(alpha=alpha, lambda_s=lambda_s, lambda_d=lambda_d, num_models=num_models)
    artifact, path = app.run(
        "Fitting...",
        app.engine.run_fit(data_csv, spec, _output_path(out, "fit.json"), response))
    app.show_fit(artifact, path)


@cli.command()
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--alpha", type=click.FloatRange(0.0, 1.0, min_open=True), default=0.75,
              show_default=True)
@click.option("--num-models", "-G", "num_models", type=click.IntRange(min=1), multiple=True,
              help="Candidate numbers of models; repeat the flag (default: 2, 5, 7, 10)")
@click.option("--folds", type=click.IntRange(min=2), default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--response", default="y", show_default=True)
@click.option("--warm-start/--no-warm-start", default=True, show_default=True,
              help="Warm-start along each grid; disable to evaluate grid points in parallel")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Artifact path (default: <output path>/cv.json)")
@_THREADS_OPTION
@click.pass_obj
def cv(app: SplitRegCLI, data_csv: Path, alpha: float, num_models: Tuple[int, ...], folds: int,
       seed: int, response: str, warm_start: bool, out: Optional[Path], threads: Optional[int]):
    """Tune lambda_s, lambda_d and G by cross-validation."""
    app.set_threads(threads)
    candidates = list(num_models) or list(DEFAULT_MODEL_COUNTS)
    artifact, path = app.run(
        "Cross-validating...",
        app.engine.run_cv(data_csv, _output_path(out, "cv.json"), alpha, candidates, folds,
                          seed, response, warm_start))
    app.show_cv(artifact, path)


@cli.command()
@click.argument("artifact", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Predictions CSV (default: <output path>/predictions.csv)")
@click.pass_obj
def predict(app: SplitRegCLI, artifact: Path, data_csv: Path, out: Optional[Path]):
    """Predict with the averaged model of a fit or cv artifact."""
    predictions, path = app.run(
        "Predicting...",
        app.engine.run_predict(artifact, data_csv, _output_path(out, "predictions.csv")))
    app.console.print(f"[green]Wrote {len(predictions)} predictions to {path}[/green]")


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory (default: <output path>/<config name>)")
@_THREADS_OPTION
@click.pass_obj
def simulate(app: SplitRegCLI, config: Path, out_dir: Optional[Path], threads: Optional[int]):
    """Run a simulation experiment from a JSON config."""
    app.set_threads(threads)
    outputs = app.run(
        "Simulating...",
        app.engine.run_simulation(config, _output_path(out_dir, config.stem)))
    app.show_simulation(outputs)


if __name__ == "__main__":
    cli()
