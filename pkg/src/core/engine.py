"""
Main Engine for SplitReg.

This module orchestrates the command-line workflows: fitting at fixed
penalties, cross-validated tuning, prediction from a stored artifact and
simulation experiments. Numerical work runs in a worker thread so the event
loop stays free for file I/O.
"""

import asyncio
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from rich.logging import RichHandler

from core import __version__
from core.ensemble import predict
from core.models import PenaltySpec, SolverSettings
from core.report_generator import ReportGenerator
from core.simulate import ExperimentResult, TimingFit, run_grid, timing_linearity
from core.solver import fit
from core.standardize import standardize
from core.tuning import DEFAULT_MODEL_COUNTS, CvPlan, TuningResult, select_num_models
from utils.artifacts import FitArtifact, Provenance, TuningArtifact, parse_fit_artifact
from utils.csv_io import load_prediction_data, load_training_data, predictions_to_csv
from utils.experiment_config import load_experiment_config
from utils.storage import ArtifactStorage

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(config: Dict[str, Any]) -> None:
    """Send logs to the configured file and to a rich console handler."""
    log_file = Path(config.get("SPLITREG_LOG_FILE", "logs/splitreg.log"))
    log_file.parent.mkdir(parents=True, exist_ok=True)

    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    console_handler = RichHandler(show_path=False, rich_tracebacks=False)
    console_handler.setLevel(logging.WARNING)

    logging.basicConfig(
        level=config.get("SPLITREG_LOG_LEVEL", "INFO"),
        format="%(message)s",
        handlers=[file_handler, console_handler],
        force=True,
    )


class SplitRegEngine:
    """Runs the fit, cv, predict and simulate workflows."""

    def __init__(self, config: Dict[str, Any]):
        """Initialize the engine with configuration."""
        self.config = config
        self.logger = logger
        self.storage = ArtifactStorage(config)
        self.report_generator = ReportGenerator(self.storage, config)
        self.settings = SolverSettings(
            delta=float(config.get("SPLITREG_TOLERANCE", 1e-8)),
            max_cycles=int(config.get("SPLITREG_MAX_CYCLES", 10000)),
        )
        self.threads = max(1, int(config.get("SPLITREG_THREADS", 1)))

    async def _provenance(self, data_csv: Path, seed: Optional[int] = None) -> Provenance:
        return Provenance(
            input_file=data_csv.name,
            input_digest=await self.storage.file_digest(data_csv),
            seed=seed,
            version=__version__,
        )

    async def run_fit(self, data_csv: Path, spec: PenaltySpec, out: Path,
                      response: str = "y") -> Tuple[FitArtifact, Path]:
        """
        Fit at fixed penalties and persist the artifact.

        Args:
            data_csv: training data with a header row
            spec: penalties and number of models
            out: artifact path
            response: name of the response column

        Returns:
            (artifact, path written)
        """
        x_raw, y_raw, names = load_training_data(data_csv, response)
        design = standardize(x_raw, y_raw, names)
        result = await asyncio.to_thread(fit, design, spec, self.settings)
        self.logger.info(f"Fitted {spec.num_models} models on {design.n} x {design.p} data, "
                         f"objective {result.objective:.6g}")

        artifact = FitArtifact.build(design, spec, result, response,
                                     await self._provenance(data_csv), x_raw)
        path = await self.storage.save_json(out, artifact.model_dump(mode="json"))
        return artifact, path

    async def run_cv(self, data_csv: Path, out: Path, alpha: float = 0.75,
                     candidates: Sequence[int] = DEFAULT_MODEL_COUNTS, num_folds: int = 10,
                     seed: int = 0, response: str = "y",
                     warm_start: bool = True) -> Tuple[TuningArtifact, Path]:
        """
        Tune lambda_s, lambda_d and G by cross-validation and persist the result.

        Returns:
            (artifact with the trace and the final fit, path written)
        """
        x_raw, y_raw, names = load_training_data(data_csv, response)
        design = standardize(x_raw, y_raw, names)
        plan = CvPlan.create(design.n, num_folds, seed)

        tuning: TuningResult = await asyncio.to_thread(
            select_num_models, design, list(candidates), alpha, plan, self.settings,
            self.threads, warm_start=warm_start)
        self.logger.info(f"Selected G={tuning.num_models}, lambda_s={tuning.lambda_s_opt:.4g}, "
                         f"lambda_d={tuning.lambda_d_opt:.4g}, CV MSPE {tuning.cv_mspe:.5g}")

        final = await asyncio.to_thread(
            fit, design, tuning.spec, self.settings.warm(tuning.bundle))
        fit_artifact = FitArtifact.build(design, tuning.spec, final, response,
                                         await self._provenance(data_csv, seed), x_raw)
        artifact = TuningArtifact.build(tuning, num_folds, seed, fit_artifact)
        path = await self.storage.save_json(out, artifact.model_dump(mode="json"))
        return artifact, path

    async def run_predict(self, artifact_path: Path, data_csv: Path,
                          out: Path) -> Tuple[np.ndarray, Path]:
        """Predict with the averaged model of a stored artifact, matching columns by name."""
        artifact = parse_fit_artifact(await self.storage.load_json(artifact_path))
        x = load_prediction_data(data_csv, artifact.feature_names, artifact.response)
        predictions = np.atleast_1d(predict(artifact.averaged_model(), x))
        path = await self.storage.save_text(out, predictions_to_csv(predictions))
        return predictions, path

    async def run_simulation(self, config_path: Path, out_dir: Path) -> Dict[str, Any]:
        """
        Run an experiment file and write records, summary, manifest and report.

        Returns:
            Output paths and the summary table
        """
        config = await load_experiment_config(config_path)
        settings = config.solver_settings(self.settings)
        scenarios = config.scenarios()
        self.logger.info(f"Running '{config.name}': {len(scenarios)} settings x "
                         f"{config.replications} replications x {len(config.methods)} methods")

        result: ExperimentResult = await asyncio.to_thread(
            run_grid, scenarios, config.methods, config.replications, settings, self.threads)

        timing: Optional[TimingFit] = None
        if config.timing_fit:
            try:
                timing = timing_linearity(result)
            except ValueError as e:
                self.logger.warning(f"Timing fit skipped: {e}")

        provenance = {
            "name": config.name,
            "seed": config.seed,
            "replications": config.replications,
            "config_file": config_path.name,
            "config_digest": await self.storage.file_digest(config_path),
            "version": __version__,
            "settings": [spec.model_dump() for spec in scenarios],
            "methods": [method.model_dump() for method in config.methods],
        }
        return await self.report_generator.generate_report(result, out_dir, provenance, timing)

