"""
Report Generator for SplitReg.

This module writes the outputs of a simulation experiment: per-replication
records and per-method summaries as CSV, a JSON manifest for provenance, and a
markdown report with one summary table per setting.
"""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from core.simulate import METRIC_COLUMNS, SCENARIO_COLUMNS, ExperimentResult, TimingFit
from utils.storage import ArtifactStorage

RECORDS_FILE = "records.csv"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.json"
REPORT_FILE = "report.md"

METRIC_TITLES = {
    "mspe_over_sigma2": "MSPE/σ²",
    "precision": "PR",
    "recall": "RC",
    "ovp": "OVP",
    "wall_time": "Time (s)",
}


class ReportGenerator:
    """Generates experiment outputs in CSV, JSON and markdown format."""

    def __init__(self, storage: ArtifactStorage, config: Dict[str, Any]):
        """Initialize the report generator."""
        self.storage = storage
        self.config = config
        self.logger = logging.getLogger(__name__)

    async def generate_report(self, result: ExperimentResult, out_dir: Path,
                              provenance: Dict[str, Any],
                              timing: Optional[TimingFit] = None) -> Dict[str, Any]:
        """
        Write every output of an experiment.

        Args:
            result: experiment records
            out_dir: output directory
            provenance: config digest, seed, version and the experiment parameters
            timing: wall time against G, for model-count sweeps

        Returns:
            Paths of the written files and the summary table
        """
        summary = result.summary()
        records_path = await self.storage.save_text(out_dir / RECORDS_FILE, self._to_csv(result.to_frame()))
        summary_path = await self.storage.save_text(out_dir / SUMMARY_FILE, self._to_csv(summary))
        report_path = await self.storage.save_text(
            out_dir / REPORT_FILE, self._compile_report(summary, provenance, timing))

        manifest = {
            **provenance,
            "files": [RECORDS_FILE, SUMMARY_FILE, REPORT_FILE],
            "record_count": len(result.records),
            "failed_fits": sum(record.error is not None for record in result.records),
            "timing_fit": None if timing is None else {
                "slope": timing.slope,
                "intercept": timing.intercept,
                "r_squared": timing.r_squared,
            },
        }
        manifest_path = await self.storage.save_json(out_dir / MANIFEST_FILE, manifest)
        self.logger.info(f"Experiment outputs written to {out_dir}")

        return {
            "records": str(records_path),
            "summary": str(summary_path),
            "report": str(report_path),
            "manifest": str(manifest_path),
            "summary_table": summary,
        }

    @staticmethod
    def _to_csv(frame: pd.DataFrame) -> str:
        return frame.to_csv(index=False, lineterminator="\n", float_format="%.10g")

    def _compile_report(self, summary: pd.DataFrame, provenance: Dict[str, Any],
                        timing: Optional[TimingFit]) -> str:
        """Compile the markdown report."""
        report_parts = [f"# {provenance.get('name', 'SplitReg experiment')}\n"]
        report_parts.append(f"**Replications:** {provenance.get('replications', '?')}")
        report_parts.append(f"**Seed:** {provenance.get('seed', '?')}")
        report_parts.append(f"**Config digest:** `{provenance.get('config_digest', '')}`")
        report_parts.append("\n---\n")

        if summary.empty:
            report_parts.append("No method produced a successful fit.")
        for setting, table in summary.groupby(SCENARIO_COLUMNS, sort=False):
            report_parts.append(f"## {self._setting_title(dict(zip(SCENARIO_COLUMNS, setting)))}\n")
            report_parts.append(self._metric_table(table))
            report_parts.append("")

        if timing is not None:
            report_parts.append("## Computation time against number of models\n")
            report_parts.append(f"Mean wall time ≈ {timing.intercept:.3g} + {timing.slope:.3g}·G seconds "
                                f"(R² = {timing.r_squared:.3f})")

        report_parts.append("\n---\n")
        report_parts.append("*Mean over replications, standard errors in parentheses.*")
        return "\n".join(report_parts) + "\n"

    @staticmethod
    def _setting_title(setting: Dict[str, Any]) -> str:
        return (f"Scenario {setting['scenario_id']}: p={setting['p']}, n={setting['n']}, "
                f"ρ={setting['rho']}, SNR={setting['snr']}, ζ={setting['zeta']}")

    @staticmethod
    def _format_metric(mean: float, se: float) -> str:
        if mean is None or (isinstance(mean, float) and math.isnan(mean)):
            return "n/a"
        if se is None or (isinstance(se, float) and math.isnan(se)):
            return f"{mean:.3f}"
        return f"{mean:.3f} ({se:.3f})"

    def _metric_table(self, table: pd.DataFrame) -> str:
        header = ["Method", "G"] + [METRIC_TITLES[column] for column in METRIC_COLUMNS]
        rows: List[str] = [
            "| " + " | ".join(header) + " |",
            "|" + "|".join(["---"] * len(header)) + "|",
        ]
        for _, row in table.iterrows():
            cells = [str(row["method"]), f"{row['num_models_mean']:.1f}"]
            cells += [self._format_metric(row[f"{column}_mean"], row[f"{column}_se"])
                      for column in METRIC_COLUMNS]
            rows.append("| " + " | ".join(cells) + " |")
        return "\n".join(rows)
