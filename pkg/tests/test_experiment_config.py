"""
Test suite for experiment configuration files.
"""

import copy
import json
import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import ConfigError
from core.models import SolverSettings
from utils.experiment_config import load_experiment_config, parse_experiment_config

CONFIG_DIR = Path(__file__).parent.parent / "configs"

VALID = {
    "name": "demo",
    "scenario_id": 1,
    "p": 20,
    "n": 10,
    "rho": [0.2, 0.5],
    "snr": 3,
    "zeta": [0.1, 0.2],
    "replications": 2,
    "methods": [
        {"label": "Lasso", "alpha": 1.0, "num_models": 1},
        {"label": "SplitReg-EN", "num_models": [2, 5]},
    ],
}


class TestParseExperimentConfig:
    """Test cases for parse_experiment_config()."""

    def setup_method(self):
        self.payload = copy.deepcopy(VALID)

    @pytest.mark.unit
    def test_grid_of_settings(self):
        config = parse_experiment_config(self.payload)
        scenarios = config.scenarios()

        assert len(scenarios) == 4
        assert [(s.rho, s.zeta) for s in scenarios] == [(0.2, 0.1), (0.2, 0.2), (0.5, 0.1), (0.5, 0.2)]
        assert all(s.snr == 3.0 for s in scenarios)
        assert config.methods[1].alpha == 0.75
        assert config.methods[1].num_models == [2, 5]

    @pytest.mark.unit
    def test_solver_section(self):
        defaults = SolverSettings()
        assert parse_experiment_config(self.payload).solver_settings(defaults) is defaults

        self.payload["solver"] = {"delta": 1e-10, "max_cycles": 500}
        settings = parse_experiment_config(self.payload).solver_settings(defaults)
        assert (settings.delta, settings.max_cycles) == (1e-10, 500)

    @pytest.mark.unit
    def test_zero_replications(self):
        self.payload["replications"] = 0
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment_config(self.payload)
        assert excinfo.value.key == "replications"

    @pytest.mark.unit
    def test_unknown_key(self):
        self.payload["replicates"] = 5
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment_config(self.payload)
        assert excinfo.value.key == "replicates"

    @pytest.mark.unit
    def test_unknown_method_key(self):
        self.payload["methods"][0]["lambda"] = 0.1
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment_config(self.payload)
        assert excinfo.value.key == "methods.0.lambda"

    @pytest.mark.unit
    def test_missing_key(self):
        del self.payload["snr"]
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment_config(self.payload)
        assert excinfo.value.key == "snr"

    @pytest.mark.unit
    def test_no_active_variables(self):
        self.payload["zeta"] = 0.01
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment_config(self.payload)
        assert excinfo.value.key == "zeta"

    @pytest.mark.unit
    def test_unknown_scenario(self):
        self.payload["scenario_id"] = 4
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment_config(self.payload)
        assert excinfo.value.key == "scenario_id"

    @pytest.mark.unit
    @pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_bundled_configs_are_valid(self, path):
        config = parse_experiment_config(json.loads(path.read_text(encoding="utf-8")))
        assert config.scenarios()


class TestLoadExperimentConfig:
    """Test cases for reading configs from disk."""

    @pytest.mark.asyncio
    async def test_load(self, tmp_path):
        path = tmp_path / "demo.json"
        path.write_text(json.dumps(VALID), encoding="utf-8")

        config = await load_experiment_config(path)
        assert config.name == "demo"

    @pytest.mark.asyncio
    async def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")

        with pytest.raises(ConfigError) as excinfo:
            await load_experiment_config(path)
        assert excinfo.value.key == "<file>"

    @pytest.mark.asyncio
    async def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            await load_experiment_config(tmp_path / "absent.json")
