"""
Test suite for CSV ingestion.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import ColumnMismatchError, DataFormatError
from utils.csv_io import (load_prediction_data, load_training_data, predictions_to_csv,
                          read_numeric_csv)


class TestReadNumericCsv:
    """Test cases for read_numeric_csv()."""

    @pytest.fixture(autouse=True)
    def _workspace(self, tmp_path):
        self.tmp = tmp_path

    def write(self, content: str, name: str = "data.csv") -> Path:
        path = self.tmp / name
        path.write_text(content, encoding="utf-8")
        return path

    @pytest.mark.unit
    def test_reads_numbers(self):
        frame = read_numeric_csv(self.write("a,b,y\n1,2.5,3\n-4, 1e-3 ,0\n"))

        assert list(frame.columns) == ["a", "b", "y"]
        assert frame["b"].tolist() == [2.5, 0.001]

    @pytest.mark.unit
    def test_non_numeric_cell_is_located(self):
        with pytest.raises(DataFormatError) as excinfo:
            read_numeric_csv(self.write("a,b,y\n1,2,3\n4,abc,6\n"))

        assert excinfo.value.row == 2
        assert excinfo.value.column == "b"
        assert "abc" in str(excinfo.value)

    @pytest.mark.unit
    def test_empty_cell_is_located(self):
        with pytest.raises(DataFormatError) as excinfo:
            read_numeric_csv(self.write("a,b,y\n1,2,3\n4,5,\n7,8,9\n"))

        assert (excinfo.value.row, excinfo.value.column) == (2, "y")
        assert "empty" in str(excinfo.value)

    @pytest.mark.unit
    def test_infinite_value_rejected(self):
        with pytest.raises(DataFormatError):
            read_numeric_csv(self.write("a,y\ninf,1\n2,3\n"))

    @pytest.mark.unit
    def test_header_only(self):
        with pytest.raises(DataFormatError):
            read_numeric_csv(self.write("a,b,y\n"))

    @pytest.mark.unit
    def test_empty_file(self):
        with pytest.raises(DataFormatError):
            read_numeric_csv(self.write(""))

    @pytest.mark.unit
    def test_missing_file(self):
        with pytest.raises(DataFormatError):
            read_numeric_csv(self.tmp / "nope.csv")


class TestTrainingAndPredictionData:
    """Test cases for splitting features and response and matching columns by name."""

    @pytest.fixture(autouse=True)
    def _workspace(self, tmp_path):
        self.tmp = tmp_path
        self.train = tmp_path / "train.csv"
        self.train.write_text("x1,y,x2\n1,10,2\n3,20,4\n5,30,7\n", encoding="utf-8")

    @pytest.mark.unit
    def test_response_is_split_off(self):
        x, y, names = load_training_data(self.train)

        assert names == ["x1", "x2"]
        assert np.array_equal(x, [[1, 2], [3, 4], [5, 7]])
        assert np.array_equal(y, [10, 20, 30])

    @pytest.mark.unit
    def test_custom_response(self):
        _, y, names = load_training_data(self.train, response="x2")
        assert names == ["x1", "y"]
        assert np.array_equal(y, [2, 4, 7])

    @pytest.mark.unit
    def test_missing_response(self):
        with pytest.raises(DataFormatError):
            load_training_data(self.train, response="target")

    @pytest.mark.unit
    def test_prediction_columns_in_any_order(self):
        path = self.tmp / "new.csv"
        path.write_text("x2,x1\n2,1\n8,6\n", encoding="utf-8")

        x = load_prediction_data(path, ["x1", "x2"])
        assert np.array_equal(x, [[1, 2], [6, 8]])

    @pytest.mark.unit
    def test_response_column_ignored(self):
        x = load_prediction_data(self.train, ["x1", "x2"], response="y")
        assert x.shape == (3, 2)

    @pytest.mark.unit
    def test_column_mismatch(self):
        path = self.tmp / "new.csv"
        path.write_text("x1,x3\n1,2\n", encoding="utf-8")

        with pytest.raises(ColumnMismatchError) as excinfo:
            load_prediction_data(path, ["x1", "x2"])

        assert excinfo.value.missing == ["x2"]
        assert excinfo.value.extra == ["x3"]

    @pytest.mark.unit
    def test_predictions_csv(self):
        content = predictions_to_csv(np.array([1.5, -0.25]))
        assert content == "prediction\n1.5\n-0.25\n"
