import csv
import json

import numpy as np
import pytest

from qdmd.dmd import SnapshotSet, bidmd_fit, dmd_fit, dmdc_fit
from qdmd.exceptions import ShapeError
from qdmd.experiments import example2
from qdmd.io import (
    load_coefficient_csv,
    load_model,
    model_from_dict,
    model_to_dict,
    save_coefficient_csv,
    save_feature_manifest,
    save_model,
    save_quasi_energy_csv,
)
from qdmd.metrics import relative_l2_error, stepwise_percent_error


def assert_same_model(a, b):
    for name in a.__dataclass_fields__ if hasattr(a, "__dataclass_fields__") else a._fields:
        x, y = getattr(a, name), getattr(b, name)
        if name == "meta":
            continue
        if isinstance(x, np.ndarray):
            assert x.dtype.kind == np.asarray(y).dtype.kind, name
            assert np.array_equal(x, y), name
        else:
            assert x == y, name


@pytest.fixture
def snap(rng):
    X = rng.standard_normal((3, 20))
    U = rng.standard_normal((2, 20))
    return SnapshotSet(X, 0.9 * X + 0.1 * rng.standard_normal((3, 20)), U, 0.125)


class TestModelRoundTrip:
    def test_bidmd(self, snap, tmp_path):
        model = bidmd_fit(snap, feature_names=["p", "q"])
        path = tmp_path / "m.json"
        save_model(model, path)
        back = load_model(path)
        assert_same_model(model, back)
        doc = json.loads(path.read_text())
        assert doc["format"] == "qdmd-model" and doc["version"] == 1
        assert doc["kind"] == "bidmd" and doc["d"] == 3 and doc["Nc"] == 2
        assert set(doc["eigenvalues"][0]) == {"re", "im"}

    def test_dmd_and_dmdc(self, snap):
        for model in (dmd_fit(snap, rank=2), dmdc_fit(snap)):
            back = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
            assert_same_model(model, back)

    def test_floquet(self):
        model = example2()["model"]
        back = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
        assert_same_model(model, back)

    def test_rejects_foreign_documents(self):
        with pytest.raises(ShapeError):
            model_from_dict({"format": "other"})
        with pytest.raises(TypeError):
            model_to_dict(object())


class TestTables:
    def test_quasi_energy_columns(self, tmp_path):
        model = example2()["model"]
        path = tmp_path / "q.csv"
        save_quasi_energy_csv(model, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["mode_index", "re_eps", "im_eps", "|lambda|", "arg_lambda"]
        assert len(rows) == 1 + model.eigenvalues.size
        eps = complex(float(rows[1][1]), float(rows[1][2]))
        assert eps == model.quasi_energies[0]

    def test_coefficients_round_trip(self, rng, tmp_path):
        values = rng.standard_normal((4, 3))
        path = tmp_path / "c.csv"
        save_coefficient_csv(values, path)
        assert path.read_text().splitlines()[0] == "period_index,a1,a2,b1,b2"
        assert np.array_equal(load_coefficient_csv(path), values)
        (tmp_path / "empty.csv").write_text("period_index\n")
        with pytest.raises(ShapeError):
            load_coefficient_csv(tmp_path / "empty.csv")

    def test_feature_manifest(self, tmp_path):
        save_feature_manifest(("a1", "a1^2"), tmp_path / "f.json")
        assert json.loads((tmp_path / "f.json").read_text()) == ["a1", "a1^2"]


class TestMetrics:
    def test_relative_error(self):
        truth = np.array([[3.0, 0.0], [4.0, 0.0]])
        assert relative_l2_error(truth, truth) == 0.0
        assert relative_l2_error(truth * 1.1, truth) == pytest.approx(0.1)

    def test_stepwise_percent(self):
        truth = np.array([[1.0, 0.0], [0.0, 2.0]])
        pred = truth + np.array([[0.0, 0.2], [0.0, 0.0]])
        assert np.allclose(stepwise_percent_error(pred, truth), [0.0, 10.0])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            relative_l2_error(np.ones((2, 3)), np.ones((2, 4)))
