import copy
import json

import numpy as np
import pytest

from qdmd.config import load_config, parse_config
from qdmd.exceptions import ConfigError
from qdmd.experiments import EXAMPLE_CONFIGS, simulate_config

BASE = EXAMPLE_CONFIGS[1]


def with_change(path, value):
    doc = copy.deepcopy(BASE)
    node = doc
    for key in path[:-1]:
        node = node[key]
    if value is KeyError:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return doc


class TestParse:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_examples_are_valid(self, n):
        cfg = parse_config(EXAMPLE_CONFIGS[n])
        assert cfg.algorithm["name"] in ("bidmd", "floquet", "aht")

    def test_defaults(self):
        cfg = parse_config({"version": 1, "system": {"dimension": 2, "drift": [0, 0, 1]}})
        assert cfg.system["basis"] == "standard_pauli"
        assert cfg.sampling == {"dt": 0.0625, "t_end": 1.0}
        assert cfg.noise == {"sigma": 0.0, "seed": 0}
        assert np.array_equal(cfg.initial_state(), [0, 0, 1])

    def test_echo_round_trip(self):
        cfg = parse_config(BASE)
        again = parse_config(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg

    def test_overrides(self):
        cfg = parse_config(BASE).with_overrides(seed=4, noise=0.0, rank=3, rank_hat=2, out="o", fmt="json")
        assert cfg.noise == {"sigma": 0.0, "seed": 4}
        assert cfg.algorithm["rank"] == 3 and cfg.algorithm["rank_hat"] == 2
        assert cfg.output == {"dir": "o", "format": "json"}

    def test_generators(self, qubit):
        L0, ctrl = parse_config(BASE).generators()
        assert np.allclose(L0.L, qubit[0])
        assert np.allclose(ctrl[0], qubit[1])

    def test_simulation_follows_grid(self):
        traj = simulate_config(parse_config(BASE), noise=False)
        assert traj.n_samples == 81
        traj = simulate_config(parse_config(EXAMPLE_CONFIGS[2]), noise=False)
        assert traj.n_samples == 17
        assert traj.meta["T"] == pytest.approx(1 / 1.1)


class TestErrors:
    @pytest.mark.parametrize("path,value,where", [
        (("version",), 2, "version"),
        (("system", "dimension"), 1, "system.dimension"),
        (("system", "drift"), [0, 1], "system.drift"),
        (("system", "controls"), [[1, 0]], "system.controls.0"),
        (("initial_state",), [0, 1], "initial_state"),
        (("controls",), [], "controls"),
        (("controls",), [{"kind": "chirp"}], "controls.0"),
        (("sampling", "dt"), -1.0, "sampling.dt"),
        (("algorithm", "name"), "pca", "algorithm.name"),
        (("algorithm", "rank"), 0, "algorithm.rank"),
        (("noise", "sigma"), -0.1, "noise.sigma"),
        (("surprise",), 1, "<root>"),
    ])
    def test_located(self, path, value, where):
        with pytest.raises(ConfigError) as info:
            parse_config(with_change(path, value))
        assert info.value.location == where

    def test_period_needs_samples(self):
        doc = copy.deepcopy(BASE)
        doc["sampling"] = {"period": 1.0}
        with pytest.raises(ConfigError, match="samples_per_period"):
            parse_config(doc)

    def test_incommensurate_dt(self):
        doc = copy.deepcopy(BASE)
        doc["sampling"] = {"period": 1.0, "samples_per_period": 4, "dt": 0.1}
        with pytest.raises(ConfigError) as info:
            parse_config(doc)
        assert info.value.location == "sampling.dt"

    def test_basis_dimension(self):
        doc = copy.deepcopy(BASE)
        doc["system"]["dimension"] = 3
        with pytest.raises(ConfigError) as info:
            parse_config(doc)
        assert info.value.location == "system.basis"

    def test_file_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"version": 1,\n "system": }')
        with pytest.raises(ConfigError, match="line 2"):
            load_config(bad)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        good = tmp_path / "good.json"
        good.write_text(json.dumps(BASE))
        assert load_config(good) == parse_config(BASE)
