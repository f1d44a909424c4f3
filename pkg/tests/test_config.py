"""Run-configuration merging, file loading, and typo rejection."""

import json

import pytest

from caekit.config import ConfigError, RunConfig


def test_defaults():
    rc = RunConfig.from_dict()
    assert rc.spec.input_hw == 28
    assert rc.spec.canvas_hw == 32
    assert rc.noise.sigma == 0.3
    assert rc.split.train_fraction == 0.8
    assert rc.train.epochs == 20
    assert rc.train.optimizer == "sgd"
    assert rc.train.learning_rate == 0.5
    assert rc.accel.num_channels == 8
    assert rc.accel.fifo_depth == 512
    assert str(rc.accel.fixed_format) == "Q(16,8)"
    assert rc.accel.power_watts == 5.93


def test_partial_override():
    rc = RunConfig.from_dict({"train": {"epochs": 3},
                              "accel": {"frac_bits": 10}})
    assert rc.train.epochs == 3
    assert rc.train.batch_size == 32  # untouched default
    assert rc.accel.fixed_format.frac_bits == 10


def test_unknown_key_reports_dotted_path():
    with pytest.raises(ConfigError, match="unknown config key 'trian'"):
        RunConfig.from_dict({"trian": {}})
    with pytest.raises(ConfigError, match="unknown config key 'train.lr'"):
        RunConfig.from_dict({"train": {"lr": 0.5}})
    with pytest.raises(ConfigError, match="noise.mean"):
        RunConfig.from_dict({"noise": {"mean": 0.1}})


def test_section_must_be_object():
    with pytest.raises(ConfigError, match="must be an object"):
        RunConfig.from_dict({"train": 5})


def test_bad_values_become_config_errors():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"train": {"epochs": 0}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"network": {"channel_profile": [1, 2, 3]}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"accel": {"total_bits": 8, "frac_bits": 8}})


def test_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"train": {"epochs": 2, "seed": 31}}))
    rc = RunConfig.from_file(str(path))
    assert rc.train.epochs == 2
    assert rc.train.seed == 31


def test_from_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        RunConfig.from_file(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        RunConfig.from_file(str(bad))


def test_override_seed_pins_all_stages():
    rc = RunConfig.from_dict({"noise": {"seed": 1}, "split": {"seed": 2},
                              "train": {"seed": 3}})
    pinned = rc.override_seed(77)
    assert pinned.noise.seed == 77
    assert pinned.split.seed == 77
    assert pinned.train.seed == 77
    # the original is untouched
    assert (rc.noise.seed, rc.split.seed, rc.train.seed) == (1, 2, 3)


def test_override_train():
    rc = RunConfig.from_dict()
    out = rc.override_train(epochs=5, learning_rate=None)
    assert out.train.epochs == 5
    assert out.train.learning_rate == rc.train.learning_rate
    with pytest.raises(ConfigError):
        rc.override_train(warmup=3)
