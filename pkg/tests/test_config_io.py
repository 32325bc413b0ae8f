import json

import pytest

from s2cgan.config import (
    ConfigError,
    ExperimentConfig,
    OptimizerSpec,
    canonical_json,
    config_hash,
    config_to_dict,
    parse_config,
    parse_config_dict,
)


def test_empty_object_gives_defaults():
    cfg = parse_config_dict({})
    assert cfg == ExperimentConfig()
    assert cfg.task == "a"
    assert cfg.lambdas == (1.0, 1.0, 1.0)
    assert cfg.optimizer.lr_d == 2e-4
    assert cfg.optimizer.beta1 == 0.0


def test_task_defaults_switch():
    a = parse_config_dict({"task": "a"})
    b = parse_config_dict({"task": "b"})
    assert (a.effective_steps, b.effective_steps) == (6000, 12000)
    assert (a.effective_n_total, b.effective_n_total) == (4500, 5600)
    assert (a.effective_n_supervised, b.effective_n_supervised) == (8, 5)
    assert (a.effective_d_z, b.effective_d_z) == (4, 8)


def test_lambda_override():
    cfg = parse_config_dict({"lambdas": [1, 0, 0]})
    assert cfg.lambdas == (1.0, 0.0, 0.0)


def test_unknown_key_pointer():
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"lambda": "x"})
    assert err.value.pointer == "/lambda"
    assert "unknown key" in str(err.value)


def test_nested_pointer_on_unknown_optimizer_key():
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"optimizer": {"lr": 1e-3}})
    assert err.value.pointer == "/optimizer/lr"


def test_type_mismatch_pointers():
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"tau": "hot"})
    assert err.value.pointer == "/tau"
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"lambdas": [1.0, "x", 0.0]})
    assert err.value.pointer == "/lambdas/1"
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"lambdas": [1.0, 0.0]})
    assert err.value.pointer == "/lambdas"
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"steps": True})
    assert err.value.pointer == "/steps"
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"stop_grad": ["everywhere"]})
    assert err.value.pointer == "/stop_grad/0"


def test_null_only_where_nullable():
    cfg = parse_config_dict({"steps": None, "optimizer": {"b_sup": None}})
    assert cfg.steps is None and cfg.optimizer.b_sup is None
    with pytest.raises(ConfigError) as err:
        parse_config_dict({"tau": None})
    assert err.value.pointer == "/tau"


def test_invariant_violations_rejected():
    with pytest.raises(ConfigError):
        parse_config_dict({"optimizer": {"lr_d": 0.0}})
    with pytest.raises(ConfigError):
        parse_config_dict({"lambdas": [1.0, -0.1, 0.0]})
    with pytest.raises(ConfigError):
        parse_config_dict({"tau": 0.0})
    with pytest.raises(ConfigError):
        parse_config_dict({"surrogate": "wasserstein"})
    with pytest.raises(ConfigError):
        parse_config_dict({"task": "c"})
    with pytest.raises(ConfigError):
        parse_config_dict({"task": "b", "stay": 0.0})
    with pytest.raises(ConfigError):
        parse_config_dict({"seeds": []})


def test_parse_config_file_and_bad_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"task": "b", "seeds": [1, 2, 3]}')
    cfg = parse_config(path)
    assert cfg.task == "b" and cfg.seeds == (1, 2, 3)

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config(bad)


def test_canonical_round_trip():
    cfg = ExperimentConfig()
    emitted = config_to_dict(cfg)
    reparsed = parse_config_dict(json.loads(json.dumps(emitted)))
    assert reparsed == cfg
    assert canonical_json(reparsed) == canonical_json(cfg)

    custom = parse_config_dict(
        {"task": "b", "lambdas": [0.5, 2, 1], "optimizer": {"b_unsup": 32},
         "stop_grad": ["gen_input"], "seeds": [7]}
    )
    again = parse_config_dict(config_to_dict(custom))
    assert again == custom


def test_config_hash_distinguishes_configs():
    h1 = config_hash(ExperimentConfig())
    h2 = config_hash(parse_config_dict({"tau": 0.9}))
    assert len(h1) == 32 and len(h2) == 32
    assert h1 != h2
    assert h1 == config_hash(parse_config_dict({}))


def test_effective_b_sup():
    spec = OptimizerSpec()
    assert spec.effective_b_sup(5) == 5
    assert spec.effective_b_sup(100) == 16
    assert OptimizerSpec(b_sup=8).effective_b_sup(5) == 8


def test_tau_schedule():
    cfg = parse_config_dict({"steps": 101, "tau_anneal": True, "tau": 1.0, "tau_final": 0.5})
    assert cfg.tau_at(0) == 1.0
    assert cfg.tau_at(100) == 0.5
    assert abs(cfg.tau_at(50) - 0.75) < 1e-12
    flat = parse_config_dict({"steps": 101})
    assert flat.tau_at(77) == 1.0


def test_widths_follow_task():
    cfg = parse_config_dict({"task": "b", "hidden": 64})
    w = cfg.widths()
    assert w["generator"] == [48 + 8, 64, 64, 16]
    assert w["discriminator"] == [16 + 48, 64, 64, 1]
    assert w["labeller"] == [16, 64, 64, 48]
