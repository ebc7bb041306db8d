import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sonotact.config import (
    CONFIG_NAME,
    SEED_ENV,
    RunConfig,
    apply_overrides,
    flat_keys,
    resolve,
    write_provenance,
)
from sonotact.errors import ConfigError


def test_defaults_validate():
    cfg = resolve(env={})
    assert cfg == RunConfig()
    assert cfg.train.epochs == 20 and cfg.train.lr == 5e-4
    assert cfg.eval.threshold == 0.5
    assert cfg.bank.per_label == 250


def test_precedence_file_env_flag(tmp_path):
    f = tmp_path / "run.yaml"
    f.write_text("seed: 3\ntrain.epochs: 4\nscene.near_contact_frac: 0.3\n")
    assert resolve(f, env={}).seed == 3
    assert resolve(f, env={SEED_ENV: "7"}).seed == 7
    cfg = resolve(f, {"seed": 9}, env={SEED_ENV: "7"})
    assert cfg.seed == 9
    assert cfg.train.epochs == 4
    assert cfg.scene.near_contact_frac == 0.3


@pytest.mark.parametrize("overrides", [
    {"nope": 1},
    {"train.nope": 1},
    {"train": 3},
    {"seed.x": 1},
    {"train.epochs": "many"},
    {"eval.threshold": 1.5},
    {"data.test_frac": 0},
    {"jobs": 0},
    {"bank.synthetic": "maybe"},
    {"bank.synthetic": False},  # no source given
])
def test_bad_overrides_raise(overrides):
    with pytest.raises(ConfigError):
        resolve(None, overrides, env={})


def test_bad_file(tmp_path):
    f = tmp_path / "bad.yaml"
    f.write_text("- a\n- b\n")
    with pytest.raises(ConfigError):
        resolve(f, env={})
    f.write_text("seed: [unclosed\n")
    with pytest.raises(ConfigError):
        resolve(f, env={})
    with pytest.raises(ConfigError):
        resolve(tmp_path / "absent.yaml", env={})


def test_string_coercion():
    cfg = apply_overrides(RunConfig(), {"bank.synthetic": "false", "bank.source": "clips",
                                        "train.max_steps": "12", "train.lr": "1e-3"})
    assert cfg.bank.synthetic is False
    assert cfg.train.max_steps == 12 and cfg.train.lr == 1e-3
    assert apply_overrides(cfg, {"train.max_steps": "none"}).train.max_steps is None


@given(seed=st.integers(0, 2**31), epochs=st.integers(1, 50),
       thr=st.floats(0.01, 0.99), frac=st.floats(0.05, 0.95))
def test_flat_keys_roundtrip(seed, epochs, thr, frac):
    cfg = apply_overrides(RunConfig(), {"seed": seed, "train.epochs": epochs,
                                        "eval.threshold": thr, "data.test_frac": frac})
    assert apply_overrides(RunConfig(), flat_keys(cfg)) == cfg


def test_digest_ignores_out_and_jobs():
    a = RunConfig()
    b = apply_overrides(a, {"out": "elsewhere", "jobs": 4})
    c = apply_overrides(a, {"seed": 1})
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
    assert a.digest("scene") == c.digest("scene")


def test_provenance_reproduces_config(tmp_path):
    cfg = apply_overrides(RunConfig(), {"seed": 5, "train.epochs": 2})
    write_provenance(tmp_path, cfg, {"bank_hash": "abc"})
    saved = json.loads((tmp_path / CONFIG_NAME).read_text())
    assert resolve(None, saved, env={}) == cfg
    assert json.loads((tmp_path / "inputs.json").read_text()) == {"bank_hash": "abc"}
