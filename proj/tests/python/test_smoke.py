import numpy as np
import pytest

import advica


def test_synthetic_sources_shape_and_peak():
    s = advica.gen_synthetic(1000, normalize=True)
    assert s.shape == (6, 1000)
    assert np.allclose(np.abs(s).max(axis=1), 1.0)


def test_max_correlation_invariance():
    rng = np.random.default_rng(0)
    s = rng.standard_normal((4, 300))
    pred = -3.0 * s[[2, 0, 3, 1]] + 1.0
    r = advica.max_correlation(s, pred)
    assert r["rho_max"] == pytest.approx(1.0, abs=1e-12)
    assert r["assignment"] == [1, 3, 0, 2]


def test_fastica_linear_task():
    sources, mixtures = advica.build_task()
    est, unmixing, converged = advica.fastica(mixtures, 6)
    assert converged
    assert unmixing.shape == (6, 6)
    assert advica.max_correlation(sources, est)["rho_max"] >= 0.99


def test_mlp_task_has_24_mixtures():
    _, mixtures = advica.build_task(["task.mix=mlp"])
    assert mixtures.shape == (24, 4000)


def test_short_training_run(tmp_path):
    out = advica.train(["train.iterations=300", "train.log_interval=50"], str(tmp_path))
    assert not out["diverged"]
    assert out["log"].shape[1] == 5
    assert out["log"][-1, 0] == 300
    assert 0.0 <= out["final_rho"] <= 1.0
    assert (tmp_path / "loss.csv").exists()


def test_config_errors_raise():
    with pytest.raises(advica.ConfigError, match="train.learning_rate"):
        advica.train(["train.learning_rate=1"])
    assert "train.lr" in advica.config_keys()


def test_format_score():
    assert advica.format_score(0.9987, 6.5e-4) == ".9987(6.5)"
