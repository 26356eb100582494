import json

import numpy as np
import pytest

from eigenkae.config import config_hash, validate_config
from eigenkae.errors import ParameterError
from eigenkae.harness import build_dataset, run_experiment, train_config_for
from eigenkae.report import BIN_EDGES, init_spectrum_report, write_spectrum_report


def tiny_config(scheme="none", out_dir="run", **overrides):
    cfg = {
        "dataset": {"generator": "pendulum", "n_trajectories": 6, "steps": 60},
        "model": {"latent_dim": 4, "hidden": [16, 8]},
        "train": {"epochs": 8, "batch_size": 64, "horizon": 2},
        "eval": {"max_horizon": 3},
        "scheme": scheme,
        "seeds": [0, 1],
        "out_dir": out_dir,
    }
    if scheme in ("eigeninit", "both"):
        cfg["eigeninit"] = {"theta": 0.5}
    if scheme in ("eigenloss", "both"):
        cfg["eigenloss"] = {"weight": 10.0}
    cfg.update(overrides)
    return cfg


class TestConfigValidation:
    def test_defaults_filled(self):
        cfg = validate_config(tiny_config())
        assert cfg["train"]["lr"] == 1e-3
        assert cfg["dataset"]["split"] == [0.7, 0.15, 0.15]
        assert cfg["dataset"]["omega0"] == 3.13

    def test_unknown_top_level_key(self):
        bad = tiny_config()
        bad["extra"] = 1
        with pytest.raises(ParameterError):
            validate_config(bad)

    def test_unknown_nested_key(self):
        bad = tiny_config()
        bad["train"]["momentum"] = 0.9
        with pytest.raises(ParameterError):
            validate_config(bad)

    def test_scheme_requires_sections(self):
        bad = tiny_config("both")
        del bad["eigenloss"]
        with pytest.raises(ParameterError):
            validate_config(bad)

    def test_unused_sections_rejected(self):
        bad = tiny_config("none")
        bad["eigenloss"] = {"weight": 1.0}
        with pytest.raises(ParameterError):
            validate_config(bad)

    def test_split_must_sum_to_one(self):
        bad = tiny_config()
        bad["dataset"]["split"] = [0.5, 0.2, 0.2]
        with pytest.raises(ParameterError):
            validate_config(bad)

    def test_linear_spectrum_length(self):
        bad = tiny_config()
        bad["dataset"] = {"generator": "linear", "dim": 3,
                          "spectrum": [[0.5, 0.0]], "n_trajectories": 6}
        with pytest.raises(ParameterError):
            validate_config(bad)

    def test_hash_stable_under_key_order(self):
        a = validate_config(tiny_config())
        b = validate_config(dict(reversed(list(tiny_config().items()))))
        assert config_hash(a) == config_hash(b)

    def test_scheme_mapping(self):
        tc = train_config_for(validate_config(tiny_config("both")), seed=3)
        assert tc.u_init == "eigeninit"
        assert tc.eigenloss_weight == 10.0
        assert tc.spike_slab.theta == 0.5
        tc = train_config_for(validate_config(tiny_config("xavier")), seed=3)
        assert tc.u_init == "xavier"
        assert tc.eigenloss_weight == 0.0


class TestRunExperiment:
    def test_artifacts_and_aggregate(self, tmp_path):
        cfg = tiny_config(out_dir=str(tmp_path / "run"))
        result = run_experiment(cfg)
        assert [r.status for r in result.results] == ["ok", "ok"]
        out = result.out_dir
        for seed in (0, 1):
            for name in (f"losses_{seed}.csv", f"eig_heatmap_{seed}.csv",
                         f"timing_{seed}.csv", f"horizons_{seed}.csv",
                         f"model_{seed}.kae"):
                assert (out / name).exists(), name
        assert (out / "aggregate.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seeds"] == {"0": {"status": "ok"}, "1": {"status": "ok"}}
        assert manifest["config_hash"] == config_hash(validate_config(cfg))

    def test_aggregate_mean_is_arithmetic_mean(self, tmp_path):
        cfg = tiny_config(out_dir=str(tmp_path / "run"))
        result = run_experiment(cfg)
        per_seed = [r.log.cumulative_error for r in result.results]
        mean, std = result.aggregate["cumulative_test_error"]
        assert mean == pytest.approx(np.mean(per_seed), rel=1e-12)
        assert std == pytest.approx(np.std(per_seed), rel=1e-12)

    def test_aggregate_cumulative_equals_horizon_sum(self, tmp_path):
        cfg = tiny_config(out_dir=str(tmp_path / "run"))
        result = run_experiment(cfg)
        total = sum(result.aggregate[f"horizon_{h}"][0] for h in (1, 2, 3))
        assert abs(result.aggregate["cumulative_test_error"][0] - total) <= 1e-10

    def test_byte_determinism_excluding_timing(self, tmp_path):
        cfg1 = tiny_config(out_dir=str(tmp_path / "a"))
        cfg2 = tiny_config(out_dir=str(tmp_path / "b"))
        r1 = run_experiment(cfg1)
        r2 = run_experiment(cfg2)
        for name in ("losses_0.csv", "losses_1.csv", "eig_heatmap_0.csv",
                     "horizons_0.csv", "aggregate.csv"):
            assert (r1.out_dir / name).read_bytes() == (r2.out_dir / name).read_bytes()

    def test_scheme_isolation_same_seed(self):
        cfg_a = validate_config(tiny_config("none"))
        cfg_b = validate_config(tiny_config("eigeninit"))
        ds_a = build_dataset(cfg_a["dataset"], 0)
        ds_b = build_dataset(cfg_b["dataset"], 0)
        for ta, tb in zip(ds_a.trajectories, ds_b.trajectories):
            assert np.array_equal(ta.states, tb.states)

        from eigenkae.training import build_model
        m_a = build_model(2, 4, train_config_for(cfg_a, 0))
        m_b = build_model(2, 4, train_config_for(cfg_b, 0))
        for pa, pb in zip(m_a.encoder.parameters(), m_b.encoder.parameters()):
            assert np.array_equal(pa.value, pb.value)
        assert not np.array_equal(m_a.koopman.value, m_b.koopman.value)

    def test_failed_seed_recorded_not_raised(self, tmp_path):
        cfg = tiny_config(out_dir=str(tmp_path / "run"))
        cfg["train"]["lr"] = 1e9  # guaranteed divergence
        result = run_experiment(cfg)
        assert all(r.status == "error" for r in result.results)
        manifest = json.loads((result.out_dir / "manifest.json").read_text())
        assert "DivergenceError" in manifest["seeds"]["0"]["error"]

    def test_parallel_matches_serial(self, tmp_path):
        cfg1 = tiny_config(out_dir=str(tmp_path / "serial"))
        cfg2 = tiny_config(out_dir=str(tmp_path / "parallel"))
        r1 = run_experiment(cfg1, workers=1)
        r2 = run_experiment(cfg2, workers=2)
        for name in ("losses_0.csv", "losses_1.csv", "aggregate.csv"):
            assert (r1.out_dir / name).read_bytes() == (r2.out_dir / name).read_bytes()


class TestInitSpectrumReport:
    def test_eigeninit_pure_spike_all_mass_at_one(self):
        rng = np.random.default_rng(0)
        rep = init_spectrum_report(4, 6, ["eigeninit"], 50, rng, theta=0.0)
        counts = rep.counts["eigeninit"]
        # 1.0 is a bin edge; reconstruction round-off (1 +- 1e-16) spreads the
        # spike across the two bins that meet there
        edge = int(np.searchsorted(BIN_EDGES, 1.0))
        assert counts[edge - 1] + counts[edge] == 50 * 4
        assert counts.sum() == 50 * 4
        assert rep.means["eigeninit"] == pytest.approx(1.0, abs=1e-9)

    def test_histogram_bytes_deterministic(self, tmp_path):
        def render(sub):
            rng = np.random.default_rng(33)
            rep = init_spectrum_report(4, 6, ["gaussian", "xavier"], 40, rng)
            d = tmp_path / sub
            d.mkdir()
            write_spectrum_report(rep, d / "h.csv", d / "m.csv")
            return (d / "h.csv").read_bytes(), (d / "m.csv").read_bytes()

        assert render("a") == render("b")

    def test_depth_must_match_codec_chain(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ParameterError):
            init_spectrum_report(4, 3, ["xavier"], 5, rng)

    def test_unknown_scheme(self):
        with pytest.raises(ParameterError):
            init_spectrum_report(4, 6, ["sparse"], 5, np.random.default_rng(0))

    def test_counts_cover_all_draws(self):
        rng = np.random.default_rng(1)
        rep = init_spectrum_report(4, 6, ["gaussian"], 30, rng)
        assert rep.counts["gaussian"].sum() == 30 * 4
