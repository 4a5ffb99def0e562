import json
import math

import numpy as np
import pytest

from uavsec.beamforming import InfeasibleError
from uavsec.channel import draw_large_scale, realize_link_pool
from uavsec.harness import pipeline
from uavsec.harness.cli import main, sign_test_p
from uavsec.harness.config import ConfigError, load_config
from uavsec.harness.output import emit_results, read_csv, write_csv
from uavsec.numerics import make_rng
from uavsec.stages import serve_direct, serve_relay

FAST = {
    ("dqn", "episodes"): "3", ("dqn", "steps_per_episode"): "5", ("dqn", "batch_size"): "4",
    ("run", "horizon"): "3", ("clustering", "restarts"): "5", ("mobility", "episodes"): "2",
    ("bench", "seeds"): "2", ("bench", "episodes"): "2", ("sweep", "episodes"): "2",
    ("sweep", "gammas"): "0.9", ("sweep", "learning_rates"): "1e-3, 1e-2",
}


def fast_config(**extra):
    overrides = dict(FAST)
    overrides.update({tuple(k.split("__")): v for k, v in extra.items()})
    return load_config(overrides=overrides)


def write_ini(path, body):
    path.write_text(body)
    return str(path)


class TestConfig:
    def test_defaults_build_a_scenario(self):
        sc = load_config().scenario(1)
        assert sc.k == 8 and sc.m_antennas == 8 and len(sc.eves) == 1

    def test_file_overrides(self, tmp_path):
        cfg = load_config(write_ini(tmp_path / "a.ini", "[radio]\nm_antennas = 4\n"))
        assert cfg.int("radio", "m_antennas") == 4

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_ini(tmp_path / "a.ini", "[bogus]\nx = 1\n"))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_ini(tmp_path / "a.ini", "[radio]\nantennas = 4\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.ini")

    def test_single_user_rejected(self):
        cfg = load_config(overrides={("users", "positions"): "300, 0, 0"})
        with pytest.raises(ConfigError):
            cfg.scenario(1)

    def test_out_of_bounds_user(self):
        cfg = load_config(overrides={("users", "positions"): "300, 0, 0; 5000, 0, 0"})
        with pytest.raises(ConfigError):
            cfg.scenario(1)

    def test_bad_share(self):
        with pytest.raises(ConfigError):
            load_config(overrides={("power", "direct_share"): "1.5"}).direct_share()

    def test_same_seed_same_drop(self):
        cfg = load_config()
        np.testing.assert_array_equal(cfg.draw_users(3), cfg.draw_users(3))
        assert not np.array_equal(cfg.draw_users(3), cfg.draw_users(4))


class TestPipeline:
    def test_two_eight_user_clusters(self):
        cfg = fast_config(users__per_cluster="8")
        result = pipeline.run_proposed(cfg, 1)
        assert tuple(result.cluster_sizes) == (8, 8)

    def test_deterministic(self):
        cfg = fast_config()
        a = pipeline.run_benchmarks(cfg, 2)
        b = pipeline.run_benchmarks(cfg, 2)
        assert [r.to_dict() for r in a] == [r.to_dict() for r in b]

    def test_benchmarks_share_channels(self):
        results = pipeline.run_benchmarks(fast_config(), 3)
        assert [r.scheme for r in results] == list(pipeline.SCHEMES)
        assert len({tuple(r.fingerprints) for r in results}) == 1
        assert all(r.total_secrecy >= 0 for r in results)
        assert all(r.cluster_sizes == (8, 0) for r in results if r.scheme.startswith("NoUAV"))

    def test_no_eavesdroppers_secrecy_equals_capacity(self):
        cfg = fast_config(eavesdroppers__positions="")
        art = pipeline.run_pipeline(cfg, 4, schemes=("Proposed",))
        result, sc = art.results[0], art.scenario
        large_scale = draw_large_scale(sc, make_rng(4, pipeline.LARGE_SCALE))
        totals = []
        for t, (*pos, budget) in enumerate(result.trajectory):
            pool = realize_link_pool(sc, make_rng(4, pipeline.SLOT, t), uav_position=pos, large_scale=large_scale)
            ch = pool.split(sc.gbs_users, sc.ar_users)
            relay = serve_relay(ch, budget, sc.lambda_r_max)
            direct = serve_direct(ch, sc.p_b_max - relay.gbs_power)
            totals.append(direct.total_capacity + relay.rates.total_capacity)
        assert result.total_secrecy == pytest.approx(float(np.mean(totals)), rel=1e-9)

    def test_colocated_eavesdropper_nulls_user(self):
        users = "100, 0, 0; 120, 10, 0; 700, 0, 0; 720, -10, 0"
        cfg = fast_config(users__positions=users, eavesdroppers__positions="120, 10, 0")
        results = pipeline.run_pipeline(cfg, 5, schemes=("NoUAV_NoBF",)).results
        assert results[0].per_user_secrecy[1] <= 1e-12
        assert results[0].per_user_secrecy[0] > 0

    def test_infeasible_cluster(self):
        cfg = fast_config(radio__n_antennas="1", users__per_cluster="4")
        with pytest.raises(InfeasibleError) as err:
            pipeline.run_proposed(cfg, 1)
        assert err.value.channel == "H2"

    def test_mobility_rejects_zero_step(self):
        with pytest.raises(ValueError):
            pipeline.run_mobility(fast_config(), 1, dx=0.0)

    def test_mobility_flags_partial(self):
        run = pipeline.run_mobility(fast_config(), 1, dx=100.0, steps=5)
        # the fifth center, 1080, leaves the 1000 m area
        assert run.partial and run.center_x == [680.0, 780.0, 880.0, 980.0]
        assert len(run.results) == 4

    def test_mobility_keeps_eavesdropper(self):
        run = pipeline.run_mobility(fast_config(), 2, steps=2)
        assert run.eve_x == [780.0] and not run.partial


class TestOutput:
    def test_empty_results(self, tmp_path):
        emit_results([], tmp_path)
        assert json.loads((tmp_path / "summary.json").read_text()) == {"results": []}

    def test_csv_round_trip(self, tmp_path):
        rows = [(1, 0.1 + 0.2, -3.5e-17, "x"), (2, math.pi, 1e300, "y")]
        write_csv(tmp_path / "s.csv", ["i", "a", "b", "c"], rows)
        back = read_csv(tmp_path / "s.csv")
        assert [(int(r["i"]), float(r["a"]), float(r["b"]), r["c"]) for r in back] == rows

    def test_numpy_values_serialize(self, tmp_path):
        emit_results({"a": np.float64(1.5), "b": np.arange(3), "c": np.bool_(True)}, tmp_path)
        data = json.loads((tmp_path / "summary.json").read_text())["results"]
        assert data == {"a": 1.5, "b": [0, 1, 2], "c": True}

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError):
            emit_results([], blocker / "sub")


class TestCli:
    def ini(self, tmp_path, **extra):
        sections = {}
        merged = dict(FAST)
        merged.update({tuple(k.split("__")): v for k, v in extra.items()})
        for (section, key), value in merged.items():
            sections.setdefault(section, []).append(f"{key} = {value}")
        body = "".join(f"[{s}]\n" + "\n".join(lines) + "\n" for s, lines in sections.items())
        return write_ini(tmp_path / "fast.ini", body)

    def test_run_is_byte_reproducible(self, tmp_path):
        cfg = self.ini(tmp_path)
        for name in ("a", "b"):
            assert main(["run", "--config", cfg, "--seed", "7", "--out", str(tmp_path / name)]) == 0
        for f in ("summary.json", "series_reward.csv", "series_secrecy_trace.csv", "series_trajectory.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        meta = json.loads((tmp_path / "a" / "run_meta.json").read_text())
        assert meta["seed"] == 7 and "timestamp" in meta

    def test_bench_writes_series(self, tmp_path):
        assert main(["bench", "--config", self.ini(tmp_path), "--out", str(tmp_path / "o")]) == 0
        rows = read_csv(tmp_path / "o" / "series_bench.csv")
        assert len(rows) == 2 * 4

    def test_sweep_ranks(self, tmp_path):
        assert main(["sweep", "--config", self.ini(tmp_path), "--out", str(tmp_path / "o")]) == 0
        ranked = json.loads((tmp_path / "o" / "summary.json").read_text())["results"]
        assert len(ranked) == 2 and ranked[0]["score"] >= ranked[1]["score"]

    def test_mobility_command(self, tmp_path):
        cfg = self.ini(tmp_path, mobility__steps="2")
        assert main(["mobility", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "series_mobility.csv").exists()

    def test_selftest_passes(self, tmp_path, capsys):
        assert main(["selftest", "--out", str(tmp_path / "o")]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_config_error_exit(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
        assert main(["run", "--scheme", "Nope", "--out", str(tmp_path)]) == 2

    def test_infeasible_exit(self, tmp_path):
        cfg = self.ini(tmp_path, radio__n_antennas="1")
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 3

    def test_io_error_exit(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["run", "--config", self.ini(tmp_path), "--out", str(blocker / "x")]) == 4

    def test_sign_test(self):
        assert sign_test_p(0, 0) == 1.0
        assert sign_test_p(5, 0) == pytest.approx(1 / 32)
        assert sign_test_p(15, 5) == pytest.approx(0.020694732666015625)
