import json

import numpy as np
import pytest

from online_unlearning import (
    BallDomain,
    GeneratorError,
    InvalidConfigError,
    eval_grad,
    measure_qg,
)
from online_unlearning.cli import main as cli_main
from online_unlearning.core import project
from online_unlearning.harness import (
    ExperimentConfig,
    build_schedule,
    config_hash,
    gen_stream,
    run_experiment,
    sweep_points,
)


def _base_config(**overrides):
    raw = {
        "dimension": 2,
        "horizon": 40,
        "radius": 1.0,
        "stream": {"kind": "sc-quadratic", "mu": 1.0, "beta": 3.0},
        "schedule": {"kind": "explicit", "entries": [[5, 12], [7, 25]]},
        "algorithm": "passive",
        "rate": {"kind": "sc-decreasing"},
        "unlearner": {"alpha": 2.0, "eps": 0.5, "omega": 1.2,
                      "gamma_mode": "per-step-product"},
        "seeds": [0, 1],
    }
    raw.update(overrides)
    return raw


class TestGenerators:
    def test_sc_quadratic_class_honesty(self):
        dom = BallDomain(1.0)
        gs = gen_stream("sc-quadratic",
                        dict(dimension=3, horizon=50, radius=1.0, mu=1.0, beta=3.0), seed=0)
        rng = np.random.default_rng(1)
        for _ in range(1000):
            t = int(rng.integers(1, 51))
            z = project(rng.standard_normal(3), dom)
            grad = eval_grad(gs.stream.item_at(t), z)[1]
            assert float(np.linalg.norm(grad)) <= gs.fn_class.lipschitz
        for item in gs.stream:
            eigs = np.linalg.eigvalsh(item.matrix)
            assert eigs[0] >= 1.0 - 1e-9 and eigs[-1] <= 3.0 + 1e-9
            assert np.linalg.norm(item.center) <= 0.5 + 1e-12

    def test_isotropic_degenerate_class(self):
        gs = gen_stream("sc-quadratic",
                        dict(dimension=2, horizon=5, radius=1.0, mu=1.0, beta=1.0), seed=0)
        for item in gs.stream:
            assert np.array_equal(item.matrix, np.eye(2))
        assert gs.kappa_aggregate == pytest.approx(1.0, rel=1e-12)

    def test_convex_qg_window_growth(self):
        dom = BallDomain(1.0)
        gs = gen_stream("convex-qg",
                        dict(dimension=2, horizon=40, radius=1.0, beta=1.0), seed=3)
        # Alternating rank-one directions: any even window has lambda_min = window/2.
        for item in gs.stream:
            assert np.linalg.eigvalsh(item.matrix)[0] == pytest.approx(0.0, abs=1e-12)
        for start in (0, 4, 10):
            for window in (4, 10, 20):
                total = sum(gs.stream.items[t].matrix for t in range(start, start + window))
                assert np.linalg.eigvalsh(total)[0] == pytest.approx(window / 2.0, rel=1e-9)

    def test_convex_qg_prefix_qg_measured(self):
        dom = BallDomain(1.0)
        gs = gen_stream("convex-qg",
                        dict(dimension=2, horizon=30, radius=1.0, beta=1.0), seed=4)
        for prefix in (10, 20, 30):
            est = measure_qg(list(gs.stream.items[:prefix]), dom, samples=300, seed=0)
            assert est.kappa_exact >= gs.kappa_aggregate * prefix * 0.99

    def test_convex_qg_target_enforced(self):
        with pytest.raises(GeneratorError):
            gen_stream("convex-qg",
                       dict(dimension=2, horizon=40, radius=1.0, beta=1.0,
                            kappa_rate=0.9), seed=0)

    def test_assumption2_shared_stationary_point(self):
        gs = gen_stream("assumption2-segments",
                        dict(dimension=2, horizon=20, radius=1.0, mu=1.0, beta=3.0), seed=5)
        center = gs.stream.item_at(1).center
        for item in gs.stream:
            assert np.array_equal(item.center, center)
            assert np.allclose(eval_grad(item, center)[1], 0.0, atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(GeneratorError):
            gen_stream("mystery", dict(dimension=2, horizon=5, radius=1.0), seed=0)


class TestSchedules:
    def test_explicit(self):
        sched = build_schedule({"kind": "explicit", "entries": [[2, 5], [3, 9]]}, 20)
        assert sched.entries == ((2, 5), (3, 9))

    def test_pattern(self):
        sched = build_schedule({"kind": "pattern", "k": 3, "gap": 4,
                                "spacing": 10, "first_time": 10}, 40)
        assert sched.times == (10, 20, 30)
        assert sched.indices == (6, 16, 26)

    def test_adversarial_early(self):
        sched = build_schedule({"kind": "adversarial-early", "k": 3,
                                "spacing": 8, "first_time": 8}, 40)
        assert sched.indices == (1, 2, 3)
        assert sched.times == (8, 16, 24)


class TestConfigValidation:
    def test_accepts_valid(self):
        ExperimentConfig.from_dict(_base_config())

    def test_rejects_unknown_field_with_path(self):
        raw = _base_config()
        raw["stream"]["typo_field"] = 1
        with pytest.raises(InvalidConfigError) as err:
            ExperimentConfig.from_dict(raw)
        assert "stream" in str(err.value)

    def test_rejects_missing_required(self):
        raw = _base_config()
        del raw["seeds"]
        with pytest.raises(InvalidConfigError):
            ExperimentConfig.from_dict(raw)

    def test_rejects_bad_enum(self):
        raw = _base_config(algorithm="magic")
        with pytest.raises(InvalidConfigError) as err:
            ExperimentConfig.from_dict(raw)
        assert "algorithm" in str(err.value)


class TestRunExperiment:
    def test_outputs_and_reproducibility(self, tmp_path):
        cfg = ExperimentConfig.from_dict(_base_config())
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        s1 = run_experiment(cfg, out1)
        s2 = run_experiment(cfg, out2)
        assert s1["config_hash"] == s2["config_hash"]
        digest = s1["config_hash"]
        files = sorted((out1 / digest).rglob("*"))
        assert files
        for f1 in files:
            f2 = out2 / digest / f1.relative_to(out1 / digest)
            if f1.is_file():
                assert f1.read_bytes() == f2.read_bytes(), f1.name

    def test_expected_artifacts(self, tmp_path):
        cfg = ExperimentConfig.from_dict(_base_config())
        summary = run_experiment(cfg, tmp_path)
        base = tmp_path / summary["config_hash"]
        for seed in (0, 1):
            assert (base / str(seed) / "trace.csv").exists()
            assert (base / str(seed) / "regret.json").exists()
            assert (base / str(seed) / "cert.json").exists()
        assert (base / "summary.json").exists()
        assert summary["cert_pass_rate"] == 1.0

    def test_no_cert_for_k_zero(self, tmp_path):
        raw = _base_config(schedule={"kind": "explicit", "entries": []})
        cfg = ExperimentConfig.from_dict(raw)
        summary = run_experiment(cfg, tmp_path)
        base = tmp_path / summary["config_hash"]
        assert not (base / "0" / "cert.json").exists()

    def test_sigma_decays_with_gap_sweep(self, tmp_path):
        """sigma_1 across a gap sweep decays like gamma^gap under the nominal mode."""
        sigmas = {}
        for gap in range(1, 8):
            raw = _base_config(
                schedule={"kind": "explicit", "entries": [[12 - gap, 12]]},
                unlearner={"alpha": 2.0, "eps": 0.5, "omega": 1.2, "gamma_mode": "nominal"},
                seeds=[0],
            )
            summary = run_experiment(ExperimentConfig.from_dict(raw), tmp_path)
            run_json = tmp_path / summary["config_hash"] / "0" / "run.json"
            with open(run_json) as handle:
                events = json.load(handle)["noise_events"]
            sigmas[gap] = events[0]["sigma"] / events[0]["delta"]
        for gap in range(1, 7):
            assert sigmas[gap + 1] / sigmas[gap] == pytest.approx(0.5, rel=1e-12)

    def test_retrain_and_discard_paths(self, tmp_path):
        for algo in ("retrain", "discard"):
            raw = _base_config(algorithm=algo)
            summary = run_experiment(ExperimentConfig.from_dict(raw), tmp_path)
            assert summary["cert_pass_rate"] is None

    def test_active_path(self, tmp_path):
        raw = _base_config(
            algorithm="active",
            schedule={"kind": "explicit", "entries": [[10, 12], [20, 25]]},
        )
        summary = run_experiment(ExperimentConfig.from_dict(raw), tmp_path)
        base = tmp_path / summary["config_hash"]
        with open(base / "0" / "cert.json") as handle:
            cert = json.load(handle)
        assert cert[0]["exact_divergence"] is None
        assert summary["cert_pass_rate"] == 1.0


class TestSweepAndCli:
    def test_sweep_expansion(self):
        raw = _base_config()
        raw["sweep"] = {"unlearner.eps": [0.5, 1.0], "dimension": [2, 3]}
        points = sweep_points(ExperimentConfig.from_dict(raw))
        assert len(points) == 4
        dims = sorted(p.raw["dimension"] for p in points)
        assert dims == [2, 2, 3, 3]
        assert all("sweep" not in p.raw for p in points)

    def test_cli_run_and_report(self, tmp_path):
        config_path = tmp_path / "config.json"
        with open(config_path, "w") as handle:
            json.dump(_base_config(), handle)
        out = tmp_path / "out"
        code = cli_main(["run", "--config", str(config_path), "--out", str(out)])
        assert code == 0
        code = cli_main(["regret-report", "--config", str(config_path), "--out", str(out)])
        assert code == 0
        code = cli_main(["certify", "--config", str(config_path), "--out", str(out)])
        assert code == 0

    def test_cli_rejects_bad_config(self, tmp_path):
        config_path = tmp_path / "bad.json"
        with open(config_path, "w") as handle:
            json.dump({"nope": 1}, handle)
        assert cli_main(["run", "--config", str(config_path), "--out", str(tmp_path)]) == 2

    def test_cli_certify_skips_regret(self, tmp_path):
        config_path = tmp_path / "config.json"
        with open(config_path, "w") as handle:
            json.dump(_base_config(seeds=[0]), handle)
        out = tmp_path / "out"
        assert cli_main(["certify", "--config", str(config_path), "--out", str(out)]) == 0
        digest = next(p for p in out.iterdir() if p.is_dir())
        assert (digest / "0" / "cert.json").exists()
        assert not (digest / "0" / "regret.json").exists()

    def test_regret_report_recomputes_from_store(self, tmp_path):
        from online_unlearning.harness import recompute_regret

        cfg = ExperimentConfig.from_dict(_base_config(seeds=[0]))
        summary = run_experiment(cfg, tmp_path)
        result = recompute_regret(cfg, tmp_path, 0)
        assert result["matches"]
        assert result["stored"] == pytest.approx(result["recomputed"], rel=1e-12, abs=1e-12)

    def test_parallel_seeds_identical_output(self, tmp_path):
        cfg = ExperimentConfig.from_dict(_base_config(seeds=[0, 1, 2]))
        s1 = run_experiment(cfg, tmp_path / "seq", jobs=1)
        s2 = run_experiment(cfg, tmp_path / "par", jobs=3)
        digest = s1["config_hash"]
        for f1 in sorted((tmp_path / "seq" / digest).rglob("*")):
            if f1.is_file():
                f2 = tmp_path / "par" / digest / f1.relative_to(tmp_path / "seq" / digest)
                assert f1.read_bytes() == f2.read_bytes()

    def test_regret_curve_csv(self, tmp_path):
        cfg = ExperimentConfig.from_dict(_base_config(seeds=[0]))
        summary = run_experiment(cfg, tmp_path)
        path = tmp_path / summary["config_hash"] / "0" / "regret_curve.csv"
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "t,cumulative_regret,bound_rhs"
        assert len(rows) == 41
        final = float(rows[-1].split(",")[1])
        with open(tmp_path / summary["config_hash"] / "0" / "regret.json") as handle:
            assert final == pytest.approx(json.load(handle)["regret"], rel=1e-9, abs=1e-12)

    def test_precondition_warning_blocks_claim(self, tmp_path):
        raw = _base_config(schedule={"kind": "explicit", "entries": [[1, 12]]}, seeds=[0])
        with pytest.warns(RuntimeWarning):
            summary = run_experiment(ExperimentConfig.from_dict(raw), tmp_path)
        assert summary["per_seed"][0]["regret_pass"] is None

    def test_cli_seed_override(self, tmp_path):
        config_path = tmp_path / "config.json"
        with open(config_path, "w") as handle:
            json.dump(_base_config(), handle)
        out = tmp_path / "out"
        code = cli_main(["run", "--config", str(config_path), "--out", str(out),
                         "--seeds", "7"])
        assert code == 0
        dirs = [p.name for p in out.iterdir() if p.is_dir()]
        seed_dirs = list((out / dirs[0]).glob("7"))
        assert seed_dirs
