import numpy as np
import pytest

from activepool.classifier import TrainConfig, accuracy, train
from activepool.dataset import IntegrityError, SyntheticSpec, generate_synthetic, labeled_pairs
from activepool.engine import (
    ALL_STRATEGIES,
    CurvePoint,
    LearningCurve,
    LoopConfig,
    LoopSession,
    OracleFailure,
    OracleResponse,
    baseline_noisy_pool,
    baseline_supervised,
    export_curve,
    load_checkpoint,
    read_curve,
    run_loop,
    save_checkpoint,
    simulated_oracle,
    state_digest,
)

FAST = TrainConfig(max_epochs=25)


def synth(rng_seed=0, *, irrelevant=10, pool_per_class=15, num_classes=3,
          separation=3.0, seed_per_class=6, test_per_class=10, dimensionality=4):
    return generate_synthetic(
        SyntheticSpec(num_classes=num_classes, dimensionality=dimensionality,
                      seed_per_class=seed_per_class, pool_per_class=pool_per_class,
                      irrelevant_count=irrelevant, test_per_class=test_per_class,
                      cluster_separation=separation, rng_seed=rng_seed)
    )


def loop_cfg(strategy="lc", max_iterations=12, checkpoints=None, **kw):
    return LoopConfig(
        strategy=strategy,
        max_iterations=max_iterations,
        checkpoint_iterations=checkpoints or (1, max_iterations),
        classifier_cfg=FAST,
        **kw,
    )


class TestRunLoop:
    def test_paper_checkpoint_schedule(self):
        """2000-iteration budget records the eight standard checkpoints."""
        ds = synth(irrelevant=80, pool_per_class=250, num_classes=8,
                   seed_per_class=20, test_per_class=5)
        cfg = LoopConfig(strategy="lc", max_iterations=2000,
                         classifier_cfg=TrainConfig(max_epochs=15), retrain_every=250)
        curve, state = run_loop(ds, cfg, simulated_oracle(ds))
        assert [p.iteration for p in curve.points] == [1, 250, 500, 750, 1000, 1250, 1500, 2000]
        assert curve.points[0].labeled_size == 160

    def test_single_iteration_single_item_pool(self):
        ds = synth(irrelevant=0, pool_per_class=0, num_classes=2, seed_per_class=4)
        ds.pool.append(
            type(ds.seed_set[0])(id="lonely", features=np.zeros(4), true_class=1, relevant=True)
        )
        cfg = loop_cfg(max_iterations=1, checkpoints=(1,))
        curve, state = run_loop(ds, cfg, simulated_oracle(ds))
        assert len(state.labeled) == len(ds.seed_set) + 1
        assert not state.pool

    def test_reject_consumes_iteration_but_not_labeled_slot(self):
        ds = synth(irrelevant=0, pool_per_class=0, num_classes=2, seed_per_class=4)
        ds.pool.append(
            type(ds.seed_set[0])(id="noise", features=np.zeros(4), true_class=0, relevant=False)
        )
        curve, state = run_loop(ds, loop_cfg(max_iterations=1, checkpoints=(1,)),
                                simulated_oracle(ds))
        assert len(state.labeled) == len(ds.seed_set)
        assert state.discarded == ["noise"]

    def test_batch_size_moves_k_items_per_iteration(self):
        ds = synth()
        cfg = loop_cfg(max_iterations=4, checkpoints=(1, 4), batch_size=3)
        _, state = run_loop(ds, cfg, simulated_oracle(ds))
        moved = (len(state.labeled) - len(ds.seed_set)) + len(state.discarded)
        assert moved == 12

    def test_empty_pool_at_start_rejected(self):
        ds = synth(irrelevant=0, pool_per_class=0)
        with pytest.raises(IntegrityError, match="pool"):
            run_loop(ds, loop_cfg(max_iterations=1, checkpoints=(1,)), simulated_oracle(ds))

    def test_halts_on_pool_exhaustion(self):
        ds = synth(irrelevant=2, pool_per_class=2)  # 8 pool items
        curve, state = run_loop(ds, loop_cfg(max_iterations=500, checkpoints=(1,)),
                                simulated_oracle(ds))
        assert not state.pool
        assert state.iteration == 9

    def test_lc_beats_random_on_noisy_pool(self):
        """Paired runs; the margin is measured, not assumed."""
        finals = {"lc": [], "random": []}
        for seed in range(3):
            ds = synth(rng_seed=seed, irrelevant=40, pool_per_class=30, separation=2.0)
            for strategy in finals:
                cfg = loop_cfg(strategy=strategy, max_iterations=120,
                               checkpoints=(1, 120), retrain_every=10, rng_seed=seed)
                curve, _ = run_loop(ds, cfg, simulated_oracle(ds))
                finals[strategy].append(curve.points[-1].test_accuracy)
        assert np.mean(finals["lc"]) >= np.mean(finals["random"]) - 0.02


class TestLoopInvariants:
    @pytest.mark.parametrize("strategy", ALL_STRATEGIES)
    def test_conservation_and_determinism(self, strategy):
        ds = synth(rng_seed=7)
        cfg = loop_cfg(strategy=strategy, max_iterations=10, checkpoints=(1, 5, 10),
                       rng_seed=11, retrain_every=2)
        digests = []
        for _ in range(2):
            curve, state = run_loop(ds, cfg, simulated_oracle(ds))
            acquired = len(state.labeled) - len(ds.seed_set)
            assert acquired + len(state.pool) + len(state.discarded) == len(ds.pool)
            moved = {i.id for i in state.labeled} | set(state.discarded)
            assert not moved & {ex.id for ex in state.pool}
            digests.append(state_digest(state))
        assert digests[0] == digests[1]

    def test_labeled_growth_monotone_and_no_requery(self):
        ds = synth(rng_seed=3)
        session = LoopSession(ds, loop_cfg(max_iterations=15, checkpoints=(1,)))
        oracle = simulated_oracle(ds)
        seen = set()
        sizes = []
        while not session.complete:
            selected = session.select()
            for example, _ in selected:
                assert example.id not in seen
                seen.add(example.id)
            session.record_checkpoint_if_due()
            for example, _ in selected:
                session.apply_response(example.id, oracle(example))
            session.finish_iteration()
            sizes.append(len(session.labeled))
        assert all(b >= a for a, b in zip(sizes, sizes[1:]))

    def test_test_set_never_trains(self):
        ds = synth()
        _, state = run_loop(ds, loop_cfg(max_iterations=8, checkpoints=(1,)),
                            simulated_oracle(ds))
        trained_ids = {i.id for i in state.labeled}
        assert not trained_ids & {ex.id for ex in ds.test_set}

    def test_curve_accuracies_bounded_and_increasing_iterations(self):
        ds = synth()
        curve, _ = run_loop(ds, loop_cfg(max_iterations=10, checkpoints=(1, 3, 7, 10)),
                            simulated_oracle(ds))
        iters = [p.iteration for p in curve.points]
        assert iters == sorted(set(iters))
        assert all(0.0 <= p.test_accuracy <= 1.0 for p in curve.points)


class TestOracle:
    def test_relevant_item_labeled_with_true_class(self, small_dataset):
        oracle = simulated_oracle(small_dataset)
        ex = next(e for e in small_dataset.pool if e.relevant)
        response = oracle(ex)
        assert not response.rejected and response.label == ex.true_class

    def test_irrelevant_item_rejected(self, small_dataset):
        oracle = simulated_oracle(small_dataset)
        ex = next(e for e in small_dataset.pool if not e.relevant)
        assert oracle(ex).rejected

    def test_unknown_id_rejected(self, small_dataset):
        oracle = simulated_oracle(small_dataset)
        with pytest.raises(IntegrityError, match="unknown"):
            oracle(small_dataset.test_set[0])

    def test_reject_fraction_matches_irrelevant_count(self):
        ds = synth(irrelevant=12, pool_per_class=10)
        oracle = simulated_oracle(ds)
        rejects = sum(oracle(ex).rejected for ex in ds.pool)
        assert rejects == 12

    def test_persistent_oracle_failure_carries_partial_state(self):
        ds = synth()
        calls = {"n": 0}

        def flaky(example):
            calls["n"] += 1
            raise ConnectionError("annotator went away")

        with pytest.raises(OracleFailure) as excinfo:
            run_loop(ds, loop_cfg(max_iterations=5, checkpoints=(1,)), flaky)
        assert calls["n"] == 3
        assert excinfo.value.state.iteration == 1
        assert len(excinfo.value.curve.points) == 1

    def test_transient_oracle_failure_retried(self):
        ds = synth()
        oracle = simulated_oracle(ds)
        calls = {"n": 0}

        def flaky(example):
            calls["n"] += 1
            if calls["n"] == 1:
                raise ConnectionError("hiccup")
            return oracle(example)

        curve, state = run_loop(ds, loop_cfg(max_iterations=2, checkpoints=(1,)), flaky)
        assert state.iteration == 3


class TestBaselines:
    def test_empty_pool_supervised_equals_seed_only_model(self):
        ds = synth(irrelevant=0, pool_per_class=0)
        X, y = labeled_pairs(ds.seed_set)
        test_X, test_y = labeled_pairs(ds.test_set)
        seed_only = accuracy(train(X, y, FAST, num_classes=ds.num_classes), test_X, test_y)
        assert baseline_supervised(ds, FAST) == seed_only

    def test_zero_noise_baselines_coincide(self):
        ds = synth(irrelevant=0)
        assert baseline_supervised(ds, FAST) == baseline_noisy_pool(ds, FAST)

    def test_supervised_dominates_active_runs_on_separable_data(self):
        converged = TrainConfig(max_epochs=300)  # both sides trained to convergence
        for seed in range(10):
            ds = synth(rng_seed=seed, irrelevant=0, separation=6.0)
            supervised = baseline_supervised(ds, converged)
            cfg = LoopConfig(strategy="ms", max_iterations=20, checkpoint_iterations=(1, 10, 20),
                             classifier_cfg=converged, retrain_every=5, rng_seed=seed)
            curve, _ = run_loop(ds, cfg, simulated_oracle(ds))
            assert supervised >= max(p.test_accuracy for p in curve.points)

    def test_noisy_pool_below_supervised_with_noise(self):
        gaps = []
        for seed in range(10):
            ds = synth(rng_seed=seed, irrelevant=60, pool_per_class=20, separation=2.0)
            gaps.append(baseline_supervised(ds, FAST) - baseline_noisy_pool(ds, FAST))
        assert np.mean(gaps) > 0

    def test_fully_irrelevant_pool_near_seed_only_level(self):
        ds = synth(irrelevant=100, pool_per_class=0, num_classes=8, seed_per_class=8,
                   dimensionality=6)
        X, y = labeled_pairs(ds.seed_set)
        test_X, test_y = labeled_pairs(ds.test_set)
        seed_only = accuracy(train(X, y, FAST, num_classes=8), test_X, test_y)
        assert baseline_noisy_pool(ds, FAST) <= seed_only + 0.05

    def test_noisy_baseline_requires_pool_labels(self):
        ds = synth(irrelevant=0, pool_per_class=2)
        ds.pool[0].true_class = None
        with pytest.raises(IntegrityError, match="noisy baseline"):
            baseline_noisy_pool(ds, FAST)

    def test_eight_class_reference_value_regression(self):
        """Frozen at first implementation as the acceptance reference line."""
        ds = synth(rng_seed=42, irrelevant=48, pool_per_class=20, num_classes=8,
                   seed_per_class=20, test_per_class=25, dimensionality=16,
                   separation=2.0)
        value = baseline_supervised(ds, TrainConfig())
        assert value == pytest.approx(REFERENCE_SUPERVISED_ACCURACY, abs=1e-9)


class TestCurveExport:
    def test_empty_curve_writes_header_only(self, tmp_path):
        path = tmp_path / "curve.csv"
        export_curve(LearningCurve(), path)
        assert path.read_text(encoding="utf-8") == "iteration,labeled_size,accuracy\n"

    def test_round_trip(self, tmp_path):
        curve = LearningCurve()
        for i, acc in [(1, 0.5), (250, 0.625), (500, 0.75)]:
            curve.append(CurvePoint(i, acc, 160 + i))
        path = tmp_path / "curve.csv"
        export_curve(curve, path)
        loaded = read_curve(path)
        assert loaded.points == curve.points

    def test_eight_checkpoints_make_nine_lines(self, tmp_path):
        curve = LearningCurve()
        for i in (1, 250, 500, 750, 1000, 1250, 1500, 2000):
            curve.append(CurvePoint(i, 0.5, i))
        path = tmp_path / "curve.csv"
        export_curve(curve, path)
        assert len(path.read_text(encoding="utf-8").splitlines()) == 9


class TestResume:
    @pytest.mark.parametrize("strategy", ["lc", "ve", "random"])
    def test_checkpoint_resume_matches_uninterrupted_run(self, tmp_path, strategy):
        ds = synth(rng_seed=5)
        cfg = loop_cfg(strategy=strategy, max_iterations=14, checkpoints=(1, 7, 14),
                       retrain_every=3, rng_seed=2)
        oracle = simulated_oracle(ds)

        straight = LoopSession(ds, cfg)
        while not straight.complete:
            straight.step(oracle)

        first = LoopSession(ds, cfg)
        for _ in range(6):
            first.step(oracle)
        path = tmp_path / "loop.json"
        save_checkpoint(first, path)
        resumed = load_checkpoint(ds, cfg, path)
        while not resumed.complete:
            resumed.step(oracle)

        assert state_digest(resumed.snapshot()) == state_digest(straight.snapshot())

    def test_checkpoint_strategy_mismatch_rejected(self, tmp_path):
        ds = synth()
        session = LoopSession(ds, loop_cfg(strategy="lc", max_iterations=5, checkpoints=(1,)))
        path = tmp_path / "loop.json"
        save_checkpoint(session, path)
        with pytest.raises(ValueError, match="strategy"):
            load_checkpoint(ds, loop_cfg(strategy="es", max_iterations=5, checkpoints=(1,)), path)


class TestLoopConfig:
    def test_default_checkpoints_clip_to_budget(self):
        cfg = LoopConfig(strategy="lc", max_iterations=300)
        assert cfg.checkpoint_iterations == (1, 250)

    def test_invalid_checkpoints_rejected(self):
        with pytest.raises(ValueError):
            LoopConfig(strategy="lc", max_iterations=10, checkpoint_iterations=(5, 5))
        with pytest.raises(ValueError):
            LoopConfig(strategy="lc", max_iterations=10, checkpoint_iterations=(1, 11))

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError, match="strategy"):
            LoopConfig(strategy="zz")


REFERENCE_SUPERVISED_ACCURACY = 0.81  # captured at first implementation
