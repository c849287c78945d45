"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance is pinned here, not configurable.
"""

from __future__ import annotations

import time
from contextlib import contextmanager

import numpy as np
import pytest

import fundwatch as fw
from fundwatch import classifier
from fundwatch.casepipeline import RunProfile, RunStore, run_batch, score_all
from fundwatch.clustering import ClusteringConfig, kmeans
from fundwatch.features import bucketize, compute_points, delta1_lookback
from fundwatch.screening import ScreeningThresholds, screen

from conftest import TABLE1_DISPLAYED, TABLE1_ROWS, point, tx, week_day
from test_clustering import brute_force_two_partition

G = fw.PeriodGranularity


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"FAIL  {name}")
        raise
    print(f"PASS  {name}")


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    """Compile the numba kernels before any timed section."""
    kmeans(np.random.default_rng(0).random((50, 2)), ClusteringConfig(n_clusters=2, rng_seed=0, n_init=1))
    ts = fw.TrainingSet([point(0.9, 0.9, idx=1)], [point(0.1, 0.1, idx=2)], 0.05)
    classifier.train(ts, fw.NetworkConfig(training_cycles=1, rng_seed=0))


def test_c1_table1_reproduction(table1_records):
    with criterion("Table I reproduction: weekly delta pairs within +/-0.01, in milliseconds"):
        aggregates = bucketize(table1_records, G.WEEK)
        started = time.perf_counter()
        points = compute_points(aggregates, 0)
        elapsed = time.perf_counter() - started
        by_row = {}
        for p in points:
            by_row[(p.aggregate.customer_id, p.aggregate.period_index)] = (p.delta1, p.delta2)
        for (customer, week, *_), (want1, want2) in zip(TABLE1_ROWS, TABLE1_DISPLAYED):
            idx = fw.period_index(week_day(2000, week, 2), G.WEEK)
            got1, got2 = by_row[(customer, idx)]
            assert abs(got1 - want1) <= 0.01, f"{customer} W{week}: delta1 {got1} vs {want1}"
            assert abs(got2 - want2) <= 0.01, f"{customer} W{week}: delta2 {got2} vs {want2}"
        assert elapsed < 0.05, f"feature computation took {elapsed:.4f}s"


def test_c2_lookback_worked_example():
    with criterion("Lookback refinement: subscription W30, redemption W33, k=3 gives exactly 0.9"):
        records = [
            tx("A01", "FA", week_day(2000, 30, 2), fw.Direction.SUBSCRIPTION, 100),
            tx("A01", "FA", week_day(2000, 33, 4), fw.Direction.REDEMPTION, 90, shares=120),
        ]
        aggregates = bucketize(records, G.WEEK)
        j = fw.period_index(week_day(2000, 33, 4), G.WEEK)
        assert delta1_lookback(aggregates, j, 3) == 0.9
        (p,) = [p for p in compute_points(aggregates, 3) if p.aggregate.period_index == j]
        assert p.delta1 == 0.9


def test_c3_screening_against_brute_force():
    with criterion("Screening: 10k random points match brute force exactly; monotone; idempotent"):
        rng = np.random.default_rng(99)
        xy = rng.random((10_000, 2))
        points = [point(x, y, idx=700000 + i) for i, (x, y) in enumerate(xy)]
        thresholds = ScreeningThresholds(0.4, 0.4)
        kept = screen(points, thresholds)
        brute = [p for p in points if p.delta1 >= 0.4 and p.delta2 >= 0.4]
        assert kept == brute

        sizes = []
        for bound in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
            sizes.append(len(screen(points, ScreeningThresholds(bound, bound))))
        assert sizes == sorted(sizes, reverse=True)

        assert screen(kept, thresholds) == kept


def test_c4_clustering_guarantees():
    with criterion("Clustering: seed-deterministic, non-increasing inertia, Lloyd fixed point, >=90/100 optimal"):
        rng = np.random.default_rng(5)
        pts = rng.random((500, 2))
        a = kmeans(pts, ClusteringConfig(rng_seed=7))
        b = kmeans(pts, ClusteringConfig(rng_seed=7))
        assert a.assignments == b.assignments and a.centroids == b.centroids

        history = a.inertia_history
        assert all(later <= earlier + 1e-12 for earlier, later in zip(history, history[1:]))

        exact = kmeans(pts, ClusteringConfig(rng_seed=7, convergence_tolerance=0.0, max_iterations=1000))
        cent = np.array(exact.centroids)
        labels = np.array(exact.assignments)
        distances = ((pts[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2)
        assert (distances.argmin(axis=1) == labels).all()
        for c in range(len(cent)):
            members = pts[labels == c]
            assert np.abs(members.mean(axis=0) - cent[c]).max() <= 1e-12

        hits = 0
        for instance in range(100):
            gen = np.random.default_rng(3000 + instance)
            small = gen.random((int(gen.integers(4, 9)), 2))
            optimum = brute_force_two_partition(small)
            result = kmeans(small, ClusteringConfig(n_clusters=2, rng_seed=4000 + instance))
            hits += result.inertia <= optimum + 1e-9
        assert hits >= 90, f"only {hits}/100 reached the exhaustive optimum"


def test_c5_gradient_check_ten_seeds():
    with criterion("Gradient check: analytic vs central differences <= 1e-6 over 10 seeds"):
        rng = np.random.default_rng(77)
        for seed in range(10):
            sample = ((float(rng.random()), float(rng.random())), float(rng.integers(0, 2)))
            err = fw.gradient_check(fw.NetworkConfig(layer_sizes=(2, 3, 1), rng_seed=seed), sample)
            assert err <= 1e-6, f"seed {seed}: max relative error {err}"


def test_c6_ordering_property(synth_run):
    with criterion("Ordering surrogate: day model scores (0.98,0.83) >= 0.9 and (0.0019,0.01) <= 0.1"):
        store, run_id, _ = synth_run
        model = store.load_model(run_id, G.DAY)
        high = classifier.predict(model, (0.98, 0.83))
        low = classifier.predict(model, (0.0019, 0.01))
        assert high >= 0.9, f"high-corner degree {high}"
        assert low <= 0.1, f"low-corner degree {low}"
        assert high > low


def test_c7_end_to_end_detection(tmp_path):
    with criterion("End-to-end: >=90% of injected customers in top 5% at Day or Week, 5 seeds"):
        for seed in (101, 202, 303, 404, 505):
            spec = fw.PopulationSpec(
                n_customers=1000,
                injections=(
                    fw.InjectionSpec(fw.PatternKind.RAPID_IN_OUT, 10),
                    fw.InjectionSpec(fw.PatternKind.EXCHANGE_ROUND_TRIP, 5),
                ),
                rng_seed=seed,
            )
            records, truth = fw.generate(spec)
            records, _ = fw.clean_mapping_errors(records)
            store = RunStore(tmp_path / f"runs-{seed}")
            run_id = run_batch(
                records,
                RunProfile(created_at="2001-01-01T00:00:00Z"),
                store,
                run_id=f"seed-{seed}",
            )
            detected: set[str] = set()
            for gran in (G.DAY, G.WEEK):
                rows = score_all(store, run_id, gran)
                cut = max(1, int(len(rows) * 0.05))
                detected |= {r.customer_id for r in rows[:cut] if r.customer_id in truth.entries}
            found = len(detected)
            assert found >= 0.9 * len(truth.entries), (
                f"seed {seed}: {found}/{len(truth.entries)} injected in top 5%"
            )


def test_c8_performance_desk_scale():
    with criterion("Performance: 70k clustering <= 1s, 45k scoring <= 1s, 2007x5000 training <= 60s"):
        rng = np.random.default_rng(1)
        pts = np.clip(rng.beta(2.0, 5.0, size=(70_000, 2)), 0.0, 1.0)
        started = time.perf_counter()
        kmeans(pts, ClusteringConfig(rng_seed=0))
        cluster_time = time.perf_counter() - started
        assert cluster_time <= 1.0, f"70k clustering took {cluster_time:.2f}s"

        spec = fw.PopulationSpec(n_customers=5500, mean_subscriptions=6.0, mean_redemptions=2.5, rng_seed=3)
        records, _ = fw.generate(spec)
        assert len(records) >= 45_000
        training_set = fw.TrainingSet(
            positives=[point(0.9, 0.9, idx=10 + i) for i in range(7)],
            negatives=[point(x, y, idx=100 + i) for i, (x, y) in enumerate(rng.random((2000, 2)) * 0.4)],
            negative_sampling_rate=0.05,
        )
        model = classifier.train(training_set, fw.NetworkConfig(training_cycles=10, rng_seed=0))

        started = time.perf_counter()
        aggregates = bucketize(records, G.DAY)
        points = compute_points(aggregates, 3)
        xy = np.array([(p.delta1, p.delta2) for p in points])
        degrees = classifier.predict_batch(model, xy)
        scoring_time = time.perf_counter() - started
        assert len(degrees) == len(points)
        assert scoring_time <= 1.0, f"scoring {len(records)} records took {scoring_time:.2f}s"

        assert len(training_set.positives) + len(training_set.negatives) == 2007
        started = time.perf_counter()
        classifier.train(training_set, fw.NetworkConfig(training_cycles=5000, rng_seed=0))
        training_time = time.perf_counter() - started
        assert training_time <= 60.0, f"2007x5000 training took {training_time:.1f}s"


def test_c9_replayability(tmp_path, synth_population):
    with criterion("Replayability: identical inputs and seeds reproduce model files byte-for-byte"):
        records, _ = synth_population
        profile = RunProfile(created_at="2001-01-01T00:00:00Z")
        store_a = RunStore(tmp_path / "a")
        store_b = RunStore(tmp_path / "b")
        run_batch(records, profile, store_a, run_id="replay")
        run_batch(records, profile, store_b, run_id="replay")
        for gran in ("Day", "Week", "Month"):
            bytes_a = (store_a.run_dir("replay") / "models" / f"{gran}.json").read_bytes()
            bytes_b = (store_b.run_dir("replay") / "models" / f"{gran}.json").read_bytes()
            assert bytes_a == bytes_b, f"{gran} model files differ"
