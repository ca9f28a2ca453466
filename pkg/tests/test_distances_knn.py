import numpy as np
import pytest

from meltseries import (DistanceSpec, DtwSpec, SaxSpec, SfaSpec, TimeSeries,
                        dtw_distance, dtw_spec, euclidean_distance,
                        euclidean_spec, knn_fit, knn_predict,
                        knn_predict_batch, make_cv_folds, make_engine,
                        mean_distance, mean_spec, sax_bag_of_words, sax_spec,
                        sfa_spec, tune)
from meltseries.knn import distance_matrix
from conftest import make_record


class TestDistanceSpec:
    def test_kind_validation(self):
        with pytest.raises(ValueError):
            DistanceSpec(kind="cosine")
        with pytest.raises(ValueError):
            DistanceSpec(kind="dtw")  # missing DtwSpec
        with pytest.raises(ValueError):
            DistanceSpec(kind="sax")

    def test_roundtrip_dicts(self):
        specs = [
            mean_spec(),
            euclidean_spec(64),
            dtw_spec(0.2),
            sax_spec(SaxSpec(4, 8, 32), metric="word"),
            sfa_spec(SfaSpec(6, 4, 16, per_window_znorm=False)),
        ]
        for spec in specs:
            again = DistanceSpec.from_dict(spec.to_dict())
            assert again == spec

    def test_describe_mentions_parameters(self):
        assert "band=0.1" in dtw_spec(0.1).describe()
        assert "a=4" in sax_spec(SaxSpec(4, 8, 32)).describe()


class TestEngines:
    def test_mean_engine_matches_op(self, rng):
        engine = make_engine(mean_spec())
        for _ in range(10):
            a = TimeSeries(rng.normal(size=9))
            b = TimeSeries(rng.normal(size=14))
            got = engine.distance(engine.prepare(a), engine.prepare(b))
            assert got == pytest.approx(mean_distance(a, b), abs=1e-12)

    def test_euclidean_engine_matches_op(self, rng):
        engine = make_engine(euclidean_spec(16))
        engine.fit([])
        for _ in range(10):
            a = TimeSeries(rng.normal(size=12))
            b = TimeSeries(rng.normal(size=20))
            got = engine.distance(engine.prepare(a), engine.prepare(b))
            assert got == pytest.approx(
                euclidean_distance(a, b, 16), abs=1e-12)

    def test_euclidean_auto_length_uses_training_mean(self, rng):
        engine = make_engine(euclidean_spec(None))
        engine.fit([TimeSeries(rng.normal(size=10)),
                    TimeSeries(rng.normal(size=20))])
        assert engine.common_length == 15

    def test_dtw_engine_matches_op(self, rng):
        engine = make_engine(dtw_spec(0.3))
        a = TimeSeries(rng.normal(size=18))
        b = TimeSeries(rng.normal(size=22))
        got = engine.distance(engine.prepare(a), engine.prepare(b))
        assert got == dtw_distance(a, b, DtwSpec(0.3))

    def test_dtw_engine_notes_band_widening(self, rng):
        engine = make_engine(dtw_spec(0.01))
        a = TimeSeries(rng.normal(size=4))
        b = TimeSeries(rng.normal(size=60))
        engine.distance(engine.prepare(a), engine.prepare(b))
        assert engine.notes()

    def test_sax_engine_bag_matches_ops(self, rng):
        spec = SaxSpec(4, 4, 8)
        engine = make_engine(sax_spec(spec))
        s = TimeSeries(rng.normal(size=30))
        doc = engine.prepare(s)
        assert doc == sax_bag_of_words(s, spec)

    def test_sfa_requires_fit(self, rng):
        engine = make_engine(sfa_spec(SfaSpec(4, 4, 8)))
        with pytest.raises(ValueError, match="before"):
            engine.prepare(TimeSeries(rng.normal(size=20)))


class TestKnnPredict:
    def test_nearest_point(self):
        train = [make_record([0.0, 0.0], "A", 0, 0),
                 make_record([5.0, 5.0], "B", 1, 0)]
        model = knn_fit(train, 1, euclidean_spec(2))
        label, neighbors = knn_predict(model, TimeSeries([0.1, 0.0]))
        assert label == "A"
        assert neighbors[0].uid == (0, 0)

    def test_k_equals_train_size_gives_global_majority(self):
        train = [make_record([0.0, 0.0], "A", 0, 0),
                 make_record([0.1, 0.1], "A", 0, 1),
                 make_record([9.0, 9.0], "B", 1, 0)]
        model = knn_fit(train, 3, euclidean_spec(2))
        label, _ = knn_predict(model, TimeSeries([9.0, 9.0]))
        assert label == "A"

    def test_query_equal_to_training_record(self, rng):
        series = [rng.normal(size=10) for _ in range(4)]
        train = [make_record(s, f"L{i}", i, 0)
                 for i, s in enumerate(series)]
        model = knn_fit(train, 1, euclidean_spec(10))
        label, neighbors = knn_predict(model, TimeSeries(series[2]))
        assert label == "L2"
        assert neighbors[0].distance == 0.0

    def test_neighbors_ascending(self, rng):
        train = [make_record(rng.normal(size=8), "A", i, 0)
                 for i in range(6)]
        model = knn_fit(train, 4, euclidean_spec(8))
        _, neighbors = knn_predict(model, TimeSeries(rng.normal(size=8)))
        dists = [n.distance for n in neighbors]
        assert dists == sorted(dists)

    def test_equal_distances_break_by_index(self):
        train = [make_record([1.0, 0.0], "B", 0, 0),
                 make_record([-1.0, 0.0], "A", 1, 0)]
        model = knn_fit(train, 1, euclidean_spec(2))
        label, neighbors = knn_predict(model, TimeSeries([0.0, 0.0]))
        assert label == "B"  # same distance, record 0 first
        assert neighbors[0].train_index == 0

    def test_vote_tie_breaks_by_summed_distance(self):
        train = [make_record([0.0, 0.0], "A", 0, 0),
                 make_record([2.0, 0.0], "B", 1, 0),
                 make_record([3.0, 0.0], "B", 2, 0),
                 make_record([0.5, 0.0], "A", 3, 0)]
        # query at 1.1: dists A=1.1, B=0.9, B=1.9, A=0.6 -> top4 tie 2/2
        # sums: A=1.7, B=2.8 -> A
        model = knn_fit(train, 4, euclidean_spec(2))
        label, _ = knn_predict(model, TimeSeries([1.1, 0.0]))
        assert label == "A"

    def test_vote_tie_breaks_lexicographically_last(self):
        train = [make_record([1.0, 0.0], "B", 0, 0),
                 make_record([-1.0, 0.0], "A", 1, 0)]
        model = knn_fit(train, 2, euclidean_spec(2))
        label, _ = knn_predict(model, TimeSeries([0.0, 0.0]))
        assert label == "A"  # equal votes, equal sums -> lexicographic

    def test_one_nn_training_accuracy(self, rng):
        records = []
        for i in range(12):
            records.append(make_record(rng.normal(size=10) + 5 * (i % 3),
                                       f"C{i % 3}", i % 3, i // 3))
        model = knn_fit(records, 1, euclidean_spec(10))
        # precondition: distinct-label records at positive distance
        for i, a in enumerate(records):
            for b in records[i + 1:]:
                if a.label != b.label:
                    assert euclidean_distance(a.series, b.series, 10) > 0
        labels, _ = knn_predict_batch(model,
                                      [r.series for r in records])
        assert labels == [r.label for r in records]

    def test_model_validation(self):
        with pytest.raises(ValueError):
            knn_fit([], 1, mean_spec())
        train = [make_record([1.0], "A", 0, 0)]
        with pytest.raises(ValueError):
            knn_fit(train, 2, mean_spec())
        with pytest.raises(ValueError):
            knn_fit(train, 0, mean_spec())

    def test_failure_names_offending_record(self, rng):
        # SAX window longer than one training series
        train = [make_record(rng.normal(size=30), "A", 0, 0),
                 make_record(rng.normal(size=30), "B", 1, 0)]
        model = knn_fit(train, 1, sax_spec(SaxSpec(4, 4, 16)))
        with pytest.raises(ValueError, match="shorter than window"):
            knn_predict(model, TimeSeries(rng.normal(size=8)))


class TestParallelDeterminism:
    def test_matrix_identical_across_worker_counts(self, rng):
        engine = make_engine(dtw_spec(0.5))
        queries = [TimeSeries(rng.normal(size=20)) for _ in range(6)]
        refs = [make_record(rng.normal(size=25), "A", i, 0)
                for i in range(7)]
        preps_q = [engine.prepare(q) for q in queries]
        preps_r = [engine.prepare(r.series) for r in refs]
        m1 = distance_matrix(engine, preps_q, range(6), preps_r, refs,
                             workers=1)
        m4 = distance_matrix(engine, preps_q, range(6), preps_r, refs,
                             workers=4)
        assert np.array_equal(m1, m4)


def two_cluster_records(rng, per_class=12, n=16, gap=6.0):
    records = []
    for i in range(per_class):
        records.append(make_record(rng.normal(size=n), "lo", 0, i))
        records.append(make_record(rng.normal(size=n) + gap, "hi", 1, i))
    return records


class TestTune:
    def test_singleton_grid(self, rng):
        records = two_cluster_records(rng)
        folds = make_cv_folds(records, 3)
        result = tune(records, folds, [euclidean_spec(16)], k_grid=(1,))
        assert result.best.spec == euclidean_spec(16)
        assert result.best.mean_accuracy == pytest.approx(1.0)
        assert len(result.candidates) == 1

    def test_dominant_candidate_wins(self, rng):
        # means equal, shapes differ: euclidean separates, mean cannot
        records = []
        for i in range(10):
            flat = np.zeros(12) + rng.normal(0, 0.05, size=12)
            spike = np.zeros(12)
            spike[3] = 3.0
            spike[9] = -3.0
            records.append(make_record(flat, "flat", 0, i))
            records.append(make_record(
                spike + rng.normal(0, 0.05, size=12), "spiky", 1, i))
        folds = make_cv_folds(records, 5)
        result = tune(records, folds, [mean_spec(), euclidean_spec(12)],
                      k_grid=(1,))
        assert result.best.spec.kind == "euclidean"
        by_spec = {c.spec.kind: c for c in result.candidates}
        for f_e, f_m in zip(by_spec["euclidean"].fold_accuracies,
                            by_spec["mean"].fold_accuracies):
            assert f_e >= f_m

    def test_grid_order_breaks_ties(self, rng):
        records = two_cluster_records(rng)
        folds = make_cv_folds(records, 3)
        # both candidates reach 100%: first in grid order must win
        result = tune(records, folds,
                      [euclidean_spec(16), euclidean_spec(8)], k_grid=(1,))
        assert result.best.spec == euclidean_spec(16)

    def test_deterministic_across_runs(self, rng):
        records = two_cluster_records(rng, per_class=8)
        folds = make_cv_folds(records, 4)
        grid = [dtw_spec(0.2), dtw_spec(1.0)]
        r1 = tune(records, folds, grid, k_grid=(1, 3))
        r2 = tune(records, folds, grid, k_grid=(1, 3))
        assert r1.best == r2.best
        assert r1.candidates == r2.candidates

    def test_recorded_accuracy_recomputable(self, rng):
        records = two_cluster_records(rng, per_class=6, gap=2.0)
        folds = make_cv_folds(records, 3)
        result = tune(records, folds, [euclidean_spec(16)], k_grid=(1, 3))
        best = result.best
        # recompute from the stored fold assignment
        recomputed = []
        for f in sorted(set(result.fold_assignment.tolist())):
            train = [records[i] for i in
                     np.flatnonzero(result.fold_assignment != f)]
            val = [records[i] for i in
                   np.flatnonzero(result.fold_assignment == f)]
            model = knn_fit(train, best.k, best.spec)
            labels, _ = knn_predict_batch(model, [r.series for r in val])
            hits = sum(1 for lab, r in zip(labels, val) if lab == r.label)
            recomputed.append(hits / len(val))
        assert tuple(recomputed) == best.fold_accuracies
        assert best.mean_accuracy == pytest.approx(
            float(np.mean(recomputed)))

    def test_single_class_fold_rejected(self):
        records = [make_record([float(i)], "A" if i < 4 else "B", 0, i)
                   for i in range(8)]
        folds = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        # training part of fold 1 is all-A
        with pytest.raises(ValueError, match="single class"):
            tune(records, folds, [mean_spec()], k_grid=(1,))

    def test_k_larger_than_fold_train_rejected(self, rng):
        records = two_cluster_records(rng, per_class=3)
        folds = make_cv_folds(records, 3)
        with pytest.raises(ValueError, match="k="):
            tune(records, folds, [mean_spec()], k_grid=(5,))

    def test_empty_grid_rejected(self, rng):
        records = two_cluster_records(rng, per_class=3)
        folds = make_cv_folds(records, 3)
        with pytest.raises(ValueError, match="grid"):
            tune(records, folds, [], k_grid=(1,))
