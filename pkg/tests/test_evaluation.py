import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbht.boosting import GbhtConfig, fit_gbht, gbht_log_density_at
from gbht.errors import DimensionMismatchError, InsufficientDataError
from gbht.evaluation import (
    CvResult,
    EvalReport,
    anll,
    auc,
    cross_validate,
    fold_indices,
    mae,
    parse_grid,
)


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


class TestMetrics:
    def test_mae_example(self):
        assert mae([1.0, 2.0, 3.0], [1.5, 2.0, 2.0]) == pytest.approx(0.5)

    def test_mae_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            mae([1.0], [1.0, 2.0])
        with pytest.raises(InsufficientDataError):
            mae([], [])

    def test_anll_example(self):
        assert anll([math.log(0.5), math.log(0.25)]) == pytest.approx(1.5 * math.log(2))

    def test_anll_infinite(self):
        assert anll([-np.inf, 0.0]) == np.inf

    def test_auc_examples(self):
        assert auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
        assert auc([0.1, 0.2, 0.9, 0.8], [1, 1, 0, 0]) == 0.0
        assert auc([0.5, 0.5], [1, 0]) == 0.5

    def test_auc_single_class(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 1])
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 2])

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(-5, 5), st.booleans()), min_size=2, max_size=60))
    def test_auc_matches_pairwise_count(self, rows):
        scores = [float(s) for s, _ in rows]
        labels = [int(y) for _, y in rows]
        if len(set(labels)) < 2:
            return
        assert auc(scores, labels) == pytest.approx(brute_auc(scores, labels), abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31))
    def test_auc_invariances(self, seed):
        rng = np.random.default_rng(seed)
        s = rng.standard_normal(40)
        y = np.r_[np.ones(20), np.zeros(20)]
        a = auc(s, y)
        assert auc(np.exp(3 * s) + 1, y) == pytest.approx(a, abs=1e-12)  # strictly increasing map
        assert auc(-s, y) == pytest.approx(1 - a, abs=1e-12)
        perm = rng.permutation(40)
        assert auc(s[perm], y[perm]) == pytest.approx(a, abs=1e-12)

    def test_permutation_invariance(self, rng):
        a, b = rng.random(30), rng.random(30)
        p = rng.permutation(30)
        assert mae(a[p], b[p]) == pytest.approx(mae(a, b), rel=1e-14)
        assert anll(a[p]) == pytest.approx(anll(a), rel=1e-14)

    def test_report_validation(self):
        EvalReport(anll=1.0, mae=0.0, auc=1.0)
        with pytest.raises(ValueError):
            EvalReport(anll=1.0, mae=-0.1)
        with pytest.raises(ValueError):
            EvalReport(anll=1.0, auc=1.5)
        assert EvalReport(anll=2.0).to_dict()["format"] == 1


class TestFolds:
    @pytest.mark.parametrize("n,k", [(10, 3), (2000, 3), (7, 7), (100, 4)])
    def test_balanced_partition(self, n, k):
        parts = fold_indices(n, k, np.random.default_rng(0))
        sizes = [len(p) for p in parts]
        assert max(sizes) - min(sizes) <= 1
        np.testing.assert_array_equal(np.sort(np.concatenate(parts)), np.arange(n))

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            fold_indices(2, 3, np.random.default_rng(0))
        with pytest.raises(ValueError):
            fold_indices(10, 1, np.random.default_rng(0))


class TestParseGrid:
    def test_range_inclusive(self):
        assert parse_grid("-3:0.5:3") == [-3 + 0.5 * k for k in range(13)]

    def test_list(self):
        assert parse_grid("0.5, 1,2") == [0.5, 1.0, 2.0]

    @pytest.mark.parametrize("bad", ["", "1:0:2", "1:2", "3:1:2", "a,b"])
    def test_bad(self, bad):
        with pytest.raises(ValueError):
            parse_grid(bad)


class TestCrossValidate:
    def data(self):
        return np.random.default_rng(2).standard_normal((150, 1))

    def test_single_cell(self):
        res = cross_validate(self.data(), GbhtConfig(iterations=3), [-1.0], [1.0])
        assert res.chosen == (-1.0, 0.0)
        assert len(res.table) == 1 and len(res.table[0][2]) == 3

    def test_duplicate_entries_pick_first(self):
        res = cross_validate(self.data(), GbhtConfig(iterations=3), [-1.0, -1.0], [0.5])
        assert res.table[0][3] == res.table[1][3]  # common random numbers
        assert res.chosen == (-1.0, -0.5)

    def test_deterministic(self):
        cfg = GbhtConfig(iterations=5, seed=4)
        a = cross_validate(self.data(), cfg, [-2.0, -1.0], [0.5, 1.0])
        b = cross_validate(self.data(), cfg, [-2.0, -1.0], [0.5, 1.0])
        assert a.table == b.table and a.chosen == b.chosen

    def test_threads_match_serial(self):
        cfg = GbhtConfig(iterations=5, seed=4)
        a = cross_validate(self.data(), cfg, [-2.0, -1.0], [0.5, 1.0])
        b = cross_validate(self.data(), cfg, [-2.0, -1.0], [0.5, 1.0], threads=3)
        assert a.table == b.table

    def test_table_recomputes(self):
        X = self.data()
        cfg = GbhtConfig(iterations=4, seed=8)
        res = cross_validate(X, cfg, [-2.0, -0.5], [0.5, 1.5])
        best = min(res.table, key=lambda r: r[3])
        assert res.chosen == (best[0], best[1])
        # recompute one row independently from the documented seeding
        rng = np.random.default_rng(8)
        parts = fold_indices(len(X), 3, rng)
        base = int(rng.integers(2**63))
        row = res.table[2]
        c = GbhtConfig(iterations=4, seed=8, s_min=row[0], s_max=row[1])
        vals = []
        for k, val in enumerate(parts):
            train = np.concatenate([p for j, p in enumerate(parts) if j != k])
            m = fit_gbht(X[train], c, np.random.default_rng([base, k]))
            vals.append(-np.mean(gbht_log_density_at(m, X[val])))
        np.testing.assert_allclose(row[2], vals, rtol=1e-14)
        assert row[3] == pytest.approx(np.mean(vals), rel=1e-14)

    def test_to_dict(self):
        res = CvResult([(-1.0, 0.0, (1.0, 2.0), 1.5)], (-1.0, 0.0), 2)
        d = res.to_dict()
        assert d["chosen"] == {"s_min": -1.0, "s_max": 0.0}
        assert d["table"][0]["fold_anll"] == [1.0, 2.0]

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            cross_validate(self.data(), GbhtConfig(iterations=1), [], [1.0])
        with pytest.raises(ValueError):
            cross_validate(self.data(), GbhtConfig(iterations=1), [0.0], [0.0])
