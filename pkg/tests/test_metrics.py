import numpy as np
import pytest

from subqe import metrics as M
from subqe.errors import EmptyMatrix, LengthMismatch, NoPositives
from subqe.labeler import QeLabel

G, L, B = QeLabel.GOOD, QeLabel.LOOSE, QeLabel.BAD


class TestConfusion:
    def test_hand_matrix(self):
        cm = M.confusion([G, G, L, B, B, G], [G, L, L, B, G, B])
        expected = np.array([
            [1, 0, 1],   # truth Good: pred G, L, B
            [1, 1, 0],   # truth Loose
            [1, 0, 1],   # truth Bad
        ])
        np.testing.assert_array_equal(cm.counts, expected)
        assert cm.total == 6

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            M.confusion([G], [G, B])

    def test_empty(self):
        with pytest.raises(EmptyMatrix):
            M.confusion([], [])


class TestMetrics:
    def test_hand_values(self):
        cm = M.confusion([G, G, L, B, B, G], [G, L, L, B, G, B])
        r = M.metrics(cm)
        assert r.accuracy == pytest.approx(0.5)
        # precisions: G 1/3, L 1, B 1/2
        assert r.macro_precision == pytest.approx((1 / 3 + 1 + 1 / 2) / 3)
        # recalls all 1/2
        assert r.macro_recall == pytest.approx(0.5)
        # F1s: 0.4, 2/3, 0.5
        assert r.macro_f1 == pytest.approx((0.4 + 2 / 3 + 0.5) / 3)
        assert r.per_label_accuracy == {G: 0.5, L: 0.5, B: 0.5}

    def test_perfect(self):
        cm = M.confusion([G, L, B], [G, L, B])
        r = M.metrics(cm)
        assert r.accuracy == 1.0
        assert r.macro_precision == 1.0
        assert r.macro_recall == 1.0
        assert r.macro_f1 == 1.0

    def test_absent_label_zero_not_nan(self):
        # no Bad samples, no Bad predictions: 0/0 counts as 0
        cm = M.confusion([G, L], [G, L])
        r = M.metrics(cm)
        assert r.macro_f1 == pytest.approx(2 / 3)

    def test_scale_invariance(self):
        pred, truth = [G, L, B, G], [G, B, B, L]
        r1 = M.metrics(M.confusion(pred, truth))
        r2 = M.metrics(M.confusion(pred * 5, truth * 5))
        assert r1.accuracy == pytest.approx(r2.accuracy)
        assert r1.macro_f1 == pytest.approx(r2.macro_f1)

    def test_macro_f1_bounds(self):
        rng = np.random.default_rng(0)
        labels = list(M.LABEL_ORDER)
        for _ in range(50):
            n = int(rng.integers(3, 50))
            pred = [labels[i] for i in rng.integers(0, 3, n)]
            truth = [labels[i] for i in rng.integers(0, 3, n)]
            r = M.metrics(M.confusion(pred, truth))
            assert 0.0 <= r.macro_f1 <= 1.0
            assert 0.0 <= r.accuracy <= 1.0

    def test_table_renders(self):
        r = M.metrics(M.confusion([G, L, B], [G, L, B]))
        text = r.table()
        assert "Accuracy" in text and "F-Score" in text
        assert "100.00" in text


class TestMissRate:
    def test_counting(self):
        assert M.miss_rate([G, B, L, B], [G, L, L, G]) == pytest.approx(0.5)

    def test_zero(self):
        assert M.miss_rate([G, L], [G, L]) == 0.0

    def test_truth_with_bad_rejected(self):
        with pytest.raises(NoPositives):
            M.miss_rate([G, G], [G, B])

    def test_empty(self):
        with pytest.raises(NoPositives):
            M.miss_rate([])

    def test_permutation_invariant(self):
        pred = [G, B, B, L, G, B]
        base = M.miss_rate(pred)
        rng = np.random.default_rng(1)
        for _ in range(20):
            perm = list(rng.permutation(len(pred)))
            assert M.miss_rate([pred[i] for i in perm]) == pytest.approx(base)


class TestLengthBuckets:
    def test_bucketing(self):
        texts = ["one two three", " ".join(["w"] * 8), " ".join(["w"] * 12)]
        pred = [G, G, B]
        truth = [G, B, B]
        out = M.length_buckets(texts, pred, truth)
        assert out == {(1, 5): 1.0, (6, 10): 0.0, (11, 15): 1.0}

    def test_empty_buckets_absent(self):
        out = M.length_buckets(["a b"], [G], [G])
        assert set(out) == {(1, 5)}

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            M.length_buckets(["a"], [G, B], [G])
