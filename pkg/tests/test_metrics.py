import json

import numpy as np
import pytest
from sklearn.metrics import average_precision_score, roc_auc_score

from graphod.exceptions import ContractError
from graphod.metrics import (eval_average_precision, eval_precision_at_k,
                             eval_recall_at_k, eval_roc_auc, metric_report, top_k)

from oracles import pairwise_auc, topk_enumeration


def random_instance(rng):
    n = int(rng.integers(2, 51))
    y = rng.integers(0, 2, n)
    y[rng.integers(n)] = 1
    # coarse rounding forces plenty of ties
    scores = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
    return y, scores


def test_precision_examples():
    y = [1, 0, 0, 1]
    assert eval_precision_at_k(y, [0.9, 0.1, 0.2, 0.8], 2) == 1.0
    assert eval_precision_at_k(y, [0.1, 0.9, 0.8, 0.2], 2) == 0.0
    assert eval_precision_at_k([0, 1, 1, 0, 1], [0, 5, 4, 1, 3]) == 1.0


def test_recall_examples():
    assert eval_recall_at_k([1, 0, 0, 1], [0.9, 0.1, 0.2, 0.8], 2) == 1.0
    assert eval_recall_at_k([1, 0, 1, 0], [0.3, 0.1, 0.2, 0.8], 4) == 1.0
    assert eval_recall_at_k([1, 1, 0, 0], [0.9, 0.1, 0.2, 0.8], 1) == 0.5


def test_auc_examples():
    assert eval_roc_auc([0, 1], [0.1, 0.9]) == 1.0
    assert eval_roc_auc([0, 1], [0.5, 0.5]) == 0.5
    assert eval_roc_auc([0, 1, 0, 1], [0.4, 0.3, 0.2, 0.9]) == 0.75


def test_top_k_ties_by_id():
    np.testing.assert_array_equal(top_k(np.array([1.0, 2.0, 2.0, 2.0]), 2), [1, 2])


def test_errors():
    with pytest.raises(ContractError):
        eval_precision_at_k([1, 0], [0.1, 0.2], 3)
    with pytest.raises(ContractError):
        eval_precision_at_k([0, 0], [0.1, 0.2])
    with pytest.raises(ContractError):
        eval_roc_auc([1, 1], [0.1, 0.2])
    with pytest.raises(ContractError):
        eval_roc_auc([1, 0, 1], [0.1, 0.2])


def test_against_oracles_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(500):
        y, s = random_instance(rng)
        n, pos = len(y), int(y.sum())
        k = int(rng.integers(1, n + 1))
        hits = topk_enumeration(y, s, k)
        p, r = eval_precision_at_k(y, s, k), eval_recall_at_k(y, s, k)
        assert abs(p - hits / k) <= 1e-12
        assert abs(r - hits / pos) <= 1e-12
        assert round(k * p) == round(pos * r) == hits
        if 0 < pos < n:
            assert abs(eval_roc_auc(y, s) - pairwise_auc(y, s)) <= 1e-12


def test_average_precision_matches_sklearn():
    rng = np.random.default_rng(1)
    for _ in range(200):
        y, s = random_instance(rng)
        s = s + rng.normal(scale=1e-6, size=len(s))  # sklearn breaks ties differently
        assert eval_average_precision(y, s) == pytest.approx(
            average_precision_score(y, s), abs=1e-12)
        if 0 < y.sum() < len(y):
            assert eval_roc_auc(y, s) == pytest.approx(roc_auc_score(y, s), abs=1e-12)


def test_average_precision_ties_match_sklearn():
    rng = np.random.default_rng(2)
    for _ in range(200):
        y, s = random_instance(rng)
        assert eval_average_precision(y, s) == pytest.approx(
            average_precision_score(y, s), abs=1e-12)


def test_invariant_under_increasing_transform():
    rng = np.random.default_rng(3)
    for _ in range(100):
        y, s = random_instance(rng)
        t = np.exp(3 * s) + 7
        k = int(rng.integers(1, len(y) + 1))
        assert eval_precision_at_k(y, s, k) == eval_precision_at_k(y, t, k)
        assert eval_recall_at_k(y, s, k) == eval_recall_at_k(y, t, k)
        assert eval_average_precision(y, s) == eval_average_precision(y, t)
        if 0 < y.sum() < len(y):
            assert eval_roc_auc(y, s) == eval_roc_auc(y, t)


def test_report_keys_and_default_k():
    rep = metric_report([1, 0, 0, 1], [0.9, 0.1, 0.2, 0.8])
    assert set(rep) == {"roc_auc", "precision_at_k", "recall_at_k", "k",
                        "average_precision"}
    assert rep["k"] == 2 and rep["precision_at_k"] == 1.0
    json.dumps(rep)
