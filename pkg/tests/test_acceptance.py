"""Acceptance suite: one test per release criterion.

Each test prints a `[PASS] <criterion>` line on success (run pytest with
-s to see them); a failing criterion shows up as a normal test failure.
Timed criteria assert their stated wall-clock budgets.
"""

from __future__ import annotations

import os
import time

import numpy as np
import pytest

from helpers import (
    KAGGLE_CLASSES,
    REFERENCE_ACCURACIES,
    accuracy_oracle,
    random_prediction_set,
    reference_fixture_set,
    vote_oracle,
)
from mek import classifiers as cl
from mek import ensemble as en
from mek import evaluation as ev
from mek import imageproc as ip


def _ok(name: str) -> None:
    print(f"\n[PASS] {name}")


def test_voting_oracle_equivalence():
    """1000 random sets (m<=7, C<=4, n<=200): exact oracle match, < 10 s."""
    rng = np.random.default_rng(100)
    start = time.perf_counter()
    for _ in range(1000):
        m = int(rng.integers(1, 8))
        c = int(rng.integers(2, 5))
        n = int(rng.integers(1, 201))
        pset = random_prediction_set(rng, m, n, c)
        weights = rng.integers(0, 11, size=m)
        if not weights.any():
            weights[int(rng.integers(m))] = 1
        result = en.vote_all(pset, weights)
        stacked = pset.stacked()
        for s in range(n):
            expected = vote_oracle([stacked[i, s] for i in range(m)], weights)
            assert result.predicted[s] == expected
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    _ok(f"voting oracle equivalence (1000 sets, {elapsed:.1f}s)")


def test_scale_invariance():
    """200 random (set, w, lambda in 1..9): identical predictions, < 5 s."""
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(200):
        m = int(rng.integers(1, 8))
        pset = random_prediction_set(rng, m, int(rng.integers(1, 60)), int(rng.integers(2, 5)))
        weights = rng.integers(0, 11, size=m)
        if not weights.any():
            weights[0] = 1
        lam = int(rng.integers(1, 10))
        base = en.vote_all(pset, weights).predicted
        scaled = en.vote_all(pset, lam * weights).predicted
        np.testing.assert_array_equal(base, scaled)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.1f}s"
    _ok(f"scale invariance (200 draws, {elapsed:.1f}s)")


def test_optimizer_optimality_small_scale():
    """50 instances of m=3, grid 3, 20 samples vs naive triple loop, < 10 s."""
    rng = np.random.default_rng(102)
    start = time.perf_counter()
    instances = []
    for _ in range(50):
        pset = random_prediction_set(rng, 3, 20, 3)
        truth = rng.integers(0, 3, 20)
        instances.append((pset, truth))
        found = en.optimize_weights(pset, truth, grid_max=3, top_k=1, budget=10_000, seed=0)[0]
        best = -1.0
        for w0 in range(4):
            for w1 in range(4):
                for w2 in range(4):
                    if w0 == w1 == w2 == 0:
                        continue
                    best = max(best, accuracy_oracle(pset, (w0, w1, w2), truth))
        assert found.accuracy == best
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    test_optimizer_optimality_small_scale.instances = instances
    _ok(f"optimizer optimality at small scale (50 instances, {elapsed:.1f}s)")


def test_optimizer_lower_bound():
    """Best found accuracy >= best single-model one-hot, every instance."""
    rng = np.random.default_rng(103)
    for _ in range(50):
        m = int(rng.integers(2, 5))
        pset = random_prediction_set(rng, m, 20, 3)
        truth = rng.integers(0, 3, 20)
        best = en.optimize_weights(pset, truth, grid_max=3, top_k=1, budget=100_000, seed=0)[0]
        for i in range(m):
            one_hot = tuple(int(i == j) for j in range(m))
            assert best.accuracy >= en.vote_all(pset, one_hot, truth).accuracy
    _ok("optimizer lower bound vs one-hot configurations (50 instances)")


def test_scenario_reproduction_on_synthetic_fixtures(tmp_path):
    """Seven fixture prediction files with the published per-model
    accuracies over 1311 samples: the top model must take weight 2
    (highest) and 7 (incremental)."""
    from mek import manifest_io as mio

    built, truth = reference_fixture_set(seed=7, n_samples=1311)
    entries = []
    for model in built.models:
        mio.write_predictions(
            tmp_path / f"{model.name}.csv", built.sample_ids, model.probs, built.class_names
        )
        entries.append(
            {"name": model.name, "prediction_file": f"{model.name}.csv", "accuracy": model.accuracy}
        )
    mio.write_models_manifest(tmp_path / "models.json", entries)
    pset = mio.load_model_set(tmp_path / "models.json", expected_classes=KAGGLE_CLASSES)
    names = [m.name for m in pset.models]
    accs = {m.name: m.accuracy for m in pset.models}

    # fixture accuracies line up with the targets to two decimals
    for name, target in REFERENCE_ACCURACIES:
        assert abs(accs[name] - target) * 1311 <= 0.5 + 1e-9, (name, accs[name])
    assert max(accs, key=accs.get) == "DenseNet121"

    highest = en.scenario_highest(pset)
    assert highest[names.index("DenseNet121")] == 2
    assert all(w == 1 for i, w in enumerate(highest) if names[i] != "DenseNet121")

    incremental = en.scenario_incremental(pset)
    assert incremental[names.index("DenseNet121")] == 7
    assert sorted(incremental) == [1, 2, 3, 4, 5, 6, 7]

    # the fixture set itself votes sanely under all three scenarios
    for weights in (en.scenario_uniform(7), incremental, highest):
        result = en.vote_all(pset, weights, truth)
        assert result.accuracy >= min(accs.values())
    _ok("scenario reproduction on synthetic reference fixtures (n=1311)")


def test_bcet_contract():
    """100 random non-degenerate images: min/max within 1 level of the
    targets, mean within 1.0 of 110, after quantization; < 5 s."""
    rng = np.random.default_rng(104)
    start = time.perf_counter()
    for _ in range(100):
        h, w = int(rng.integers(4, 40)), int(rng.integers(4, 40))
        img = rng.integers(0, 256, (h, w)).astype(float)
        if len(np.unique(img)) < 2:
            img[0, 0] = (img[0, 0] + 1) % 256
        out = ip.bcet(img, 0, 255, 110)
        quantized = ip.quantize_u8(out).astype(float)
        assert abs(float(out.min()) - 0.0) < 1e-6
        assert abs(float(out.max()) - 255.0) < 1e-6
        assert abs(float(quantized.min()) - 0.0) <= 1.0
        assert abs(float(quantized.max()) - 255.0) <= 1.0
        assert abs(float(out.mean()) - 110.0) < 1.0
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.1f}s"
    _ok(f"BCET contract (100 images, {elapsed:.1f}s)")


def test_canny_properties():
    """Uniform -> empty; vertical step -> one-pixel column; always binary."""
    uniform = ip.canny(np.full((12, 12), 77.0))
    assert int(uniform.sum()) == 0

    img = np.zeros((16, 16))
    img[:, 8:] = 255.0
    out = ip.canny(img)
    edge_cols = np.unique(np.nonzero(out)[1])
    assert len(edge_cols) == 1
    assert set(np.unique(out)) <= {0, 255}

    rng = np.random.default_rng(105)
    for _ in range(20):
        noise = rng.integers(0, 256, (int(rng.integers(5, 30)), int(rng.integers(5, 30)))).astype(float)
        edges = ip.canny(noise)
        assert set(np.unique(edges)) <= {0, 255}
    _ok("Canny properties (uniform empty, 1-px step column, binary output)")


def test_knn_oracle_equivalence():
    """50 queries vs brute-force sort on 20 points, 4 metrics, k in {1,3,5}."""
    rng = np.random.default_rng(106)
    train_x = rng.normal(size=(20, 2))
    train_y = rng.integers(0, 3, 20)
    data = cl.LabeledDataset(train_x, train_y, ["a", "b", "c"])
    queries = rng.normal(size=(50, 2))
    for metric in cl.default_metric_grid():
        for k in (1, 3, 5):
            model = cl.knn_fit(data, k, metric)
            got = cl.knn_predict_proba_all(model, queries)
            for q, row in zip(queries, got):
                scored = sorted(
                    (cl.distance(metric, q, x), i) for i, x in enumerate(train_x)
                )
                counts = [0, 0, 0]
                for _, i in scored[:k]:
                    counts[train_y[i]] += 1
                np.testing.assert_array_equal(row, np.array(counts) / k)
    _ok("KNN oracle equivalence (4 metrics x k in {1,3,5} x 50 queries)")


def test_svm_separability():
    """Linear kernel perfect on a margin-1 set; RBF perfect on XOR; < 5 s."""
    start = time.perf_counter()
    pts = np.array(
        [[-2.0, 0.5], [-1.5, -0.5], [-2.5, 1.0], [-1.0, 0.0],
         [2.0, 0.5], [1.5, -0.5], [2.5, 1.0], [1.0, 0.0]]
    )
    separable = cl.LabeledDataset(pts, np.array([0] * 4 + [1] * 4), ["l", "r"])
    linear = cl.svm_train(separable, cl.KernelSpec("linear"), C=10.0)
    linear_acc = np.mean(
        cl.svm_predict_proba_all(linear, separable.features).argmax(axis=1) == separable.labels
    )
    assert linear_acc == 1.0

    xor = cl.LabeledDataset(
        np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]),
        np.array([0, 0, 1, 1]),
        ["same", "diff"],
    )
    rbf = cl.svm_train(xor, cl.KernelSpec("rbf", gamma=1.0), C=10.0)
    rbf_acc = np.mean(
        cl.svm_predict_proba_all(rbf, xor.features).argmax(axis=1) == xor.labels
    )
    assert rbf_acc == 1.0
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.1f}s"
    _ok(f"SVM separability (linear margin-1 and RBF XOR, {elapsed:.1f}s)")


def test_metrics_identities():
    """accuracy == trace/total; F1 is the harmonic mean of P and R within
    1e-12, on 200 random confusion matrices."""
    rng = np.random.default_rng(107)
    for _ in range(200):
        c = int(rng.integers(2, 6))
        counts = rng.integers(0, 40, (c, c))
        if counts.sum() == 0:
            counts[0, 0] = 1
        cm = ev.ConfusionMatrix(counts=counts.astype(np.int64), class_names=[f"c{i}" for i in range(c)])
        rep = ev.report(cm)
        assert rep.accuracy == counts.trace() / counts.sum()
        for i in range(c):
            p, r = rep.precision[i], rep.recall[i]
            expected = 0.0 if p + r == 0 else 2.0 * p * r / (p + r)
            assert abs(rep.f1[i] - expected) <= 1e-12
    _ok("metrics identities (accuracy trace/total, F1 harmonic, 200 matrices)")


@pytest.mark.skipif(
    not os.environ.get("MEK_KAGGLE_DIR"),
    reason="set MEK_KAGGLE_DIR to the Kaggle dataset root (Training/ and Testing/) to enable",
)
def test_at_scale_kaggle_hog_knn():
    """Optional: HOG(128) + KNN(k=3, euclidean) within +-2.5 points of 97.94."""
    from scripts_support import run_kaggle_hog_knn  # pragma: no cover

    accuracy = run_kaggle_hog_knn(os.environ["MEK_KAGGLE_DIR"])
    assert abs(100.0 * accuracy - 97.94) <= 2.5
    _ok(f"at-scale Kaggle HOG+KNN accuracy {100.0 * accuracy:.2f}%")
