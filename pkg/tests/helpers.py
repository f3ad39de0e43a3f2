"""Shared fixture builders and independent oracles used across the suite.

Oracles here are deliberately plain-Python loop implementations so they
do not share code paths with the package.
"""

from __future__ import annotations

import math

import numpy as np

from mek.ensemble import ModelPredictions, PredictionSet

KAGGLE_CLASSES = ["glioma", "meningioma", "no_tumor", "pituitary"]

# reference per-model accuracies on the Kaggle-style 4-class task, in model order
REFERENCE_ACCURACIES = [
    ("KNN", 0.9794),
    ("SVM", 0.9603),
    ("ResNet50", 0.9878),
    ("Xception", 0.9946),
    ("CNN-MRI", 0.9832),
    ("DenseNet121", 0.9960),
    ("ResNet101", 0.9908),
]


def random_prediction_set(rng, n_models: int, n_samples: int, n_classes: int) -> PredictionSet:
    models = [
        ModelPredictions(
            name=f"model{i}",
            probs=rng.dirichlet(np.ones(n_classes), size=n_samples),
            accuracy=float(rng.uniform(0.5, 1.0)),
        )
        for i in range(n_models)
    ]
    return PredictionSet(
        models=models,
        sample_ids=[f"s{j}" for j in range(n_samples)],
        class_names=[f"c{j}" for j in range(n_classes)],
    )


def vote_oracle(per_model_probs, weights) -> int:
    """Score-and-argmax with lowest-index tie-break, all plain Python."""
    n_classes = len(per_model_probs[0])
    best_class, best_score = 0, -math.inf
    for c in range(n_classes):
        score = 0.0
        for w, probs in zip(weights, per_model_probs):
            score += w * probs[c]
        if score > best_score:
            best_class, best_score = c, score
    return best_class


def accuracy_oracle(pset: PredictionSet, weights, truth) -> float:
    correct = 0
    for s in range(pset.n_samples):
        sample = [m.probs[s] for m in pset.models]
        if vote_oracle(sample, weights) == truth[s]:
            correct += 1
    return correct / pset.n_samples


def fixture_probs(rng, truth, accuracy: float, n_classes: int) -> tuple[np.ndarray, int]:
    """Probability matrix whose argmax agrees with truth on
    round(accuracy * n) samples; returns (probs, correct count)."""
    n = len(truth)
    n_correct = round(accuracy * n)
    correct_mask = np.zeros(n, dtype=bool)
    correct_mask[rng.permutation(n)[:n_correct]] = True
    probs = np.full((n, n_classes), 0.1 / (n_classes - 1))
    for i in range(n):
        if correct_mask[i]:
            winner = truth[i]
        else:
            winner = int((truth[i] + 1 + rng.integers(n_classes - 1)) % n_classes)
        probs[i] = 0.1 / (n_classes - 1)
        probs[i, winner] = 0.9
    return probs, n_correct


def reference_fixture_set(seed: int = 7, n_samples: int = 1311) -> tuple[PredictionSet, np.ndarray]:
    """Seven-model set whose individual accuracies line up with the
    reference figures over n synthetic samples."""
    rng = np.random.default_rng(seed)
    n_classes = len(KAGGLE_CLASSES)
    truth = rng.integers(0, n_classes, size=n_samples)
    models = []
    for name, accuracy in REFERENCE_ACCURACIES:
        probs, n_correct = fixture_probs(rng, truth, accuracy, n_classes)
        models.append(
            ModelPredictions(name=name, probs=probs, accuracy=n_correct / n_samples)
        )
    pset = PredictionSet(
        models=models,
        sample_ids=[f"s{j:05d}" for j in range(n_samples)],
        class_names=list(KAGGLE_CLASSES),
    )
    return pset, truth
