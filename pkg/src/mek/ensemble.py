"""Weighted voting over per-model probability matrices.

The final class for a sample is argmax_c sum_i w_i * p[i, c] with
non-negative integer weights w. Ships the three fixed weighting schemes
(uniform, accuracy-ranked incremental, best-model-doubled) and an
integer weight search that is exhaustive over canonical (gcd = 1)
vectors when that is affordable and falls back to seeded hill-climbing
otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllZeroWeights,
    BudgetTooSmall,
    LengthMismatch,
    MissingAccuracies,
)
from .evaluation import EvaluationReport, confusion, report

WeightVector = tuple[int, ...]


@dataclass
class ModelPredictions:
    """One model's (n_samples, n_classes) probability matrix plus the
    metadata the weighting scenarios need."""

    name: str
    probs: np.ndarray
    accuracy: float | None = None
    sample_ids: list[str] | None = None
    class_names: list[str] | None = None
    row_sum_deviation: float = 0.0  # worst |row sum - 1| seen before renormalization

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise ValueError("probs must be an (n_samples, n_classes) matrix")
        if self.probs.size:
            if self.probs.min() < -1e-9 or self.probs.max() > 1.0 + 1e-9:
                raise ValueError(f"model {self.name}: probabilities outside [0, 1]")
            worst = float(np.abs(self.probs.sum(axis=1) - 1.0).max())
            if worst > 1e-3:
                raise ValueError(f"model {self.name}: a row sums to 1 +- {worst:.2g}")


@dataclass
class PredictionSet:
    models: list[ModelPredictions]
    sample_ids: list[str]
    class_names: list[str]
    _stacked: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.models:
            raise ValueError("need at least one model")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate model names in {names}")
        n, c = len(self.sample_ids), len(self.class_names)
        for m in self.models:
            if m.probs.shape != (n, c):
                raise LengthMismatch(
                    f"model {m.name}: probs shape {m.probs.shape} != ({n}, {c})"
                )

    @property
    def n_models(self) -> int:
        return len(self.models)

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def stacked(self) -> np.ndarray:
        """(n_models, n_samples, n_classes) view used by the vote math."""
        if self._stacked is None:
            self._stacked = np.stack([m.probs for m in self.models])
        return self._stacked


@dataclass
class ScenarioResult:
    weights: WeightVector
    predicted: np.ndarray  # (n_samples,) class indices
    accuracy: float | None = None
    report: EvaluationReport | None = None


def _check_weights(weights, n_models: int | None = None) -> np.ndarray:
    w = np.asarray(weights)
    if w.ndim != 1:
        raise ValueError("weights must be a flat vector")
    if not np.issubdtype(w.dtype, np.integer):
        if not np.all(w == np.floor(w)):
            raise ValueError("weights must be integers")
        w = w.astype(np.int64)
    if w.min(initial=0) < 0:
        raise ValueError("weights must be non-negative")
    if n_models is not None and len(w) != n_models:
        raise LengthMismatch(f"{len(w)} weights for {n_models} models")
    if not np.any(w > 0):
        raise AllZeroWeights("at least one weight must be positive")
    return w.astype(np.int64)


def weighted_vote(sample_probs, weights) -> int:
    """Final class for one sample: argmax of the weight-scaled score sum,
    score ties resolving to the lowest class index."""
    probs = np.atleast_2d(np.asarray(sample_probs, dtype=np.float64))
    w = _check_weights(weights, n_models=len(probs))
    return int(np.argmax(w @ probs))


def vote_all(pset: PredictionSet, weights, truth=None) -> ScenarioResult:
    """Apply the weighted vote to every sample; with ground truth given,
    attach accuracy and the full metric report."""
    w = _check_weights(weights, n_models=pset.n_models)
    scores = np.tensordot(w.astype(np.float64), pset.stacked(), axes=1)
    predicted = scores.argmax(axis=1)
    result = ScenarioResult(weights=tuple(int(v) for v in w), predicted=predicted)
    if truth is not None:
        truth = np.asarray(truth, dtype=np.int64)
        if len(truth) != pset.n_samples:
            raise LengthMismatch(f"{len(truth)} labels for {pset.n_samples} samples")
        cm = confusion(truth, predicted, pset.n_classes, pset.class_names)
        result.report = report(cm)
        result.accuracy = result.report.accuracy
    return result


def scenario_uniform(n_models: int) -> WeightVector:
    """Every model contributes equally."""
    if n_models < 1:
        raise ValueError("need at least one model")
    return (1,) * n_models


def _require_accuracies(pset: PredictionSet) -> np.ndarray:
    missing = [m.name for m in pset.models if m.accuracy is None]
    if missing:
        raise MissingAccuracies(f"models without accuracy: {missing}")
    return np.array([m.accuracy for m in pset.models], dtype=np.float64)


def scenario_incremental(pset: PredictionSet) -> WeightVector:
    """Rank models by individual accuracy: the best gets weight n_models,
    the worst gets 1. Accuracy ties keep model list order."""
    acc = _require_accuracies(pset)
    order = np.argsort(-acc, kind="stable")
    weights = np.empty(pset.n_models, dtype=np.int64)
    for rank, idx in enumerate(order):
        weights[idx] = pset.n_models - rank
    return tuple(int(v) for v in weights)


def scenario_highest(pset: PredictionSet) -> WeightVector:
    """The single most accurate model gets weight 2, everyone else 1."""
    acc = _require_accuracies(pset)
    weights = [1] * pset.n_models
    weights[int(np.argmax(acc))] = 2
    return tuple(weights)


def canonicalize_weights(weights) -> WeightVector:
    """Divide by the overall gcd; the vote is invariant under scaling so
    this picks one representative per equivalence class."""
    w = _check_weights(weights)
    g = 0
    for v in w:
        g = math.gcd(g, int(v))
    return tuple(int(v) // g for v in w)


def _mobius(n: int) -> int:
    mu, d, m = 1, 2, n
    while d * d <= m:
        if m % d == 0:
            m //= d
            if m % d == 0:
                return 0
            mu = -mu
        d += 1
    if m > 1:
        mu = -mu
    return mu


def count_canonical_vectors(grid_max: int, n_models: int) -> int:
    """Number of integer vectors in [0, grid_max]^m with gcd exactly 1."""
    return sum(
        _mobius(d) * ((grid_max // d + 1) ** n_models - 1)
        for d in range(1, grid_max + 1)
    )


class _Evaluator:
    """Batched accuracy evaluation of weight vectors against truth."""

    def __init__(self, pset: PredictionSet, truth: np.ndarray):
        self.flat = pset.stacked().reshape(pset.n_models, -1)
        self.n = pset.n_samples
        self.c = pset.n_classes
        self.truth = truth

    def accuracies(self, batch: np.ndarray) -> np.ndarray:
        scores = (batch.astype(np.float64) @ self.flat).reshape(len(batch), self.n, self.c)
        return (scores.argmax(axis=2) == self.truth).mean(axis=1)


def _iter_canonical(grid_max: int, n_models: int):
    for vec in itertools.product(range(grid_max + 1), repeat=n_models):
        g = 0
        for v in vec:
            g = math.gcd(g, v)
        if g == 1:
            yield vec


def optimize_weights(
    pset: PredictionSet,
    truth,
    grid_max: int = 10,
    top_k: int = 3,
    budget: int = 2_000_000,
    seed: int = 0,
) -> list[ScenarioResult]:
    """Search integer weight vectors in [0, grid_max]^m (all-zero excluded)
    for the highest ensemble accuracy.

    When the number of canonical vectors fits the budget the search is an
    exhaustive enumeration and therefore optimal over the grid; otherwise
    it falls back to seeded multi-restart hill-climbing with +-1
    coordinate steps. Returns the top_k distinct canonical vectors by
    accuracy, ties broken by lexicographically smallest vector.
    """
    if grid_max < 1:
        raise ValueError("grid_max must be >= 1")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    m = pset.n_models
    if budget < m:
        raise BudgetTooSmall(f"budget {budget} < number of models {m}")
    truth = np.asarray(truth, dtype=np.int64)
    if len(truth) != pset.n_samples:
        raise LengthMismatch(f"{len(truth)} labels for {pset.n_samples} samples")
    evaluator = _Evaluator(pset, truth)

    if count_canonical_vectors(grid_max, m) <= budget:
        # running top-k merge keeps memory flat however large the grid is
        candidates: list[tuple[float, WeightVector]] = []

        def merge(batch: list[WeightVector]) -> None:
            nonlocal candidates
            accs = evaluator.accuracies(np.array(batch))
            candidates.extend((float(a), v) for a, v in zip(accs, batch))
            candidates.sort(key=lambda item: (-item[0], item[1]))
            del candidates[top_k:]

        batch: list[WeightVector] = []
        for vec in _iter_canonical(grid_max, m):
            batch.append(vec)
            if len(batch) == 8192:
                merge(batch)
                batch = []
        if batch:
            merge(batch)
    else:
        candidates = _hill_climb(evaluator, m, grid_max, budget, seed)
        candidates.sort(key=lambda item: (-item[0], item[1]))

    return [vote_all(pset, vec, truth) for _, vec in candidates[:top_k]]


def _hill_climb(
    evaluator: _Evaluator,
    m: int,
    grid_max: int,
    budget: int,
    seed: int,
) -> list[tuple[float, WeightVector]]:
    rng = np.random.default_rng(seed)
    cache: dict[WeightVector, float] = {}
    remaining = budget

    def evaluate(vecs: list[WeightVector]) -> None:
        """Batch-evaluate the canonical forms not seen yet; cache hits
        are free, fresh evaluations draw down the budget."""
        nonlocal remaining
        fresh: list[WeightVector] = []
        queued: set[WeightVector] = set()
        for vec in vecs:
            canon = canonicalize_weights(vec)
            if canon not in cache and canon not in queued:
                queued.add(canon)
                fresh.append(canon)
        fresh = fresh[: max(remaining, 0)]
        if not fresh:
            return
        for vec, acc in zip(fresh, evaluator.accuracies(np.array(fresh))):
            cache[vec] = float(acc)
        remaining -= len(fresh)

    def lookup(vec: WeightVector) -> float | None:
        return cache.get(canonicalize_weights(vec))

    def random_start() -> WeightVector:
        while True:
            vec = tuple(int(v) for v in rng.integers(0, grid_max + 1, size=m))
            if any(vec):
                return vec

    # one-hot starts first: they bound the result from below by the best
    # single model, then random restarts until the budget runs out
    starts = [tuple(int(i == j) for j in range(m)) for i in range(m)]
    while remaining > 0:
        current = starts.pop(0) if starts else random_start()
        evaluate([current])
        current_acc = lookup(current)
        if current_acc is None:
            break
        improved = True
        while improved:
            neighbors = []
            for i in range(m):
                for step in (-1, 1):
                    v = current[i] + step
                    if not 0 <= v <= grid_max:
                        continue
                    neighbor = current[:i] + (v,) + current[i + 1 :]
                    if any(neighbor):
                        neighbors.append(neighbor)
            evaluate(neighbors)
            improved = False
            best_neighbor, best_acc = None, current_acc
            for neighbor in neighbors:
                acc = lookup(neighbor)
                if acc is None:
                    continue
                canon = canonicalize_weights(neighbor)
                if acc > best_acc or (
                    acc == best_acc
                    and best_neighbor is not None
                    and canon < best_neighbor
                ):
                    best_neighbor, best_acc = canon, acc
            if best_neighbor is not None and best_acc > current_acc:
                current, current_acc = best_neighbor, best_acc
                improved = True
            if remaining <= 0:
                break
    return [(acc, vec) for vec, acc in cache.items()]
