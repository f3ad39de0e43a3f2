"""Classical models over feature vectors: KNN with four distance metrics
and a one-vs-rest kernel SVM trained by simplified SMO.

Both classifiers emit per-class probability vectors so their outputs can
join the voting ensemble alongside ingested deep-model predictions.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    KTooLarge,
    ModelFormatError,
    NegativeFeature,
    SingleClassDataset,
)

MODEL_MAGIC = b"MEK1"
MODEL_VERSION = 1

METRIC_KINDS = ("euclidean", "manhattan", "minkowski", "chebyshev")
KERNEL_KINDS = ("linear", "rbf", "polynomial", "sigmoid", "chi_square", "laplacian", "gaussian")

CHI_SQUARE_EPS = 1e-10


@dataclass(frozen=True)
class DistanceMetric:
    kind: str
    p: float = 3.0  # minkowski exponent only

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric {self.kind!r}")
        if not (np.isfinite(self.p) and self.p > 0):
            raise ValueError("minkowski p must be finite and positive")


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float | None = None  # None resolves to 1/n_features at fit time
    degree: int = 3
    coef0: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


@dataclass
class LabeledDataset:
    features: np.ndarray  # (n, d) float
    labels: np.ndarray  # (n,) int, values < len(class_names)
    class_names: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) == 0:
            raise ValueError("features must be a non-empty (n, d) matrix")
        if len(self.labels) != len(self.features):
            raise ValueError("labels and features disagree on sample count")
        if self.labels.min() < 0 or self.labels.max() >= len(self.class_names):
            raise ValueError("labels must index into class_names")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


# --------------------------------------------------------------------------
# distances
# --------------------------------------------------------------------------

def distance(metric: DistanceMetric, a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    if metric.kind == "euclidean":
        return float(np.sqrt(np.sum(diff * diff)))
    if metric.kind == "manhattan":
        return float(np.sum(diff))
    if metric.kind == "chebyshev":
        return float(diff.max(initial=0.0))
    return float(np.sum(diff ** metric.p) ** (1.0 / metric.p))


def pairwise_distances(metric: DistanceMetric, queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distance matrix (n_queries, n_points); euclidean uses the Gram
    expansion, the rest run in row chunks to bound memory."""
    queries = np.asarray(queries, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    if queries.shape[1] != points.shape[1]:
        raise DimensionMismatch(f"{queries.shape[1]} vs {points.shape[1]} features")
    if metric.kind == "euclidean":
        sq = (
            np.sum(queries * queries, axis=1)[:, None]
            + np.sum(points * points, axis=1)[None, :]
            - 2.0 * queries @ points.T
        )
        return np.sqrt(np.maximum(sq, 0.0))
    out = np.empty((len(queries), len(points)))
    chunk = max(1, int(2**22 // max(points.size, 1)))
    for start in range(0, len(queries), chunk):
        diff = np.abs(queries[start : start + chunk, None, :] - points[None, :, :])
        if metric.kind == "manhattan":
            out[start : start + chunk] = diff.sum(axis=2)
        elif metric.kind == "chebyshev":
            out[start : start + chunk] = diff.max(axis=2)
        else:
            out[start : start + chunk] = (diff ** metric.p).sum(axis=2) ** (1.0 / metric.p)
    return out


# --------------------------------------------------------------------------
# KNN
# --------------------------------------------------------------------------

@dataclass
class KnnModel:
    features: np.ndarray
    labels: np.ndarray
    class_names: list[str]
    k: int
    metric: DistanceMetric


def knn_fit(data: LabeledDataset, k: int, metric: DistanceMetric) -> KnnModel:
    """Lazy learner: stores the training data verbatim."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(data.features):
        raise KTooLarge(f"k={k} > n={len(data.features)}")
    return KnnModel(
        features=data.features.copy(),
        labels=data.labels.copy(),
        class_names=list(data.class_names),
        k=k,
        metric=metric,
    )


def knn_predict_proba_all(model: KnnModel, queries) -> np.ndarray:
    """Per-class probabilities (neighbour counts over k) for each query
    row. Distance ties at the k-th position keep the lower training index."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != model.features.shape[1]:
        raise DimensionMismatch(
            f"query dim {queries.shape[1]} vs trained {model.features.shape[1]}"
        )
    dists = pairwise_distances(model.metric, queries, model.features)
    order = np.argsort(dists, axis=1, kind="stable")[:, : model.k]
    neighbour_labels = model.labels[order]
    n_classes = len(model.class_names)
    counts = np.zeros((len(queries), n_classes), dtype=np.int64)
    for c in range(n_classes):
        counts[:, c] = (neighbour_labels == c).sum(axis=1)
    return counts / model.k


def knn_predict_proba(model: KnnModel, x) -> np.ndarray:
    return knn_predict_proba_all(model, x)[0]


def default_metric_grid() -> list[DistanceMetric]:
    return [
        DistanceMetric("euclidean"),
        DistanceMetric("manhattan"),
        DistanceMetric("minkowski", p=3.0),
        DistanceMetric("chebyshev"),
    ]


@dataclass
class GridSearchResult:
    k: int
    metric: DistanceMetric
    accuracy: float
    table: list[tuple[int, DistanceMetric, float]] = field(repr=False)


def knn_grid_search(
    train: LabeledDataset,
    heldout: LabeledDataset,
    ks: range = range(1, 11),
    metrics: list[DistanceMetric] | None = None,
) -> GridSearchResult:
    """Evaluate every (k, metric) pair on the held-out split and return
    the most accurate one; ties prefer smaller k, then metric list order."""
    metrics = default_metric_grid() if metrics is None else metrics
    best = None
    table = []
    for mi, metric in enumerate(metrics):
        dists = pairwise_distances(metric, heldout.features, train.features)
        order = np.argsort(dists, axis=1, kind="stable")
        for k in ks:
            if k > len(train.features):
                raise KTooLarge(f"k={k} > n={len(train.features)}")
            neighbour_labels = train.labels[order[:, :k]]
            counts = np.zeros((len(heldout.features), train.n_classes), dtype=np.int64)
            for c in range(train.n_classes):
                counts[:, c] = (neighbour_labels == c).sum(axis=1)
            predicted = counts.argmax(axis=1)
            acc = float(np.mean(predicted == heldout.labels))
            table.append((k, metric, acc))
            key = (-acc, k, mi)
            if best is None or key < best[0]:
                best = (key, k, metric, acc)
    return GridSearchResult(k=best[1], metric=best[2], accuracy=best[3], table=table)


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

def _resolve_gamma(spec: KernelSpec, n_features: int) -> float:
    return spec.gamma if spec.gamma is not None else 1.0 / n_features


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(kernel_matrix(spec, a[None, :], b[None, :])[0, 0])


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"{A.shape[1]} vs {B.shape[1]} features")
    gamma = _resolve_gamma(spec, A.shape[1])
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "polynomial":
        return (gamma * (A @ B.T) + spec.coef0) ** spec.degree
    if spec.kind == "sigmoid":
        return np.tanh(gamma * (A @ B.T) + spec.coef0)
    if spec.kind in ("rbf", "gaussian"):
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * A @ B.T
        )
        sq = np.maximum(sq, 0.0)
        if spec.kind == "rbf":
            return np.exp(-gamma * sq)
        return np.exp(-sq / (2.0 * spec.sigma ** 2))
    if spec.kind == "chi_square" and (A.min(initial=0.0) < 0 or B.min(initial=0.0) < 0):
        raise NegativeFeature("chi_square kernel needs non-negative features")
    out = np.empty((len(A), len(B)))
    chunk = max(1, int(2**22 // max(B.size, 1)))
    for start in range(0, len(A), chunk):
        diff = A[start : start + chunk, None, :] - B[None, :, :]
        if spec.kind == "laplacian":
            out[start : start + chunk] = np.exp(-gamma * np.abs(diff).sum(axis=2))
        else:  # chi_square
            denom = A[start : start + chunk, None, :] + B[None, :, :] + CHI_SQUARE_EPS
            out[start : start + chunk] = np.exp(-gamma * (diff * diff / denom).sum(axis=2))
    return out


# --------------------------------------------------------------------------
# SVM (one-vs-rest, simplified SMO)
# --------------------------------------------------------------------------

@dataclass
class BinarySvm:
    sv_features: np.ndarray  # (n_sv, d)
    sv_coef: np.ndarray  # (n_sv,) alpha_i * y_i
    bias: float


@dataclass
class SvmModel:
    binaries: list[BinarySvm]  # one decision function per class
    kernel: KernelSpec  # gamma resolved to a concrete value
    C: float
    class_names: list[str]
    n_features: int


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_passes: int, rng) -> tuple[np.ndarray, float]:
    """Simplified SMO on a precomputed Gram matrix; random second index
    drawn from a seeded generator so training is reproducible."""
    n = len(y)
    alphas = np.zeros(n)
    b = 0.0
    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            Ei = float((alphas * y) @ K[:, i]) + b - y[i]
            if (y[i] * Ei < -tol and alphas[i] < C) or (y[i] * Ei > tol and alphas[i] > 0):
                j = int(rng.integers(n - 1))
                if j >= i:
                    j += 1
                Ej = float((alphas * y) @ K[:, j]) + b - y[j]
                ai_old, aj_old = alphas[i], alphas[j]
                if y[i] != y[j]:
                    L = max(0.0, aj_old - ai_old)
                    H = min(C, C + aj_old - ai_old)
                else:
                    L = max(0.0, ai_old + aj_old - C)
                    H = min(C, ai_old + aj_old)
                if L == H:
                    continue
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if eta >= 0:
                    continue
                aj = aj_old - y[j] * (Ei - Ej) / eta
                aj = min(max(aj, L), H)
                if abs(aj - aj_old) < 1e-5:
                    continue
                ai = ai_old + y[i] * y[j] * (aj_old - aj)
                alphas[i], alphas[j] = ai, aj
                b1 = b - Ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
                b2 = b - Ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
                if 0 < ai < C:
                    b = b1
                elif 0 < aj < C:
                    b = b2
                else:
                    b = (b1 + b2) / 2.0
                changed += 1
        passes = passes + 1 if changed == 0 else 0
    return alphas, b


def svm_train(
    data: LabeledDataset,
    kernel: KernelSpec,
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 10,
    seed: int = 0,
) -> SvmModel:
    """Train one binary problem per class (one-vs-rest, labels +-1)."""
    if C <= 0:
        raise ValueError("C must be > 0")
    present = np.unique(data.labels)
    if len(present) < 2:
        raise SingleClassDataset("training data contains a single class")
    kernel = replace(kernel, gamma=_resolve_gamma(kernel, data.features.shape[1]))
    K = kernel_matrix(kernel, data.features, data.features)
    binaries = []
    for c in range(data.n_classes):
        y = np.where(data.labels == c, 1.0, -1.0)
        rng = np.random.default_rng([seed, c])
        alphas, b = _smo(K, y, C, tol, max_passes, rng)
        sv = alphas > 1e-12
        binaries.append(
            BinarySvm(
                sv_features=data.features[sv].copy(),
                sv_coef=(alphas[sv] * y[sv]),
                bias=float(b),
            )
        )
    return SvmModel(
        binaries=binaries,
        kernel=kernel,
        C=float(C),
        class_names=list(data.class_names),
        n_features=data.features.shape[1],
    )


def svm_decision_values(model: SvmModel, queries) -> np.ndarray:
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != model.n_features:
        raise DimensionMismatch(f"query dim {queries.shape[1]} vs trained {model.n_features}")
    out = np.empty((len(queries), len(model.binaries)))
    for c, binary in enumerate(model.binaries):
        if len(binary.sv_features) == 0:
            out[:, c] = binary.bias
        else:
            out[:, c] = kernel_matrix(model.kernel, queries, binary.sv_features) @ binary.sv_coef + binary.bias
    return out


def softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def svm_predict_proba_all(model: SvmModel, queries) -> np.ndarray:
    """Softmax over the per-class decision values; the argmax class is
    the same before and after the mapping."""
    return softmax(svm_decision_values(model, queries))


def svm_predict_proba(model: SvmModel, x) -> np.ndarray:
    return svm_predict_proba_all(model, x)[0]


# --------------------------------------------------------------------------
# model files
# --------------------------------------------------------------------------

def _pack(path: Path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    header = dict(header)
    header["arrays"] = [
        {"name": name, "dtype": str(arr.dtype), "shape": list(arr.shape)}
        for name, arr in arrays.items()
    ]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, len(blob)))
        fh.write(blob)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr).tobytes())


def _unpack(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.read(4) != MODEL_MAGIC:
            raise ModelFormatError(f"{path}: missing MEK1 magic header")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != MODEL_VERSION:
            raise ModelFormatError(f"{path}: unsupported model version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for spec in header["arrays"]:
            count = int(np.prod(spec["shape"])) if spec["shape"] else 1
            dtype = np.dtype(spec["dtype"])
            raw = fh.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise ModelFormatError(f"{path}: truncated array {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(raw, dtype=dtype).reshape(spec["shape"]).copy()
    return header, arrays


def save_model(model: KnnModel | SvmModel, path: str | Path) -> None:
    path = Path(path)
    if isinstance(model, KnnModel):
        header = {
            "kind": "knn",
            "class_names": model.class_names,
            "k": model.k,
            "metric": {"kind": model.metric.kind, "p": model.metric.p},
        }
        _pack(path, header, {"features": model.features, "labels": model.labels})
    elif isinstance(model, SvmModel):
        header = {
            "kind": "svm",
            "class_names": model.class_names,
            "C": model.C,
            "n_features": model.n_features,
            "kernel": {
                "kind": model.kernel.kind,
                "gamma": model.kernel.gamma,
                "degree": model.kernel.degree,
                "coef0": model.kernel.coef0,
                "sigma": model.kernel.sigma,
            },
            "biases": [b.bias for b in model.binaries],
        }
        arrays = {}
        for i, binary in enumerate(model.binaries):
            arrays[f"sv_features_{i}"] = binary.sv_features
            arrays[f"sv_coef_{i}"] = binary.sv_coef
        _pack(path, header, arrays)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")


def load_model(path: str | Path) -> KnnModel | SvmModel:
    header, arrays = _unpack(Path(path))
    if header["kind"] == "knn":
        return KnnModel(
            features=arrays["features"],
            labels=arrays["labels"],
            class_names=list(header["class_names"]),
            k=int(header["k"]),
            metric=DistanceMetric(header["metric"]["kind"], p=float(header["metric"]["p"])),
        )
    if header["kind"] == "svm":
        spec = header["kernel"]
        binaries = [
            BinarySvm(
                sv_features=arrays[f"sv_features_{i}"],
                sv_coef=arrays[f"sv_coef_{i}"],
                bias=float(bias),
            )
            for i, bias in enumerate(header["biases"])
        ]
        return SvmModel(
            binaries=binaries,
            kernel=KernelSpec(
                spec["kind"],
                gamma=spec["gamma"],
                degree=int(spec["degree"]),
                coef0=float(spec["coef0"]),
                sigma=float(spec["sigma"]),
            ),
            C=float(header["C"]),
            class_names=list(header["class_names"]),
            n_features=int(header["n_features"]),
        )
    raise ModelFormatError(f"{path}: unknown model kind {header.get('kind')!r}")
