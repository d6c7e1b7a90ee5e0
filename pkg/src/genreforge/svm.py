"""Soft-margin SVM trained with sequential minimal optimization.

Binary problems are solved by the simplified SMO scheme: sweep the
samples, pick a partner index at random for each KKT violator, solve the
two-variable subproblem analytically, and stop after ``max_passes``
consecutive full sweeps without an update. Multiclass uses one-vs-one
majority voting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaMismatchError, SingleClassError, TooFewSamplesError

ALPHA_EPS = 1e-8
MAX_SWEEPS = 2000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its parameter: "linear" or "rbf" (needs gamma)."""

    kind: str
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and (self.gamma is None or self.gamma <= 0):
            raise ValueError("rbf kernel needs gamma > 0")


@dataclass(frozen=True)
class SvmConfig:
    """Kernel, box constraint, and SMO stopping parameters."""

    kernel: KernelSpec
    C: float = 1.0
    tolerance: float = 1e-3
    max_passes: int = 10


def kernel_eval(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """K(x, y) for a single pair of vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if spec.kind == "linear":
        return float(np.dot(x, y))
    diff = x - y
    return float(np.exp(-spec.gamma * np.dot(diff, diff)))


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """K(a_i, b_j) for all row pairs; shape (len(A), len(B))."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if spec.kind == "linear":
        return A @ B.T
    sq_a = np.einsum("ij,ij->i", A, A)
    sq_b = np.einsum("ij,ij->i", B, B)
    dist = np.maximum(sq_a[:, None] + sq_b[None, :] - 2.0 * (A @ B.T), 0.0)
    return np.exp(-spec.gamma * dist)


@dataclass
class BinarySvm:
    """One trained two-class machine in dual form."""

    kernel: KernelSpec
    C: float
    support_vectors: np.ndarray   # (n_sv, n_features)
    dual_coef: np.ndarray         # alpha_i * y_i per support vector
    alphas: np.ndarray            # alpha_i per support vector
    bias: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.support_vectors.size == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(self.kernel, X, self.support_vectors) @ self.dual_coef \
            + self.bias


def train_binary(X: np.ndarray, y: np.ndarray, config: SvmConfig,
                 seed: int = 0) -> BinarySvm:
    """Fit one binary machine on labels in {-1, +1}.

    Raises SingleClassError if only one class is present. The returned
    duals always satisfy 0 <= alpha <= C.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise SchemaMismatchError(f"matrix {X.shape} against {y.size} labels")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise SingleClassError("binary training needs both classes")
    m = y.size
    K = kernel_matrix(config.kernel, X, X)
    alphas = np.zeros(m)
    bias = 0.0
    rng = np.random.default_rng(seed)
    C = config.C
    tol = config.tolerance
    quiet_passes = 0
    sweeps = 0
    while quiet_passes < config.max_passes and sweeps < MAX_SWEEPS:
        n_changed = 0
        coef = alphas * y
        for i in range(m):
            err_i = float(coef @ K[:, i]) + bias - y[i]
            r = y[i] * err_i
            if not ((r < -tol and alphas[i] < C) or (r > tol and alphas[i] > 0)):
                continue
            j = int(rng.integers(m - 1))
            if j >= i:
                j += 1
            err_j = float(coef @ K[:, j]) + bias - y[j]
            alpha_i, alpha_j = alphas[i], alphas[j]
            if y[i] != y[j]:
                low = max(0.0, alpha_j - alpha_i)
                high = min(C, C + alpha_j - alpha_i)
            else:
                low = max(0.0, alpha_i + alpha_j - C)
                high = min(C, alpha_i + alpha_j)
            if low == high:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0.0:
                continue
            new_j = alpha_j - y[j] * (err_i - err_j) / eta
            new_j = min(high, max(low, new_j))
            if abs(new_j - alpha_j) < 1e-5:
                continue
            new_i = alpha_i + y[i] * y[j] * (alpha_j - new_j)
            alphas[i] = new_i
            alphas[j] = new_j
            coef[i] = new_i * y[i]
            coef[j] = new_j * y[j]
            b1 = bias - err_i - y[i] * (new_i - alpha_i) * K[i, i] \
                - y[j] * (new_j - alpha_j) * K[i, j]
            b2 = bias - err_j - y[i] * (new_i - alpha_i) * K[i, j] \
                - y[j] * (new_j - alpha_j) * K[j, j]
            if 0.0 < new_i < C:
                bias = b1
            elif 0.0 < new_j < C:
                bias = b2
            else:
                bias = (b1 + b2) / 2.0
            n_changed += 1
        sweeps += 1
        quiet_passes = quiet_passes + 1 if n_changed == 0 else 0
    support = alphas > ALPHA_EPS
    return BinarySvm(kernel=config.kernel, C=C,
                     support_vectors=X[support],
                     dual_coef=(alphas * y)[support],
                     alphas=alphas[support], bias=float(bias))


@dataclass
class SvmModel:
    """One-vs-one multiclass model: one BinarySvm per class pair.

    Pair (a, b) with a < b in class order treats class ``a`` as +1, so a
    non-negative decision votes for the earlier class.
    """

    classes: tuple[str, ...]
    machines: dict[tuple[int, int], BinarySvm] = field(default_factory=dict)

    @property
    def n_pairs(self) -> int:
        return len(self.machines)


def train_multiclass(X: np.ndarray, labels, config: SvmConfig,
                     seed: int = 0) -> SvmModel:
    """Train k(k-1)/2 pairwise machines over the sorted class set."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = tuple(sorted(str(c) for c in np.unique(labels)))
    if len(classes) < 2:
        raise SingleClassError("multiclass training needs at least two classes")
    model = SvmModel(classes=classes)
    labels = labels.astype(str)
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            mask = (labels == classes[a]) | (labels == classes[b])
            pair_X = X[mask]
            pair_y = np.where(labels[mask] == classes[a], 1.0, -1.0)
            model.machines[(a, b)] = train_binary(pair_X, pair_y, config,
                                                  seed=seed + 31 * a + b)
    return model


def predict_votes(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Vote counts per class; shape (n_samples, n_classes)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    votes = np.zeros((X.shape[0], len(model.classes)), dtype=np.int64)
    for (a, b), machine in model.machines.items():
        decision = machine.decision(X)
        votes[decision >= 0.0, a] += 1
        votes[decision < 0.0, b] += 1
    return votes


def predict(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Majority-vote labels; ties resolve to the earliest class."""
    votes = predict_votes(model, X)
    return np.array([model.classes[i] for i in votes.argmax(axis=1)])


def accuracy(model: SvmModel, X: np.ndarray, labels) -> float:
    labels = np.asarray(labels).astype(str)
    return float((predict(model, X) == labels).mean())


def stratified_kfold(labels, n_folds: int, seed: int = 0) -> list[np.ndarray]:
    """Index arrays of ``n_folds`` stratified folds.

    Raises TooFewSamplesError if any class has fewer samples than folds.
    """
    labels = np.asarray(labels).astype(str)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in sorted(np.unique(labels)):
        idx = np.flatnonzero(labels == cls)
        if idx.size < n_folds:
            raise TooFewSamplesError(
                f"class {cls!r} has {idx.size} samples for {n_folds} folds")
        idx = rng.permutation(idx)
        for position, sample in enumerate(idx):
            folds[position % n_folds].append(int(sample))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


@dataclass(frozen=True)
class GridPoint:
    """One grid candidate and its cross-validated accuracy."""

    config: SvmConfig
    fold_accuracies: tuple[float, ...]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies)) if self.fold_accuracies else 0.0


def _grid_candidates(kernels, Cs, gammas) -> list[SvmConfig]:
    candidates = []
    for kind in kernels:
        if kind == "linear":
            for C in Cs:
                candidates.append(SvmConfig(kernel=KernelSpec("linear"), C=C))
        else:
            for C in Cs:
                for gamma in gammas:
                    candidates.append(SvmConfig(
                        kernel=KernelSpec("rbf", gamma=gamma), C=C))
    return candidates


def grid_search_cv(X: np.ndarray, labels, kernels=("linear", "rbf"),
                   Cs=(1.0,), gammas=(0.015625,), n_folds: int = 10,
                   seed: int = 0) -> tuple[SvmConfig, list[GridPoint]]:
    """Pick the kernel/C/gamma with the best stratified CV accuracy.

    Ties prefer smaller C, then linear over rbf, then smaller gamma. A
    single-candidate grid is returned directly with no CV table.
    """
    candidates = _grid_candidates(kernels, Cs, gammas)
    if not candidates:
        raise ValueError("empty parameter grid")
    if len(candidates) == 1:
        return candidates[0], []
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels).astype(str)
    folds = stratified_kfold(labels, n_folds, seed)
    all_idx = np.arange(labels.size)
    table: list[GridPoint] = []
    for candidate in candidates:
        fold_accs = []
        for f, val_idx in enumerate(folds):
            train_mask = np.ones(labels.size, dtype=bool)
            train_mask[val_idx] = False
            train_idx = all_idx[train_mask]
            model = train_multiclass(X[train_idx], labels[train_idx], candidate,
                                     seed=seed + f)
            fold_accs.append(accuracy(model, X[val_idx], labels[val_idx]))
        table.append(GridPoint(config=candidate, fold_accuracies=tuple(fold_accs)))

    def sort_key(point: GridPoint):
        cfg = point.config
        return (-point.mean_accuracy, cfg.C, cfg.kernel.kind != "linear",
                cfg.kernel.gamma if cfg.kernel.gamma is not None else 0.0)

    best = min(table, key=sort_key)
    return best.config, table


def save_svm(model: SvmModel, path: str | Path) -> None:
    """Serialize the model to JSON (floats via repr, lossless)."""
    payload = {
        "classes": list(model.classes),
        "machines": [
            {
                "pair": [a, b],
                "kernel": {"kind": m.kernel.kind, "gamma": m.kernel.gamma},
                "C": float(m.C),
                "bias": repr(float(m.bias)),
                "support_vectors": [[repr(float(v)) for v in row]
                                    for row in m.support_vectors],
                "dual_coef": [repr(float(v)) for v in m.dual_coef],
                "alphas": [repr(float(v)) for v in m.alphas],
            }
            for (a, b), m in sorted(model.machines.items())
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_svm(path: str | Path) -> SvmModel:
    payload = json.loads(Path(path).read_text())
    model = SvmModel(classes=tuple(payload["classes"]))
    for entry in payload["machines"]:
        a, b = entry["pair"]
        kernel = KernelSpec(entry["kernel"]["kind"], entry["kernel"]["gamma"])
        sv = np.array([[float(v) for v in row]
                       for row in entry["support_vectors"]], dtype=np.float64)
        if sv.size == 0:
            sv = sv.reshape(0, 0)
        model.machines[(a, b)] = BinarySvm(
            kernel=kernel, C=float(entry["C"]), support_vectors=sv,
            dual_coef=np.array([float(v) for v in entry["dual_coef"]]),
            alphas=np.array([float(v) for v in entry["alphas"]]),
            bias=float(entry["bias"]))
    return model
