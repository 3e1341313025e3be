"""Random forest of Gini decision trees, plus k-fold and fixed-split evaluation."""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import ValidationError, check_feature_matrix

FORMAT_MAGIC = "LTMTEX-FOREST"
FORMAT_VERSION = 1
LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 10
    min_samples_split: int = 2
    max_depth: int | None = None
    features_per_split: str = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if int(self.n_trees) < 1:
            raise ValidationError(f"n_trees must be >= 1, got {self.n_trees}")
        if int(self.min_samples_split) < 2:
            raise ValidationError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.max_depth is not None and int(self.max_depth) < 0:
            raise ValidationError(f"max_depth must be >= 0 or None, got {self.max_depth}")
        if self.features_per_split != "sqrt":
            raise ValidationError(f"unsupported features_per_split rule {self.features_per_split!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def max_features(self, n_features: int) -> int:
        return max(1, math.ceil(math.sqrt(n_features)))


@dataclass
class DecisionTree:
    """Flat node arrays. ``feature[i] == -1`` marks a leaf; samples with
    ``x[feature] <= threshold`` go to ``left``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) bootstrap class counts

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            r = rows[active]
            nd = node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict_index(self, X: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest class index on ties
        return np.argmax(self.counts[self.apply(X)], axis=1)


@dataclass
class ForestModel:
    trees: list
    classes: np.ndarray
    params: ForestParams
    n_features: int

    def _check(self, X) -> np.ndarray:
        X = check_feature_matrix(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        return X

    def votes(self, X) -> np.ndarray:
        X = self._check(X)
        votes = np.zeros((len(X), len(self.classes)), dtype=np.int64)
        rows = np.arange(len(X))
        for tree in self.trees:
            votes[rows, tree.predict_index(X)] += 1
        return votes

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.votes(X), axis=1)]

    # -- serialization -------------------------------------------------
    def dumps(self) -> str:
        p = self.params
        out = io.StringIO()
        out.write(f"{FORMAT_MAGIC} {FORMAT_VERSION}\n")
        depth = "none" if p.max_depth is None else str(p.max_depth)
        out.write(
            f"params n_trees={p.n_trees} min_samples_split={p.min_samples_split} "
            f"max_depth={depth} features_per_split={p.features_per_split} seed={p.seed}\n"
        )
        kind = "int" if np.issubdtype(self.classes.dtype, np.integer) else "str"
        out.write(f"classes {kind} {len(self.classes)} " + " ".join(map(str, self.classes)) + "\n")
        out.write(f"n_features {self.n_features}\n")
        for i, tree in enumerate(self.trees):
            out.write(f"tree {i} {tree.n_nodes}\n")
            for j in range(tree.n_nodes):
                counts = " ".join(str(int(c)) for c in tree.counts[j])
                out.write(
                    f"{int(tree.feature[j])} {float(tree.threshold[j])!r} "
                    f"{int(tree.left[j])} {int(tree.right[j])} {counts}\n"
                )
        return out.getvalue()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ForestModel":
        lines = iter(text.splitlines())
        try:
            magic, version = next(lines).split()
            if magic != FORMAT_MAGIC:
                raise ValidationError("not a forest model file")
            if int(version) != FORMAT_VERSION:
                raise ValidationError(f"unsupported forest format version {version}")
            kv = dict(tok.split("=", 1) for tok in next(lines).split()[1:])
            params = ForestParams(
                n_trees=int(kv["n_trees"]),
                min_samples_split=int(kv["min_samples_split"]),
                max_depth=None if kv["max_depth"] == "none" else int(kv["max_depth"]),
                features_per_split=kv["features_per_split"],
                seed=int(kv["seed"]),
            )
            cls_tokens = next(lines).split()
            kind, n_classes = cls_tokens[1], int(cls_tokens[2])
            labels = cls_tokens[3:]
            if len(labels) != n_classes:
                raise ValidationError("class count mismatch")
            classes = np.array([int(c) for c in labels]) if kind == "int" else np.array(labels)
            n_features = int(next(lines).split()[1])
            trees = []
            for _ in range(params.n_trees):
                n_nodes = int(next(lines).split()[2])
                rows = [next(lines).split() for _ in range(n_nodes)]
                trees.append(
                    DecisionTree(
                        feature=np.array([int(r[0]) for r in rows], dtype=np.int64),
                        threshold=np.array([float(r[1]) for r in rows]),
                        left=np.array([int(r[2]) for r in rows], dtype=np.int64),
                        right=np.array([int(r[3]) for r in rows], dtype=np.int64),
                        counts=np.array([[int(c) for c in r[4:]] for r in rows], dtype=np.int64).reshape(
                            n_nodes, n_classes
                        ),
                    )
                )
        except (StopIteration, KeyError, IndexError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed forest model: {exc}") from exc
        return cls(trees=trees, classes=classes, params=params, n_features=n_features)

    @classmethod
    def load(cls, path) -> "ForestModel":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts / total
    return 1.0 - float(np.dot(p, p))


def _best_split(Xn: np.ndarray, yn: np.ndarray, n_classes: int, max_features: int, rng):
    """Search features in random order until ``max_features`` non-constant ones
    have been scored. Returns ``(feature, threshold, decrease)`` or None."""
    n = len(yn)
    parent = _gini(np.bincount(yn, minlength=n_classes))
    onehot = np.eye(n_classes, dtype=np.float64)
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    best = None
    scored = 0
    for f in rng.permutation(Xn.shape[1]):
        if scored >= max_features:
            break
        vals = Xn[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        if sv[0] == sv[-1]:
            continue
        scored += 1
        left = np.cumsum(onehot[yn[order]], axis=0)[:-1]
        right = left[-1] + onehot[yn[order[-1]]] - left
        gini_l = 1.0 - np.sum((left / n_left) ** 2, axis=1)
        gini_r = 1.0 - np.sum((right / n_right) ** 2, axis=1)
        weighted = (n_left[:, 0] * gini_l + n_right[:, 0] * gini_r) / n
        weighted[sv[:-1] == sv[1:]] = np.inf
        i = int(np.argmin(weighted))
        decrease = parent - weighted[i]
        if best is None or decrease > best[2]:
            thr = 0.5 * (sv[i] + sv[i + 1])
            if not sv[i] <= thr < sv[i + 1]:
                thr = sv[i]
            best = (int(f), float(thr), float(decrease))
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, params: ForestParams, tree_index: int) -> DecisionTree:
    rng = np.random.default_rng(int(params.seed) ^ tree_index)
    n = len(y)
    boot = rng.integers(0, n, size=n)
    Xb, yb = X[boot], y[boot]
    max_features = params.max_features(X.shape[1])

    feature, threshold, left, right, counts = [], [], [], [], []
    # (sample indices, depth, parent node, is_left)
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        node_counts = np.bincount(yb[idx], minlength=n_classes)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(node_counts)

        if (
            len(idx) < params.min_samples_split
            or np.count_nonzero(node_counts) <= 1
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            continue
        split = _best_split(Xb[idx], yb[idx], n_classes, max_features, rng)
        if split is None:
            continue
        f, thr, _ = split
        feature[node] = f
        threshold[node] = thr
        goes_left = Xb[idx, f] <= thr
        stack.append((idx[~goes_left], depth + 1, node, False))
        stack.append((idx[goes_left], depth + 1, node, True))

    return DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64).reshape(len(feature), n_classes),
    )


def _fit(X, y, params: ForestParams, n_jobs: int = 1) -> ForestModel:
    X = check_feature_matrix(X)
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != len(X):
        raise ValidationError(f"got {len(X)} samples but {y.shape} labels")
    if len(y) < 2:
        raise ValidationError("at least two samples are required")
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ValidationError("at least two classes are required")
    grow = lambda i: _grow_tree(X, y_idx, len(classes), params, i)  # noqa: E731
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, range(params.n_trees)))
    else:
        trees = [grow(i) for i in range(params.n_trees)]
    return ForestModel(trees=trees, classes=classes, params=params, n_features=X.shape[1])


def _unpack(samples) -> tuple[np.ndarray, np.ndarray]:
    samples = list(samples)
    if not samples:
        raise ValidationError("no samples")
    rows, labels = [], []
    for i, (features, label) in enumerate(samples):
        vec = np.asarray(getattr(features, "bins", features), dtype=np.float64).ravel()
        if rows and len(vec) != len(rows[0]):
            raise ValidationError(
                f"sample {i} has {len(vec)} features, expected {len(rows[0])}"
            )
        rows.append(vec)
        labels.append(label)
    return np.vstack(rows), np.asarray(labels)


def train(samples: Iterable, params: ForestParams | None = None, n_jobs: int = 1) -> ForestModel:
    """Grow a forest from ``(features, label)`` pairs."""
    X, y = _unpack(samples)
    return _fit(X, y, params or ForestParams(), n_jobs=n_jobs)


def predict(model: ForestModel, x):
    """Majority vote for a single feature vector; ties go to the lowest label."""
    x = np.asarray(getattr(x, "bins", x), dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("predict expects a single feature vector")
    return model.predict(x[None, :])[0]


@dataclass(frozen=True)
class EvalReport:
    fold_accuracies: tuple
    classes: tuple
    confusion: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies))

    def summary(self, digits: int = 2) -> str:
        return f"{self.mean:.{digits}f} ± {self.std:.{digits}f}"

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("fold,accuracy\n")
        for i, acc in enumerate(self.fold_accuracies):
            out.write(f"{i},{acc:.6f}\n")
        out.write(f"mean,{self.mean:.6f}\n")
        out.write(f"std,{self.std:.6f}\n")
        return out.getvalue()

    def confusion_csv(self) -> str:
        out = io.StringIO()
        out.write("true\\pred," + ",".join(map(str, self.classes)) + "\n")
        for label, row in zip(self.classes, self.confusion):
            out.write(f"{label}," + ",".join(str(int(c)) for c in row) + "\n")
        return out.getvalue()


def _report(accuracies, classes, truth, predicted) -> EvalReport:
    index = {c: i for i, c in enumerate(classes.tolist())}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth.tolist(), predicted.tolist()):
        confusion[index[t], index[p]] += 1
    return EvalReport(
        fold_accuracies=tuple(float(a) for a in accuracies),
        classes=tuple(classes.tolist()),
        confusion=confusion,
    )


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold id per sample: one shuffle, then round-robin through each class in turn.

    Fold sizes differ by at most one, and every class is spread as evenly as
    its size allows.
    """
    y = np.asarray(y)
    n = len(y)
    perm = np.random.default_rng(int(seed)).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    counter = 0
    for label in np.unique(y):
        members = perm[y[perm] == label]
        assignment[members] = (counter + np.arange(len(members))) % folds
        counter += len(members)
    return assignment


def cross_validate(
    samples: Iterable,
    params: ForestParams | None = None,
    folds: int = 10,
    seed: int | None = None,
    n_jobs: int = 1,
) -> EvalReport:
    """Stratified k-fold evaluation; ``seed`` defaults to ``params.seed``."""
    params = params or ForestParams()
    X, y = _unpack(samples)
    if int(folds) < 2:
        raise ValidationError(f"folds must be >= 2, got {folds}")
    if folds > len(y):
        raise ValidationError(f"{folds} folds requested for only {len(y)} samples")
    classes = np.unique(y)
    fold_of = stratified_folds(y, folds, params.seed if seed is None else seed)
    predicted = np.empty_like(y)
    accuracies = []
    for k in range(folds):
        test = fold_of == k
        model = _fit(X[~test], y[~test], params, n_jobs=n_jobs)
        predicted[test] = model.predict(X[test])
        accuracies.append(np.mean(predicted[test] == y[test]))
    return _report(accuracies, classes, y, predicted)


def evaluate_split(train_samples: Iterable, test_samples: Iterable, params: ForestParams | None = None,
                   n_jobs: int = 1) -> EvalReport:
    test_samples = list(test_samples)
    if not test_samples:
        raise ValidationError("test set is empty")
    X_test, y_test = _unpack(test_samples)
    model = train(train_samples, params, n_jobs=n_jobs)
    predicted = model.predict(X_test)
    classes = np.unique(np.concatenate([model.classes, y_test]))
    return _report([np.mean(predicted == y_test)], classes, y_test, predicted)


class RandomForest(BaseEstimator, ClassifierMixin):
    """scikit-learn compatible wrapper around :func:`train`.

    Parameters
    ----------
    n_trees : int, default=10
    min_samples_split : int, default=2
    max_depth : int or None, default=None
    seed : int, default=0
        Tree ``i`` draws from a generator seeded with ``seed ^ i``.
    n_jobs : int, default=1
        Threads used to grow trees; results do not depend on it.
    """

    def __init__(self, n_trees=10, min_samples_split=2, max_depth=None, seed=0, n_jobs=1):
        self.n_trees = n_trees
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.seed = seed
        self.n_jobs = n_jobs

    def _params(self) -> ForestParams:
        return ForestParams(
            n_trees=self.n_trees,
            min_samples_split=self.min_samples_split,
            max_depth=self.max_depth,
            seed=self.seed,
        )

    def fit(self, X, y):
        self.model_ = _fit(X, y, self._params(), n_jobs=self.n_jobs)
        self.classes_ = self.model_.classes
        self.n_features_in_ = self.model_.n_features
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(X)

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return self.model_.votes(X) / len(self.model_.trees)


__all__ = [
    "ForestParams",
    "ForestModel",
    "DecisionTree",
    "EvalReport",
    "RandomForest",
    "train",
    "predict",
    "cross_validate",
    "evaluate_split",
    "stratified_folds",
]
