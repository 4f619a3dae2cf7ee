"""Gradient-boosted decision trees with multiclass softmax output, built from
scratch, plus a single CART decision-tree baseline and evaluation metrics.

Second-order boosting: each round fits one regression tree per class to the
softmax gradient/hessian, leaf value = -G/(H + lambda) with lambda = 1, exact
greedy split search over midpoints of sorted unique feature values.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateLabelsError,
    ModelFormatError,
    UnsupportedModelVersionError,
)
from .features import FeatureVector, to_matrix

MODEL_VERSION = 1
LAMBDA = 1.0


# ---------------------------------------------------------------------------
# Regression trees
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    feature: int = -1            # -1 marks a leaf
    threshold: float = 0.0
    left: int = -1               # child indexes into the node array
    right: int = -1
    leaf: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class RegressionTree:
    nodes: list

    def predict_one(self, x) -> float:
        i = 0
        while True:
            node = self.nodes[i]
            if node.is_leaf:
                return node.leaf
            i = node.left if x[node.feature] < node.threshold else node.right

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(row) for row in X])


def _leaf_value(g_sum: float, h_sum: float) -> float:
    return -g_sum / (h_sum + LAMBDA)


def _best_split(X, g, h, rows):
    """Exact greedy split: maximize gain over all features and midpoints of
    consecutive distinct sorted values. Returns (gain, feature, threshold)."""
    g_tot, h_tot = g[rows].sum(), h[rows].sum()
    parent = g_tot * g_tot / (h_tot + LAMBDA)
    best = (0.0, -1, 0.0)
    for f in range(X.shape[1]):
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sg = g[rows][order]
        sh = h[rows][order]
        cg = np.cumsum(sg)
        ch = np.cumsum(sh)
        boundary = np.nonzero(sv[1:] != sv[:-1])[0]  # split after index i
        for i in boundary:
            gl, hl = cg[i], ch[i]
            gr, hr = g_tot - gl, h_tot - hl
            gain = gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - parent
            if gain > best[0] + 1e-12:
                thr = (sv[i] + sv[i + 1]) / 2.0
                best = (float(gain), f, float(thr))
    return best


def _fit_regression_tree(X, g, h, max_depth: int) -> RegressionTree:
    nodes: list[TreeNode] = []

    def grow(rows, depth) -> int:
        idx = len(nodes)
        nodes.append(TreeNode())
        if depth < max_depth and len(rows) >= 2:
            gain, f, thr = _best_split(X, g, h, rows)
            if f >= 0:
                mask = X[rows, f] < thr
                node = nodes[idx]
                node.feature = f
                node.threshold = thr
                node.left = grow(rows[mask], depth + 1)
                node.right = grow(rows[~mask], depth + 1)
                return idx
        nodes[idx].leaf = _leaf_value(g[rows].sum(), h[rows].sum())
        return idx

    grow(np.arange(len(g)), 0)
    return RegressionTree(nodes=nodes)


# ---------------------------------------------------------------------------
# Multiclass softmax boosting
# ---------------------------------------------------------------------------

def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_gradient_hessian(scores: np.ndarray, y_onehot: np.ndarray):
    """Per-class gradient/hessian of the multiclass log-loss wrt raw scores."""
    p = softmax(scores)
    return p - y_onehot, p * (1.0 - p)


def log_loss(scores: np.ndarray, y: np.ndarray) -> float:
    p = softmax(scores)
    return float(-np.mean(np.log(np.clip(p[np.arange(len(y)), y], 1e-15, None))))


@dataclass
class GbdtModel:
    n_classes: int
    learning_rate: float
    base_score: float
    trees: list                  # round-major: trees[r * n_classes + c]
    train_loss_curve: list = field(default_factory=list, compare=False)

    @property
    def n_estimators(self) -> int:
        return len(self.trees) // self.n_classes

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        scores = np.full((len(X), self.n_classes), self.base_score)
        for r in range(self.n_estimators):
            for c in range(self.n_classes):
                tree = self.trees[r * self.n_classes + c]
                scores[:, c] += self.learning_rate * tree.predict(X)
        return scores


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.to_array()[None, :]
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def predict_proba(model: GbdtModel, x) -> np.ndarray:
    """Softmax class probabilities; rows sum to 1."""
    X = _as_matrix(x)
    p = softmax(model.raw_scores(X))
    return p[0] if (isinstance(x, FeatureVector) or np.asarray(x).ndim == 1) else p


def predict_class(model: GbdtModel, x):
    """Arg-max class; ties go to the lowest class index."""
    p = predict_proba(model, x)
    return int(np.argmax(p)) if p.ndim == 1 else np.argmax(p, axis=1)


def train_gbdt(data, params: dict | None = None, seed: int = 0) -> GbdtModel:
    """Train the boosted ensemble. The seed only shuffles the initial data
    order; the fit itself is deterministic."""
    params = dict(params or {})
    learning_rate = params.get("learning_rate", 0.3)
    max_depth = params.get("max_depth", 3)
    n_estimators = params.get("n_estimators", 3)
    if not data:
        raise ValueError("training data must be nonempty")
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError(f"learning_rate must be in (0,1], got {learning_rate}")
    X, y = to_matrix(data)
    n_classes = params.get("n_classes", int(y.max()) + 1)
    if np.any(y >= n_classes):
        raise ValueError("label out of range for n_classes")
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training data has a single class")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    X, y = X[order], y[order]
    y_onehot = np.zeros((len(y), n_classes))
    y_onehot[np.arange(len(y)), y] = 1.0

    model = GbdtModel(n_classes=n_classes, learning_rate=learning_rate,
                      base_score=0.0, trees=[])
    scores = np.full((len(y), n_classes), model.base_score)
    for _ in range(n_estimators):
        grad, hess = softmax_gradient_hessian(scores, y_onehot)
        for c in range(n_classes):
            tree = _fit_regression_tree(X, grad[:, c], hess[:, c], max_depth)
            model.trees.append(tree)
            scores[:, c] += learning_rate * tree.predict(X)
        model.train_loss_curve.append(log_loss(scores, y))
    return model


# ---------------------------------------------------------------------------
# Decision-tree baseline
# ---------------------------------------------------------------------------

@dataclass
class DecisionTreeModel:
    n_classes: int
    tree: RegressionTree         # leaves hold the majority class index

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _as_matrix(X)
        return self.tree.predict(X).astype(np.int64)


def _gini_split(X, y, rows, n_classes):
    best = (0.0, -1, 0.0)
    counts_tot = np.bincount(y[rows], minlength=n_classes).astype(float)
    n = len(rows)
    parent = 1.0 - ((counts_tot / n) ** 2).sum()
    for f in range(X.shape[1]):
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[rows][order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), sy] = 1.0
        cum = np.cumsum(onehot, axis=0)
        boundary = np.nonzero(sv[1:] != sv[:-1])[0]
        for i in boundary:
            nl = i + 1.0
            nr = n - nl
            cl = cum[i]
            cr = counts_tot - cl
            gini_l = 1.0 - ((cl / nl) ** 2).sum()
            gini_r = 1.0 - ((cr / nr) ** 2).sum()
            gain = parent - (nl / n) * gini_l - (nr / n) * gini_r
            if gain > best[0] + 1e-12:
                best = (float(gain), f, float((sv[i] + sv[i + 1]) / 2.0))
    return best


def train_decision_tree(data, params: dict | None = None,
                        seed: int = 0) -> DecisionTreeModel:
    """CART with gini splits and majority-vote leaves."""
    params = dict(params or {})
    max_depth = params.get("max_depth", 20)
    if not data:
        raise ValueError("training data must be nonempty")
    X, y = to_matrix(data)
    n_classes = params.get("n_classes", int(y.max()) + 1)
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training data has a single class")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    X, y = X[order], y[order]

    nodes: list[TreeNode] = []

    def majority(rows) -> float:
        return float(np.argmax(np.bincount(y[rows], minlength=n_classes)))

    def grow(rows, depth) -> int:
        idx = len(nodes)
        nodes.append(TreeNode())
        if depth < max_depth and len(np.unique(y[rows])) > 1:
            gain, f, thr = _gini_split(X, y, rows, n_classes)
            if f >= 0:
                mask = X[rows, f] < thr
                node = nodes[idx]
                node.feature = f
                node.threshold = thr
                node.left = grow(rows[mask], depth + 1)
                node.right = grow(rows[~mask], depth + 1)
                return idx
        nodes[idx].leaf = majority(rows)
        return idx

    grow(np.arange(len(y)), 0)
    return DecisionTreeModel(n_classes=n_classes, tree=RegressionTree(nodes))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    accuracy: float
    precision: float             # macro
    recall: float                # macro
    f1: float                    # macro
    confusion: np.ndarray
    training_time: float = 0.0


def evaluate(model, test, training_time: float = 0.0) -> EvalReport:
    """Macro-averaged metrics over a labeled test set."""
    if not test:
        raise ValueError("test data must be nonempty")
    X, y = to_matrix(test)
    if isinstance(model, DecisionTreeModel):
        pred = model.predict(X)
        n_classes = model.n_classes
    else:
        pred = predict_class(model, X)
        n_classes = model.n_classes
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y, pred):
        confusion[t, p] += 1
    accuracy = float(np.trace(confusion) / confusion.sum())
    precisions, recalls, f1s = [], [], []
    for c in range(n_classes):
        tp = confusion[c, c]
        col = confusion[:, c].sum()
        row = confusion[c, :].sum()
        prec = tp / col if col else 0.0
        rec = tp / row if row else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(2 * prec * rec / (prec + rec) if (prec + rec) else 0.0)
    return EvalReport(
        accuracy=accuracy,
        precision=float(np.mean(precisions)),
        recall=float(np.mean(recalls)),
        f1=float(np.mean(f1s)),
        confusion=confusion,
        training_time=training_time,
    )


def timed_train(train_fn, data, params=None, seed: int = 0):
    t0 = time.perf_counter()
    model = train_fn(data, params, seed)
    return model, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _tree_to_dict(tree: RegressionTree) -> dict:
    nodes = []
    for n in tree.nodes:
        if n.is_leaf:
            nodes.append({"leaf": n.leaf})
        else:
            nodes.append({"feature": n.feature, "threshold": n.threshold,
                          "left": n.left, "right": n.right})
    return {"nodes": nodes}


def _tree_from_dict(d: dict) -> RegressionTree:
    nodes = []
    for nd in d["nodes"]:
        if "leaf" in nd:
            nodes.append(TreeNode(leaf=float(nd["leaf"])))
        else:
            nodes.append(TreeNode(feature=int(nd["feature"]),
                                  threshold=float(nd["threshold"]),
                                  left=int(nd["left"]), right=int(nd["right"])))
    return RegressionTree(nodes=nodes)


def model_to_json(model: GbdtModel) -> str:
    doc = {
        "version": MODEL_VERSION,
        "n_classes": model.n_classes,
        "learning_rate": model.learning_rate,
        "base_score": model.base_score,
        "trees": [_tree_to_dict(t) for t in model.trees],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def save_model(model: GbdtModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))
        fh.write("\n")


def load_model(path: str) -> GbdtModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError(f"{path}: missing version field")
    if doc["version"] != MODEL_VERSION:
        raise UnsupportedModelVersionError(
            f"{path}: version {doc['version']} not supported")
    try:
        return GbdtModel(
            n_classes=int(doc["n_classes"]),
            learning_rate=float(doc["learning_rate"]),
            base_score=float(doc["base_score"]),
            trees=[_tree_from_dict(t) for t in doc["trees"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model document ({exc})") from exc
