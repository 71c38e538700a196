"""One-vs-one kernel SVM trained by sequential minimal optimization.

Each class pair gets a binary machine solved on the dual

    min_a  1/2 a^T Q a - e^T a,   0 <= a_i <= C,   y^T a = 0,
    Q_ij = y_i y_j K(x_i, x_j)

by the compiled SMO kernel (maximal-violating first index, second-order
second index). Features are z-scored with training statistics before any
kernel evaluation.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _core

log = logging.getLogger(__name__)

DEFAULT_C = 10.0
SMO_TOL = 1e-3
SMO_MAX_ITER = 10000


class TrainingError(ValueError):
    """The training set cannot produce a multi-class model."""


def rbf_kernel(a, b, gamma: float) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d = a - b
    return math.exp(-gamma * float(d @ d))


def linear_kernel(a, b) -> float:
    return float(np.dot(np.asarray(a, dtype=np.float64).ravel(), np.asarray(b, dtype=np.float64).ravel()))


def kernel_matrix(A, B, kernel: str, gamma: float | None = None) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    G = A @ B.T
    if kernel == "linear":
        return G
    if kernel == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * G
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


def select_training(labels, k: int, rule: str = "even") -> np.ndarray:
    """Indices of ``k`` training samples per class, in each class's stored order.

    ``rule`` is ``even`` (positions floor(t*n/k + 1/2), t = 0..k-1), ``first``,
    or ``random:<seed>``.
    """
    labels = np.asarray(labels)
    if k < 1:
        raise TrainingError("need at least one training sample per class")
    chosen = []
    rng = None
    if rule.startswith("random:"):
        rng = np.random.default_rng(int(rule.split(":", 1)[1]))
    elif rule not in ("even", "first"):
        raise ValueError(f"unknown selection rule {rule!r}")
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        n = members.size
        if n < k:
            raise TrainingError(f"class {c} has {n} samples, fewer than k={k}")
        if rule == "even":
            pos = np.floor(np.arange(k) * n / k + 0.5).astype(np.int64)
        elif rule == "first":
            pos = np.arange(k)
        else:
            pos = np.sort(rng.choice(n, size=k, replace=False))
        chosen.append(members[pos])
    return np.concatenate(chosen)


@dataclass
class BinaryMachine:
    positive: int          # class voted for when the decision value is positive
    negative: int
    support: np.ndarray    # indices into the model's training matrix
    coef: np.ndarray       # alpha_i * y_i for each support vector
    rho: float
    alpha: np.ndarray      # full dual vector over the pair's training points
    y: np.ndarray
    iterations: int
    gap: float


@dataclass
class SvmModel:
    kernel: str
    gamma: float | None
    c: float
    classes: list[int]
    mean: np.ndarray
    scale: np.ndarray
    train_x: np.ndarray            # standardized training vectors
    machines: list[BinaryMachine] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def standardize(self, X) -> np.ndarray:
        return (np.atleast_2d(np.asarray(X, dtype=np.float64)) - self.mean) / self.scale

    def decision_values(self, X) -> np.ndarray:
        """``(n_samples, n_machines)`` decision values on raw (unstandardized) inputs."""
        Z = self.standardize(X)
        if Z.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: model expects {self.dim}, got {Z.shape[1]}")
        K = kernel_matrix(Z, self.train_x, self.kernel, self.gamma)
        out = np.empty((Z.shape[0], len(self.machines)))
        for k, m in enumerate(self.machines):
            out[:, k] = K[:, m.support] @ m.coef - m.rho
        return out

    def to_json(self) -> str:
        def f17(v):
            return float(f"{float(v):.17g}")

        doc = {
            "kernel": self.kernel,
            "gamma": None if self.gamma is None else f17(self.gamma),
            "c": f17(self.c),
            "classes": [int(c) for c in self.classes],
            "mean": [f17(v) for v in self.mean],
            "scale": [f17(v) for v in self.scale],
            "train_x": [[f17(v) for v in row] for row in self.train_x],
            "machines": [
                {
                    "positive": m.positive,
                    "negative": m.negative,
                    "support": m.support.tolist(),
                    "coef": [f17(v) for v in m.coef],
                    "rho": f17(m.rho),
                    "iterations": m.iterations,
                    "gap": f17(m.gap),
                }
                for m in self.machines
            ],
            "config": self.config,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        doc = json.loads(text)
        train_x = np.array(doc["train_x"], dtype=np.float64).reshape(-1, len(doc["mean"]))
        machines = [
            BinaryMachine(
                positive=m["positive"],
                negative=m["negative"],
                support=np.array(m["support"], dtype=np.int64),
                coef=np.array(m["coef"], dtype=np.float64),
                rho=m["rho"],
                alpha=np.abs(np.array(m["coef"], dtype=np.float64)),
                y=np.sign(np.array(m["coef"], dtype=np.float64)),
                iterations=m["iterations"],
                gap=m["gap"],
            )
            for m in doc["machines"]
        ]
        return cls(doc["kernel"], doc["gamma"], doc["c"], doc["classes"], np.array(doc["mean"]),
                   np.array(doc["scale"]), train_x, machines, doc.get("config", {}))


def train(X, y, kernel: str = "rbf", c: float = DEFAULT_C, gamma: float | str | None = "auto",
          tol: float = SMO_TOL, max_iter: int = SMO_MAX_ITER, config: dict | None = None) -> SvmModel:
    """Fit a one-vs-one SVM on rows of ``X`` with integer labels ``y``.

    ``gamma="auto"`` means 1/dim on the standardized features. Zero-variance
    features are scaled by 1 instead of their standard deviation.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y).astype(np.int64)
    classes = sorted(int(v) for v in np.unique(y))
    if len(classes) < 2:
        raise TrainingError(f"need at least 2 classes, got {len(classes)}")
    if c <= 0:
        raise ValueError("C must be positive")
    if kernel == "rbf":
        gamma = 1.0 / X.shape[1] if gamma in (None, "auto") else float(gamma)
        if gamma <= 0:
            raise ValueError("gamma must be positive")
    elif kernel == "linear":
        gamma = None
    else:
        raise ValueError(f"unknown kernel {kernel!r}")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[~(scale > 0)] = 1.0
    Z = (X - mean) / scale
    K_all = kernel_matrix(Z, Z, kernel, gamma)

    machines = []
    for a, b in itertools.combinations(classes, 2):
        idx = np.flatnonzero((y == a) | (y == b))
        yy = np.where(y[idx] == a, 1.0, -1.0)
        K = np.ascontiguousarray(K_all[np.ix_(idx, idx)])
        alpha, rho, it, gap = _core.smo_solve(K, yy, float(c), tol, max_iter)
        if it >= max_iter:
            log.warning("SMO for classes (%d, %d) stopped at %d iterations, gap %.3g", a, b, it, gap)
        sv = alpha > 0
        machines.append(BinaryMachine(a, b, idx[sv], (alpha * yy)[sv], float(rho), alpha, yy, int(it), float(gap)))
    cfg = {"kernel": kernel, "c": c, "gamma": gamma, "tol": tol, "max_iter": max_iter}
    cfg.update(config or {})
    return SvmModel(kernel, gamma, float(c), classes, mean, scale, Z, machines, cfg)


def vote(model: SvmModel, dec: np.ndarray) -> tuple[int, dict[int, int]]:
    """Majority vote over one row of decision values.

    Ties go to the larger summed |decision| over won contests, then to the
    smaller class label. A decision value of exactly 0 casts no vote.
    """
    votes = {c: 0 for c in model.classes}
    strength = {c: 0.0 for c in model.classes}
    for m, d in zip(model.machines, dec):
        if d > 0:
            votes[m.positive] += 1
            strength[m.positive] += abs(d)
        elif d < 0:
            votes[m.negative] += 1
            strength[m.negative] += abs(d)
    best = min(model.classes, key=lambda c: (-votes[c], -strength[c], c))
    return best, votes


def classify(model: SvmModel, feature) -> tuple[int, dict[int, int]]:
    """Predicted label and the vote tally for a single feature vector."""
    x = np.asarray(feature, dtype=np.float64).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"dimension mismatch: model expects {model.dim}, got {x.shape[0]}")
    return vote(model, model.decision_values(x[None, :])[0])


def predict(model: SvmModel, X) -> np.ndarray:
    dec = model.decision_values(X)
    return np.array([vote(model, row)[0] for row in dec], dtype=np.int64)


@dataclass
class ClassificationResult:
    efficiency: float
    k: int
    n_train: int
    n_eval: int
    eval_scope: str
    selection: str
    predictions: np.ndarray
    model: SvmModel

    def to_dict(self) -> dict:
        return {
            "k_train": self.k,
            "classification_efficiency_pct": self.efficiency,
            "n_train": self.n_train,
            "n_eval": self.n_eval,
            "eval_scope": self.eval_scope,
            "selection": self.selection,
        }


def evaluate(db, k: int, kernel: str = "rbf", c: float = DEFAULT_C, gamma="auto",
             select: str = "even", eval_scope: str = "all") -> ClassificationResult:
    """Train on ``k`` images per class of a feature database and classify the rest.

    ``eval_scope="all"`` scores every image in the database, training images
    included; ``"heldout"`` scores only the images not used for training.
    """
    if eval_scope not in ("all", "heldout"):
        raise ValueError("eval_scope must be 'all' or 'heldout'")
    tr = select_training(db.labels, k, select)
    model = train(db.matrix[tr], db.labels[tr], kernel=kernel, c=c, gamma=gamma,
                  config={"k": k, "select": select, "method": db.method, "order": db.order})
    if eval_scope == "all":
        ev = np.arange(len(db))
    else:
        mask = np.ones(len(db), dtype=bool)
        mask[tr] = False
        ev = np.flatnonzero(mask)
    pred = predict(model, db.matrix[ev])
    eff = 100.0 * float(np.mean(pred == db.labels[ev])) if ev.size else float("nan")
    return ClassificationResult(eff, k, tr.size, ev.size, eval_scope, select, pred, model)


def classification_efficiency(db, kernel: str = "rbf", c: float = DEFAULT_C, k: int = 7, **kw) -> float:
    return evaluate(db, k, kernel=kernel, c=c, **kw).efficiency
