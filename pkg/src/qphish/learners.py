"""Classical baselines: logistic regression, gradient-boosted trees (the
stand-in for LightGBM) and an RBF-kernel SVM sharing the dual solver."""

from __future__ import annotations

import numpy as np

from .base import Classifier, register, sign_labels
from .errors import InputError
from .qsvm import DEFAULT_C, DEFAULT_SIGMA, RbfKernel, SvmModel, solve_dual_svm, svm_predict


@register
class ConstantClassifier(Classifier):
    """Predicts one fixed label; a baseline and an ensemble test fixture."""

    kind = "constant"

    def __init__(self, label: int = 1, name=None):
        super().__init__(name)
        if label not in (-1, 1):
            raise InputError("label must be +1 or -1")
        self.label = int(label)

    def _fit(self, X, y):
        pass

    def _predict(self, X):
        return np.full(len(X), self.label)

    def get_params(self):
        return {"label": self.label}


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _log1pexp(z):
    return np.logaddexp(0.0, z)


@register
class LogisticRegression(Classifier):
    """L2-regularised logistic regression fit by full-batch gradient descent
    on standardised features. ``frozen_zero`` lists feature columns whose
    weights are pinned at zero."""

    kind = "logistic"

    def __init__(self, l2: float = 1e-3, epochs: int = 2000, seed: int = 0, tol: float = 1e-9,
                 frozen_zero=(), name=None):
        super().__init__(name)
        self.l2 = l2
        self.epochs = epochs
        self.seed = seed
        self.tol = tol
        self.frozen_zero = tuple(int(i) for i in frozen_zero)
        self.mean = self.scale = self.weights = None
        self.intercept = 0.0

    def _standardize(self, X):
        return (X - self.mean) / self.scale

    def loss_and_grad(self, params, Z, y):
        """Regularised mean log-loss and its gradient; ``params = (w..., b)``."""
        w, b = params[:-1], params[-1]
        margin = y * (Z @ w + b)
        loss = np.mean(_log1pexp(-margin)) + 0.5 * self.l2 * w @ w
        coef = -y * _sigmoid(-margin) / len(y)
        grad = np.append(Z.T @ coef + self.l2 * w, coef.sum())
        return loss, grad

    def _fit(self, X, y):
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale = np.where(std > 0, std, 1.0)
        Z = self._standardize(X)
        if self.frozen_zero and max(self.frozen_zero) >= Z.shape[1]:
            raise InputError("frozen column index out of range")
        # frozen columns are dropped outright so the free weights train exactly
        # as they would without those columns present
        free = np.setdiff1d(np.arange(Z.shape[1]), self.frozen_zero)
        Zf = Z[:, free]
        Za = np.hstack([Zf, np.ones((len(Zf), 1))])
        lipschitz = 0.25 * np.linalg.eigvalsh(Za.T @ Za / len(Za)).max() + self.l2
        lr = 1.0 / lipschitz
        params = np.zeros(len(free) + 1)
        yf = y.astype(float)
        for _ in range(self.epochs):
            _, grad = self.loss_and_grad(params, Zf, yf)
            if np.max(np.abs(grad)) < self.tol:
                break
            params -= lr * grad
        self.weights = np.zeros(Z.shape[1])
        self.weights[free] = params[:-1]
        self.intercept = float(params[-1])

    def _scores(self, X):
        return self._standardize(X) @ self.weights + self.intercept

    def _predict(self, X):
        return sign_labels(self._scores(X))

    def positive_probability(self, X):
        return _sigmoid(self._scores(self._check_predict(X)))

    def get_params(self):
        return {"l2": self.l2, "epochs": self.epochs, "seed": self.seed, "tol": self.tol,
                "frozen_zero": list(self.frozen_zero)}

    def get_state(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(), "weights": self.weights.tolist(),
                "intercept": self.intercept}

    def set_state(self, s):
        self.mean, self.scale, self.weights = (np.asarray(s[k], dtype=float) for k in ("mean", "scale", "weights"))
        self.intercept = float(s["intercept"])


# regression trees for boosting; a node is either {"value": v} or
# {"feature": f, "threshold": t, "left": node, "right": node}

def _leaf_value(g, h, reg):
    return float(-g.sum() / (h.sum() + reg))


def _score(G, H, reg):
    return G * G / (H + reg)


def _grow(X, g, h, depth, max_depth, reg):
    if depth >= max_depth or len(g) < 2:
        return {"value": _leaf_value(g, h, reg)}
    G, H = g.sum(), h.sum()
    parent = _score(G, H, reg)
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        valid = xs[1:] > xs[:-1]
        if not np.any(valid):
            continue
        gain = _score(gl, hl, reg) + _score(G - gl, H - hl, reg) - parent
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0] + 1e-12:
            best = (gain[i], f, 0.5 * (xs[i] + xs[i + 1]))
    if best is None or best[0] < -1e-12:
        return {"value": _leaf_value(g, h, reg)}
    _, f, thr = best
    left = X[:, f] <= thr
    return {
        "feature": f,
        "threshold": float(thr),
        "left": _grow(X[left], g[left], h[left], depth + 1, max_depth, reg),
        "right": _grow(X[~left], g[~left], h[~left], depth + 1, max_depth, reg),
    }


def tree_predict(node, X) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if "value" in nd:
            out[idx] = nd["value"]
            continue
        go_left = X[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[go_left]))
        stack.append((nd["right"], idx[~go_left]))
    return out


def tree_depth(node) -> int:
    if "value" in node:
        return 0
    return 1 + max(tree_depth(node["left"]), tree_depth(node["right"]))


@register
class GradientBoostedTrees(Classifier):
    """Newton-boosted depth-limited regression trees on the logistic loss.

    Each round's step is halved until the training loss does not increase, so
    ``loss_trace`` is non-increasing by construction.
    """

    kind = "gbt"

    def __init__(self, n_rounds: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
                 reg_lambda: float = 1.0, seed: int = 0, name=None):
        super().__init__(name)
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.reg_lambda = reg_lambda
        self.seed = seed
        self.init_score = 0.0
        self.trees: list[tuple[float, dict]] = []
        self.loss_trace: list[float] = []

    @staticmethod
    def _loss(F, y):
        return float(np.mean(_log1pexp(-y * F)))

    def _fit(self, X, y):
        yf = y.astype(float)
        p = np.clip((yf > 0).mean(), 1e-6, 1 - 1e-6)
        self.init_score = float(np.log(p / (1 - p)))
        F = np.full(len(y), self.init_score)
        loss = self._loss(F, yf)
        self.trees, self.loss_trace = [], [loss]
        t01 = (yf + 1) / 2
        for _ in range(self.n_rounds):
            prob = _sigmoid(F)
            g = prob - t01
            h = prob * (1 - prob)
            tree = _grow(X, g, h, 0, self.max_depth, self.reg_lambda)
            step = tree_predict(tree, X)
            shrink = self.learning_rate
            for _ in range(30):
                new_loss = self._loss(F + shrink * step, yf)
                if new_loss <= loss:
                    break
                shrink *= 0.5
            else:
                shrink, new_loss = 0.0, loss
            F = F + shrink * step
            loss = new_loss
            self.trees.append((shrink, tree))
            self.loss_trace.append(loss)

    def raw_scores(self, X):
        F = np.full(len(X), self.init_score)
        for shrink, tree in self.trees:
            if shrink:
                F += shrink * tree_predict(tree, X)
        return F

    def _predict(self, X):
        return sign_labels(self.raw_scores(X))

    def positive_probability(self, X):
        return _sigmoid(self.raw_scores(self._check_predict(X)))

    def get_params(self):
        return {"n_rounds": self.n_rounds, "learning_rate": self.learning_rate, "max_depth": self.max_depth,
                "reg_lambda": self.reg_lambda, "seed": self.seed}

    def get_state(self):
        return {"init_score": self.init_score, "trees": [[s, t] for s, t in self.trees],
                "loss_trace": self.loss_trace}

    def set_state(self, s):
        self.init_score = float(s["init_score"])
        self.trees = [(float(a), t) for a, t in s["trees"]]
        self.loss_trace = list(s["loss_trace"])


@register
class ClassicalSvm(Classifier):
    kind = "classical-svm"

    def __init__(self, sigma: float = DEFAULT_SIGMA, C: float = DEFAULT_C, bias_over: str = "support", name=None):
        super().__init__(name)
        self.sigma = sigma
        self.C = C
        self.bias_over = bias_over
        self.model: SvmModel | None = None

    def _fit(self, X, y):
        kernel = RbfKernel(self.sigma)
        sol = solve_dual_svm(kernel.gram(X), y, self.C, bias_over=self.bias_over)
        self.model = SvmModel(sol.lambdas, X.copy(), y, sol.bias, kernel)

    def _predict(self, X):
        return svm_predict(self.model, X)

    def get_params(self):
        return {"sigma": self.sigma, "C": self.C, "bias_over": self.bias_over}

    def get_state(self):
        return {"model": self.model.to_dict()}

    def set_state(self, s):
        self.model = SvmModel.from_dict(s["model"])


def train_logistic(X, y, l2: float = 1e-3, epochs: int = 2000, seed: int = 0) -> LogisticRegression:
    return LogisticRegression(l2=l2, epochs=epochs, seed=seed).fit(X, y)


def train_gbt(X, y, n_rounds: int = 100, learning_rate: float = 0.1, max_depth: int = 3, seed: int = 0):
    return GradientBoostedTrees(n_rounds, learning_rate, max_depth, seed=seed).fit(X, y)


def train_classical_svm(X, y, sigma: float = DEFAULT_SIGMA, C: float = DEFAULT_C) -> ClassicalSvm:
    return ClassicalSvm(sigma, C).fit(X, y)
