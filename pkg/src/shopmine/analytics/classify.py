"""Binary classifiers: soft-margin SVM (SMO) and Gaussian naive Bayes.

The SVM solves the dual with sequential minimal optimization using the
e1071/libsvm kernel parametrization (linear, radial, sigmoid, polynomial;
default gamma = 1/#features) and deterministic working-set selection, so
identical inputs always give identical models.  Features are standardized
with training statistics by default, mirroring the reference tool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AnalyticsError, ConvergenceError

KERNELS = ("linear", "radial", "sigmoid", "polynomial")

_EPS = 1e-12
_ALPHA_EPS = 1e-8


@dataclass
class TrainTestSplit:
    train_indices: np.ndarray
    test_indices: np.ndarray


def _n_rows(matrix) -> int:
    values = getattr(matrix, "values", matrix)
    return int(np.asarray(values).shape[0])


def split_train_test(matrix, labels, ratio: float, seed: int) -> TrainTestSplit:
    """Seeded uniform split: round(ratio*n) training rows, rest test."""
    n = _n_rows(matrix)
    if n < 2:
        raise AnalyticsError("need at least 2 rows to split")
    if labels is not None and len(labels) != n:
        raise AnalyticsError("labels length does not match matrix rows")
    if not 0 < ratio < 1:
        raise AnalyticsError("ratio must be strictly between 0 and 1")
    size = round(ratio * n)
    if size < 1 or size > n - 1:
        raise AnalyticsError(f"split of {n} rows at ratio {ratio} leaves an empty set")
    rng = np.random.default_rng(seed)
    train = np.sort(rng.choice(n, size=size, replace=False))
    mask = np.ones(n, dtype=bool)
    mask[train] = False
    return TrainTestSplit(train_indices=train, test_indices=np.flatnonzero(mask))


def _as_matrix(rows) -> np.ndarray:
    values = getattr(rows, "values", rows)
    array = np.asarray(values, dtype=float)
    if array.ndim == 1:
        array = array.reshape(0, 0) if array.size == 0 else array.reshape(1, -1)
    return array


def _classes_and_signs(labels):
    labels = list(labels)
    classes = sorted(set(labels))
    if len(classes) != 2:
        raise AnalyticsError(f"need exactly 2 classes in training labels, got {len(classes)}")
    y = np.array([1.0 if label == classes[1] else -1.0 for label in labels])
    return tuple(classes), y


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: str, gamma: float,
                  degree: int, coef0: float) -> np.ndarray:
    if kernel == "linear":
        return a @ b.T
    if kernel == "radial":
        sq = (
            np.sum(a * a, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if kernel == "sigmoid":
        return np.tanh(gamma * (a @ b.T) + coef0)
    if kernel == "polynomial":
        return (gamma * (a @ b.T) + coef0) ** degree
    raise AnalyticsError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


class _Smo:
    """Platt-style SMO on a precomputed kernel matrix.

    Maintains the full decision vector u = K (alpha*y) + b; the pairwise
    updates keep sum(alpha*y) = 0 exact.  Second-choice selection is by
    largest |E1-E2| with index tie-breaks, so runs are deterministic.
    """

    def __init__(self, K: np.ndarray, y: np.ndarray, C: float, tol: float):
        self.K = K
        self.y = y
        self.C = C
        self.tol = tol
        self.n = len(y)
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.u = np.zeros(self.n)

    def _nonbound(self):
        return np.flatnonzero((self.alpha > _ALPHA_EPS) & (self.alpha < self.C - _ALPHA_EPS))

    def _objective_on_line(self, i1: int, i2: int, t: float) -> float:
        """Dual objective (variable terms only) with alpha2=t on the joint line."""
        K, y = self.K, self.y
        a1, a2 = self.alpha[i1], self.alpha[i2]
        s = y[i1] * y[i2]
        gamma_sum = a1 + s * a2
        a1t = gamma_sum - s * t
        v1 = self.u[i1] - self.b - y[i1] * a1 * K[i1, i1] - y[i2] * a2 * K[i1, i2]
        v2 = self.u[i2] - self.b - y[i1] * a1 * K[i1, i2] - y[i2] * a2 * K[i2, i2]
        return (
            a1t
            + t
            - 0.5 * K[i1, i1] * a1t * a1t
            - 0.5 * K[i2, i2] * t * t
            - s * K[i1, i2] * a1t * t
            - y[i1] * a1t * v1
            - y[i2] * t * v2
        )

    def _take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        K, y, C = self.K, self.y, self.C
        a1, a2 = self.alpha[i1], self.alpha[i2]
        E1 = self.u[i1] - y[i1]
        E2 = self.u[i2] - y[i2]
        s = y[i1] * y[i2]
        if s < 0:
            low, high = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            low, high = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        if high - low < _EPS:
            return False
        eta = K[i1, i1] + K[i2, i2] - 2.0 * K[i1, i2]
        if eta > _EPS:
            a2_new = a2 + y[i2] * (E1 - E2) / eta
            a2_new = min(max(a2_new, low), high)
        else:
            # kernel not positive definite here: the restricted objective is
            # flat or concave-up, so its maximum sits at an endpoint
            low_obj = self._objective_on_line(i1, i2, low)
            high_obj = self._objective_on_line(i1, i2, high)
            if low_obj > high_obj + _EPS:
                a2_new = low
            elif high_obj > low_obj + _EPS:
                a2_new = high
            else:
                a2_new = a2
        if a2_new < _ALPHA_EPS:
            a2_new = 0.0
        elif a2_new > C - _ALPHA_EPS:
            a2_new = C
        if abs(a2_new - a2) < _EPS * (a2_new + a2 + _EPS):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        a1_new = min(max(a1_new, 0.0), C)

        d1 = y[i1] * (a1_new - a1)
        d2 = y[i2] * (a2_new - a2)
        b1 = self.b - E1 - d1 * K[i1, i1] - d2 * K[i1, i2]
        b2 = self.b - E2 - d1 * K[i1, i2] - d2 * K[i2, i2]
        if _ALPHA_EPS < a1_new < C - _ALPHA_EPS:
            b_new = b1
        elif _ALPHA_EPS < a2_new < C - _ALPHA_EPS:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.u += d1 * K[i1] + d2 * K[i2] + (b_new - self.b)
        self.b = b_new
        self.alpha[i1] = a1_new
        self.alpha[i2] = a2_new
        return True

    def _examine(self, i2: int) -> bool:
        y2, a2 = self.y[i2], self.alpha[i2]
        E2 = self.u[i2] - y2
        r2 = E2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0)):
            return False
        nonbound = self._nonbound()
        if len(nonbound) > 1:
            errors = np.abs((self.u[nonbound] - self.y[nonbound]) - E2)
            i1 = int(nonbound[int(np.argmax(errors))])
            if self._take_step(i1, i2):
                return True
        for i1 in nonbound:
            if self._take_step(int(i1), i2):
                return True
        for i1 in range(self.n):
            if self._take_step(i1, i2):
                return True
        return False

    def solve(self, max_passes: int = 10_000) -> None:
        examine_all = True
        passes = 0
        while True:
            passes += 1
            if passes > max_passes:
                raise ConvergenceError(f"SMO did not converge within {max_passes} passes")
            changed = 0
            indices = range(self.n) if examine_all else self._nonbound()
            for i in indices:
                changed += self._examine(int(i))
            if examine_all:
                if changed == 0:
                    return
                examine_all = False
            elif changed == 0:
                examine_all = True

    def kkt_residual(self) -> float:
        margins = self.y * self.u
        residual = 0.0
        for i in range(self.n):
            if self.alpha[i] <= _ALPHA_EPS:
                violation = max(0.0, 1.0 - margins[i])
            elif self.alpha[i] >= self.C - _ALPHA_EPS:
                violation = max(0.0, margins[i] - 1.0)
            else:
                violation = abs(margins[i] - 1.0)
            residual = max(residual, violation)
        return residual


@dataclass
class SvmModel:
    kernel: str
    cost: float
    gamma: float
    degree: int
    coef0: float
    scale: bool
    feature_means: np.ndarray
    feature_stds: np.ndarray
    support_vectors: np.ndarray
    sv_coef: np.ndarray  # alpha_i * y_i for support vectors
    intercept: float
    n_support: int
    classes: tuple
    kkt_residual: float

    @property
    def n_features(self) -> int:
        return len(self.feature_means)

    def decision_values(self, rows) -> np.ndarray:
        x = _as_matrix(rows)
        if x.shape[1] != self.n_features:
            raise AnalyticsError(
                f"row width {x.shape[1]} does not match model width {self.n_features}"
            )
        if self.scale:
            x = (x - self.feature_means) / self.feature_stds
        if len(self.support_vectors) == 0:
            return np.full(len(x), self.intercept)
        k = kernel_matrix(
            x, self.support_vectors, self.kernel, self.gamma, self.degree, self.coef0
        )
        return k @ self.sv_coef + self.intercept

    def predict_rows(self, rows) -> np.ndarray:
        decision = self.decision_values(rows)
        return np.array([self.classes[1] if d >= 0 else self.classes[0] for d in decision])


def train_svm(train, labels, kernel: str = "radial", cost: float = 1.0,
              gamma: float | None = None, degree: int = 3, coef0: float = 0.0,
              scale: bool = True, tol: float = 1e-3) -> SvmModel:
    """Fit a soft-margin SVM by SMO to KKT tolerance ``tol``.

    ``gamma`` defaults to 1/#features.  With ``scale`` on, features are
    standardized (zero mean, unit sample variance from the training data)
    and predictions apply the same statistics.
    """
    x = _as_matrix(train)
    if kernel not in KERNELS:
        raise AnalyticsError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    if cost <= 0:
        raise AnalyticsError("cost must be positive")
    classes, y = _classes_and_signs(labels)
    if len(y) != len(x):
        raise AnalyticsError("labels length does not match training rows")
    n_features = x.shape[1]
    if gamma is None:
        gamma = 1.0 / n_features
    if gamma <= 0:
        raise AnalyticsError("gamma must be positive")

    means = x.mean(axis=0)
    if scale:
        stds = x.std(axis=0, ddof=1) if len(x) > 1 else np.ones(n_features)
        stds = np.where(stds > _EPS, stds, 1.0)
        x_fit = (x - means) / stds
    else:
        means = np.zeros(n_features)
        stds = np.ones(n_features)
        x_fit = x

    K = kernel_matrix(x_fit, x_fit, kernel, gamma, degree, coef0)
    solver = _Smo(K, y, C=cost, tol=0.5 * tol)
    solver.solve()
    residual = solver.kkt_residual()
    if residual >= tol:
        raise ConvergenceError(f"KKT residual {residual:.3e} above tolerance {tol:.0e}")

    support = np.flatnonzero(solver.alpha > _ALPHA_EPS)
    return SvmModel(
        kernel=kernel,
        cost=cost,
        gamma=gamma,
        degree=degree,
        coef0=coef0,
        scale=scale,
        feature_means=means,
        feature_stds=stds,
        support_vectors=x_fit[support],
        sv_coef=solver.alpha[support] * y[support],
        intercept=solver.b,
        n_support=len(support),
        classes=classes,
        kkt_residual=residual,
    )


@dataclass
class NaiveBayesModel:
    classes: tuple
    priors: np.ndarray
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d), floored

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def predict_rows(self, rows) -> np.ndarray:
        x = _as_matrix(rows)
        if x.shape[1] != self.n_features:
            raise AnalyticsError(
                f"row width {x.shape[1]} does not match model width {self.n_features}"
            )
        scores = np.empty((len(x), 2))
        for c in range(2):
            scores[:, c] = np.log(self.priors[c]) - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.variances[c])
                + (x - self.means[c]) ** 2 / self.variances[c],
                axis=1,
            )
        picks = np.argmax(scores, axis=1)
        return np.array([self.classes[i] for i in picks])


def train_naive_bayes(train, labels, variance_floor: float = 1e-9) -> NaiveBayesModel:
    """Gaussian naive Bayes with class-frequency priors.

    Per-class feature variances use the sample estimator and are floored
    to keep constant features from producing infinite densities.
    """
    x = _as_matrix(train)
    classes, y = _classes_and_signs(labels)
    means = np.empty((2, x.shape[1]))
    variances = np.empty((2, x.shape[1]))
    priors = np.empty(2)
    for c, sign in enumerate((-1.0, 1.0)):
        members = x[y == sign]
        priors[c] = len(members) / len(x)
        means[c] = members.mean(axis=0)
        if len(members) > 1:
            variance = members.var(axis=0, ddof=1)
        else:
            variance = np.zeros(x.shape[1])
        variances[c] = np.where(
            np.isfinite(variance) & (variance > variance_floor), variance, variance_floor
        )
    return NaiveBayesModel(classes=classes, priors=priors, means=means, variances=variances)


@dataclass
class PredictionResult:
    predictions: np.ndarray
    accuracy: float | None


def predict(model, rows, labels=None) -> PredictionResult:
    """Classify ``rows`` with an SVM or naive Bayes model.

    When ``labels`` are supplied, also reports the fraction predicted
    correctly.
    """
    x = _as_matrix(rows)
    if x.shape[0] == 0:
        return PredictionResult(predictions=np.array([]), accuracy=None)
    predictions = model.predict_rows(x)
    accuracy = None
    if labels is not None:
        labels = list(labels)
        if len(labels) != len(predictions):
            raise AnalyticsError("labels length does not match rows")
        accuracy = float(
            sum(1 for p, t in zip(predictions, labels) if p == t) / len(labels)
        )
    return PredictionResult(predictions=predictions, accuracy=accuracy)
