import numpy as np

from awae.learners.base import Classifier


class GaussianNB(Classifier):
    """Gaussian naive Bayes with variance smoothing.

    ``var_smoothing`` times the largest per-feature variance of the training
    chunk is added to every class variance.
    """

    kind = "gnb"

    def __init__(self, n_classes: int, n_features: int, var_smoothing: float = 1e-9):
        super().__init__(n_classes, n_features)
        self.var_smoothing = var_smoothing
        self.means = np.zeros((n_classes, n_features))
        self.variances = np.ones((n_classes, n_features))
        self.priors = np.zeros(n_classes)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GaussianNB":
        X = self._check(X)
        epsilon = self.var_smoothing * float(X.var(axis=0).max())
        if epsilon <= 0.0:
            # all features constant: keep the likelihood finite
            epsilon = max(self.var_smoothing, np.finfo(np.float64).tiny)
        counts = np.bincount(y, minlength=self.n_classes).astype(np.float64)
        for c in np.flatnonzero(counts):
            Xc = X[y == c]
            self.means[c] = Xc.mean(axis=0)
            self.variances[c] = Xc.var(axis=0) + epsilon
        self.priors = counts / counts.sum()
        return self

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.priors)
        norm = -0.5 * np.log(2.0 * np.pi * self.variances).sum(axis=1)
        diff = X[:, None, :] - self.means[None, :, :]
        quad = -0.5 * (diff**2 / self.variances[None, :, :]).sum(axis=2)
        return log_prior[None, :] + norm[None, :] + quad

    def _support(self, X):
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)
