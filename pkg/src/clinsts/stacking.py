"""Least-squares linear combination of base-model scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ModelFormatError, NonFiniteInput, RankDeficient, SizeMismatch
from .persist import dump_model, read_model


@dataclass
class LinearStacker:
    coefficients: np.ndarray
    intercept: float

    @property
    def k(self) -> int:
        return len(self.coefficients)

    def predict(self, predictions) -> np.ndarray:
        return predict(self, predictions)


def _design(predictions, gold=None):
    P = np.asarray(predictions, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2:
        raise SizeMismatch(f"predictions must be an n x k matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise NonFiniteInput("base predictions contain NaN or infinite values")
    if gold is not None:
        gold = np.asarray(gold, dtype=np.float64).ravel()
        if len(gold) != len(P):
            raise SizeMismatch(f"{len(P)} prediction rows but {len(gold)} gold scores")
        if not np.all(np.isfinite(gold)):
            raise NonFiniteInput("gold scores contain NaN or infinite values")
    return P, gold


def fit_ols(predictions, gold) -> LinearStacker:
    """Ordinary least squares with an intercept, via Cholesky on the normal
    equations plus one step of iterative refinement."""
    P, y = _design(predictions, gold)
    n, k = P.shape
    if n < k + 1:
        raise SizeMismatch(f"need at least {k + 1} rows to fit {k} coefficients and an intercept")
    A = np.hstack([np.ones((n, 1)), P])
    if np.linalg.matrix_rank(A) < k + 1:
        raise RankDeficient("base predictions are collinear (design matrix is rank deficient)")
    gram = A.T @ A
    try:
        factor = cho_factor(gram)
    except LinAlgError:
        raise RankDeficient("normal equations are not positive definite") from None
    beta = cho_solve(factor, A.T @ y)
    beta += cho_solve(factor, A.T @ (y - A @ beta))
    return LinearStacker(beta[1:].copy(), float(beta[0]))


def predict(stacker: LinearStacker, predictions, clamp=(0.0, 5.0)) -> np.ndarray:
    P = np.asarray(predictions, dtype=np.float64)
    if P.size == 0:
        return np.zeros(0)
    P, _ = _design(P)
    if P.shape[1] != stacker.k:
        raise SizeMismatch(f"stacker expects {stacker.k} base models, got {P.shape[1]}")
    out = stacker.intercept + P @ stacker.coefficients
    if clamp is not None:
        out = np.clip(out, *clamp)
    return out


def save(stacker: LinearStacker, path) -> None:
    dump_model(
        "linear_stacker",
        {"k": stacker.k, "coefficients": stacker.coefficients.tolist(), "intercept": stacker.intercept},
        path,
    )


def load(path) -> LinearStacker:
    doc = read_model(path, "linear_stacker")
    try:
        coef = np.array(doc["coefficients"], dtype=np.float64)
        intercept = float(doc["intercept"])
        k = int(doc["k"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed stacker model: {exc}", path) from None
    if coef.shape != (k,):
        raise ModelFormatError("coefficient count does not match k", path)
    return LinearStacker(coef, intercept)
