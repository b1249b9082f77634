"""Functional Bayes rule for a known population pair."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .model import PopulationPair, as_generator, sample_dataset


@dataclass(frozen=True)
class BayesRule:
    """Oracle classifier for ``pop`` using its first ``j_trunc`` scores."""

    pop: PopulationPair
    j_trunc: Optional[int] = None

    def __post_init__(self):
        J = self.pop.j_model if self.j_trunc is None else int(self.j_trunc)
        if not 1 <= J <= self.pop.j_model:
            raise ValueError(f"j_trunc must lie in 1..{self.pop.j_model}")
        object.__setattr__(self, "j_trunc", J)

    @property
    def truncated_pop(self) -> PopulationPair:
        return self.pop.truncated(self.j_trunc)


def _check_dim(z: np.ndarray, J: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != J:
        raise ValueError(f"score vector has length {z.shape[-1]}, expected {J}")
    return z


def q_star(rule: BayesRule, z) -> np.ndarray | float:
    """Quadratic discriminant Q*(z); equals 2 log(pi1 f1(z) / (pi2 f2(z))).

    Q*(z) = (z - mu1)' D (z - mu1) + 2 (mu1 - mu2)' Sigma2^{-1} (z - mubar)
            - sum_j log(lambda1_j / lambda2_j) + 2 log(pi1 / pi2),
    with D = Sigma2^{-1} - Sigma1^{-1}.  Accepts one vector or an (n, J) array.
    """
    p = rule.truncated_pop
    z = _check_dim(z, rule.j_trunc)
    d = 1.0 / p.lambda2 - 1.0 / p.lambda1
    a = z - p.mu1
    mbar = 0.5 * (p.mu1 + p.mu2)
    quad = np.sum(d * a * a, axis=-1)
    lin = 2.0 * np.sum((p.mu1 - p.mu2) / p.lambda2 * (z - mbar), axis=-1)
    const = -np.sum(np.log(p.lambda1 / p.lambda2)) + 2.0 * math.log(p.pi1 / p.pi2)
    out = quad + lin + const
    return float(out) if np.ndim(out) == 0 else out


def class_log_density(pop: PopulationPair, k: int, z) -> np.ndarray | float:
    """log f_k(z) for the product of independent score laws of class k."""
    mu, lam, dof = pop.class_params(k)
    z = np.asarray(z, dtype=float)
    scale = np.sqrt(lam)
    if dof is None:
        logpdf = stats.norm.logpdf(z, loc=mu, scale=scale)
    else:
        logpdf = stats.t.logpdf(z, df=np.asarray(dof), loc=mu, scale=scale)
    out = np.sum(logpdf, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def log_ratio_discriminant(rule: BayesRule, z) -> np.ndarray | float:
    """2 log(pi1 f1(z) / (pi2 f2(z))) by direct density evaluation.

    Valid for any per-coordinate score law, including Student-t classes.
    """
    p = rule.truncated_pop
    z = _check_dim(z, rule.j_trunc)
    out = 2.0 * (math.log(p.pi1) + class_log_density(p, 1, z)
                 - math.log(p.pi2) - class_log_density(p, 2, z))
    return out


def discriminant(rule: BayesRule, z):
    """Q* for Gaussian pairs, the direct density ratio otherwise."""
    if rule.pop.is_gaussian:
        return q_star(rule, z)
    return log_ratio_discriminant(rule, z)


def classify_oracle(rule: BayesRule, z):
    """Class 1 iff the discriminant is >= 0 (ties go to class 1)."""
    q = discriminant(rule, z)
    return np.where(np.asarray(q) >= 0, 1, 2) if np.ndim(q) else (1 if q >= 0 else 2)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def mc_bayes_risk(rule: BayesRule, n_test: int, seed=None) -> tuple[float, float]:
    """Monte Carlo misclassification rate of the oracle and its binomial SE.

    Test labels are drawn from the priors (Bernoulli, not fixed counts).
    """
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    rng = as_generator(seed)
    p = rule.pop
    n1 = int(rng.binomial(n_test, p.pi1))
    data = sample_dataset(p, n1, n_test - n1, seed=rng)
    pred = classify_oracle(rule, data.scores[:, : rule.j_trunc])
    risk = float(np.mean(pred != data.labels))
    return risk, binomial_se(risk, n_test)


def oracle_errors(rule: BayesRule, scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-point 0/1 loss of the oracle on given exact scores."""
    return (classify_oracle(rule, scores[:, : rule.j_trunc]) != labels).astype(float)


def excess_risk(classifier_risk: float, bayes_risk: float) -> float:
    """Raw difference; may be slightly negative from Monte Carlo noise."""
    for v in (classifier_risk, bayes_risk):
        if not 0.0 <= v <= 1.0:
            raise ValueError("risks must lie in [0, 1]")
    return classifier_risk - bayes_risk
