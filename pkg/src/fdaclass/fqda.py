"""Functional quadratic discriminant analysis on projection scores.

FQDA works on exactly observed scores; sFQDA on scores projected from curves
observed on a grid.  Both use diagonal covariance estimates, so the
discriminant is a sum of per-coordinate terms, which lets cross-validation
evaluate every truncation level J from a single fit.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .basis import Projector, is_uniform_grid
from .errors import DataError
from .model import Dataset, PopulationPair, as_generator
from .oracle import binomial_se

VAR_FLOOR = 1e-8
MODES = ("FQDA", "sFQDA")


@dataclass(frozen=True)
class QdaModel:
    mu_hat1: np.ndarray
    mu_hat2: np.ndarray
    lam_hat1: np.ndarray
    lam_hat2: np.ndarray
    pi_hat1: float
    pi_hat2: float
    mode: str = "FQDA"
    projector: Optional[Projector] = None
    floored: tuple = (0, 0)
    d_hat: np.ndarray = field(init=False, repr=False)
    beta_hat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for attr in ("mu_hat1", "mu_hat2", "lam_hat1", "lam_hat2"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float).ravel())
        J = self.mu_hat1.size
        if not (self.mu_hat2.size == self.lam_hat1.size == self.lam_hat2.size == J):
            raise ValueError("all estimate vectors must have length j_used")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "d_hat", 1.0 / self.lam_hat2 - 1.0 / self.lam_hat1)
        # density-ratio sign: beta = Sigma2^{-1} (mu2 - mu1)
        object.__setattr__(self, "beta_hat", (self.mu_hat2 - self.mu_hat1) / self.lam_hat2)

    @property
    def j_used(self) -> int:
        return self.mu_hat1.size

    @classmethod
    def from_population(cls, pop: PopulationPair, J: Optional[int] = None) -> "QdaModel":
        """Plug-in model whose estimates are the true parameters."""
        p = pop.truncated(J or pop.j_model)
        return cls(p.mu1, p.mu2, p.lambda1, p.lambda2, p.pi1, p.pi2)

    def truncated(self, J: int) -> "QdaModel":
        proj = None
        if self.projector is not None:
            proj = Projector(self.projector.grid, J, self.projector.kind, self.projector.mode)
        return QdaModel(self.mu_hat1[:J], self.mu_hat2[:J], self.lam_hat1[:J],
                        self.lam_hat2[:J], self.pi_hat1, self.pi_hat2, self.mode, proj,
                        self.floored)

    def to_dict(self) -> dict:
        return {
            "format": "fdaclass-qda", "version": 1, "mode": self.mode,
            "mu_hat1": self.mu_hat1.tolist(), "mu_hat2": self.mu_hat2.tolist(),
            "lam_hat1": self.lam_hat1.tolist(), "lam_hat2": self.lam_hat2.tolist(),
            "pi_hat1": self.pi_hat1, "pi_hat2": self.pi_hat2,
            "projector": None if self.projector is None else self.projector.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QdaModel":
        if d.get("format") != "fdaclass-qda":
            raise DataError("not a saved QDA model")
        proj = None if d["projector"] is None else Projector.from_dict(d["projector"])
        return cls(d["mu_hat1"], d["mu_hat2"], d["lam_hat1"], d["lam_hat2"],
                   d["pi_hat1"], d["pi_hat2"], d["mode"], proj)


def _class_moments(scores: np.ndarray, labels: np.ndarray):
    out = []
    for k in (1, 2):
        xk = scores[labels == k]
        if xk.shape[0] < 2:
            raise DataError(f"class {k} has {xk.shape[0]} samples; at least 2 are required")
        mean = xk.mean(axis=0)
        var = np.mean((xk - mean) ** 2, axis=0)  # biased 1/n_k estimator
        out.append((mean, var, xk.shape[0]))
    return out


def fit_scores(scores, labels, j: Optional[int] = None, mode: str = "FQDA",
               projector: Optional[Projector] = None) -> QdaModel:
    """Fit on an (n, J_avail) score matrix using its first ``j`` columns."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.ndim != 2 or scores.shape[0] != labels.size:
        raise DataError("scores must be an (n, J) array with one label per row")
    j = scores.shape[1] if j is None else int(j)
    if not 1 <= j <= scores.shape[1]:
        raise DataError(f"j={j} outside 1..{scores.shape[1]}")
    bad = set(np.unique(labels)) - {1, 2}
    if bad:
        raise DataError(f"unknown class labels {sorted(bad)}")
    (m1, v1, n1), (m2, v2, n2) = _class_moments(scores[:, :j], labels)
    floored = (int(np.sum(v1 < VAR_FLOOR)), int(np.sum(v2 < VAR_FLOOR)))
    if sum(floored):
        warnings.warn(f"{sum(floored)} variance estimate(s) below {VAR_FLOOR:g} were floored",
                      RuntimeWarning, stacklevel=2)
    v1, v2 = np.maximum(v1, VAR_FLOOR), np.maximum(v2, VAR_FLOOR)
    n = n1 + n2
    return QdaModel(m1, m2, v1, v2, n1 / n, n2 / n, mode, projector, floored)


def default_projector(data: Dataset, J: int, mode: str = "inner") -> Projector:
    if data.values is None:
        raise DataError("sFQDA needs curves observed on a grid")
    if J > data.m_count:
        raise DataError(f"J={J} exceeds the number of sampling points M={data.m_count}")
    if mode == "inner" and not is_uniform_grid(data.grid):
        raise DataError("inner-product projection requires an evenly spaced grid; "
                        "use least-squares projection for non-uniform grids")
    return Projector(tuple(float(t) for t in data.grid), J, "fourier", mode)


def fit(data: Dataset, j: int, mode: str = "FQDA", projector: Optional[Projector] = None) -> QdaModel:
    """Fit FQDA on exact scores or sFQDA on grid curves."""
    if mode == "FQDA":
        if data.scores is None:
            raise DataError("FQDA needs exactly observed scores")
        return fit_scores(data.scores, data.labels, j, "FQDA")
    if mode == "sFQDA":
        projector = projector or default_projector(data, j)
        projector = Projector(projector.grid, j, projector.kind, projector.mode)
        return fit_scores(projector(data.values), data.labels, j, "sFQDA", projector)
    raise ValueError(f"mode must be one of {MODES}")


def _terms(model: QdaModel, z: np.ndarray) -> np.ndarray:
    """Per-coordinate contributions to the discriminant, shape (..., J)."""
    mbar = 0.5 * (model.mu_hat1 + model.mu_hat2)
    a = z - model.mu_hat1
    return (model.d_hat * a * a - 2.0 * model.beta_hat * (z - mbar)
            - np.log(model.lam_hat1 / model.lam_hat2))


def discriminant(model: QdaModel, z):
    """Estimated quadratic discriminant Q_hat(z) for one vector or an (n, J) array.

    log|D Sigma1 + I| is evaluated as sum_j log(lam1_j / lam2_j).
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != model.j_used:
        raise DataError(f"score vector has length {z.shape[-1]}, expected {model.j_used}")
    out = np.sum(_terms(model, z), axis=-1) + 2.0 * math.log(model.pi_hat1 / model.pi_hat2)
    return float(out) if np.ndim(out) == 0 else out


def classify(model: QdaModel, z):
    q = discriminant(model, z)
    return np.where(np.asarray(q) >= 0, 1, 2) if np.ndim(q) else (1 if q >= 0 else 2)


def scores_for(model: QdaModel, data: Dataset) -> np.ndarray:
    """Scores of ``data`` in the representation the model was fitted on."""
    if model.projector is not None:
        if data.values is None:
            raise DataError("sFQDA model needs grid observations")
        return model.projector(data.values)
    if data.scores is None:
        raise DataError("FQDA model needs exact scores")
    return data.scores[:, : model.j_used]


def risk(model: QdaModel, scores, labels) -> tuple[float, float]:
    """Misclassification rate on a labelled test set and its binomial SE."""
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        raise DataError("empty test set")
    err = float(np.mean(classify(model, np.asarray(scores, dtype=float)) != labels))
    return err, binomial_se(err, labels.size)


# ---------------------------------------------------------------------------
# Choice of J
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JSelection:
    method: str = "cv"  # "theory-full" | "theory-sampled" | "cv"
    nu1: Optional[float] = None
    nu2: Optional[float] = None
    k_folds: int = 5
    j_grid: Optional[tuple] = None
    j_max: int = 20

    def __post_init__(self):
        if self.method not in ("theory-full", "theory-sampled", "cv"):
            raise ValueError(f"unknown J-selection method {self.method!r}")
        if self.j_grid is not None:
            grid = tuple(int(j) for j in self.j_grid)
            if not grid or min(grid) < 1:
                raise ValueError("j_grid must be nonempty with entries >= 1")
            object.__setattr__(self, "j_grid", grid)
        if self.k_folds < 2:
            raise ValueError("k_folds must be >= 2")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def theory_j_full(n: int, nu2: float) -> float:
    return (n / math.log(n)) ** (1.0 / (1.0 + nu2))


def critical_frequency(n: int, nu1: float) -> float:
    """M* = (n / log n)^(1 / nu1)."""
    return (n / math.log(n)) ** (1.0 / nu1)


def stratified_folds(labels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    folds = np.empty(labels.size, dtype=int)
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        folds[idx] = np.arange(idx.size) % k
    return folds


def cv_errors(scores: np.ndarray, labels: np.ndarray, j_grid: Sequence[int], k_folds: int,
              seed=None) -> np.ndarray:
    """Pooled K-fold misclassification rate for each J in ``j_grid``."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    j_grid = np.asarray(j_grid, dtype=int)
    j_top = int(j_grid.max())
    if j_top > scores.shape[1]:
        raise DataError(f"j_grid reaches {j_top} but only {scores.shape[1]} scores are available")
    rng = as_generator(seed)
    folds = stratified_folds(labels, k_folds, rng)
    wrong = np.zeros(j_grid.size)
    seen = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for f in range(k_folds):
            tr, va = folds != f, folds == f
            ltr = labels[tr]
            if va.sum() == 0 or min(np.sum(ltr == 1), np.sum(ltr == 2)) < 2:
                continue
            model = fit_scores(scores[tr, :j_top], ltr, j_top)
            cum = np.cumsum(_terms(model, scores[va, :j_top]), axis=1)
            q = cum[:, j_grid - 1] + 2.0 * math.log(model.pi_hat1 / model.pi_hat2)
            pred = np.where(q >= 0, 1, 2)
            wrong += np.sum(pred != labels[va][:, None], axis=0)
            seen += int(va.sum())
    if seen == 0:
        raise DataError("every cross-validation fold lacks a class; cannot select J")
    return wrong / seen


def select_j(selection: JSelection, n: int, m: Optional[int] = None, train=None,
             seed=None, j_available: Optional[int] = None) -> int:
    """Truncation level J by theory formula or cross-validation.

    ``train`` for CV is a ``(scores, labels)`` pair holding at least as many
    score columns as the largest grid entry.  Results are clamped to
    [1, j_available] (and to M for sampled data).
    """
    cap = selection.j_max if j_available is None else min(selection.j_max, j_available)
    if m is not None:
        cap = min(cap, m)
    cap = max(cap, 1)
    if selection.method == "theory-full":
        if selection.nu2 is None:
            raise ValueError("theory-full J selection needs nu2")
        return min(max(round_half_up(theory_j_full(n, selection.nu2)), 1), cap)
    if selection.method == "theory-sampled":
        if selection.nu1 is None or selection.nu2 is None or m is None:
            raise ValueError("theory-sampled J selection needs nu1, nu2 and M")
        if m < critical_frequency(n, selection.nu1):
            raw = m ** (selection.nu1 / (1.0 + selection.nu2))
        else:
            raw = theory_j_full(n, selection.nu2)
        return min(max(round_half_up(raw), 1), cap)
    if train is None:
        raise ValueError("cross-validation needs training data")
    scores, labels = train
    scores = np.asarray(scores, dtype=float)
    grid = selection.j_grid
    if grid is None:
        cap = min(cap, max(1, int(n) // 2), scores.shape[1])
        grid = tuple(range(1, cap + 1))
    grid = tuple(sorted(set(grid)))
    errs = cv_errors(scores, labels, grid, selection.k_folds, seed)
    return int(grid[int(np.argmin(errs))])  # argmin returns the first (smallest j) on ties


def save_model(model: QdaModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)


def load_model(path) -> QdaModel:
    with open(path) as fh:
        return QdaModel.from_dict(json.load(fh))
