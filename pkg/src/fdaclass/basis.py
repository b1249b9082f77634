"""Basis evaluation, discrete design matrices and score extraction.

Two sampling-grid conventions are supported:

``"periodic"``
    t_m = (m - 1) / M, m = 1..M.  On this grid the Fourier design matrix
    satisfies ``B.T @ B == M * I`` exactly for J <= M.
``"closed"``
    t = linspace(0, 1, M), i.e. both endpoints included.  This is the grid
    the published simulation tables were produced on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DataError

ORTHO_TOL = 1e-9
RECOVERY_TOL = 1e-9

GRID_KINDS = ("periodic", "closed")
PROJECTION_MODES = ("lstsq", "inner")

NAMED_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "1": lambda t: np.ones_like(t),
    "t": lambda t: t,
    "t^2": lambda t: t**2,
    "t^3": lambda t: t**3,
    "log(t+2)": lambda t: np.log(t + 2.0),
    "sin(2pi t)": lambda t: np.sin(2.0 * np.pi * t),
    "cos(2pi t)": lambda t: np.cos(2.0 * np.pi * t),
}

# "fourier" or a tuple of NAMED_FUNCTIONS keys, in basis order
BasisKind = Union[str, tuple]


def fourier_eval(j: int, t):
    """Evaluate the j-th (1-based) Fourier basis function at ``t``.

    psi_1 = 1, psi_{2k} = sqrt(2) cos(2 k pi t), psi_{2k+1} = sqrt(2) sin(2 k pi t).
    Accepts a scalar or an array for ``t``.
    """
    if int(j) != j or j < 1:
        raise ValueError(f"Fourier index must be a positive integer, got {j!r}")
    j = int(j)
    t_arr = np.asarray(t, dtype=float)
    if j == 1:
        out = np.ones_like(t_arr)
    else:
        k = j // 2
        trig = np.cos if j % 2 == 0 else np.sin
        out = np.sqrt(2.0) * trig(2.0 * k * np.pi * t_arr)
    return float(out) if out.ndim == 0 else out


def make_grid(M: int, grid: str = "periodic") -> np.ndarray:
    if M < 1:
        raise ValueError("M must be >= 1")
    if grid == "periodic":
        return np.arange(M, dtype=float) / M
    if grid == "closed":
        return np.linspace(0.0, 1.0, M)
    raise ValueError(f"unknown grid convention {grid!r}; expected one of {GRID_KINDS}")


def basis_size(kind: BasisKind) -> int | None:
    """Number of functions in a custom basis; None for the (infinite) Fourier basis."""
    return None if kind == "fourier" else len(kind)


def evaluate_basis(kind: BasisKind, J: int, t) -> np.ndarray:
    """Matrix with entry (m, j) = psi_j(t_m) for the first ``J`` functions."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if kind == "fourier":
        return np.column_stack([fourier_eval(j, t) for j in range(1, J + 1)])
    names = tuple(kind)
    if J > len(names):
        raise ValueError(f"basis {names} has only {len(names)} functions, requested {J}")
    try:
        cols = [NAMED_FUNCTIONS[name](t) for name in names[:J]]
    except KeyError as exc:
        raise ValueError(f"unknown basis function {exc.args[0]!r}") from None
    return np.column_stack(cols)


@dataclass(frozen=True)
class DesignMatrix:
    """M x J matrix of basis values on a sampling grid."""

    entries: np.ndarray
    grid: np.ndarray
    kind: BasisKind = "fourier"

    @property
    def j_count(self) -> int:
        return self.entries.shape[1]

    @property
    def m_count(self) -> int:
        return self.entries.shape[0]


def build_design(M: int, J: int, kind: BasisKind = "fourier", grid: str = "periodic") -> DesignMatrix:
    if J < 1:
        raise ValueError("J must be >= 1")
    if J > M:
        raise ValueError(f"J={J} exceeds the number of sampling points M={M}")
    t = make_grid(M, grid)
    return DesignMatrix(evaluate_basis(kind, J, t), t, kind)


def design_on_grid(t: Sequence[float], J: int, kind: BasisKind = "fourier") -> DesignMatrix:
    """Design matrix on an arbitrary (possibly non-uniform) grid."""
    t = np.asarray(t, dtype=float)
    if J > t.size:
        raise ValueError(f"J={J} exceeds the number of sampling points M={t.size}")
    return DesignMatrix(evaluate_basis(kind, J, t), t, kind)


def is_uniform_grid(t: Sequence[float], rtol: float = 1e-6) -> bool:
    t = np.asarray(t, dtype=float)
    if t.size < 3:
        return True
    steps = np.diff(t)
    return bool(np.allclose(steps, steps[0], rtol=rtol, atol=0.0))


def project_scores(x, design: DesignMatrix, mode: str = "lstsq") -> np.ndarray:
    """Extract projection scores from curve values observed on ``design.grid``.

    ``x`` is a length-M vector or an (n, M) array of curves.  ``mode="inner"``
    applies zeta = M^{-1} B^T x, which is exact only for bases orthonormal on
    the grid (Fourier on the periodic grid); ``mode="lstsq"`` solves the
    least-squares system (B^T B)^{-1} B^T x.
    """
    x = np.asarray(x, dtype=float)
    M = design.m_count
    if x.shape[-1] != M:
        raise DataError(f"curve has {x.shape[-1]} values but the design has M={M} points")
    B = design.entries
    if mode == "inner":
        return x @ B / M
    if mode == "lstsq":
        coef, *_ = np.linalg.lstsq(B, x.T, rcond=None)
        return coef.T
    raise ValueError(f"unknown projection mode {mode!r}; expected one of {PROJECTION_MODES}")


@dataclass(frozen=True)
class Projector:
    """Serializable recipe turning grid curves into scores.

    Holds the basis kind, grid and mode rather than the matrix so that a saved
    classifier can rebuild it.
    """

    grid: tuple
    j_count: int
    kind: BasisKind = "fourier"
    mode: str = "inner"

    @property
    def design(self) -> DesignMatrix:
        return design_on_grid(self.grid, self.j_count, self.kind)

    def __call__(self, x) -> np.ndarray:
        return project_scores(x, self.design, self.mode)

    def to_dict(self) -> dict:
        kind = self.kind if self.kind == "fourier" else list(self.kind)
        return {"grid": [float(v) for v in self.grid], "j_count": self.j_count,
                "kind": kind, "mode": self.mode}

    @classmethod
    def from_dict(cls, d: dict) -> "Projector":
        kind = d["kind"] if d["kind"] == "fourier" else tuple(d["kind"])
        return cls(tuple(float(v) for v in d["grid"]), int(d["j_count"]), kind, d["mode"])
