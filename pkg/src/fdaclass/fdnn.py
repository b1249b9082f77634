"""Sparse ReLU networks trained by hinge-loss risk minimization.

A network in F(L, J, p, s, B) computes

    f(x) = W_L s_{V_L}( W_{L-1} ... W_1 s_{V_1}( W_0 x ) )

with the shifted ReLU s_V(y) = max(y - V, 0).  Every weight and shift is
bounded by B in absolute value, at most s of them are nonzero, and the output
is clamped to [-1, 1].  Training is mini-batch (sub)gradient descent with
clipping to [-B, B] after each step and periodic top-s magnitude projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .basis import Projector
from .errors import DataError, NumericalError
from .oracle import binomial_se

SIZING_MODES = ("theory51", "theory52", "practical6")
FORMAT_TAG = "fdaclass-fdnn"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetArch:
    widths: tuple  # (p_0 = J, p_1, ..., p_L, p_{L+1} = 1)
    sparsity: int
    bound: float

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 3:
            raise ValueError("need at least one hidden layer")
        if widths[-1] != 1:
            raise ValueError("output width p_{L+1} must be 1")
        if min(widths) < 1:
            raise ValueError("layer widths must be positive")
        object.__setattr__(self, "widths", widths)
        if self.bound <= 0:
            raise ValueError("weight bound B must be positive")
        if self.sparsity < self.depth + 1:
            raise ValueError("sparsity budget must allow one active weight per layer")

    @property
    def depth(self) -> int:
        return len(self.widths) - 2

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def n_params(self) -> int:
        w = self.widths
        return sum(w[i + 1] * w[i] for i in range(len(w) - 1)) + sum(w[1:-1])

    @classmethod
    def uniform(cls, input_dim: int, depth: int, width: int, sparsity: int, bound: float) -> "NetArch":
        return cls((input_dim,) + (width,) * depth + (1,), sparsity, bound)


@dataclass(frozen=True)
class DnnModel:
    arch: NetArch
    weights: tuple  # W_0 .. W_L, W_l has shape (p_{l+1}, p_l)
    shifts: tuple  # V_1 .. V_L, V_l has shape (p_l,)
    projector: Optional[Projector] = None
    trace: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        w = self.arch.widths
        if len(self.weights) != len(w) - 1 or len(self.shifts) != len(w) - 2:
            raise ValueError("parameter blocks do not match the architecture depth")
        for l, W in enumerate(self.weights):
            if W.shape != (w[l + 1], w[l]):
                raise ValueError(f"W_{l} has shape {W.shape}, expected {(w[l + 1], w[l])}")
        for l, V in enumerate(self.shifts, start=1):
            if V.shape != (w[l],):
                raise ValueError(f"V_{l} has shape {V.shape}, expected {(w[l],)}")

    @property
    def nonzeros(self) -> int:
        return int(sum(np.count_nonzero(a) for a in self.weights + self.shifts))

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(a)) if a.size else 0.0 for a in self.weights + self.shifts))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    lr: float = 1e-3
    lr_decay: float = 0.5
    plateau_patience: int = 10
    projection_period: int = 10
    seed: int = 0
    early_stop_patience: Optional[int] = None
    optimizer: str = "adam"  # "adam" | "sgd"
    # Sparsity budget is annealed from dense to s between these epoch fractions;
    # (0, 0) projects straight to s from the first projection on.
    prune_start: float = 0.2
    prune_end: float = 0.7
    layer_normalized: bool = True  # rank entries relative to their block's scale
    # Hidden units trained per layer; None picks the widest dense sub-network
    # holding at most support_factor * s parameters.
    active_width: Optional[int] = None
    support_factor: float = 1.0
    # Extra attempts, from derived seeds, when a fit predicts one class for
    # every training point (all paths to one output sign died).
    restarts: int = 2

    def __post_init__(self):
        for name in ("epochs", "batch_size", "projection_period", "plateau_patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.lr <= 0 or not 0 < self.lr_decay <= 1:
            raise ValueError("lr must be positive and lr_decay in (0, 1]")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        if not 0.0 <= self.prune_start <= self.prune_end <= 1.0:
            raise ValueError("need 0 <= prune_start <= prune_end <= 1")
        if self.active_width is not None and self.active_width < 1:
            raise ValueError("active_width must be positive")
        if self.support_factor <= 0:
            raise ValueError("support_factor must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


# ---------------------------------------------------------------------------
# Architecture sizing
# ---------------------------------------------------------------------------


def _r(x: float) -> int:
    return max(int(math.floor(x + 0.5)), 1)


def _theory_full(n: int, nu2: float) -> tuple[int, int, int, int, float]:
    ln = math.log(n)
    e = 1.0 / (1.0 + nu2)
    L = _r(ln)
    J = _r(n**e * ln ** (-4.0 * e))
    width = _r(n**e * ln ** ((nu2 - 3.0) * e))
    s = _r(n**e * ln ** ((2.0 * nu2 - 2.0) * e))
    B = n ** (nu2 / (2.0 + 2.0 * nu2)) * ln ** ((2.0 - 2.0 * nu2) * e)
    return L, J, width, s, B


def size_arch(n: int, m: Optional[int] = None, nu2: Optional[float] = None,
              nu1: Optional[float] = None, mode: str = "practical6", c: int = 1,
              j_cap: Optional[int] = None) -> NetArch:
    """Architecture (L, J, p, s, B) from the sample size and sampling frequency.

    ``theory51`` and ``theory52`` use the order-of-magnitude scalings with unit
    constants; ``practical6`` uses the tuning rules of the simulations with
    natural logarithms.  ``j_cap`` limits the input dimension to the number of
    scores available.
    """
    if mode not in SIZING_MODES:
        raise ValueError(f"unknown sizing mode {mode!r}; expected one of {SIZING_MODES}")
    if mode == "practical6":
        if not 1 <= c <= 4:
            raise ValueError("c must lie in 1..4")
        mm = m if m is not None else 1
        L = max(math.ceil(math.log(mm)), math.ceil(math.log(n)))
        root = max(math.ceil(math.sqrt(mm)), math.ceil(math.sqrt(n)))
        J = c * root
        width = 20 * root
        s = 20 * root
        B = 5.0 * max(math.ceil(mm**0.25), math.ceil(n**0.25))
        if m is not None:
            J = min(J, m)
    else:
        if nu2 is None:
            raise ValueError(f"{mode} sizing needs nu2")
        L, J, width, s, B = _theory_full(n, nu2)
        if mode == "theory52":
            if nu1 is None or m is None:
                raise ValueError("theory52 sizing needs nu1 and M")
            m_star = (n / math.log(n) ** 4) ** (1.0 / nu1)
            if m < m_star:
                lm = math.log(m)
                base = m ** (nu1 / (1.0 + nu2))
                L, J, width = _r(lm), _r(base), _r(base * lm)
                s = _r(base * lm**2)
                B = m ** (nu1 * nu2 / (2.0 + 2.0 * nu2))
            J = min(J, m)
    L = max(L, 1)
    if j_cap is not None:
        J = min(J, j_cap)
    return NetArch.uniform(J, L, width, max(s, L + 1), B)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------


def hinge(x):
    """phi(x) = max(1 - x, 0)."""
    out = np.maximum(1.0 - np.asarray(x, dtype=float), 0.0)
    return float(out) if out.ndim == 0 else out


def _forward_cache(weights, shifts, X):
    acts, pres = [X], []
    a = X
    for W, V in zip(weights[:-1], shifts):
        pre = a @ W.T - V
        a = np.maximum(pre, 0.0)
        pres.append(pre)
        acts.append(a)
    raw = (a @ weights[-1].T)[:, 0]
    return raw, acts, pres


def raw_output(model: DnnModel, z) -> np.ndarray:
    """Network output before the [-1, 1] clamp."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return _forward_cache(model.weights, model.shifts, z)[0]


def forward(model: DnnModel, z):
    """Clamped network output in [-1, 1] for one score vector or an (n, J) array."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != model.arch.input_dim:
        raise DataError(f"input has length {z.shape[-1]}, expected {model.arch.input_dim}")
    out = np.clip(raw_output(model, z), -1.0, 1.0)
    return float(out[0]) if z.ndim == 1 else out


def loss_and_grad(weights, shifts, X, y):
    """Mean hinge loss of the clamped network and its parameter (sub)gradients.

    Derivatives are taken as 0 at every kink (ReLU at 0, hinge at margin 1,
    clamp at +-1) and the clamp is treated as the identity strictly inside
    (-1, 1), zero outside.
    """
    n = X.shape[0]
    raw, acts, pres = _forward_cache(weights, shifts, X)
    out = np.clip(raw, -1.0, 1.0)
    margin = y * out
    loss = float(np.mean(np.maximum(1.0 - margin, 0.0)))
    g = np.where(margin < 1.0, -y, 0.0) / n
    g = g * ((raw > -1.0) & (raw < 1.0))
    gW = [None] * len(weights)
    gV = [None] * len(shifts)
    delta = g[:, None]  # (n, 1) gradient wrt the output layer's input
    gW[-1] = delta.T @ acts[-1]
    back = delta @ weights[-1]
    for l in range(len(shifts) - 1, -1, -1):
        delta = back * (pres[l] > 0.0)
        gV[l] = -delta.sum(axis=0)
        gW[l] = delta.T @ acts[l]
        back = delta @ weights[l]
    return loss, gW, gV


def mean_hinge(model: DnnModel, Z, y) -> float:
    return loss_and_grad(list(model.weights), list(model.shifts),
                         np.asarray(Z, float), np.asarray(y, float))[0]


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------


def clip_params(params, bound: float) -> None:
    for a in params:
        np.clip(a, -bound, bound, out=a)


def _block_rms(a: np.ndarray) -> float:
    nz = a[a != 0.0]
    return float(np.sqrt(np.mean(nz * nz))) if nz.size else 1.0


def project_top_s(params, s: int, masks=None, normalize: bool = False) -> None:
    """Zero all but the s largest-magnitude entries across all blocks (in place).

    With ``normalize`` each entry is ranked by its magnitude relative to the
    RMS of its own block, so layers on different scales compete fairly.  When
    ``masks`` is given, each mask is updated to the surviving support.
    """
    if normalize:
        flat = np.concatenate([a.ravel() / _block_rms(a) for a in params])
    else:
        flat = np.concatenate([a.ravel() for a in params])
    if np.count_nonzero(flat) > s:
        keep = np.zeros(flat.size, dtype=bool)
        keep[np.argpartition(-np.abs(flat), s - 1)[:s]] = True
        start = 0
        for a in params:
            size = a.size
            a.ravel()[~keep[start:start + size]] = 0.0
            start += size
    if masks is not None:
        for a, m in zip(params, masks):
            m &= a != 0.0


def budget_at(epoch: int, cfg: "TrainConfig", total: int, s: int) -> int:
    """Sparsity budget after ``epoch``: cubic decay from ``total`` to ``s``."""
    a, b = cfg.prune_start * cfg.epochs, cfg.prune_end * cfg.epochs
    if epoch >= b:
        return s
    if epoch <= a:
        return total
    frac = (epoch - a) / (b - a)
    return max(s, int(round(s + (total - s) * (1.0 - frac) ** 3)))


def _sub_count(arch: NetArch, k: int) -> int:
    w = [arch.widths[0]] + [min(k, p) for p in arch.widths[1:-1]] + [1]
    return sum(w[i + 1] * w[i] for i in range(len(w) - 1)) + sum(w[1:-1])


def auto_width(arch: NetArch, factor: float = 1.0) -> int:
    """Widest k whose dense k-unit sub-network has at most factor * s parameters."""
    cap = max(arch.widths[1:-1])
    k = 1
    while k < cap and _sub_count(arch, k + 1) <= factor * arch.sparsity:
        k += 1
    return k


def support_masks(arch: NetArch, k: int):
    """Masks selecting the first k units of every hidden layer."""
    w = arch.widths
    act = [w[0]] + [min(k, p) for p in w[1:-1]] + [1]
    wm, vm = [], []
    for l in range(len(w) - 1):
        m = np.zeros((w[l + 1], w[l]), dtype=bool)
        m[: act[l + 1], : act[l]] = True
        wm.append(m)
    for l in range(1, len(w) - 1):
        m = np.zeros(w[l], dtype=bool)
        m[: act[l]] = True
        vm.append(m)
    return wm + vm


def init_params(arch: NetArch, rng: np.random.Generator, masks=None):
    """Uniform on [-a, a], a = min(B, 1/sqrt(fan_in)); zero shifts.

    With ``masks`` the fan-in counts active inputs only and inactive entries
    are zero.
    """
    w = arch.widths
    weights = []
    for l in range(len(w) - 1):
        fan_in = w[l] if masks is None else max(int(masks[l].sum(axis=1).max()), 1)
        a = min(arch.bound, 1.0 / math.sqrt(fan_in))
        W = rng.uniform(-a, a, size=(w[l + 1], w[l]))
        if masks is not None:
            W *= masks[l]
        weights.append(W)
    shifts = [np.zeros(w[l]) for l in range(1, len(w) - 1)]
    return weights, shifts


def live_units(weights, shifts, X) -> list:
    """Hidden units per layer that fire for at least one row of X."""
    _, acts, _ = _forward_cache(weights, shifts, X)
    return [int(np.any(a > 0.0, axis=0).sum()) for a in acts[1:]]


def live_init(arch: NetArch, rng: np.random.Generator, masks, X, tries: int = 50):
    """Initial draw in which every hidden layer keeps at least half its units alive on X.

    A draw where a whole layer is silent on the data has zero gradient and
    cannot train, so such draws are rejected; after ``tries`` rejections
    the liveliest draw seen is used.
    """
    active = [int(m.any(axis=1).sum()) for m in masks[: len(arch.widths) - 2]]
    best, best_score = None, -1.0
    for _ in range(tries):
        weights, shifts = init_params(arch, rng, masks)
        alive = live_units(weights, shifts, X)
        score = min(a / max(t, 1) for a, t in zip(alive, active))
        if score > best_score:
            best, best_score = (weights, shifts), score
        if score >= 0.5:
            break
    return best


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def encode_labels(labels) -> np.ndarray:
    """Class 1 -> +1, class 2 -> -1, so f >= 0 predicts class 1."""
    labels = np.asarray(labels, dtype=int)
    bad = set(np.unique(labels)) - {1, 2}
    if bad:
        raise DataError(f"unknown class labels {sorted(bad)}")
    return np.where(labels == 1, 1.0, -1.0)


class _Adam:
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.b1, self.b2, self.eps, self.t = beta1, beta2, eps, 0

    def step(self, params, grads, lr):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _train_once(X, y, arch: NetArch, cfg: TrainConfig, rng: np.random.Generator):
    k = cfg.active_width or auto_width(arch, cfg.support_factor)
    masks = support_masks(arch, k)
    weights, shifts = live_init(arch, rng, masks, X)
    params = weights + shifts
    n_w = len(weights)
    adam = _Adam(params) if cfg.optimizer == "adam" else None
    total = int(sum(m.sum() for m in masks))

    def projected_loss(ps):
        cand = [p.copy() for p in ps]
        project_top_s(cand, arch.sparsity, normalize=cfg.layer_normalized)
        return loss_and_grad(cand[:n_w], cand[n_w:], X, y)[0], cand

    best_loss, best = projected_loss(params)
    live_best = math.inf
    since_live, since_best = 0, 0
    lr = cfg.lr
    trace = []
    n = X.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, gW, gV = loss_and_grad(params[:n_w], params[n_w:], X[idx], y[idx])
            grads = gW + gV
            if adam is None:
                for p, g in zip(params, grads):
                    p -= lr * g
            else:
                adam.step(params, grads, lr)
            for p, m in zip(params, masks):
                p *= m
            clip_params(params, arch.bound)
        if epoch % cfg.projection_period == 0 or epoch == cfg.epochs:
            project_top_s(params, budget_at(epoch, cfg, total, arch.sparsity), masks,
                          cfg.layer_normalized)

        live_loss = loss_and_grad(params[:n_w], params[n_w:], X, y)[0]
        if not math.isfinite(live_loss):
            raise NumericalError(f"training loss became {live_loss} at epoch {epoch}")
        if live_loss < live_best - 1e-12:
            live_best, since_live = live_loss, 0
        else:
            since_live += 1
            if since_live >= cfg.plateau_patience:
                lr *= cfg.lr_decay
                since_live = 0
        cand_loss, cand = projected_loss(params)
        if cand_loss < best_loss:
            best_loss, best, since_best = cand_loss, cand, 0
        else:
            since_best += 1
        trace.append(best_loss)
        if cfg.early_stop_patience is not None and since_best >= cfg.early_stop_patience:
            break
    return best, best_loss, trace


def train(scores, labels, arch: NetArch, cfg: TrainConfig = TrainConfig(),
          projector: Optional[Projector] = None) -> DnnModel:
    """Approximate hinge-loss minimizer over F(L, J, p, s, B).

    Training runs on a dense sub-network of the widest size that fits the
    sparsity budget (times ``cfg.support_factor``); the budget then shrinks
    to s along a cubic schedule, and entries removed by a projection stay at
    zero.  Returns the sparsity-projected parameter state with the lowest
    full training loss seen at any epoch end; ``model.trace`` records the
    best-so-far loss per epoch of the returned attempt.
    """
    X = np.asarray(scores, dtype=float)
    if X.ndim != 2 or X.shape[1] < arch.input_dim:
        raise DataError(f"need an (n, >= {arch.input_dim}) score matrix")
    X = X[:, : arch.input_dim]
    y = encode_labels(labels)
    if y.size != X.shape[0]:
        raise DataError("one label per score row required")
    if np.all(y > 0) or np.all(y < 0):
        raise DataError("training data must contain both classes")

    n_w = len(arch.widths) - 1
    chosen = None
    for attempt in range(cfg.restarts + 1):
        seed = cfg.seed if attempt == 0 else np.random.SeedSequence(cfg.seed, spawn_key=(attempt,))
        params, loss, trace = _train_once(X, y, arch, cfg, np.random.default_rng(seed))
        if chosen is None or loss < chosen[1]:
            chosen = (params, loss, trace)
        raw = _forward_cache(params[:n_w], params[n_w:], X)[0]
        if np.any(raw >= 0) and np.any(raw < 0):
            break
    params, _, trace = chosen
    return DnnModel(arch, tuple(params[:n_w]), tuple(params[n_w:]), projector, tuple(trace))


def classify_dnn(model: DnnModel, z):
    """Class 1 iff the network output is >= 0."""
    out = forward(model, z)
    return np.where(np.asarray(out) >= 0, 1, 2) if np.ndim(out) else (1 if out >= 0 else 2)


def dnn_risk(model: DnnModel, scores, labels) -> tuple[float, float]:
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        raise DataError("empty test set")
    scores = np.asarray(scores, dtype=float)[:, : model.arch.input_dim]
    err = float(np.mean(classify_dnn(model, scores) != labels))
    return err, binomial_se(err, labels.size)


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------


def save_model(model: DnnModel, path) -> None:
    """Versioned plain-text dump: header lines, then row-major parameter blocks."""
    a = model.arch
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}",
             "widths " + " ".join(str(w) for w in a.widths),
             f"sparsity {a.sparsity}",
             f"bound {a.bound!r}"]
    if model.projector is not None:
        p = model.projector
        kind = "fourier" if p.kind == "fourier" else ",".join(p.kind)
        lines.append(f"projector {p.mode} {p.j_count} {kind}")
        lines.append("grid " + " ".join(repr(float(t)) for t in p.grid))
    for l, W in enumerate(model.weights):
        lines.append(f"W {l} {W.shape[0]} {W.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in W)
    for l, V in enumerate(model.shifts, start=1):
        lines.append(f"V {l} {V.size}")
        lines.append(" ".join(repr(float(v)) for v in V))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> DnnModel:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    it = iter(lines)
    try:
        tag, version = next(it).split()
        if tag != FORMAT_TAG or int(version) != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported model format {tag} {version}")
        widths = tuple(int(v) for v in next(it).split()[1:])
        sparsity = int(next(it).split()[1])
        bound = float(next(it).split()[1])
        projector = None
        weights, shifts = [], []
        for line in it:
            head = line.split()
            if head[0] == "projector":
                mode, jc, kind = head[1], int(head[2]), head[3]
                kind = "fourier" if kind == "fourier" else tuple(kind.split(","))
                grid = tuple(float(v) for v in next(it).split()[1:])
                projector = Projector(grid, jc, kind, mode)
            elif head[0] == "W":
                rows, cols = int(head[2]), int(head[3])
                W = np.array([[float(v) for v in next(it).split()] for _ in range(rows)])
                weights.append(W.reshape(rows, cols))
            elif head[0] == "V":
                size = int(head[2])
                V = np.array([float(v) for v in next(it).split()]) if size else np.empty(0)
                shifts.append(V.reshape(size))
            else:
                raise DataError(f"{path}: unexpected line {line[:40]!r}")
    except (StopIteration, ValueError, IndexError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: truncated or malformed model file") from exc
    return DnnModel(NetArch(widths, sparsity, bound), tuple(weights), tuple(shifts), projector)


def with_projector(model: DnnModel, projector: Optional[Projector]) -> DnnModel:
    return replace(model, projector=projector)
