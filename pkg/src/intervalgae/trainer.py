"""SGD training with random per-batch transposition, input dropout and the
weight regularizers (L2, mapping sparsity, column-norm deviation, max-norm)."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .gae import ContextPair, GaeParams, ModelConfig, backward, forward, init_params
from .numerics import make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 5000
    batch_size: int = 64
    lr_start: float = 1e-3
    lr_end: float = 0.0
    dropout_p: float = 0.5
    l2_weight: float = 0.3
    sparsity_weight: float = 1e-4
    norm_dev_weight: float = 1e-3
    max_col_norm: float = 2.0
    init_gain: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.total_steps < 0 or self.batch_size <= 0:
            raise ValueError("total_steps must be >= 0 and batch_size > 0")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must lie in [0, 1)")
        if not self.lr_start > self.lr_end >= 0.0:
            raise ValueError("need lr_start > lr_end >= 0")
        if min(self.l2_weight, self.sparsity_weight, self.norm_dev_weight) < 0:
            raise ValueError("regularizer weights must be non-negative")
        if self.max_col_norm <= 0:
            raise ValueError("max_col_norm must be positive")
        if self.init_gain <= 0:
            raise ValueError("init_gain must be positive")


@dataclass
class TrainReport:
    params: GaeParams
    data_loss: list[float] = field(default_factory=list)
    reg_loss: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    deltas: list[int] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.data_loss)

    @property
    def loss(self) -> list[float]:
        return [d + r for d, r in zip(self.data_loss, self.reg_loss)]

    def trace_rows(self) -> Iterable[tuple]:
        for s, (lr, d, r) in enumerate(zip(self.lr, self.data_loss, self.reg_loss)):
            yield s, lr, d, r


class TrainingDiverged(RuntimeError):
    pass


def make_pairs(frames: np.ndarray, L: int) -> list[ContextPair]:
    """All (context, next frame) pairs of one piece; context = frames t-L+1..t."""
    frames = np.asarray(frames)
    T = frames.shape[0]
    if T < L + 1:
        log.warning("piece with %d frames is shorter than L+1=%d; skipped", T, L + 1)
        return []
    return [ContextPair(frames[t - L + 1:t + 1], frames[t + 1]) for t in range(L - 1, T - 1)]


def pair_arrays(frames: np.ndarray, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Same pairs as :func:`make_pairs`, as stacked (N, L*P) / (N, P) arrays."""
    frames = np.asarray(frames, dtype=np.float64)
    T, P = frames.shape
    if T < L + 1:
        log.warning("piece with %d frames is shorter than L+1=%d; skipped", T, L + 1)
        return np.zeros((0, L * P)), np.zeros((0, P))
    windows = np.lib.stride_tricks.sliding_window_view(frames, (L, P))[:, 0]
    X = windows[: T - L].reshape(T - L, L * P).copy()
    Y = frames[L:].copy()
    return X, Y


def corpus_arrays(pieces: Sequence[np.ndarray], L: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs from every piece; no pair straddles two pieces."""
    xs, ys = zip(*(pair_arrays(p, L) for p in pieces))
    return np.concatenate(xs), np.concatenate(ys)


def learning_rate(step: int, tc: TrainConfig) -> float:
    if tc.total_steps == 0:
        return tc.lr_start
    frac = step / tc.total_steps
    return tc.lr_end + (tc.lr_start - tc.lr_end) * (1.0 - frac)


def _column_norm_dev(W: np.ndarray) -> tuple[float, np.ndarray]:
    norms = np.sqrt(np.sum(W * W, axis=0))
    dev = norms - norms.mean()
    val = float(np.sum(dev ** 2))
    # sum(dev) == 0, so d/dnorm_j of the penalty is 2*dev_j
    safe = np.where(norms > 0, norms, 1.0)
    grad = W * (2.0 * dev / safe)[None, :]
    return val, grad


def regularizer_terms(p: GaeParams, M: np.ndarray, tc: TrainConfig) -> tuple[float, GaeParams, np.ndarray]:
    """Regularizer value, its direct parameter gradient, and its gradient with
    respect to the batch of mappings ``M`` (to be back-propagated by the caller).
    """
    M = np.asarray(M, dtype=np.float64)
    val = 0.0
    dU = np.zeros_like(p.U)
    dV = np.zeros_like(p.V)
    if tc.l2_weight:
        val += tc.l2_weight * float(np.sum(p.U ** 2) + np.sum(p.V ** 2))
        dU += 2.0 * tc.l2_weight * p.U
        dV += 2.0 * tc.l2_weight * p.V
    if tc.norm_dev_weight:
        for W, dW in ((p.U, dU), (p.V, dV)):
            v, g = _column_norm_dev(W)
            val += tc.norm_dev_weight * v
            dW += tc.norm_dev_weight * g
    dM = np.zeros_like(M)
    if tc.sparsity_weight and M.size:
        val += tc.sparsity_weight * float(np.mean(np.abs(M)))
        dM = tc.sparsity_weight * np.sign(M) / M.size
    return val, GaeParams(dU, dV, np.zeros_like(p.W0), np.zeros_like(p.W1)), dM


def objective(p: GaeParams, X: np.ndarray, Y: np.ndarray, delta: int, kind: str,
              tc: TrainConfig) -> tuple[float, float, GaeParams]:
    """Mean transposed data loss, regularizer value and the gradient of
    ``sum(pair losses) + regularizers``.

    The data gradient is the sum of per-pair gradients, so a step moves each
    pair's loss at the nominal learning rate whatever the batch size.
    """
    cache = forward(p, X, Y, delta, kind)
    data = float(np.mean(cache.losses))
    reg, g_reg, dM = regularizer_terms(p, cache.M, tc)
    B = X.shape[0]
    # backward() differentiates the batch mean; rescale to the batch sum
    g = backward(p, cache, dM_extra=dM / B)
    for a, b in zip(g.arrays(), g_reg.arrays()):
        a *= B
        a += b
    return data, reg, g


def project_columns(W: np.ndarray, max_norm: float) -> None:
    norms = np.sqrt(np.sum(W * W, axis=0))
    over = norms > max_norm
    if np.any(over):
        W[:, over] *= max_norm / norms[over]


def train(X: np.ndarray, Y: np.ndarray, mc: ModelConfig, tc: TrainConfig,
          params: GaeParams | None = None,
          on_step: Callable[[int, GaeParams], None] | None = None) -> TrainReport:
    """Plain SGD on stacked pairs ``X`` (N x L*P) and ``Y`` (N x P).

    One transposition offset is drawn per batch; dropout masks the context
    only (inverted scaling), never the target.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim == 3:
        X = X.reshape(X.shape[0], -1)
    N = X.shape[0]
    if N == 0:
        raise ValueError("empty training corpus")
    if X.shape[1] != mc.context_dim or Y.shape != (N, mc.input_dim):
        raise ValueError(
            f"corpus shapes {X.shape}/{Y.shape} do not match the model "
            f"(context {mc.context_dim}, input {mc.input_dim})"
        )
    rng = make_rng(tc.seed)
    p = init_params(mc, rng, tc.init_gain) if params is None else params.copy()
    p.check_config(mc)
    report = TrainReport(params=p)
    keep = 1.0 - tc.dropout_p
    t0 = time.perf_counter()
    for step in range(tc.total_steps):
        lr = learning_rate(step, tc)
        idx = rng.choice(N, size=tc.batch_size, replace=N < tc.batch_size)
        delta = int(rng.integers(-mc.shift_range, mc.shift_range + 1))
        xb = X[idx]
        if tc.dropout_p > 0:
            xb = xb * (rng.random(xb.shape) < keep) / keep
        data, reg, g = objective(p, xb, Y[idx], delta, mc.output_kind, tc)
        if not (np.isfinite(data) and np.isfinite(reg)):
            raise TrainingDiverged(
                f"non-finite loss at step {step} (lr={lr:g}, batch ids {idx.tolist()})"
            )
        for w, dw in zip(p.arrays(), g.arrays()):
            w -= lr * dw
        project_columns(p.U, tc.max_col_norm)
        project_columns(p.V, tc.max_col_norm)
        report.data_loss.append(data)
        report.reg_loss.append(reg)
        report.lr.append(lr)
        report.deltas.append(delta)
        if on_step is not None:
            on_step(step, p)
    report.wall_clock = time.perf_counter() - t0
    if not all(np.all(np.isfinite(w)) for w in p.arrays()):
        raise TrainingDiverged("parameters became non-finite during the final step")
    return report


def train_pieces(pieces: Sequence[np.ndarray], mc: ModelConfig, tc: TrainConfig, **kw) -> TrainReport:
    X, Y = corpus_arrays(pieces, mc.context_frames)
    return train(X, Y, mc, tc, **kw)
