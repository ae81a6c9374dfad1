"""Gated autoencoder relating a pitch context to the frame that follows it.

The forward mapping, the (optionally transposed) reconstruction, the losses
and the hand-derived backward pass all live here. Everything is batched over
a leading axis; the single-pair functions are thin wrappers.

Shapes (P pitches/bins, L context frames, F factors, H1/H2 mapping units)::

    U  : F x (L*P)      V  : F x P
    W0 : H1 x F         W1 : H2 x H1
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .numerics import DimensionError

BINARY = "binary"
REAL = "real"


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int = 60
    context_frames: int = 9
    factor_dim: int = 1024
    map_dim_1: int = 128
    map_dim_2: int = 64
    output_kind: str = BINARY
    shift_range: int = 30

    def __post_init__(self):
        for name in ("input_dim", "context_frames", "factor_dim", "map_dim_1", "map_dim_2"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.output_kind not in (BINARY, REAL):
            raise ValueError(f"output_kind must be {BINARY!r} or {REAL!r}, got {self.output_kind!r}")
        if not 0 <= self.shift_range < self.input_dim:
            raise ValueError("shift_range must lie in [0, input_dim)")

    @classmethod
    def symbolic(cls, **kw) -> "ModelConfig":
        return replace(cls(), **kw)

    @classmethod
    def audio(cls, **kw) -> "ModelConfig":
        base = cls(input_dim=120, factor_dim=512, output_kind=REAL, shift_range=60)
        return replace(base, **kw)

    @property
    def context_dim(self) -> int:
        return self.context_frames * self.input_dim

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class GaeParams:
    U: np.ndarray
    V: np.ndarray
    W0: np.ndarray
    W1: np.ndarray

    NAMES = ("U", "V", "W0", "W1")

    def __post_init__(self):
        F, LP = self.U.shape
        if self.V.shape[0] != F or self.W0.shape[1] != F or self.W1.shape[1] != self.W0.shape[0]:
            raise DimensionError(
                "inconsistent parameter shapes: "
                f"U{self.U.shape} V{self.V.shape} W0{self.W0.shape} W1{self.W1.shape}"
            )
        if LP % self.V.shape[1]:
            raise DimensionError("U's input width must be a multiple of V's width")

    @property
    def input_dim(self) -> int:
        return self.V.shape[1]

    @property
    def context_frames(self) -> int:
        return self.U.shape[1] // self.V.shape[1]

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.U, self.V, self.W0, self.W1)

    def copy(self) -> "GaeParams":
        return GaeParams(*(a.copy() for a in self.arrays()))

    def check_config(self, cfg: ModelConfig) -> None:
        want = {
            "U": (cfg.factor_dim, cfg.context_dim),
            "V": (cfg.factor_dim, cfg.input_dim),
            "W0": (cfg.map_dim_1, cfg.factor_dim),
            "W1": (cfg.map_dim_2, cfg.map_dim_1),
        }
        for name, shape in want.items():
            got = getattr(self, name).shape
            if got != shape:
                raise DimensionError(f"{name} has shape {got}, config expects {shape}")


Gradients = GaeParams


def init_params(cfg: ModelConfig, rng: np.random.Generator, gain: float = 1.0) -> GaeParams:
    """Uniform init in +-gain*sqrt(6 / (fan_in + fan_out)) for every matrix."""

    def glorot(rows, cols):
        bound = gain * np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-bound, bound, size=(rows, cols))

    return GaeParams(
        U=glorot(cfg.factor_dim, cfg.context_dim),
        V=glorot(cfg.factor_dim, cfg.input_dim),
        W0=glorot(cfg.map_dim_1, cfg.factor_dim),
        W1=glorot(cfg.map_dim_2, cfg.map_dim_1),
    )


@dataclass
class ContextPair:
    context: np.ndarray  # L x P, oldest frame first
    target: np.ndarray  # P


# --- transposition -----------------------------------------------------------

def shift(x: np.ndarray, delta: int) -> np.ndarray:
    """Circular shift along the last axis: ``out[..., i] = x[..., (i + delta) % P]``.

    Applied to a context matrix (L x P) or a batch of them, every frame is
    shifted independently.
    """
    x = np.asarray(x)
    return np.roll(x, -int(delta), axis=-1)


def _shift_flat(X: np.ndarray, delta: int, P: int) -> np.ndarray:
    if delta == 0:
        return X
    B = X.shape[0]
    return shift(X.reshape(B, -1, P), delta).reshape(B, -1)


# --- forward -----------------------------------------------------------------

def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def _check_batch(p: GaeParams, X: np.ndarray, Y: np.ndarray):
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionError(f"bad batch shapes: context {X.shape}, target {Y.shape}")
    if X.shape[1] != p.U.shape[1]:
        raise DimensionError(f"context width {X.shape[1]} does not match U's {p.U.shape[1]}")
    if Y.shape[1] != p.V.shape[1]:
        raise DimensionError(f"target width {Y.shape[1]} does not match V's {p.V.shape[1]}")


def _flatten_contexts(p: GaeParams, contexts) -> np.ndarray:
    C = np.asarray(contexts, dtype=np.float64)
    if C.ndim == 3:
        C = C.reshape(C.shape[0], -1)
    if C.ndim != 2 or C.shape[1] != p.U.shape[1]:
        raise DimensionError(f"contexts of shape {np.shape(contexts)} do not fit U{p.U.shape}")
    return C


def mappings(p: GaeParams, contexts, targets) -> np.ndarray:
    """Batched mapping codes, one row per (context, target) pair."""
    X = _flatten_contexts(p, contexts)
    Y = np.asarray(targets, dtype=np.float64)
    _check_batch(p, X, Y)
    fac = (X @ p.U.T) * (Y @ p.V.T)
    return np.tanh(np.tanh(fac @ p.W0.T) @ p.W1.T)


def infer_mapping(p: GaeParams, pair: ContextPair) -> np.ndarray:
    ctx = np.asarray(pair.context, dtype=np.float64)
    tgt = np.asarray(pair.target, dtype=np.float64)
    if ctx.ndim != 2 or tgt.ndim != 1:
        raise DimensionError("a pair needs an L x P context and a P target")
    return mappings(p, ctx.reshape(1, -1), tgt[None, :])[0]


def _output(a: np.ndarray, kind: str) -> np.ndarray:
    return _sigmoid(a) if kind == BINARY else a


def reconstruct_batch(p: GaeParams, contexts, M: np.ndarray, kind: str = BINARY, delta: int = 0) -> np.ndarray:
    X = _shift_flat(_flatten_contexts(p, contexts), delta, p.input_dim)
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape != (X.shape[0], p.W1.shape[0]):
        raise DimensionError(f"mapping batch of shape {M.shape} does not fit")
    G = (M @ p.W1) @ p.W0
    return _output((G * (X @ p.U.T)) @ p.V, kind)


def reconstruct(p: GaeParams, context: np.ndarray, m: np.ndarray, kind: str = BINARY) -> np.ndarray:
    ctx = np.asarray(context, dtype=np.float64).reshape(1, -1)
    return reconstruct_batch(p, ctx, np.asarray(m, dtype=np.float64)[None, :], kind)[0]


def reconstruct_shifted(p: GaeParams, pair: ContextPair, m: np.ndarray, delta: int, kind: str = BINARY) -> np.ndarray:
    ctx = np.asarray(pair.context, dtype=np.float64).reshape(1, -1)
    return reconstruct_batch(p, ctx, np.asarray(m, dtype=np.float64)[None, :], kind, delta)[0]


# --- losses ------------------------------------------------------------------

def loss(target, recon, kind: str = BINARY) -> float:
    """Cross-entropy summed over units (binary) or mean squared error (real)."""
    t = np.asarray(target, dtype=np.float64)
    r = np.asarray(recon, dtype=np.float64)
    if t.shape != r.shape:
        raise DimensionError(f"target {t.shape} and reconstruction {r.shape} differ")
    if kind == BINARY:
        if np.any((r <= 0) | (r >= 1)):
            raise ValueError("binary reconstructions must lie strictly inside (0, 1)")
        val = -np.sum(t * np.log(r) + (1 - t) * np.log1p(-r))
    else:
        val = np.mean((t - r) ** 2)
    if not np.isfinite(val):
        raise ValueError("non-finite loss")
    return float(val)


def _pair_losses(T: np.ndarray, A: np.ndarray, kind: str) -> np.ndarray:
    # computed from pre-activations so saturated sigmoids stay finite
    if kind == BINARY:
        return np.sum(np.logaddexp(0.0, A) - T * A, axis=1)
    return np.mean((T - A) ** 2, axis=1)


# --- forward/backward for the transposed objective --------------------------

@dataclass
class Cache:
    X: np.ndarray
    Y: np.ndarray
    Xs: np.ndarray
    C: np.ndarray
    Vy: np.ndarray
    fac: np.ndarray
    H1: np.ndarray
    M: np.ndarray
    Q: np.ndarray
    G: np.ndarray
    Cs: np.ndarray
    Z: np.ndarray
    A: np.ndarray
    T: np.ndarray
    R: np.ndarray
    losses: np.ndarray
    kind: str


def forward(p: GaeParams, X: np.ndarray, Y: np.ndarray, delta: int, kind: str) -> Cache:
    """Infer mappings from (X, Y), then reconstruct ``shift(Y, delta)``
    from ``shift(X, delta)`` with those mappings."""
    _check_batch(p, X, Y)
    P = p.input_dim
    C = X @ p.U.T
    Vy = Y @ p.V.T
    fac = C * Vy
    H1 = np.tanh(fac @ p.W0.T)
    M = np.tanh(H1 @ p.W1.T)
    Xs = _shift_flat(X, delta, P)
    Cs = C if delta == 0 else Xs @ p.U.T
    Q = M @ p.W1
    G = Q @ p.W0
    Z = G * Cs
    A = Z @ p.V
    T = shift(Y, delta)
    R = _output(A, kind)
    losses = _pair_losses(T, A, kind)
    return Cache(X, Y, Xs, C, Vy, fac, H1, M, Q, G, Cs, Z, A, T, R, losses, kind)


def backward(p: GaeParams, c: Cache, dM_extra: np.ndarray | None = None) -> GaeParams:
    """Gradient of ``mean(c.losses)`` (+ whatever produced ``dM_extra``).

    Both routes by which each matrix enters are included: U and V through the
    mapping inference and the reconstruction, W0 and W1 through the mapping
    layers and (transposed) through the reconstruction.
    """
    B, P = c.Y.shape
    if c.kind == BINARY:
        dA = (c.R - c.T) / B
    else:
        dA = 2.0 * (c.A - c.T) / (P * B)
    # reconstruction path
    dV = c.Z.T @ dA
    dZ = dA @ p.V.T
    dG = dZ * c.Cs
    dCs = dZ * c.G
    dW0 = c.Q.T @ dG
    dQ = dG @ p.W0.T
    dW1 = c.M.T @ dQ
    dM = dQ @ p.W1.T
    if dM_extra is not None:
        dM = dM + dM_extra
    # mapping path
    dA2 = dM * (1.0 - c.M ** 2)
    dW1 += dA2.T @ c.H1
    dA1 = (dA2 @ p.W1) * (1.0 - c.H1 ** 2)
    dW0 += dA1.T @ c.fac
    dfac = dA1 @ p.W0
    dV += (dfac * c.C).T @ c.Y
    dC = dfac * c.Vy
    if c.Xs is c.X:
        dU = (dC + dCs).T @ c.X
    else:
        dU = dC.T @ c.X + dCs.T @ c.Xs
    return GaeParams(dU, dV, dW0, dW1)


def batch_grads(p: GaeParams, contexts, targets, delta: int, kind: str = BINARY) -> tuple[float, GaeParams]:
    """Mean transposed loss over a batch and its gradient."""
    X = _flatten_contexts(p, contexts)
    Y = np.asarray(targets, dtype=np.float64)
    c = forward(p, X, Y, delta, kind)
    val = float(np.mean(c.losses))
    if not np.isfinite(val):
        raise ValueError("non-finite loss")
    return val, backward(p, c)


def grads(p: GaeParams, pair: ContextPair, delta: int, kind: str = BINARY) -> tuple[float, GaeParams]:
    ctx = np.asarray(pair.context, dtype=np.float64).reshape(1, -1)
    tgt = np.asarray(pair.target, dtype=np.float64)[None, :]
    return batch_grads(p, ctx, tgt, delta, kind)
