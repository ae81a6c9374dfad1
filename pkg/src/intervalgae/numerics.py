"""Small dense linear-algebra helpers, seeded RNGs and a finite-difference
gradient used as the oracle for every hand-written backward pass.

Matrices are plain ``numpy.ndarray`` objects (float64 unless a caller asks
otherwise); the helpers below add the dimension checks the rest of the
package relies on.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class DimensionError(ValueError):
    pass


def as_matrix(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows:
        raise DimensionError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionError(f"expected {cols} cols, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite values")
    return m


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1:
        raise DimensionError(f"matvec needs a matrix and a vector, got {m.shape} and {v.shape}")
    if m.shape[1] != v.shape[0]:
        raise DimensionError(
            f"matvec dimension mismatch: matrix is {m.shape[0]}x{m.shape[1]}, vector has length {v.shape[0]}"
        )
    return m @ v


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the same seed always yields the same stream."""
    return np.random.Generator(np.random.PCG64(seed))


def finite_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    ``x`` may have any shape; the result has the same shape. ``x`` itself is
    perturbed in place and restored, so callers can pass views into parameter
    arrays (``f`` then sees the perturbation through the view).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x)
    if x.dtype != np.float64:
        raise TypeError("finite_diff_grad needs a float64 array")
    if not x.flags.c_contiguous:
        raise ValueError("finite_diff_grad needs a C-contiguous array")
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value while perturbing component {i}")
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """Norm-wise relative error ||a - b|| / max(||a||, ||b||), 0 when both vanish."""
    num = float(np.linalg.norm(np.ravel(a) - np.ravel(b)))
    den = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    if den == 0.0:
        return 0.0
    return num / den
