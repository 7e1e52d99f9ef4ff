"""Laplacian smoothing of CO2 series.

The smoothed series minimises ``||c - cs||^2 + lam * ||grad cs||^2`` where
``grad`` is the forward first-difference operator, i.e. it solves the
tridiagonal system ``(I + lam * L) cs = c`` with ``L = grad^T grad``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularSystemError(ArithmeticError):
    """Zero pivot met during tridiagonal elimination."""


@dataclass(frozen=True)
class SmoothConfig:
    lam: float = 50.0

    def __post_init__(self):
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ValueError(f"smoothing weight must be finite and >= 0, got {self.lam}")


@dataclass(frozen=True)
class TridiagonalSystem:
    """Row ``i`` reads ``sub[i-1]*x[i-1] + diag[i]*x[i] + sup[i]*x[i+1] = rhs[i]``."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if n < 1 or len(self.rhs) != n or len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError("inconsistent tridiagonal system dimensions")

    def dense(self) -> np.ndarray:
        a = np.diag(np.asarray(self.diag, dtype=float))
        if len(self.diag) > 1:
            a += np.diag(np.asarray(self.sub, dtype=float), -1)
            a += np.diag(np.asarray(self.sup, dtype=float), 1)
        return a


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    """Thomas algorithm: forward elimination then back substitution, O(N)."""
    # Python floats: per-element numpy indexing is several times slower.
    sub = [float(v) for v in sys.sub]
    diag = [float(v) for v in sys.diag]
    sup = [float(v) for v in sys.sup]
    rhs = [float(v) for v in sys.rhs]
    n = len(diag)

    cp = [0.0] * n
    dp = [0.0] * n
    piv = diag[0]
    if piv == 0.0:
        raise SingularSystemError("zero pivot at row 0")
    cp[0] = sup[0] / piv if n > 1 else 0.0
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        a = sub[i - 1]
        piv = diag[i] - a * cp[i - 1]
        if piv == 0.0:
            raise SingularSystemError(f"zero pivot at row {i}")
        if i < n - 1:
            cp[i] = sup[i] / piv
        dp[i] = (rhs[i] - a * dp[i - 1]) / piv

    x = [0.0] * n
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)


def build_smoothing_system(c, lam: float) -> TridiagonalSystem:
    """Assemble ``I + lam * grad^T grad`` with right-hand side ``c``."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if n < 2:
        raise ValueError(f"smoothing system needs N >= 2 samples, got {n}")
    if lam < 0:
        raise ValueError("smoothing weight must be >= 0")
    diag = np.full(n, 1.0 + 2.0 * lam)
    diag[0] = diag[-1] = 1.0 + lam
    off = np.full(n - 1, -float(lam))
    return TridiagonalSystem(sub=off, diag=diag, sup=off.copy(), rhs=c.copy())


def smooth_global(c, config: SmoothConfig) -> np.ndarray:
    """Smooth a whole series at once."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 1:
        raise ValueError("expected a 1-D series")
    if c.shape[0] < 2 or config.lam == 0:
        return c.copy()
    return solve_tridiagonal(build_smoothing_system(c, config.lam))


def smooth_local(c_prefix, config: SmoothConfig) -> np.ndarray:
    """Causal smoothing: the same solve restricted to the samples seen so far."""
    c_prefix = np.asarray(c_prefix, dtype=float)
    if c_prefix.shape[0] < 2:
        raise ValueError("local smoothing needs a prefix of at least 2 samples")
    return smooth_global(c_prefix, config)


def smooth_all_prefixes(c, config: SmoothConfig, first: int = 1) -> np.ndarray:
    """Row ``k`` holds ``smooth_local(c[:k+1])`` padded with NaN; rows < ``first`` are NaN.

    Each prefix is solved independently, so row ``k`` never sees ``c[k+1:]``.
    """
    c = np.asarray(c, dtype=float)
    m = c.shape[0]
    out = np.full((m, m), np.nan)
    for k in range(max(first, 0), m):
        out[k, : k + 1] = c[:1] if k == 0 else smooth_local(c[: k + 1], config)
    return out
