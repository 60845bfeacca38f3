"""Fractional powers of symmetric positive-(semi)definite matrices.

Two independent routes are provided: a spectral one (eigendecomposition,
the reference) and a Denman-Beavers iteration for the square root.  They
are deliberately kept separate so each can check the other.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, InvalidArgument, InvalidMatrix
from .fem import check_spd

METHODS = ("eigen", "iterative_sqrt", "schur")
EIGEN_FLOOR = 1e-14


@dataclass(frozen=True)
class MatrixPowerResult:
    value: np.ndarray
    method: str
    residual: float
    eigenvalue_floor_applied: bool = False


def _fro_rel(A: np.ndarray, B: np.ndarray) -> float:
    nb = np.linalg.norm(B)
    return float(np.linalg.norm(A - B) / nb) if nb > 0 else float(np.linalg.norm(A - B))


def _integral_multiple(p: float, max_m: int = 16) -> int | None:
    for m in range(1, max_m + 1):
        if abs(m * p - round(m * p)) < 1e-12:
            return m
    return None


def spectral_power(K: np.ndarray, p: float) -> tuple[np.ndarray, bool]:
    """Eigen-route K^p with the eigenvalue floor; no validation, no residual."""
    lam, V = np.linalg.eigh(K)
    floor = EIGEN_FLOOR * lam[-1]
    applied = bool(np.any(lam < floor))
    lam = np.maximum(lam, floor)
    value = (V * lam**p) @ V.T
    return 0.5 * (value + value.T), applied


def power_residual(value: np.ndarray, K: np.ndarray, p: float) -> float:
    """Round-trip error of a computed K^p.

    When some m <= 16 makes m*p an integer, compare value^m with K^(m*p)
    using only matrix products.  Otherwise compare against scipy's
    Schur-Pade fractional power.
    """
    m = _integral_multiple(p)
    if m is not None:
        lhs = np.linalg.matrix_power(value, m)
        rhs = np.linalg.matrix_power(K, int(round(m * p)))
        return _fro_rel(lhs, rhs)
    ref = np.real(scipy.linalg.fractional_matrix_power(K, p))
    return _fro_rel(value, ref)


def fractional_power(K, p: float, method: str = "eigen") -> MatrixPowerResult:
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}; expected one of {METHODS}")
    if not (0.0 <= p <= 1.0):
        raise InvalidArgument(f"exponent p must lie in [0, 1], got {p}")
    K = check_spd(K, name="K")
    if method == "iterative_sqrt":
        if p != 0.5:
            raise InvalidArgument("iterative route only computes the square root (p = 0.5)")
        return sqrt_iterative(K)
    if method == "schur":
        # symmetric input: Schur form coincides with the eigendecomposition
        raise InvalidArgument("schur method is reserved; use method='eigen'")
    value, applied = spectral_power(K, p)
    return MatrixPowerResult(value, "eigen", power_residual(value, K, p), applied)


def sqrt_iterative(K, tol: float = 1e-12, max_iters: int = 100) -> MatrixPowerResult:
    """Denman-Beavers coupled iteration for the principal square root.

    Y_{k+1} = (Y_k + Z_k^-1) / 2,  Z_{k+1} = (Z_k + Y_k^-1) / 2,
    starting from Y_0 = K, Z_0 = I; Y converges to K^(1/2).
    """
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    K = check_spd(K, name="K")
    lam = np.linalg.eigvalsh(K)
    if lam[0] <= 1e-12 * lam[-1]:
        raise InvalidMatrix(
            f"K is singular to working precision (lambda_min/lambda_max = {lam[0] / lam[-1]:.2e})"
        )
    n = K.shape[0]
    Y = K.copy()
    Z = np.eye(n)
    change = np.inf
    for _ in range(max_iters):
        Y_next = 0.5 * (Y + np.linalg.inv(Z))
        Z = 0.5 * (Z + np.linalg.inv(Y))
        change = np.linalg.norm(Y_next - Y) / np.linalg.norm(Y)
        Y = Y_next
        if change < tol:
            break
    Y = 0.5 * (Y + Y.T)
    residual = _fro_rel(Y @ Y, K)
    if not change < tol:
        raise ConvergenceFailure(
            f"Denman-Beavers did not converge in {max_iters} iterations (last change {change:.2e})",
            residual=residual,
            last=Y,
        )
    return MatrixPowerResult(Y, "iterative_sqrt", residual, False)


def seeded_spd(n: int, cond: float = 1e3, seed: int = 0) -> np.ndarray:
    """Random SPD matrix with eigenvalues log-spaced over [1/cond, 1]."""
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    lam = np.geomspace(1.0, 1.0 / cond, n)
    A = (Q * lam) @ Q.T
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class BenchmarkRow:
    n: int
    method: str
    p: float
    median_seconds: float
    residual: float


BENCH_HEADER = "n,method,p,median_seconds,residual"


def benchmark_power_methods(sizes, p: float = 0.5, repetitions: int = 3, seed: int = 0,
                            cond: float = 1e3) -> list[BenchmarkRow]:
    if repetitions < 1:
        raise InvalidArgument("repetitions must be >= 1")
    sizes = list(sizes)
    if any(int(s) != s or s < 2 for s in sizes):
        raise InvalidArgument(f"sizes must be integers >= 2, got {sizes}")
    methods = ["eigen"] + (["iterative_sqrt"] if p == 0.5 else [])
    rows = []
    for n in sizes:
        K = seeded_spd(int(n), cond=cond, seed=seed + int(n))
        for method in methods:
            times = []
            for _ in range(repetitions):
                t0 = time.perf_counter()
                res = fractional_power(K, p, method)
                times.append(time.perf_counter() - t0)
            rows.append(BenchmarkRow(int(n), method, p, statistics.median(times), res.residual))
    return rows
