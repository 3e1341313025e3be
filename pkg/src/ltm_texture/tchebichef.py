"""Orthonormal discrete Tchebichef polynomials and the N x N moment masks built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import ValidationError, check_kernel_size

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class TchebichefBasis:
    """Table ``t[n, x]`` of orthonormal Tchebichef polynomials on ``x = 0..N-1``."""

    N: int
    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.t.setflags(write=False)


@dataclass(frozen=True)
class MomentKernel:
    """Separable mask ``w[y, x] = t[m, x] * t[n, y]``.

    ``m`` is the order along columns (x) and ``n`` along rows (y).
    """

    m: int
    n: int
    N: int
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.w.setflags(write=False)

    @property
    def name(self) -> str:
        return format_order((self.m, self.n), self.N)

    @property
    def degree(self) -> int:
        return self.m + self.n


def format_order(order, size: int = 5) -> str:
    m, n = order
    if size <= 10:
        return f"M{m}{n}"
    return f"M{m:02d}{n:02d}"


def build_basis(N: int) -> TchebichefBasis:
    """Evaluate ``t_0 .. t_{N-1}`` on the integer grid with the three-term recurrence.

    The third coefficient carries the factor ``(1 - n) / n``; with the
    opposite sign the table stops being orthonormal from ``n = 2`` onward.
    """
    N = check_kernel_size(N)
    x = np.arange(N, dtype=np.float64)
    t = np.empty((N, N), dtype=np.float64)
    t[0] = 1.0 / math.sqrt(N)
    t[1] = (2.0 * x + 1.0 - N) * math.sqrt(3.0 / (N * (N * N - 1.0)))
    for n in range(2, N):
        root = math.sqrt((4.0 * n * n - 1.0) / (N * N - n * n))
        a1 = (2.0 / n) * root
        a2 = ((1.0 - N) / n) * root
        a3 = (
            ((1.0 - n) / n)
            * math.sqrt((2.0 * n + 1.0) / (2.0 * n - 3.0))
            * math.sqrt((N * N - (n - 1.0) ** 2) / (N * N - n * n))
        )
        t[n] = a1 * x * t[n - 1] + a2 * t[n - 1] + a3 * t[n - 2]

    gram = t @ t.T
    err = np.abs(gram - np.eye(N)).max()
    if err > ORTHONORMALITY_TOL:
        raise ArithmeticError(f"Tchebichef basis for N={N} lost orthonormality (max error {err:.3g})")
    return TchebichefBasis(N=N, t=t)


def build_kernel(basis: TchebichefBasis, m: int, n: int) -> MomentKernel:
    N = basis.N
    for label, order in (("m", m), ("n", n)):
        if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
            raise ValidationError(f"order {label} must be an integer, got {order!r}")
        if not 0 <= order < N:
            raise ValidationError(f"order {label}={order} out of range for kernel size {N}")
    w = np.outer(basis.t[n], basis.t[m])
    return MomentKernel(m=int(m), n=int(n), N=N, w=w)


def order_pairs(N: int) -> list[tuple[int, int]]:
    """All ``(m, n)`` pairs, grouped by degree ``m + n`` and then lexicographic."""
    return sorted(((m, n) for m in range(N) for n in range(N)), key=lambda p: (p[0] + p[1], p))


def all_kernels(N: int) -> list[MomentKernel]:
    basis = build_basis(N)
    return [build_kernel(basis, m, n) for m, n in order_pairs(basis.N)]


def format_sig(value: float, digits: int = 3) -> str:
    """Render ``value`` rounded to ``digits`` significant digits."""
    if value == 0 or abs(value) < 1e-12:
        return "0"
    return f"{value:.{digits}g}"
