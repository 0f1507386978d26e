"""Symmetric tensor powers in monomial coordinates.

A point ``x`` of R^d is lifted to its n-th symmetric tensor power, stored
in the ``N = binom(n+d-1, n)`` coordinates indexed by multi-indices of
total degree ``n``.  Coordinate ``alpha`` carries the weight
``sqrt(multinomial(n; alpha))`` so that the Euclidean inner product of two
lifts equals the full tensor pairing::

    <veronese(f, n), veronese(x, n)> == (f . x) ** n

Multi-indices are plain tuples of ints, enumerated in graded
lexicographic order (degree fixed, exponent tuples descending).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionOverflowError

__all__ = [
    "INT64_MAX",
    "SymVector",
    "sym_dim",
    "multi_indices",
    "exponent_matrix",
    "multinomial",
    "veronese_weights",
    "veronese",
    "lift",
    "pairing",
    "index_of",
]

INT64_MAX = 2**63 - 1


def _check_positive(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")


def sym_dim(d: int, n: int) -> int:
    """Number of degree-``n`` monomials in ``d`` variables, binom(n+d-1, n).

    Raises
    ------
    DimensionOverflowError
        If the count does not fit in a signed 64-bit integer.
    """
    _check_positive("d", d)
    _check_positive("n", n)
    value = math.comb(int(n) + int(d) - 1, int(n))
    if value > INT64_MAX:
        raise DimensionOverflowError(f"binom({n + d - 1}, {n}) overflows int64")
    return value


@lru_cache(maxsize=64)
def _multi_indices(d, n):
    def rec(k, remaining):
        if k == 1:
            return [(remaining,)]
        out = []
        for first in range(remaining, -1, -1):
            out.extend((first,) + tail for tail in rec(k - 1, remaining - first))
        return out

    return tuple(rec(d, n))


def multi_indices(d: int, n: int) -> list[tuple[int, ...]]:
    """All exponent tuples of length ``d`` summing to ``n``, in grlex order.

    >>> multi_indices(2, 3)
    [(3, 0), (2, 1), (1, 2), (0, 3)]
    """
    sym_dim(d, n)
    return list(_multi_indices(int(d), int(n)))


@lru_cache(maxsize=64)
def _exponent_matrix(d, n):
    mat = np.array(_multi_indices(d, n), dtype=np.int64).reshape(-1, d)
    mat.setflags(write=False)
    return mat


def exponent_matrix(d: int, n: int) -> np.ndarray:
    """Read-only ``(N, d)`` integer array of :func:`multi_indices`."""
    sym_dim(d, n)
    return _exponent_matrix(int(d), int(n))


@lru_cache(maxsize=64)
def _index_map(d, n):
    return {alpha: i for i, alpha in enumerate(_multi_indices(d, n))}


def index_of(alpha) -> int:
    """Position of a multi-index in the grlex enumeration of its degree."""
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in {alpha}")
    return _index_map(len(alpha), sum(alpha))[alpha]


def multinomial(alpha) -> int:
    """Exact multinomial coefficient ``|alpha|! / prod(alpha_i!)``."""
    total = 0
    out = 1
    for a in alpha:
        a = int(a)
        if a < 0:
            raise ValueError(f"negative exponent in {tuple(alpha)}")
        total += a
        out *= math.comb(total, a)
    return out


@lru_cache(maxsize=64)
def _weights(d, n):
    coeffs = [multinomial(alpha) for alpha in _multi_indices(d, n)]
    if max(coeffs) > INT64_MAX:
        raise DimensionOverflowError(f"multinomial coefficients of degree {n} overflow int64")
    w = np.sqrt(np.array([float(c) for c in coeffs]))
    w.setflags(write=False)
    return w


def veronese_weights(d: int, n: int) -> np.ndarray:
    """``sqrt(multinomial(n; alpha))`` for every alpha, in grlex order."""
    sym_dim(d, n)
    return _weights(int(d), int(n))


@dataclass(frozen=True)
class SymVector:
    """A vector of the symmetric power space, tagged with its (d, n)."""

    d: int
    n: int
    coords: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.shape != (sym_dim(self.d, self.n),):
            raise ValueError(
                f"coords has shape {coords.shape}, expected ({sym_dim(self.d, self.n)},)"
            )
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def zeros(cls, d, n):
        return cls(d, n, np.zeros(sym_dim(d, n)))

    def __len__(self):
        return len(self.coords)


def lift(points, n: int) -> np.ndarray:
    """Weighted Veronese map applied row-wise.

    Parameters
    ----------
    points : (m, d) array_like
    n : int
        Degree of the tensor power.

    Returns
    -------
    (m, N) ndarray with ``N = sym_dim(d, n)``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"points must be 2-D, got shape {X.shape}")
    m, d = X.shape
    E = exponent_matrix(d, n)
    # powers[k] = X**k, so each column is a gather instead of a pow
    powers = np.empty((n + 1, m, d))
    powers[0] = 1.0
    for k in range(1, n + 1):
        powers[k] = powers[k - 1] * X
    out = np.broadcast_to(veronese_weights(d, n), (m, len(E))).copy()
    for j in range(d):
        out *= powers[E[:, j], :, j].T
    return out


def veronese(x, n: int) -> SymVector:
    """Lift a single point ``x`` to its n-th symmetric tensor power."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"x must be 1-D, got shape {x.shape}")
    return SymVector(len(x), n, lift(x[None, :], n)[0])


def pairing(u: SymVector, v: SymVector) -> float:
    """Inner product of two symmetric-power vectors of matching (d, n)."""
    if (u.d, u.n) != (v.d, v.n):
        raise ValueError(f"shape mismatch: (d, n) = {(u.d, u.n)} vs {(v.d, v.n)}")
    return float(np.dot(u.coords, v.coords))
