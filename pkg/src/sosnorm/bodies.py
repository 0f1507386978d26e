"""Convex bodies presented through generator points of their polar.

A body ``B`` with the origin in its interior is described by finitely many
points ``f`` of the dual space whose convex hull is the polar body ``C``.
For symmetric bodies the antipodes ``-f`` are implied and never stored.
The Minkowski functional is then a maximum of linear forms::

    ||x|| = max_f |f . x|      (symmetric)
    ||x|| = max_f  f . x       (nonsymmetric)
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "SYMMETRIC",
    "NONSYMMETRIC",
    "SAMPLED",
    "KINDS",
    "BodySpec",
    "make_l1",
    "make_linf",
    "make_lp_sampled",
    "make_random_polytope",
    "from_polar_vertices",
    "origin_interior_margin",
    "exact_norm",
]

SYMMETRIC = "symmetric-polytope"
NONSYMMETRIC = "nonsymmetric-polytope"
SAMPLED = "sampled-smooth"
KINDS = (SYMMETRIC, NONSYMMETRIC, SAMPLED)

GENERATOR_CAP = 2**20
RANK_TOL = 1e-10
INTERIOR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BodySpec:
    """Immutable generator presentation of a convex body.

    ``sampling`` is only set for the sampled-smooth kind and records how the
    generators were drawn (source norm, exponent, sample count, seed).
    """

    d: int
    kind: str
    generators: np.ndarray
    label: str = ""
    sampling: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown body kind {self.kind!r}; expected one of {KINDS}")
        G = np.array(self.generators, dtype=float)
        if G.ndim == 1 and self.d == 1:
            G = G.reshape(-1, 1)
        if G.ndim != 2 or G.shape[0] == 0:
            raise ValueError("generators must be a non-empty list of points")
        if G.shape[1] != self.d:
            raise ValueError(f"generators have dimension {G.shape[1]}, expected d={self.d}")
        if not np.all(np.isfinite(G)):
            raise ValueError("generators must have finite entries")
        zero = np.flatnonzero(~G.any(axis=1))
        if len(zero):
            raise ValueError(f"generator {zero[0]} is the zero vector")
        if self.symmetric:
            if np.linalg.matrix_rank(G, tol=RANK_TOL * np.abs(G).max()) < self.d:
                raise ValueError(f"generators do not span R^{self.d}")
        else:
            margin = origin_interior_margin(G)
            if margin <= INTERIOR_TOL:
                raise ValueError("origin is not interior to the convex hull of the generators")
        G.setflags(write=False)
        object.__setattr__(self, "generators", G)

    @property
    def symmetric(self) -> bool:
        return self.kind != NONSYMMETRIC

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "kind": self.kind,
            "generators": self.generators.tolist(),
            "label": self.label,
        }
        if self.sampling is not None:
            out["sampling"] = dict(self.sampling)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BodySpec":
        try:
            return cls(
                d=int(data["d"]),
                kind=data["kind"],
                generators=data["generators"],
                label=data.get("label", ""),
                sampling=data.get("sampling"),
            )
        except KeyError as exc:
            raise ValueError(f"body description is missing field {exc.args[0]!r}") from None

    def fingerprint(self) -> str:
        """sha256 over kind, d and the exact generator bits."""
        h = hashlib.sha256()
        h.update(json.dumps([self.kind, self.d]).encode())
        h.update(np.ascontiguousarray(self.generators, dtype="<f8").tobytes())
        return h.hexdigest()


def origin_interior_margin(points) -> float:
    """Largest ``t`` such that ``0 = sum(l_i p_i)`` with ``l_i >= t``, ``sum(l) = 1``.

    Returns 0 when the points do not span the space (the hull then has
    empty interior) or when no strictly positive combination exists.
    """
    P = np.asarray(points, dtype=float)
    k, d = P.shape
    if np.linalg.matrix_rank(P, tol=RANK_TOL * np.abs(P).max()) < d:
        return 0.0
    # variables: l_1..l_k, t ; maximize t
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_eq = np.zeros((d + 1, k + 1))
    A_eq[:d, :k] = P.T
    A_eq[d, :k] = 1.0
    b_eq = np.zeros(d + 1)
    b_eq[d] = 1.0
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    b_ub = np.zeros(k)
    bounds = [(0, None)] * k + [(None, 1.0 / k)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return 0.0
    lam = res.x[:k]
    scale = max(1.0, np.abs(P).max())
    if np.abs(P.T @ lam).max() > INTERIOR_TOL * scale:
        return 0.0
    return float(res.x[-1])


def from_polar_vertices(points, symmetric: bool, label: str = "") -> BodySpec:
    """Validate points of the polar body and wrap them in a :class:`BodySpec`."""
    P = np.array(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    if P.ndim != 2 or P.size == 0:
        raise ValueError("points must be a non-empty list of vectors")
    kind = SYMMETRIC if symmetric else NONSYMMETRIC
    return BodySpec(P.shape[1], kind, P, label=label or f"polytope-{kind}")


def make_l1(d: int, cap: int = GENERATOR_CAP) -> BodySpec:
    """l1 norm: the polar is the cube, one generator per antipodal sign pair."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if 2 ** (d - 1) > cap:
        raise ValueError(f"l1 in d={d} needs 2^{d - 1} generators, cap is {cap}")
    G = np.array([(1,) + signs for signs in itertools.product((1, -1), repeat=d - 1)], dtype=float)
    return BodySpec(d, SYMMETRIC, G, label=f"l1-{d}")


def make_linf(d: int) -> BodySpec:
    """l-infinity norm: the polar is the cross-polytope."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return BodySpec(d, SYMMETRIC, np.eye(d), label=f"linf-{d}")


def _dual_points(U, p):
    """Image of directions ``U`` under the gradient of the lp norm.

    Each image lies on the lq unit sphere and is the maximizer of ``f . u``
    over the lq ball, so the sampled polytope norm is exact along ``U``.
    """
    q = p / (p - 1.0)
    F = np.sign(U) * np.abs(U) ** (p - 1.0)
    return F / (np.abs(F) ** q).sum(axis=1, keepdims=True) ** (1.0 / q)


def _stratified_directions(d, count, rng):
    if d == 1:
        return np.ones((count, 1))
    if d == 2:
        # strata of the half circle; antipodes are implied
        theta = np.pi * (np.arange(count) + rng.random(count)) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if d == 3:
        # jittered Fibonacci lattice on the upper hemisphere
        z = 1.0 - (np.arange(count) + rng.random(count)) / count
        phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(count) + 2.0 * np.pi * rng.random()
        rho = np.sqrt(1.0 - z**2)
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    U = np.abs(rng.standard_normal((count, d)))
    # cycle samples through the orthants (up to antipodes)
    bits = (np.arange(count)[:, None] >> np.arange(d - 1)[None, :]) & 1
    U[:, 1:] *= 1 - 2 * bits
    return U


def make_lp_sampled(d: int, p: float, m: int, seed: int = 0, max_tries: int = 8) -> BodySpec:
    """Polytope inner approximation of the lp norm's polar (the lq ball).

    The generators are the basis vectors plus ``m - d`` points of the lq
    unit sphere obtained from stratified random directions, so the result
    always has rank ``d``.  The resulting norm under-estimates the lp norm
    everywhere and matches it exactly along the sampled directions.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    if m < d:
        raise ValueError(f"need at least d={d} samples, got m={m}")
    rng = np.random.default_rng(seed)
    extra = m - d
    for _ in range(max_tries):
        G = np.eye(d)
        if extra:
            G = np.vstack([G, _dual_points(_stratified_directions(d, extra, rng), p)])
        if np.linalg.matrix_rank(G) == d and np.all(G.any(axis=1)):
            sampling = {"norm": "lp", "p": float(p), "m": int(m), "seed": int(seed)}
            return BodySpec(d, SAMPLED, G, label=f"l{p:g}-sampled-{d}", sampling=sampling)
    raise ValueError(f"sampling failed to produce a rank-{d} generator set")


def make_random_polytope(d: int, k: int, symmetric: bool, seed: int = 0, max_tries: int = 100) -> BodySpec:
    """Random polytope body with ``k`` generators (pairs when symmetric).

    Nonsymmetric draws are rejected until the origin is interior to the
    hull of the generators.
    """
    rng = np.random.default_rng(seed)
    if k < (d if symmetric else d + 1):
        raise ValueError(f"k={k} generators cannot give a full-dimensional body in d={d}")
    for _ in range(max_tries):
        U = rng.standard_normal((k, d))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        G = U * rng.uniform(0.5, 2.0, size=(k, 1))
        try:
            return from_polar_vertices(G, symmetric, label=f"random-{'sym' if symmetric else 'nonsym'}-{d}-{k}")
        except ValueError:
            continue
    raise ValueError("could not draw a valid random polytope")


def exact_norm(spec: BodySpec, x):
    """Exact Minkowski functional of the generator polytope.

    ``x`` may be a single point (returns a float) or an ``(m, d)`` array
    (returns an array of length ``m``).
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    if X2.ndim != 2 or X2.shape[1] != spec.d:
        raise ValueError(f"x has shape {X.shape}, expected trailing dimension {spec.d}")
    vals = X2 @ spec.generators.T
    if spec.symmetric:
        vals = np.abs(vals)
    out = vals.max(axis=1)
    return float(out[0]) if single else out
