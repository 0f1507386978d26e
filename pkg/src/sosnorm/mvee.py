"""Minimum-volume enclosing ellipsoids of finite point sets.

Both variants run a weight-ascent (Khachiyan) iteration with Wolfe-Atwood
away steps on the carrier subspace of the points:

* :func:`mvee_symmetric` encloses ``{+p_i, -p_i}`` with an ellipsoid
  centered at the origin;
* :func:`mvee_general` lets the center move, via the usual lift
  ``p -> (p, 1)`` to one dimension higher.

Given weights ``u`` on the points, ``M = sum u_i p_i p_i^T`` and
``kappa_i = p_i^T M^{-1} p_i``.  The enclosing ellipsoid has shape
``rank * M`` and the iteration stops once ``max kappa_i <= rank (1 + eps)``,
i.e. every point is inside at level ``1 + eps``.  When the ascent stalls
(many points close to the optimal boundary, as with densely sampled smooth
bodies) a barrier Newton method on the same weights finishes the job.

:func:`inscribed_from_enclosing` shrinks the result by ``sqrt(rank)``
(symmetric) or ``rank`` (general) so that it sits inside the convex hull.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError

__all__ = [
    "Ellipsoid",
    "carrier",
    "mvee_symmetric",
    "mvee_general",
    "inscribed_from_enclosing",
]

DEFAULT_EPS = 1e-7
MAX_UPDATES = 10**6
RANK_TOL = 1e-10
_REFRESH = 256
# ascent updates allowed per point and dimension before polishing
_ASCENT_BUDGET = 20
_POLISH_MAX = 2000
_CENTERING_STEPS = 100


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{center + basis @ u : u^T shape^{-1} u <= 1}``.

    ``basis`` is ``(N, r)`` with orthonormal columns spanning the carrier
    subspace; ``shape`` is the ``(r, r)`` positive-definite matrix in those
    coordinates.
    """

    center: np.ndarray
    basis: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        for name in ("center", "basis", "shape"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        N, r = self.basis.shape
        if self.center.shape != (N,) or self.shape.shape != (r, r):
            raise ValueError("inconsistent ellipsoid dimensions")

    @property
    def dim_ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def support(self, y):
        """Support function ``h(y) = center.y + sqrt((B^T y)^T Q (B^T y))``.

        Accepts one direction or an ``(k, N)`` array of directions.
        """
        Y = np.asarray(y, dtype=float)
        t = Y @ self.basis
        quad = np.einsum("...i,ij,...j->...", t, self.shape, t)
        return Y @ self.center + np.sqrt(np.maximum(quad, 0.0))

    def membership(self, points):
        """Quadratic form ``(B^T (p - c))^T Q^{-1} (B^T (p - c))`` per point."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if self.rank == 0:
            return np.zeros(len(P))
        t = (P - self.center) @ self.basis
        sol = sla.cho_solve(sla.cho_factor(self.shape), t.T)
        return np.einsum("ij,ji->i", t, sol)

    def off_carrier(self, points):
        """Distance of each point from the affine carrier."""
        P = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        return np.linalg.norm(P - (P @ self.basis) @ self.basis.T, axis=1)

    def log_volume(self) -> float:
        """Log of the r-dimensional volume within the carrier."""
        r = self.rank
        if r == 0:
            return 0.0
        logdet = 2.0 * np.log(np.diag(np.linalg.cholesky(self.shape))).sum()
        return 0.5 * logdet + 0.5 * r * math.log(math.pi) - math.lgamma(r / 2 + 1)


def carrier(points, centered: bool):
    """Orthonormal basis of the span (or affine hull) of ``points``.

    Returns ``(origin, basis)`` where ``origin`` is the zero vector when
    ``centered`` is true and the mean of the points otherwise.  Directions
    whose squared singular value falls below ``RANK_TOL`` times the largest
    are treated as flat.
    """
    P = np.asarray(points, dtype=float)
    origin = np.zeros(P.shape[1]) if centered else P.mean(axis=0)
    R = P - origin
    if not R.any():
        return origin, np.zeros((P.shape[1], 0))
    _, s, Vt = np.linalg.svd(R, full_matrices=False)
    r = int(np.count_nonzero(s**2 > RANK_TOL * s[0] ** 2))
    return origin, Vt[:r].T.copy()


def _refresh(X, u):
    M = (X * u[:, None]).T @ X
    Minv = sla.cho_solve(sla.cho_factor(M), np.eye(X.shape[1]))
    Minv = 0.5 * (Minv + Minv.T)
    return Minv, np.einsum("ij,jk,ik->i", X, Minv, X)


def _weight_ascent(X, threshold, eps, max_updates):
    """Maximize log det(sum u_i x_i x_i^T) over the simplex.

    Stops when ``max kappa <= threshold`` and the log-determinant gain of
    the latest update is at most ``eps / 10``.  Returns
    ``(u, updates_used, converged)``.
    """
    m, k = X.shape
    u = np.full(m, 1.0 / m)
    Minv, kappa = _refresh(X, u)
    gain = 0.0
    for it in range(max_updates + 1):
        if it % _REFRESH == 0 and it:
            Minv, kappa = _refresh(X, u)
        j_up = int(np.argmax(kappa))
        if kappa[j_up] <= threshold and gain <= eps / 10:
            # confirm on freshly factored values before accepting
            Minv, kappa = _refresh(X, u)
            if kappa.max() <= threshold:
                return u, it, True
            j_up = int(np.argmax(kappa))
        if it == max_updates:
            break
        active = np.flatnonzero(u > 0)
        j_dn = int(active[np.argmin(kappa[active])])
        if kappa[j_up] - k >= k - kappa[j_dn]:
            j = j_up
        else:
            j = j_dn
        kj = kappa[j]
        drop = False
        if j == j_up:
            tau = (kj - k) / (k * (kj - 1.0)) if kj > k else 0.0
        else:
            # away step; kappa <= 1 means the point can be dropped outright
            floor = -u[j] / (1.0 - u[j])
            tau = (kj - k) / (k * (kj - 1.0)) if kj > 1.0 else floor
            if tau <= floor:
                tau, drop = floor, True
        if tau == 0.0:
            gain = 0.0
            continue
        g = Minv @ X[j]
        scale = (1.0 - tau) + tau * kj
        Minv = (Minv - (tau / scale) * np.outer(g, g)) / (1.0 - tau)
        kappa = (kappa - (tau / scale) * (X @ g) ** 2) / (1.0 - tau)
        u *= 1.0 - tau
        u[j] += tau
        if drop:
            u[j] = 0.0
        u /= u.sum()
        gain = abs((k - 1) * math.log1p(-tau) + math.log(scale))
    return u, max_updates, False


def _barrier_objective(X, u, mu):
    M = (X * u[:, None]).T @ X
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return -np.inf
    return 2.0 * np.log(np.diag(L)).sum() + mu * np.log(u).sum()


def _barrier_solve(X, u, slack, budget):
    """Path-following Newton on ``log det M(u) + mu sum log u`` over the simplex.

    At the barrier optimum ``kappa_i <= k + mu n``; ``mu`` is driven down
    until that gap is ``slack / 2``.  Steps are taken in the scaled
    variable ``du / u``, which keeps the Newton system well conditioned as
    weights of interior points go to zero.  Returns ``(u, steps_used)``.
    """
    n, k = X.shape
    u = 0.99 * u + 0.01 / n
    u /= u.sum()
    _, kappa = _refresh(X, u)
    mu_final = slack / (2.0 * n)
    mu = max(float(kappa.max()) - k, slack) / n
    steps = 0
    while True:
        prev = np.inf
        for _ in range(_CENTERING_STEPS):
            M = (X * u[:, None]).T @ X
            Y = sla.solve_triangular(np.linalg.cholesky(M), X.T, lower=True)
            K = Y.T @ Y
            if np.diag(K).max() <= k + 0.5 * slack or steps >= budget:
                return u, steps
            steps += 1
            su = np.sqrt(u)
            W = K * su[:, None] * su[None, :]
            P = W * W + mu * np.eye(n)
            g = u * np.diag(K) + mu
            try:
                fac = sla.cho_factor(P)
                a, b = sla.cho_solve(fac, g), sla.cho_solve(fac, u)
            except np.linalg.LinAlgError:
                a, b = np.linalg.lstsq(P, g, rcond=None)[0], np.linalg.lstsq(P, u, rcond=None)[0]
            step = a - (u @ a) / (u @ b) * b
            dec = float(step @ P @ step)
            # decrement of the barrier scaled by 1/mu (self-concordant);
            # a decrement that stops shrinking has hit roundoff
            if dec <= 1e-9 * mu or (dec < 1e-12 and dec > 0.5 * prev):
                break
            prev = dec
            neg = step < 0
            alpha = min(1.0, 0.99 / float((-step[neg]).max())) if neg.any() else 1.0
            f0 = _barrier_objective(X, u, mu)
            slope = float(g @ step)
            while alpha > 1e-12:
                trial = u * (1.0 + alpha * step)
                trial /= trial.sum()
                if _barrier_objective(X, trial, mu) >= f0 + 0.25 * alpha * slope:
                    break
                alpha *= 0.5
            else:
                break
            u = trial
        if mu <= mu_final:
            return u, steps
        mu = max(0.1 * mu, mu_final)


def _solve_weights(X, threshold, eps, max_updates):
    """Weight ascent, then barrier polishing if the ascent stalls.

    The ascent is fast on most inputs but can crawl when many points sit
    near the optimal boundary; the polish then restricts to the promising
    points and adds back any that end up outside.
    """
    m, k = X.shape
    if m == k:
        # independent points: uniform weights give kappa_i = k exactly
        return np.full(m, 1.0 / m)
    if k == 1:
        # a segment: all weight on the farthest point
        u = np.zeros(m)
        u[int(np.argmax(np.abs(X[:, 0])))] = 1.0
        return u
    u, used, ok = _weight_ascent(X, threshold, eps, min(max_updates, _ASCENT_BUDGET * (m + k)))
    if ok:
        return u
    _, kappa = _refresh(X, u)
    if used >= max_updates:
        raise ConvergenceError(used, float(kappa.max() / threshold - 1.0))
    if m <= _POLISH_MAX:
        C = np.arange(m)
    else:
        top = np.argsort(-kappa, kind="stable")[:_POLISH_MAX]
        C = np.union1d(top, np.flatnonzero(u > 0))
    slack = threshold - k
    while True:
        uc, steps = _barrier_solve(X[C], u[C] / u[C].sum(), slack, max_updates - used)
        used += steps
        u = np.zeros(m)
        u[C] = uc
        _, kappa = _refresh(X, u)
        if kappa.max() <= threshold:
            return u
        outside = np.setdiff1d(np.flatnonzero(kappa > threshold), C)
        if used >= max_updates or len(outside) == 0:
            raise ConvergenceError(used, float(kappa.max() / threshold - 1.0))
        C = np.union1d(C, outside)


def _check_inputs(points, eps):
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    if P.ndim != 2 or len(P) == 0:
        raise ValueError("points must be a non-empty (m, N) array")
    if not np.all(np.isfinite(P)):
        raise ValueError("points must be finite")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return P


def mvee_symmetric(points, eps: float = DEFAULT_EPS, max_updates: int = MAX_UPDATES) -> Ellipsoid:
    """Löwner ellipsoid of ``{+p, -p : p in points}``, centered at 0.

    Parameters
    ----------
    points : (m, N) array_like
    eps : float
        Relative membership tolerance; every point satisfies
        ``membership <= 1 + eps``.
    max_updates : int
        Cap on solver steps (rank-one updates plus any Newton steps).

    Raises
    ------
    ConvergenceError
        If the cap is hit first.
    """
    P = _check_inputs(points, eps)
    origin, B = carrier(P, centered=True)
    r = B.shape[1]
    if r == 0:
        return Ellipsoid(origin, B, np.zeros((0, 0)))
    X = P @ B
    u = _solve_weights(X, r * (1.0 + eps), eps, max_updates)
    M = (X * u[:, None]).T @ X
    M = 0.5 * (M + M.T)
    return Ellipsoid(origin, B, r * M)


def mvee_general(points, eps: float = DEFAULT_EPS, max_updates: int = MAX_UPDATES) -> Ellipsoid:
    """Löwner ellipsoid of ``points`` with a free center.

    The center is a convex combination of the points.  A single point (or
    coincident points) gives a rank-0 ellipsoid at that point.
    """
    P = _check_inputs(points, eps)
    origin, B = carrier(P, centered=False)
    r = B.shape[1]
    if r == 0:
        return Ellipsoid(origin, B, np.zeros((0, 0)))
    X = (P - origin) @ B
    lifted = np.hstack([X, np.ones((len(X), 1))])
    # lifted kappa = 1 + (x - c)^T S^{-1} (x - c)
    u = _solve_weights(lifted, 1.0 + r * (1.0 + eps), eps, max_updates)
    c = u @ X
    S = (X * u[:, None]).T @ X - np.outer(c, c)
    S = 0.5 * (S + S.T)
    return Ellipsoid(origin + B @ c, B, r * S)


def inscribed_from_enclosing(F: Ellipsoid, symmetric: bool):
    """Shrink a Löwner ellipsoid into the hull it encloses.

    Returns ``(E, w)``.  Symmetric: ``E`` has shape ``Q / r`` about the
    origin and ``w = 0``, so ``E <= conv <= sqrt(r) E``.  General: ``E`` is
    moved to the origin with shape ``Q / r**2`` and ``w = F.center``, so
    ``E <= conv - w <= r E``.
    """
    r = F.rank
    if r == 0:
        raise ValueError("cannot inscribe into a rank-0 ellipsoid")
    zero = np.zeros(F.dim_ambient)
    if symmetric:
        return Ellipsoid(zero, F.basis, F.shape / r), zero
    return Ellipsoid(zero, F.basis, F.shape / r**2), F.center.copy()
