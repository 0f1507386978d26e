"""Degree-2n polynomial approximants of polytope norms.

Pipeline for a body with polar generators ``f_1..f_m`` and odd ``n``:

1. lift every generator to ``s_i = veronese(f_i, n)``; for odd ``n`` the
   norm satisfies ``||x||**n = max_i <s_i, veronese(x, n)>``;
2. enclose the lifted points in a Löwner ellipsoid and shrink it into
   their hull, giving ``E`` (and a center ``w`` in the nonsymmetric case);
3. ``q(x)`` is the support value of ``E`` at ``veronese(x, n)``, so
   ``p = q**2 = s^T A s`` with ``A`` positive semidefinite.

Symmetric bodies then satisfy ``q <= ||x||**n <= sqrt(dim_D) q``;
nonsymmetric ones satisfy ``q <= ||x||**n - r(x) <= dim_D q`` with
``r(x) = <w, veronese(x, n)>``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import bodies, mvee, symtensor
from .errors import DimensionCapError, DimensionOverflowError

__all__ = [
    "FORMAT_VERSION",
    "DEFAULT_CAP",
    "DEFAULT_EPS",
    "NormApproximant",
    "build",
    "eval_p",
    "eval_q",
    "eval_r",
    "norm_bounds",
    "expand_monomials",
    "eval_monomials",
    "sos_factor",
    "save",
    "load",
    "dumps",
    "loads",
]

FORMAT_VERSION = 1
DEFAULT_CAP = 3000
DEFAULT_EPS = 1e-9
EXPAND_CAP = 10**6
ORTHO_TOL = 1e-10
PSD_TOL = 1e-9


def _theorem_dim(d, n):
    return symtensor.sym_dim(d, n)


@dataclass(frozen=True, eq=False)
class NormApproximant:
    """Built approximant: ``p(x) = s^T A s`` with ``A = basis^T core basis``.

    ``carrier_basis`` is ``(r, N)`` with orthonormal rows, ``core`` is the
    ``(r, r)`` shape of the inscribed ellipsoid and ``w`` the center
    functional (zero for symmetric bodies).
    """

    d: int
    n: int
    carrier_basis: np.ndarray
    core: np.ndarray
    w: np.ndarray
    body: bodies.BodySpec
    eps: float = DEFAULT_EPS
    seed: int | None = None
    ordering: str = field(default="grlex")

    def __post_init__(self):
        if self.n < 1 or self.n % 2 == 0:
            raise ValueError(f"n must be odd, got {self.n}")
        if self.ordering != "grlex":
            raise ValueError(f"unsupported ordering {self.ordering!r}")
        if self.body.d != self.d:
            raise ValueError(f"body dimension {self.body.d} does not match d={self.d}")
        N = symtensor.sym_dim(self.d, self.n)
        B = np.array(self.carrier_basis, dtype=float).reshape(-1, N)
        core = np.array(self.core, dtype=float)
        w = np.array(self.w, dtype=float)
        r = B.shape[0]
        if r < 1:
            raise ValueError("approximant has an empty carrier")
        if core.shape != (r, r):
            raise ValueError(f"core has shape {core.shape}, expected ({r}, {r})")
        if w.shape != (N,):
            raise ValueError(f"w has shape {w.shape}, expected ({N},)")
        if np.abs(B @ B.T - np.eye(r)).max() > ORTHO_TOL:
            raise ValueError("carrier basis rows are not orthonormal")
        if np.abs(core - core.T).max() > 1e-12 * max(np.abs(core).max(), 1.0):
            raise ValueError("core matrix is not symmetric")
        evals = np.linalg.eigvalsh(core)
        if evals[0] < -PSD_TOL * max(evals[-1], 0.0) or evals[-1] <= 0:
            raise ValueError("core matrix is not positive semidefinite")
        if self.symmetric and w.any():
            raise ValueError("symmetric approximant must have w = 0")
        for name, arr in (("carrier_basis", B), ("core", core), ("w", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def symmetric(self) -> bool:
        return self.body.symmetric

    @property
    def N(self) -> int:
        return self.carrier_basis.shape[1]

    @property
    def dim_D(self) -> int:
        return self.carrier_basis.shape[0]

    @cached_property
    def gram(self) -> np.ndarray:
        """Dense ``(N, N)`` Gram matrix ``A``."""
        A = self.carrier_basis.T @ self.core @ self.carrier_basis
        return 0.5 * (A + A.T)

    @cached_property
    def _factor(self):
        # rows L with L^T L = A
        lam, V = np.linalg.eigh(self.core)
        lam = np.clip(lam, 0.0, None)
        return (np.sqrt(lam)[:, None] * V.T) @ self.carrier_basis

    @property
    def constant_effective(self) -> float:
        """Factor the construction achieves: ``dim_D**(1/2n)`` or ``dim_D``."""
        if self.symmetric:
            return self.dim_D ** (1.0 / (2 * self.n))
        return float(self.dim_D)

    @property
    def constant_theorem(self) -> float:
        """Worst-case factor ``binom(n+d-1, n)**(1/2n)`` or ``binom(n+d-1, n)``."""
        N = _theorem_dim(self.d, self.n)
        if self.symmetric:
            return math.exp(math.log(N) / (2 * self.n))
        return float(N)


def build(spec: bodies.BodySpec, n: int, eps: float = DEFAULT_EPS, cap: int = DEFAULT_CAP, seed=None) -> NormApproximant:
    """Construct the approximant of ``spec`` of degree ``2n``.

    Raises
    ------
    ValueError
        If ``n`` is not a positive odd integer.
    DimensionCapError
        If ``binom(n+d-1, n)`` exceeds ``cap``.
    ConvergenceError
        Propagated from the ellipsoid solver.
    """
    if isinstance(n, bool) or int(n) != n or n < 1 or n % 2 == 0:
        raise ValueError(f"n must be odd, got {n}")
    n = int(n)
    N = symtensor.sym_dim(spec.d, n)
    if N > cap:
        raise DimensionCapError(f"sym_dim({spec.d}, {n})", N, cap)
    lifted = symtensor.lift(spec.generators, n)
    if spec.symmetric:
        F = mvee.mvee_symmetric(lifted, eps)
    else:
        F = mvee.mvee_general(lifted, eps)
    E, w = mvee.inscribed_from_enclosing(F, spec.symmetric)
    return NormApproximant(
        d=spec.d,
        n=n,
        carrier_basis=E.basis.T,
        core=E.shape,
        w=w,
        body=spec,
        eps=float(eps),
        seed=seed,
    )


def _points(appr, x):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    if X2.ndim != 2 or X2.shape[1] != appr.d:
        raise ValueError(f"x has shape {X.shape}, expected trailing dimension {appr.d}")
    return X2, single


def _out(values, single):
    return float(values[0]) if single else values


def eval_p(appr: NormApproximant, x):
    """``p(x) = s^T A s`` for one point or an ``(m, d)`` batch."""
    X, single = _points(appr, x)
    t = symtensor.lift(X, appr.n) @ appr._factor.T
    return _out(np.einsum("ij,ij->i", t, t), single)


def eval_q(appr: NormApproximant, x):
    """Support value ``q(x) = sqrt(p(x))`` of the inscribed ellipsoid."""
    return np.sqrt(eval_p(appr, x))


def eval_r(appr: NormApproximant, x):
    """``r(x) = <w, veronese(x, n)>``; identically zero for symmetric bodies."""
    X, single = _points(appr, x)
    if appr.symmetric:
        return _out(np.zeros(len(X)), single)
    return _out(symtensor.lift(X, appr.n) @ appr.w, single)


def _signed_root(v, n):
    return np.sign(v) * np.abs(v) ** (1.0 / n)


def norm_bounds(appr: NormApproximant, x, constant: str = "effective"):
    """Lower and upper bounds on the norm at ``x``.

    ``constant`` selects the factor: ``"effective"`` uses ``dim_D``,
    ``"theorem"`` uses ``binom(n+d-1, n)``.  Returns ``(lower, upper)`` as
    floats for a single point or arrays for a batch.
    """
    if constant == "effective":
        dim = appr.dim_D
    elif constant == "theorem":
        dim = _theorem_dim(appr.d, appr.n)
    else:
        raise ValueError(f"constant must be 'effective' or 'theorem', got {constant!r}")
    X, single = _points(appr, x)
    S = symtensor.lift(X, appr.n)
    t = S @ appr._factor.T
    p = np.einsum("ij,ij->i", t, t)
    n = appr.n
    if appr.symmetric:
        root = p ** (1.0 / (2 * n))
        lower, upper = root, dim ** (1.0 / (2 * n)) * root
    else:
        q = np.sqrt(p)
        r = S @ appr.w
        hi = r + dim * q
        scale = np.abs(r) + dim * q
        if np.any(hi < -PSD_TOL * scale):
            raise ValueError("negative upper radicand: approximant is corrupted")
        lower = np.maximum(_signed_root(r + q, n), 0.0)
        upper = np.maximum(_signed_root(hi, n), 0.0)
    return _out(lower, single), _out(upper, single)


def _codes(E, base):
    weights = base ** np.arange(E.shape[1] - 1, -1, -1, dtype=np.int64)
    return E @ weights


def expand_monomials(appr: NormApproximant, cap: int = EXPAND_CAP) -> dict:
    """Coefficients of ``p`` in the degree-``2n`` monomial basis.

    Returns a dict mapping exponent tuples (grlex order) to floats.
    """
    d, n = appr.d, appr.n
    M = symtensor.sym_dim(d, 2 * n)
    if M > cap:
        raise DimensionCapError(f"sym_dim({d}, {2 * n})", M, cap)
    base = 2 * n + 1
    if d * math.log2(base) >= 62:
        raise DimensionOverflowError(f"exponent codes for d={d}, degree {2 * n} overflow int64")
    E = symtensor.exponent_matrix(d, n)
    E2 = symtensor.exponent_matrix(d, 2 * n)
    # grlex is descending in the codes; flip for searchsorted
    codes2 = _codes(E2, base)[::-1]
    wts = symtensor.veronese_weights(d, n)
    A = appr.gram * np.outer(wts, wts)
    coef = np.zeros(M)
    for i in range(len(E)):
        idx = M - 1 - np.searchsorted(codes2, _codes(E + E[i], base))
        np.add.at(coef, idx, A[i])
    return {tuple(int(a) for a in alpha): float(c) for alpha, c in zip(E2, coef)}


def eval_monomials(coeffs: dict, x):
    """Evaluate a ``{exponents: coefficient}`` polynomial at points ``x``."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    E = np.array(list(coeffs.keys()), dtype=np.int64)
    c = np.array(list(coeffs.values()), dtype=float)
    vals = np.prod(X2[:, None, :] ** E[None, :, :], axis=2) @ c
    return float(vals[0]) if single else vals


def sos_factor(appr: NormApproximant) -> np.ndarray:
    """Rows ``L_k`` with ``A = sum_k L_k^T L_k``, so ``p = sum_k (L_k . s)**2``.

    The rows come from a column-pivoted QR of a square-root factor, which
    makes them as close to triangular as the pivoting allows; there are
    exactly ``dim_D`` of them.
    """
    lam, V = np.linalg.eigh(appr.core)
    if lam[0] < -PSD_TOL * max(lam[-1], 0.0):
        raise ValueError(f"core has eigenvalue {lam[0]:.3e}; PSD repair beyond tolerance")
    L0 = (np.sqrt(np.clip(lam, 0.0, None))[:, None] * V.T) @ appr.carrier_basis
    Q, R, piv = sla.qr(L0, mode="economic", pivoting=True)
    rows = Q.T @ L0
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return rows * signs[:, None]


def to_dict(appr: NormApproximant) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "d": appr.d,
        "n": appr.n,
        "ordering": appr.ordering,
        "carrier_basis": appr.carrier_basis.tolist(),
        "core": appr.core.tolist(),
        "w": appr.w.tolist(),
        "dim_D": appr.dim_D,
        "constants": {"effective": appr.constant_effective, "theorem": appr.constant_theorem},
        "body": appr.body.to_dict(),
        "build": {"eps": appr.eps, "seed": appr.seed},
    }


def from_dict(data: dict) -> NormApproximant:
    """Rebuild and re-validate an approximant from its JSON form."""
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {data.get('format_version')!r}")
    try:
        appr = NormApproximant(
            d=int(data["d"]),
            n=int(data["n"]),
            carrier_basis=data["carrier_basis"],
            core=data["core"],
            w=data["w"],
            body=bodies.BodySpec.from_dict(data["body"]),
            eps=float(data["build"]["eps"]),
            seed=data["build"].get("seed"),
            ordering=data["ordering"],
        )
        dim_D = int(data["dim_D"])
        consts = {k: float(data["constants"][k]) for k in ("effective", "theorem")}
    except KeyError as exc:
        raise ValueError(f"approximant file is missing field {exc.args[0]!r}") from None
    if dim_D != appr.dim_D:
        raise ValueError(f"dim_D = {dim_D} does not match carrier rank {appr.dim_D}")
    if not (
        math.isclose(consts["effective"], appr.constant_effective, rel_tol=1e-12)
        and math.isclose(consts["theorem"], appr.constant_theorem, rel_tol=1e-12)
    ):
        raise ValueError("stored constants disagree with dim_D and (n, d)")
    if appr.constant_effective > appr.constant_theorem * (1 + 1e-12):
        raise ValueError("effective constant exceeds the theorem constant")
    return appr


def dumps(appr: NormApproximant) -> str:
    # float repr is the shortest string that round-trips the exact double
    return json.dumps(to_dict(appr), indent=1) + "\n"


def loads(text: str) -> NormApproximant:
    return from_dict(json.loads(text))


def save(appr: NormApproximant, path) -> None:
    Path(path).write_text(dumps(appr), encoding="utf-8")


def load(path) -> NormApproximant:
    return loads(Path(path).read_text(encoding="utf-8"))
