"""Empirical checks and timing for built approximants.

Every check draws its samples from an explicit seed.  Samples are produced
in fixed-size chunks, chunk ``c`` using ``default_rng([seed, c])``, so the
result does not depend on how chunks are scheduled across workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import approximant as ap
from .bodies import BodySpec, exact_norm

__all__ = [
    "SANDWICH_TOL",
    "HOMOGENEITY_TOL",
    "INVARIANCE_TOL",
    "VerificationReport",
    "CheckResult",
    "sample_points",
    "check_sandwich",
    "check_homogeneity",
    "check_invariance",
    "group_generators",
    "bench_eval",
    "constant_asymptotics",
    "reports_to_csv",
]

SANDWICH_TOL = 1e-7
HOMOGENEITY_TOL = 1e-9
INVARIANCE_TOL = 1e-9
CHUNK = 4096
HIST_BINS = 20


@dataclass
class VerificationReport:
    """Outcome of a sandwich check.

    ``max_ratio`` is ``||x|| / lower`` over the samples.  For nonsymmetric
    bodies the lower bound can vanish, so ``max_centered_ratio`` also
    records ``((||x||**n - r(x)) / q(x))**(1/n)``, the quantity bounded by
    ``dim_D**(1/n)``.  ``constant_effective`` is the bound on the relevant
    ratio in norm units: ``dim_D**(1/2n)`` (symmetric) or ``dim_D**(1/n)``.
    """

    samples: int
    violations_lower: int
    violations_upper: int
    max_ratio: float
    max_centered_ratio: float
    max_upper_ratio: float
    constant_effective: float
    constant_theorem: float
    ratio_histogram: list
    seed: int
    d: int
    n: int
    dim_D: int
    symmetric: bool
    tolerance: float = SANDWICH_TOL
    timing: dict | None = None

    @property
    def violations(self) -> int:
        return self.violations_lower + self.violations_upper

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("max_ratio", "max_centered_ratio", "max_upper_ratio"):
            if not math.isfinite(out[key]):
                out[key] = None
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


@dataclass
class CheckResult:
    """Pass/fail outcome of a homogeneity or invariance check."""

    check: str
    passed: bool
    worst_error: float
    samples: int
    applicable: bool = True
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _chunks(m):
    return [(c, c * CHUNK, min((c + 1) * CHUNK, m)) for c in range(-(-m // CHUNK))]


def _sample_chunk(spec, seed, c, size):
    # draw a full chunk and slice, so sample i depends only on (seed, i)
    X = _full_chunk(spec, seed, c)
    return X[:size]


def _full_chunk(spec, seed, c):
    size = CHUNK
    rng = np.random.default_rng([seed, c])
    d = spec.d
    G = spec.generators
    k = len(G)
    kinds = (np.arange(size) + c * CHUNK) % 10
    X = rng.standard_normal((size, d))
    signs = rng.choice([-1.0, 1.0], size=(size, 2))
    i1 = rng.integers(k, size=size)
    i2 = rng.integers(k, size=size)
    axes = rng.integers(d, size=size)
    noise = rng.standard_normal((size, d))
    scale = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=size))

    gen = G[i1] * signs[:, :1]
    mid = 0.5 * (G[i1] * signs[:, :1] + G[i2] * signs[:, 1:])
    # a pair of opposite generators can cancel; fall back to the first one
    degenerate = ~mid.any(axis=1)
    mid[degenerate] = gen[degenerate]
    axis = np.zeros((size, d))
    axis[np.arange(size), axes] = signs[:, 0]

    def perturb(P):
        return P + 1e-3 * np.linalg.norm(P, axis=1, keepdims=True) * noise

    X = np.where((kinds == 5)[:, None], gen, X)
    X = np.where((kinds == 6)[:, None], mid, X)
    X = np.where((kinds == 7)[:, None], perturb(gen), X)
    X = np.where((kinds == 8)[:, None], perturb(mid), X)
    X = np.where((kinds == 9)[:, None], axis, X)
    return X * scale[:, None]


def sample_points(spec: BodySpec, m: int, seed: int) -> np.ndarray:
    """Mixture sample: Gaussian directions (half), generator directions,
    generator midpoints, small perturbations of both, and coordinate axes.
    """
    if m == 0:
        return np.zeros((0, spec.d))
    return np.vstack([_sample_chunk(spec, seed, c, hi - lo) for c, lo, hi in _chunks(m)])


def _check_pair(appr, spec):
    if appr.d != spec.d or appr.body.fingerprint() != spec.fingerprint():
        raise ValueError("approximant was not built from this body (d or generator hash differ)")


def _sandwich_chunk(appr, spec, seed, c, size, tol, c_eff):
    X = _sample_chunk(spec, seed, c, size)
    norm = exact_norm(spec, X)
    lower, upper = ap.norm_bounds(appr, X)
    vl = int(np.count_nonzero(lower > norm * (1 + tol)))
    vu = int(np.count_nonzero(norm > upper * (1 + tol)))
    with np.errstate(divide="ignore"):
        ratio = np.where(lower > 0, norm / np.where(lower > 0, lower, 1.0), np.inf)
    upper_ratio = upper / norm
    if appr.symmetric:
        centered = ratio
    else:
        q = ap.eval_q(appr, X)
        slack = norm**appr.n - ap.eval_r(appr, X)
        centered = np.maximum(slack, 0.0) ** (1.0 / appr.n) / q ** (1.0 / appr.n)
    edges = np.linspace(1.0, max(c_eff, 1.0 + 1e-12), HIST_BINS + 1)
    idx = np.clip(np.searchsorted(edges, centered, side="right") - 1, 0, HIST_BINS - 1)
    hist = np.bincount(idx, minlength=HIST_BINS)
    return vl, vu, float(ratio.max()), float(centered.max()), float(upper_ratio.max()), hist


def check_sandwich(appr, spec: BodySpec, m: int, seed: int, tol: float = SANDWICH_TOL, workers: int = 1) -> VerificationReport:
    """Count violations of ``lower <= ||x|| <= upper`` on ``m`` samples.

    ``workers > 1`` evaluates chunks on a thread pool; the report is the
    same as with ``workers = 1``.
    """
    _check_pair(appr, spec)
    n = appr.n
    if appr.symmetric:
        c_eff = appr.dim_D ** (1.0 / (2 * n))
    else:
        c_eff = appr.dim_D ** (1.0 / n)
    c_thm = appr.constant_theorem if appr.symmetric else appr.constant_theorem ** (1.0 / n)
    jobs = _chunks(m)

    def run(job):
        c, lo, hi = job
        return _sandwich_chunk(appr, spec, seed, c, hi - lo, tol, c_eff)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    hist = np.zeros(HIST_BINS, dtype=np.int64)
    vl = vu = 0
    mr = mc = mu = 0.0
    for a, b, r1, r2, r3, h in parts:
        vl += a
        vu += b
        mr, mc, mu = max(mr, r1), max(mc, r2), max(mu, r3)
        hist += h
    return VerificationReport(
        samples=m,
        violations_lower=vl,
        violations_upper=vu,
        max_ratio=mr,
        max_centered_ratio=mc,
        max_upper_ratio=mu,
        constant_effective=c_eff,
        constant_theorem=c_thm,
        ratio_histogram=hist.tolist(),
        seed=seed,
        d=appr.d,
        n=n,
        dim_D=appr.dim_D,
        symmetric=appr.symmetric,
        tolerance=tol,
    )


def check_homogeneity(appr, m: int, seed: int, scalars=None) -> CheckResult:
    """Compare ``p(t x)`` with ``t**(2n) p(x)`` on random pairs.

    ``scalars`` overrides the random ``t`` values (one per sample).
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, appr.d))
    if scalars is None:
        t = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), size=m)) * rng.choice([-1.0, 1.0], size=m)
    else:
        t = np.broadcast_to(np.asarray(scalars, dtype=float), (m,))
    if m == 0:
        return CheckResult("homogeneity", True, 0.0, 0)
    base = ap.eval_p(appr, X) * t ** (2 * appr.n)
    scaled = ap.eval_p(appr, X * t[:, None])
    err = np.abs(scaled - base) / np.maximum(np.abs(base), np.finfo(float).tiny)
    worst = float(err.max())
    return CheckResult("homogeneity", worst <= HOMOGENEITY_TOL, worst, m)


def group_generators(group: str, d: int) -> list[np.ndarray]:
    """Matrices generating the named group: adjacent transpositions, plus
    one sign flip for signed permutations."""
    if group not in ("permutations", "signed-permutations"):
        raise ValueError(f"unknown group {group!r}")
    mats = []
    for i in range(d - 1):
        P = np.eye(d)
        P[[i, i + 1]] = P[[i + 1, i]]
        mats.append(P)
    if group == "signed-permutations":
        S = np.eye(d)
        S[0, 0] = -1.0
        mats.append(S)
    return mats


def _set_invariant(G, mats, symmetric):
    scale = np.abs(G).max()
    ref = np.vstack([G, -G]) if symmetric else G
    for g in mats:
        H = G @ g.T
        dist = np.abs(H[:, None, :] - ref[None, :, :]).max(axis=2).min(axis=1)
        if dist.max() > 1e-12 * scale:
            return False
    return True


def check_invariance(appr, group: str, m: int, seed: int) -> CheckResult:
    """Check ``p(g x) == p(x)`` for the generators ``g`` of ``group``.

    Not applicable (reported, not failed) when the body's generator set is
    not invariant under the group.
    """
    mats = group_generators(group, appr.d)
    name = f"invariance:{group}"
    if not _set_invariant(appr.body.generators, mats, appr.symmetric):
        return CheckResult(name, True, 0.0, 0, applicable=False, detail="not applicable: generator set is not invariant")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, appr.d))
    if m == 0 or not mats:
        return CheckResult(name, True, 0.0, m)
    p = ap.eval_p(appr, X)
    worst = 0.0
    for g in mats:
        pg = ap.eval_p(appr, X @ g.T)
        worst = max(worst, float((np.abs(pg - p) / p).max()))
    return CheckResult(name, worst <= INVARIANCE_TOL, worst, m)


def bench_eval(appr, spec: BodySpec, m: int, seed: int) -> dict:
    """Per-call wall-clock time of ``eval_p`` and ``exact_norm`` on single points."""
    _check_pair(appr, spec)
    block = {"d": appr.d, "n": appr.n, "N": appr.N, "dim_D": appr.dim_D, "m": m}
    if m == 0:
        return block
    X = np.random.default_rng(seed).standard_normal((m, appr.d))
    for name, fn in (("eval_p", lambda x: ap.eval_p(appr, x)), ("exact_norm", lambda x: exact_norm(spec, x))):
        ns = np.empty(m)
        for i in range(m):
            t0 = time.perf_counter_ns()
            fn(X[i])
            ns[i] = time.perf_counter_ns() - t0
        block[f"{name}_median_ns"] = float(np.median(ns))
        block[f"{name}_mean_ns"] = float(ns.mean())
    return block


def constant_asymptotics(n: int, d: int, gamma: float | None = None) -> dict:
    """Theorem constant ``binom(n+d-1, n)**(1/2n)`` next to its asymptotic forms.

    ``fixed_n`` is ``sqrt(d) * (n!)**(-1/2n)``, the large-``d`` estimate at
    fixed ``n``.  When ``gamma`` is given (``n = gamma * d``), ``gamma_limit``
    is ``exp(ln((gamma+1)/gamma)/2 + ln(gamma+1)/(2 gamma))``.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    # exact big-int binomial; only its logarithm is needed
    N = math.comb(n + d - 1, n)
    out = {
        "n": n,
        "d": d,
        "theorem_constant": math.exp(math.log(N) / (2 * n)),
        "c_n": math.exp(-math.lgamma(n + 1) / (2 * n)),
        "fixed_n": math.sqrt(d) * math.exp(-math.lgamma(n + 1) / (2 * n)),
    }
    if gamma is not None:
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        out["gamma"] = gamma
        out["gamma_limit"] = math.exp(0.5 * math.log((gamma + 1) / gamma) + math.log(gamma + 1) / (2 * gamma))
    return out


CSV_FIELDS = [
    "check",
    "passed",
    "samples",
    "violations_lower",
    "violations_upper",
    "max_ratio",
    "max_centered_ratio",
    "max_upper_ratio",
    "constant_effective",
    "constant_theorem",
    "worst_error",
    "applicable",
    "seed",
]


def reports_to_csv(sandwich: VerificationReport | None, checks=()) -> str:
    """Flatten a sandwich report and extra checks to CSV, one row per check."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    if sandwich is not None:
        row = sandwich.to_dict()
        row["check"] = "sandwich"
        writer.writerow(row)
    for chk in checks:
        writer.writerow(chk.to_dict())
    return buf.getvalue()
