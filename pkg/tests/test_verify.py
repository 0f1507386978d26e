import csv
import io
import json
import math

import numpy as np
import pytest

from sosnorm import approximant as ap
from sosnorm import verify
from sosnorm.bodies import exact_norm, from_polar_vertices, make_l1, make_linf, make_random_polytope

INTERVAL = from_polar_vertices([[-1.0], [0.5]], symmetric=False)


@pytest.fixture(scope="module")
def l1_3():
    return ap.build(make_l1(3), 1)


def test_sandwich_l1_d3_ratio_is_sqrt3(l1_3):
    rep = verify.check_sandwich(l1_3, l1_3.body, 10_000, seed=0)
    assert rep.samples == 10_000
    assert rep.violations == 0 and rep.passed
    assert rep.max_ratio == pytest.approx(math.sqrt(3), abs=1e-6)
    assert rep.max_ratio <= rep.constant_effective * (1 + 1e-7)
    assert sum(rep.ratio_histogram) == rep.samples


def test_sandwich_linf_d2_n3():
    appr = ap.build(make_linf(2), 3)
    rep = verify.check_sandwich(appr, appr.body, 10_000, seed=1)
    assert rep.violations == 0
    assert rep.max_ratio <= 2 ** (1 / 6) * (1 + 1e-6)
    # midpoints of the two generators are diagonals
    assert rep.max_ratio >= 2 ** (1 / 6) * (1 - 1e-6)


def test_sandwich_interval_ratio_one():
    for m in (10, 1000):
        appr = ap.build(INTERVAL, 1)
        rep = verify.check_sandwich(appr, INTERVAL, m, seed=2)
        assert rep.violations == 0
        assert rep.max_ratio == pytest.approx(1.0, abs=1e-9)
        assert rep.max_upper_ratio == pytest.approx(1.0, abs=1e-9)


def test_sandwich_counts_match_direct_recount():
    spec = make_random_polytope(3, 6, symmetric=False, seed=3)
    appr = ap.build(spec, 3)
    rep = verify.check_sandwich(appr, spec, 5000, seed=4)
    X = verify.sample_points(spec, 5000, 4)
    lo, hi = ap.norm_bounds(appr, X)
    norm = exact_norm(spec, X)
    assert rep.violations_lower == np.count_nonzero(lo > norm * (1 + 1e-7)) == 0
    assert rep.violations_upper == np.count_nonzero(norm > hi * (1 + 1e-7)) == 0
    assert rep.max_centered_ratio <= rep.constant_effective * (1 + 1e-7)


def test_sandwich_detects_wrong_body(l1_3):
    # a corrupted approximant must produce violations, not silently pass
    other = make_linf(3)
    fake = ap.NormApproximant(3, 1, l1_3.carrier_basis, 4 * l1_3.core, l1_3.w, other)
    rep = verify.check_sandwich(fake, other, 2000, seed=0)
    assert rep.violations_lower > 0 and not rep.passed


def test_sandwich_body_mismatch(l1_3):
    with pytest.raises(ValueError):
        verify.check_sandwich(l1_3, make_linf(3), 10, seed=0)


def test_sandwich_deterministic_and_worker_independent():
    spec = make_random_polytope(4, 9, symmetric=True, seed=5)
    appr = ap.build(spec, 3)
    a = verify.check_sandwich(appr, spec, 10_000, seed=9)
    b = verify.check_sandwich(appr, spec, 10_000, seed=9)
    c = verify.check_sandwich(appr, spec, 10_000, seed=9, workers=4)
    assert a.to_json() == b.to_json() == c.to_json()
    assert verify.check_sandwich(appr, spec, 10_000, seed=10).to_json() != a.to_json()


def test_sample_points_mixture():
    spec = make_l1(3)
    X = verify.sample_points(spec, 100, seed=0)
    assert X.shape == (100, 3)
    assert verify.sample_points(spec, 0, 0).shape == (0, 3)
    # prefix stability: the first chunk does not depend on m
    np.testing.assert_array_equal(verify.sample_points(spec, 50, 0), X[:50])
    dirs = X / np.linalg.norm(X, axis=1, keepdims=True)
    axis_rows = X[9::10]
    assert np.all(np.count_nonzero(axis_rows, axis=1) == 1)
    gen_rows = dirs[5::10]
    G = spec.generators / np.linalg.norm(spec.generators, axis=1, keepdims=True)
    assert np.allclose(np.abs(gen_rows @ G.T).max(axis=1), 1.0)


def test_report_json_handles_infinite_ratio():
    spec = make_random_polytope(2, 3, symmetric=False, seed=0)
    appr = ap.build(spec, 1)
    rep = verify.check_sandwich(appr, spec, 4000, seed=0)
    doc = json.loads(rep.to_json())
    assert doc["passed"] is True
    assert doc["max_ratio"] is None or doc["max_ratio"] >= 1.0


@pytest.mark.parametrize("appr", [ap.build(make_l1(3), 1), ap.build(make_random_polytope(3, 6, symmetric=False, seed=1), 3)])
def test_homogeneity_t_one(appr):
    res = verify.check_homogeneity(appr, 200, seed=0, scalars=1.0)
    assert res.passed and res.worst_error == 0.0


def test_homogeneity_t_minus_one_symmetric():
    appr = ap.build(make_random_polytope(3, 7, symmetric=True, seed=2), 3)
    res = verify.check_homogeneity(appr, 200, seed=0, scalars=-1.0)
    assert res.passed and res.worst_error <= 1e-12


def test_homogeneity_random(l1_3):
    res = verify.check_homogeneity(l1_3, 1000, seed=3)
    assert res.passed and res.worst_error < 1e-12
    assert verify.check_homogeneity(l1_3, 0, seed=3).passed


def test_invariance_linf_swap():
    appr = ap.build(make_linf(3), 3)
    X = np.random.default_rng(0).standard_normal((100, 3))
    np.testing.assert_allclose(ap.eval_p(appr, X), (X**6).sum(axis=1) / 3, rtol=1e-9)
    res = verify.check_invariance(appr, "permutations", 500, seed=0)
    assert res.applicable and res.passed and res.worst_error <= 1e-9


def test_invariance_l1_sign_flip():
    res = verify.check_invariance(ap.build(make_l1(2), 1), "signed-permutations", 500, seed=0)
    assert res.applicable and res.passed


def test_invariance_not_applicable():
    appr = ap.build(make_random_polytope(3, 5, symmetric=False, seed=0), 1)
    res = verify.check_invariance(appr, "permutations", 100, seed=0)
    assert not res.applicable
    assert res.detail.startswith("not applicable")


def test_group_generators():
    mats = verify.group_generators("signed-permutations", 3)
    assert len(mats) == 3
    assert all(np.allclose(M @ M.T, np.eye(3)) for M in mats)
    with pytest.raises(ValueError):
        verify.group_generators("rotations", 3)


def test_bench_empty(l1_3):
    block = verify.bench_eval(l1_3, l1_3.body, 0, seed=0)
    assert block["m"] == 0 and block["N"] == 3
    assert not any(k.endswith("_ns") for k in block)


def test_bench_records_dimensions():
    spec = make_l1(4)
    Ns = []
    for n in (1, 3, 5):
        block = verify.bench_eval(ap.build(spec, n), spec, 20, seed=0)
        Ns.append(block["N"])
        assert block["eval_p_median_ns"] > 0 and block["exact_norm_median_ns"] > 0
    assert Ns == [4, 20, 56]


def test_constant_asymptotics_n1():
    for d in (1, 4, 17):
        assert verify.constant_asymptotics(1, d)["theorem_constant"] == pytest.approx(math.sqrt(d), rel=1e-15)


def test_constant_asymptotics_gamma_one():
    info = verify.constant_asymptotics(50, 50, gamma=1.0)
    assert info["gamma_limit"] == pytest.approx(2.0, rel=1e-15)
    direct = math.comb(99, 50) ** (1 / 100)
    assert info["theorem_constant"] == pytest.approx(direct, rel=1e-12)
    assert abs(info["theorem_constant"] / 2 - 1) < 0.05


def test_constant_asymptotics_fixed_n():
    errs = []
    for d in (10, 100, 1000):
        info = verify.constant_asymptotics(3, d)
        errs.append(abs(info["theorem_constant"] / math.sqrt(d) / math.factorial(3) ** (-1 / 6) - 1))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.10


def test_constant_asymptotics_rejects():
    with pytest.raises(ValueError):
        verify.constant_asymptotics(0, 3)
    with pytest.raises(ValueError):
        verify.constant_asymptotics(3, 3, gamma=0.0)


def test_reports_to_csv(l1_3):
    rep = verify.check_sandwich(l1_3, l1_3.body, 100, seed=0)
    checks = [verify.check_homogeneity(l1_3, 10, 0), verify.check_invariance(l1_3, "permutations", 10, 0)]
    rows = list(csv.DictReader(io.StringIO(verify.reports_to_csv(rep, checks))))
    assert [r["check"] for r in rows] == ["sandwich", "homogeneity", "invariance:permutations"]
    assert rows[0]["violations_lower"] == "0"
    assert all(r["passed"] == "True" for r in rows)
