import numpy as np
import pytest

from _oracles import box_rows, lp_by_vertices, random_lp
from phieq import LinearProgram, lp_solve


def test_single_bound():
    res = lp_solve(LinearProgram([1.0], A_ub=[[1.0]], b_ub=[1.0], sense="max"))
    assert res.optimal
    assert res.x[0] == pytest.approx(1.0)
    assert res.value == pytest.approx(1.0)


def test_contradiction_is_infeasible():
    res = lp_solve(LinearProgram([1.0], A_ub=[[1.0], [-1.0]], b_ub=[0.0, -1.0]))
    assert res.status == "infeasible"


def test_unbounded():
    res = lp_solve(LinearProgram([1.0, 1.0], A_ub=[[1.0, -1.0]], b_ub=[1.0], sense="max"))
    assert res.status == "unbounded"


def test_free_variables_and_equalities():
    # min x + y with x - y = 2, x, y free and x >= -1 through a row
    lp = LinearProgram([1.0, 2.0], A_ub=[[-1.0, 0.0]], b_ub=[1.0], A_eq=[[1.0, -1.0]], b_eq=[2.0], lo=-np.inf)
    res = lp_solve(lp)
    assert res.optimal
    np.testing.assert_allclose(res.x, [-1.0, -3.0], atol=1e-12)


def test_degenerate_duplicate_rows():
    A = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0], [1.0, 0.0]])
    b = np.array([1.0, 1.0, 2.0, 0.5])
    res = lp_solve(LinearProgram([1.0, 1.0], A_ub=A, b_ub=b, sense="max"))
    assert res.optimal
    assert res.value == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(40))
def test_mirrored_rows_with_tiny_entries(seed):
    # a <= 0 and -a <= 0 pairs whose coefficients span seven orders of magnitude
    rng = np.random.default_rng(seed)
    nv = 4
    A = rng.normal(size=(2, nv)) * np.array([1.0, 1e-3, 1e-5, 1e-7])
    # make the uniform point satisfy A x = 0 so the problem is feasible
    A[:, 0] -= A.sum(axis=1)
    A_ub = np.vstack([A, -A])
    b_ub = np.zeros(4)
    A_eq = np.ones((1, nv))
    b_eq = np.array([1.0])
    c = rng.normal(size=nv)
    res = lp_solve(LinearProgram(c, A_ub, b_ub, A_eq, b_eq, sense="max"))
    ref = lp_by_vertices(c, np.vstack([A_ub, -np.eye(nv)]), np.concatenate([b_ub, np.zeros(nv)]), A_eq, b_eq, "max", tol=1e-12)
    assert res.optimal
    assert res.value == pytest.approx(ref, abs=1e-8)


def test_certificate_residuals_reported():
    res = lp_solve(LinearProgram([1.0, -1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0], hi=1.0))
    assert res.optimal
    assert set(res.residuals) >= {"primal", "dual", "complementarity"}
    assert max(res.residuals.values()) <= 1e-9


def test_deterministic():
    rng = np.random.default_rng(3)
    c, A, b, Ae, be, sense = random_lp(rng, 4, 4, True)
    r1 = lp_solve(LinearProgram(c, A, b, Ae, be, hi=1.0, sense=sense))
    r2 = lp_solve(LinearProgram(c, A, b, Ae, be, hi=1.0, sense=sense))
    assert r1.status == r2.status
    if r1.optimal:
        np.testing.assert_array_equal(r1.x, r2.x)


@pytest.mark.parametrize("seed", range(30))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(1000 + seed)
    c, A, b, Ae, be, sense = random_lp(rng)
    nv = c.size
    res = lp_solve(LinearProgram(c, A, b, Ae, be, hi=1.0, sense=sense))
    B, bb = box_rows(nv)
    ref = lp_by_vertices(c, np.vstack([A, B]), np.concatenate([b, bb]), Ae, be, sense)
    if ref is None:
        assert res.status == "infeasible"
    else:
        assert res.optimal
        assert abs(res.value - ref) <= 1e-9
        assert (A @ res.x <= b + 1e-9).all()
