import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfsim.errors import DomainError
from selfsim.families import (
    FamilyParams,
    PdeFamilyId,
    Point,
    SolutionBranch,
    eval_branch,
    similarity_map,
)
from selfsim.verify import (
    FDScheme,
    adjudicate_prefactors,
    analytic_operator_terms,
    apply_operator,
    default_grid,
    default_scheme,
    make_grid,
    ode_residual,
    operator_terms,
    pde_residual_sweep,
)

P0, P2, P3, T4, T5, F6 = PdeFamilyId
DEFAULT = FamilyParams()


def branch_field(family, index, params=DEFAULT):
    b = SolutionBranch(family, index)
    return lambda p: eval_branch(b, params, p)


def test_scheme_validation_and_width():
    assert FDScheme(2, 1e-3).width == 3
    assert FDScheme(3, 1e-2).width == 5
    assert FDScheme(4, 1e-2).width == 5
    with pytest.raises(ValueError):
        FDScheme(5, 1e-3)
    with pytest.raises(ValueError):
        FDScheme(2, 0.0)
    with pytest.raises(ValueError):
        operator_terms(F6, DEFAULT, lambda p: 1.0, Point(1.0, t=1.0), FDScheme(2, 1e-3))


def test_step_grows_with_coordinate():
    s = FDScheme(2, 1e-3)
    assert s.step(0.5) == 1e-3 and s.step(100.0) == pytest.approx(1e-2)


def test_constant_field_is_annihilated():
    for fam, p in ((P2, Point(1.0, t=1.0)), (P3, Point(1.0, 1.0, 1.0)),
                   (T4, Point(1.0, 0.5)), (T5, Point(1.0, 1.0, 1.0)), (F6, Point(1.0, t=1.0))):
        assert apply_operator(fam, DEFAULT, lambda q: 1.0, p) == 0.0


def test_heat_kernel_and_vortex_examples():
    scheme = FDScheme(2, 1e-3)
    heat = lambda p: math.exp(-p.x ** 2 / (4 * p.t)) / math.sqrt(p.t)  # noqa: E731
    assert abs(apply_operator(P2, FamilyParams(alpha=0.0), heat, Point(1.0, t=1.0), scheme)) <= 1e-5
    vortex = branch_field(P0, 1)
    assert abs(apply_operator(P0, DEFAULT, vortex, Point(1.0, t=1.0), scheme)) <= 1e-5


def test_stencil_leaving_domain():
    with pytest.raises(DomainError):
        apply_operator(P2, DEFAULT, lambda p: 1.0, Point(5e-4, t=1.0), FDScheme(2, 1e-3))


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=20, deadline=None)
def test_operator_is_linear(a, b):
    f1, f2 = branch_field(P3, 1), branch_field(P3, 4)
    p = Point(1.1, 0.9, 1.2)
    combo = apply_operator(P3, DEFAULT, lambda q: a * f1(q) + b * f2(q), p)
    parts = a * apply_operator(P3, DEFAULT, f1, p) + b * apply_operator(P3, DEFAULT, f2, p)
    # differencing turns the rounding of a*f1 + b*f2 into eps*|u|/h^2, so
    # compare against the magnitude the stencil actually sums
    h = default_scheme(P3).step(p.x)
    scale = 4 * (abs(a) * abs(f1(p)) + abs(b) * abs(f2(p))) / h ** 2
    assert abs(combo - parts) <= 1e-12 * scale + 1e-300


@pytest.mark.parametrize("family,index,point", [
    (P0, 1, Point(1.2, t=0.9)), (P2, 2, Point(1.2, t=0.9)), (P3, 3, Point(1.1, 0.8, 1.3)),
])
def test_analytic_operator_vanishes_and_fd_converges(family, index, point):
    b = SolutionBranch(family, index)
    exact = analytic_operator_terms(b, DEFAULT, point)
    assert abs(math.fsum(exact)) <= 1e-13 * max(map(abs, exact))
    f = branch_field(family, index)
    errs = [abs(apply_operator(family, DEFAULT, f, point, FDScheme(2, h)) - math.fsum(exact))
            for h in (2e-2, 1e-2)]
    assert 3.0 <= errs[0] / errs[1] <= 5.0


def test_analytic_operator_family_guard():
    with pytest.raises(ValueError):
        analytic_operator_terms(SolutionBranch(F6, 1), DEFAULT, Point(1.0, t=1.0))


def test_default_grids():
    assert len(default_grid(P2, DEFAULT)) == 25
    assert len(default_grid(P3, DEFAULT)) == 125
    t4 = default_grid(T4, DEFAULT)
    assert 0 < len(t4) < 25
    assert all(abs(similarity_map(T4, DEFAULT, p).sigma) <= 0.9 for p in t4)


def test_make_grid():
    g = make_grid(P2, {"x": (1.0, 2.0, 3, False), "t": (1.0, 4.0, 2, True)})
    assert [p.coords(P2) for p in g] == [(1.0, 1.0), (1.0, 4.0), (1.5, 1.0), (1.5, 4.0),
                                         (2.0, 1.0), (2.0, 4.0)]
    with pytest.raises(ValueError):
        make_grid(P2, {"x": (1.0, 2.0, 3, False)})
    with pytest.raises(ValueError):
        make_grid(P2, {"x": (2.0, 1.0, 3, False), "t": (1.0, 2.0, 2, False)})


def test_p2_sweep_examples():
    rep = pde_residual_sweep(SolutionBranch(P2, 1), DEFAULT, scheme=FDScheme(2, 1e-3))
    assert rep.max_rel_residual <= 1e-4
    rep = pde_residual_sweep(SolutionBranch(P2, 1), DEFAULT)
    assert 1.5 <= rep.observed_order <= 2.5 and 1.5 <= rep.observed_order_fine <= 2.5
    assert rep.verdict == "CONSISTENT"


def test_constant_fake_branch_has_zero_residual():
    rep = pde_residual_sweep(SolutionBranch(P2, 1), DEFAULT, field_fn=lambda p: 1.0)
    assert rep.max_abs_residual == 0.0
    assert math.isnan(rep.observed_order)


def test_non_solution_is_inconsistent():
    rep = pde_residual_sweep(SolutionBranch(P2, 1), DEFAULT,
                             field_fn=lambda p: math.exp(-p.x * p.x / p.t))
    assert rep.verdict == "INCONSISTENT"
    assert abs(rep.observed_order) < 0.5


def test_points_outside_domain_are_recorded():
    grid = [Point(1.0, t=1.0), Point(1e-4, t=1.0)]
    rep = pde_residual_sweep(SolutionBranch(P2, 1), DEFAULT, grid)
    assert rep.per_point[1].error.startswith("DomainError")
    assert rep.verdict == "CONSISTENT"
    rep = pde_residual_sweep(SolutionBranch(P2, 1), DEFAULT, [Point(1e-4, t=1.0)])
    assert rep.verdict == "ERROR"


def test_parallel_sweep_is_identical():
    b = SolutionBranch(P3, 2)
    seq = pde_residual_sweep(b, DEFAULT)
    par = pde_residual_sweep(b, DEFAULT, workers=4)
    assert seq.per_point == par.per_point
    assert seq.summary() == par.summary()


def test_summary_keys():
    rep = pde_residual_sweep(SolutionBranch(F6, 1), DEFAULT)
    assert set(rep.summary()) == {"family", "branch", "params", "max_abs_residual",
                                  "max_rel_residual", "observed_order", "verdict"}


def test_ode_examples():
    prm = FamilyParams(alpha=0.3)
    rep = ode_residual(P2, 1, prm, [(0.0,)])
    assert rep.max_abs_residual == 0.0
    rep = ode_residual(P2, 1, prm, [(-0.1,), (-1.0,), (-5.0,)])
    assert rep.max_rel_residual <= 1e-10
    rep = ode_residual(T5, 1, FamilyParams(n=1.0, m=1.0), [(-0.3, -0.7)])
    assert rep.max_rel_residual <= 1e-9 and rep.verdict == "CONSISTENT"


def test_ode_residual_tracks_series_tolerance():
    from selfsim.hyperfun import EvalOptions

    pts = [(-0.3, -0.7), (-1.0, -0.5)]
    loose = ode_residual(P3, 4, DEFAULT, pts, EvalOptions(rel_tol=1e-8))
    tight = ode_residual(P3, 4, DEFAULT, pts, EvalOptions(rel_tol=1e-12))
    assert tight.max_abs_residual * 10 <= loose.max_abs_residual


@pytest.mark.parametrize("family", list(PdeFamilyId))
def test_ode_default_points_all_branches(family):
    from selfsim.families import list_branches

    for info in list_branches(family):
        rep = ode_residual(family, info.branch, DEFAULT)
        assert rep.verdict == "CONSISTENT", (family, info.index, rep.max_rel_residual)
        assert len(rep.per_point) == 3


def test_ode_outside_domain_is_error():
    rep = ode_residual(T4, 1, DEFAULT, [(-1.5,)])
    assert rep.per_point[0].error.startswith("DomainError") and rep.verdict == "ERROR"


def test_adjudication_p3():
    rep = adjudicate_prefactors(P3, DEFAULT)
    (entry,) = rep.entries
    assert entry.branch == 4
    assert entry.canonical.verdict == "CONSISTENT"
    assert entry.printed.verdict == "INCONSISTENT"
    assert not entry.proportional
    assert entry.summary()["consistent"] == ["P*omega"]


def test_adjudication_rejects_undisputed_family():
    with pytest.raises(ValueError):
        adjudicate_prefactors(P2, DEFAULT)
