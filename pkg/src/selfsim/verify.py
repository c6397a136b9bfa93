"""Residual checks for the solution branches.

Two independent checks are offered:

* ``pde_residual_sweep`` applies the family's operator with second-order
  central differences at steps h, h/2 and h/4 and reports how the residual
  shrinks.  A genuine solution shows the stencil order (ratio ~4 per
  halving); a field that is not a solution levels off at a nonzero value.
* ``ode_residual`` plugs omega and its series derivatives into the reduced
  equation(s) in the similarity variables.  Those are exact identities,
  so the residual is rounding noise only.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .families import (
    COORDINATES,
    DISPUTED,
    OPERATOR_ORDER,
    FamilyParams,
    PdeFamilyId,
    Point,
    SolutionBranch,
    branch_form,
    derived_exponents,
    eval_branch,
    eval_printed_form,
    similarity_map,
)
from .hyperfun import EvalOptions

# Field evaluation for differencing: sum until the tail is below rounding,
# otherwise truncation jumps between stencil points get amplified by 1/h^k.
FIELD_OPTIONS = EvalOptions(rel_tol=1e-16, max_terms=10_000)

NOISE_FLOOR = 1e-12
MIN_RATIO = 3.0
ODE_TOLERANCE = 1e-9

# Default base step by highest derivative order.  A k-th difference loses
# about eps/h^k to rounding, which at h = 1e-3 already swamps the h^2 signal.
DEFAULT_STEP = {1: 1e-2, 2: 1e-2, 3: 1e-2, 4: 2e-2}

# offset -> weight; all second-order accurate
_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}


@dataclass(frozen=True)
class FDScheme:
    order_required: int
    h: float

    def __post_init__(self):
        if self.order_required not in (1, 2, 3, 4):
            raise ValueError("order_required must be 1..4")
        if not self.h > 0:
            raise ValueError("h must be positive")

    @property
    def width(self) -> int:
        return 2 * math.ceil(self.order_required / 2) + 1

    def step(self, coord: float) -> float:
        """Per-axis step: h, grown proportionally for large coordinates."""
        return self.h * max(1.0, 0.1 * abs(coord))

    def refined(self, factor: float) -> "FDScheme":
        return FDScheme(self.order_required, self.h / factor)


def default_scheme(family) -> FDScheme:
    order = OPERATOR_ORDER[PdeFamilyId.parse(family)]
    return FDScheme(order, DEFAULT_STEP[order])


class _Differ:
    """Central differences of a field around one point, with memoised samples."""

    def __init__(self, family, field_fn, p: Point, scheme: FDScheme):
        self.family = family
        self.field = field_fn
        self.names = COORDINATES[family]
        self.base = p.coords(family)
        self.scheme = scheme
        self.cache: dict[tuple, float] = {}
        reach = scheme.width // 2
        for name, v in zip(self.names, self.base):
            if v - reach * scheme.step(v) <= 0.0:
                raise DomainError(f"stencil leaves the domain along {name} at {v}")

    def _sample(self, coords):
        if coords not in self.cache:
            self.cache[coords] = self.field(Point.from_coords(self.family, coords))
        return self.cache[coords]

    def d(self, axis: str, order: int) -> float:
        i = self.names.index(axis)
        h = self.scheme.step(self.base[i])
        total = 0.0
        for offset, w in _STENCILS[order]:
            c = list(self.base)
            c[i] = self.base[i] + offset * h
            total += w * self._sample(tuple(c))
        return total / h ** order


def _operator_terms(family, params: FamilyParams, d, p: Point) -> list[float]:
    """Individual terms of L u; ``d(axis, order)`` supplies derivatives."""
    x, y, t = p.x, p.y, p.t
    if family is PdeFamilyId.P0:
        nu = params.nu
        return [d("t", 1), -nu * d("x", 2), -nu * d("x", 1) / x]
    if family is PdeFamilyId.P2:
        a = params.alpha
        return [d("t", 1), -d("x", 2), -2 * a / x * d("x", 1)]
    if family is PdeFamilyId.P3:
        a, b = params.alpha, params.beta
        return [d("t", 1), -d("x", 2), -d("y", 2),
                -2 * a / x * d("x", 1), -2 * b / y * d("y", 1)]
    if family is PdeFamilyId.T4:
        return [y ** params.m * d("x", 3), -d("y", 3)]
    if family is PdeFamilyId.T5:
        xn, ym, tk = x ** params.n, y ** params.m, t ** params.k
        return [xn * ym * d("t", 1), -tk * ym * d("x", 3), -tk * xn * d("y", 3)]
    return [x ** params.n * d("t", 1), -t ** params.k * d("x", 4)]


def operator_terms(family, params: FamilyParams, field_fn: Callable[[Point], float],
                   p: Point, scheme: FDScheme | None = None) -> list[float]:
    family = PdeFamilyId.parse(family)
    scheme = scheme or default_scheme(family)
    if scheme.order_required < OPERATOR_ORDER[family]:
        raise ValueError(
            f"family {family.value} needs derivatives of order {OPERATOR_ORDER[family]}"
        )
    differ = _Differ(family, field_fn, p, scheme)
    return _operator_terms(family, params, differ.d, p)


def apply_operator(family, params: FamilyParams, field_fn: Callable[[Point], float],
                   p: Point, scheme: FDScheme | None = None) -> float:
    """L[field](p) with every derivative replaced by a central difference."""
    return math.fsum(operator_terms(family, params, field_fn, p, scheme))


def analytic_operator_terms(branch: SolutionBranch, params: FamilyParams, p: Point,
                            opts: EvalOptions | None = FIELD_OPTIONS) -> list[float]:
    """Operator terms from chain-rule derivatives of P * omega (P0, P2, P3)."""
    family = branch.family
    if family not in (PdeFamilyId.P0, PdeFamilyId.P2, PdeFamilyId.P3):
        raise ValueError("analytic derivatives are wired for P0, P2 and P3 only")
    frame = similarity_map(family, params, p)
    form = branch_form(branch, params)
    c = branch.constant
    v = frame.variables
    x, y, t = p.x, p.y, p.t
    if family is not PdeFamilyId.P3:
        w0, w1, w2 = (form.derivative(v, (j,), opts) for j in range(3))
        s = v[0]
        # both P0 and P2 have P ~ 1/t^q and s ~ x^2 / t
        q = 1.0 if family is PdeFamilyId.P0 else 0.5
        P = frame.P
        s_x, s_xx, s_t = 2 * s / x, 2 * s / x ** 2, -s / t
        u_t = c * (-q * P / t * w0 + P * w1 * s_t)
        u_x = c * P * w1 * s_x
        u_xx = c * P * (w2 * s_x ** 2 + w1 * s_xx)
        if family is PdeFamilyId.P0:
            nu = params.nu
            return [u_t, -nu * u_xx, -nu * u_x / x]
        a = params.alpha
        return [u_t, -u_xx, -2 * a / x * u_x]
    xi, eta = v
    P = frame.P
    w = {o: form.derivative(v, o, opts)
         for o in ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2))}
    u_t = c * (-0.5 * P / t * w[0, 0] + P * (w[1, 0] * (-xi / t) + w[0, 1] * (-eta / t)))
    u_x = c * P * w[1, 0] * 2 * xi / x
    u_y = c * P * w[0, 1] * 2 * eta / y
    u_xx = c * P * (w[2, 0] * (2 * xi / x) ** 2 + w[1, 0] * 2 * xi / x ** 2)
    u_yy = c * P * (w[0, 2] * (2 * eta / y) ** 2 + w[0, 1] * 2 * eta / y ** 2)
    a, b = params.alpha, params.beta
    return [u_t, -u_xx, -u_yy, -2 * a / x * u_x, -2 * b / y * u_y]


@dataclass
class PointResidual:
    coords: tuple[float, ...]
    residual: float = math.nan
    rel_residual: float = math.nan
    residual_half: float = math.nan
    residual_quarter: float = math.nan
    ratio: float = math.nan
    error: Optional[str] = None


@dataclass
class ResidualReport:
    family: PdeFamilyId
    branch: Optional[int]
    params: dict
    grid: str
    h: Optional[float]
    max_abs_residual: float
    max_rel_residual: float
    per_point: list[PointResidual] = field(default_factory=list)
    observed_order: float = math.nan
    observed_order_fine: float = math.nan
    min_ratio: float = math.nan
    verdict: str = "ERROR"
    label: str = "P*omega"

    def summary(self) -> dict:
        def num(v):
            return None if v is None or not math.isfinite(v) else v

        return {
            "family": self.family.value,
            "branch": self.branch,
            "params": self.params,
            "max_abs_residual": num(self.max_abs_residual),
            "max_rel_residual": num(self.max_rel_residual),
            "observed_order": num(self.observed_order),
            "verdict": self.verdict,
        }


def _order(coarse: float, fine: float) -> float:
    if not (fine > NOISE_FLOOR and coarse > 0):
        return math.nan
    return math.log2(coarse / fine)


def _sweep_point(family, params, field_fn, p, scheme):
    rec = PointResidual(p.coords(family))
    try:
        res = []
        for factor in (1.0, 2.0, 4.0):
            terms = operator_terms(family, params, field_fn, p, scheme.refined(factor))
            res.append((math.fsum(terms), max(abs(v) for v in terms)))
    except (DomainError, ConvergenceError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    (r1, scale), (r2, _), (r4, _) = res
    rec.residual, rec.residual_half, rec.residual_quarter = r1, r2, r4
    rec.rel_residual = abs(r1) / scale if scale > 0 else 0.0
    rec.ratio = abs(r1) / abs(r2) if r2 != 0 else math.inf
    return rec


def pde_residual_sweep(branch: SolutionBranch, params: FamilyParams,
                       grid: Sequence[Point] | None = None,
                       scheme: FDScheme | None = None, *,
                       field_fn: Callable[[Point], float] | None = None,
                       opts: EvalOptions = FIELD_OPTIONS, workers: int = 1,
                       label: str = "P*omega") -> ResidualReport:
    """Finite-difference residual of a branch (or ``field_fn``) over a grid.

    Each point is differenced at h, h/2 and h/4.  A point fails when its
    residual is above the noise floor and drops by less than ``MIN_RATIO``
    from h to h/2.  Points that leave an evaluator's domain are recorded,
    not raised.  With ``workers > 1`` points are farmed out to threads; the
    per-point results and all statistics are independent of scheduling.
    """
    family = branch.family
    scheme = scheme or default_scheme(family)
    grid = list(grid) if grid is not None else default_grid(family, params, scheme=scheme)
    if field_fn is None:
        def field_fn(p, _b=branch):
            return eval_branch(_b, params, p, opts)

    def run(p):
        return _sweep_point(family, params, field_fn, p, scheme)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, grid))
    else:
        records = [run(p) for p in grid]

    good = [r for r in records if r.error is None]
    report = ResidualReport(
        family=family, branch=branch.index, params=params.to_dict(),
        grid=f"{len(grid)} points", h=scheme.h,
        max_abs_residual=max((abs(r.residual) for r in good), default=math.nan),
        max_rel_residual=max((r.rel_residual for r in good), default=math.nan),
        per_point=records, label=label,
    )
    if not good:
        return report
    e1 = report.max_abs_residual
    e2 = max(abs(r.residual_half) for r in good)
    e4 = max(abs(r.residual_quarter) for r in good)
    report.observed_order = _order(e1, e2)
    report.observed_order_fine = _order(e2, e4)
    checked = [r.ratio for r in good if abs(r.residual) > NOISE_FLOOR]
    report.min_ratio = min(checked, default=math.inf)
    report.verdict = "CONSISTENT" if report.min_ratio >= MIN_RATIO else "INCONSISTENT"
    return report


def default_grid(family, params: FamilyParams, count: int = 5, lo: float = 0.5,
                 hi: float = 2.0, scheme: FDScheme | None = None) -> list[Point]:
    """Log-spaced tensor grid in [lo, hi] on every coordinate.

    Points within 5 steps of a degeneracy line are dropped.  For T4 only
    points with |sigma| <= 0.9 are kept, so every stencil sample stays
    inside the unit disk of the Gauss/Clausen series.
    """
    family = PdeFamilyId.parse(family)
    scheme = scheme or default_scheme(family)
    axis = np.geomspace(lo, hi, count) if count > 1 else np.array([lo])
    names = COORDINATES[family]
    mesh = np.meshgrid(*([axis] * len(names)), indexing="ij")
    out = []
    for coords in zip(*(m.ravel() for m in mesh)):
        if any(c < 5 * scheme.step(c) for c in coords):
            continue
        p = Point.from_coords(family, coords)
        if family is PdeFamilyId.T4 and abs(similarity_map(family, params, p).sigma) > 0.9:
            continue
        out.append(p)
    return out


def make_grid(family, axes: dict) -> list[Point]:
    """Tensor grid from ``{name: (lo, hi, count, log)}`` per coordinate."""
    family = PdeFamilyId.parse(family)
    values = []
    for name in COORDINATES[family]:
        if name not in axes:
            raise ValueError(f"grid for family {family.value} needs axis {name}")
        lo, hi, count, log = axes[name]
        if count < 1:
            raise ValueError("grid counts must be >= 1")
        if count > 1 and not lo < hi:
            raise ValueError(f"axis {name}: min must be below max")
        if count == 1:
            values.append(np.array([lo]))
        elif log:
            values.append(np.geomspace(lo, hi, count))
        else:
            values.append(np.linspace(lo, hi, count))
    mesh = np.meshgrid(*values, indexing="ij")
    return [Point.from_coords(family, c) for c in zip(*(m.ravel() for m in mesh))]


# --- reduced equations -------------------------------------------------------

DEFAULT_SIMILARITY_POINTS = {
    PdeFamilyId.P0: [(0.1,), (1.0,), (5.0,)],
    PdeFamilyId.P2: [(-0.1,), (-1.0,), (-5.0,)],
    PdeFamilyId.P3: [(-0.1, -0.2), (-0.5, -0.3), (-1.0, -0.7)],
    PdeFamilyId.T4: [(-0.1,), (-0.5,), (-0.9,)],
    PdeFamilyId.T5: [(-0.3, -0.7), (-0.1, -0.2), (-1.0, -0.5)],
    PdeFamilyId.F6: [(-0.1,), (-1.0,), (-3.0,)],
}


def reduced_equation_terms(family, params: FamilyParams, v, d) -> list[list[float]]:
    """Terms of the reduced equation(s); ``d(*orders)`` gives omega derivatives."""
    family = PdeFamilyId.parse(family)
    alpha, beta = derived_exponents(family, params)
    if family is PdeFamilyId.P0:
        (s,) = v
        return [[4 * s * d(2), 4 * d(1), s * d(1), d(0)]]
    if family is PdeFamilyId.P2:
        (s,) = v
        c = (1 + 2 * alpha) / 2
        return [[s * d(2), c * d(1), -s * d(1), -0.5 * d(0)]]
    if family is PdeFamilyId.P3:
        xi, eta = v
        c1, c2 = (1 + 2 * alpha) / 2, (1 + 2 * beta) / 2
        w = d(0, 0)
        return [
            [xi * d(2, 0), c1 * d(1, 0), -xi * d(1, 0), -eta * d(0, 1), -0.5 * w],
            [eta * d(0, 2), c2 * d(0, 1), -eta * d(0, 1), -xi * d(1, 0), -0.5 * w],
        ]
    if family is PdeFamilyId.T4:
        (s,) = v
        a1, a2, a3 = 1.0, 4 / 3, 5 / 3
        c1, c2 = (2 + beta) / 3, (1 + 2 * beta) / 3
        e1 = a1 + a2 + a3
        e2 = a1 * a2 + a1 * a3 + a2 * a3
        w3, w2, w1 = d(3), d(2), d(1)
        return [[s * s * w3, -s ** 3 * w3, (c1 + c2 + 1) * s * w2, -(3 + e1) * s * s * w2,
                 c1 * c2 * w1, -(1 + e1 + e2) * s * w1, -a1 * a2 * a3 * d(0)]]
    if family is PdeFamilyId.T5:
        xi, eta = v
        c1, c2 = (2 + alpha) / 3, (1 + 2 * alpha) / 3
        d1, d2 = (2 + beta) / 3, (1 + 2 * beta) / 3
        w, wx, wy = d(0, 0), d(1, 0), d(0, 1)
        return [
            [xi * xi * d(3, 0), (c1 + c2 + 1) * xi * d(2, 0), c1 * c2 * wx, -xi * wx,
             -eta * wy, -w],
            [eta * eta * d(0, 3), (d1 + d2 + 1) * eta * d(0, 2), d1 * d2 * wy, -eta * wy,
             -xi * wx, -w],
        ]
    (s,) = v
    c1, c2, c3 = (3 + alpha) / 4, (2 + 2 * alpha) / 4, (1 + 3 * alpha) / 4
    e1 = c1 + c2 + c3
    e2 = c1 * c2 + c1 * c3 + c2 * c3
    return [[s ** 3 * d(4), (3 + e1) * s * s * d(3), (1 + e1 + e2) * s * d(2),
             c1 * c2 * c3 * d(1), -s * d(1), -d(0)]]


def ode_residual(family, branch, params: FamilyParams,
                 sigma_points: Sequence[Sequence[float]] | None = None,
                 opts: EvalOptions | None = None,
                 tolerance: float = ODE_TOLERANCE) -> ResidualReport:
    """Reduced-equation residuals of a branch's omega at similarity points.

    ``residual`` is the largest |equation| and ``rel_residual`` the largest
    |equation| / max|term| over the equations of the system.
    """
    family = PdeFamilyId.parse(family)
    if not isinstance(branch, SolutionBranch):
        branch = SolutionBranch(family, int(branch))
    form = branch_form(branch, params)
    points = sigma_points if sigma_points is not None else DEFAULT_SIMILARITY_POINTS[family]
    records = []
    for v in points:
        v = tuple(float(c) for c in v)
        rec = PointResidual(v)
        try:
            eqs = reduced_equation_terms(
                family, params, v, lambda *o: form.derivative(v, o, opts))
        except (DomainError, ConvergenceError) as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
            records.append(rec)
            continue
        sums = [math.fsum(terms) for terms in eqs]
        scales = [max(abs(t) for t in terms) for terms in eqs]
        rec.residual = max(abs(s) for s in sums)
        rec.rel_residual = max(abs(s) / sc if sc > 0 else 0.0 for s, sc in zip(sums, scales))
        records.append(rec)
    good = [r for r in records if r.error is None]
    report = ResidualReport(
        family=family, branch=branch.index, params=params.to_dict(),
        grid=f"{len(records)} similarity points", h=None,
        max_abs_residual=max((r.residual for r in good), default=math.nan),
        max_rel_residual=max((r.rel_residual for r in good), default=math.nan),
        per_point=records, label="reduced equation",
    )
    if good and len(good) == len(records):
        report.verdict = "CONSISTENT" if report.max_rel_residual <= tolerance else "INCONSISTENT"
    return report


# --- prefactor adjudication --------------------------------------------------


@dataclass
class AdjudicationEntry:
    branch: int
    canonical: ResidualReport
    printed: ResidualReport
    proportional: bool
    ratio_spread: float

    @property
    def consistent_forms(self) -> list[str]:
        return [r.label for r in (self.canonical, self.printed) if r.verdict == "CONSISTENT"]

    def summary(self) -> dict:
        return {
            "branch": self.branch,
            "proportional": self.proportional,
            "ratio_spread": self.ratio_spread,
            "forms": {r.label: r.summary() for r in (self.canonical, self.printed)},
            "consistent": self.consistent_forms,
        }


@dataclass
class AdjudicationReport:
    family: PdeFamilyId
    params: dict
    entries: list[AdjudicationEntry]

    def summary(self) -> dict:
        return {"family": self.family.value, "params": self.params,
                "entries": [e.summary() for e in self.entries]}


def adjudicate_prefactors(family, params: FamilyParams,
                          grid: Sequence[Point] | None = None,
                          scheme: FDScheme | None = None,
                          opts: EvalOptions = FIELD_OPTIONS) -> AdjudicationReport:
    """Run the residual sweep on both the P*omega and the printed form of
    every disputed branch of ``family``.

    ``proportional`` records whether the two fields differ only by a
    constant factor over the grid; then both must behave alike.
    """
    family = PdeFamilyId.parse(family)
    if family not in DISPUTED:
        raise ValueError(
            f"no disputed branches for family {family.value}; "
            f"choose one of {', '.join(f.value for f in DISPUTED)}"
        )
    scheme = scheme or default_scheme(family)
    grid = list(grid) if grid is not None else default_grid(family, params, scheme=scheme)
    entries = []
    for idx in DISPUTED[family]:
        branch = SolutionBranch(family, idx)

        def printed(p, _b=branch):
            return eval_printed_form(_b, params, p, opts)

        canonical = pde_residual_sweep(branch, params, grid, scheme, opts=opts)
        alt = pde_residual_sweep(branch, params, grid, scheme, field_fn=printed,
                                 opts=opts, label="printed")
        ratios = []
        for p in grid:
            try:
                ratios.append(printed(p) / eval_branch(branch, params, p, opts))
            except (DomainError, ConvergenceError, ZeroDivisionError):
                continue
        ratios = np.asarray(ratios)
        spread = (float(np.ptp(ratios) / np.max(np.abs(ratios)))
                  if ratios.size else math.nan)
        entries.append(AdjudicationEntry(idx, canonical, alt, bool(spread < 1e-9), spread))
    return AdjudicationReport(family, params.to_dict(), entries)
