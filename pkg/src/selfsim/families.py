"""PDE families, similarity variables and self-similar solution branches.

Each branch is ``constant * P * omega``, where ``P`` is the family's
prefactor and ``omega`` is a power of the similarity variable(s) times a
hypergeometric series.  Powers of negative similarity variables are taken
as ``|v|**e``; the discarded phase is a constant and is absorbed into the
branch constant.

Operators (all linear, written as ``L u = 0``)::

    P0  u_t - nu (u_rr + u_r / r)
    P2  u_t - u_xx - (2 alpha / x) u_x
    P3  u_t - u_xx - u_yy - (2 alpha / x) u_x - (2 beta / y) u_y
    T4  y^m u_xxx - u_yyy
    T5  x^n y^m u_t - t^k y^m u_xxx - t^k x^n u_yyy
    F6  x^n u_t - t^k u_xxxx
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import DomainError
from .hyperfun import (
    EvalOptions,
    KdFSpec,
    PFQSpec,
    Psi2Spec,
    eval_kdf,
    eval_pfq,
    kdf_partial,
    pfq_derivative,
)


class PdeFamilyId(str, enum.Enum):
    P0 = "p0"
    P2 = "p2"
    P3 = "p3"
    T4 = "t4"
    T5 = "t5"
    F6 = "f6"

    @classmethod
    def parse(cls, name) -> "PdeFamilyId":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown PDE family {name!r}") from None


# independent variables, in the order used by points, grids and CSV columns
COORDINATES = {
    PdeFamilyId.P0: ("x", "t"),
    PdeFamilyId.P2: ("x", "t"),
    PdeFamilyId.P3: ("x", "y", "t"),
    PdeFamilyId.T4: ("x", "y"),
    PdeFamilyId.T5: ("x", "y", "t"),
    PdeFamilyId.F6: ("x", "t"),
}

# highest derivative order appearing in each operator
OPERATOR_ORDER = {
    PdeFamilyId.P0: 2,
    PdeFamilyId.P2: 2,
    PdeFamilyId.P3: 2,
    PdeFamilyId.T4: 3,
    PdeFamilyId.T5: 3,
    PdeFamilyId.F6: 4,
}

TWO_VARIABLE = (PdeFamilyId.P3, PdeFamilyId.T5)


@dataclass(frozen=True)
class FamilyParams:
    """Coefficients of all families; each family reads the ones it needs.

    ``alpha``/``beta`` are inputs for P2 and P3 only.  T4, T5 and F6 derive
    them from ``m`` and ``n`` (see :func:`derived_exponents`).  For P0,
    ``x`` is the radius, ``nu`` the viscosity and ``E_amp`` the product of
    the amplitude constants.
    """

    alpha: float = 0.3
    beta: float = 0.4
    m: float = 1.0
    n: float = 1.0
    k: float = 1.0
    nu: float = 1.0
    E_amp: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Point:
    x: float
    y: Optional[float] = None
    t: Optional[float] = None

    def coords(self, family: PdeFamilyId) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in COORDINATES[family])

    @classmethod
    def from_coords(cls, family: PdeFamilyId, values) -> "Point":
        return cls(**dict(zip(COORDINATES[family], (float(v) for v in values))))


@dataclass(frozen=True)
class SimilarityFrame:
    P: float
    sigma: Optional[float] = None
    xi: Optional[float] = None
    eta: Optional[float] = None

    @property
    def variables(self) -> tuple[float, ...]:
        if self.sigma is not None:
            return (self.sigma,)
        return (self.xi, self.eta)


@dataclass(frozen=True)
class SolutionBranch:
    family: PdeFamilyId
    index: int
    constant: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", PdeFamilyId.parse(self.family))
        count = len(_CATALOG[self.family])
        if not 1 <= self.index <= count:
            raise ValueError(
                f"family {self.family.value} has branches 1..{count}, got {self.index}"
            )


@dataclass(frozen=True)
class BranchInfo:
    family: PdeFamilyId
    index: int
    tag: str
    function: str
    form: str

    @property
    def branch(self) -> SolutionBranch:
        return SolutionBranch(self.family, self.index)


# (tag, function, omega) per branch; a = alpha, b = beta, s = similarity variable
_CATALOG = {
    PdeFamilyId.P0: [
        ("Eq. 1.3", "exp", "exp(-xi/4), xi = r^2/(nu t)"),
    ],
    PdeFamilyId.P2: [
        ("Eq. 2.8", "1F1", "1F1(1/2; (1+2a)/2; s)"),
        ("Eq. 2.9", "1F1", "|s|^((1-2a)/2) 1F1(1-a; (3-2a)/2; s)"),
    ],
    PdeFamilyId.P3: [
        ("Eq. 3.10", "Psi2", "Psi2(1/2; (1+2a)/2, (1+2b)/2; xi, eta)"),
        ("Eq. 3.11", "Psi2", "|xi|^((1-2a)/2) Psi2(1-a; (3-2a)/2, (1+2b)/2; xi, eta)"),
        ("Eq. 3.12", "Psi2", "|eta|^((1-2b)/2) Psi2(1-b; (1+2a)/2, (3-2b)/2; xi, eta)"),
        ("Eq. 3.13", "Psi2",
         "|xi|^((1-2a)/2) |eta|^((1-2b)/2) Psi2((3-2a-2b)/2; (3-2a)/2, (3-2b)/2; xi, eta)"),
    ],
    PdeFamilyId.T4: [
        ("Eq. 4.12", "3F2", "3F2(1, 4/3, 5/3; (2+b)/3, (1+2b)/3; s)"),
        ("Eq. 4.13", "2F1", "|s|^((1-b)/3) 2F1((5-b)/3, (6-b)/3; (2+b)/3; s)"),
        ("Eq. 4.14", "2F1", "|s|^((2-2b)/3) 2F1((6-2b)/3, (7-2b)/3; (4-b)/3; s)"),
    ],
    PdeFamilyId.T5: [
        ("Eq. 5.16", "KdF", "F[1; c1, c2; d1, d2; xi, eta]"),
        ("Eq. 5.17", "KdF", "|eta|^(1-d1) F[2-d1; c1, c2; 2-d1, 1+d2-d1]"),
        ("Eq. 5.18", "KdF", "|eta|^(1-d2) F[3-d2; c1, c2; 1+d1-d2, 2-d2]"),
        ("Eq. 5.19", "KdF", "|xi|^(1-c1) F[2-c1; 2-c1, 1+c2-c1; d1, d2]"),
        ("Eq. 5.20", "KdF", "|xi|^(1-c1) |eta|^(1-d1) F[3-c1-d1; 2-c1, 1+c2-c1; 2-d1, 1+d2-d1]"),
        ("Eq. 5.21", "KdF", "|xi|^(1-c1) |eta|^(1-d2) F[3-c1-d2; 2-c1, 1+c2-c1; 1+d1-d2, 2-d2]"),
        ("Eq. 5.22", "KdF", "|xi|^(1-c2) F[2-c2; 1+c1-c2, 2-c2; d1, d2]"),
        ("Eq. 5.23", "KdF", "|xi|^(1-c2) |eta|^(1-d1) F[3-c2-d1; 1+c1-c2, 2-c2; 2-d1, 1+d2-d1]"),
        ("Eq. 5.24", "KdF", "|xi|^(1-c2) |eta|^(1-d2) F[3-c2-d2; 1+c1-c2, 2-c2; 1+d1-d2, 2-d2]"),
    ],
    PdeFamilyId.F6: [
        ("Eq. 6.11", "1F3", "1F3(1; c1, c2, c3; s)"),
        ("Eq. 6.12", "1F3", "|s|^(1-c1) 1F3(2-c1; 2-c1, 1+c2-c1, 1+c3-c1; s)"),
        ("Eq. 6.13", "1F3", "|s|^(1-c2) 1F3(2-c2; 1+c1-c2, 2-c2, 1+c3-c2; s)"),
        ("Eq. 6.14", "1F3", "|s|^(1-c3) 1F3(2-c3; 1+c1-c3, 1+c2-c3, 2-c3; s)"),
    ],
}


def list_branches(family) -> list[BranchInfo]:
    family = PdeFamilyId.parse(family)
    return [BranchInfo(family, i + 1, tag, fn, form)
            for i, (tag, fn, form) in enumerate(_CATALOG[family])]


def derived_exponents(family, params: FamilyParams):
    """Return ``(alpha, beta)`` for the family; ``None`` where unused."""
    family = PdeFamilyId.parse(family)
    if family in (PdeFamilyId.T4, PdeFamilyId.T5) and not params.m > 0:
        raise DomainError(f"m must be positive, got {params.m}")
    if family in (PdeFamilyId.T5, PdeFamilyId.F6) and not params.n > 0:
        raise DomainError(f"n must be positive, got {params.n}")
    if family is PdeFamilyId.P0:
        return None, None
    if family in (PdeFamilyId.P2, PdeFamilyId.P3):
        return params.alpha, params.beta
    if family is PdeFamilyId.T4:
        return None, params.m / (params.m + 3.0)
    if family is PdeFamilyId.T5:
        return params.n / (params.n + 3.0), params.m / (params.m + 3.0)
    return params.n / (params.n + 4.0), None


def _require_positive(**coords):
    for name, v in coords.items():
        if v is None:
            raise DomainError(f"coordinate {name} is required")
        if not (math.isfinite(v) and v > 0):
            raise DomainError(f"{name} = {v!r} is outside the domain ({name} > 0)")


def check_point(family, p: Point) -> None:
    family = PdeFamilyId.parse(family)
    names = COORDINATES[family]
    for extra in {"y", "t"} - set(names):
        if getattr(p, extra) is not None:
            raise DomainError(f"family {family.value} has no coordinate {extra}")
    _require_positive(**{n: getattr(p, n) for n in names})


def similarity_map(family, params: FamilyParams, p: Point) -> SimilarityFrame:
    family = PdeFamilyId.parse(family)
    check_point(family, p)
    x, y, t = p.x, p.y, p.t
    if family is PdeFamilyId.P0:
        if not params.nu > 0:
            raise DomainError("nu must be positive")
        # single variable r^2 / (nu t), stored as sigma
        return SimilarityFrame(P=params.E_amp / (params.nu * t),
                               sigma=x * x / (params.nu * t))
    if family is PdeFamilyId.P2:
        return SimilarityFrame(P=t ** -0.5, sigma=-x * x / (4.0 * t))
    if family is PdeFamilyId.P3:
        return SimilarityFrame(P=t ** -0.5, xi=-x * x / (8.0 * t), eta=-y * y / (8.0 * t))
    if family is PdeFamilyId.T4:
        m = params.m
        base = -3.0 / (x * (m + 3.0)) * y ** ((m + 3.0) / 3.0)
        return SimilarityFrame(P=x ** -3.0, sigma=base ** 3)
    k1 = params.k + 1.0
    if not k1 > 0:
        raise DomainError("k must exceed -1")
    tk = t ** k1
    if family is PdeFamilyId.T5:
        n, m = params.n, params.m
        return SimilarityFrame(
            P=1.0 / (2.0 / k1 * tk),
            xi=-k1 / (2.0 * (n + 3.0) ** 3 * tk) * x ** (n + 3.0),
            eta=-k1 / (2.0 * (m + 3.0) ** 3 * tk) * y ** (m + 3.0),
        )
    n = params.n
    return SimilarityFrame(P=1.0 / (tk / k1),
                           sigma=-k1 / ((n + 4.0) ** 4 * tk) * x ** (n + 4.0))


def _power_derivative(s: float, e: float, order: int) -> float:
    """d^order/ds^order of |s|**e."""
    if e == 0.0:
        return 1.0 if order == 0 else 0.0
    if s == 0.0:
        if order == 0 and e > 0:
            return 0.0
        raise DomainError("power factor is singular at a zero similarity variable")
    falling = 1.0
    for i in range(order):
        falling *= e - i
    return falling * abs(s) ** e / s ** order


@dataclass(frozen=True)
class BranchForm:
    """omega = prod |v_i|**powers[i] * H(v), H an exp, pFq or KdF series."""

    kind: str
    powers: tuple[float, ...]
    spec: object = None
    rate: float = 0.0

    def _series(self, v, orders, opts):
        if self.kind == "exp":
            return self.rate ** orders[0] * math.exp(self.rate * v[0])
        if self.kind == "pfq":
            return pfq_derivative(self.spec, v[0], orders[0], opts).require()
        return kdf_partial(self.spec, v[0], v[1], orders[0], orders[1], opts).require()

    def value(self, v, opts=None) -> float:
        return self.derivative(v, (0,) * len(v), opts)

    def derivative(self, v, orders, opts=None) -> float:
        """Partial derivative of omega by Leibniz' rule."""
        v = tuple(v)
        if len(v) == 1:
            (j,) = orders
            return sum(math.comb(j, i) * _power_derivative(v[0], self.powers[0], i)
                       * self._series(v, (j - i,), opts) for i in range(j + 1))
        i, j = orders
        total = 0.0
        for a in range(i + 1):
            ga = _power_derivative(v[0], self.powers[0], a)
            if ga == 0.0:
                continue
            for b in range(j + 1):
                gb = _power_derivative(v[1], self.powers[1], b)
                if gb == 0.0:
                    continue
                total += (math.comb(i, a) * math.comb(j, b) * ga * gb
                          * self._series(v, (i - a, j - b), opts))
        return total


def _psi2(a, c1, c2):
    return Psi2Spec(a, c1, c2).as_kdf()


def _t5_parts(alpha, beta):
    c = ((2 + alpha) / 3, (1 + 2 * alpha) / 3)
    d = ((2 + beta) / 3, (1 + 2 * beta) / 3)
    return c, d


def _t5_generic(alpha, beta, index, printed=False):
    """Solution ``index`` of the two-variable system with a = 1.

    ``printed=True`` flips the sign of the joint parameter of the four
    doubly-shifted solutions (the variant that appears in print).
    """
    a = 1.0
    (c1, c2), (d1, d2) = _t5_parts(alpha, beta)
    x_choices = [((c1, c2), 0.0),
                 ((2 - c1, 1 + c2 - c1), 1 - c1),
                 ((1 + c1 - c2, 2 - c2), 1 - c2)]
    y_choices = [((d1, d2), 0.0),
                 ((2 - d1, 1 + d2 - d1), 1 - d1),
                 ((1 + d1 - d2, 2 - d2), 1 - d2)]
    ix, iy = _T5_ORDER[index - 1]
    (xl, ex), (yl, ey) = x_choices[ix], y_choices[iy]
    joint = a + ex + ey
    if printed and ix and iy:
        joint = -joint
    return BranchForm("kdf", (ex, ey), KdFSpec((joint,), (), (), (), xl, yl))


def _f6_parts(alpha):
    return ((3 + alpha) / 4, (2 + 2 * alpha) / 4, (1 + 3 * alpha) / 4)


_T5_ORDER = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)]


def _shift_mask(family, idx):
    if family is PdeFamilyId.P3:
        return ((False, False), (True, False), (False, True), (True, True))[idx - 1]
    if family is PdeFamilyId.T5:
        return tuple(bool(v) for v in _T5_ORDER[idx - 1])
    return (idx > 1,)


def branch_form(branch: SolutionBranch, params: FamilyParams) -> BranchForm:
    """The omega of ``branch`` as a power-times-series form."""
    family, idx = branch.family, branch.index
    alpha, beta = derived_exponents(family, params)
    if family is PdeFamilyId.P0:
        form = BranchForm("exp", (0.0,), rate=-0.25)
    elif family is PdeFamilyId.P2:
        if idx == 1:
            form = BranchForm("pfq", (0.0,), PFQSpec((0.5,), ((1 + 2 * alpha) / 2,)))
        else:
            form = BranchForm("pfq", ((1 - 2 * alpha) / 2,),
                              PFQSpec((1 - alpha,), ((3 - 2 * alpha) / 2,)))
    elif family is PdeFamilyId.P3:
        c1, c2 = (1 + 2 * alpha) / 2, (1 + 2 * beta) / 2
        ex, ey = 1 - c1, 1 - c2
        form = [
            BranchForm("kdf", (0.0, 0.0), _psi2(0.5, c1, c2)),
            BranchForm("kdf", (ex, 0.0), _psi2(0.5 + ex, 2 - c1, c2)),
            BranchForm("kdf", (0.0, ey), _psi2(0.5 + ey, c1, 2 - c2)),
            BranchForm("kdf", (ex, ey), _psi2(0.5 + ex + ey, 2 - c1, 2 - c2)),
        ][idx - 1]
    elif family is PdeFamilyId.T4:
        b = beta
        form = [
            BranchForm("pfq", (0.0,), PFQSpec((1.0, 4 / 3, 5 / 3), ((2 + b) / 3, (1 + 2 * b) / 3))),
            BranchForm("pfq", ((1 - b) / 3,), PFQSpec(((5 - b) / 3, (6 - b) / 3), ((2 + b) / 3,))),
            BranchForm("pfq", ((2 - 2 * b) / 3,),
                       PFQSpec(((6 - 2 * b) / 3, (7 - 2 * b) / 3), ((4 - b) / 3,))),
        ][idx - 1]
    elif family is PdeFamilyId.T5:
        form = _t5_generic(alpha, beta, idx)
    else:
        c1, c2, c3 = _f6_parts(alpha)
        if idx == 1:
            form = BranchForm("pfq", (0.0,), PFQSpec((1.0,), (c1, c2, c3)))
        else:
            cs = (c1, c2, c3)
            cj = cs[idx - 2]
            lower = tuple(2 - c if i == idx - 2 else 1 + c - cj for i, c in enumerate(cs))
            form = BranchForm("pfq", (1 - cj,), PFQSpec((2 - cj,), lower))
    # a vanishing shift exponent collapses the branch onto a lower one
    if any(e == 0.0 and on for e, on in zip(form.powers, _shift_mask(family, idx))):
        raise DomainError(
            f"branch {family.value}-{idx} coincides with another branch at these parameters"
        )
    return form


def f6_reduced_form(index: int, params: FamilyParams) -> BranchForm:
    """0F2 forms of F6 branches 2-4 (numerator cancelled against a denominator)."""
    alpha, _ = derived_exponents(PdeFamilyId.F6, params)
    lowers = {
        2: ((3 + alpha) / 4, (2 + 2 * alpha) / 4),
        3: ((5 - alpha) / 4, (3 + alpha) / 4),
        4: ((6 - 2 * alpha) / 4, (5 - alpha) / 4),
    }
    if index not in lowers:
        raise ValueError("reduced forms exist for F6 branches 2-4 only")
    power = (index - 1) * (1 - alpha) / 4
    return BranchForm("pfq", (power,), PFQSpec((), lowers[index]))


def omega(branch: SolutionBranch, params: FamilyParams, frame: SimilarityFrame,
          opts: EvalOptions | None = None) -> float:
    return branch_form(branch, params).value(frame.variables, opts)


def eval_branch(branch: SolutionBranch, params: FamilyParams, p: Point,
                opts: EvalOptions | None = None) -> float:
    """constant * P * omega at the point ``p``."""
    frame = similarity_map(branch.family, params, p)
    form = branch_form(branch, params)
    return branch.constant * frame.P * form.value(frame.variables, opts)


def folded_prefactor(branch: SolutionBranch, params: FamilyParams, p: Point) -> float:
    """P * |v|**powers computed straight from the coordinates.

    Independent of :func:`similarity_map`; used to cross-check it.
    """
    family = branch.family
    check_point(family, p)
    form = branch_form(branch, params)
    x, y, t = p.x, p.y, p.t
    if family is PdeFamilyId.P0:
        return params.E_amp / (params.nu * t)
    if family is PdeFamilyId.P2:
        (e,) = form.powers
        return x ** (2 * e) * 4.0 ** -e * t ** (-0.5 - e)
    if family is PdeFamilyId.P3:
        ex, ey = form.powers
        return x ** (2 * ex) * y ** (2 * ey) * 8.0 ** -(ex + ey) * t ** (-0.5 - ex - ey)
    if family is PdeFamilyId.T4:
        (e,) = form.powers
        m = params.m
        return x ** (-3 - 3 * e) * y ** ((m + 3) * e) * (3 / (m + 3)) ** (3 * e)
    k1 = params.k + 1.0
    if family is PdeFamilyId.T5:
        ex, ey = form.powers
        base = k1 / (2.0 * t ** k1)
        n, m = params.n, params.m
        return (base ** (1 + ex + ey) * x ** ((n + 3) * ex) * y ** ((m + 3) * ey)
                / ((n + 3) ** (3 * ex) * (m + 3) ** (3 * ey)))
    (e,) = form.powers
    n = params.n
    return (k1 / t ** k1) ** (1 + e) * x ** ((n + 4) * e) / (n + 4) ** (4 * e)


def eval_branch_folded(branch: SolutionBranch, params: FamilyParams, p: Point,
                       opts: EvalOptions | None = None) -> float:
    """Second evaluation route: folded prefactor times the bare series."""
    frame = similarity_map(branch.family, params, p)
    form = branch_form(branch, params)
    bare = BranchForm(form.kind, (0.0,) * len(form.powers), form.spec, form.rate)
    return branch.constant * folded_prefactor(branch, params, p) * bare.value(
        frame.variables, opts)


# Branches whose printed closed form is compared against P * omega.
DISPUTED = {
    PdeFamilyId.P3: (4,),
    PdeFamilyId.T5: (5, 6, 8, 9),
    PdeFamilyId.F6: (2, 3, 4),
}


def eval_printed_form(branch: SolutionBranch, params: FamilyParams, p: Point,
                      opts: EvalOptions | None = None) -> float:
    """The closed form of a disputed branch exactly as printed."""
    family, idx = branch.family, branch.index
    if idx not in DISPUTED.get(family, ()):
        raise ValueError(f"no printed variant recorded for {family.value}-{idx}")
    frame = similarity_map(family, params, p)
    alpha, beta = derived_exponents(family, params)
    if family is PdeFamilyId.P3:
        pre = p.x ** (1 - 2 * alpha) * p.y ** (1 - 2 * beta) / p.t ** (2 - alpha - beta)
        spec = branch_form(branch, params).spec
        return branch.constant * pre * eval_kdf(spec, frame.xi, frame.eta, opts).require()
    if family is PdeFamilyId.T5:
        form = _t5_generic(alpha, beta, idx, printed=True)
        return branch.constant * frame.P * form.value(frame.variables, opts)
    exponent = {2: (9 - alpha) / 4, 3: (6 - 2 * alpha) / 4, 4: (11 - 3 * alpha) / 4}[idx]
    k1 = params.k + 1.0
    base = p.t ** k1 / k1
    spec = f6_reduced_form(idx, params).spec
    return (branch.constant * base ** -exponent * p.x ** (idx - 1)
            * eval_pfq(spec, frame.sigma, opts).require())
