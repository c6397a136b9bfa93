"""Hypergeometric series with controlled truncation.

Every function here is evaluated by direct summation of its defining
series (term-ratio recurrence, see :mod:`selfsim.kernels`).  Derivatives
use the parameter-shift rule, so they are series evaluations too.  The
only non-series route is :func:`clausen_3f2_integral`, kept as an
independent check on the ``3F2`` sums.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from . import kernels
from .errors import ConvergenceError, DomainError

log = logging.getLogger(__name__)

MAX_TERMS_CAP = 1_000_000
ABS_FLOOR = 1e-300
TRUNCATION_SAFETY = 10.0
# 1F1 with x below this is summed through Kummer's transformation.
KUMMER_SWITCH = -5.0


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def _check_lower(params: Sequence[float], what: str) -> None:
    for c in params:
        if not math.isfinite(c):
            raise DomainError(f"{what} parameter {c!r} is not finite")
        if _is_nonpositive_integer(c):
            raise DomainError(f"{what} parameter {c!r} is zero or a negative integer")


@dataclass(frozen=True)
class PFQSpec:
    """Parameters of pFq(a_1..a_p; c_1..c_q; x)."""

    numerator_params: tuple[float, ...]
    denominator_params: tuple[float, ...]

    def __post_init__(self):
        num = tuple(float(a) for a in self.numerator_params)
        den = tuple(float(c) for c in self.denominator_params)
        object.__setattr__(self, "numerator_params", num)
        object.__setattr__(self, "denominator_params", den)
        _check_lower(den, "denominator")
        if len(num) > len(den) + 1:
            raise DomainError(
                f"{len(num)}F{len(den)} diverges for every x != 0 (p > q + 1)"
            )

    @property
    def p(self) -> int:
        return len(self.numerator_params)

    @property
    def q(self) -> int:
        return len(self.denominator_params)

    def shifted(self, k: int) -> "PFQSpec":
        return PFQSpec(
            tuple(a + k for a in self.numerator_params),
            tuple(c + k for c in self.denominator_params),
        )


@dataclass(frozen=True)
class Psi2Spec:
    """Humbert's confluent function Psi2(a; c1, c2; x, y)."""

    a: float
    c1: float
    c2: float

    def __post_init__(self):
        for name in ("a", "c1", "c2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_lower((self.c1, self.c2), "Psi2 lower")

    def as_kdf(self) -> "KdFSpec":
        return KdFSpec((self.a,), (), (), (), (self.c1,), (self.c2,))


@dataclass(frozen=True)
class KdFSpec:
    """Kampe de Feriet double series.

    Upper groups multiply, lower groups divide; the ``joint`` groups take
    the Pochhammer index r + s, the ``x``/``y`` groups take r and s.
    """

    upper_joint: tuple[float, ...] = ()
    upper_x: tuple[float, ...] = ()
    upper_y: tuple[float, ...] = ()
    lower_joint: tuple[float, ...] = ()
    lower_x: tuple[float, ...] = ()
    lower_y: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("upper_joint", "upper_x", "upper_y",
                     "lower_joint", "lower_x", "lower_y"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        _check_lower(self.lower_joint + self.lower_x + self.lower_y, "KdF lower")

    @property
    def signature(self) -> tuple[int, int, int, int, int, int]:
        return (len(self.upper_joint), len(self.upper_x), len(self.upper_y),
                len(self.lower_joint), len(self.lower_x), len(self.lower_y))

    def shifted(self, i: int, j: int) -> "KdFSpec":
        return KdFSpec(
            tuple(a + i + j for a in self.upper_joint),
            tuple(b + i for b in self.upper_x),
            tuple(c + j for c in self.upper_y),
            tuple(a + i + j for a in self.lower_joint),
            tuple(b + i for b in self.lower_x),
            tuple(c + j for c in self.lower_y),
        )


@dataclass(frozen=True)
class EvalOptions:
    rel_tol: float = 1e-12
    max_terms: int = 10_000
    consecutive_small: int = 3

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not 1 <= self.max_terms <= MAX_TERMS_CAP:
            raise ValueError(f"max_terms must lie in [1, {MAX_TERMS_CAP}]")
        if self.consecutive_small < 1:
            raise ValueError("consecutive_small must be >= 1")


DEFAULT_OPTIONS = EvalOptions()


@dataclass(frozen=True)
class EvalResult:
    value: float
    terms_used: int
    truncation_estimate: float
    converged: bool

    def require(self) -> float:
        """Return the value, raising :class:`ConvergenceError` if unconverged."""
        if not self.converged:
            raise ConvergenceError(
                f"series not converged after {self.terms_used} terms "
                f"(best value {self.value!r})",
                result=self,
            )
        return self.value

    def scaled(self, factor: float) -> "EvalResult":
        return EvalResult(self.value * factor, self.terms_used,
                          abs(factor) * self.truncation_estimate, self.converged)


def pochhammer(a: float, m: int) -> float:
    """Rising factorial (a)_m = a (a+1) ... (a+m-1), with (a)_0 = 1."""
    if m < 0:
        raise ValueError("m must be non-negative")
    r = 1.0
    for i in range(m):
        r *= a + i
    return r


def _wrap(raw, opts: EvalOptions) -> EvalResult:
    value, used, last_abs, converged = raw
    if not converged:
        log.warning("series stopped after %d terms without meeting rel_tol=%g",
                    used, opts.rel_tol)
    return EvalResult(float(value), int(used), TRUNCATION_SAFETY * float(last_abs),
                      bool(converged))


def _pfq_direct(num, den, x, opts):
    return _wrap(kernels.pfq_series(num, den, float(x), opts.rel_tol,
                                    opts.max_terms, opts.consecutive_small), opts)


def eval_pfq(spec: PFQSpec, x: float, opts: EvalOptions | None = None) -> EvalResult:
    """Sum pFq(spec; x).

    For p = q + 1 the series is only used inside the unit disk.  1F1 with
    a large negative argument goes through Kummer's transformation, which
    turns the alternating series into one with positive terms.
    """
    opts = opts or DEFAULT_OPTIONS
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"argument {x!r} is not finite")
    if spec.p == spec.q + 1 and abs(x) >= 1.0:
        raise DomainError(
            f"{spec.p}F{spec.q} series needs |x| < 1, got x = {x!r}"
        )
    if spec.p == 1 and spec.q == 1 and x < KUMMER_SWITCH:
        (a,), (c,) = spec.numerator_params, spec.denominator_params
        return _pfq_direct((c - a,), (c,), -x, opts).scaled(math.exp(x))
    return _pfq_direct(spec.numerator_params, spec.denominator_params, x, opts)


def pfq_derivative(spec: PFQSpec, x: float, order: int,
                   opts: EvalOptions | None = None) -> EvalResult:
    """k-th derivative: (a)_k / (c)_k * pFq(a + k; c + k; x)."""
    if order < 0:
        raise ValueError("order must be non-negative")
    if order == 0:
        return eval_pfq(spec, x, opts)
    shifted = spec.shifted(order)
    factor = 1.0
    for a in spec.numerator_params:
        factor *= pochhammer(a, order)
    for c in spec.denominator_params:
        factor /= pochhammer(c, order)
    return eval_pfq(shifted, x, opts).scaled(factor)


def _kdf_domain_check(spec: KdFSpec, x: float, y: float) -> None:
    p, q, k, l, m, n = spec.signature
    slack_x = l + m + 1 - (p + q)
    slack_y = l + n + 1 - (p + k)
    if (slack_x < 0 and x != 0.0) or (slack_y < 0 and y != 0.0):
        raise DomainError(
            f"KdF signature {spec.signature} diverges away from the axes"
        )
    if slack_x == 0 and slack_y == 0 and x != 0.0 and y != 0.0 and p > l:
        w = 1.0 / (p - l)
        if abs(x) ** w + abs(y) ** w >= 1.0:
            raise DomainError(f"({x}, {y}) outside the KdF convergence region")
    if slack_x == 0 and abs(x) >= 1.0:
        raise DomainError(f"|x| = {abs(x)} outside the KdF convergence region")
    if slack_y == 0 and abs(y) >= 1.0:
        raise DomainError(f"|y| = {abs(y)} outside the KdF convergence region")


def eval_kdf(spec: KdFSpec, x: float, y: float,
             opts: EvalOptions | None = None) -> EvalResult:
    """Sum the Kampe de Feriet series over diagonal shells.

    ``terms_used`` counts shells.  Large negative arguments are summed as
    they stand, so the relative accuracy degrades roughly like
    exp(|x| + |y|) * eps; keep |x|, |y| moderate (the solution branches
    only need |x|, |y| of order one).
    """
    opts = opts or DEFAULT_OPTIONS
    x, y = float(x), float(y)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError("KdF arguments must be finite")
    _kdf_domain_check(spec, x, y)
    return _wrap(kernels.kdf_series(spec.upper_joint, spec.upper_x, spec.upper_y,
                                   spec.lower_joint, spec.lower_x, spec.lower_y,
                                   x, y, opts.rel_tol, opts.max_terms,
                                   opts.consecutive_small), opts)


def kdf_partial(spec: KdFSpec, x: float, y: float, dx_order: int, dy_order: int,
                opts: EvalOptions | None = None) -> EvalResult:
    i, j = int(dx_order), int(dy_order)
    if i < 0 or j < 0:
        raise ValueError("derivative orders must be non-negative")
    if i == 0 and j == 0:
        return eval_kdf(spec, x, y, opts)
    factor = 1.0
    for a in spec.upper_joint:
        factor *= pochhammer(a, i + j)
    for b in spec.upper_x:
        factor *= pochhammer(b, i)
    for c in spec.upper_y:
        factor *= pochhammer(c, j)
    for a in spec.lower_joint:
        factor /= pochhammer(a, i + j)
    for b in spec.lower_x:
        factor /= pochhammer(b, i)
    for c in spec.lower_y:
        factor /= pochhammer(c, j)
    return eval_kdf(spec.shifted(i, j), x, y, opts).scaled(factor)


def eval_psi2(spec: Psi2Spec, x: float, y: float,
              opts: EvalOptions | None = None) -> EvalResult:
    """Psi2(a; c1, c2; x, y) = sum (a)_{m+n} x^m y^n / ((c1)_m (c2)_n m! n!)."""
    return eval_kdf(spec.as_kdf(), x, y, opts)


def psi2_partial(spec: Psi2Spec, x: float, y: float, dx_order: int, dy_order: int,
                 opts: EvalOptions | None = None) -> EvalResult:
    return kdf_partial(spec.as_kdf(), x, y, dx_order, dy_order, opts)


def _beta_weighted_rule(a: float, c: float, nodes: int, rule: str):
    """Nodes/weights on [0, 1] for the weight t^(a-1) (1-t)^(c-a-1) / B(a, c-a)."""
    if rule == "jacobi":
        z, w = special.roots_jacobi(nodes, c - a - 1.0, a - 1.0)
        t = 0.5 * (1.0 + z)
        w = w * 2.0 ** (1.0 - c)
    elif rule == "legendre":
        z, w = np.polynomial.legendre.leggauss(nodes)
        t = 0.5 * (1.0 + z)
        w = 0.5 * w * t ** (a - 1.0) * (1.0 - t) ** (c - a - 1.0)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return t, w / special.beta(a, c - a)


def clausen_3f2_integral(a1: float, a2: float, a3: float, c1: float, c2: float,
                         x: float, quad_nodes: int = 64, rule: str = "jacobi") -> float:
    """3F2 from its double Euler integral, by tensor-product Gauss quadrature.

    ``rule="jacobi"`` puts the endpoint factors ξ^(a-1)(1-ξ)^(c-a-1) into the
    weight, so only the smooth kernel (1 - x ξ η)^(-a3) is sampled.
    ``rule="legendre"`` samples the whole integrand and is only accurate
    when those factors are smooth (e.g. integer exponents).
    """
    if not (c1 > a1 > 0 and c2 > a2 > 0):
        raise DomainError("integral needs c1 > a1 > 0 and c2 > a2 > 0")
    if not x < 1.0:
        raise DomainError(f"integral needs x < 1, got {x!r}")
    if quad_nodes < 1:
        raise ValueError("quad_nodes must be positive")
    s, ws = _beta_weighted_rule(a1, c1, quad_nodes, rule)
    t, wt = _beta_weighted_rule(a2, c2, quad_nodes, rule)
    kernel = (1.0 - x * np.outer(s, t)) ** (-a3)
    return float(ws @ kernel @ wt)


# small conveniences used by the CLI and families


def hyp1f1(a: float, c: float, x: float, opts: EvalOptions | None = None) -> EvalResult:
    return eval_pfq(PFQSpec((a,), (c,)), x, opts)


def hyp2f1(a: float, b: float, c: float, x: float,
           opts: EvalOptions | None = None) -> EvalResult:
    return eval_pfq(PFQSpec((a, b), (c,)), x, opts)
