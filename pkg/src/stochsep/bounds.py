"""Closed-form separability bounds and capacity estimates.

All bounds in this module share two ingredients: the probability
``1 - (1-eps)^n`` that a random point of the unit ball lands in the
eps-shell near the sphere, and the cap volume fraction ``rho(eps)^n / 2``
with ``rho(eps) = sqrt(1 - (1-eps)^2)``.  Sample sizes up to 1e9 and
dimensions in the thousands destroy naive evaluation, so every power is
assembled in log space: ``(1-x)^m`` as ``exp(m*log1p(-x))``, ``rho^n`` as
``exp(n*log(rho))``, factorials through ``lgamma``.

Functions named ``*_max`` maximize their bound over the shell thickness
via a dense grid followed by golden-section refinement; the objective is
smooth and in practice unimodal, the grid guards against surprises.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = [
    "DomainError",
    "UnreachableTargetError",
    "SeparationRegime",
    "BoundResult",
    "CapacityResult",
    "cap_radius",
    "cap_exclusion_bound",
    "point_separation_bound",
    "point_separation_bound_max",
    "point_separation_approx",
    "separation_capacity",
    "extreme_points_bound",
    "extreme_points_bound_max",
    "extreme_points_union_bound",
    "extreme_points_capacity",
    "two_neuron_bound",
    "two_neuron_bound_max",
    "two_neuron_union_bound",
]

# eps grid used by the *_max maximizers: dense step, then golden-section
# refinement of the winning cell down to EPS_TOL.
EPS_GRID_STEP = 1e-3
EPS_TOL = 1e-6
_EPS_LO = 1e-3
_EPS_HI = 1.0 - 1e-3
# refinement may walk below the leftmost grid point (optima near eps ~ 1/m)
_EPS_FLOOR = 1e-9

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DomainError(ValueError):
    """A parameter lies outside the admissible domain of a bound."""


class UnreachableTargetError(DomainError):
    """The requested probability target exceeds the single-sample bound."""


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in the open interval (0, 1), got {eps!r}")


def _check_n(n: int) -> None:
    if n < 1 or n != int(n):
        raise DomainError(f"dimension n must be a positive integer, got {n!r}")


@dataclass(frozen=True)
class SeparationRegime:
    """Problem size for a separability bound.

    ``n`` is the ambient dimension, ``m`` the sample size, ``eps`` the
    thickness of the boundary shell.  ``m`` is accepted as a real so that
    1e9-scale sweeps need no big-integer handling; most bounds require
    ``m >= 1``, operation-specific preconditions are checked per call.
    """

    n: int
    m: float
    eps: float

    def __post_init__(self) -> None:
        _check_n(self.n)
        if not self.m >= 0:
            raise DomainError(f"sample size m must be >= 0, got {self.m!r}")
        _check_eps(self.eps)

    @property
    def rho(self) -> float:
        return cap_radius(self.eps)


@dataclass(frozen=True)
class BoundResult:
    """A probability bound value, the eps it was evaluated at, and whether
    the raw formula had to be clamped into [0, 1]."""

    value: float
    eps_used: float
    clamped: bool = False


@dataclass(frozen=True)
class CapacityResult:
    """Largest admissible sample size for a probability target.

    ``m_max`` is reported as a real (it may exceed integer range); integer
    truncation is left to the caller.  ``asymptotic`` is the exponential
    large-n estimate of the same quantity.
    """

    m_max: float
    asymptotic: float
    n: int
    eps: float
    target: float


def cap_radius(eps: float) -> float:
    """Radius sqrt(1 - (1-eps)^2) of the sphere escribing the eps-cap.

    Strictly increasing on (0, 1) with values in (0, 1).
    """
    _check_eps(eps)
    return math.sqrt(1.0 - (1.0 - eps) ** 2)


def _log_cap_fraction(n: int, eps: float) -> float:
    """log of the cap volume fraction rho(eps)^n / 2."""
    return n * math.log(cap_radius(eps)) - math.log(2.0)


def _log_shell(n: int, eps: float) -> float:
    """log of 1 - (1-eps)^n, the shell-hit probability."""
    # (1-eps)^n = exp(n*log1p(-eps)); 1 - that via expm1 keeps precision
    # both for eps -> 0 (result ~ n*eps) and eps -> 1 (result ~ 1).
    return math.log(-math.expm1(n * math.log1p(-eps)))


def cap_exclusion_bound(n: int, eps: float) -> float:
    """Lower bound 1 - rho(eps)^n / 2 on the probability that a random
    ball point falls outside the cap cut off at inner product 1-eps."""
    _check_n(n)
    return -math.expm1(_log_cap_fraction(n, eps))


def _log_point_separation(n: int, m: float, eps: float) -> float:
    """log of (1-(1-eps)^n) * (1 - rho^n/2)^m."""
    cap = math.exp(_log_cap_fraction(n, eps))
    return _log_shell(n, eps) + m * math.log1p(-cap)


def point_separation_bound(regime: SeparationRegime) -> BoundResult:
    """Lower bound (1-(1-eps)^n) * (1 - rho^n/2)^m on the probability that
    a fresh random point is linearly separable from an i.i.d. sample of
    size m from the same ball equidistribution."""
    if regime.m < 1:
        raise DomainError("point separation bound requires m >= 1")
    value = math.exp(_log_point_separation(regime.n, regime.m, regime.eps))
    return BoundResult(min(value, 1.0), regime.eps)


def _maximize_over_eps(log_f) -> tuple[float, float]:
    """Grid search over eps then golden-section refinement.

    ``log_f(eps)`` must return the log of the objective (-inf allowed).
    Returns (eps*, log_f(eps*)).
    """
    n_steps = round((_EPS_HI - _EPS_LO) / EPS_GRID_STEP)
    grid = [_EPS_LO + i * EPS_GRID_STEP for i in range(n_steps + 1)]
    values = [log_f(e) for e in grid]
    best = max(range(len(grid)), key=values.__getitem__)
    # refine inside the winning cell's neighborhood; the left edge opens
    # down to _EPS_FLOOR because small-m/low-n optima sit below the grid
    lo = grid[best - 1] if best > 0 else _EPS_FLOOR
    hi = grid[best + 1] if best + 1 < len(grid) else _EPS_HI
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = log_f(c), log_f(d)
    while b - a > EPS_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = log_f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = log_f(d)
    eps_best = c if fc >= fd else d
    candidates = [(log_f(eps_best), eps_best), (values[best], grid[best])]
    log_best, eps_best = max(candidates)
    return eps_best, log_best


def point_separation_bound_max(n: int, m: float) -> BoundResult:
    """point_separation_bound maximized over the shell thickness."""
    _check_n(n)
    if m < 1:
        raise DomainError("point separation bound requires m >= 1")
    eps, log_v = _maximize_over_eps(lambda e: _log_point_separation(n, m, e))
    return BoundResult(min(math.exp(log_v), 1.0), eps)


def point_separation_approx(regime: SeparationRegime) -> float:
    """Approximation (1-(1-eps)^n) * exp(-m * rho^n/2), valid when the cap
    fraction is small; warns when rho^n exceeds 0.01."""
    rho_n = math.exp(regime.n * math.log(regime.rho))
    if rho_n > 0.01:
        warnings.warn(
            f"cap radius power rho^n = {rho_n:.4g} is not small; the "
            "exponential approximation degrades",
            stacklevel=2,
        )
    return math.exp(_log_shell(regime.n, regime.eps) - regime.m * rho_n / 2.0)


def separation_capacity(n: int, eps: float, p: float) -> CapacityResult:
    """Largest sample size m for which the point-separation bound stays at
    or above the target probability p (exact algebraic inversion).

    The asymptotic field carries the exponential estimate
    exp(n*log(1/rho)) * |log p|.
    """
    _check_n(n)
    _check_eps(eps)
    if not 0.0 < p < 1.0:
        raise DomainError(f"target probability p must lie in (0, 1), got {p!r}")
    cap = math.exp(_log_cap_fraction(n, eps))
    log_decay = math.log1p(-cap)  # < 0
    m_max = (math.log(p) - _log_shell(n, eps)) / log_decay
    if m_max < 1.0:
        raise UnreachableTargetError(
            f"target p={p} exceeds the m=1 bound "
            f"{math.exp(_log_point_separation(n, 1.0, eps)):.6g} "
            f"at n={n}, eps={eps}; capacity undefined"
        )
    asymptotic = math.exp(-n * math.log(cap_radius(eps))) * abs(math.log(p))
    return CapacityResult(m_max, asymptotic, n, eps, p)


def _log_extreme_points(n: int, m: float, eps: float) -> float:
    """log of [(1-(1-eps)^n) * (1 - (m-1)*rho^n/2)]^m, -inf if the inner
    factor is non-positive."""
    cap = math.exp(_log_cap_fraction(n, eps))
    inner = 1.0 - (m - 1.0) * cap
    if inner <= 0.0:
        return -math.inf
    return m * (_log_shell(n, eps) + math.log(inner))


def extreme_points_bound(regime: SeparationRegime) -> BoundResult:
    """Lower bound [(1-(1-eps)^n) * (1-(m-1)*rho^n/2)]^m on the probability
    that every point of the sample is linearly separable from the rest,
    i.e. that all points are vertices of the sample's convex hull.

    For large m the inner factor goes negative; the bound is then vacuous
    and clamps to 0 with the flag set."""
    if regime.m < 2:
        raise DomainError("extreme points bound requires m >= 2")
    log_v = _log_extreme_points(regime.n, regime.m, regime.eps)
    if log_v == -math.inf:
        return BoundResult(0.0, regime.eps, clamped=True)
    return BoundResult(min(math.exp(log_v), 1.0), regime.eps)


def extreme_points_bound_max(n: int, m: float) -> BoundResult:
    """extreme_points_bound maximized over the shell thickness."""
    _check_n(n)
    if m < 2:
        raise DomainError("extreme points bound requires m >= 2")
    eps, log_v = _maximize_over_eps(lambda e: _log_extreme_points(n, m, e))
    if log_v == -math.inf:
        return BoundResult(0.0, eps, clamped=True)
    return BoundResult(min(math.exp(log_v), 1.0), eps)


def extreme_points_union_bound(regime: SeparationRegime) -> BoundResult:
    """Union-bound variant 1 - m*(1 - point_separation_bound_max) for the
    all-points-separable probability; clamps at 0."""
    single = point_separation_bound_max(regime.n, regime.m)
    raw = 1.0 - regime.m * (1.0 - single.value)
    return BoundResult(max(raw, 0.0), single.eps_used, clamped=raw < 0.0)


def extreme_points_capacity(n: int, eps: float, q: float) -> CapacityResult:
    """Exponential estimate exp((n/2)*log(1/rho)) * sqrt(1-q) of the largest
    sample size keeping the all-points-separable probability above q."""
    _check_n(n)
    _check_eps(eps)
    if not 0.0 < q < 1.0:
        raise DomainError(f"target probability q must lie in (0, 1), got {q!r}")
    half_exp = math.exp(-0.5 * n * math.log(cap_radius(eps)))
    m_max = half_exp * math.sqrt(1.0 - q)
    return CapacityResult(m_max, m_max, n, eps, q)


def _log_two_neuron(n: int, m: float, eps: float) -> tuple[float, bool]:
    """log of the two-neuron cascade bound, plus a flag marking a clamped
    (vacuous, value 0) result.

    The bound multiplies the single-functional decay (1-rho^n/2)^m by a
    compensation factor exp(t*x) and the Taylor remainder guard
    (1 - (t*x)^n / n!), where x = (rho^n/2)/(1-rho^n/2) and t = m-n+1
    (taken as 0 when m < n-1, which collapses the extra factors to 1).
    """
    cap = math.exp(_log_cap_fraction(n, eps))
    x = cap / (1.0 - cap)
    t = max(m - n + 1.0, 0.0)
    tx = t * x
    if tx > 0.0:
        log_term = n * math.log(tx) - math.lgamma(n + 1.0)
        if log_term >= 0.0:
            return -math.inf, True
        guard = -math.expm1(log_term)
        log_guard = math.log(guard)
    else:
        log_guard = 0.0
    log_v = _log_shell(n, eps) + m * math.log1p(-cap) + tx + log_guard
    return log_v, False


def two_neuron_bound(regime: SeparationRegime) -> BoundResult:
    """Lower bound on the probability that a cascade of two perceptrons
    with orthogonal weights separates a fresh point from a sample of size
    m, at fixed shell thickness.

    Equal to point_separation_bound when m <= n-1; above it the extra
    exponential factor compensates the single-functional decay."""
    if regime.m < 1:
        raise DomainError("two-neuron bound requires m >= 1")
    log_v, clamped = _log_two_neuron(regime.n, regime.m, regime.eps)
    if clamped:
        return BoundResult(0.0, regime.eps, clamped=True)
    value = math.exp(log_v)
    if value > 1.0:
        return BoundResult(1.0, regime.eps, clamped=True)
    return BoundResult(value, regime.eps)


def two_neuron_bound_max(n: int, m: float) -> BoundResult:
    """two_neuron_bound maximized over the shell thickness."""
    _check_n(n)
    if m < 1:
        raise DomainError("two-neuron bound requires m >= 1")
    eps, log_v = _maximize_over_eps(lambda e: _log_two_neuron(n, m, e)[0])
    if log_v == -math.inf:
        return BoundResult(0.0, eps, clamped=True)
    value = math.exp(log_v)
    if value > 1.0:
        return BoundResult(1.0, eps, clamped=True)
    return BoundResult(value, eps)


def two_neuron_union_bound(regime: SeparationRegime) -> BoundResult:
    """Union-bound variant 1 - m*(1 - two_neuron_bound_max) for every point
    of the sample being two-neuron separable from the rest; clamps at 0."""
    single = two_neuron_bound_max(regime.n, regime.m)
    raw = 1.0 - regime.m * (1.0 - single.value)
    return BoundResult(max(raw, 0.0), single.eps_used, clamped=raw < 0.0)
