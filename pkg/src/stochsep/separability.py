"""Linear predicates, predicate cascades, the pairwise separability census,
and constructive separator builders.

A predicate is one threshold test on a linear functional; clauses AND
predicates together, cascades OR clauses (disjunctive normal form).  The
census asks, for each sample point y, whether the functional
``x -> <y, x> - |y|^2`` is strictly negative on every other point; the
count of such points divided by (m - 1) is the success frequency reported
by the Monte Carlo experiments.  Note the m - 1 denominator is the
experiment's historical definition and is kept verbatim even though the
count ranges over all m points, so the statistic can exceed 1 for tiny
samples.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import point_separation_bound_max
from .sampling import DistributionSpec, SeedSpec, derive_stream, sample

__all__ = [
    "SeparationFailure",
    "LinearPredicate",
    "ConjunctionClause",
    "CascadePredicate",
    "CensusResult",
    "ExperimentConfig",
    "CellResult",
    "ExperimentReport",
    "cap_functional",
    "census",
    "census_naive",
    "mc_experiment",
    "build_two_neuron",
    "build_conjunction_separator",
]

# row-block size for the Gram census; 512 rows x 1e4 cols of float64 ~ 40 MB
_CENSUS_BLOCK = 512


class SeparationFailure(RuntimeError):
    """A separator construction could not meet its postcondition."""


def _as_vector(x, n: int | None = None) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"dimension mismatch: expected {n}, got {v.shape[0]}")
    return v


def _as_matrix(x) -> np.ndarray:
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class LinearPredicate:
    """One threshold test on a linear functional.

    Closed form tests ``<w, x> >= theta``; open form tests strict ``>``.
    Evaluation is sign-exact: no tolerance is applied inside the predicate,
    ties are decided by the closed/open flag alone.
    """

    weights: np.ndarray
    threshold: float
    closed: bool = True

    def __post_init__(self) -> None:
        w = _as_vector(self.weights)
        if not np.isfinite(w).all() or not np.isfinite(self.threshold):
            raise ValueError("predicate weights and threshold must be finite")
        if not w.any():
            raise ValueError("predicate weights must not be all zero")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def evaluate(self, x) -> bool | np.ndarray:
        """Truth value on a vector, or a boolean vector on a matrix."""
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[-1] != self.n:
            raise ValueError(f"dimension mismatch: predicate has n={self.n}, input {arr.shape}")
        scores = arr @ self.weights
        result = scores >= self.threshold if self.closed else scores > self.threshold
        return bool(result) if arr.ndim == 1 else result

    def negated(self) -> "LinearPredicate":
        """Logical negation: the opposite half-space with the flag flipped."""
        return LinearPredicate(-self.weights, -self.threshold, not self.closed)


@dataclass(frozen=True)
class ConjunctionClause:
    """AND of one or more predicates."""

    predicates: tuple[LinearPredicate, ...]

    def __post_init__(self) -> None:
        preds = tuple(self.predicates)
        if not preds:
            raise ValueError("a conjunction clause needs at least one predicate")
        object.__setattr__(self, "predicates", preds)

    def evaluate(self, x) -> bool | np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 1:
            return all(p.evaluate(arr) for p in self.predicates)
        out = self.predicates[0].evaluate(arr)
        for p in self.predicates[1:]:
            out = out & p.evaluate(arr)
        return out


@dataclass(frozen=True)
class CascadePredicate:
    """OR of conjunction clauses; the empty cascade is identically false."""

    clauses: tuple[ConjunctionClause, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "clauses", tuple(self.clauses))

    def evaluate(self, x) -> bool | np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 1:
            return any(c.evaluate(arr) for c in self.clauses)
        out = np.zeros(arr.shape[0], dtype=bool)
        for c in self.clauses:
            out = out | c.evaluate(arr)
        return out


def cap_functional(y) -> LinearPredicate:
    """The closed predicate ``<y, x> >= |y|^2`` attached to a point y.

    It is true on y itself (equality) and on every point of the cap that y
    cuts off; y is separated from a set exactly when the predicate is
    false on all of it.
    """
    v = _as_vector(y)
    if not v.any():
        raise ValueError("cap functional requires a nonzero point")
    return LinearPredicate(v, float(v @ v), closed=True)


@dataclass(frozen=True)
class CensusResult:
    """Outcome of the pairwise separability census.

    ``f1 = separable_count / (m - 1)`` by definition (see module note on
    the denominator).  ``per_point`` flags each row.
    """

    separable_count: int
    f1: float
    per_point: np.ndarray | None = None


def census(sample_matrix, block: int = _CENSUS_BLOCK) -> CensusResult:
    """Count the sample points strictly separable from all others by their
    own cap functional.

    Works through the Gram matrix in row blocks: row i is separable iff
    the largest off-diagonal entry of Gram row i stays strictly below the
    diagonal entry.  Duplicated rows tie and therefore never count.
    """
    x = _as_matrix(sample_matrix)
    m = x.shape[0]
    if m < 2:
        raise ValueError(f"census requires at least 2 rows, got {m}")
    flags = np.empty(m, dtype=bool)
    for start in range(0, m, block):
        stop = min(start + block, m)
        g = x[start:stop] @ x.T
        rows = np.arange(stop - start)
        cols = np.arange(start, stop)
        # diagonal and off-diagonal entries must come from the same matmul
        # so that duplicated rows tie exactly and fail the strict test
        diag = g[rows, cols].copy()
        g[rows, cols] = -np.inf
        flags[start:stop] = g.max(axis=1) < diag
    count = int(flags.sum())
    return CensusResult(count, count / (m - 1), flags)


def census_naive(sample_matrix) -> CensusResult:
    """Reference double-loop census; O(m^2 n) scalar work, for testing."""
    x = _as_matrix(sample_matrix)
    m = x.shape[0]
    if m < 2:
        raise ValueError(f"census requires at least 2 rows, got {m}")
    flags = np.empty(m, dtype=bool)
    for i in range(m):
        yy = float(x[i] @ x[i])
        ok = True
        for j in range(m):
            if j != i and float(x[i] @ x[j]) - yy >= 0.0:
                ok = False
                break
        flags[i] = ok
    count = int(flags.sum())
    return CensusResult(count, count / (m - 1), flags)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition for a Monte Carlo separability experiment.

    ``distributions`` entries are distribution kinds; an ellipsoid entry
    must come as a DistributionSpec carrying its semi-axes and then pins
    its own dimension, so it only combines with a matching n.
    """

    distributions: tuple[str | DistributionSpec, ...]
    n_list: tuple[int, ...]
    m: int
    repeats: int
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "distributions", tuple(self.distributions))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if not self.distributions or not self.n_list:
            raise ValueError("distributions and n_list must be non-empty")
        if self.m < 2:
            raise ValueError("experiment needs m >= 2")
        if self.repeats < 1:
            raise ValueError("experiment needs repeats >= 1")

    def cells(self) -> list[DistributionSpec]:
        specs = []
        for entry in self.distributions:
            for n in self.n_list:
                if isinstance(entry, DistributionSpec):
                    if entry.n != n:
                        raise ValueError(
                            f"ellipsoid entry has n={entry.n}, incompatible with n={n} in n_list"
                        )
                    specs.append(entry)
                else:
                    specs.append(DistributionSpec(kind=entry, n=n))
        return specs


@dataclass(frozen=True)
class CellResult:
    """Per-(distribution, n) summary of the census frequencies."""

    distribution: DistributionSpec
    f1_values: tuple[float, ...]
    theory: float | None = None

    @property
    def f1_min(self) -> float:
        return min(self.f1_values)

    @property
    def f1_median(self) -> float:
        return float(np.median(self.f1_values))

    @property
    def f1_max(self) -> float:
        return max(self.f1_values)


@dataclass(frozen=True)
class ExperimentReport:
    """Config echo plus one CellResult per grid cell, in config order."""

    config: ExperimentConfig
    cells: tuple[CellResult, ...] = field(default_factory=tuple)


def _census_f1(spec: DistributionSpec, m: int, seed: SeedSpec) -> float:
    return census(sample(spec, m, seed)).f1


def mc_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Run the census over the full (distribution, n) grid.

    Each repeat draws from its own derived stream, keyed by cell and
    repeat index, so the report is identical no matter how many worker
    threads execute it.  Theoretical values accompany ball cells.
    """
    specs = config.cells()
    master = SeedSpec(config.seed)
    tasks = []
    for ci, spec in enumerate(specs):
        cell_seed = derive_stream(master, ci)
        for r in range(config.repeats):
            tasks.append((ci, spec, derive_stream(cell_seed, r)))
    results: dict[int, list[float]] = {ci: [] for ci in range(len(specs))}
    if threads == 1:
        for ci, spec, stream in tasks:
            results[ci].append(_census_f1(spec, config.m, stream))
    else:
        workers = threads if threads > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            f1s = pool.map(lambda t: _census_f1(t[1], config.m, t[2]), tasks)
            for (ci, _, _), f1 in zip(tasks, f1s):
                results[ci].append(f1)
    cells = []
    for ci, spec in enumerate(specs):
        theory = None
        if spec.kind == "ball":
            theory = point_separation_bound_max(spec.n, config.m).value
        cells.append(CellResult(spec, tuple(results[ci]), theory))
    return ExperimentReport(config, tuple(cells))


def _householder(unit: np.ndarray) -> np.ndarray:
    """Symmetric orthogonal H mapping ``unit`` onto +-e1.

    Rows 2..n of H then form an orthonormal basis of the orthogonal
    complement of ``unit``.
    """
    n = unit.shape[0]
    v = unit.copy()
    sign = 1.0 if v[0] >= 0.0 else -1.0
    v[0] += sign  # add, never subtract: avoids cancellation near +-e1
    h = np.eye(n) - (2.0 / (v @ v)) * np.outer(v, v)
    return h


def _clause_separates(clause: ConjunctionClause, y: np.ndarray, others: np.ndarray) -> bool:
    if not clause.evaluate(y):
        return False
    return not bool(np.asarray(clause.evaluate(others)).any())


def build_two_neuron(y, others) -> ConjunctionClause:
    """Clause of at most two predicates with orthogonal weights that is
    true on y and false on every row of ``others``.

    The first predicate is y's cap functional.  Points of ``others``
    surviving inside the cap are projected onto the orthogonal complement
    of y (Householder basis), where y projects to the origin; the second
    predicate is a separating functional there: Fisher direction against
    the survivors, with an exact least-squares feasibility solve as
    fallback.  The postcondition is verified by evaluation before
    returning; raises SeparationFailure otherwise.
    """
    yv = _as_vector(y)
    rest = _as_matrix(others)
    if rest.shape[1] != yv.shape[0]:
        raise ValueError(
            f"dimension mismatch: point has n={yv.shape[0]}, matrix {rest.shape}"
        )
    first = cap_functional(yv)
    in_cap = np.asarray(first.evaluate(rest))
    survivors = rest[in_cap]
    if survivors.shape[0] == 0:
        clause = ConjunctionClause((first,))
        if not _clause_separates(clause, yv, rest):  # pragma: no cover - cap definition
            raise SeparationFailure("cap functional failed its own postcondition")
        return clause

    n = yv.shape[0]
    if n < 2:
        raise SeparationFailure("no orthogonal complement in dimension 1")
    h = _householder(yv / np.linalg.norm(yv))
    projected = (survivors @ h.T)[:, 1:]  # y itself projects to the origin

    candidates = []
    mu = projected.mean(axis=0)
    if projected.shape[0] >= 2:
        cov = np.cov(projected, rowvar=False)
        cov = np.atleast_2d(cov) + 1e-10 * np.trace(np.atleast_2d(cov)) / (n - 1) * np.eye(n - 1)
        try:
            candidates.append(-np.linalg.solve(cov, mu))
        except np.linalg.LinAlgError:
            pass
    candidates.append(-mu)
    # exact feasibility: aim all survivor projections at -1
    sol, *_ = np.linalg.lstsq(projected, -np.ones(projected.shape[0]), rcond=None)
    candidates.append(sol)

    for direction in candidates:
        if not np.isfinite(direction).all() or not direction.any():
            continue
        w2 = h.T @ np.concatenate(([0.0], direction))
        try:
            # threshold at the projected-y value: algebraically 0, but the
            # evaluated score carries rounding of order eps*|w2||y| with
            # arbitrary sign, so the recorded value keeps y on the true side
            second = LinearPredicate(w2, float(yv @ w2), closed=True)
        except ValueError:
            continue
        clause = ConjunctionClause((first, second))
        if _clause_separates(clause, yv, rest):
            return clause
    raise SeparationFailure(
        f"no orthogonal second functional separates {survivors.shape[0]} cap survivors"
    )


def build_conjunction_separator(y, others, max_k: int) -> ConjunctionClause:
    """Conjunction of at most ``max_k`` midpoint predicates isolating y.

    Greedy cover, farthest uncovered point first: each chosen point z
    contributes the predicate with weights (y - z) thresholded at the
    midpoint between y and z (closed toward y), which excludes z and
    everything beyond the bisecting hyperplane.  Raises SeparationFailure
    when the budget runs out.
    """
    yv = _as_vector(y)
    rest = _as_matrix(others)
    if rest.shape[1] != yv.shape[0]:
        raise ValueError(
            f"dimension mismatch: point has n={yv.shape[0]}, matrix {rest.shape}"
        )
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    diffs = rest - yv
    sq_dist = np.einsum("ij,ij->i", diffs, diffs)
    if (sq_dist == 0.0).any():
        raise ValueError("y coincides with a row of others; separation impossible")
    uncovered = np.ones(rest.shape[0], dtype=bool)
    predicates: list[LinearPredicate] = []
    while uncovered.any():
        if len(predicates) == max_k:
            raise SeparationFailure(
                f"budget of {max_k} predicates exhausted with "
                f"{int(uncovered.sum())} points still uncovered"
            )
        z = rest[int(np.argmax(np.where(uncovered, sq_dist, -np.inf)))]
        w = yv - z
        pred = LinearPredicate(w, float(w @ (yv + z)) / 2.0, closed=True)
        predicates.append(pred)
        uncovered &= np.asarray(pred.evaluate(rest))
    clause = ConjunctionClause(tuple(predicates))
    if not _clause_separates(clause, yv, rest):  # pragma: no cover - cover construction
        raise SeparationFailure("greedy cover failed its postcondition")
    return clause
