"""One-shot correctors: cap and Fisher discriminant filters built by direct
formula evaluation, PCA whitening with component-count selection rules, a
hinge-loss baseline, cascade assembly, and evaluation metrics.

A corrector wraps a whitening transform and a predicate cascade; applying
it whitens the input rows and evaluates the cascade, and a true flag means
"suppress this decision".  Every builder guarantees by construction (and
verifies) that the mistakes it was built on are flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .sampling import SeedSpec, generator
from .separability import (
    CascadePredicate,
    ConjunctionClause,
    LinearPredicate,
    build_two_neuron,
)

__all__ = [
    "KINDS",
    "IllConditionedError",
    "PcaResult",
    "WhiteningModel",
    "CorrectorModel",
    "LabeledDataset",
    "Metrics",
    "SvmConfig",
    "fit_pca",
    "broken_stick_count",
    "kaiser_count",
    "build_whitening",
    "spherical_cap_corrector",
    "fisher_corrector_single",
    "fisher_corrector_multi",
    "two_neuron_corrector",
    "svm_baseline",
    "assemble_cascade",
    "evaluate",
]

KINDS = (
    "spherical_cap",
    "fisher_single",
    "fisher_multi",
    "two_neuron",
    "svm_baseline",
    "cascade",
)

LABELS = ("positive", "trash")

_ORTHO_TOL = 1e-8


class IllConditionedError(ValueError):
    """The retained spectrum is too degenerate for the requested operation."""


def _as_matrix(x) -> np.ndarray:
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains non-finite entries")
    return m


def _as_vector(x) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("vector contains non-finite entries")
    return v


@dataclass(frozen=True)
class PcaResult:
    """Eigendecomposition of the sample covariance (divisor m - 1).

    ``eigenvalues`` descending and clipped at zero; ``basis`` rows are the
    matching orthonormal principal directions; ``mean`` the column means.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    mean: np.ndarray


def fit_pca(data) -> PcaResult:
    """Principal component decomposition of the rows of ``data``."""
    x = _as_matrix(data)
    if x.shape[0] < 2:
        raise ValueError("PCA requires at least 2 rows")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = (centered.T @ centered) / (x.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    return PcaResult(eigenvalues, eigenvectors[:, order].T, mean)


def broken_stick_count(eigenvalues) -> int:
    """Number of leading eigenvalues whose spectrum fraction strictly
    exceeds the expected ordered fragment of a randomly broken unit stick.

    Uses the consecutive-prefix rule: counting stops at the first failure.
    With strict comparison a single eigenvalue scores 0 (its fraction is
    exactly the p=1 stick).
    """
    lam = _as_vector(eigenvalues)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if (np.diff(lam) > 0).any():
        raise ValueError("eigenvalues must be sorted descending")
    if (lam < 0).any() or not lam.any():
        raise ValueError("eigenvalues must be non-negative and not all zero")
    p = lam.size
    fractions = lam / lam.sum()
    stick = np.cumsum(1.0 / np.arange(p, 0, -1))[::-1] / p
    passing = fractions > stick
    k = 0
    while k < p and passing[k]:
        k += 1
    return k


def kaiser_count(eigenvalues) -> int:
    """Number of eigenvalues strictly above the mean eigenvalue."""
    lam = _as_vector(eigenvalues)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    return int((lam > lam.mean()).sum())


@dataclass(frozen=True)
class WhiteningModel:
    """Centering, projection onto k principal directions, and optional
    per-direction rescaling by the inverse root eigenvalue."""

    mean: np.ndarray
    basis: np.ndarray
    scale: np.ndarray

    def __post_init__(self) -> None:
        mean = _as_vector(self.mean)
        basis = _as_matrix(self.basis)
        scale = _as_vector(self.scale)
        if basis.shape[1] != mean.shape[0]:
            raise ValueError("basis columns must match mean dimension")
        if scale.shape[0] != basis.shape[0]:
            raise ValueError("scale length must match retained component count")
        if (scale <= 0).any():
            raise ValueError("scale entries must be positive")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=_ORTHO_TOL):
            raise ValueError("basis rows must be orthonormal")
        for arr in (mean, basis, scale):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "scale", scale)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    def transform(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[-1] != self.n:
            raise ValueError(f"dimension mismatch: whitening has n={self.n}, input {arr.shape}")
        return ((arr - self.mean) @ self.basis.T) * self.scale

    @classmethod
    def identity(cls, n: int, mean=None) -> "WhiteningModel":
        mu = np.zeros(n) if mean is None else _as_vector(mean)
        return cls(mu, np.eye(n), np.ones(n))


def build_whitening(data, rule, whiten: bool = True, cond_floor: float = 1e-10) -> WhiteningModel:
    """Fit a whitening model on ``data``.

    ``rule`` selects the retained component count: "broken_stick",
    "kaiser", or a fixed integer k.  Components whose eigenvalue falls
    below ``cond_floor`` times the leading one are inadmissible; asking
    for more raises IllConditionedError naming the largest usable k.
    """
    pca = fit_pca(data)
    if isinstance(rule, bool):
        raise ValueError("rule must be 'broken_stick', 'kaiser', or an integer k")
    if isinstance(rule, (int, np.integer)):
        k = int(rule)
    elif rule == "broken_stick":
        k = broken_stick_count(pca.eigenvalues)
    elif rule == "kaiser":
        k = kaiser_count(pca.eigenvalues)
    else:
        raise ValueError(f"unknown component rule {rule!r}")
    if k < 1:
        raise IllConditionedError(f"component rule {rule!r} retained no components")
    if k > pca.eigenvalues.size:
        raise ValueError(f"k={k} exceeds the number of components {pca.eigenvalues.size}")
    admissible = int((pca.eigenvalues >= cond_floor * pca.eigenvalues[0]).sum())
    if k > admissible:
        raise IllConditionedError(
            f"retained spectrum is ill-conditioned at k={k}; "
            f"largest admissible k is {admissible}"
        )
    scale = 1.0 / np.sqrt(pca.eigenvalues[:k]) if whiten else np.ones(k)
    return WhiteningModel(pca.mean, pca.basis[:k], scale)


@dataclass(frozen=True)
class CorrectorModel:
    """A fitted corrector: whitening plus a predicate cascade.

    ``apply`` whitens the input and evaluates the cascade; a true flag
    means the row is filtered out as a mistake.  The cascade's predicates
    live in the whitened k-space.
    """

    whitening: WhiteningModel
    cascade: CascadePredicate
    kind: str
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown corrector kind {self.kind!r}; expected one of {KINDS}")
        for clause in self.cascade.clauses:
            for pred in clause.predicates:
                if pred.n != self.whitening.k:
                    raise ValueError(
                        f"cascade predicate dimension {pred.n} does not match "
                        f"whitened space k={self.whitening.k}"
                    )

    def apply(self, x) -> bool | np.ndarray:
        return self.cascade.evaluate(self.whitening.transform(x))


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows tagged 'positive' (keep) or 'trash' (mistake)."""

    features: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        feats = _as_matrix(self.features)
        labels = tuple(self.labels)
        if len(labels) != feats.shape[0]:
            raise ValueError("one label per feature row required")
        bad = sorted({l for l in labels if l not in LABELS})
        if bad:
            raise ValueError(f"unknown labels {bad}; expected {LABELS}")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def trash_mask(self) -> np.ndarray:
        return np.array([l == "trash" for l in self.labels], dtype=bool)

    @property
    def positives(self) -> np.ndarray:
        return self.features[~self.trash_mask]

    @property
    def trash(self) -> np.ndarray:
        return self.features[self.trash_mask]


@dataclass(frozen=True)
class Metrics:
    """Removal counts and rates per label; rate is 0 for an absent label."""

    tp_total: int
    tp_removed: int
    fp_total: int
    fp_removed: int

    def __post_init__(self) -> None:
        if self.tp_removed > self.tp_total or self.fp_removed > self.fp_total:
            raise ValueError("removed counts cannot exceed totals")

    @property
    def tp_removal_rate(self) -> float:
        return self.tp_removed / self.tp_total if self.tp_total else 0.0

    @property
    def fp_removal_rate(self) -> float:
        return self.fp_removed / self.fp_total if self.fp_total else 0.0


def _single_predicate_model(
    whitening: WhiteningModel, pred: LinearPredicate, kind: str, metadata: dict
) -> CorrectorModel:
    cascade = CascadePredicate((ConjunctionClause((pred,)),))
    return CorrectorModel(whitening, cascade, kind, metadata)


def spherical_cap_corrector(positives, query) -> CorrectorModel:
    """Cap filter for one mistake: after centering on the positives' mean,
    flag everything at least as far along the query direction as the query
    itself (``<q/|q|, x - mean> >= |q|``, closed, so the query is flagged)."""
    pos = _as_matrix(positives)
    q = _as_vector(query)
    mean = pos.mean(axis=0)
    centered = q - mean
    radius = float(np.linalg.norm(centered))
    if radius == 0.0:
        raise ValueError("query coincides with the positives' mean")
    whitening = WhiteningModel.identity(pos.shape[1], mean=mean)
    unit = centered / radius
    # threshold is |q - mean|; pin it to the score the apply path computes
    # for the query so the query stays flagged despite rounding
    score = float(whitening.transform(q) @ unit)
    pred = LinearPredicate(unit, min(radius, score), closed=True)
    meta = {"positives": pos.shape[0], "query_distance": radius}
    return _single_predicate_model(whitening, pred, "spherical_cap", meta)


def _query_is_member(positives: np.ndarray, query: np.ndarray) -> bool:
    return bool((positives == query).all(axis=1).any())


def fisher_corrector_single(positives, query, whitening: WhiteningModel) -> CorrectorModel:
    """Fisher discriminant filter for one mistake, in whitened space.

    Direction = whitened query minus the mean of the whitened positives
    (leave-one-out mean when the query is itself a row of the positives,
    matched exactly); threshold at the query's own projection, closed."""
    pos = _as_matrix(positives)
    q = _as_vector(query)
    wp = whitening.transform(pos)
    wq = whitening.transform(q)
    if _query_is_member(pos, q):
        others_mean = (wp.sum(axis=0) - wq) / (pos.shape[0] - 1)
    else:
        others_mean = wp.mean(axis=0)
    w = wq - others_mean
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ValueError("degenerate direction: query equals the positives' whitened mean")
    unit = w / norm
    # threshold along the apply path's arithmetic keeps the query flagged
    pred = LinearPredicate(unit, float(wq @ unit), closed=True)
    meta = {"positives": pos.shape[0], "member_query": _query_is_member(pos, q)}
    return _single_predicate_model(whitening, pred, "fisher_single", meta)


def fisher_corrector_multi(positives, trash, whitening: WhiteningModel) -> CorrectorModel:
    """Pooled-covariance Fisher filter flagging a whole set of mistakes.

    Direction = (cov_positives + cov_trash)^-1 (mean_trash - mean_positives)
    in whitened space; a single trash point contributes a zero covariance.
    The threshold is the smallest trash projection, so every training
    mistake is flagged by construction."""
    pos = _as_matrix(positives)
    tr = _as_matrix(trash)
    if tr.shape[0] < 1:
        raise ValueError("at least one trash row required")
    wp = whitening.transform(pos)
    wt = whitening.transform(tr)
    k = whitening.k
    cov_pos = np.cov(wp, rowvar=False).reshape(k, k) if pos.shape[0] > 1 else np.zeros((k, k))
    cov_trash = np.cov(wt, rowvar=False).reshape(k, k) if tr.shape[0] > 1 else np.zeros((k, k))
    pooled = cov_pos + cov_trash
    eigs = np.linalg.eigvalsh(pooled)
    if eigs[0] <= 1e-12 * max(eigs[-1], 1.0):
        raise IllConditionedError(
            "pooled covariance is singular in the whitened space; "
            "reduce the retained component count"
        )
    w = np.linalg.solve(pooled, wt.mean(axis=0) - wp.mean(axis=0))
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ValueError("degenerate direction: class means coincide")
    unit = w / norm
    threshold = float((wt @ unit).min())
    pred = LinearPredicate(unit, threshold, closed=True)
    meta = {"positives": pos.shape[0], "trash": tr.shape[0]}
    model = _single_predicate_model(whitening, pred, "fisher_multi", meta)
    assert bool(np.asarray(model.apply(tr)).all()), "training trash must all be flagged"
    return model


def two_neuron_corrector(positives, query, whitening: WhiteningModel | None = None) -> CorrectorModel:
    """Two-predicate cascade filter for one mistake.

    Works in whitened space (default: plain centering on the positives'
    mean) and delegates the construction to the two-neuron builder, so the
    clause flags the query and none of the positives."""
    pos = _as_matrix(positives)
    q = _as_vector(query)
    if whitening is None:
        whitening = WhiteningModel.identity(pos.shape[1], mean=pos.mean(axis=0))
    wp = whitening.transform(pos)
    wq = whitening.transform(q)
    clause = build_two_neuron(wq, wp)
    meta = {"positives": pos.shape[0], "predicates": len(clause.predicates)}
    return CorrectorModel(whitening, CascadePredicate((clause,)), "two_neuron", meta)


@dataclass(frozen=True)
class SvmConfig:
    """Hyper-parameters for the hinge-loss baseline."""

    epochs: int = 200
    step: float = 0.5
    regularization: float = 1e-4
    seed: int = 0


def svm_baseline(
    positives, trash, config: SvmConfig | None = None, whitening: WhiteningModel | None = None
) -> CorrectorModel:
    """Linear hinge-loss classifier trained by seeded stochastic
    subgradient descent; flags the trash side.

    Not a one-shot construction: it is the iterative benchmark.  The
    training-set separation rate lands in the metadata ("train_accuracy",
    "separated"); lack of convergence is reported there, never hidden."""
    cfg = config or SvmConfig()
    pos = _as_matrix(positives)
    tr = _as_matrix(trash)
    if pos.shape[0] == 0 or tr.shape[0] == 0:
        raise ValueError("both classes must be non-empty")
    if whitening is None:
        whitening = WhiteningModel.identity(pos.shape[1])
    x = np.vstack([whitening.transform(pos), whitening.transform(tr)])
    y = np.concatenate([-np.ones(pos.shape[0]), np.ones(tr.shape[0])])
    rng = generator(SeedSpec(cfg.seed))
    w = np.zeros(x.shape[1])
    b = 0.0
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(x.shape[0]):
            t += 1
            eta = cfg.step / (1.0 + cfg.step * cfg.regularization * t)
            w *= 1.0 - eta * cfg.regularization
            if y[i] * (x[i] @ w + b) < 1.0:
                w += eta * y[i] * x[i]
                b += eta * y[i]
    if not w.any():
        raise ValueError("subgradient training collapsed to zero weights")
    scores = x @ w + b
    accuracy = float(((scores >= 0.0) == (y > 0)).mean())
    pred = LinearPredicate(w, -b, closed=True)
    meta = {
        "train_accuracy": accuracy,
        "separated": accuracy == 1.0,
        "epochs": cfg.epochs,
        "step": cfg.step,
        "regularization": cfg.regularization,
        "seed": cfg.seed,
    }
    return _single_predicate_model(whitening, pred, "svm_baseline", meta)


def _same_whitening(a: WhiteningModel, b: WhiteningModel) -> bool:
    return (
        np.array_equal(a.mean, b.mean)
        and np.array_equal(a.basis, b.basis)
        and np.array_equal(a.scale, b.scale)
    )


def assemble_cascade(models: list[CorrectorModel]) -> CorrectorModel:
    """OR the cascades of several correctors sharing one whitening."""
    if not models:
        raise ValueError("need at least one model to assemble")
    head = models[0]
    for other in models[1:]:
        if not _same_whitening(head.whitening, other.whitening):
            raise ValueError("models have incompatible whitening transforms")
    clauses = tuple(c for m in models for c in m.cascade.clauses)
    meta = {"constituents": [m.kind for m in models]}
    return CorrectorModel(head.whitening, CascadePredicate(clauses), "cascade", meta)


def evaluate(model: CorrectorModel, data: LabeledDataset) -> Metrics:
    """Count flagged rows per label."""
    if data.features.shape[0] == 0:
        raise ValueError("empty dataset")
    flags = np.asarray(model.apply(data.features))
    trash = data.trash_mask
    return Metrics(
        tp_total=int((~trash).sum()),
        tp_removed=int(flags[~trash].sum()),
        fp_total=int(trash.sum()),
        fp_removed=int(flags[trash].sum()),
    )
