"""The analogy-kernel ranking pipeline.

Training rankings are decomposed into labeled ordered item pairs, an SVM with
the analogy kernel learns the pairwise preference direction, calibrated
outputs are combined into a reciprocal preference matrix, and a
Bradley-Terry-Luce fit turns that matrix into a total order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import (
    NormalizationMode,
    NormalizationScope,
    NormalizationStats,
    RankedDataset,
    choose_normalization_scope,
    minmax_fit_apply,
    normalize_train_test,
)
from .kernel import KernelVariant, _as_pair_arrays, gram_matrix, kernel_matrix
from .svm import (
    DEFAULT_C_GRID,
    PlattParams,
    SvmModel,
    decision_values,
    platt_fit,
    platt_prob,
    select_c,
    smo_train,
)

logger = logging.getLogger(__name__)

PREFERENCE_CLIP = 1e-6


@dataclass(frozen=True)
class PairInstance:
    """An ordered item pair; label +1 means the first item is preferred."""

    first: np.ndarray
    second: np.ndarray
    label: int


@dataclass(frozen=True)
class BtlParams:
    """Fitted Bradley-Terry-Luce utilities on the simplex (sum 1, all positive)."""

    theta: np.ndarray
    iterations: int
    converged: bool
    log_likelihood_path: np.ndarray

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", theta)
        if np.any(theta <= 0) or abs(theta.sum() - 1.0) > 1e-9:
            raise ValueError("theta must be positive and sum to 1")


@dataclass(frozen=True)
class RankPrediction:
    """Predicted order of a query: positions, ordering, utilities, preferences."""

    ranking: np.ndarray
    ordering: np.ndarray
    theta: np.ndarray
    preference: np.ndarray


@dataclass(frozen=True)
class AnkerModel:
    """A trained preference model plus everything needed to rank new queries.

    ``stats`` records how the training side was normalized; it is required
    for persistence so that later queries can be rescaled consistently.
    """

    svm: SvmModel
    pair_first: np.ndarray
    pair_second: np.ndarray
    stats: NormalizationStats | None = None


def build_pair_instances(data: RankedDataset, seed: int = 0,
                         cap: int | None = None) -> list[PairInstance]:
    """Extract one labeled instance per ordered preference in the training rankings.

    Each preference contributes either (preferred, other, +1) or
    (other, preferred, -1), chosen by a seeded fair coin so labels stay
    balanced.  An optional cap subsamples the result uniformly.
    """
    rng = np.random.default_rng(seed)
    instances: list[PairInstance] = []
    for query in data.queries:
        if query.n_items < 2:
            raise ValueError(f"query {query.query_id!r} has fewer than two items")
        ordering = query.ordering
        for a in range(query.n_items - 1):
            preferred = query.items[ordering[a]]
            for b in range(a + 1, query.n_items):
                other = query.items[ordering[b]]
                if rng.random() < 0.5:
                    instances.append(PairInstance(preferred, other, 1))
                else:
                    instances.append(PairInstance(other, preferred, -1))
    if cap is not None and cap < len(instances):
        keep = np.sort(rng.choice(len(instances), size=cap, replace=False))
        instances = [instances[i] for i in keep]
    return instances


def pairs_to_arrays(instances) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split pair instances into (firsts, seconds, labels) arrays."""
    first = np.asarray([p.first for p in instances], dtype=float)
    second = np.asarray([p.second for p in instances], dtype=float)
    labels = np.asarray([p.label for p in instances], dtype=float)
    return first, second, labels


def reciprocal_preferences(support_forward: np.ndarray, support_backward: np.ndarray,
                           n_items: int) -> np.ndarray:
    """Combine directional support degrees into a reciprocal preference matrix.

    ``support_forward[m]`` backs item i over item j and ``support_backward[m]``
    backs j over i, for the m-th pair (i, j) with i < j in row-major order.
    The combined estimate is (1 + forward - backward) / 2; the opposite entry
    is its exact complement and the diagonal is 0.5.
    """
    rows, cols = np.triu_indices(n_items, k=1)
    if support_forward.shape != rows.shape or support_backward.shape != rows.shape:
        raise ValueError("support degrees do not match the number of item pairs")
    pref = np.full((n_items, n_items), 0.5)
    # Grouping the difference first makes equal support yield exactly 0.5.
    upper = (1.0 + (support_forward - support_backward)) / 2.0
    pref[rows, cols] = upper
    pref[cols, rows] = 1.0 - upper
    return pref


def preference_matrix(model: SvmModel, train_pairs, query: np.ndarray) -> np.ndarray:
    """Reciprocal pairwise preference estimates for a query item set.

    For each ordered query pair the calibrated model output is a degree of
    support; opposite orientations are combined via
    p_ij = (1 + q_ij - q_ji) / 2, which makes the matrix reciprocal.
    """
    if model.platt is None or model.variant is None:
        raise ValueError("model must carry a kernel variant and calibration parameters")
    query = np.asarray(query, dtype=float)
    n = query.shape[0]
    first, second = _as_pair_arrays(train_pairs)
    support_first = first[model.support]
    support_second = second[model.support]
    rows, cols = np.triu_indices(n, k=1)
    forward = (query[rows], query[cols])
    backward = (query[cols], query[rows])
    if model.support.size:
        k_fwd = kernel_matrix(forward, (support_first, support_second), model.variant)
        k_bwd = kernel_matrix(backward, (support_first, support_second), model.variant)
        q_fwd = platt_prob(model.platt, decision_values(model, k_fwd))
        q_bwd = platt_prob(model.platt, decision_values(model, k_bwd))
    else:
        q_fwd = q_bwd = np.full(rows.size, platt_prob(model.platt, model.bias))
    return reciprocal_preferences(np.asarray(q_fwd), np.asarray(q_bwd), n)


def btl_log_likelihood(pref: np.ndarray, theta: np.ndarray) -> float:
    """Log-likelihood of utilities under the pairwise preference weights."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    off = ~np.eye(n, dtype=bool)
    pairwise = np.log(theta[:, None]) - np.log(theta[:, None] + theta[None, :])
    return float(np.sum(pref[off] * pairwise[off]))


def btl_fit(pref: np.ndarray, tol: float = 1e-10, max_iter: int = 1000) -> BtlParams:
    """Maximum-likelihood Bradley-Terry-Luce utilities via minorization-maximization.

    Entries are clipped away from {0, 1} so the maximizer stays finite.  Each
    sweep applies theta_i <- sum_j p_ij / sum_j (p_ij + p_ji) / (theta_i + theta_j)
    and renormalizes to the simplex; the likelihood never decreases.
    """
    pref = np.asarray(pref, dtype=float)
    n = pref.shape[0]
    if pref.ndim != 2 or pref.shape != (n, n):
        raise ValueError("preference matrix must be square")
    off = ~np.eye(n, dtype=bool)
    recip_gap = np.max(np.abs(pref[off] + pref.T[off] - 1.0)) if n > 1 else 0.0
    if recip_gap > 1e-9:
        raise ValueError(f"preference matrix is not reciprocal (max gap {recip_gap:.3e})")
    p = pref.copy()
    p[off] = np.clip(p[off], PREFERENCE_CLIP, 1.0 - PREFERENCE_CLIP)
    if n == 1:
        return BtlParams(np.ones(1), 0, True, np.zeros(1))

    theta = np.full(n, 1.0 / n)
    path = [btl_log_likelihood(p, theta)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        wins = np.where(off, p, 0.0).sum(axis=1)
        pair_weight = np.where(off, p + p.T, 0.0)
        denom = (pair_weight / (theta[:, None] + theta[None, :])).sum(axis=1)
        new_theta = wins / denom
        new_theta = new_theta / new_theta.sum()
        path.append(btl_log_likelihood(p, new_theta))
        if path[-1] < path[-2] - 1e-9:
            raise RuntimeError("likelihood decreased during a minorization-maximization sweep")
        delta = float(np.max(np.abs(new_theta - theta)))
        theta = new_theta
        if delta < tol:
            converged = True
            break
    return BtlParams(theta, iterations, converged, np.asarray(path))


def rank_from_theta(theta) -> np.ndarray:
    """Positions from utilities: higher theta ranks earlier, ties keep index order."""
    if isinstance(theta, BtlParams):
        theta = theta.theta
    theta = np.asarray(theta, dtype=float)
    ordering = np.lexsort((np.arange(theta.size), -theta))
    ranking = np.empty(theta.size, dtype=int)
    ranking[ordering] = np.arange(theta.size)
    return ranking


def ordering_from_ranking(ranking: np.ndarray) -> np.ndarray:
    """Item indices best-to-worst (the inverse permutation of the positions)."""
    return np.argsort(np.asarray(ranking, dtype=int), kind="stable")


def anker_fit(train: RankedDataset, stats: NormalizationStats | None = None, *,
              variant: KernelVariant = KernelVariant.POLY2, C: float | None = None,
              grid=DEFAULT_C_GRID, seed: int = 0, cap: int | None = None,
              smo_tol: float = 1e-3) -> AnkerModel:
    """Train the preference SVM on an already-normalized dataset.

    Builds the labeled pair instances, picks the cost by repeated internal
    cross-validation when ``C`` is None, trains by SMO, and calibrates the
    decision values on the training pairs.
    """
    instances = build_pair_instances(train, seed=seed, cap=cap)
    first, second, labels = pairs_to_arrays(instances)
    gram = gram_matrix((first, second), variant)
    if C is None:
        C = select_c(gram, labels, grid=grid, seed=seed, tol=smo_tol)
        logger.debug("selected C=%g by cross-validation", C)
    model = smo_train(gram, labels, C, tol=smo_tol, seed=seed)
    train_decisions = decision_values(model, gram[:, model.support])
    model = model.with_variant(variant).with_platt(platt_fit(train_decisions, labels))
    return AnkerModel(svm=model, pair_first=first, pair_second=second, stats=stats)


def anker_predict(model: AnkerModel, query: np.ndarray) -> RankPrediction:
    """Rank an already-normalized query item set with a trained model."""
    query = np.asarray(query, dtype=float)
    if query.ndim != 2 or query.shape[0] < 2:
        raise ValueError("a query needs at least two items")
    pref = preference_matrix(model.svm, (model.pair_first, model.pair_second), query)
    params = btl_fit(pref)
    ranking = rank_from_theta(params)
    return RankPrediction(
        ranking=ranking,
        ordering=ordering_from_ranking(ranking),
        theta=params.theta,
        preference=pref,
    )


def anker_rank(train: RankedDataset, query: np.ndarray, *,
               variant: KernelVariant = KernelVariant.POLY2, C: float | None = None,
               grid=DEFAULT_C_GRID, seed: int = 0, cap: int | None = None,
               scope: NormalizationScope | None = None, alpha: float = 0.05,
               smo_tol: float = 1e-3) -> RankPrediction:
    """Rank a query item set given training rankings (the full pipeline).

    Normalization to the unit cube follows the distribution gate: features are
    min-max rescaled on the pooled train-plus-query rows unless a per-feature
    KS test (level ``alpha``, Bonferroni corrected) rejects distributional
    equality, in which case the query is rescaled on its own.
    """
    query = np.asarray(query, dtype=float)
    if query.ndim != 2 or query.shape[1] != train.n_features:
        raise ValueError(
            f"query items must be (n, {train.n_features}), got {query.shape}"
        )
    if scope is None:
        scope = choose_normalization_scope(train.all_items(), query, alpha=alpha)
    train_norm, query_norm, stats = normalize_train_test(
        train.all_items(), query, NormalizationMode.MINMAX, scope
    )
    train_ds = train.with_items(train_norm)
    model = anker_fit(train_ds, stats, variant=variant, C=C, grid=grid, seed=seed,
                      cap=cap, smo_tol=smo_tol)
    return anker_predict(model, query_norm)


# ---------------------------------------------------------------------------
# Model persistence

def _stats_to_dict(stats: NormalizationStats) -> dict:
    def arr(x):
        return None if x is None else np.asarray(x, dtype=float).tolist()

    return {
        "mode": stats.mode.value,
        "scope": None if stats.scope is None else stats.scope.value,
        "minimum": arr(stats.minimum),
        "maximum": arr(stats.maximum),
        "mean": arr(stats.mean),
        "std": arr(stats.std),
    }


def _stats_from_dict(payload: dict) -> NormalizationStats:
    def arr(x):
        return None if x is None else np.asarray(x, dtype=float)

    return NormalizationStats(
        mode=NormalizationMode(payload["mode"]),
        scope=None if payload["scope"] is None else NormalizationScope(payload["scope"]),
        minimum=arr(payload["minimum"]),
        maximum=arr(payload["maximum"]),
        mean=arr(payload["mean"]),
        std=arr(payload["std"]),
    )


def save_model(model: AnkerModel, path: str | Path) -> None:
    """Persist a trained model as a self-describing JSON blob."""
    svm = model.svm
    if svm.variant is None:
        raise ValueError("cannot persist a model without its kernel variant")
    if model.stats is None:
        raise ValueError("cannot persist a model without its normalization statistics")
    payload = {
        "format": "ankerrank-model",
        "version": 1,
        "alpha": svm.alpha[svm.support].tolist(),
        "labels": svm.labels[svm.support].tolist(),
        "bias": svm.bias,
        "C": svm.C,
        "tol": svm.tol,
        "kernel": svm.variant.value,
        "platt": None if svm.platt is None else {"a": svm.platt.a, "b": svm.platt.b},
        "support_first": model.pair_first[svm.support].tolist(),
        "support_second": model.pair_second[svm.support].tolist(),
        "normalization": _stats_to_dict(model.stats),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> AnkerModel:
    """Load a model persisted by save_model."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "ankerrank-model":
        raise ValueError(f"{path} is not an ankerrank model file")
    alpha = np.asarray(payload["alpha"], dtype=float)
    labels = np.asarray(payload["labels"], dtype=float)
    platt = payload["platt"]
    svm = SvmModel(
        alpha=alpha,
        labels=labels,
        support=np.arange(alpha.size),
        bias=float(payload["bias"]),
        C=float(payload["C"]),
        tol=float(payload["tol"]),
        variant=KernelVariant(payload["kernel"]),
        platt=None if platt is None else PlattParams(float(platt["a"]), float(platt["b"])),
    )
    return AnkerModel(
        svm=svm,
        pair_first=np.asarray(payload["support_first"], dtype=float),
        pair_second=np.asarray(payload["support_second"], dtype=float),
        stats=_stats_from_dict(payload["normalization"]),
    )


def normalize_query_with_stats(query: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Apply persisted training-time statistics to a new query (clamped to [0, 1])."""
    if stats.mode is not NormalizationMode.MINMAX:
        raise ValueError("analogy-side models are normalized with min-max statistics")
    out, _ = minmax_fit_apply(np.asarray(query, dtype=float), stats)
    return out
