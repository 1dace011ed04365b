"""Ranking loss, the train-to-test benchmark protocol, and rank summaries.

A benchmark problem is a (train, test) dataset pair.  Every method is run
``repeats`` times with independently spawned random streams (coin flips,
cross-validation folds, and solver seeds are re-randomized per run), the
ranking loss is averaged over the test queries of each run, and methods are
ranked by mean loss with equal means sharing the lower rank.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from . import baselines as bl
from .data import (
    NormalizationMode,
    NormalizationScope,
    RankedDataset,
    choose_normalization_scope,
    normalize_train_test,
)
from .kernel import KernelVariant
from .ranker import anker_fit, anker_predict
from .svm import DEFAULT_C_GRID

METHOD_NAMES = ("anker", "err", "ranksvm", "able2rank")


def ranking_loss(pi: np.ndarray, pi_star: np.ndarray) -> float:
    """Normalized number of discordant item pairs between two rankings.

    Both arguments assign a position to each item; the loss is the number of
    item pairs ordered differently, divided by n(n-1)/2.
    """
    pi = np.asarray(pi, dtype=int)
    pi_star = np.asarray(pi_star, dtype=int)
    if pi.shape != pi_star.shape or pi.ndim != 1:
        raise ValueError("rankings must be 1-D and equally long")
    n = pi.size
    if n < 2:
        raise ValueError("ranking loss needs at least two items")
    before = pi[:, None] < pi[None, :]
    before_star = pi_star[:, None] < pi_star[None, :]
    discordant = int(np.sum(before & ~before_star))
    return discordant / (n * (n - 1) / 2)


@dataclass(frozen=True)
class MethodConfig:
    """Shared knobs for the benchmark methods."""

    variant: KernelVariant = KernelVariant.POLY2
    C: float | None = None
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    able2rank_k: int = 20
    pair_cap: int | None = None
    alpha: float = 0.05
    scope: NormalizationScope | None = None
    smo_tol: float = 1e-3


@dataclass(frozen=True)
class ExperimentResult:
    """Per-method outcome of one benchmark problem."""

    method: str
    mean_loss: float
    std_loss: float
    losses: np.ndarray
    rank: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "losses", np.asarray(self.losses, dtype=float))


def _normalized_views(train: RankedDataset, test: RankedDataset, mode: NormalizationMode,
                      config: MethodConfig) -> tuple[RankedDataset, list[np.ndarray], list[np.ndarray]]:
    """Normalize train and test item rows once per problem for one method family."""
    scope = config.scope
    if scope is None:
        scope = choose_normalization_scope(train.all_items(), test.all_items(), alpha=config.alpha)
    train_norm, test_norm, _ = normalize_train_test(
        train.all_items(), test.all_items(), mode, scope
    )
    train_ds = train.with_items(train_norm)
    queries = []
    truths = []
    offset = 0
    for query in test.queries:
        queries.append(test_norm[offset : offset + query.n_items])
        truths.append(query.ranking)
        offset += query.n_items
    return train_ds, queries, truths


def _run_anker(train, test, seed, config):
    train_ds, queries, truths = _normalized_views(train, test, NormalizationMode.MINMAX, config)
    model = anker_fit(train_ds, variant=config.variant, C=config.C,
                      grid=config.c_grid, seed=seed, cap=config.pair_cap,
                      smo_tol=config.smo_tol)
    return [ranking_loss(anker_predict(model, q).ranking, t) for q, t in zip(queries, truths)]


def _run_err(train, test, seed, config):
    del seed  # fully deterministic
    train_ds, queries, truths = _normalized_views(train, test, NormalizationMode.ZSCORE, config)
    model = bl.err_fit(train_ds)
    return [ranking_loss(bl.err_rank(model, q), t) for q, t in zip(queries, truths)]


def _run_ranksvm(train, test, seed, config):
    train_ds, queries, truths = _normalized_views(train, test, NormalizationMode.ZSCORE, config)
    model = bl.ranksvm_fit(train_ds, C=config.C, grid=config.c_grid, seed=seed,
                           smo_tol=config.smo_tol)
    return [ranking_loss(bl.ranksvm_rank(model, q), t) for q, t in zip(queries, truths)]


def _run_able2rank(train, test, seed, config):
    del seed  # fully deterministic
    train_ds, queries, truths = _normalized_views(train, test, NormalizationMode.MINMAX, config)
    return [ranking_loss(bl.able2rank_lite(train_ds, q, k=config.able2rank_k).ranking, t)
            for q, t in zip(queries, truths)]


_RUNNERS = {
    "anker": _run_anker,
    "err": _run_err,
    "ranksvm": _run_ranksvm,
    "able2rank": _run_able2rank,
}


def score_external_orderings(test: RankedDataset, orderings) -> float:
    """Mean ranking loss of externally produced orderings over the test queries.

    ``orderings`` holds one best-to-worst item index list per test query, in
    query order; this is how rankings from methods outside this package (for
    example neural baselines) enter the benchmark.
    """
    orderings = list(orderings)
    if len(orderings) != len(test.queries):
        raise ValueError(
            f"got {len(orderings)} external orderings for {len(test.queries)} test queries"
        )
    losses = []
    for query, ordering in zip(test.queries, orderings):
        ordering = np.asarray(ordering, dtype=int)
        if sorted(ordering.tolist()) != list(range(query.n_items)):
            raise ValueError(
                f"external ordering for query {query.query_id!r} is not a permutation "
                f"of 0..{query.n_items - 1}"
            )
        losses.append(ranking_loss(np.argsort(ordering), query.ranking))
    return float(np.mean(losses))


def competition_ranks(means) -> np.ndarray:
    """1-based ranks of scores (lower is better); equal scores share the lower rank."""
    means = np.asarray(means, dtype=float)
    return np.array([1 + int(np.sum(means < m)) for m in means])


def run_experiment(train: RankedDataset, test: RankedDataset, methods,
                   repeats: int = 20, seed: int = 0,
                   config: MethodConfig | None = None,
                   externals: dict | None = None) -> list[ExperimentResult]:
    """Run each method ``repeats`` times on a train-to-test problem.

    The master seed spawns one stream per method and one per run, so methods
    see uncorrelated randomness while the whole experiment is reproducible.
    Per-run loss is the unweighted mean ranking loss over the test queries.

    ``externals`` maps extra method names to pre-computed per-query orderings
    (best-to-worst item indices); those enter the comparison with a constant
    loss across repeats.
    """
    if config is None:
        config = MethodConfig()
    externals = externals or {}
    methods = list(methods)
    for name in methods:
        if name not in _RUNNERS and name not in externals:
            raise ValueError(f"unsupported method {name!r} (known: {', '.join(METHOD_NAMES)})")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")

    master = np.random.SeedSequence(seed)
    method_streams = master.spawn(len(methods))
    results = []
    for name, stream in zip(methods, method_streams):
        if name in _RUNNERS:
            run_streams = stream.spawn(repeats)
            losses = np.empty(repeats)
            for r, run_stream in enumerate(run_streams):
                run_seed = int(run_stream.generate_state(1)[0])
                losses[r] = float(np.mean(_RUNNERS[name](train, test, run_seed, config)))
        else:
            losses = np.full(repeats, score_external_orderings(test, externals[name]))
        mean = float(losses.mean())
        std = float(losses.std(ddof=1)) if repeats > 1 else 0.0
        results.append(ExperimentResult(method=name, mean_loss=mean, std_loss=std, losses=losses))
    ranks = competition_ranks([r.mean_loss for r in results])
    return [replace(r, rank=int(k)) for r, k in zip(results, ranks)]


def average_ranks(rank_matrix) -> np.ndarray:
    """Mean rank per method over a problems-by-methods rank matrix."""
    matrix = np.asarray(rank_matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("expected a 2-D problems-by-methods rank matrix")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("rank matrix has missing entries")
    return matrix.mean(axis=0)


def results_to_csv(results: list[ExperimentResult], problem: str) -> str:
    """Serialize results as ``problem,method,mean,std,rank`` CSV text."""
    out = io.StringIO()
    out.write("problem,method,mean,std,rank\n")
    for r in results:
        out.write(f"{problem},{r.method},{r.mean_loss:.6f},{r.std_loss:.6f},{r.rank}\n")
    return out.getvalue()


def format_results_table(results: list[ExperimentResult], problem: str) -> str:
    """Human-readable one-row table: mean +- std with the per-problem rank."""
    header = ["problem"] + [r.method for r in results]
    row = [problem] + [f"{r.mean_loss:.3f} +- {r.std_loss:.3f} ({r.rank})" for r in results]
    widths = [max(len(h), len(c)) for h, c in zip(header, row)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    body = "  ".join(c.ljust(w) for c, w in zip(row, widths))
    rule = "-" * len(line)
    return "\n".join([line, rule, body])
