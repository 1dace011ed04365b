"""Item tables, ranked datasets, CSV ingestion, and feature normalization.

The dataset file format is CSV with header ``query_id,rank,<f1>,<f2>,...``:
one row per item, rank 1 = most preferred within its query.  Feature columns
may carry a kind suffix in the header (``price:numeric``, ``flag:binary``,
``stars:ordinal{1<2<3<4<5}``); unsuffixed columns are numeric when every
value parses as a float, binary when exactly two distinct raw values occur.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    """An input file, schema, or value violates the dataset contract."""


class FeatureKind(Enum):
    NUMERIC = "numeric"
    BINARY = "binary"
    ORDINAL = "ordinal"


class NormalizationMode(Enum):
    MINMAX = "minmax"
    ZSCORE = "zscore"


class NormalizationScope(Enum):
    TEST_ONLY = "test-only"
    TRAIN_PLUS_TEST = "train+test"


@dataclass(frozen=True)
class FeatureSchema:
    """Names, kinds, and (for binary/ordinal features) ordered raw levels.

    ``levels[k]`` is None for numeric features, the two raw values mapped to
    0 and 1 for binary features, and the full ordered level list for ordinal
    features (encoded as index / (len(levels) - 1)).
    """

    names: tuple[str, ...]
    kinds: tuple[FeatureKind, ...]
    levels: tuple[tuple[str, ...] | None, ...]

    def __post_init__(self) -> None:
        if not (len(self.names) == len(self.kinds) == len(self.levels)):
            raise DataFormatError("schema names, kinds, and levels must have equal length")
        for name, kind, lev in zip(self.names, self.kinds, self.levels):
            if kind is FeatureKind.NUMERIC and lev is not None:
                raise DataFormatError(f"numeric feature {name!r} must not declare levels")
            if kind is FeatureKind.BINARY and (lev is None or len(lev) != 2):
                raise DataFormatError(f"binary feature {name!r} must take exactly two raw values")
            if kind is FeatureKind.ORDINAL and (lev is None or len(lev) < 2):
                raise DataFormatError(f"ordinal feature {name!r} needs an ordered level list")
            if lev is not None and len(set(lev)) != len(lev):
                raise DataFormatError(f"feature {name!r} has duplicate levels")

    @property
    def n_features(self) -> int:
        return len(self.names)

    def encode(self, index: int, raw: str) -> float:
        """Numeric code of one raw cell value for feature ``index``."""
        kind = self.kinds[index]
        if kind is FeatureKind.NUMERIC:
            try:
                return float(raw)
            except ValueError:
                raise DataFormatError(
                    f"non-numeric value {raw!r} in numeric column {self.names[index]!r}"
                ) from None
        levels = self.levels[index]
        assert levels is not None
        try:
            pos = levels.index(raw)
        except ValueError:
            raise DataFormatError(
                f"unknown {kind.value} level {raw!r} in column {self.names[index]!r}"
            ) from None
        return pos / (len(levels) - 1)

    def decode(self, index: int, code: float) -> str:
        """Raw cell string for a numeric code (inverse of encode)."""
        kind = self.kinds[index]
        if kind is FeatureKind.NUMERIC:
            return repr(code)
        levels = self.levels[index]
        assert levels is not None
        pos = round(code * (len(levels) - 1))
        return levels[pos]


@dataclass(frozen=True)
class RankedQuery:
    """A query set of items with its ranking.

    ``ranking[k]`` is the 0-based position of item k (0 = most preferred);
    it is a permutation of 0..n-1.
    """

    query_id: str
    items: np.ndarray
    ranking: np.ndarray

    def __post_init__(self) -> None:
        items = np.asarray(self.items, dtype=float)
        ranking = np.asarray(self.ranking, dtype=int)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "ranking", ranking)
        if items.ndim != 2:
            raise DataFormatError("query items must form a 2-D (n, d) array")
        n = items.shape[0]
        if n < 1:
            raise DataFormatError("a query needs at least one item")
        if ranking.shape != (n,) or sorted(ranking.tolist()) != list(range(n)):
            raise DataFormatError(f"ranking of query {self.query_id!r} is not a permutation of 0..{n - 1}")

    @property
    def n_items(self) -> int:
        return int(self.items.shape[0])

    @property
    def ordering(self) -> np.ndarray:
        """Item indices from most to least preferred (inverse of ranking)."""
        return np.argsort(self.ranking, kind="stable")


@dataclass(frozen=True)
class RankedDataset:
    """A feature schema plus one or more ranked queries sharing it."""

    schema: FeatureSchema
    queries: tuple[RankedQuery, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "queries", tuple(self.queries))
        if not self.queries:
            raise DataFormatError("a dataset needs at least one query")
        d = self.schema.n_features
        for q in self.queries:
            if q.items.shape[1] != d:
                raise DataFormatError(
                    f"query {q.query_id!r} has {q.items.shape[1]} features, schema expects {d}"
                )

    @property
    def n_features(self) -> int:
        return self.schema.n_features

    def all_items(self) -> np.ndarray:
        """All item rows stacked across queries, (sum n_l, d)."""
        return np.vstack([q.items for q in self.queries])

    def with_items(self, matrix: np.ndarray) -> "RankedDataset":
        """Copy of the dataset with item rows replaced by ``matrix`` (same stacking order)."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (sum(q.n_items for q in self.queries), self.n_features):
            raise ValueError("replacement matrix shape does not match the dataset")
        out = []
        offset = 0
        for q in self.queries:
            out.append(replace(q, items=matrix[offset : offset + q.n_items]))
            offset += q.n_items
        return RankedDataset(self.schema, tuple(out))


# ---------------------------------------------------------------------------
# CSV ingestion

_ORDINAL_HEADER = re.compile(r"^(?P<name>[^:]+):ordinal\{(?P<levels>[^}]*)\}$")


def _parse_header_cell(cell: str) -> tuple[str, FeatureKind | None, tuple[str, ...] | None]:
    cell = cell.strip()
    m = _ORDINAL_HEADER.match(cell)
    if m:
        levels = tuple(part.strip() for part in m.group("levels").split("<"))
        if len(levels) < 2 or any(not lv for lv in levels):
            raise DataFormatError(f"malformed ordinal levels in header cell {cell!r}")
        return m.group("name").strip(), FeatureKind.ORDINAL, levels
    if ":" in cell:
        name, _, kind_str = cell.partition(":")
        kind_str = kind_str.strip()
        if kind_str == "numeric":
            return name.strip(), FeatureKind.NUMERIC, None
        if kind_str == "binary":
            return name.strip(), FeatureKind.BINARY, None
        if kind_str == "ordinal":
            raise DataFormatError(f"ordinal column {name!r} must list its levels, e.g. {name}:ordinal{{a<b<c}}")
        raise DataFormatError(f"unknown feature kind {kind_str!r} in header cell {cell!r}")
    return cell, None, None


def _infer_column(name: str, declared: FeatureKind | None, levels: tuple[str, ...] | None,
                  raw: list[str]) -> tuple[FeatureKind, tuple[str, ...] | None]:
    """Resolve the kind and level list of one column from header info and raw values."""
    if declared is FeatureKind.ORDINAL:
        return declared, levels
    if declared is FeatureKind.BINARY or declared is None:
        distinct = sorted(set(raw))
        if declared is FeatureKind.BINARY:
            if len(distinct) != 2:
                raise DataFormatError(
                    f"binary feature {name!r} must take exactly two raw values, found {len(distinct)}"
                )
            return FeatureKind.BINARY, tuple(distinct)
        # Undeclared: numeric when everything parses, two-valued text is binary.
        try:
            for value in raw:
                float(value)
            return FeatureKind.NUMERIC, None
        except ValueError:
            pass
        if len(distinct) == 2:
            return FeatureKind.BINARY, tuple(distinct)
        raise DataFormatError(
            f"cannot infer a kind for column {name!r}: non-numeric with {len(distinct)} distinct values; "
            "annotate it in the header"
        )
    return FeatureKind.NUMERIC, None


def _check_against_schema(schema: FeatureSchema, names: list[str],
                          declared: list[FeatureKind | None],
                          declared_levels: list[tuple[str, ...] | None]) -> None:
    if len(names) != schema.n_features:
        raise DataFormatError(
            f"expected {schema.n_features} feature columns {list(schema.names)}, found {len(names)}"
        )
    for k, name in enumerate(names):
        if name != schema.names[k]:
            raise DataFormatError(f"feature column {k + 1} is {name!r}, schema expects {schema.names[k]!r}")
        if declared[k] is not None and declared[k] is not schema.kinds[k]:
            raise DataFormatError(
                f"column {name!r} declared as {declared[k].value}, schema expects {schema.kinds[k].value}"
            )
        if declared_levels[k] is not None and declared_levels[k] != schema.levels[k]:
            raise DataFormatError(f"column {name!r} declares levels that differ from the schema")


def load_dataset(path: str | Path, schema: FeatureSchema | None = None) -> RankedDataset:
    """Load a ranked dataset from CSV.

    Args:
        path: CSV file following the dataset contract.
        schema: Optional schema from a previously loaded file; header names
            and kinds must match, and binary/ordinal encodings are taken from
            it so that separately loaded files encode identically.

    Raises:
        DataFormatError: On ragged rows, duplicate or non-contiguous ranks,
            unknown levels, or a header that contradicts ``schema``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    rows = [row for row in rows if row]  # tolerate blank lines
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 3 or header[0].strip() != "query_id" or header[1].strip() != "rank":
        raise DataFormatError(f"{path}: header must start with query_id,rank and have at least one feature")

    names: list[str] = []
    declared: list[FeatureKind | None] = []
    declared_levels: list[tuple[str, ...] | None] = []
    for cell in header[2:]:
        name, kind, levels = _parse_header_cell(cell)
        if not name:
            raise DataFormatError(f"{path}: empty feature name in header")
        names.append(name)
        declared.append(kind)
        declared_levels.append(levels)
    if len(set(names)) != len(names):
        raise DataFormatError(f"{path}: duplicate feature names in header")

    body = rows[1:]
    if not body:
        raise DataFormatError(f"{path}: no data rows")
    width = len(header)
    for line_no, row in enumerate(body, start=2):
        if len(row) != width:
            raise DataFormatError(f"{path}: row {line_no} has {len(row)} fields, expected {width}")

    if schema is not None:
        _check_against_schema(schema, names, declared, declared_levels)
        resolved = schema
    else:
        kinds: list[FeatureKind] = []
        levels_out: list[tuple[str, ...] | None] = []
        for k, name in enumerate(names):
            column = [row[2 + k].strip() for row in body]
            kind, levels = _infer_column(name, declared[k], declared_levels[k], column)
            kinds.append(kind)
            levels_out.append(levels)
        resolved = FeatureSchema(tuple(names), tuple(kinds), tuple(levels_out))

    # Group rows by query_id in first-appearance order.
    groups: dict[str, list[tuple[int, list[str]]]] = {}
    for line_no, row in enumerate(body, start=2):
        qid = row[0].strip()
        try:
            rank = int(row[1])
        except ValueError:
            raise DataFormatError(f"{path}: row {line_no} has non-integer rank {row[1]!r}") from None
        groups.setdefault(qid, []).append((rank, [cell.strip() for cell in row[2:]]))

    queries = []
    for qid, members in groups.items():
        n = len(members)
        seen: set[int] = set()
        for rank, _ in members:
            if rank in seen:
                raise DataFormatError(f"{path}: duplicate rank {rank} in query {qid!r}")
            seen.add(rank)
        if seen != set(range(1, n + 1)):
            raise DataFormatError(
                f"{path}: ranks of query {qid!r} must be exactly 1..{n}, got {sorted(seen)}"
            )
        items = np.empty((n, resolved.n_features))
        ranking = np.empty(n, dtype=int)
        for i, (rank, cells) in enumerate(members):
            ranking[i] = rank - 1
            for k, cell in enumerate(cells):
                items[i, k] = resolved.encode(k, cell)
        queries.append(RankedQuery(qid, items, ranking))
    return RankedDataset(resolved, tuple(queries))


def save_dataset(dataset: RankedDataset, path: str | Path) -> None:
    """Write a dataset in canonical CSV form (kinds annotated, rows in rank order).

    Loading a canonical file and saving it again reproduces it byte for byte.
    """
    schema = dataset.schema
    header = ["query_id", "rank"]
    for name, kind, levels in zip(schema.names, schema.kinds, schema.levels):
        if kind is FeatureKind.NUMERIC:
            header.append(f"{name}:numeric")
        elif kind is FeatureKind.BINARY:
            header.append(f"{name}:binary")
        else:
            assert levels is not None
            header.append(f"{name}:ordinal{{{'<'.join(levels)}}}")
    lines = [",".join(header)]
    for query in dataset.queries:
        for position, item_idx in enumerate(query.ordering):
            cells = [query.query_id, str(position + 1)]
            for k in range(schema.n_features):
                cells.append(schema.decode(k, float(query.items[item_idx, k])))
            lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Normalization

@dataclass(frozen=True)
class NormalizationStats:
    """Fitted per-feature statistics, reusable on other samples."""

    mode: NormalizationMode
    minimum: np.ndarray | None = None
    maximum: np.ndarray | None = None
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    scope: NormalizationScope | None = None


def minmax_fit_apply(data: np.ndarray, stats: NormalizationStats | None = None
                     ) -> tuple[np.ndarray, NormalizationStats]:
    """Rescale each feature to [0, 1] via (x - min) / (max - min).

    Fits min/max from ``data`` unless ``stats`` is given.  Constant features
    map to 0, and outputs are clamped to [0, 1] so that statistics fitted on
    a different sample still produce values in the kernel domain.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError("minmax_fit_apply expects a non-empty (n, d) matrix")
    if stats is None:
        stats = NormalizationStats(
            mode=NormalizationMode.MINMAX,
            minimum=data.min(axis=0),
            maximum=data.max(axis=0),
        )
    elif stats.mode is not NormalizationMode.MINMAX:
        raise ValueError("stats were fitted for a different normalization mode")
    assert stats.minimum is not None and stats.maximum is not None
    span = stats.maximum - stats.minimum
    safe = np.where(span > 0.0, span, 1.0)
    out = (data - stats.minimum) / safe
    out = np.where(span > 0.0, out, 0.0)
    return np.clip(out, 0.0, 1.0), stats


def zscore_fit_apply(data: np.ndarray, stats: NormalizationStats | None = None
                     ) -> tuple[np.ndarray, NormalizationStats]:
    """Standardize each feature via (x - mean) / std (sample std, ddof=1).

    Constant features (std 0) map to 0.  When fitting, every column needs at
    least two values.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("zscore_fit_apply expects an (n, d) matrix")
    if stats is None:
        if data.shape[0] < 2:
            raise ValueError("fitting a zscore normalization needs at least two rows")
        stats = NormalizationStats(
            mode=NormalizationMode.ZSCORE,
            mean=data.mean(axis=0),
            std=data.std(axis=0, ddof=1),
        )
    elif stats.mode is not NormalizationMode.ZSCORE:
        raise ValueError("stats were fitted for a different normalization mode")
    assert stats.mean is not None and stats.std is not None
    safe = np.where(stats.std > 0.0, stats.std, 1.0)
    out = (data - stats.mean) / safe
    return np.where(stats.std > 0.0, out, 0.0), stats


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov gate

@dataclass(frozen=True)
class KsDecision:
    """Two-sample KS outcome: sup ECDF gap, asymptotic p-value, and the verdict."""

    statistic: float
    p_value: float
    alpha: float
    rejected: bool


def _kolmogorov_sf(t: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Uses the alternating series 2 sum (-1)^(j-1) exp(-2 j^2 t^2) for t >= 1
    and the complementary Jacobi theta expansion for small t.
    """
    if t <= 0.0:
        return 1.0
    if t < 1.0:
        total = 0.0
        for j in range(1, 40):
            term = math.exp(-((2 * j - 1) ** 2) * math.pi**2 / (8.0 * t * t))
            total += term
            if term <= 1e-20 * total:
                break
        cdf = math.sqrt(2.0 * math.pi) / t * total
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    sign = 1.0
    for j in range(1, 200):
        term = math.exp(-2.0 * j * j * t * t)
        total += sign * term
        if term <= 1e-20:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a, b, alpha: float = 0.05) -> KsDecision:
    """Two-sample Kolmogorov-Smirnov test at significance level ``alpha``.

    The statistic is the supremum gap between the two empirical CDFs; the
    p-value uses the asymptotic Kolmogorov distribution with effective sample
    size n*m/(n+m).
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample requires non-empty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    statistic = float(np.max(np.abs(cdf_a - cdf_b)))
    effective = math.sqrt(a.size * b.size / (a.size + b.size))
    p_value = _kolmogorov_sf(effective * statistic)
    return KsDecision(statistic, p_value, alpha, p_value < alpha)


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, RankedDataset):
        return data.all_items()
    return np.asarray(data, dtype=float)


def choose_normalization_scope(train, test, alpha: float = 0.05) -> NormalizationScope:
    """Decide whether test data must be normalized on its own.

    Runs a per-feature two-sample KS test at the Bonferroni-corrected level
    alpha/d; any rejection means the distributions differ, so normalization
    statistics for the test side come from the test data alone.  Otherwise
    the training data is pooled in.
    """
    if isinstance(train, RankedDataset) and isinstance(test, RankedDataset):
        if train.schema != test.schema:
            raise DataFormatError("train and test datasets have different schemas")
    train_m = _as_matrix(train)
    test_m = _as_matrix(test)
    if train_m.ndim != 2 or test_m.ndim != 2 or train_m.shape[1] != test_m.shape[1]:
        raise DataFormatError(
            f"schema mismatch: train has {train_m.shape[1:]} features, test has {test_m.shape[1:]}"
        )
    d = train_m.shape[1]
    per_feature_alpha = alpha / d
    for k in range(d):
        if ks_two_sample(train_m[:, k], test_m[:, k], per_feature_alpha).rejected:
            return NormalizationScope.TEST_ONLY
    return NormalizationScope.TRAIN_PLUS_TEST


def normalize_train_test(train: np.ndarray, test: np.ndarray, mode: NormalizationMode,
                         scope: NormalizationScope
                         ) -> tuple[np.ndarray, np.ndarray, NormalizationStats]:
    """Normalize a train and a test matrix according to the scope rule.

    Under TRAIN_PLUS_TEST both sides share statistics fitted on the pooled
    rows; under TEST_ONLY each side is normalized with its own statistics.
    Returns the normalized matrices and the statistics applied to the
    training side (scope recorded), which is what a persisted model keeps.
    """
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    fit_apply = minmax_fit_apply if mode is NormalizationMode.MINMAX else zscore_fit_apply
    if scope is NormalizationScope.TRAIN_PLUS_TEST:
        _, stats = fit_apply(np.vstack([train, test]))
        train_out, _ = fit_apply(train, stats)
        test_out, _ = fit_apply(test, stats)
    else:
        train_out, stats = fit_apply(train)
        test_out, _ = fit_apply(test)
    return train_out, test_out, replace(stats, scope=scope)
