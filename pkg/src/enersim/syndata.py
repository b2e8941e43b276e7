"""Correlation-preserving synthetic tabular data from binned conditionals.

Every feature is cut into ``N`` equal-width bins between its minimum and
maximum. From the source table we estimate

* marginals ``P(bin n of feature i)``,
* pair conditionals ``P(bin m of j | bin n of i)`` for ordered pairs ``i != j``,
* triplet conditionals ``P(bin l of k | bin n of i, bin m of j)``,

all as relative frequencies. Synthetic rows are drawn feature by feature:
the first from its marginal, the second conditioned on the first, every later
one conditioned on the two most recently drawn features. When a conditioning
cell was never observed the sampler falls back triplet -> pair -> marginal.
A value is placed uniformly inside its drawn bin.

Indexing: feature and bin indices are 0-based everywhere except
:func:`bin_index`, which reports the 1-based bin number ``1..N``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

import numpy as np

from enersim.errors import DegenerateFeatureError, InputError, RangeError
from enersim.numerics import RngStream, make_rng

ORDER_POLICIES = ("fixed", "random-per-row")


@dataclass(frozen=True)
class FeatureTable:
    column_names: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise InputError(f"data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 2:
            raise InputError(f"need at least 2 observations, got {data.shape[0]}")
        if data.shape[1] < 1:
            raise InputError("need at least one feature")
        names = tuple(str(c) for c in self.column_names)
        if len(names) != data.shape[1]:
            raise InputError(f"{len(names)} column names for {data.shape[1]} columns")
        if len(set(names)) != len(names):
            raise InputError(f"column names must be unique: {names}")
        if not np.all(np.isfinite(data)):
            r, c = np.argwhere(~np.isfinite(data))[0]
            raise InputError(f"non-finite value at row {r + 1}, column {names[c]!r}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]


def load_table(path) -> FeatureTable:
    """Read a header-first CSV of finite reals."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise InputError(f"{path}: row {lineno}, column {col!r}: cannot parse {cell!r}") from None
                if not math.isfinite(value):
                    raise InputError(f"{path}: row {lineno}, column {col!r}: non-finite value {cell!r}")
                values.append(value)
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return FeatureTable(tuple(h.strip() for h in header), np.array(rows, dtype=float))


def save_table(table: FeatureTable, path) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(table.column_names) + "\n")
        for row in table.data:
            fh.write(",".join(format_real(v) for v in row) + "\n")


def format_real(value: float) -> str:
    """17 significant digits: lossless float round-trip."""
    return f"{value:.17g}"


@dataclass(frozen=True)
class BinningScheme:
    """Per-feature bin edges, shape ``(N_f, N + 1)``."""

    edges: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.edges.shape[1] - 1

    @property
    def n_features(self) -> int:
        return self.edges.shape[0]


def build_bins(table: FeatureTable, n_bins: int) -> BinningScheme:
    if int(n_bins) != n_bins or n_bins < 1:
        raise InputError(f"n_bins must be a positive integer, got {n_bins}")
    lo = table.data.min(axis=0)
    hi = table.data.max(axis=0)
    flat = np.flatnonzero(hi == lo)
    if flat.size:
        raise DegenerateFeatureError(
            f"feature {table.column_names[flat[0]]!r} is constant; equal-width bins need max > min"
        )
    n = np.arange(n_bins + 1)
    edges = lo[:, None] + ((hi - lo) / n_bins)[:, None] * n[None, :]
    # the last edge must be the maximum itself, not a rounded product
    edges[:, -1] = hi
    return BinningScheme(edges)


def _bins_of(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """0-based bins of an array: half-open on the right except the last bin."""
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.minimum(idx, len(edges) - 2)


def bin_index(value: float, feature: int, scheme: BinningScheme) -> int:
    """1-based bin number of ``value`` within ``feature``."""
    edges = scheme.edges[feature]
    if not edges[0] <= value <= edges[-1]:
        raise RangeError(f"value {value} outside [{edges[0]}, {edges[-1]}] of feature {feature}")
    return int(_bins_of(np.array([value]), edges)[0]) + 1


def assign_bins(table: FeatureTable, scheme: BinningScheme) -> np.ndarray:
    """0-based bin indices for every entry, shape ``(M, N_f)``."""
    data = table.data
    out = np.empty(data.shape, dtype=np.int64)
    for i in range(data.shape[1]):
        edges = scheme.edges[i]
        col = data[:, i]
        if col.min() < edges[0] or col.max() > edges[-1]:
            raise RangeError(f"feature {i} has values outside its bin range")
        out[:, i] = _bins_of(col, edges)
    return out


@dataclass
class ProbabilityTables:
    """Fitted distributions over bin indices.

    ``pairs[(i, n, j)]`` and ``triplets[(i, n, j, m, k)]`` hold length-N
    distributions for occupied conditioning cells only; ``*_counts`` hold the
    number of source rows in each conditioning cell.
    """

    n_bins: int
    depth: int
    marginals: np.ndarray
    pairs: dict = field(default_factory=dict)
    pair_counts: dict = field(default_factory=dict)
    triplets: dict = field(default_factory=dict)
    triplet_counts: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.marginals.shape[0]

    def to_json(self, scheme: BinningScheme) -> dict:
        return {
            "n_bins": self.n_bins,
            "depth": self.depth,
            "edges": scheme.edges.tolist(),
            "marginals": self.marginals.tolist(),
            "pairs": [
                {"i": i, "n": n, "j": j, "dist": d.tolist(), "count": self.pair_counts[(i, n, j)]}
                for (i, n, j), d in sorted(self.pairs.items())
            ],
            "triplets": [
                {"i": i, "n": n, "j": j, "m": m, "k": k, "dist": d.tolist(),
                 "count": self.triplet_counts[(i, n, j, m, k)]}
                for (i, n, j, m, k), d in sorted(self.triplets.items())
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> tuple[ProbabilityTables, BinningScheme]:
        try:
            tables = cls(int(doc["n_bins"]), int(doc["depth"]), np.array(doc["marginals"], dtype=float))
            for e in doc["pairs"]:
                key = (e["i"], e["n"], e["j"])
                tables.pairs[key] = np.array(e["dist"], dtype=float)
                tables.pair_counts[key] = int(e["count"])
            for e in doc["triplets"]:
                key = (e["i"], e["n"], e["j"], e["m"], e["k"])
                tables.triplets[key] = np.array(e["dist"], dtype=float)
                tables.triplet_counts[key] = int(e["count"])
            scheme = BinningScheme(np.array(doc["edges"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed tables document: {exc}") from None
        return tables, scheme


def save_tables(tables: ProbabilityTables, scheme: BinningScheme, path) -> None:
    Path(path).write_text(json.dumps(tables.to_json(scheme), indent=1) + "\n")


def load_tables(path) -> tuple[ProbabilityTables, BinningScheme]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    return ProbabilityTables.from_json(doc)


def fit_tables(table: FeatureTable, scheme: BinningScheme, depth: int) -> ProbabilityTables:
    if depth not in (1, 2, 3):
        raise InputError(f"depth must be 1, 2 or 3, got {depth}")
    if scheme.n_features != table.n_features:
        raise InputError("binning scheme and table disagree on the number of features")
    N = scheme.n_bins
    M, nf = table.data.shape
    bins = assign_bins(table, scheme)

    marginals = np.stack([np.bincount(bins[:, i], minlength=N) for i in range(nf)]) / M
    tables = ProbabilityTables(N, depth, marginals)

    if depth >= 2:
        for i, j in permutations(range(nf), 2):
            joint = np.bincount(bins[:, i] * N + bins[:, j], minlength=N * N).reshape(N, N)
            support = joint.sum(axis=1)
            for n in np.flatnonzero(support):
                tables.pairs[(i, int(n), j)] = joint[n] / support[n]
                tables.pair_counts[(i, int(n), j)] = int(support[n])

    if depth == 3:
        for i, j, k in permutations(range(nf), 3):
            flat = (bins[:, i] * N + bins[:, j]) * N + bins[:, k]
            joint = np.bincount(flat, minlength=N**3).reshape(N, N, N)
            support = joint.sum(axis=2)
            for n, m in zip(*np.nonzero(support)):
                key = (i, int(n), j, int(m), k)
                tables.triplets[key] = joint[n, m] / support[n, m]
                tables.triplet_counts[key] = int(support[n, m])
    return tables


def make_benchmark_table(M: int = 1000, seed: int = 0) -> FeatureTable:
    """Five-feature constructed dataset on ``x`` equispaced in ``[-1, 1]``."""
    if M < 2:
        raise InputError(f"M must be >= 2, got {M}")
    x = np.linspace(-1.0, 1.0, M)
    r = make_rng(seed).uniform(M)
    data = np.column_stack([x, 2 * x**2 + x + r, x**2, np.sin(x), np.exp(-x)])
    return FeatureTable(("f1", "f2", "f3", "f4", "f5"), data)


def _draw(dist: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws; zero-probability bins are never returned."""
    cdf = np.cumsum(dist)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    last = np.flatnonzero(dist)[-1]
    return np.minimum(idx, last)


def sample_synthetic(
    tables: ProbabilityTables,
    scheme: BinningScheme,
    rows: int,
    order_policy: str = "fixed",
    rng: RngStream | None = None,
    column_names=None,
) -> FeatureTable:
    """Draw ``rows`` synthetic rows following the conditional chain.

    Rows are processed in parallel, one chain position at a time; rows that
    share a conditioning key are drawn together from one distribution.
    Randomness per row is fixed up front (one uniform for the bin, one for
    the position inside it, per feature) so results do not depend on grouping.
    """
    if int(rows) != rows or rows < 1:
        raise InputError(f"rows must be a positive integer, got {rows}")
    if order_policy not in ORDER_POLICIES:
        raise InputError(f"order_policy must be one of {ORDER_POLICIES}, got {order_policy!r}")
    rng = rng if rng is not None else make_rng(0)
    nf = tables.n_features

    if order_policy == "fixed":
        order = np.tile(np.arange(nf), (rows, 1))
    else:
        order = rng.permuted_rows(rows, nf)
    u_bin = rng.uniform((rows, nf))
    u_val = rng.uniform((rows, nf))

    bins = np.empty((rows, nf), dtype=np.int64)
    drawn_bin = np.empty((rows, nf), dtype=np.int64)  # by chain position
    for pos in range(nf):
        feat = order[:, pos]
        if pos == 0:
            keys = feat[:, None]
        elif pos == 1:
            keys = np.column_stack([feat, order[:, 0], drawn_bin[:, 0]])
        else:
            keys = np.column_stack([feat, order[:, pos - 2], drawn_bin[:, pos - 2],
                                    order[:, pos - 1], drawn_bin[:, pos - 1]])
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        out = np.empty(rows, dtype=np.int64)
        for g, key in enumerate(uniq):
            members = np.flatnonzero(inverse == g)
            dist = _conditional(tables, pos, key)
            out[members] = _draw(dist, u_bin[members, pos])
        drawn_bin[:, pos] = out
        bins[np.arange(rows), feat] = out

    lo = np.take_along_axis(scheme.edges, bins.T, axis=1).T
    hi = np.take_along_axis(scheme.edges, bins.T + 1, axis=1).T
    # u_val is indexed by feature, not chain position, via the same order map
    u_feat = np.empty_like(u_val)
    u_feat[np.arange(rows)[:, None], order] = u_val
    values = lo + u_feat * (hi - lo)
    names = column_names if column_names is not None else tuple(f"f{i + 1}" for i in range(nf))
    return FeatureTable(tuple(names), values)


def _conditional(tables: ProbabilityTables, pos: int, key) -> np.ndarray:
    """Deepest available distribution for a chain position, with fallback."""
    feat = int(key[0])
    if pos >= 2 and tables.depth >= 3:
        dist = tables.triplets.get((int(key[1]), int(key[2]), int(key[3]), int(key[4]), feat))
        if dist is not None:
            return dist
    if pos >= 1 and tables.depth >= 2:
        prev_feat, prev_bin = (int(key[1]), int(key[2])) if pos == 1 else (int(key[3]), int(key[4]))
        dist = tables.pairs.get((prev_feat, prev_bin, feat))
        if dist is not None:
            return dist
    return tables.marginals[feat]


def pearson_matrix(table: FeatureTable) -> np.ndarray:
    """Pearson correlation matrix from centred products."""
    x = table.data
    centered = x - x.mean(axis=0)
    ss = np.einsum("ij,ij->j", centered, centered)
    zero = np.flatnonzero(ss == 0)
    if zero.size:
        raise DegenerateFeatureError(f"feature {table.column_names[zero[0]]!r} has zero variance")
    cov = centered.T @ centered
    norm = np.sqrt(ss)
    corr = cov / np.outer(norm, norm)
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
