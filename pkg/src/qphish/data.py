"""Transaction-graph ingestion, node features, imbalanced splits and a
synthetic generator calibrated to published per-class feature statistics."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DataError, ParseError, ValidationError

FEATURES = ("in_degree", "out_degree", "degree", "in_strength", "out_strength", "strength", "neighbors")
SAMPLED = ("in_degree", "out_degree", "in_strength", "out_strength")

# per-class (mean, std) of each feature over the labelled snapshot
TABLE1 = {
    "phishing": {
        "in_degree": (31.3956, 180.9905),
        "out_degree": (20.4905, 96.8388),
        "degree": (51.8862, 219.7376),
        "in_strength": (78.6105, 691.2912),
        "out_strength": (86.7360, 860.1017),
        "strength": (165.3465, 1390.3580),
        "neighbors": (31.6965, 106.3907),
    },
    "non_phishing": {
        "in_degree": (4.5020, 154.3505),
        "out_degree": (4.6438, 101.3266),
        "degree": (9.1459, 192.2051),
        "in_strength": (72.5328, 4409.6850),
        "out_strength": (9.2551, 281.0234),
        "strength": (81.7880, 4421.5425),
        "neighbors": (3.6427, 79.3607),
    },
}


class DownscaleWarning(UserWarning):
    pass


@dataclass
class TransactionGraph:
    addresses: list[str]
    src: np.ndarray
    dst: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.addresses)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @classmethod
    def from_edges(cls, edges, extra_nodes=()) -> "TransactionGraph":
        """Build from ``(from, to, value)`` triples; node order is sorted by address."""
        edges = list(edges)
        for _, _, v in edges:
            if not v >= 0:
                raise ValidationError(f"edge value must be nonnegative, got {v}")
        names = sorted({a for e in edges for a in e[:2]} | set(extra_nodes))
        index = {a: i for i, a in enumerate(names)}
        src = np.array([index[e[0]] for e in edges], dtype=np.int64)
        dst = np.array([index[e[1]] for e in edges], dtype=np.int64)
        val = np.array([float(e[2]) for e in edges], dtype=float)
        return cls(names, src, dst, val)


def _read_rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            return
        if [c.strip() for c in first] != list(header):
            raise ParseError(f"{path}:1: expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            yield reader.line_num, [c.strip() for c in row]


def read_edges(path) -> list[tuple[str, str, float]]:
    edges = []
    for line, row in _read_rows(path, ("from", "to", "value")):
        if len(row) != 3 or not row[0] or not row[1]:
            raise ParseError(f"{path}:{line}: expected from,to,value")
        try:
            value = float(row[2])
        except ValueError:
            raise ParseError(f"{path}:{line}: value {row[2]!r} is not a number") from None
        if not np.isfinite(value):
            raise ParseError(f"{path}:{line}: value {row[2]!r} is not finite")
        if value < 0:
            raise ValidationError(f"{path}:{line}: negative value {value}")
        edges.append((row[0], row[1], value))
    return edges


def read_labels(path) -> dict[str, int]:
    labels: dict[str, int] = {}
    for line, row in _read_rows(path, ("address", "label")):
        if len(row) != 2 or not row[0] or row[1] not in ("0", "1"):
            raise ParseError(f"{path}:{line}: expected address,label with label 0 or 1")
        label = 1 if row[1] == "1" else -1
        if labels.get(row[0], label) != label:
            raise ValidationError(f"{path}:{line}: conflicting labels for {row[0]}")
        labels[row[0]] = label
    return labels


def ingest_edges(path, labels_path=None) -> tuple[TransactionGraph, dict[str, int]]:
    """Read an edge list and optional labels (+1 phishing, -1 otherwise).
    Addresses without a label are non-phishing; labelled addresses absent
    from the edge list become isolated nodes."""
    edges = read_edges(path)
    labels = read_labels(labels_path) if labels_path is not None else {}
    graph = TransactionGraph.from_edges(edges, labels)
    return graph, {a: labels.get(a, -1) for a in graph.addresses}


@dataclass
class NodeFeatureTable:
    addresses: list[str]
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float).reshape(-1, len(FEATURES))
        self.labels = np.asarray(self.labels, dtype=int)
        if not (len(self.addresses) == len(self.features) == len(self.labels)):
            raise DataError("addresses, features and labels differ in length")

    def __len__(self):
        return len(self.labels)

    @property
    def n_phishing(self) -> int:
        return int(np.sum(self.labels == 1))

    def column(self, name: str) -> np.ndarray:
        return self.features[:, FEATURES.index(name)]

    def subset(self, idx) -> "NodeFeatureTable":
        idx = np.asarray(idx, dtype=int)
        return NodeFeatureTable([self.addresses[i] for i in idx], self.features[idx], self.labels[idx])

    def check_identities(self, atol: float = 1e-9) -> bool:
        f = {n: self.column(n) for n in FEATURES}
        return bool(
            np.allclose(f["degree"], f["in_degree"] + f["out_degree"], atol=atol, rtol=0)
            and np.allclose(f["strength"], f["in_strength"] + f["out_strength"], atol=atol, rtol=1e-12)
            and np.all(f["neighbors"] <= f["degree"])
            and np.all(self.features >= 0)
        )

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(("address",) + FEATURES + ("label",))
            for a, row, lab in zip(self.addresses, self.features, self.labels):
                w.writerow([a] + [repr(float(v)) for v in row] + [1 if lab == 1 else 0])

    @classmethod
    def from_csv(cls, path) -> "NodeFeatureTable":
        addresses, rows, labels = [], [], []
        for line, row in _read_rows(path, ("address",) + FEATURES + ("label",)):
            if len(row) != len(FEATURES) + 2 or row[-1] not in ("0", "1"):
                raise ParseError(f"{path}:{line}: malformed feature row")
            try:
                rows.append([float(v) for v in row[1:-1]])
            except ValueError:
                raise ParseError(f"{path}:{line}: non-numeric feature") from None
            addresses.append(row[0])
            labels.append(1 if row[-1] == "1" else -1)
        return cls(addresses, np.array(rows).reshape(-1, len(FEATURES)), np.array(labels, dtype=int))


def extract_features(graph: TransactionGraph, labels: dict[str, int] | None = None) -> NodeFeatureTable:
    """Seven statistics per node of the multigraph. Self-loops add to both
    in- and out-degree/strength but never count as a neighbour; neighbours
    are distinct counterparties regardless of direction."""
    n = graph.n_nodes
    src, dst, val = graph.src, graph.dst, graph.value
    in_deg = np.bincount(dst, minlength=n).astype(float)
    out_deg = np.bincount(src, minlength=n).astype(float)
    in_str = np.bincount(dst, weights=val, minlength=n)
    out_str = np.bincount(src, weights=val, minlength=n)
    off = src != dst
    pairs = np.unique(np.stack([np.minimum(src[off], dst[off]), np.maximum(src[off], dst[off])], axis=1), axis=0)
    neighbors = (np.bincount(pairs[:, 0], minlength=n) + np.bincount(pairs[:, 1], minlength=n)).astype(float)
    feats = np.column_stack([in_deg, out_deg, in_deg + out_deg, in_str, out_str, in_str + out_str, neighbors])
    labels = labels or {}
    y = np.array([labels.get(a, -1) for a in graph.addresses], dtype=int)
    return NodeFeatureTable(list(graph.addresses), feats, y)


@dataclass
class SplitSpec:
    train_phishing: int = 160
    train_nonphishing: int = 160
    test_phishing: int = 1000
    test_nonphishing: int = 10000
    seed: int = 0
    min_phishing: int = 20


def split_counts(n_phishing: int, n_nonphishing: int, spec: SplitSpec) -> tuple[int, int, int, int, bool]:
    """(train_p, train_np, test_p, test_np, downscaled). A short pool scales
    every count by the same factor, keeping the 160:1000 proportions."""
    want_p = spec.train_phishing + spec.test_phishing
    want_np = spec.train_nonphishing + spec.test_nonphishing
    if n_phishing < spec.min_phishing:
        raise DataError(f"only {n_phishing} phishing nodes; at least {spec.min_phishing} are needed")
    s = min(1.0, n_phishing / want_p, n_nonphishing / want_np)
    if s == 1.0:
        return spec.train_phishing, spec.train_nonphishing, spec.test_phishing, spec.test_nonphishing, False
    tp, tnp = round(spec.train_phishing * s), round(spec.train_nonphishing * s)
    sp, snp = round(spec.test_phishing * s), round(spec.test_nonphishing * s)
    while tp + sp > n_phishing:
        sp -= 1
    while tnp + snp > n_nonphishing:
        snp -= 1
    if min(tp, tnp, sp, snp) < 1:
        raise DataError("pool too small for a nonempty split")
    return tp, tnp, sp, snp, True


def split_indices(table: NodeFeatureTable, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    pos = np.flatnonzero(table.labels == 1)
    neg = np.flatnonzero(table.labels == -1)
    tp, tnp, sp, snp, scaled = split_counts(len(pos), len(neg), spec)
    if scaled:
        warnings.warn(
            f"pool of {len(pos)} phishing / {len(neg)} non-phishing is short; split downscaled to "
            f"train {tp}/{tnp}, test {sp}/{snp}",
            DownscaleWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(spec.seed)
    pos, neg = rng.permutation(pos), rng.permutation(neg)
    train = np.sort(np.concatenate([pos[:tp], neg[:tnp]]))
    test = np.sort(np.concatenate([pos[tp : tp + sp], neg[tnp : tnp + snp]]))
    return train, test


def sample_split(table: NodeFeatureTable, spec: SplitSpec | None = None) -> tuple[NodeFeatureTable, NodeFeatureTable]:
    train, test = split_indices(table, spec or SplitSpec())
    return table.subset(train), table.subset(test)


def lognormal_params(mean: float, std: float) -> tuple[float, float]:
    """(mu, sigma) of the log-normal with the given mean and std."""
    sigma2 = np.log1p((std / mean) ** 2)
    return float(np.log(mean) - sigma2 / 2), float(np.sqrt(sigma2))


def _stratified_lognormal(n, mean, std, rng):
    # one draw per equal-probability stratum, then an exact mean match; the
    # tails are too heavy for plain sampling to land near the mean reliably
    mu, sigma = lognormal_params(mean, std)
    u = (rng.permutation(n) + rng.uniform(size=n)) / n
    draws = stats.lognorm.ppf(u, s=sigma, scale=np.exp(mu))
    return draws * (mean / draws.mean())


def synth_class(n: int, cls: str, rng) -> np.ndarray:
    stats1 = TABLE1[cls]
    cols = {name: _stratified_lognormal(n, *stats1[name], rng) for name in SAMPLED}
    in_deg = np.round(cols["in_degree"])
    out_deg = np.round(cols["out_degree"])
    degree = in_deg + out_deg
    in_str, out_str = cols["in_strength"], cols["out_strength"]
    neighbors = np.where(degree >= 1, np.floor(rng.uniform(size=n) * degree) + 1, 0.0)
    return np.column_stack([in_deg, out_deg, degree, in_str, out_str, in_str + out_str, np.minimum(neighbors, degree)])


def synth_dataset(n_phishing: int, n_nonphishing: int, seed: int = 0) -> NodeFeatureTable:
    if n_phishing < 1 or n_nonphishing < 1:
        raise DataError("class counts must be positive")
    rng = np.random.default_rng(seed)
    X = np.vstack([synth_class(n_phishing, "phishing", rng), synth_class(n_nonphishing, "non_phishing", rng)])
    y = np.concatenate([np.ones(n_phishing, dtype=int), -np.ones(n_nonphishing, dtype=int)])
    addresses = [f"p{i:06d}" for i in range(n_phishing)] + [f"n{i:06d}" for i in range(n_nonphishing)]
    return NodeFeatureTable(addresses, X, y)
