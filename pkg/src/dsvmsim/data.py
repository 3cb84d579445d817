"""Dataset generation, CSV ingestion, and per-node partitioning.

Labels are always +1/-1 floats. ``NodeData`` carries the augmented feature
matrix [X, 1] used by the trainer; ``ExpandedNodeData`` is the doubled form
used by the label-flip game (each sample appears once with its true label
and once negated).
"""

from dataclasses import dataclass

import numpy as np

from .topology import Network


class DataError(ValueError):
    """Base class for dataset construction failures."""


class IngestionError(DataError):
    """CSV parsing failure; message names the offending line."""


class PartitionError(DataError):
    """Per-node splitting failure (insufficient or degenerate samples)."""


@dataclass
class LabeledSet:
    """Feature matrix (N, p) with labels in {+1, -1} of length N."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DataError(f"features must be (N>=1, p), got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError("labels length must match feature rows")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain non-finite entries")
        if not np.all(np.isin(self.labels, (1.0, -1.0))):
            raise DataError("labels must be +1 or -1")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def augment(features: np.ndarray) -> np.ndarray:
    """Append the all-ones bias column: (N, p) -> (N, p+1)."""
    n = features.shape[0]
    return np.hstack([features, np.ones((n, 1))])


@dataclass
class NodeData:
    """One node's training/testing split plus trainer-ready matrices."""

    train: LabeledSet
    test: LabeledSet
    augmented: np.ndarray = None
    labels: np.ndarray = None

    def __post_init__(self):
        if self.augmented is None:
            self.augmented = augment(self.train.features)
        if self.labels is None:
            self.labels = self.train.labels.copy()

    @property
    def label_diag(self) -> np.ndarray:
        """Diagonal label matrix (mostly useful for inspection)."""
        return np.diag(self.labels)

    @property
    def n_train(self) -> int:
        return self.train.n_samples


@dataclass
class ExpandedNodeData:
    """Doubled training rows with paired true/negated labels.

    Row n and row n + N are identical; the label diagonal is
    [y_1..y_N, -y_1..-y_N].
    """

    x_hat: np.ndarray
    y_hat: np.ndarray


def expand(node: NodeData) -> ExpandedNodeData:
    """Build the expanded matrices for the label-flip game."""
    x_hat = np.vstack([node.augmented, node.augmented])
    y_hat = np.concatenate([node.labels, -node.labels])
    return ExpandedNodeData(x_hat=x_hat, y_hat=y_hat)


def gen_gaussian(
    n_per_class_train: int,
    n_per_class_test: int,
    mean_pos=(1.0, 1.0),
    mean_neg=(2.0, 2.0),
    cov=((1.0, 0.0), (0.0, 1.0)),
    seed: int = 0,
):
    """Two-class Gaussian data; class +1 ~ N(mean_pos, cov), class -1 ~ N(mean_neg, cov).

    Returns a (train, test) pair of LabeledSets. Deterministic given seed.
    Defaults are means [1,1] vs [2,2] with identity covariance.
    """
    if n_per_class_train < 1 or n_per_class_test < 1:
        raise DataError("per-class counts must be >= 1")
    mean_pos = np.asarray(mean_pos, dtype=np.float64)
    mean_neg = np.asarray(mean_neg, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    p = mean_pos.shape[0]
    if mean_neg.shape != (p,) or cov.shape != (p, p):
        raise DataError("mean/cov dimensions disagree")
    if not np.allclose(cov, cov.T):
        raise DataError("covariance must be symmetric positive definite")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DataError("covariance must be symmetric positive definite") from exc

    rng = np.random.default_rng(seed)

    def draw(mean, count):
        return mean + rng.standard_normal((count, p)) @ chol.T

    sets = []
    for count in (n_per_class_train, n_per_class_test):
        x = np.vstack([draw(mean_pos, count), draw(mean_neg, count)])
        y = np.concatenate([np.ones(count), -np.ones(count)])
        sets.append(LabeledSet(x, y))
    return sets[0], sets[1]


def load_csv(path, label_column: int = -1, positive_value="1", header: bool = False) -> LabeledSet:
    """Load a comma-separated numeric dataset.

    The label column (default: last) is mapped to +1 where it equals
    ``positive_value`` and -1 otherwise; remaining columns become features
    in their original order. Ragged or unparseable rows raise
    IngestionError naming the 1-based line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    start = 1 if header else 0
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(lines[start:], start=start) if ln.strip()]
    if not rows:
        raise IngestionError(f"{path}: no data rows")

    pos_str = str(positive_value).strip()
    try:
        pos_num = float(pos_str)
    except ValueError:
        pos_num = None

    features, labels = [], []
    arity = None
    for lineno, ln in rows:
        cells = [c.strip() for c in ln.split(",")]
        if arity is None:
            arity = len(cells)
            if arity < 2:
                raise IngestionError(f"{path}: line {lineno}: need >= 2 columns")
            col = label_column if label_column >= 0 else arity + label_column
            if not 0 <= col < arity:
                raise IngestionError(f"{path}: label column {label_column} out of range")
        if len(cells) != arity:
            raise IngestionError(
                f"{path}: line {lineno}: expected {arity} columns, got {len(cells)}"
            )
        raw_label = cells[col]
        feat_cells = cells[:col] + cells[col + 1:]
        try:
            features.append([float(c) for c in feat_cells])
        except ValueError as exc:
            raise IngestionError(f"{path}: line {lineno}: unparseable number") from exc
        if pos_num is not None:
            try:
                is_pos = float(raw_label) == pos_num
            except ValueError as exc:
                raise IngestionError(f"{path}: line {lineno}: unparseable label") from exc
        else:
            is_pos = raw_label == pos_str
        labels.append(1.0 if is_pos else -1.0)
    return LabeledSet(np.array(features), np.array(labels))


_PARTITION_RETRIES = 20


def partition(
    data: LabeledSet,
    net: Network,
    n_train: int,
    n_test: int,
    standardize: bool = False,
    seed: int = 0,
) -> list:
    """Split a pooled dataset into disjoint per-node train/test sets.

    Assignment is a random permutation of the pool; leftover samples are
    discarded. Each node's training set must contain both classes — the
    permutation is retried with a derived seed up to a bounded number of
    times, then PartitionError is raised. With ``standardize``, features are
    z-scored using the pooled *training* statistics only.
    """
    v = net.node_count
    need = v * (n_train + n_test)
    if n_train < 1 or n_test < 1:
        raise PartitionError("per-node sizes must be >= 1")
    if need > data.n_samples:
        raise PartitionError(
            f"need {need} samples for {v} nodes ({n_train} train + {n_test} test), "
            f"pool has {data.n_samples}"
        )

    for attempt in range(_PARTITION_RETRIES):
        rng = np.random.default_rng((seed, attempt))
        perm = rng.permutation(data.n_samples)
        train_idx = [perm[i * n_train:(i + 1) * n_train] for i in range(v)]
        off = v * n_train
        test_idx = [perm[off + i * n_test: off + (i + 1) * n_test] for i in range(v)]
        if all(len(np.unique(data.labels[ix])) == 2 for ix in train_idx):
            break
    else:
        raise PartitionError(
            f"single-class node training set after {_PARTITION_RETRIES} stratified retries"
        )

    if standardize:
        pooled = data.features[np.concatenate(train_idx)]
        mu = pooled.mean(axis=0)
        sd = pooled.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
    else:
        mu, sd = 0.0, 1.0

    nodes = []
    for tr, te in zip(train_idx, test_idx):
        train = LabeledSet((data.features[tr] - mu) / sd, data.labels[tr])
        test = LabeledSet((data.features[te] - mu) / sd, data.labels[te])
        nodes.append(NodeData(train=train, test=test))
    return nodes
