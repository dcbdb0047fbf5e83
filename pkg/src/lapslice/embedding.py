"""Learnable node embeddings from the filtered dictionary, trained with a
triplet hinge objective over labeled nodes.

The model maps dictionary rows to P' dimensions, either as a single weight
matrix ("linear") or through one rectified hidden layer ("hidden"). For
anchors i with positives j (same label) and negatives k (different label)
the loss sums [ ||H_i - H_j||^2 - ||H_i - H_k||^2 + margin ]_+ and training
minimizes it with mini-batched adaptive gradient steps. Gradients are
analytic; a plain SGD option exists for step-size-controlled experiments.
"""

from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dictionary import Dictionary
from .errors import ConfigError, DataError, TrainingDivergedError

log = logging.getLogger(__name__)

__all__ = [
    "EmbeddingModel",
    "TrainConfig",
    "Triplet",
    "init_model",
    "forward",
    "sample_triplets",
    "triplets_to_arrays",
    "triplet_loss",
    "loss_gradient",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "save_history_csv",
]

_ARCHES = ("linear", "hidden")


class Triplet(NamedTuple):
    anchor: int
    positive: int
    negative: int


@dataclass
class EmbeddingModel:
    """Dictionary-row to embedding map.

    architecture "linear": H = X @ W.
    architecture "hidden": H = relu(X @ W1) @ W2, one hidden layer.
    Weights are plain float64 arrays keyed by name.
    """

    architecture: str
    weights: dict[str, np.ndarray]
    hidden_width: int = 0

    @property
    def in_dim(self) -> int:
        key = "W" if self.architecture == "linear" else "W1"
        return int(self.weights[key].shape[0])

    @property
    def out_dim(self) -> int:
        key = "W" if self.architecture == "linear" else "W2"
        return int(self.weights[key].shape[1])

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            architecture=self.architecture,
            weights={k: v.copy() for k, v in self.weights.items()},
            hidden_width=self.hidden_width,
        )

    def finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights.values())


@dataclass(frozen=True)
class TrainConfig:
    """Trainer knobs; defaults target desk-scale fixtures."""

    margin: float = 1.0
    negatives_per_anchor: int = 8
    batch_size: int = 256
    learning_rate: float = 1e-3
    max_epochs: int = 200
    early_stop_patience: int = 20
    seed: int = 0
    embed_dim: int = 32
    architecture: str = "linear"
    hidden_width: int = 64
    optimizer: str = "adam"
    resample_triplets: bool = True
    enumerate_positives: bool = False

    def __post_init__(self):
        problems = []
        if self.margin <= 0:
            problems.append("margin must be > 0")
        if self.negatives_per_anchor < 1:
            problems.append("negatives_per_anchor must be >= 1")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if self.learning_rate < 0:
            problems.append("learning_rate must be >= 0")
        if self.max_epochs < 1:
            problems.append("max_epochs must be >= 1")
        if self.early_stop_patience < 1:
            problems.append("early_stop_patience must be >= 1")
        if self.embed_dim < 1:
            problems.append("embed_dim must be >= 1")
        if self.architecture not in _ARCHES:
            problems.append(f"architecture must be one of {_ARCHES}")
        if self.hidden_width < 1:
            problems.append("hidden_width must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            problems.append("optimizer must be 'adam' or 'sgd'")
        if problems:
            raise ConfigError(problems)


def init_model(
    architecture: str,
    in_dim: int,
    out_dim: int,
    hidden_width: int = 64,
    seed: int = 0,
) -> EmbeddingModel:
    """Scaled-Gaussian initialization, deterministic given the seed."""
    if architecture not in _ARCHES:
        raise ConfigError(f"architecture must be one of {_ARCHES}")
    rng = np.random.default_rng(seed)

    def glorot(fan_in, fan_out):
        scale = np.sqrt(2.0 / (fan_in + fan_out))
        return rng.normal(0.0, scale, size=(fan_in, fan_out))

    if architecture == "linear":
        weights = {"W": glorot(in_dim, out_dim)}
        hidden_width = 0
    else:
        weights = {
            "W1": glorot(in_dim, hidden_width),
            "W2": glorot(hidden_width, out_dim),
        }
    return EmbeddingModel(
        architecture=architecture, weights=weights, hidden_width=hidden_width
    )


def _as_matrix(gamma) -> np.ndarray:
    if isinstance(gamma, Dictionary):
        return gamma.gamma
    return np.asarray(gamma, dtype=np.float64)


def forward(model: EmbeddingModel, gamma) -> np.ndarray:
    """Embed dictionary rows; returns an (N, P') matrix."""
    x = _as_matrix(gamma)
    if x.shape[1] != model.in_dim:
        raise DataError(f"input has {x.shape[1]} columns, model expects {model.in_dim}")
    if model.architecture == "linear":
        return x @ model.weights["W"]
    hidden = np.maximum(x @ model.weights["W1"], 0.0)
    return hidden @ model.weights["W2"]


def sample_triplets(labels, train_mask, config: TrainConfig, seed: int):
    """Draw (anchor, positive, negative) triples from labeled training nodes.

    Anchors run over every training node whose class has another training
    member; one positive is drawn uniformly per anchor (or all positives
    when config.enumerate_positives) and `negatives_per_anchor` negatives
    are drawn uniformly from the other classes. Classes with a single
    training node contribute only negatives, with a warning.
    """
    y = np.asarray(labels, dtype=np.int64)
    mask = np.ones(y.shape[0], dtype=bool) if train_mask is None else np.asarray(
        train_mask, dtype=bool
    )
    pool = np.flatnonzero(mask & (y >= 0))
    if pool.size < 2 or np.unique(y[pool]).size < 2:
        raise DataError("need >= 2 labeled training nodes across >= 2 classes")
    rng = np.random.default_rng(seed)
    by_class = {int(k): pool[y[pool] == k] for k in np.unique(y[pool])}
    lonely = [k for k, members in by_class.items() if members.size == 1]
    if lonely:
        warnings.warn(
            f"classes {lonely} have a single training node; they only serve "
            "as negatives",
            stacklevel=2,
        )
    triplets: list[Triplet] = []
    for anchor in pool:
        k = int(y[anchor])
        same = by_class[k]
        if same.size < 2:
            continue
        others = np.setdiff1d(pool, same, assume_unique=False)
        positives = same[same != anchor]
        if not config.enumerate_positives:
            positives = positives[[rng.integers(positives.size)]]
        for pos in positives:
            replace_draw = others.size < config.negatives_per_anchor
            negs = rng.choice(
                others, size=config.negatives_per_anchor, replace=replace_draw
            )
            triplets.extend(
                Triplet(int(anchor), int(pos), int(neg)) for neg in negs
            )
    return triplets


def triplets_to_arrays(triplets):
    t = np.asarray(
        [(t.anchor, t.positive, t.negative) for t in triplets], dtype=np.int64
    ).reshape(-1, 3)
    return t[:, 0], t[:, 1], t[:, 2]


def _hinge_terms(h: np.ndarray, triplets, margin: float):
    ai, pj, nk = triplets_to_arrays(triplets)
    d_pos = np.sum((h[ai] - h[pj]) ** 2, axis=1)
    d_neg = np.sum((h[ai] - h[nk]) ** 2, axis=1)
    return np.maximum(d_pos - d_neg + margin, 0.0), (ai, pj, nk)


def triplet_loss(h: np.ndarray, triplets, margin: float) -> float:
    """Sum over triplets of [ d(i,j)^2 - d(i,k)^2 + margin ]_+."""
    if len(triplets) == 0:
        return 0.0
    terms, _ = _hinge_terms(np.asarray(h, dtype=np.float64), triplets, margin)
    return float(terms.sum())


def loss_gradient(
    model: EmbeddingModel, gamma, triplets, margin: float
) -> dict[str, np.ndarray]:
    """Analytic gradient of the triplet loss w.r.t. every weight array.

    Inactive hinge terms (including exactly-zero ones) contribute the zero
    subgradient.
    """
    x = _as_matrix(gamma)
    grads = {k: np.zeros_like(w) for k, w in model.weights.items()}
    if len(triplets) == 0:
        return grads
    if model.architecture == "linear":
        h = x @ model.weights["W"]
    else:
        pre = x @ model.weights["W1"]
        hidden = np.maximum(pre, 0.0)
        h = hidden @ model.weights["W2"]
    terms, (ai, pj, nk) = _hinge_terms(h, triplets, margin)
    active = terms > 0.0
    if not active.any():
        return grads
    ai, pj, nk = ai[active], pj[active], nk[active]
    # dLoss/dH accumulated per node: each active term contributes
    # 2(H_k - H_j) at the anchor, -2(H_i - H_j) at the positive,
    # +2(H_i - H_k) at the negative.
    g_h = np.zeros_like(h)
    np.add.at(g_h, ai, 2.0 * (h[nk] - h[pj]))
    np.add.at(g_h, pj, -2.0 * (h[ai] - h[pj]))
    np.add.at(g_h, nk, 2.0 * (h[ai] - h[nk]))
    if model.architecture == "linear":
        grads["W"] = x.T @ g_h
    else:
        grads["W2"] = hidden.T @ g_h
        g_hidden = (g_h @ model.weights["W2"].T) * (pre > 0.0)
        grads["W1"] = x.T @ g_hidden
    return grads


class _Adam:
    def __init__(self, weights, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(w) for k, w in weights.items()}
        self.v = {k: np.zeros_like(w) for k, w in weights.items()}

    def step(self, weights, grads):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k in weights:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            update = (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)
            weights[k] -= self.lr * update


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, weights, grads):
        for k in weights:
            weights[k] -= self.lr * grads[k]


def train(gamma, labels, masks, config: TrainConfig):
    """Mini-batched triplet training over the dictionary.

    masks is a dict with optional 'train'/'val'/'test' boolean arrays (train
    defaults to all labeled nodes). Returns (model, history) where history
    rows are (epoch, train_loss, val_loss); val_loss is NaN without a val
    mask. With a val mask the best-epoch weights are restored and early
    stopping uses `early_stop_patience`.
    """
    x = _as_matrix(gamma)
    y = np.asarray(labels, dtype=np.int64)
    masks = masks or {}
    train_mask = masks.get("train")
    val_mask = masks.get("val")
    model = init_model(
        config.architecture,
        x.shape[1],
        config.embed_dim,
        hidden_width=config.hidden_width,
        seed=config.seed,
    )
    optimizer = (
        _Adam(model.weights, config.learning_rate)
        if config.optimizer == "adam"
        else _Sgd(config.learning_rate)
    )
    rng = np.random.default_rng(config.seed)

    val_triplets = None
    if val_mask is not None and np.any(np.asarray(val_mask, bool) & (y >= 0)):
        try:
            val_triplets = sample_triplets(y, val_mask, config, seed=config.seed + 1)
        except DataError:
            log.warning("val mask unusable for triplets; early stopping disabled")

    epoch_triplets = sample_triplets(y, train_mask, config, seed=config.seed)
    history: list[tuple[int, float, float]] = []
    best_val = np.inf
    best_model = model.copy()
    best_epoch = -1
    stale = 0
    for epoch in range(config.max_epochs):
        if config.resample_triplets and epoch > 0:
            epoch_triplets = sample_triplets(
                y, train_mask, config, seed=config.seed + epoch
            )
        order = rng.permutation(len(epoch_triplets))
        for start in range(0, len(order), config.batch_size):
            batch = [epoch_triplets[i] for i in order[start : start + config.batch_size]]
            grads = loss_gradient(model, x, batch, config.margin)
            optimizer.step(model.weights, grads)
            if not model.finite():
                raise TrainingDivergedError(
                    f"non-finite weights at epoch {epoch}, batch offset {start}"
                )
        h = forward(model, x)
        train_loss = triplet_loss(h, epoch_triplets, config.margin)
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        val_loss = float("nan")
        if val_triplets is not None:
            val_loss = triplet_loss(h, val_triplets, config.margin)
            if val_loss < best_val:
                best_val = val_loss
                best_model = model.copy()
                best_epoch = epoch
                stale = 0
            else:
                stale += 1
        history.append((epoch, train_loss, val_loss))
        if val_triplets is not None and stale >= config.early_stop_patience:
            log.info("early stop at epoch %d (best %d)", epoch, best_epoch)
            break
    final = best_model if val_triplets is not None else model
    return final, history


# -- persistence -------------------------------------------------------------

_CKPT_MAGIC = b"LSMD"
_CKPT_VERSION = 1
_ARCH_TAGS = {"linear": 0, "hidden": 1}
_TAG_ARCHES = {v: k for k, v in _ARCH_TAGS.items()}


def save_checkpoint(path, model: EmbeddingModel) -> None:
    """Binary header (magic, version, architecture tag, dims) followed by the
    row-major float64 weight payloads in a fixed key order."""
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(
            struct.pack(
                "<IBQQQ",
                _CKPT_VERSION,
                _ARCH_TAGS[model.architecture],
                model.in_dim,
                model.out_dim,
                model.hidden_width,
            )
        )
        for key in sorted(model.weights):
            fh.write(np.ascontiguousarray(model.weights[key]).tobytes())


def load_checkpoint(path) -> EmbeddingModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _CKPT_MAGIC:
            raise DataError(f"{path}: not a model checkpoint")
        version, tag, in_dim, out_dim, hidden = struct.unpack(
            "<IBQQQ", fh.read(struct.calcsize("<IBQQQ"))
        )
        if version != _CKPT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        arch = _TAG_ARCHES.get(tag)
        if arch is None:
            raise DataError(f"{path}: unknown architecture tag {tag}")
        shapes = (
            {"W": (in_dim, out_dim)}
            if arch == "linear"
            else {"W1": (in_dim, hidden), "W2": (hidden, out_dim)}
        )
        weights = {}
        for key in sorted(shapes):
            rows, cols = shapes[key]
            raw = fh.read(8 * rows * cols)
            if len(raw) != 8 * rows * cols:
                raise DataError(f"{path}: truncated weight payload for {key}")
            weights[key] = np.frombuffer(raw, dtype=np.float64).reshape(rows, cols).copy()
    return EmbeddingModel(architecture=arch, weights=weights, hidden_width=int(hidden))


def save_history_csv(path, history) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        for epoch, train_loss, val_loss in history:
            val = "" if np.isnan(val_loss) else repr(float(val_loss))
            fh.write(f"{epoch},{float(train_loss)!r},{val}\n")
