"""Syntactic-distance probes.

Both probes share one parameterization, a k x d linear map B scoring token
pairs by squared projected distance. The structural probe regresses gold
tree distances with an L1-over-pairs loss; the perceptron probe decodes a
minimum spanning tree from the predicted distances and applies a structured
update when it mismatches the gold tree. Training runs hand-rolled Adam
with input dropout, periodic dev checkpoints, and early stopping.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .errors import ConfigError, DataError, JembFormatError, NumericalError
from .metrics import UndirectedTree, dspr, mst_prim
from .treebank import Sentence, distance_matrix

PROBE_KINDS = ("structural", "perceptron")
JPRB_MAGIC = b"JPRB"

LR_RANGE = (5e-5, 5e-3)
DROPOUT_RANGE = (0.1, 0.8)


@dataclass(frozen=True)
class ProbeParams:
    kind: str
    B: np.ndarray  # (rank, dim) float64

    @property
    def rank(self) -> int:
        return self.B.shape[0]

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    def validate(self) -> None:
        if self.kind not in PROBE_KINDS:
            raise ConfigError(f"unknown probe kind {self.kind!r}")
        if self.B.ndim != 2 or not 1 <= self.rank <= self.dim:
            raise ConfigError(f"bad projection shape {self.B.shape}")
        if not np.all(np.isfinite(self.B)):
            raise NumericalError("probe parameters contain non-finite entries")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    rank: int
    dropout: float
    batch_size: int = 64
    max_epochs: int = 20
    patience: int = 15
    seed: int = 0
    checkpoint_every: int = 100
    dropout_target: str = "inputs"  # or "projected"

    def validate(self, dim: int) -> None:
        if not LR_RANGE[0] <= self.learning_rate <= LR_RANGE[1]:
            raise ConfigError(
                f"learning rate {self.learning_rate} outside {list(LR_RANGE)}"
            )
        if not 1 <= self.rank <= dim:
            raise ConfigError(f"rank {self.rank} outside [1, {dim}]")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout {self.dropout} outside [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be >= 1")
        if self.patience < 0 or self.checkpoint_every < 1:
            raise ConfigError("patience must be >= 0, checkpoint_every >= 1")
        if self.dropout_target not in ("inputs", "projected"):
            raise ConfigError(f"unknown dropout target {self.dropout_target!r}")


@dataclass
class TrainHistory:
    checkpoints: list = field(default_factory=list)  # (step, epoch, dev_loss)
    best_step: int = 0
    best_dev_loss: float = math.inf
    chosen_epoch: int = 0
    total_steps: int = 0
    stop_reason: str = ""
    wall_clock_seconds: float = 0.0

    def key(self) -> dict:
        """History content without the wall clock, for determinism checks."""
        return {
            "checkpoints": [(s, e, float(l)) for s, e, l in self.checkpoints],
            "best_step": self.best_step,
            "best_dev_loss": float(self.best_dev_loss),
            "chosen_epoch": self.chosen_epoch,
            "total_steps": self.total_steps,
            "stop_reason": self.stop_reason,
        }

    def to_json(self) -> str:
        payload = self.key()
        payload["wall_clock_seconds"] = self.wall_clock_seconds
        return json.dumps(payload, indent=2, sort_keys=True)


@dataclass(frozen=True)
class ProbeSentence:
    """One training/eval record: embeddings plus gold structure."""

    sent_id: str
    embeddings: np.ndarray  # (n, d) float64
    gold_distances: np.ndarray  # (n, n) float64
    gold_edges: frozenset
    is_punct: Optional[tuple] = None  # per-token bool, None when unknown


def make_dataset(sentences: Iterable[Sentence], embedding_set) -> list:
    """Join a corpus with an embedding set on sent_id, corpus order kept.

    Sentences missing from the embedding set or shorter than two tokens are
    skipped; a token-count mismatch is an error.
    """
    data = []
    for sentence in sentences:
        matrix = embedding_set.sentences.get(sentence.sent_id)
        if matrix is None:
            continue
        if len(sentence) < 2:
            continue
        if matrix.shape[0] != len(sentence):
            raise DataError(
                f"sentence {sentence.sent_id}: {matrix.shape[0]} embedding rows "
                f"for {len(sentence)} tokens"
            )
        data.append(
            ProbeSentence(
                sent_id=sentence.sent_id,
                embeddings=np.asarray(matrix, dtype=np.float64),
                gold_distances=distance_matrix(sentence).entries.astype(np.float64),
                gold_edges=sentence.edges(),
                is_punct=tuple(tok.upos == "PUNCT" for tok in sentence.tokens),
            )
        )
    return data


def squared_distance(params: ProbeParams, h_i: np.ndarray, h_j: np.ndarray) -> float:
    h_i = np.asarray(h_i, dtype=np.float64)
    h_j = np.asarray(h_j, dtype=np.float64)
    if h_i.shape != (params.dim,) or h_j.shape != (params.dim,):
        raise DataError(
            f"vectors of shape {h_i.shape}, {h_j.shape}; expected ({params.dim},)"
        )
    proj = params.B @ (h_i - h_j)
    return float(proj @ proj)


def pairwise_squared_distances(B: np.ndarray, H: np.ndarray) -> np.ndarray:
    """All-pairs squared projected distances, clamped at zero."""
    P = H @ B.T
    sq = np.einsum("ij,ij->i", P, P)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (P @ P.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _edge_laplacian(n: int, edges) -> np.ndarray:
    L = np.zeros((n, n), dtype=np.float64)
    for u, v in edges:
        L[u - 1, u - 1] += 1.0
        L[v - 1, v - 1] += 1.0
        L[u - 1, v - 1] -= 1.0
        L[v - 1, u - 1] -= 1.0
    return L


def structural_loss(B: np.ndarray, H: np.ndarray, gold: np.ndarray):
    """L1-over-pairs distance regression loss and its exact subgradient.

    loss = (1/n^2) sum_{i,j} |gold(i,j) - ||B(h_i - h_j)||^2|, sign 0 at ties.
    """
    n = H.shape[0]
    if n < 2:
        raise DataError("structural loss needs at least 2 tokens")
    d2 = pairwise_squared_distances(B, H)
    err = gold - d2
    loss = float(np.abs(err).sum()) / (n * n)
    S = np.sign(err) * (-2.0 / (n * n))
    D = np.diag(S.sum(axis=1))
    grad = B @ (2.0 * (H.T @ ((D - S) @ H)))
    return loss, grad


def perceptron_loss(B: np.ndarray, H: np.ndarray, gold_edges):
    """Structured-perceptron tree loss and gradient.

    Decodes the minimum spanning tree under the predicted squared distances
    and scores gold minus decoded total distance; zero exactly when the
    gold tree is itself an MST. The decoded tree is treated as constant for
    the gradient.
    """
    n = H.shape[0]
    if n < 2:
        raise DataError("perceptron loss needs at least 2 tokens")
    d2 = pairwise_squared_distances(B, H)
    decoded = mst_prim(d2, "minimize")
    gold_sum = sum(d2[u - 1, v - 1] for u, v in gold_edges)
    decoded_sum = sum(d2[u - 1, v - 1] for u, v in decoded.edges)
    loss = max(float(gold_sum - decoded_sum), 0.0)
    L = _edge_laplacian(n, gold_edges) - _edge_laplacian(n, decoded.edges)
    grad = 2.0 * (B @ (H.T @ (L @ H)))
    return loss, grad


def _sentence_loss(kind: str, B: np.ndarray, record: ProbeSentence, H=None):
    H = record.embeddings if H is None else H
    if kind == "structural":
        return structural_loss(B, H, record.gold_distances)
    return perceptron_loss(B, H, record.gold_edges)


def dataset_loss(kind: str, B: np.ndarray, data) -> float:
    """Mean per-sentence loss without dropout (the dev criterion)."""
    total = 0.0
    for record in data:
        loss, _ = _sentence_loss(kind, B, record)
        total += loss
    return total / len(data)


class _Adam:
    def __init__(self, shape, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def train_probe(kind: str, train_data, dev_data, cfg: TrainConfig):
    """Train a probe, returning (best-dev ProbeParams, TrainHistory).

    Fully seeded: initialization, epoch shuffling, and dropout masks come
    from one generator, so equal configs reproduce bit-identical parameters.
    """
    if kind not in PROBE_KINDS:
        raise ConfigError(f"unknown probe kind {kind!r}")
    if not train_data or not dev_data:
        raise DataError("train and dev datasets must be nonempty")
    dim = train_data[0].embeddings.shape[1]
    for record in list(train_data) + list(dev_data):
        if record.embeddings.shape[1] != dim:
            raise DataError("inconsistent embedding dimensions in dataset")
    cfg.validate(dim)

    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    B = rng.uniform(-0.05, 0.05, size=(cfg.rank, dim))
    adam = _Adam(B.shape, cfg.learning_rate)
    history = TrainHistory()
    best_B = B.copy()
    streak = 0
    step = 0
    last_checkpointed = -1
    stop = False
    keep_prob = 1.0 - cfg.dropout

    def checkpoint(epoch: int) -> None:
        nonlocal streak, best_B, stop, last_checkpointed
        dev_loss = dataset_loss(kind, B, dev_data)
        if not math.isfinite(dev_loss):
            raise NumericalError(
                f"non-finite dev loss at step {step} (lr={cfg.learning_rate})"
            )
        history.checkpoints.append((step, epoch, dev_loss))
        last_checkpointed = step
        if dev_loss < history.best_dev_loss:
            history.best_dev_loss = dev_loss
            history.best_step = step
            history.chosen_epoch = epoch
            best_B = B.copy()
            streak = 0
        else:
            streak += 1
            if streak >= max(cfg.patience, 1):
                history.stop_reason = "early_stop"
                stop = True

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_data))
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            step += 1
            grad = np.zeros_like(B)
            batch_loss = 0.0
            for idx in batch:
                record = train_data[int(idx)]
                H = record.embeddings
                B_used = B
                row_mask = None
                if cfg.dropout > 0.0:
                    if cfg.dropout_target == "inputs":
                        mask = rng.random(H.shape) >= cfg.dropout
                        H = H * (mask / keep_prob)
                    else:
                        # Zeroed projection coordinates = zeroed rows of B;
                        # the chain rule re-applies the same mask to the grad.
                        row_mask = (
                            rng.random((cfg.rank, 1)) >= cfg.dropout
                        ) / keep_prob
                        B_used = B * row_mask
                loss, g = _sentence_loss(kind, B_used, record, H)
                if row_mask is not None:
                    g = g * row_mask
                batch_loss += loss
                grad += g
            batch_loss /= len(batch)
            grad /= len(batch)
            if not math.isfinite(batch_loss) or not np.all(np.isfinite(grad)):
                raise NumericalError(
                    f"non-finite training loss at step {step} (lr={cfg.learning_rate})"
                )
            B = adam.step(B, grad)
            if step % cfg.checkpoint_every == 0:
                checkpoint(epoch)
                if stop:
                    break
        if stop:
            break
    if not stop and step != last_checkpointed:
        checkpoint(cfg.max_epochs)
    if not history.stop_reason:
        history.stop_reason = "max_epochs"
    history.total_steps = step
    history.wall_clock_seconds = time.perf_counter() - start
    params = ProbeParams(kind=kind, B=best_B)
    params.validate()
    return params, history


@dataclass(frozen=True)
class SearchSpace:
    lr_min: float = LR_RANGE[0]
    lr_max: float = LR_RANGE[1]
    rank_min: int = 1
    rank_max: Optional[int] = None  # None means the embedding dim
    dropout_min: float = DROPOUT_RANGE[0]
    dropout_max: float = DROPOUT_RANGE[1]


def sample_config(space: SearchSpace, dim: int, rng, base: TrainConfig) -> TrainConfig:
    """Draw one hyperparameter setting: log-uniform lr, uniform integer rank,
    uniform dropout."""
    lr = math.exp(rng.uniform(math.log(space.lr_min), math.log(space.lr_max)))
    rank_max = space.rank_max if space.rank_max is not None else dim
    rank = int(rng.integers(space.rank_min, rank_max + 1))
    dropout = float(rng.uniform(space.dropout_min, space.dropout_max))
    return replace(base, learning_rate=lr, rank=rank, dropout=dropout)


@dataclass
class TrialResult:
    layer: int
    trial: int
    config: TrainConfig
    params: ProbeParams
    history: TrainHistory


@dataclass
class SearchResult:
    best_layer: int
    best_config: TrainConfig
    best_params: ProbeParams
    best_dev_loss: float
    trials: list


def sweep_layers(num_layers: int, stride: int = 4) -> list:
    """Every ``stride``-th layer from the uncontextualised layer 0 upward."""
    return list(range(0, num_layers + 1, stride))


def random_search(
    kind: str,
    data_by_layer: dict,
    space: SearchSpace = SearchSpace(),
    trials: int = 10,
    layers: Optional[list] = None,
    seed: int = 0,
    base: Optional[TrainConfig] = None,
) -> SearchResult:
    """Per-layer random hyperparameter search, selected by dev loss.

    Every trial derives its own generator from (seed, layer, trial), so the
    search is reproducible and order-independent across layers.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if layers is None:
        layers = sorted(data_by_layer)
    if base is None:
        base = TrainConfig(learning_rate=1e-3, rank=1, dropout=0.0)
    results = []
    for layer in layers:
        if layer not in data_by_layer:
            raise ConfigError(f"no data for layer {layer}")
        train_data, dev_data = data_by_layer[layer]
        dim = train_data[0].embeddings.shape[1]
        for trial in range(trials):
            rng = np.random.default_rng([seed, layer, trial])
            cfg = sample_config(space, dim, rng, base)
            cfg = replace(cfg, seed=int(rng.integers(2**63)))
            params, history = train_probe(kind, train_data, dev_data, cfg)
            results.append(
                TrialResult(
                    layer=layer, trial=trial, config=cfg, params=params, history=history
                )
            )
    best = min(results, key=lambda r: (r.history.best_dev_loss, r.layer, r.trial))
    return SearchResult(
        best_layer=best.layer,
        best_config=best.config,
        best_params=best.params,
        best_dev_loss=best.history.best_dev_loss,
        trials=results,
    )


def predict_distances(params: ProbeParams, H: np.ndarray) -> np.ndarray:
    return pairwise_squared_distances(params.B, np.asarray(H, dtype=np.float64))


def decode_tree(params: ProbeParams, H: np.ndarray) -> UndirectedTree:
    return mst_prim(predict_distances(params, H), "minimize")


def evaluate_probe(
    params: ProbeParams,
    data,
    length_filter: bool = False,
    exclude_punct: bool = False,
) -> dict:
    """UUAS of decoded trees and distance-rank correlation on a dataset.

    UUAS is the micro average over gold edges. ``exclude_punct`` drops
    punctuation tokens before decoding and scoring; sentences left with
    fewer than two tokens are skipped.
    """
    correct_edges = 0
    gold_edges_total = 0
    distance_pairs = []
    scored = 0
    for record in data:
        pred_d2 = predict_distances(params, record.embeddings)
        gold_d = record.gold_distances
        gold_edges = record.gold_edges
        if exclude_punct and record.is_punct is not None and any(record.is_punct):
            keep = [i for i, punct in enumerate(record.is_punct) if not punct]
            if len(keep) < 2:
                continue
            remap = {old + 1: new + 1 for new, old in enumerate(keep)}
            idx = np.asarray(keep)
            pred_d2 = pred_d2[np.ix_(idx, idx)]
            gold_d = gold_d[np.ix_(idx, idx)]
            gold_edges = frozenset(
                (min(remap[u], remap[v]), max(remap[u], remap[v]))
                for u, v in gold_edges
                if u in remap and v in remap
            )
        pred_tree = mst_prim(pred_d2, "minimize")
        correct_edges += len(pred_tree.edges & gold_edges)
        gold_edges_total += len(gold_edges)
        distance_pairs.append((pred_d2, gold_d))
        scored += 1
    if gold_edges_total == 0:
        raise DataError("no gold edges to score")
    return {
        "uuas": correct_edges / gold_edges_total,
        "dspr": dspr(distance_pairs, length_filter=length_filter),
        "n_sentences": scored,
    }


def save_probe_params(params: ProbeParams, path) -> str:
    """Write the binary parameter file; returns its sha256 hex digest."""
    params.validate()
    kind_byte = PROBE_KINDS.index(params.kind)
    blob = (
        JPRB_MAGIC
        + struct.pack("<BII", kind_byte, params.rank, params.dim)
        + np.ascontiguousarray(params.B, dtype="<f8").tobytes()
    )
    with open(path, "wb") as handle:
        handle.write(blob)
    return hashlib.sha256(blob).hexdigest()


def load_probe_params(path) -> ProbeParams:
    with open(path, "rb") as handle:
        blob = handle.read()
    if blob[:4] != JPRB_MAGIC:
        raise JembFormatError(f"bad probe magic {blob[:4]!r}", offset=0)
    if len(blob) < 13:
        raise JembFormatError("truncated probe header", offset=len(blob))
    kind_byte, rank, dim = struct.unpack("<BII", blob[4:13])
    if kind_byte >= len(PROBE_KINDS):
        raise JembFormatError(f"unknown probe kind byte {kind_byte}", offset=4)
    expected = 13 + 8 * rank * dim
    if len(blob) != expected:
        raise JembFormatError(
            f"probe payload is {len(blob)} bytes, expected {expected}", offset=13
        )
    B = np.frombuffer(blob[13:], dtype="<f8").reshape(rank, dim).copy()
    params = ProbeParams(kind=PROBE_KINDS[kind_byte], B=B)
    params.validate()
    return params


def probe_sidecar(
    params: ProbeParams,
    cfg: TrainConfig,
    checksum: str,
    model_id: str,
    layer: int,
) -> str:
    return json.dumps(
        {
            "kind": params.kind,
            "rank": params.rank,
            "dim": params.dim,
            "config": asdict(cfg),
            "provenance": {"model_id": model_id, "layer": layer, "seed": cfg.seed},
            "checksum_sha256": checksum,
        },
        indent=2,
        sort_keys=True,
    )
