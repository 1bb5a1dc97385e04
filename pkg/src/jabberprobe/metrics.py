"""Tree decoding and scoring.

Prim spanning-tree decoding with deterministic tie-breaking, exhaustive
labeled-tree enumeration for test oracles, tree-count arithmetic, and the
two probe metrics: unlabeled undirected attachment score and the
distance-rank correlation.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

MAX_ENUMERATION_NODES = 8


@dataclass(frozen=True)
class UndirectedTree:
    """A spanning tree over nodes 1..n, edges stored as (min, max) pairs."""

    n: int
    edges: frozenset

    @staticmethod
    def from_edges(n: int, edges: Iterable) -> "UndirectedTree":
        normalized = frozenset((min(u, v), max(u, v)) for u, v in edges)
        tree = UndirectedTree(n=n, edges=normalized)
        tree.validate()
        return tree

    def validate(self) -> None:
        if self.n < 1:
            raise DataError(f"tree must have at least one node, got n={self.n}")
        if len(self.edges) != self.n - 1:
            raise DataError(
                f"tree on {self.n} nodes needs {self.n - 1} edges, got {len(self.edges)}"
            )
        parent = list(range(self.n + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in self.edges:
            if not (1 <= u <= self.n and 1 <= v <= self.n and u != v):
                raise DataError(f"bad edge ({u}, {v}) for n={self.n}")
            ru, rv = find(u), find(v)
            if ru == rv:
                raise DataError(f"edge ({u}, {v}) closes a cycle")
            parent[ru] = rv


def mst_prim(weights: np.ndarray, objective: str = "minimize") -> UndirectedTree:
    """Spanning tree optimizing total edge weight via Prim's algorithm.

    ``maximize`` runs the same procedure over negated weights. Weight ties
    are broken lexicographically by (min endpoint, max endpoint), so the
    result is deterministic.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise DataError(f"weight matrix must be square, got {weights.shape}")
    n = weights.shape[0]
    if n < 1:
        raise DataError("weight matrix is empty")
    if not np.all(np.isfinite(weights)):
        raise DataError("weight matrix contains non-finite entries")
    if objective == "maximize":
        weights = -weights
    elif objective != "minimize":
        raise DataError(f"unknown objective {objective!r}")
    if n == 1:
        return UndirectedTree(n=1, edges=frozenset())

    in_tree = [False] * (n + 1)
    in_tree[1] = True
    # best[v] = (cost, min_endpoint, max_endpoint) of the cheapest edge
    # linking outside node v to the tree; lexicographic comparison on the
    # tuple realizes the tie rule.
    best = {}
    for v in range(2, n + 1):
        best[v] = (weights[0, v - 1], min(1, v), max(1, v))
    edges = []
    for _ in range(n - 1):
        v = min(best, key=lambda node: best[node])
        cost, u_lo, u_hi = best.pop(v)
        edges.append((u_lo, u_hi))
        in_tree[v] = True
        for w in best:
            cand = (weights[v - 1, w - 1], min(v, w), max(v, w))
            if cand < best[w]:
                best[w] = cand
    return UndirectedTree(n=n, edges=frozenset(edges))


def tree_from_pruefer(sequence: Sequence[int], n: int) -> UndirectedTree:
    """Decode a Prüfer sequence over [1, n] into its labeled tree."""
    if n < 2:
        if sequence:
            raise DataError("nonempty sequence for n < 2")
        return UndirectedTree(n=max(n, 1), edges=frozenset())
    if len(sequence) != n - 2:
        raise DataError(f"sequence length {len(sequence)} != n-2 for n={n}")
    degree = [1] * (n + 1)
    for node in sequence:
        degree[node] += 1
    edges = []
    # Min-leaf selection via a pointer plus an explicit candidate, the
    # standard linear-time decoding.
    ptr = 1
    leaf = 0
    for node in sequence:
        if leaf == 0:
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
        edges.append((min(leaf, node), max(leaf, node)))
        degree[node] -= 1
        degree[leaf] = 0
        if degree[node] == 1 and node < ptr:
            leaf = node
        else:
            leaf = 0
    last = [v for v in range(1, n + 1) if degree[v] == 1]
    edges.append((min(last), max(last)))
    return UndirectedTree(n=n, edges=frozenset(edges))


def tree_distances(tree: UndirectedTree) -> np.ndarray:
    """All-pairs path lengths of a tree, BFS from every node."""
    tree.validate()
    adjacency = {u: [] for u in range(1, tree.n + 1)}
    for u, v in tree.edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    out = np.zeros((tree.n, tree.n), dtype=np.float64)
    for source in range(1, tree.n + 1):
        dist = {source: 0}
        queue = [source]
        while queue:
            u = queue.pop(0)
            for v in adjacency[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    out[source - 1, v - 1] = dist[v]
                    queue.append(v)
    return out


def enumerate_trees(n: int) -> Iterator[UndirectedTree]:
    """Yield every labeled tree on n nodes exactly once (Prüfer decoding)."""
    if not 1 <= n <= MAX_ENUMERATION_NODES:
        raise DataError(
            f"enumeration supported for 1 <= n <= {MAX_ENUMERATION_NODES}, got {n}"
        )
    if n == 1:
        yield UndirectedTree(n=1, edges=frozenset())
        return
    for sequence in itertools.product(range(1, n + 1), repeat=n - 2):
        yield tree_from_pruefer(sequence, n)


def count_trees(n: int) -> int:
    """Number of labeled trees on n nodes, n^(n-2)."""
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if n == 1:
        return 1
    return n ** (n - 2)


def count_labeled_directed(n: int, labels: int) -> int:
    """Number of rooted, edge-labeled directed trees: n * n^(n-2) * k^(n-1)."""
    if labels < 1:
        raise DataError(f"label count must be >= 1, got {labels}")
    return n * count_trees(n) * labels ** (n - 1)


def _uuas_counts(pred: UndirectedTree, gold: UndirectedTree):
    if pred.n != gold.n:
        raise DataError(f"node count mismatch: pred {pred.n} vs gold {gold.n}")
    return len(pred.edges & gold.edges), len(gold.edges)


def uuas_pair(pred: UndirectedTree, gold: UndirectedTree) -> float:
    """Fraction of gold edges recovered for a single sentence."""
    correct, total = _uuas_counts(pred, gold)
    if total == 0:
        raise DataError("gold tree has no edges")
    return correct / total


def uuas(pairs, macro: bool = False) -> float:
    """Fraction of gold edges recovered.

    ``pairs`` is one (pred, gold) tuple or an iterable of them. The default
    corpus aggregation is the micro average over gold edges; ``macro``
    averages per-sentence scores instead (edgeless sentences skipped).
    """
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], UndirectedTree):
        pairs = [pairs]
    correct_total = 0
    gold_total = 0
    per_sentence = []
    for pred, gold in pairs:
        correct, gold_edges = _uuas_counts(pred, gold)
        correct_total += correct
        gold_total += gold_edges
        if gold_edges:
            per_sentence.append(correct / gold_edges)
    if macro:
        return float(np.mean(per_sentence)) if per_sentence else 0.0
    if gold_total == 0:
        return 0.0
    return correct_total / gold_total


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # Tied block [i, j] gets the mean of ranks i+1..j+1.
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman_rank(xs, ys) -> float:
    """Spearman correlation with average ranks for ties.

    Returns 0.0 when either side is constant.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise DataError(f"rank inputs must be equal-length vectors, got {xs.shape} and {ys.shape}")
    if len(xs) < 2:
        raise DataError(f"need at least 2 observations, got {len(xs)}")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        return 0.0
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(rx.dot(ry) / np.sqrt(rx.dot(rx) * ry.dot(ry)))


def dspr_sentence(pred: np.ndarray, gold: np.ndarray, method: str = "rows"):
    """Rank correlation between predicted and gold distances for one sentence.

    With ``method="rows"`` (the default) row i compares distances from word i
    to every other word and the per-row correlations are averaged; rows whose
    gold side is constant carry no ranking information and are skipped. With
    ``method="pairs"`` a single correlation is computed over all unordered
    word pairs. Returns None when nothing is scorable.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if pred.shape != gold.shape or pred.ndim != 2 or pred.shape[0] != pred.shape[1]:
        raise DataError(f"distance matrices must match, got {pred.shape} and {gold.shape}")
    if method not in ("rows", "pairs"):
        raise ConfigError(f"unknown dspr method {method!r}, expected 'rows' or 'pairs'")
    n = pred.shape[0]
    if method == "pairs":
        iu = np.triu_indices(n, k=1)
        gold_flat = gold[iu]
        pred_flat = pred[iu]
        if len(gold_flat) < 2 or np.all(gold_flat == gold_flat[0]):
            return None
        return spearman_rank(gold_flat, pred_flat)
    scores = []
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        gold_row = gold[i][mask[i]]
        pred_row = pred[i][mask[i]]
        if len(gold_row) < 2 or np.all(gold_row == gold_row[0]):
            continue
        scores.append(spearman_rank(gold_row, pred_row))
    if not scores:
        return None
    return float(np.mean(scores))


def dspr(pairs, length_filter: bool = False, method: str = "rows") -> float:
    """Corpus distance-rank correlation: macro mean of per-sentence scores.

    ``pairs`` iterates (pred_matrix, gold_matrix). Sentences without a
    scorable row are skipped with a log entry; ``length_filter`` restricts
    scoring to sentences of 5..50 words. Raises DataError when no sentence
    is scorable at all.
    """
    scores = []
    skipped = 0
    total = 0
    for pred, gold in pairs:
        total += 1
        n = np.asarray(gold).shape[0]
        if length_filter and not 5 <= n <= 50:
            continue
        if n < 2:
            skipped += 1
            continue
        score = dspr_sentence(pred, gold, method=method)
        if score is None:
            skipped += 1
            continue
        scores.append(score)
    if skipped:
        logger.info("dspr: skipped %d sentence(s) with no scorable row", skipped)
    if not scores:
        raise DataError(f"no scorable sentence among {total} (too short or constant gold)")
    return float(np.mean(scores))
