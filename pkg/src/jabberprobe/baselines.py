"""Lexical-blind tree baselines.

Both baselines see only sentence lengths, never word forms: Path links
adjacent positions into a chain, and Majority stores, per training length,
the maximum spanning tree of gold-edge counts. Their scores are therefore
identical on a corpus and any structure-preserving rewrite of it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable

import numpy as np

from .errors import DataError
from .metrics import UndirectedTree, mst_prim
from .treebank import Sentence

MAX_MAJORITY_LENGTH = 40


def path_tree(n: int) -> UndirectedTree:
    """Chain tree connecting each position to its right neighbor."""
    if n < 1:
        raise DataError(f"path tree needs n >= 1, got {n}")
    return UndirectedTree(n=n, edges=frozenset((i, i + 1) for i in range(1, n)))


@dataclass
class MajorityModel:
    """Per-length majority trees with a Path fallback for unseen lengths."""

    trees: Dict[int, UndirectedTree] = field(default_factory=dict)

    def validate(self) -> None:
        for n, tree in self.trees.items():
            if tree.n != n:
                raise DataError(f"majority tree stored under {n} spans {tree.n}")
            tree.validate()

    def to_json(self) -> str:
        payload = {
            str(n): sorted(list(edge) for edge in self.trees[n].edges)
            for n in sorted(self.trees)
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MajorityModel":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"majority model is not valid JSON: {exc}") from exc
        trees = {}
        for key, edges in payload.items():
            n = int(key)
            trees[n] = UndirectedTree(
                n=n, edges=frozenset((min(u, v), max(u, v)) for u, v in edges)
            )
        model = cls(trees=trees)
        model.validate()
        return model


def majority_fit(corpus: Iterable[Sentence]) -> MajorityModel:
    """Fit per-length majority trees from gold edge counts.

    For each length n <= 40 seen in training, edge (i, j) of the complete
    graph on n positions is weighted by how often it is a gold edge among
    the length-n sentences; the stored tree is the maximum spanning tree of
    those counts. Longer and unseen lengths fall back to Path at predict
    time.
    """
    counts: Dict[int, np.ndarray] = {}
    seen_any = False
    for sentence in corpus:
        seen_any = True
        n = len(sentence)
        if n < 2 or n > MAX_MAJORITY_LENGTH:
            continue
        if n not in counts:
            counts[n] = np.zeros((n, n), dtype=np.float64)
        for u, v in sentence.edges():
            counts[n][u - 1, v - 1] += 1.0
            counts[n][v - 1, u - 1] += 1.0
    if not seen_any:
        raise DataError("majority baseline needs a nonempty training corpus")
    model = MajorityModel(
        trees={n: mst_prim(weights, "maximize") for n, weights in counts.items()}
    )
    model.validate()
    return model


def majority_predict(model: MajorityModel, n: int) -> UndirectedTree:
    """Stored majority tree when fitted, Path otherwise; total over n >= 1."""
    if n < 1:
        raise DataError(f"majority prediction needs n >= 1, got {n}")
    tree = model.trees.get(n)
    if tree is None:
        return path_tree(n)
    return tree
