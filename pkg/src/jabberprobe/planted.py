"""Synthetic corpora with a planted linear solution.

Each sentence is a uniformly random labeled tree whose token embeddings are
0/1 indicators of the edges on the path from node 1. Squared Euclidean
distance between two such vectors equals the tree distance exactly, so the
identity projection already solves the distance-regression task; training on
these corpora checks the optimizer and decoders end to end.
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .embeddings import EmbeddingSet
from .errors import ConfigError
from .metrics import UndirectedTree, tree_from_pruefer
from .treebank import Sentence, Token


def random_tree(n: int, rng) -> UndirectedTree:
    """Uniform random labeled tree on n nodes via a random Pruefer sequence."""
    if n == 1:
        return UndirectedTree(n=1, edges=frozenset())
    if n == 2:
        return UndirectedTree(n=2, edges=frozenset({(1, 2)}))
    sequence = tuple(int(x) for x in rng.integers(1, n + 1, size=n - 2))
    return tree_from_pruefer(sequence, n)


def indicator_embeddings(tree: UndirectedTree, dim: int) -> np.ndarray:
    """Rows are path-edge indicators from node 1, zero-padded to dim columns.

    For nodes u, v the squared L2 distance between rows is the symmetric
    difference of their root paths, i.e. the tree distance.
    """
    if dim < tree.n - 1:
        raise ConfigError(f"dim {dim} too small for a {tree.n}-node tree")
    edge_index = {edge: i for i, edge in enumerate(sorted(tree.edges))}
    adjacency = {u: [] for u in range(1, tree.n + 1)}
    for u, v in tree.edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    rows = np.zeros((tree.n, dim), dtype=np.float32)
    seen = {1}
    queue = [1]
    while queue:
        u = queue.pop(0)
        for v in sorted(adjacency[u]):
            if v in seen:
                continue
            seen.add(v)
            rows[v - 1] = rows[u - 1]
            rows[v - 1, edge_index[(min(u, v), max(u, v))]] = 1.0
            queue.append(v)
    return rows


def tree_to_sentence(tree: UndirectedTree, sent_id: str) -> Sentence:
    """Orient the tree from node 1 and wrap it as a dependency sentence."""
    heads = {1: 0}
    adjacency = {u: [] for u in range(1, tree.n + 1)}
    for u, v in tree.edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    queue = [1]
    while queue:
        u = queue.pop(0)
        for v in sorted(adjacency[u]):
            if v not in heads:
                heads[v] = u
                queue.append(v)
    tokens = tuple(
        Token(
            index=i,
            form=f"w{i}",
            lemma=f"w{i}",
            upos="X",
            xpos="_",
            feats={},
            head=heads[i],
            deprel="root" if heads[i] == 0 else "dep",
        )
        for i in range(1, tree.n + 1)
    )
    sentence = Sentence(
        sent_id=sent_id, tokens=tokens, comments=(f"# sent_id = {sent_id}",)
    )
    sentence.validate()
    return sentence


def planted_corpus(
    count: int,
    seed: int,
    min_tokens: int = 5,
    max_tokens: int = 12,
    dim: int = None,
    model_id: str = "planted",
    split: str = "",
) -> Tuple[List[Sentence], EmbeddingSet]:
    """Sample ``count`` random-tree sentences with exact-solution embeddings."""
    if not 2 <= min_tokens <= max_tokens:
        raise ConfigError(f"bad token range [{min_tokens}, {max_tokens}]")
    if dim is None:
        dim = max_tokens - 1
    rng = np.random.default_rng(seed)
    sentences = []
    matrices = {}
    for i in range(count):
        n = int(rng.integers(min_tokens, max_tokens + 1))
        tree = random_tree(n, rng)
        sent_id = f"planted-{seed}-{i:04d}"
        sentences.append(tree_to_sentence(tree, sent_id))
        matrices[sent_id] = indicator_embeddings(tree, dim)
    embedding_set = EmbeddingSet(
        model_id=model_id, layer=0, dim=dim, sentences=matrices, split=split
    )
    embedding_set.validate()
    return sentences, embedding_set
