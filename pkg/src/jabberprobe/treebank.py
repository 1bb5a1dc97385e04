"""CoNLL-U treebank handling.

Parses syntactic-word token lines into immutable sentences, exposes gold
undirected trees as distance matrices, reconciles UD tokenization against
subword alignment records, and reports corpus statistics.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .errors import AlignmentError, ParseError, ReconciliationError

CONLLU_COLUMNS = 10


def _parse_kv_field(raw: str) -> dict:
    """Parse a FEATS/MISC-style field ('A=1|B=2' or '_') into an ordered dict.

    Parts without '=' are kept as bare flags (value None) so they survive a
    round trip.
    """
    if raw == "_" or raw == "":
        return {}
    out: dict = {}
    for part in raw.split("|"):
        if "=" in part:
            key, value = part.split("=", 1)
        else:
            key, value = part, None
        if key in out:
            raise ValueError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _format_kv_field(pairs: dict) -> str:
    if not pairs:
        return "_"
    return "|".join(k if v is None else f"{k}={v}" for k, v in pairs.items())


@dataclass(frozen=True)
class Token:
    """One syntactic word of a sentence, 1-indexed."""

    index: int
    form: str
    lemma: str
    upos: str
    xpos: str
    feats: dict
    head: int  # 0 marks the root
    deprel: str
    misc: dict = field(default_factory=dict)

    def to_conllu(self) -> str:
        return "\t".join(
            [
                str(self.index),
                self.form,
                self.lemma,
                self.upos,
                self.xpos,
                _format_kv_field(self.feats),
                str(self.head),
                self.deprel,
                "_",
                _format_kv_field(self.misc),
            ]
        )


@dataclass(frozen=True)
class Sentence:
    """A parsed sentence whose head links form a tree over the tokens."""

    sent_id: str
    tokens: tuple
    comments: tuple = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def edges(self) -> frozenset:
        """Undirected gold edges as (min, max) index pairs."""
        return frozenset(
            (min(t.index, t.head), max(t.index, t.head))
            for t in self.tokens
            if t.head != 0
        )

    def validate(self) -> None:
        n = len(self.tokens)
        roots = 0
        for pos, tok in enumerate(self.tokens, start=1):
            if tok.index != pos:
                raise ParseError(
                    f"sentence {self.sent_id}: token index {tok.index} at position {pos}"
                )
            if not 0 <= tok.head <= n:
                raise ParseError(
                    f"sentence {self.sent_id}: head {tok.head} out of range [0, {n}]"
                )
            if tok.head == tok.index:
                raise ParseError(
                    f"sentence {self.sent_id}: token {tok.index} is its own head"
                )
            if tok.head == 0:
                roots += 1
        if roots != 1:
            raise ParseError(f"sentence {self.sent_id}: {roots} roots, expected 1")
        # Walking up from every token must reach the root without revisiting.
        for tok in self.tokens:
            seen = set()
            cur = tok.index
            while cur != 0:
                if cur in seen:
                    raise ParseError(
                        f"sentence {self.sent_id}: cyclic head links through token {cur}"
                    )
                seen.add(cur)
                cur = self.tokens[cur - 1].head

    def to_conllu(self) -> str:
        lines = list(self.comments)
        lines.extend(tok.to_conllu() for tok in self.tokens)
        return "\n".join(lines) + "\n"


def sentence_text(sentence: Sentence) -> str:
    """Surface text reconstructed from forms and SpaceAfter=No annotations."""
    parts = []
    for tok in sentence.tokens:
        parts.append(tok.form)
        if tok.misc.get("SpaceAfter") != "No":
            parts.append(" ")
    return "".join(parts).rstrip(" ")


@dataclass(frozen=True)
class DistanceMatrix:
    """All-pairs path lengths in the undirected gold tree."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    def __eq__(self, other):
        return (
            isinstance(other, DistanceMatrix)
            and self.n == other.n
            and np.array_equal(self.entries, other.entries)
        )


@dataclass(frozen=True)
class AlignmentRecord:
    """Subword alignment for one sentence.

    ``token_map`` holds one [start, end) subword span per final (post-merge)
    UD token; ``merges`` lists groups of original 1-based token indices that
    collapse into a single node.
    """

    sent_id: str
    status: str  # "ok" | "removed"
    token_map: tuple = ()
    merges: tuple = ()
    reason: str = ""

    def validate(self) -> None:
        if self.status not in ("ok", "removed"):
            raise AlignmentError(
                f"alignment {self.sent_id}: bad status {self.status!r}"
            )
        if self.status == "removed":
            return
        prev_end = 0
        for span in self.token_map:
            start, end = span
            if start < prev_end:
                raise AlignmentError(
                    f"alignment {self.sent_id}: spans overlap or out of order"
                )
            if end <= start:
                raise AlignmentError(f"alignment {self.sent_id}: empty span {span}")
            prev_end = end

    @staticmethod
    def identity(sent_id: str, n_tokens: int) -> "AlignmentRecord":
        return AlignmentRecord(
            sent_id=sent_id,
            status="ok",
            token_map=tuple((i, i + 1) for i in range(n_tokens)),
        )


def parse_conllu(text: str) -> list:
    """Parse a CoNLL-U document into sentences.

    Multiword-token range lines (ids like "3-4") and empty nodes (ids like
    "5.1") are skipped; comment lines are preserved on the sentence.
    """
    sentences = []
    comments: list = []
    rows: list = []
    fallback_id = 0

    def flush(last_line_no):
        nonlocal fallback_id
        if not rows and not comments:
            return
        if not rows:
            raise ParseError(f"comment-only block ending at line {last_line_no}")
        fallback_id += 1
        sent_id = f"s{fallback_id}"
        for comment in comments:
            body = comment[1:].strip()
            if body.startswith("sent_id"):
                _, _, value = body.partition("=")
                if value.strip():
                    sent_id = value.strip()
        tokens = []
        for pos, (line_no, cols) in enumerate(rows, start=1):
            try:
                head = int(cols[6])
            except ValueError:
                raise ParseError(
                    f"sentence {sent_id} line {line_no}: non-integer head {cols[6]!r}"
                ) from None
            try:
                feats = _parse_kv_field(cols[5])
                misc = _parse_kv_field(cols[9])
            except ValueError as exc:
                raise ParseError(f"sentence {sent_id} line {line_no}: {exc}") from None
            tokens.append(
                Token(
                    index=pos,
                    form=cols[1],
                    lemma=cols[2],
                    upos=cols[3],
                    xpos=cols[4],
                    feats=feats,
                    head=head,
                    deprel=cols[7],
                    misc=misc,
                )
            )
        sentence = Sentence(sent_id=sent_id, tokens=tuple(tokens), comments=tuple(comments))
        sentence.validate()
        sentences.append(sentence)
        comments.clear()
        rows.clear()

    for line_no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line:
            flush(line_no)
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != CONLLU_COLUMNS:
            raise ParseError(
                f"line {line_no}: expected {CONLLU_COLUMNS} columns, got {len(cols)}"
            )
        if "-" in cols[0] or "." in cols[0]:
            continue  # multiword-token range line or empty node
        try:
            token_id = int(cols[0])
        except ValueError:
            raise ParseError(f"line {line_no}: bad token id {cols[0]!r}") from None
        expected = len(rows) + 1
        if token_id != expected:
            raise ParseError(
                f"line {line_no}: token id {token_id}, expected {expected}"
            )
        rows.append((line_no, cols))
    flush(len(text.split("\n")))
    return sentences


def parse_conllu_file(path) -> list:
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle.read())


def serialize_conllu(sentences: Iterable[Sentence]) -> str:
    return "\n".join(sentence.to_conllu() for sentence in sentences)


def write_conllu_file(sentences: Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_conllu(sentences))


def adjacency(sentence: Sentence) -> list:
    """0-based adjacency lists of the undirected gold tree."""
    n = len(sentence)
    adj: list = [[] for _ in range(n)]
    for tok in sentence.tokens:
        if tok.head != 0:
            adj[tok.index - 1].append(tok.head - 1)
            adj[tok.head - 1].append(tok.index - 1)
    return adj


def distance_matrix(sentence: Sentence) -> DistanceMatrix:
    """Breadth-first path lengths between every token pair."""
    n = len(sentence)
    adj = adjacency(sentence)
    entries = np.zeros((n, n), dtype=np.int64)
    for source in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        dist[source] = 0
        queue = deque([source])
        while queue:
            node = queue.popleft()
            for nbr in adj[node]:
                if dist[nbr] < 0:
                    dist[nbr] = dist[node] + 1
                    queue.append(nbr)
        entries[source] = dist
    return DistanceMatrix(n=n, entries=entries)


def _external_head(group: list, group_set: set, sentence: Sentence) -> int:
    """Follow head links from the group's first member until they exit the group."""
    cur = group[0]
    visited = set()
    while cur in group_set:
        if cur in visited:
            raise ReconciliationError(
                f"sentence {sentence.sent_id}: merge group {group} has cyclic heads"
            )
        visited.add(cur)
        cur = sentence.tokens[cur - 1].head
        if cur == 0:
            return 0
    return cur


def align_and_reconcile(
    sentence: Sentence, record: AlignmentRecord
) -> Optional[Sentence]:
    """Apply an alignment record's merges to a sentence.

    Returns None when the record marks the sentence removed. Each merge
    group collapses into its first member; the group's dependents reattach
    to the survivor, token forms concatenate (originals kept in misc), and
    tokens are reindexed. Raises ReconciliationError when a group is not
    contiguous or the merge breaks the tree invariant.
    """
    if record.sent_id != sentence.sent_id:
        raise AlignmentError(
            f"alignment for {record.sent_id} applied to sentence {sentence.sent_id}"
        )
    record.validate()
    if record.status == "removed":
        return None
    if not record.merges:
        merged = sentence
    else:
        merged = _apply_merges(sentence, record.merges)
    if len(merged) != len(record.token_map):
        raise ReconciliationError(
            f"sentence {sentence.sent_id}: {len(merged)} tokens after merges, "
            f"alignment maps {len(record.token_map)}"
        )
    return merged


def _apply_merges(sentence: Sentence, merges) -> Sentence:
    n = len(sentence)
    claimed: set = set()
    groups = []
    for group in merges:
        group = list(group)
        if sorted(group) != list(range(min(group), min(group) + len(group))):
            raise ReconciliationError(
                f"sentence {sentence.sent_id}: merge group {group} is not contiguous"
            )
        if len(group) < 2:
            raise ReconciliationError(
                f"sentence {sentence.sent_id}: merge group {group} too small"
            )
        for idx in group:
            if not 1 <= idx <= n or idx in claimed:
                raise ReconciliationError(
                    f"sentence {sentence.sent_id}: bad merge index {idx}"
                )
            claimed.add(idx)
        groups.append(sorted(group))

    survivor_of = {}  # original index -> surviving original index
    for group in groups:
        for idx in group:
            survivor_of[idx] = group[0]

    new_heads = {}
    for group in groups:
        first = sentence.tokens[group[0] - 1]
        if first.head in survivor_of and survivor_of[first.head] == group[0]:
            head = _external_head(group, set(group), sentence)
        else:
            head = first.head
        new_heads[group[0]] = head

    keep = [i for i in range(1, n + 1) if survivor_of.get(i, i) == i]
    new_index = {orig: pos for pos, orig in enumerate(keep, start=1)}

    def resolve_head(head: int) -> int:
        if head == 0:
            return 0
        return new_index[survivor_of.get(head, head)]

    tokens = []
    for orig in keep:
        tok = sentence.tokens[orig - 1]
        head = new_heads.get(orig, tok.head)
        if orig in new_heads:
            group = next(g for g in groups if g[0] == orig)
            form = "".join(sentence.tokens[i - 1].form for i in group)
            misc = dict(tok.misc)
            misc["MergedForms"] = "+".join(sentence.tokens[i - 1].form for i in group)
            tok = replace(tok, form=form, misc=misc)
        tokens.append(
            replace(tok, index=new_index[orig], head=resolve_head(head))
        )
    merged = Sentence(
        sent_id=sentence.sent_id, tokens=tuple(tokens), comments=sentence.comments
    )
    try:
        merged.validate()
    except ParseError as exc:
        raise ReconciliationError(
            f"sentence {sentence.sent_id}: merge broke the tree invariant: {exc}"
        ) from None
    return merged


@dataclass(frozen=True)
class CorpusStats:
    sentences: int
    tokens: int
    length_histogram: dict


def corpus_stats(corpus: Iterable[Sentence]) -> CorpusStats:
    hist: Counter = Counter()
    tokens = 0
    for sentence in corpus:
        hist[len(sentence)] += 1
        tokens += len(sentence)
    return CorpusStats(
        sentences=sum(hist.values()), tokens=tokens, length_histogram=dict(hist)
    )


def read_alignment_jsonl(path) -> dict:
    """Load alignment records keyed by sent_id from a JSONL file."""
    records = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AlignmentError(f"{path} line {line_no}: {exc}") from None
            record = AlignmentRecord(
                sent_id=obj["sent_id"],
                status=obj["status"],
                token_map=tuple(tuple(span) for span in obj.get("token_map", [])),
                merges=tuple(tuple(group) for group in obj.get("merges", [])),
                reason=obj.get("reason", ""),
            )
            record.validate()
            records[record.sent_id] = record
    return records


def write_alignment_jsonl(records: Iterable[AlignmentRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            obj = {
                "sent_id": record.sent_id,
                "status": record.status,
                "token_map": [list(span) for span in record.token_map],
                "merges": [list(group) for group in record.merges],
            }
            if record.reason:
                obj["reason"] = record.reason
            handle.write(json.dumps(obj) + "\n")
