"""Embedding interchange and baseline representation building.

Defines the JEMB binary format (seekless streaming, little-endian), the
word-vector + position-embedding baseline composition, and the mapping from
subword-level matrices to UD-token vectors via alignment records.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import AlignmentError, JembFormatError
from .treebank import AlignmentRecord, Sentence

logger = logging.getLogger(__name__)

JEMB_MAGIC = b"JEMB"
JEMB_VERSION = 1


@dataclass
class EmbeddingSet:
    """Per-sentence token (or subword) matrices for one (model, layer) pair."""

    model_id: str
    layer: int
    dim: int
    sentences: dict = field(default_factory=dict)  # sent_id -> float32 (n, dim)
    split: str = ""

    def validate(self) -> None:
        if self.dim < 1:
            raise JembFormatError(f"dim must be >= 1, got {self.dim}")
        if self.layer < 0:
            raise JembFormatError(f"layer must be >= 0, got {self.layer}")
        for sent_id, matrix in self.sentences.items():
            if matrix.ndim != 2 or matrix.shape[1] != self.dim:
                raise JembFormatError(
                    f"sentence {sent_id}: matrix shape {matrix.shape} != (*, {self.dim})"
                )
            if not np.all(np.isfinite(matrix)):
                raise JembFormatError(f"sentence {sent_id}: non-finite entries")


def write_embedding_file(embedding_set: EmbeddingSet, path) -> None:
    embedding_set.validate()
    meta = json.dumps(
        {
            "model": embedding_set.model_id,
            "layer": embedding_set.layer,
            "dim": embedding_set.dim,
            "split": embedding_set.split,
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(JEMB_MAGIC)
        handle.write(struct.pack("<I", JEMB_VERSION))
        handle.write(struct.pack("<I", len(meta)))
        handle.write(meta)
        handle.write(struct.pack("<I", len(embedding_set.sentences)))
        for sent_id, matrix in embedding_set.sentences.items():
            sid = sent_id.encode("utf-8")
            handle.write(struct.pack("<H", len(sid)))
            handle.write(sid)
            handle.write(struct.pack("<I", matrix.shape[0]))
            handle.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_embedding_file(path) -> EmbeddingSet:
    with open(path, "rb") as handle:
        data = handle.read()
    offset = 0

    def take(count, what):
        nonlocal offset
        if offset + count > len(data):
            raise JembFormatError(f"truncated while reading {what}", offset=offset)
        chunk = data[offset : offset + count]
        offset += count
        return chunk

    magic = take(4, "magic")
    if magic != JEMB_MAGIC:
        raise JembFormatError(f"bad magic {magic!r}", offset=0)
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != JEMB_VERSION:
        raise JembFormatError(f"unsupported version {version}", offset=4)
    (meta_len,) = struct.unpack("<I", take(4, "metadata length"))
    meta_raw = take(meta_len, "metadata")
    try:
        meta = json.loads(meta_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise JembFormatError(f"bad metadata: {exc}", offset=12) from None
    for key in ("model", "layer", "dim"):
        if key not in meta:
            raise JembFormatError(f"metadata missing {key!r}", offset=12)
    dim = int(meta["dim"])
    if dim < 1:
        raise JembFormatError(f"dim must be >= 1, got {dim}", offset=12)
    (n_sentences,) = struct.unpack("<I", take(4, "sentence count"))
    sentences = {}
    for _ in range(n_sentences):
        (id_len,) = struct.unpack("<H", take(2, "sentence id length"))
        sent_id = take(id_len, "sentence id").decode("utf-8")
        record_offset = offset
        (n_tokens,) = struct.unpack("<I", take(4, "token count"))
        payload = take(4 * n_tokens * dim, f"matrix of sentence {sent_id}")
        matrix = np.frombuffer(payload, dtype="<f4").reshape(n_tokens, dim).copy()
        if not np.all(np.isfinite(matrix)):
            raise JembFormatError(
                f"sentence {sent_id}: non-finite entries", offset=record_offset
            )
        if sent_id in sentences:
            raise JembFormatError(
                f"duplicate sentence id {sent_id!r}", offset=record_offset
            )
        sentences[sent_id] = matrix
    if offset != len(data):
        raise JembFormatError("trailing bytes after last record", offset=offset)
    return EmbeddingSet(
        model_id=str(meta["model"]),
        layer=int(meta["layer"]),
        dim=dim,
        sentences=sentences,
        split=str(meta.get("split", "")),
    )


@dataclass
class PositionTable:
    """Absolute-position embedding rows; row r is sentence position r."""

    max_positions: int
    dim_pos: int
    rows: np.ndarray

    def validate(self) -> None:
        if self.rows.shape != (self.max_positions, self.dim_pos):
            raise JembFormatError(
                f"position rows shape {self.rows.shape} != "
                f"({self.max_positions}, {self.dim_pos})"
            )
        if not np.all(np.isfinite(self.rows)):
            raise JembFormatError("position table has non-finite entries")


POSITION_SENTENCE_ID = "positions"


def write_position_table(table: PositionTable, path, model_id: str = "position-table") -> None:
    table.validate()
    write_embedding_file(
        EmbeddingSet(
            model_id=model_id,
            layer=0,
            dim=table.dim_pos,
            sentences={POSITION_SENTENCE_ID: table.rows.astype(np.float32)},
        ),
        path,
    )


def read_position_table(path) -> PositionTable:
    embedding_set = read_embedding_file(path)
    if list(embedding_set.sentences) != [POSITION_SENTENCE_ID]:
        raise JembFormatError(
            f"position table must hold exactly one pseudo-sentence "
            f"{POSITION_SENTENCE_ID!r}, got {list(embedding_set.sentences)}"
        )
    rows = embedding_set.sentences[POSITION_SENTENCE_ID]
    table = PositionTable(
        max_positions=rows.shape[0], dim_pos=embedding_set.dim, rows=rows
    )
    table.validate()
    return table


def load_word_vectors(path):
    """Read text-format word vectors ('count dim' header, then 'word v1 ... vD')."""
    vectors = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise JembFormatError(f"{path}: header must be 'count dim'")
        count, dim = int(header[0]), int(header[1])
        for line_no, line in enumerate(handle, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise JembFormatError(
                    f"{path} line {line_no}: expected {dim + 1} fields, got {len(parts)}"
                )
            vectors[parts[0]] = np.asarray(parts[1:], dtype=np.float32)
    if len(vectors) != count:
        logger.warning(
            "%s: header says %d words, file has %d", path, count, len(vectors)
        )
    return vectors, dim


def lookup_word_vector(vectors: dict, dim: int, form: str) -> np.ndarray:
    """Exact form, then lowercase, then zeros (logged by the caller)."""
    hit = vectors.get(form)
    if hit is None:
        hit = vectors.get(form.lower())
    if hit is None:
        return np.zeros(dim, dtype=np.float32)
    return hit


def compose_fast_pos(
    corpus: Iterable[Sentence],
    vectors: dict,
    word_dim: int,
    positions: PositionTable,
    model_id: str = "fast+pos",
    split: str = "",
) -> EmbeddingSet:
    """Concatenate a token's word vector with its position row.

    Out-of-vocabulary forms contribute an all-zero word vector; sentences
    longer than the position table are skipped. Both cases are logged.
    """
    dim = word_dim + positions.dim_pos
    sentences = {}
    oov = 0
    for sentence in corpus:
        n = len(sentence)
        if n > positions.max_positions:
            logger.warning(
                "fast+pos: sentence %s has %d tokens > %d positions, skipping",
                sentence.sent_id,
                n,
                positions.max_positions,
            )
            continue
        matrix = np.empty((n, dim), dtype=np.float32)
        for i, token in enumerate(sentence.tokens):
            word_vec = lookup_word_vector(vectors, word_dim, token.form)
            if not word_vec.any():
                oov += 1
            matrix[i, :word_dim] = word_vec
            matrix[i, word_dim:] = positions.rows[i]
        sentences[sentence.sent_id] = matrix
    if oov:
        logger.info("fast+pos: %d token(s) out of vocabulary, zero-filled", oov)
    return EmbeddingSet(
        model_id=model_id, layer=0, dim=dim, sentences=sentences, split=split
    )


def token_vectors_from_subwords(
    raw: np.ndarray, record: AlignmentRecord
) -> np.ndarray:
    """First-subword vector per final UD token."""
    if record.status != "ok":
        raise AlignmentError(f"sentence {record.sent_id}: alignment status is not ok")
    n_subwords = raw.shape[0]
    out = np.empty((len(record.token_map), raw.shape[1]), dtype=raw.dtype)
    for t, (start, end) in enumerate(record.token_map):
        if not 0 <= start < end <= n_subwords:
            raise AlignmentError(
                f"sentence {record.sent_id}: span [{start}, {end}) out of bounds "
                f"for {n_subwords} subwords"
            )
        out[t] = raw[start]
    return out


def token_level_set(raw_set: EmbeddingSet, records: dict) -> EmbeddingSet:
    """Apply alignment records to every sentence of a subword-level set."""
    sentences = {}
    for sent_id, matrix in raw_set.sentences.items():
        record = records.get(sent_id)
        if record is None:
            raise AlignmentError(f"no alignment record for sentence {sent_id}")
        if record.status != "ok":
            continue
        sentences[sent_id] = token_vectors_from_subwords(matrix, record)
    return EmbeddingSet(
        model_id=raw_set.model_id,
        layer=raw_set.layer,
        dim=raw_set.dim,
        sentences=sentences,
        split=raw_set.split,
    )
