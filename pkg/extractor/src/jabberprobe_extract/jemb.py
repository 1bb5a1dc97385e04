"""Writers for the embedding interchange files.

JEMB layout, little-endian throughout:

    magic "JEMB" | u32 version=1 | u32 metadata byte length |
    metadata JSON {"dim", "layer", "model", "split"} (sorted keys) |
    u32 sentence count | per sentence:
        u16 id byte length | id UTF-8 | u32 n_rows | n_rows*dim float32

Alignment records go to JSONL, one object per sentence with keys
sent_id, status, token_map, merges, and reason when status is removed.

All writes are atomic: the payload lands in a temp file next to the
target and is renamed into place.
"""

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ExtractionError

JEMB_MAGIC = b"JEMB"
JEMB_VERSION = 1
POSITION_SENTENCE_ID = "positions"


def atomic_write_bytes(path, blob: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jemb(path, model_id: str, layer: int, dim: int, split: str, sentences: dict) -> None:
    """Serialize sent_id -> (n, dim) float32 matrices, insertion order kept."""
    chunks = []
    meta = json.dumps(
        {"model": model_id, "layer": layer, "dim": dim, "split": split},
        sort_keys=True,
    ).encode("utf-8")
    chunks.append(JEMB_MAGIC)
    chunks.append(struct.pack("<I", JEMB_VERSION))
    chunks.append(struct.pack("<I", len(meta)))
    chunks.append(meta)
    chunks.append(struct.pack("<I", len(sentences)))
    for sent_id, matrix in sentences.items():
        matrix = np.ascontiguousarray(matrix, dtype="<f4")
        if matrix.ndim != 2 or matrix.shape[1] != dim:
            raise ExtractionError(
                f"sentence {sent_id}: matrix shape {matrix.shape} != (*, {dim})"
            )
        if not np.all(np.isfinite(matrix)):
            raise ExtractionError(f"sentence {sent_id}: non-finite embedding rows")
        sid = sent_id.encode("utf-8")
        chunks.append(struct.pack("<H", len(sid)))
        chunks.append(sid)
        chunks.append(struct.pack("<I", matrix.shape[0]))
        chunks.append(matrix.tobytes())
    atomic_write_bytes(path, b"".join(chunks))


def write_alignment_jsonl(path, alignments) -> None:
    lines = []
    for record in alignments:
        obj = {
            "sent_id": record.sent_id,
            "status": record.status,
            "token_map": [list(span) for span in record.token_map],
            "merges": [list(group) for group in record.merges],
        }
        if record.reason:
            obj["reason"] = record.reason
        lines.append(json.dumps(obj))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))
