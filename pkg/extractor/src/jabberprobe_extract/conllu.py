"""Minimal CoNLL-U reading.

The extractor only needs sentence ids and surface forms; trees, features,
and comments other than sent_id are left to the consumer of its output.
"""

from dataclasses import dataclass

from .errors import ExtractionError


@dataclass(frozen=True)
class SimpleSentence:
    sent_id: str
    forms: tuple


def _is_word_line(columns) -> bool:
    # plain integer ids only: multiword ranges (1-2) and empty nodes (1.1)
    # never carry embeddings
    return columns[0].isdigit()


def read_corpus(path) -> list:
    sentences = []
    seen = set()
    forms = []
    sent_id = None
    fallback = 0

    def flush():
        nonlocal forms, sent_id, fallback
        if not forms:
            sent_id = None
            return
        fallback += 1
        sid = sent_id if sent_id is not None else f"s{fallback}"
        if sid in seen:
            raise ExtractionError(f"{path}: duplicate sentence id {sid!r}")
        seen.add(sid)
        sentences.append(SimpleSentence(sent_id=sid, forms=tuple(forms)))
        forms = []
        sent_id = None

    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("sent_id") and "=" in body:
                    sent_id = body.split("=", 1)[1].strip()
                continue
            columns = line.split("\t")
            if len(columns) < 2:
                raise ExtractionError(
                    f"{path} line {line_no}: expected tab-separated columns"
                )
            if _is_word_line(columns):
                forms.append(columns[1])
    flush()
    if not sentences:
        raise ExtractionError(f"{path}: no sentences")
    return sentences
