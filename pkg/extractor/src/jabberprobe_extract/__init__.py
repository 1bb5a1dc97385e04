"""Transformer hidden-state extraction to JEMB interchange files."""

from .align import SentenceAlignment, align_sentence, tokenize_words
from .conllu import SimpleSentence, read_corpus
from .errors import ExtractionError
from .extract import (
    ExtractionJob,
    ExtractionResult,
    export_position_table,
    load_encoder,
    resolve_layers,
    run_extraction,
)
from .jemb import write_alignment_jsonl, write_jemb

__all__ = [
    "ExtractionError",
    "ExtractionJob",
    "ExtractionResult",
    "SentenceAlignment",
    "SimpleSentence",
    "align_sentence",
    "export_position_table",
    "load_encoder",
    "read_corpus",
    "resolve_layers",
    "run_extraction",
    "tokenize_words",
    "write_alignment_jsonl",
    "write_jemb",
]
