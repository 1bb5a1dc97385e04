"""Run an encoder over a corpus and export its hidden states.

One JEMB file per requested layer (layer 0, the uncontextualised
embedding output, is always included), plus one alignment JSONL per
(model, split). Batches keep corpus order and are right-padded; rows for
padding and special tokens never reach the output files.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .align import align_sentence
from .conllu import read_corpus
from .errors import ExtractionError
from .jemb import POSITION_SENTENCE_ID, write_alignment_jsonl, write_jemb

logger = logging.getLogger(__name__)

DEFAULT_LAYER_STRIDE = 4


@dataclass
class ExtractionJob:
    model_ref: str  # local directory or hub id
    corpus: Path
    split: str
    output_dir: Path
    layers: tuple = ()  # empty -> every DEFAULT_LAYER_STRIDE-th layer
    name: str = ""  # filename tag, defaults to the model_ref basename
    batch_size: int = 8

    def tag(self) -> str:
        return self.name or filename_tag(self.model_ref)


@dataclass
class ExtractionResult:
    jemb_paths: list
    alignment_path: Path
    layers: tuple
    n_ok: int
    n_removed: int
    removed_ids: list = field(default_factory=list)


def filename_tag(model_ref) -> str:
    tag = str(model_ref).rstrip("/").split("/")[-1]
    if not tag:
        raise ExtractionError(f"cannot derive a file tag from {model_ref!r}")
    return tag


def load_encoder(model_ref):
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_ref)
    model = AutoModel.from_pretrained(model_ref)
    model.eval()
    return tokenizer, model


def resolve_layers(layers, depth: int) -> tuple:
    """Normalize the layer list; layer 0 is always present."""
    if not layers:
        layers = range(0, depth + 1, DEFAULT_LAYER_STRIDE)
    resolved = sorted(set(int(layer) for layer in layers) | {0})
    for layer in resolved:
        if layer < 0 or layer > depth:
            raise ExtractionError(f"layer {layer} outside [0, {depth}]")
    return tuple(resolved)


def special_wrapping(tokenizer):
    prefix = [] if tokenizer.cls_token_id is None else [tokenizer.cls_token_id]
    suffix = [] if tokenizer.sep_token_id is None else [tokenizer.sep_token_id]
    return prefix, suffix


def _batches(items, size):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def run_extraction(job: ExtractionJob, tokenizer=None, model=None) -> ExtractionResult:
    if job.batch_size < 1:
        raise ExtractionError(f"batch size must be >= 1, got {job.batch_size}")
    if tokenizer is None or model is None:
        tokenizer, model = load_encoder(job.model_ref)
    depth = int(model.config.num_hidden_layers)
    layers = resolve_layers(job.layers, depth)
    max_positions = int(getattr(model.config, "max_position_embeddings", 1 << 30))
    prefix, suffix = special_wrapping(tokenizer)
    pad_id = tokenizer.pad_token_id
    pad_id = 0 if pad_id is None else pad_id

    corpus = read_corpus(job.corpus)
    alignments = [
        align_sentence(tokenizer, s, max_positions, len(prefix) + len(suffix))
        for s in corpus
    ]
    kept = [a for a in alignments if a.status == "ok"]
    removed = [a for a in alignments if a.status != "ok"]
    for record in removed:
        logger.warning("removed %s: %s", record.sent_id, record.reason)

    per_layer = {layer: {} for layer in layers}
    with torch.no_grad():
        for batch in _batches(kept, job.batch_size):
            seqs = [prefix + list(a.input_ids) + suffix for a in batch]
            width = max(len(s) for s in seqs)
            input_ids = torch.full((len(seqs), width), pad_id, dtype=torch.long)
            mask = torch.zeros((len(seqs), width), dtype=torch.long)
            for row, seq in enumerate(seqs):
                input_ids[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
                mask[row, : len(seq)] = 1
            output = model(
                input_ids=input_ids, attention_mask=mask, output_hidden_states=True
            )
            for row, record in enumerate(batch):
                start = len(prefix)
                stop = start + len(record.input_ids)
                for layer in layers:
                    per_layer[layer][record.sent_id] = (
                        output.hidden_states[layer][row, start:stop]
                        .to(torch.float32)
                        .numpy()
                        .copy()
                    )

    out_dir = Path(job.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = job.tag()
    dim = int(model.config.hidden_size)
    jemb_paths = []
    for layer in layers:
        path = out_dir / f"{tag}.layer{layer}.{job.split}.jemb"
        write_jemb(path, model_id=tag, layer=layer, dim=dim, split=job.split,
                   sentences=per_layer[layer])
        jemb_paths.append(path)
    alignment_path = out_dir / f"{tag}.align.{job.split}.jsonl"
    write_alignment_jsonl(alignment_path, alignments)
    return ExtractionResult(
        jemb_paths=jemb_paths,
        alignment_path=alignment_path,
        layers=layers,
        n_ok=len(kept),
        n_removed=len(removed),
        removed_ids=[a.sent_id for a in removed],
    )


def position_matrix(model) -> torch.Tensor:
    embeddings = getattr(model, "embeddings", None)
    table = getattr(embeddings, "position_embeddings", None)
    if table is None:
        table = getattr(model, "wpe", None)
    if table is None or not hasattr(table, "weight"):
        raise ExtractionError("model has no absolute position embedding matrix")
    return table.weight


def export_position_table(model, tag: str, output_dir) -> Path:
    """Copy the learned absolute-position rows into a one-sentence JEMB."""
    weight = position_matrix(model).detach().to(torch.float32).numpy()
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{tag}.positions.jemb"
    write_jemb(
        path,
        model_id=tag,
        layer=0,
        dim=int(weight.shape[1]),
        split="",
        sentences={POSITION_SENTENCE_ID: weight},
    )
    return path
