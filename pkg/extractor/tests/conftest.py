import json
import pathlib
import random

import pytest
import torch
from transformers import (
    AutoModel,
    BertConfig,
    BertModel,
    BertTokenizer,
    GPT2Config,
    GPT2Model,
    GPT2Tokenizer,
)
from transformers.convert_slow_tokenizer import bytes_to_unicode

BERT_MAX_POSITIONS = 40
WORDS = [
    "the", "and", "did", "tove", "wabe", "mimsy", "rath", "gyre",
    "gimble", "brillig", "slithy", "cat", "dog", "sun",
]


def write_corpus(path, sentences):
    """sentences: [(sent_id, forms)]; heads form a left-branching chain."""
    lines = []
    for sent_id, forms in sentences:
        lines.append(f"# sent_id = {sent_id}")
        for i, form in enumerate(forms, start=1):
            head = i - 1
            deprel = "root" if head == 0 else "dep"
            lines.append(f"{i}\t{form}\t{form}\tX\t_\t_\t{head}\t{deprel}\t_\t_")
        lines.append("")
    pathlib.Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return pathlib.Path(path)


@pytest.fixture(scope="session")
def tiny_bert_dir(tmp_path_factory):
    """A 24-layer randomly initialised encoder with a character WordPiece vocab."""
    root = tmp_path_factory.mktemp("ckpt") / "tiny-bert"
    root.mkdir()
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += list("abcdefghijklmnopqrstuvwxyz")
    vocab += ["##" + c for c in "abcdefghijklmnopqrstuvwxyz"]
    vocab += ["the", "and", "did", ",", "."]
    (root / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(root / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(str(root))
    torch.manual_seed(7)
    model = BertModel(
        BertConfig(
            vocab_size=len(vocab),
            hidden_size=16,
            num_hidden_layers=24,
            num_attention_heads=2,
            intermediate_size=32,
            max_position_embeddings=BERT_MAX_POSITIONS,
        )
    )
    model.save_pretrained(str(root))
    return root


@pytest.fixture(scope="session")
def tiny_gpt2_dir(tmp_path_factory):
    """A 4-layer byte-level BPE decoder with no merges and no special wrapping."""
    root = tmp_path_factory.mktemp("ckpt") / "tiny-gpt2"
    root.mkdir()
    units = list(bytes_to_unicode().values())
    vocab = {unit: i for i, unit in enumerate(units)}
    vocab["<|endoftext|>"] = len(vocab)
    (root / "vocab.json").write_text(json.dumps(vocab), encoding="utf-8")
    (root / "merges.txt").write_text("#version: 0.2\n", encoding="utf-8")
    tokenizer = GPT2Tokenizer(str(root / "vocab.json"), str(root / "merges.txt"))
    tokenizer.save_pretrained(str(root))
    torch.manual_seed(11)
    model = GPT2Model(
        GPT2Config(
            vocab_size=len(vocab),
            n_embd=16,
            n_layer=4,
            n_head=2,
            n_positions=48,
            bos_token_id=len(vocab) - 1,
            eos_token_id=len(vocab) - 1,
        )
    )
    model.save_pretrained(str(root))
    return root


@pytest.fixture(scope="session")
def bert_tokenizer(tiny_bert_dir):
    return BertTokenizer.from_pretrained(str(tiny_bert_dir))


@pytest.fixture(scope="session")
def bert_model(tiny_bert_dir):
    return AutoModel.from_pretrained(str(tiny_bert_dir)).eval()


@pytest.fixture(scope="session")
def gpt2_tokenizer(tiny_gpt2_dir):
    return GPT2Tokenizer.from_pretrained(str(tiny_gpt2_dir))


@pytest.fixture(scope="session")
def gpt2_model(tiny_gpt2_dir):
    return AutoModel.from_pretrained(str(tiny_gpt2_dir)).eval()


@pytest.fixture(scope="session")
def corpus_50(tmp_path_factory):
    rng = random.Random(5)
    sentences = []
    for i in range(50):
        length = rng.randint(3, 8)
        forms = [rng.choice(WORDS) for _ in range(length)]
        sentences.append((f"fix-{i:03d}", forms))
    return write_corpus(tmp_path_factory.mktemp("corpus") / "fix.conllu", sentences)
