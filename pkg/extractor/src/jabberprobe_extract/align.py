"""Per-word subword tokenization and UD-token alignment.

Every UD token is tokenized on its own, so word boundaries survive any
subword scheme and each token owns a contiguous [start, end) span of
subword rows. Byte-level BPE tokenizers mark word starts with a leading
space, so non-initial words get one prepended before tokenizing.

Words the tokenizer maps to zero pieces (stripped control or format
characters, for instance) are fused with their left neighbour, or with
the first following word when they open the sentence; every fusion is
recorded as a 1-based merge group. Sentences that fit no pieces at all,
or exceed the encoder's position budget, are marked removed.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class SentenceAlignment:
    sent_id: str
    status: str  # "ok" | "removed"
    token_map: tuple = ()
    merges: tuple = ()
    reason: str = ""
    input_ids: tuple = ()


def is_byte_level(tokenizer) -> bool:
    """True when the scheme encodes a leading space as a word-start marker."""
    plain = tuple(tokenizer("a", add_special_tokens=False)["input_ids"])
    spaced = tuple(tokenizer(" a", add_special_tokens=False)["input_ids"])
    return spaced != plain


def tokenize_words(tokenizer, forms) -> list:
    """One id list per word, specials never included."""
    byte_level = is_byte_level(tokenizer)
    pieces = []
    for i, form in enumerate(forms):
        text = " " + form if byte_level and i > 0 else form
        pieces.append(tuple(tokenizer(text, add_special_tokens=False)["input_ids"]))
    return pieces


def align_sentence(tokenizer, sentence, max_positions: int, n_specials: int) -> SentenceAlignment:
    per_word = tokenize_words(tokenizer, sentence.forms)

    groups = []  # contiguous 1-based word-index groups
    pieces = []  # subword ids per group
    for index, word_pieces in enumerate(per_word, start=1):
        if word_pieces or not groups:
            groups.append([index])
            pieces.append(list(word_pieces))
        else:
            groups[-1].append(index)
    # an empty opening group can only fuse rightward
    while len(groups) > 1 and not pieces[0]:
        groups[1] = groups[0] + groups[1]
        groups.pop(0)
        pieces.pop(0)

    total = sum(len(p) for p in pieces)
    if total == 0:
        return SentenceAlignment(
            sentence.sent_id, "removed", reason="tokenizer produced no subwords"
        )
    if total + n_specials > max_positions:
        return SentenceAlignment(
            sentence.sent_id,
            "removed",
            reason=(
                f"{total} subwords + {n_specials} specials exceed "
                f"{max_positions} positions"
            ),
        )

    token_map = []
    start = 0
    for group_pieces in pieces:
        token_map.append((start, start + len(group_pieces)))
        start += len(group_pieces)
    return SentenceAlignment(
        sent_id=sentence.sent_id,
        status="ok",
        token_map=tuple(token_map),
        merges=tuple(tuple(g) for g in groups if len(g) > 1),
        input_ids=tuple(i for p in pieces for i in p),
    )
