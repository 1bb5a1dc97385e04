"""Jabberwocky corpus construction.

Replaces content words with POS/feature-matched pseudoword inflections,
leaving trees, indices, and every other column untouched. The pass is
sequential and seeded, so output is a pure function of (corpus order, plan).
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .errors import ConfigError
from .lexicon import Bundle, InflectedForm, bundle_inventory
from .treebank import Sentence, Token, sentence_text

logger = logging.getLogger(__name__)

DEFAULT_PROVENANCE_KEY = "OrigForm"


def _with_fresh_text(sentence: Sentence) -> Sentence:
    """Regenerate any text comment so it matches the current token forms."""
    comments = tuple(
        f"# text = {sentence_text(sentence)}"
        if comment[1:].strip().startswith(("text =", "text="))
        else comment
        for comment in sentence.comments
    )
    if comments == sentence.comments:
        return sentence
    return replace(sentence, comments=comments)


@dataclass(frozen=True)
class SubstitutionPlan:
    seed: int
    bundles: tuple = tuple(bundle_inventory())
    provenance_key: str = DEFAULT_PROVENANCE_KEY
    substitution_probability: float = 1.0

    def lemma_key(self) -> str:
        base = self.provenance_key
        if base.endswith("Form"):
            base = base[: -len("Form")]
        return base + "Lemma"


@dataclass(frozen=True)
class SubstitutionEvent:
    sent_id: str
    token_index: int
    original: str
    replacement: str
    bundle: Bundle


def substitutable_slot(token: Token, bundles: Iterable[Bundle]) -> Optional[Bundle]:
    """The most specific enabled bundle licensed by the token's POS and feats."""
    matches = [b for b in bundles if b.matches_token(token.upos, token.feats)]
    if not matches:
        return None
    matches.sort(key=lambda b: (-len(b.feats), b.name))
    best = matches[0]
    if len(matches) > 1 and len(matches[1].feats) == len(best.feats):
        raise ConfigError(
            f"ambiguous bundles {best.name} and {matches[1].name} "
            f"for token {token.form!r}"
        )
    return best


def _mirror_casing(original: str, surface: str) -> str:
    if original.isupper() and len(original) > 1:
        return surface.upper()
    if original[:1].isupper():
        return surface[:1].upper() + surface[1:]
    return surface


def _build_pools(table: Iterable[InflectedForm], plan: SubstitutionPlan) -> dict:
    pools: dict = {}
    enabled = set(plan.bundles)
    for form in table:
        if form.bundle in enabled:
            pools.setdefault((form.upos, form.bundle), []).append(form)
    # Row order of the table must not matter.
    for pool in pools.values():
        pool.sort(key=lambda f: (f.surface, f.lemma))
    for bundle in plan.bundles:
        if not any(key[1] == bundle for key in pools):
            raise ConfigError(
                f"enabled bundle {bundle.name} has no inflected forms available"
            )
    return pools


def substitute_corpus(
    corpus: Iterable[Sentence],
    table: Iterable[InflectedForm],
    plan: SubstitutionPlan,
):
    """Produce the pseudoword twin of a corpus.

    Returns (sentences, events). Every replaced token keeps its original
    form and lemma in misc under the plan's provenance keys, so the
    substitution is losslessly reversible.
    """
    pools = _build_pools(table, plan)
    rng = random.Random(plan.seed)
    out_sentences = []
    events = []
    for sentence in corpus:
        tokens = []
        for token in sentence.tokens:
            bundle = substitutable_slot(token, plan.bundles)
            pool = pools.get((token.upos, bundle)) if bundle is not None else None
            if bundle is None or not pool:
                tokens.append(token)
                continue
            if plan.substitution_probability < 1.0:
                if rng.random() >= plan.substitution_probability:
                    tokens.append(token)
                    continue
            pick = pool[rng.randrange(len(pool))]
            surface = _mirror_casing(token.form, pick.surface)
            misc = dict(token.misc)
            misc[plan.provenance_key] = token.form
            misc[plan.lemma_key()] = token.lemma
            tokens.append(replace(token, form=surface, lemma=pick.lemma, misc=misc))
            events.append(
                SubstitutionEvent(
                    sent_id=sentence.sent_id,
                    token_index=token.index,
                    original=token.form,
                    replacement=surface,
                    bundle=bundle,
                )
            )
        out_sentences.append(
            _with_fresh_text(
                Sentence(
                    sent_id=sentence.sent_id,
                    tokens=tuple(tokens),
                    comments=sentence.comments,
                )
            )
        )
    return out_sentences, events


def strip_substitutions(
    corpus: Iterable[Sentence], provenance_key: str = DEFAULT_PROVENANCE_KEY
) -> list:
    """Invert substitute_corpus using the provenance annotations."""
    plan = SubstitutionPlan(seed=0, provenance_key=provenance_key)
    lemma_key = plan.lemma_key()
    restored = []
    for sentence in corpus:
        tokens = []
        for token in sentence.tokens:
            if provenance_key in token.misc:
                misc = {
                    k: v
                    for k, v in token.misc.items()
                    if k not in (provenance_key, lemma_key)
                }
                tokens.append(
                    replace(
                        token,
                        form=token.misc[provenance_key],
                        lemma=token.misc.get(lemma_key, token.lemma),
                        misc=misc,
                    )
                )
            else:
                tokens.append(token)
        restored.append(
            _with_fresh_text(
                Sentence(
                    sent_id=sentence.sent_id,
                    tokens=tuple(tokens),
                    comments=sentence.comments,
                )
            )
        )
    return restored


def write_substitution_log(events: Iterable[SubstitutionEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("sent_id\ttoken_index\toriginal\treplacement\tbundle\n")
        for event in events:
            handle.write(
                f"{event.sent_id}\t{event.token_index}\t{event.original}"
                f"\t{event.replacement}\t{event.bundle.name}\n"
            )
