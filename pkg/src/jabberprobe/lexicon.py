"""Pseudoword lexicon and regular English inflection.

Loads (lemma, pos) pseudoword entries and generates every regular inflected
form together with its morphological feature bundle, using a fixed table of
English spelling rules so the output is byte-stable across runs.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable

from .errors import LexiconError

logger = logging.getLogger(__name__)

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV")
VOWELS = "aeiou"
_LEMMA_RE = re.compile(r"^[a-z]+$")


@dataclass(frozen=True)
class Bundle:
    """A licensed morphological slot: POS tags it applies to plus the exact
    feature set a token must carry."""

    name: str
    upos_tags: tuple
    feats: tuple  # sorted (key, value) pairs

    @property
    def feat_dict(self) -> dict:
        return dict(self.feats)

    def feats_str(self) -> str:
        if not self.feats:
            return "_"
        return "|".join(f"{k}={v}" for k, v in self.feats)

    def matches_token(self, upos: str, feats: dict) -> bool:
        if upos not in self.upos_tags:
            return False
        return all(feats.get(k) == v for k, v in self.feats)


def _bundle(name, upos_tags, **feats):
    return Bundle(
        name=name,
        upos_tags=tuple(upos_tags),
        feats=tuple(sorted(feats.items())),
    )


NOUN_SING = _bundle("noun-sing", ["NOUN"], Number="Sing")
NOUN_PLUR = _bundle("noun-plur", ["NOUN"], Number="Plur")
VERB_INF = _bundle("verb-inf", ["VERB"], VerbForm="Inf")
VERB_3SG_PRES = _bundle(
    "verb-3sg-pres",
    ["VERB"],
    Mood="Ind",
    Number="Sing",
    Person="3",
    Tense="Pres",
    VerbForm="Fin",
)
VERB_PRES = _bundle("verb-pres", ["VERB"], Mood="Ind", Tense="Pres", VerbForm="Fin")
VERB_PART_PRES = _bundle("verb-part-pres", ["VERB"], Tense="Pres", VerbForm="Part")
DEGREE_CMP = _bundle("degree-cmp", ["ADJ", "ADV"], Degree="Cmp")
DEGREE_SUP = _bundle("degree-sup", ["ADJ", "ADV"], Degree="Sup")
DEGREE_PLAIN = _bundle("degree-plain", ["ADJ", "ADV"])
# Off by default: regular -ed past, enabled by flag for corpora whose finite
# past verbs should be substituted too.
VERB_PAST = _bundle("verb-past", ["VERB"], Mood="Ind", Tense="Past", VerbForm="Fin")

_CANONICAL_BUNDLES = (
    NOUN_SING,
    NOUN_PLUR,
    VERB_INF,
    VERB_3SG_PRES,
    VERB_PRES,
    VERB_PART_PRES,
    DEGREE_CMP,
    DEGREE_SUP,
    DEGREE_PLAIN,
)


def bundle_inventory(include_past: bool = False) -> list:
    """The licensed feature bundles, canonically ordered."""
    bundles = list(_CANONICAL_BUNDLES)
    if include_past:
        bundles.append(VERB_PAST)
    return bundles


def bundle_by_name(name: str) -> Bundle:
    for bundle in bundle_inventory(include_past=True):
        if bundle.name == name:
            return bundle
    raise LexiconError(f"unknown bundle name {name!r}")


def _bundle_for(upos: str, feats_str: str) -> Bundle:
    for bundle in bundle_inventory(include_past=True):
        if upos in bundle.upos_tags and bundle.feats_str() == feats_str:
            return bundle
    raise LexiconError(f"no licensed bundle for {upos} {feats_str!r}")


@dataclass(frozen=True)
class PseudowordEntry:
    lemma: str
    pos: str


@dataclass(frozen=True)
class InflectedForm:
    surface: str
    lemma: str
    upos: str
    bundle: Bundle


def load_lexicon(path) -> list:
    """Read a lemma<TAB>pos TSV into deduplicated entries."""
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line_no == 1 and line == "lemma\tpos":
                continue  # optional header
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path} line {line_no}: expected 2 columns")
            lemma, pos = parts
            if pos not in POS_TAGS:
                raise LexiconError(f"{path} line {line_no}: unknown pos {pos!r}")
            if not _LEMMA_RE.match(lemma):
                raise LexiconError(
                    f"{path} line {line_no}: lemma {lemma!r} is not lowercase alphabetic"
                )
            key = (lemma, pos)
            if key in seen:
                logger.warning("%s line %d: duplicate entry %s, skipping", path, line_no, key)
                continue
            seen.add(key)
            entries.append(PseudowordEntry(lemma=lemma, pos=pos))
    return entries


def _ends_sibilant(stem: str) -> bool:
    return stem.endswith(("s", "x", "z", "ch", "sh"))


def _ends_consonant_y(stem: str) -> bool:
    return len(stem) >= 2 and stem.endswith("y") and stem[-2] not in VOWELS


def _is_cvc_monosyllable(stem: str) -> bool:
    """One vowel run, ending consonant-vowel-consonant, last consonant not w/x/y."""
    if len(stem) < 3:
        return False
    if stem[-1] in VOWELS + "wxy" or stem[-2] not in VOWELS or stem[-3] in VOWELS:
        return False
    runs = len(re.findall(f"[{VOWELS}]+", stem))
    return runs == 1


def s_form(stem: str) -> str:
    """Noun plural / verb third-singular: -s with -es and -ies adjustments."""
    if _ends_sibilant(stem):
        return stem + "es"
    if _ends_consonant_y(stem):
        return stem[:-1] + "ies"
    return stem + "s"


def vowel_suffix_form(stem: str, suffix: str) -> str:
    """Attach -ing/-ed/-er/-est with y->i, silent-e drop, and CVC doubling."""
    if suffix not in ("ing", "ed", "er", "est"):
        raise ValueError(f"unsupported suffix {suffix!r}")
    if suffix != "ing" and _ends_consonant_y(stem):
        return stem[:-1] + "i" + suffix
    if stem.endswith("e") and not stem.endswith("ee"):
        return stem[:-1] + suffix
    if _is_cvc_monosyllable(stem):
        return stem + stem[-1] + suffix
    return stem + suffix


def inflect(entry: PseudowordEntry, include_past: bool = False) -> list:
    """All regular inflected forms of a pseudoword entry, order-stable."""
    lemma = entry.lemma
    if entry.pos == "NOUN":
        forms = [(lemma, NOUN_SING), (s_form(lemma), NOUN_PLUR)]
    elif entry.pos == "VERB":
        forms = [
            (lemma, VERB_INF),
            (s_form(lemma), VERB_3SG_PRES),
            (lemma, VERB_PRES),
            (vowel_suffix_form(lemma, "ing"), VERB_PART_PRES),
        ]
        if include_past:
            forms.append((vowel_suffix_form(lemma, "ed"), VERB_PAST))
    elif entry.pos in ("ADJ", "ADV"):
        forms = [
            (lemma, DEGREE_PLAIN),
            (vowel_suffix_form(lemma, "er"), DEGREE_CMP),
            (vowel_suffix_form(lemma, "est"), DEGREE_SUP),
        ]
    else:
        raise LexiconError(f"unknown pos {entry.pos!r}")
    return [
        InflectedForm(surface=surface, lemma=lemma, upos=entry.pos, bundle=bundle)
        for surface, bundle in forms
    ]


def build_inflection_table(entries: Iterable[PseudowordEntry], include_past: bool = False) -> list:
    table = []
    for entry in entries:
        table.extend(inflect(entry, include_past=include_past))
    return table


def write_inflection_table(table: Iterable[InflectedForm], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("surface\tlemma\tupos\tbundle\n")
        for form in table:
            handle.write(
                f"{form.surface}\t{form.lemma}\t{form.upos}\t{form.bundle.feats_str()}\n"
            )


def read_inflection_table(path) -> list:
    table = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line == "surface\tlemma\tupos\tbundle":
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise LexiconError(f"{path} line {line_no}: expected 4 columns")
            surface, lemma, upos, feats_str = parts
            table.append(
                InflectedForm(
                    surface=surface,
                    lemma=lemma,
                    upos=upos,
                    bundle=_bundle_for(upos, feats_str),
                )
            )
    return table
