"""Deterministically regenerate the bundled data files.

Writes data/lexicon.tsv (pseudoword lemmas), data/fixtures/fig2.conllu (a
six-token hand fixture), and data/fixtures/mini_ewt.conllu (a 200-sentence
synthetic English treebank). Every output is a pure function of the seeds
below; a test regenerates them and compares bytes against the committed
copies.

Run from the repository root:  python tools/make_data.py
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from jabberprobe.lexicon import s_form, vowel_suffix_form  # noqa: E402
from jabberprobe.treebank import Sentence, Token, serialize_conllu  # noqa: E402

LEXICON_SEED = 714
CORPUS_SEED = 2741
N_SENTENCES = 200

# ---------------------------------------------------------------- lexicon

ONSETS = [
    "b", "bl", "br", "cl", "cr", "d", "dr", "f", "fl", "fr", "g", "gl",
    "gr", "h", "j", "k", "l", "m", "n", "p", "pl", "pr", "r", "s", "sc",
    "sk", "sl", "sm", "sn", "sp", "st", "str", "sw", "t", "tr", "th", "v",
    "w", "z", "sh", "ch",
]
NUCLEI = ["a", "e", "i", "o", "u", "ai", "ea", "ee", "oa", "oo", "ou"]
CODAS = [
    "b", "ck", "d", "f", "g", "k", "l", "lk", "lt", "m", "mp", "n", "nd",
    "ng", "nk", "nt", "p", "rd", "rk", "rm", "rn", "rt", "sk", "sp", "ss",
    "st", "t", "sh", "ch", "th",
]

# Hand entries; the rest are generated. The Carroll coinages that later
# entered dictionaries (chortle, galumph) are deliberately absent.
HAND_ENTRIES = [
    ("briticist", "NOUN"),
    ("povicate", "VERB"),
    ("tove", "NOUN"),
    ("rath", "NOUN"),
    ("gimble", "VERB"),
    ("brillig", "ADJ"),
    ("frabjous", "ADJ"),
    ("mimsy", "ADJ"),
    ("slithy", "ADJ"),
]

TARGET_COUNTS = {"NOUN": 120, "VERB": 110, "ADJ": 60, "ADV": 30}

# Real-word screen: frequent English words plus everything the fixture
# corpus uses. Random syllable strings rarely collide with rare words, and
# an occasional obscure collision is tolerable for a pseudoword lexicon.
COMMON_WORDS = set(
    """
a about after again all also an and any are around as at back bad be
because been before being below best better between big bird blue boat
body book both box boy bread bring but buy by call came can car carry cat
chair chance change child city class clean close cold come cool could
country cut dark day deep did do does dog done door down draw dream drink
drive drop dry each early eat end even ever every eye face fall family far
farm fast father feel feet few field find fine fire first fish five floor
fly food foot for found four free fresh friend from front full fun game
garden gave get girl give glass go going gold good got grass great green
ground group grow had hand hard has hat have he head hear heard heart
heavy hello help her here high hill him his hold home hope horse hot house
how ice idea if in into is it its jump just keep kind king know land large
last late laugh lead learn left let letter life light like line list
listen little live long look lost lot loud love low made make man many may
me mean men might milk mind miss money moon more morning most mother mouth
move much must my name near need never new next nice night nine no north
not note now of off often old on once one only open or other our out over
own page paint pair paper park part pass past pay people pick place plan
plant play please point pool poor press pull push put rain ran read red
rest ride right ring river road rock room round run sad said same sand saw
say school sea seat see seen send sent set seven shall she ship shoe shop
short should show side sing sit six sky sleep slow small smile snow so
soft some song soon sound south speak spring stand star start stay step
still stone stop store story street strong such summer sun sure swim table
take talk tall tell ten test than that the their them then there these
they thing think this those three time to today together told too took top
train tree try turn two under until up us use very visit walk want warm
was watch water way we week well went were wet what when where which while
white who why will wind window winter wish with word work world would
write year yes yet you young your
""".split()
)


def make_lemma(rng: random.Random, pos: str) -> str:
    syllables = rng.choice([1, 2, 2, 3]) if pos != "VERB" else rng.choice([1, 2, 2])
    parts = []
    for i in range(syllables):
        onset = rng.choice(ONSETS)
        nucleus = rng.choice(NUCLEI)
        closed = rng.random() < (0.85 if i == syllables - 1 else 0.45)
        parts.append(onset + nucleus + (rng.choice(CODAS) if closed else ""))
    lemma = "".join(parts)
    if pos == "VERB" and rng.random() < 0.25:
        lemma += rng.choice(["ate", "ify"])
    if pos in ("ADJ", "ADV") and rng.random() < 0.3 and not lemma.endswith("y"):
        lemma += "y"
    return lemma


def build_lexicon() -> str:
    rng = random.Random(LEXICON_SEED)
    entries = list(HAND_ENTRIES)
    taken = {lemma for lemma, _ in entries}
    for pos in ("NOUN", "VERB", "ADJ", "ADV"):
        need = TARGET_COUNTS[pos]
        made = 0
        while made < need:
            lemma = make_lemma(rng, pos)
            if not (3 <= len(lemma) <= 12):
                continue
            if lemma in COMMON_WORDS or lemma in taken or lemma in FIXTURE_WORDS:
                continue
            taken.add(lemma)
            entries.append((lemma, pos))
            made += 1
    lines = ["lemma\tpos"]
    for lemma, pos in sorted(entries, key=lambda e: (e[1], e[0])):
        lines.append(f"{lemma}\t{pos}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- fixtures

FIG2_CONLLU = """\
# sent_id = fig2
# text = I enjoyed your presentations very much
1\tI\tI\tPRON\tPRP\tCase=Nom|Number=Sing|Person=1|PronType=Prs\t2\tnsubj\t_\t_
2\tenjoyed\tenjoy\tVERB\tVBD\tMood=Ind|Tense=Past|VerbForm=Fin\t0\troot\t_\t_
3\tyour\tyour\tPRON\tPRP$\tPerson=2|Poss=Yes|PronType=Prs\t4\tnmod:poss\t_\t_
4\tpresentations\tpresentation\tNOUN\tNNS\tNumber=Plur\t2\tobj\t_\t_
5\tvery\tvery\tADV\tRB\t_\t6\tadvmod\t_\t_
6\tmuch\tmuch\tADV\tRB\t_\t2\tadvmod\t_\t_
"""

NOUNS = [
    "dog", "cat", "bird", "tree", "house", "garden", "river", "story",
    "letter", "window", "teacher", "student", "mountain", "village",
    "painter", "basket", "flower", "answer", "morning", "ticket", "market",
    "farmer", "doctor", "singer", "castle", "forest", "rabbit", "turtle",
]
VERBS = [
    "walk", "talk", "jump", "look", "call", "help", "open", "visit",
    "follow", "watch", "answer", "play", "start", "turn", "clean", "paint",
    "plant", "push", "pull", "lift", "carry", "climb", "point", "count",
    "wait", "laugh", "wander", "gather", "borrow", "deliver",
]
ADJS = [
    "big", "small", "quick", "tall", "short", "bright", "dark", "warm",
    "cold", "clean", "quiet", "narrow", "simple", "calm", "neat", "plain",
    "smooth", "steep", "sweet", "fresh", "green", "loud", "soft", "deep",
]
ADVS_PLAIN = [
    "slowly", "quickly", "quietly", "gently", "often", "carefully",
    "eagerly", "calmly", "suddenly", "together",
]
ADVS_GRADABLE = ["soon", "early", "fast", "hard", "near"]
DETS = [("the", "DT"), ("a", "DT"), ("this", "DT"), ("some", "DT"), ("every", "DT")]
ADPS = ["in", "on", "with", "under", "near", "behind", "beside"]
PRONS = [
    ("I", "I", "Case=Nom|Number=Sing|Person=1|PronType=Prs", False),
    ("we", "we", "Case=Nom|Number=Plur|Person=1|PronType=Prs", False),
    ("you", "you", "Case=Nom|Person=2|PronType=Prs", False),
    ("he", "he", "Case=Nom|Gender=Masc|Number=Sing|Person=3|PronType=Prs", True),
    ("she", "she", "Case=Nom|Gender=Fem|Number=Sing|Person=3|PronType=Prs", True),
    ("they", "they", "Case=Nom|Number=Plur|Person=3|PronType=Prs", False),
]

FIXTURE_WORDS = set(
    NOUNS + VERBS + ADJS + ADVS_PLAIN + ADVS_GRADABLE + ADPS
    + [d[0] for d in DETS] + [p[0] for p in PRONS]
    + ["and", "will", "can", "is", "are", "very", "much"]
)


class Node:
    """Syntax node; pre/post children linearize around the head."""

    __slots__ = ("form", "lemma", "upos", "xpos", "feats", "deprel", "pre", "post")

    def __init__(self, form, lemma, upos, xpos, feats, deprel):
        self.form = form
        self.lemma = lemma
        self.upos = upos
        self.xpos = xpos
        self.feats = feats
        self.deprel = deprel
        self.pre = []
        self.post = []


def parse_feats(feats_str: str) -> dict:
    if not feats_str:
        return {}
    return dict(pair.split("=", 1) for pair in feats_str.split("|"))


def make_noun(rng: random.Random, deprel: str) -> Node:
    lemma = rng.choice(NOUNS)
    if rng.random() < 0.4:
        return Node(s_form(lemma), lemma, "NOUN", "NNS", {"Number": "Plur"}, deprel)
    return Node(lemma, lemma, "NOUN", "NN", {"Number": "Sing"}, deprel)


def make_adj(rng: random.Random) -> Node:
    lemma = rng.choice(ADJS)
    roll = rng.random()
    if roll < 0.15:
        return Node(
            vowel_suffix_form(lemma, "er"), lemma, "ADJ", "JJR", {"Degree": "Cmp"}, "amod"
        )
    if roll < 0.25:
        return Node(
            vowel_suffix_form(lemma, "est"), lemma, "ADJ", "JJS", {"Degree": "Sup"}, "amod"
        )
    return Node(lemma, lemma, "ADJ", "JJ", {}, "amod")


def make_adv(rng: random.Random) -> Node:
    roll = rng.random()
    if roll < 0.2:
        lemma = rng.choice(ADVS_GRADABLE)
        if rng.random() < 0.5:
            return Node(
                vowel_suffix_form(lemma, "er"), lemma, "ADV", "RBR", {"Degree": "Cmp"}, "advmod"
            )
        return Node(
            vowel_suffix_form(lemma, "est"), lemma, "ADV", "RBS", {"Degree": "Sup"}, "advmod"
        )
    lemma = rng.choice(ADVS_PLAIN)
    node = Node(lemma, lemma, "ADV", "RB", {}, "advmod")
    if rng.random() < 0.2:
        node.pre.append(Node("very", "very", "ADV", "RB", {}, "advmod"))
    return node


def make_np(rng: random.Random, deprel: str, depth: int) -> Node:
    if rng.random() < 0.2:
        form, lemma, feats, _ = rng.choice(PRONS)
        return Node(form, lemma, "PRON", "PRP", parse_feats(feats), deprel)
    noun = make_noun(rng, deprel)
    if noun.feats["Number"] == "Sing" or rng.random() < 0.5:
        det, xpos = rng.choice(DETS)
        if noun.feats["Number"] == "Plur" and det in ("a", "this", "every"):
            det, xpos = "the", "DT"
        noun.pre.append(Node(det, det, "DET", xpos, {}, "det"))
    for _ in range(rng.choice([0, 0, 0, 1, 1, 2])):
        noun.pre.append(make_adj(rng))
    if depth > 0 and rng.random() < 0.3:
        noun.post.append(make_pp(rng, "nmod", depth - 1))
    return noun


def make_pp(rng: random.Random, deprel: str, depth: int) -> Node:
    adp = rng.choice(ADPS)
    np = make_np(rng, deprel, depth)
    np.pre.insert(0, Node(adp, adp, "ADP", "IN", {}, "case"))
    return np


def subject_is_third_singular(subject: Node) -> bool:
    if subject.upos == "NOUN":
        return subject.feats["Number"] == "Sing"
    return bool(subject.feats.get("Person") == "3" and subject.feats.get("Number") == "Sing")


def make_clause(rng: random.Random, deprel: str, depth: int) -> Node:
    subject = make_np(rng, "nsubj", depth)
    lemma = rng.choice(VERBS)
    mode = rng.choice(["pres", "pres", "past", "past", "aux_inf", "aux_part"])
    if mode == "pres":
        if subject_is_third_singular(subject):
            verb = Node(
                s_form(lemma), lemma, "VERB", "VBZ",
                parse_feats("Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"),
                deprel,
            )
        else:
            verb = Node(
                lemma, lemma, "VERB", "VBP",
                parse_feats("Mood=Ind|Tense=Pres|VerbForm=Fin"), deprel,
            )
    elif mode == "past":
        verb = Node(
            vowel_suffix_form(lemma, "ed"), lemma, "VERB", "VBD",
            parse_feats("Mood=Ind|Tense=Past|VerbForm=Fin"), deprel,
        )
    elif mode == "aux_inf":
        verb = Node(lemma, lemma, "VERB", "VB", {"VerbForm": "Inf"}, deprel)
        aux = rng.choice(["will", "can"])
        verb.pre.append(Node(aux, aux, "AUX", "MD", {"VerbForm": "Fin"}, "aux"))
    else:
        verb = Node(
            vowel_suffix_form(lemma, "ing"), lemma, "VERB", "VBG",
            parse_feats("Tense=Pres|VerbForm=Part"), deprel,
        )
        if subject_is_third_singular(subject):
            aux = Node(
                "is", "be", "AUX", "VBZ",
                parse_feats("Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"),
                "aux",
            )
        else:
            aux = Node(
                "are", "be", "AUX", "VBP",
                parse_feats("Mood=Ind|Tense=Pres|VerbForm=Fin"), "aux",
            )
        verb.pre.append(aux)
    verb.pre.insert(0, subject)
    if rng.random() < 0.7:
        verb.post.append(make_np(rng, "obj", depth))
    if rng.random() < 0.35:
        verb.post.append(make_pp(rng, "obl", depth))
    if rng.random() < 0.35:
        adv = make_adv(rng)
        if rng.random() < 0.3:
            verb.pre.append(adv)
        else:
            verb.post.append(adv)
    return verb


def make_sentence_tree(rng: random.Random, n_clauses: int) -> Node:
    root = make_clause(rng, "root", depth=2)
    head = root
    for _ in range(n_clauses - 1):
        conj = make_clause(rng, "conj", depth=1)
        conj.pre.insert(0, Node("and", "and", "CCONJ", "CC", {}, "cc"))
        head.post.append(conj)
        head = conj
    root.post.append(Node(".", ".", "PUNCT", ".", {}, "punct"))
    return root


def flatten(node: Node, parent_of: dict, order: list) -> None:
    for child in node.pre:
        parent_of[id(child)] = node
        flatten(child, parent_of, order)
    order.append(node)
    for child in node.post:
        parent_of[id(child)] = node
        flatten(child, parent_of, order)


def tree_to_sentence(root: Node, sent_id: str) -> Sentence:
    parent_of = {id(root): None}
    order: list = []
    flatten(root, parent_of, order)
    position = {id(node): i + 1 for i, node in enumerate(order)}
    tokens = []
    for i, node in enumerate(order):
        form = node.form
        if i == 0:
            form = form[0].upper() + form[1:]
        parent = parent_of[id(node)]
        tokens.append(
            Token(
                index=i + 1,
                form=form,
                lemma=node.lemma,
                upos=node.upos,
                xpos=node.xpos,
                feats=dict(sorted(node.feats.items())),
                head=0 if parent is None else position[id(parent)],
                deprel=node.deprel,
            )
        )
    text = " ".join(token.form for token in tokens)
    sentence = Sentence(
        sent_id=sent_id,
        tokens=tuple(tokens),
        comments=(f"# sent_id = {sent_id}", f"# text = {text}"),
    )
    sentence.validate()
    return sentence


def build_corpus() -> str:
    rng = random.Random(CORPUS_SEED)
    sentences = []
    for i in range(N_SENTENCES):
        # A few multi-clause chains push past 40 tokens to exercise the
        # long-sentence fallbacks downstream.
        if i % 67 == 10:
            n_clauses = 7
        else:
            n_clauses = rng.choice([1, 1, 1, 1, 2, 2, 3])
        sentences.append(tree_to_sentence(make_sentence_tree(rng, n_clauses), f"mini-{i:04d}"))
    return serialize_conllu(sentences)


def main() -> None:
    data_dir = ROOT / "data"
    fixtures = data_dir / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    outputs = {
        data_dir / "lexicon.tsv": build_lexicon(),
        fixtures / "fig2.conllu": FIG2_CONLLU,
        fixtures / "mini_ewt.conllu": build_corpus(),
    }
    for path, text in outputs.items():
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path} ({len(text)} bytes)")


if __name__ == "__main__":
    main()
