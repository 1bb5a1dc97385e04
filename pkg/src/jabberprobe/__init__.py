"""Syntactic-distance probing with structure-preserving pseudoword corpora.

The library parses CoNLL-U treebanks, generates Jabberwocky-style twins by
swapping content words for inflected pseudowords under matching morphology,
trains linear distance probes on token embeddings, and scores them with
tree-attachment and rank-correlation metrics against lexical-blind
baselines.
"""

from .baselines import MajorityModel, majority_fit, majority_predict, path_tree
from .config import ExperimentConfig, load_config
from .embeddings import (
    EmbeddingSet,
    PositionTable,
    compose_fast_pos,
    read_embedding_file,
    read_position_table,
    token_level_set,
    write_embedding_file,
    write_position_table,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    JabberprobeError,
    JembFormatError,
    LexiconError,
    NumericalError,
    ParseError,
    ReconciliationError,
)
from .lexicon import (
    Bundle,
    InflectedForm,
    PseudowordEntry,
    build_inflection_table,
    bundle_inventory,
    inflect,
    load_lexicon,
)
from .metrics import (
    UndirectedTree,
    count_labeled_directed,
    count_trees,
    dspr,
    enumerate_trees,
    mst_prim,
    spearman_rank,
    tree_distances,
    tree_from_pruefer,
    uuas,
)
from .probes import (
    ProbeParams,
    SearchSpace,
    TrainConfig,
    TrainHistory,
    evaluate_probe,
    load_probe_params,
    make_dataset,
    perceptron_loss,
    random_search,
    save_probe_params,
    squared_distance,
    structural_loss,
    train_probe,
)
from .substitute import (
    SubstitutionPlan,
    strip_substitutions,
    substitute_corpus,
)
from .treebank import (
    AlignmentRecord,
    DistanceMatrix,
    Sentence,
    Token,
    align_and_reconcile,
    corpus_stats,
    distance_matrix,
    parse_conllu,
    parse_conllu_file,
    serialize_conllu,
    write_conllu_file,
)

__version__ = "0.1.0"
