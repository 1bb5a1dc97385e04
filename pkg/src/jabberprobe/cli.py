"""Command-line entry points.

Subcommands cover the whole experiment loop: generate a pseudoword corpus,
train or search probes per (model, layer, probe kind), evaluate probes and
lexical-blind baselines into a CSV plus derived figures, and re-render
figures from an existing CSV. A flat TOML config drives everything; a few
flags override it. Exit codes: 0 success, 2 configuration error, 3 data
error, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .baselines import majority_fit, majority_predict, path_tree
from .config import ExperimentConfig, load_config
from .embeddings import read_embedding_file, token_level_set
from .errors import ConfigError, DataError, NumericalError
from .lexicon import build_inflection_table, bundle_inventory, load_lexicon
from .metrics import UndirectedTree, dspr, tree_distances, uuas
from .probes import (
    evaluate_probe,
    load_probe_params,
    make_dataset,
    probe_sidecar,
    random_search,
    save_probe_params,
    train_probe,
)
from .report import MetricRow, read_metrics_csv, render_report, write_metrics_csv
from .substitute import SubstitutionPlan, substitute_corpus, write_substitution_log
from .treebank import (
    AlignmentRecord,
    align_and_reconcile,
    distance_matrix,
    parse_conllu_file,
    read_alignment_jsonl,
    write_conllu_file,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

logger = logging.getLogger(__name__)

EXTRACTOR_CONTRACT = """\
Embedding extractor contract
============================
The trainer and evaluator consume these artifacts from an extractor run
over a CoNLL-U corpus with a pretrained encoder:

1. Embedding files, one per (model, layer, split), named
   {model}.layer{L}.{split}.jemb inside embeddings_dir. Layers are
   {0, 4, 8, ...} up to the encoder depth; layer 0 (the uncontextualised
   input embeddings) is mandatory. Binary layout, little-endian:
     magic "JEMB" | u32 version=1 | u32 metadata byte length |
     metadata JSON {"model": str, "layer": int, "dim": int, "split": str} |
     u32 sentence count | then per sentence:
       u16 sent-id byte length | sent-id UTF-8 | u32 n_rows |
       n_rows * dim float32 row-major matrix
   Rows must be finite, sentence ids unique and taken from the corpus.

2. Alignment records, one JSON object per line, in
   {model}.align.{split}.jsonl:
     {"sent_id": str, "status": "ok" | "removed",
      "token_map": [[start, end], ...],
      "merges": [[i, j, ...], ...],
      "reason": str}
   token_map holds one half-open subword span per final UD token, ordered
   and disjoint, jointly covering every matrix row; merges lists 1-based
   groups of UD tokens the tokenizer fused into one node; reason is set
   when status is "removed" (for example, sentences beyond the encoder's
   position limit). A removed sentence appears in no .jemb file. The
   token-level vector is the first subword row of its span.

3. Position table: the encoder's absolute-position embedding matrix as a
   single-sentence JEMB file whose only sentence id is "positions", one
   row per position.

Write outputs atomically (temp file + rename) and keep the corpus sentence
order.\
"""


def _workers_from_env() -> int:
    raw = os.environ.get("JABBERPROBE_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"JABBERPROBE_WORKERS must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"JABBERPROBE_WORKERS must be >= 1, got {value}")
    return value


def _run_jobs(jobs: list, fn) -> list:
    """Run jobs in a bounded thread pool; results keep submission order."""
    if not jobs:
        return []
    workers = min(_workers_from_env(), len(jobs))
    if workers == 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _out_dir(config: ExperimentConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jabberwocky_path(config: ExperimentConfig) -> Path:
    if config.jabberwocky_conllu is not None:
        return Path(config.jabberwocky_conllu)
    return Path(config.output_dir) / "jabberwocky.conllu"


def _reconcile_corpus(sentences: list, records: dict) -> list:
    out = []
    for sentence in sentences:
        record = records.get(sentence.sent_id)
        if record is None:
            record = AlignmentRecord.identity(sentence.sent_id, len(sentence))
        merged = align_and_reconcile(sentence, record)
        if merged is not None:
            out.append(merged)
    return out


def _load_dataset(
    config: ExperimentConfig, model: str, layer: int, split: str, corpus_path
) -> list:
    """Corpus + embedding join for one (model, layer, split).

    When an alignment file is present the embeddings are collapsed to token
    level and the gold trees reconciled with it; otherwise the embedding
    file is taken to be token-level already.
    """
    sentences = parse_conllu_file(corpus_path)
    path = Path(config.embeddings_dir) / f"{model}.layer{layer}.{split}.jemb"
    if not path.exists():
        raise ConfigError(f"embeddings_dir: missing embedding file {path}")
    embedding_set = read_embedding_file(path)
    align_path = Path(config.embeddings_dir) / f"{model}.align.{split}.jsonl"
    if align_path.exists():
        records = read_alignment_jsonl(align_path)
        embedding_set = token_level_set(embedding_set, records)
        sentences = _reconcile_corpus(sentences, records)
    data = make_dataset(sentences, embedding_set)
    if not data:
        raise DataError(f"no usable sentences joining {corpus_path} with {path}")
    return data


def _artifact_paths(out_dir: Path, stem: str):
    return (
        out_dir / f"{stem}.jprb",
        out_dir / f"{stem}.jprb.json",
        out_dir / f"{stem}.history.json",
    )


def _completed(params_path: Path, sidecar_path: Path) -> bool:
    """True when a verified artifact already exists; corrupt files refuse."""
    if not params_path.exists() and not sidecar_path.exists():
        return False
    if not (params_path.exists() and sidecar_path.exists()):
        raise DataError(
            f"partial artifact at {params_path}: params and sidecar must both exist"
        )
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"sidecar {sidecar_path} is not valid JSON: {exc}") from exc
    digest = hashlib.sha256(params_path.read_bytes()).hexdigest()
    if digest != sidecar.get("checksum_sha256"):
        raise DataError(
            f"checksum mismatch for {params_path}: refusing to skip, retrain "
            "after removing the corrupt artifact"
        )
    return True


def cmd_generate(config: ExperimentConfig, args) -> None:
    config.require_paths("lexicon", "test_conllu")
    entries = load_lexicon(config.lexicon)
    table = build_inflection_table(entries, include_past=config.include_past_bundle)
    corpus = parse_conllu_file(config.test_conllu)
    plan = SubstitutionPlan(
        seed=config.seed,
        bundles=tuple(bundle_inventory(config.include_past_bundle)),
        substitution_probability=config.substitution_probability,
    )
    sentences, events = substitute_corpus(corpus, table, plan)
    out_dir = _out_dir(config)
    out_path = _jabberwocky_path(config)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_conllu_file(sentences, out_path)
    log_path = out_dir / "substitutions.tsv"
    write_substitution_log(events, log_path)
    print(f"wrote {out_path} ({len(sentences)} sentences, {len(events)} substitutions)")
    print(f"wrote {log_path}")


def cmd_train(config: ExperimentConfig, args) -> None:
    config.require_paths("embeddings_dir", "train_conllu", "dev_conllu")
    out_dir = _out_dir(config)
    jobs = [
        (model, layer, kind)
        for model in config.models
        for layer in config.layers
        for kind in config.probes
    ]

    def run(job):
        model, layer, kind = job
        params_path, sidecar_path, history_path = _artifact_paths(
            out_dir, f"{model}.layer{layer}.{kind}"
        )
        if _completed(params_path, sidecar_path):
            return f"skipped {params_path.name} (already trained)"
        train_data = _load_dataset(config, model, layer, "train", config.train_conllu)
        dev_data = _load_dataset(config, model, layer, "dev", config.dev_conllu)
        cfg = config.train_config()
        params, history = train_probe(kind, train_data, dev_data, cfg)
        checksum = save_probe_params(params, params_path)
        sidecar_path.write_text(
            probe_sidecar(params, cfg, checksum, model, layer), encoding="utf-8"
        )
        history_path.write_text(history.to_json(), encoding="utf-8")
        return (
            f"trained {params_path.name} "
            f"(best dev loss {history.best_dev_loss:.6f} at step {history.best_step})"
        )

    for message in _run_jobs(jobs, run):
        print(message)


def cmd_search(config: ExperimentConfig, args) -> None:
    config.require_paths("embeddings_dir", "train_conllu", "dev_conllu")
    out_dir = _out_dir(config)
    jobs = [(model, kind) for model in config.models for kind in config.probes]

    def run(job):
        model, kind = job
        best_params_path, best_sidecar_path, _ = _artifact_paths(
            out_dir, f"{model}.{kind}.best"
        )
        if _completed(best_params_path, best_sidecar_path):
            return f"skipped {best_params_path.name} (search already complete)"
        data_by_layer = {
            layer: (
                _load_dataset(config, model, layer, "train", config.train_conllu),
                _load_dataset(config, model, layer, "dev", config.dev_conllu),
            )
            for layer in config.layers
        }
        result = random_search(
            kind,
            data_by_layer,
            space=config.search_space(),
            trials=config.search_trials,
            layers=config.layers,
            seed=config.seed,
            base=config.train_config(),
        )
        by_layer = {}
        for trial in result.trials:
            history_path = (
                out_dir / f"{model}.layer{trial.layer}.{kind}.trial{trial.trial}"
                ".history.json"
            )
            history_path.write_text(trial.history.to_json(), encoding="utf-8")
            best_for_layer = by_layer.get(trial.layer)
            if (
                best_for_layer is None
                or trial.history.best_dev_loss < best_for_layer.history.best_dev_loss
            ):
                by_layer[trial.layer] = trial
        for layer, trial in sorted(by_layer.items()):
            params_path, sidecar_path, _ = _artifact_paths(
                out_dir, f"{model}.layer{layer}.{kind}"
            )
            checksum = save_probe_params(trial.params, params_path)
            sidecar_path.write_text(
                probe_sidecar(trial.params, trial.config, checksum, model, layer),
                encoding="utf-8",
            )
        checksum = save_probe_params(result.best_params, best_params_path)
        best_sidecar_path.write_text(
            probe_sidecar(
                result.best_params, result.best_config, checksum, model,
                result.best_layer,
            ),
            encoding="utf-8",
        )
        return (
            f"searched {model} {kind}: best layer {result.best_layer}, "
            f"dev loss {result.best_dev_loss:.6f} "
            f"({len(result.trials)} trials)"
        )

    for message in _run_jobs(jobs, run):
        print(message)


def _baseline_rows(model, corpus, dataset: str, config: ExperimentConfig) -> list:
    scored = {"path": {"trees": [], "dists": []}, "majority": {"trees": [], "dists": []}}
    for sentence in corpus:
        n = len(sentence)
        gold_tree = UndirectedTree.from_edges(n, sentence.edges())
        gold_dist = distance_matrix(sentence).entries.astype(float)
        for name, predicted in (
            ("path", path_tree(n)),
            ("majority", majority_predict(model, n)),
        ):
            scored[name]["trees"].append((predicted, gold_tree))
            scored[name]["dists"].append((tree_distances(predicted), gold_dist))
    rows = []
    for name, pairs in scored.items():
        rows.append(
            MetricRow(
                model="baseline",
                layer=None,
                probe=name,
                dataset=dataset,
                metric="uuas",
                value=uuas(pairs["trees"]),
                n_sentences=len(corpus),
            )
        )
        rows.append(
            MetricRow(
                model="baseline",
                layer=None,
                probe=name,
                dataset=dataset,
                metric="dspr",
                value=dspr(pairs["dists"], length_filter=config.dspr_length_filter),
                n_sentences=len(corpus),
            )
        )
    return rows


def cmd_eval(config: ExperimentConfig, args) -> None:
    out_dir = _out_dir(config)
    rows = []
    if config.models:
        config.require_paths("test_conllu", "train_conllu", "embeddings_dir")
        corpora = [("normal", "test", Path(config.test_conllu))]
        jabber_path = _jabberwocky_path(config)
        if jabber_path.exists():
            corpora.append(("jabberwocky", "test-jabber", jabber_path))
        else:
            logger.warning("no pseudoword corpus at %s, skipping", jabber_path)
        majority = majority_fit(parse_conllu_file(config.train_conllu))
        for dataset, _, corpus_path in corpora:
            rows.extend(
                _baseline_rows(majority, parse_conllu_file(corpus_path), dataset, config)
            )
        for model in config.models:
            for layer in config.layers:
                for kind in config.probes:
                    params_path, _, _ = _artifact_paths(
                        out_dir, f"{model}.layer{layer}.{kind}"
                    )
                    if not params_path.exists():
                        logger.warning("no trained probe at %s, skipping", params_path)
                        continue
                    params = load_probe_params(params_path)
                    for dataset, split, corpus_path in corpora:
                        jemb = (
                            Path(config.embeddings_dir)
                            / f"{model}.layer{layer}.{split}.jemb"
                        )
                        if not jemb.exists():
                            logger.warning("no embeddings at %s, skipping", jemb)
                            continue
                        data = _load_dataset(config, model, layer, split, corpus_path)
                        scores = evaluate_probe(
                            params,
                            data,
                            length_filter=config.dspr_length_filter,
                            exclude_punct=config.exclude_punct,
                        )
                        for metric in ("uuas", "dspr"):
                            rows.append(
                                MetricRow(
                                    model=model,
                                    layer=layer,
                                    probe=kind,
                                    dataset=dataset,
                                    metric=metric,
                                    value=scores[metric],
                                    n_sentences=scores["n_sentences"],
                                )
                            )
    csv_path = out_dir / "metrics.csv"
    write_metrics_csv(rows, csv_path, config.config_hash(), config.seed)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if rows:
        # re-read so figures reflect the CSV's rounded values exactly
        stored_rows, _ = read_metrics_csv(csv_path)
        for figure in render_report(stored_rows, out_dir):
            print(f"wrote {figure}")


def cmd_report(config: ExperimentConfig, args) -> None:
    csv_path = Path(args.csv) if args.csv else Path(config.output_dir) / "metrics.csv"
    if not csv_path.exists():
        raise ConfigError(f"metrics CSV does not exist: {csv_path}")
    rows, meta = read_metrics_csv(csv_path)
    if not rows:
        raise DataError(f"metrics CSV {csv_path} has no rows to plot")
    for figure in render_report(rows, _out_dir(config)):
        print(f"wrote {figure}")
    if meta:
        provenance = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
        print(f"provenance: {provenance}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jabberprobe",
        description=(
            "Train and evaluate syntactic-distance probes, and generate "
            "structure-preserving pseudoword corpora."
        ),
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--config", required=True, help="TOML experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument(
            "--output-dir", default=None, help="override config output_dir"
        )
        return p

    with_config(
        sub.add_parser("generate", help="write the pseudoword twin of the test corpus")
    )
    with_config(sub.add_parser("train", help="train one probe per model/layer/kind"))
    with_config(
        sub.add_parser("search", help="random hyperparameter search per model/kind")
    )
    with_config(
        sub.add_parser("eval", help="score probes and baselines into CSV + figures")
    )
    report_parser = with_config(
        sub.add_parser("report", help="re-render figures from a metrics CSV")
    )
    report_parser.add_argument(
        "--csv", default=None, help="metrics CSV (default: output_dir/metrics.csv)"
    )
    sub.add_parser("extract-stub", help="print the embedding-extractor contract")
    return parser


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "search": cmd_search,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "extract-stub":
            print(EXTRACTOR_CONTRACT)
            return EXIT_OK
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.output_dir is not None:
            config.output_dir = args.output_dir
        config.validate()
        COMMANDS[args.command](config, args)
        return EXIT_OK
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
