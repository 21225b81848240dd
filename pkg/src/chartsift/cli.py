"""Command-line driver: synth-data, build-instances, train, evaluate, rank, serve.

Every subcommand validates its inputs, writes its outputs only under the
declared --out path, and emits a manifest (config snapshot, seeds, input
digests, output list) alongside them.  Reruns with identical flags and
seeds produce byte-identical outputs.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import CorpusError, export, ingest
from .encoder import EncoderConfig
from .extraction import (
    SplitSpec,
    build_instances,
    load_instances,
    save_instances,
    split_patients,
    truncate_instances,
)
from .hierarchy import HierarchyError, load_hierarchy, save_hierarchy
from .lexical import TfidfModel, fit_tfidf, split_sentences
from .metrics import (
    ReferenceSummary,
    code_prediction_metrics,
    make_ranked_result,
    mean_ndcg,
    retrieval_curves,
    subset_filters,
    topk_prf,
    validated_precision,
)
from .model import (
    DESCRIPTION,
    FREE_TEXT,
    HIERARCHY,
    INDICATOR,
    ModelBundle,
    QuerySpec,
    contextual_scores,
    new_bundle,
    tfidf_scores,
)
from .synth import EvidenceOracle, SynthConfig, default_config, generate_synthetic
from .synth import build_synth_hierarchy, hierarchy_records
from .training import (
    TrainConfig,
    TrainingError,
    build_vocabulary,
    save_loss_log,
    train,
)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class DataError(RuntimeError):
    pass


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, subcommand: str, args: argparse.Namespace,
                   inputs: list[Path], outputs: list[Path]) -> None:
    manifest = {
        "tool": "chartsift",
        "version": __version__,
        "subcommand": subcommand,
        "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "inputs": {str(p): _sha256(Path(p)) for p in sorted(map(str, inputs))},
        "outputs": sorted(str(p) for p in outputs),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _load_hierarchy(path, gem=None):
    try:
        return load_hierarchy(path, gem_path=gem)
    except (OSError, HierarchyError) as exc:
        raise DataError(f"cannot load hierarchy: {exc}") from exc


def _load_instances(path):
    try:
        return load_instances(path)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"cannot load instances from {path}: {exc}") from exc


def cmd_synth_data(args) -> int:
    if args.config:
        try:
            config = SynthConfig.load(args.config)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"cannot load synth config: {exc}") from exc
    else:
        config = default_config()
    if args.patients:
        config.n_patients = args.patients
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        corpus, oracle = generate_synthetic(config, seed=args.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    export(corpus, out)
    oracle.save(out / "oracle.jsonl")
    save_hierarchy(build_synth_hierarchy(config), out / "hierarchy.jsonl")
    config.save(out / "synth-config.json")
    outputs = [out / n for n in ("reports.jsonl", "codes.jsonl", "oracle.jsonl",
                                 "hierarchy.jsonl", "synth-config.json")]
    write_manifest(out, "synth-data", args,
                   [Path(args.config)] if args.config else [], outputs)
    print(f"wrote {len(corpus)} patients, {len(oracle)} oracle entries to {out}")
    return 0


def cmd_build_instances(args) -> int:
    try:
        corpus, stats = ingest(args.corpus)
    except CorpusError as exc:
        raise DataError(str(exc)) from exc
    hierarchy = _load_hierarchy(args.hierarchy, args.gem)
    instances = build_instances(corpus, hierarchy, window=args.window,
                                label_horizon=args.horizon)
    ratios = tuple(float(x) for x in args.splits.split(","))
    caps = tuple(int(x) for x in args.caps.split(","))
    if len(ratios) != 3 or len(caps) != 3:
        raise DataError("--splits and --caps need three comma-separated values")
    spec = SplitSpec(ratios=ratios, caps=caps, seed=args.seed)
    try:
        spec.validate()
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    groups = split_patients([inst.patient_id for inst in instances], spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    counts = {}
    for name, patients, cap in zip(("train", "val", "test"), groups, caps):
        subset = [i for i in instances if i.patient_id in set(patients)]
        subset = truncate_instances(subset, cap, seed=args.seed)
        path = out / f"{name}.jsonl"
        save_instances(subset, path)
        outputs.append(path)
        counts[name] = len(subset)
    write_manifest(out, "build-instances", args,
                   [Path(args.corpus) / "reports.jsonl",
                    Path(args.corpus) / "codes.jsonl", Path(args.hierarchy)],
                   outputs)
    print(f"instances: {counts} (from {len(instances)} total) -> {out}")
    return 0


def cmd_train(args) -> int:
    instances = _load_instances(args.instances)
    if not instances:
        raise DataError(f"no instances in {args.instances}")
    hierarchy = _load_hierarchy(args.hierarchy, args.gem)
    vocab = build_vocabulary(instances, hierarchy, max_size=args.max_vocab)
    encoder_cfg = EncoderConfig(
        vocab_size=len(vocab), d_model=args.d_model, n_layers=args.n_layers,
        n_heads=args.n_heads, d_ff=args.d_ff, d_hidden=args.d_hidden,
        max_tokens_per_sentence=args.max_tokens,
        max_sentences_per_instance=args.max_sentences, init_std=args.init_std)
    config = TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
        seed=args.seed, downsample_p=args.downsample_p,
        query_mode=args.query_mode, max_grad_norm=args.max_grad_norm)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle, log = train(instances, hierarchy, encoder_cfg, config, vocab=vocab,
                        checkpoint_dir=out)
    bundle.save(out / "checkpoint.ckpt")
    vocab.save(out / "vocab.txt")
    save_loss_log(log, out / "loss_log.tsv")
    outputs = sorted(out.glob("*.ckpt")) + [out / "vocab.txt", out / "loss_log.tsv"]
    write_manifest(out, "train", args,
                   [Path(args.instances), Path(args.hierarchy)], outputs)
    final = log[-1].loss if log else float("nan")
    print(f"trained {args.query_mode} model: {len(log)} steps, "
          f"final loss {final:.4f} -> {out / 'checkpoint.ckpt'}")
    return 0


def _oracle_references(oracle: EvidenceOracle, by_key) -> dict:
    refs = {}
    for (pid, t, cat), sentences in oracle.entries.items():
        if (pid, t) in by_key:
            refs[((pid, t), cat)] = set(sentences)
    return refs


def _annotation_references(records, by_key) -> tuple[dict, dict]:
    refs: dict = {}
    descriptions: dict = {}
    for rec in records:
        key = ((rec["patient_id"], int(rec["time_point"])), rec["query"])
        if key[0] not in by_key:
            continue
        refs.setdefault(key, set())
        if rec.get("relevant", True):
            refs[key].add(rec["fingerprint"])
        if rec.get("query_description"):
            descriptions[rec["query"]] = rec["query_description"]
    return refs, descriptions


def _load_results_file(path) -> list:
    """Precomputed rankings: one JSON line per (instance, query) pair."""
    results = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                texts = [s["fingerprint"] for s in rec["sentences"]]
                scores = [float(s["score"]) for s in rec["sentences"]]
                results.append(make_ranked_result(
                    (rec["patient_id"], int(rec["t"])), rec["query"],
                    texts, scores))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot load results file: {exc}") from exc
    return results


def cmd_evaluate(args) -> int:
    if not args.checkpoint and not args.baseline and not args.results:
        raise DataError("evaluate needs --results, --checkpoint or --baseline")
    instances = _load_instances(args.instances)
    hierarchy = _load_hierarchy(args.hierarchy, args.gem)
    by_key = {inst.key(): inst for inst in instances}

    descriptions = {n.id: (n.description or n.name)
                    for n in hierarchy.nodes.values()}
    annotation_records = None
    if args.reference_kind == "oracle":
        try:
            oracle = EvidenceOracle.load(args.references)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"cannot load oracle: {exc}") from exc
        ref_entries = _oracle_references(oracle, by_key)
    else:
        try:
            with open(args.references, "r", encoding="utf-8") as fh:
                annotation_records = [json.loads(line) for line in fh if line.strip()]
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot load annotations: {exc}") from exc
        reference_round = [r for r in annotation_records
                           if r.get("round", "reference") == "reference"]
        ref_entries, custom_desc = _annotation_references(reference_round, by_key)
        descriptions.update(custom_desc)
    if not ref_entries:
        raise DataError("no reference entries match the provided instances")

    bundle = None
    tfidf = None
    needs_tfidf = args.baseline == "tfidf" or args.subset == "tfidf_zero"
    if needs_tfidf:
        fit_source = args.train_instances or args.instances
        fit_insts = _load_instances(fit_source)
        tfidf = fit_tfidf([s.text for i in fit_insts for s in i.sentences]
                          + sorted(descriptions.values()))
    precomputed = None
    if args.results:
        precomputed = {(r.instance_key, r.query_key): r
                       for r in _load_results_file(args.results)}
        model_name = "precomputed"
    elif args.checkpoint:
        try:
            bundle = ModelBundle.load(args.checkpoint)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load checkpoint: {exc}") from exc
        model_name = bundle.query_mode
    elif args.baseline == "contextual":
        fit_source = args.train_instances or args.instances
        fit_insts = _load_instances(fit_source)
        vocab = build_vocabulary(fit_insts, hierarchy)
        enc = EncoderConfig(vocab_size=len(vocab), d_model=args.d_model,
                            n_layers=args.n_layers, n_heads=args.n_heads,
                            d_ff=args.d_ff, d_hidden=args.d_hidden,
                            max_tokens_per_sentence=args.max_tokens,
                            init_std=args.init_std)
        bundle = new_bundle(enc, list(hierarchy.nodes), vocab, DESCRIPTION,
                            seed=args.seed)
        model_name = "contextual"
    else:
        model_name = "tfidf"

    def query_spec(query_key):
        if query_key.startswith("custom:"):
            if query_key not in descriptions:
                raise DataError(f"no description recorded for {query_key}")
            return QuerySpec(FREE_TEXT, text=descriptions[query_key])
        return QuerySpec(bundle.query_mode if args.checkpoint else DESCRIPTION,
                         category_id=query_key)

    results = []
    references = ReferenceSummary(entries={}, source=args.reference_kind)
    probabilities: list[float] = []
    code_labels: list[int] = []
    for (instance_key, query_key), ref in sorted(ref_entries.items()):
        inst = by_key[instance_key]
        texts = [s.text for s in inst.sentences]
        if query_key not in descriptions and not query_key.startswith("custom:"):
            raise DataError(f"unknown query category {query_key}")
        if precomputed is not None:
            result = precomputed.get((instance_key, query_key))
            if result is None:
                raise DataError(
                    f"results file has no entry for {instance_key}/{query_key}")
            results.append(result)
            references.entries[(instance_key, query_key)] = set(ref)
            continue
        if args.baseline == "tfidf":
            scores = tfidf_scores(texts, descriptions[query_key], tfidf)
        elif args.baseline == "contextual":
            scores = contextual_scores(bundle, texts, descriptions[query_key])
        else:
            ranking = bundle.score_instance(texts, query_spec(query_key), hierarchy,
                                            custom_descriptions={
                                                k: v for k, v in descriptions.items()
                                                if k.startswith("custom:")})
            texts = [texts[i] for i in ranking.kept_indices]
            scores = ranking.scores
        results.append(make_ranked_result(instance_key, query_key, texts, scores))
        references.entries[(instance_key, query_key)] = set(ref)
    if args.checkpoint and args.code_metrics:
        for inst in sorted(by_key.values(), key=lambda i: i.key()):
            texts = [s.text for s in inst.sentences]
            for cat, y in zip(inst.queries, inst.labels):
                ranking = bundle.score_instance(texts, query_spec(cat), hierarchy)
                probabilities.append(ranking.probability)
                code_labels.append(y)

    subset = args.subset
    depth = None
    if subset.startswith("depth="):
        depth = int(subset.split("=", 1)[1])
        subset = "depth"
    if subset != "all":
        results, references = subset_filters(
            results, references, subset, hierarchy=hierarchy,
            tfidf_model=tfidf, descriptions=descriptions, depth=depth)
        if not results:
            raise DataError(f"subset {args.subset!r} left nothing to evaluate")

    curves = retrieval_curves(results, references,
                              threshold_source=args.threshold_source)
    prf = topk_prf(results, references, k=args.k)
    report = {
        "model": model_name,
        "subset": args.subset,
        "threshold_source": args.threshold_source,
        "reference_kind": args.reference_kind,
        "auroc": curves.auroc,
        "avg_precision": curves.average_precision,
        "mean_ndcg": mean_ndcg(results, references),
        f"p_at_{args.k}": prf.precision,
        f"r_at_{args.k}": prf.recall,
        f"f1_at_{args.k}": prf.f1,
        "n_pairs": len(results),
        "n_pos": curves.n_pos,
        "n_neg": curves.n_neg,
    }
    if annotation_records is not None:
        validation = [r for r in annotation_records
                      if r.get("round") == "validation"]
        if validation:
            report["validated_p"] = validated_precision(validation, k=args.k)
    if probabilities:
        code_curves = code_prediction_metrics(probabilities, code_labels)
        report["code_auroc"] = code_curves.auroc
        report["code_avg_precision"] = code_curves.average_precision

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "curves.tsv", "w", encoding="utf-8") as fh:
        fh.write("threshold\ttpr\tfpr\tprecision\trecall\n")
        for row in curves.rows():
            fh.write("\t".join(repr(float(x)) for x in row) + "\n")
    inputs = [Path(args.instances), Path(args.hierarchy), Path(args.references)]
    if args.checkpoint:
        inputs.append(Path(args.checkpoint))
    if args.results:
        inputs.append(Path(args.results))
    write_manifest(out, "evaluate", args, inputs,
                   [out / "metrics.json", out / "curves.tsv"])
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_rank(args) -> int:
    try:
        corpus, _ = ingest(args.corpus)
    except CorpusError as exc:
        raise DataError(str(exc)) from exc
    hierarchy = _load_hierarchy(args.hierarchy, args.gem)
    try:
        sentences = corpus.sentences_before(args.patient, args.time_point)
    except KeyError as exc:
        raise DataError(str(exc)) from exc
    if not sentences:
        raise DataError("no reports before the requested time point")
    texts = [s.text for s in sentences]

    is_category = args.query in hierarchy.nodes
    if args.baseline == "tfidf":
        description = (hierarchy.node(args.query).description
                       if is_category else args.query)
        tfidf = fit_tfidf([s for p in corpus for r in p.reports
                           for s in split_sentences(r.text)]
                          + [n.description or n.name
                             for n in hierarchy.nodes.values()])
        scores = tfidf_scores(texts, description, tfidf)
        probability = None
    else:
        if not args.checkpoint:
            raise DataError("rank needs --checkpoint unless --baseline tfidf")
        try:
            bundle = ModelBundle.load(args.checkpoint)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load checkpoint: {exc}") from exc
        if is_category:
            spec = QuerySpec(bundle.query_mode, category_id=args.query)
        else:
            spec = QuerySpec(FREE_TEXT, text=args.query)
        ranking = bundle.score_instance(texts, spec, hierarchy)
        texts = [texts[i] for i in ranking.kept_indices]
        sentences = [sentences[i] for i in ranking.kept_indices]
        scores = ranking.scores
        probability = ranking.probability

    order = sorted(range(len(texts)), key=lambda i: (-scores[i], i))
    if probability is not None:
        print(f"P(future code) = {probability:.4f}")
    for rank_pos, i in enumerate(order[: args.top_k], start=1):
        print(f"{rank_pos:3d}  {scores[i]:.6f}  [{sentences[i].report_id}]  {texts[i]}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_state, create_app

    try:
        corpus, _ = ingest(args.corpus)
    except CorpusError as exc:
        raise DataError(str(exc)) from exc
    hierarchy = _load_hierarchy(args.hierarchy, args.gem)
    bundle = None
    if args.checkpoint:
        try:
            bundle = ModelBundle.load(args.checkpoint)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load checkpoint: {exc}") from exc
    tfidf = fit_tfidf(
        [s for p in corpus for r in p.reports for s in split_sentences(r.text)]
        + [n.description or n.name for n in hierarchy.nodes.values()])
    state = build_state(corpus, hierarchy, args.annotations_path,
                        bundle=bundle, tfidf=tfidf)
    static_dir = args.static_dir
    if static_dir and not Path(static_dir).is_dir():
        raise DataError(f"static dir {static_dir} does not exist")
    app = create_app(state, static_dir=static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chartsift",
        description="Rank patient-history sentences against diagnosis queries.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth-data", help="generate a synthetic corpus + oracle")
    p.add_argument("--config", help="synth config JSON (defaults to the built-in)")
    p.add_argument("--patients", type=int, help="override patient count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("build-instances", help="extract (x, q, y) instances")
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--gem", help="optional GEM mapping file")
    p.add_argument("--window", type=int, default=365)
    p.add_argument("--horizon", type=int, default=None,
                   help="label horizon in days (default: unbounded)")
    p.add_argument("--splits", default="0.7,0.15,0.15")
    p.add_argument("--caps", default="10000,1000,1000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_instances)

    p = sub.add_parser("train", help="train a ranking model")
    p.add_argument("--instances", required=True)
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--gem")
    p.add_argument("--query-mode", dest="query_mode", default="description",
                   choices=[INDICATOR, DESCRIPTION, HIERARCHY])
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=4)
    p.add_argument("--downsample-p", dest="downsample_p", type=float, default=0.01)
    p.add_argument("--max-grad-norm", dest="max_grad_norm", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-model", dest="d_model", type=int, default=128)
    p.add_argument("--n-layers", dest="n_layers", type=int, default=2)
    p.add_argument("--n-heads", dest="n_heads", type=int, default=4)
    p.add_argument("--d-ff", dest="d_ff", type=int, default=None)
    p.add_argument("--d-hidden", dest="d_hidden", type=int, default=64)
    p.add_argument("--max-tokens", dest="max_tokens", type=int, default=64)
    p.add_argument("--max-sentences", dest="max_sentences", type=int, default=256)
    p.add_argument("--init-std", dest="init_std", type=float, default=0.02)
    p.add_argument("--max-vocab", dest="max_vocab", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model against references")
    p.add_argument("--checkpoint")
    p.add_argument("--results", help="precomputed per-pair rankings (JSONL)")
    p.add_argument("--baseline", choices=["tfidf", "contextual"])
    p.add_argument("--instances", required=True)
    p.add_argument("--train-instances", dest="train_instances",
                   help="instances used to fit TF-IDF / untrained encoders")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--gem")
    p.add_argument("--references", required=True)
    p.add_argument("--reference-kind", dest="reference_kind", default="oracle",
                   choices=["oracle", "annotations"])
    p.add_argument("--subset", default="all",
                   help="all | tfidf_zero | custom_only | depth=N")
    p.add_argument("--threshold-source", dest="threshold_source",
                   default="percentile", choices=["percentile", "attention"])
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--code-metrics", dest="code_metrics", action="store_true",
                   help="also compute future-code prediction ROC/PR")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-model", dest="d_model", type=int, default=128)
    p.add_argument("--n-layers", dest="n_layers", type=int, default=2)
    p.add_argument("--n-heads", dest="n_heads", type=int, default=4)
    p.add_argument("--d-ff", dest="d_ff", type=int, default=None)
    p.add_argument("--d-hidden", dest="d_hidden", type=int, default=64)
    p.add_argument("--max-tokens", dest="max_tokens", type=int, default=64)
    p.add_argument("--init-std", dest="init_std", type=float, default=0.02)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="rank one patient history to stdout")
    p.add_argument("--corpus", required=True)
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--gem")
    p.add_argument("--checkpoint")
    p.add_argument("--baseline", choices=["tfidf"])
    p.add_argument("--patient", required=True)
    p.add_argument("--time-point", dest="time_point", type=int, required=True)
    p.add_argument("--query", required=True,
                   help="category id or free text")
    p.add_argument("--top-k", dest="top_k", type=int, default=10)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--gem")
    p.add_argument("--checkpoint")
    p.add_argument("--annotations-path", dest="annotations_path",
                   default="annotations.jsonl")
    p.add_argument("--static-dir", dest="static_dir",
                   help="serve the browser console from this directory at /ui")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
