"""Command-line entry point wiring the full pipeline.

Subcommands: align, synth, label, train-rfc, train-qe, eval, score.
Exit code 1 signals a runtime error (single machine-parseable line on
stderr), 2 a configuration validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import config as cfg_mod
from . import forest as forest_mod
from . import model as model_mod
from .bow import bow_score
from .config import PipelineConfig
from .embeddings import load_embeddings, similarity_matrix
from .errors import ConfigError, EmptyAfterOov, SubqeError, TooShort
from .features import NgramFrequencies, extract_features, feature_layout
from .labeler import build_dataset, read_labeled_tsv, write_labeled_tsv
from .metrics import confusion, length_buckets, metrics, miss_rate
from .subtitles import (
    BilingualPair,
    Provenance,
    align_by_timestamp,
    parse_srt,
    read_pairs_tsv,
    tokenize,
    write_pairs_tsv,
)
from .synth import (
    CaptionLexicon,
    add_captions,
    derive_seed,
    drift_align,
    make_rng,
    random_align,
    scramble_target,
)


def _load_config(args) -> PipelineConfig:
    config = cfg_mod.load(args.config) if args.config else PipelineConfig()
    for key in ("seed", "arch", "head"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "lang_pair", None):
        config.source_lang, config.target_lang = args.lang_pair.split("-", 1)
    config.validate()
    return config


def _load_tables(config: PipelineConfig):
    if not config.src_embeddings or not config.tgt_embeddings:
        raise ConfigError("src_embeddings and tgt_embeddings must be configured")
    with open(config.resolve_path(config.src_embeddings), encoding="utf-8") as fh:
        src_table = load_embeddings(fh, language=config.source_lang)
    with open(config.resolve_path(config.tgt_embeddings), encoding="utf-8") as fh:
        tgt_table = load_embeddings(fh, language=config.target_lang)
    return src_table, tgt_table


def _read_srt_dir(path: str, language: str):
    if os.path.isfile(path):
        names = [path]
    else:
        names = sorted(
            os.path.join(path, n) for n in os.listdir(path) if n.endswith(".srt")
        )
    files = {}
    for name in names:
        with open(name, encoding="utf-8-sig") as fh:
            files[os.path.basename(name)] = parse_srt(fh.read(), language)
    return files


def cmd_align(args) -> int:
    config = _load_config(args)
    src_files = _read_srt_dir(args.src, config.source_lang)
    tgt_files = _read_srt_dir(args.tgt, config.target_lang)
    pairs = []
    unmatched = 0
    for name in sorted(src_files):
        tgt = tgt_files.get(name) or next(iter(tgt_files.values()), None)
        if tgt is None:
            continue
        result = align_by_timestamp(src_files[name], tgt, config.min_overlap_ratio)
        pairs.extend(result.pairs)
        unmatched += result.unmatched_source + result.unmatched_target
    write_pairs_tsv(pairs, args.out)
    print(f"aligned {len(pairs)} pairs ({unmatched} unmatched blocks dropped)")
    return 0


def cmd_synth(args) -> int:
    config = _load_config(args)
    pairs = read_pairs_tsv(args.pairs)
    lexicon = (CaptionLexicon.load(config.resolve_path(config.caption_lexicon))
               if config.caption_lexicon else CaptionLexicon())
    out = []
    rng = make_rng(config.seed, "synth")
    for pair in pairs:
        out.append(add_captions(pair, lexicon, rng))
    for pair in pairs:
        try:
            out.append(scramble_target(pair, rng))
        except TooShort:
            pass
    if len(pairs) >= 2:
        out.extend(random_align(pairs, rng))
    if args.src_srt and args.tgt_srt:
        with open(args.src_srt, encoding="utf-8-sig") as fh:
            src_file = parse_srt(fh.read(), config.source_lang)
        with open(args.tgt_srt, encoding="utf-8-sig") as fh:
            tgt_file = parse_srt(fh.read(), config.target_lang)
        out.extend(drift_align(src_file, tgt_file, pairs,
                               config.drift_window, rng))
    write_pairs_tsv(out, args.out)
    print(f"synthesized {len(out)} pairs from {len(pairs)} inputs")
    return 0


def cmd_label(args) -> int:
    config = _load_config(args)
    pairs = read_pairs_tsv(args.pairs)
    src_table, tgt_table = _load_tables(config)
    rfc = forest_mod.load_forest(args.rfc_model) if args.rfc_model else None
    params = config.bow_params()

    scored = None
    if rfc is not None:
        src_freqs = NgramFrequencies.from_sentences(
            [p.source_text.split() for p in pairs])
        tgt_freqs = NgramFrequencies.from_sentences(
            [p.target_text.split() for p in pairs])
        scored = []
        for pair in pairs:
            try:
                S = similarity_matrix(tokenize(pair.source_text),
                                      tokenize(pair.target_text),
                                      src_table, tgt_table)
                s_bow = bow_score(S, params)
            except EmptyAfterOov:
                s_bow = 0.0
            x = extract_features(pair, src_table, tgt_table, src_freqs, tgt_freqs)
            s_rfc = forest_mod.rfc_score(rfc, x)
            scored.append((pair, s_bow, s_rfc))

    good_pairs = None
    if config.good_pairs:
        good_pairs = []
        with open(config.resolve_path(config.good_pairs), encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                src, tgt = line.split("\t")[:2]
                good_pairs.append(BilingualPair(
                    src, tgt, config.source_lang, config.target_lang,
                    Provenance.GOOD_PAIRS_FILE))

    weights = None
    wt = config.weights_tuple()
    if wt is not None:
        from .labeler import SOURCE_ORDER
        weights = dict(zip(SOURCE_ORDER, wt))
    lexicon = (CaptionLexicon.load(config.resolve_path(config.caption_lexicon))
               if config.caption_lexicon else CaptionLexicon())
    labeled, report, discards = build_dataset(
        pairs,
        n_samples=config.n_samples,
        rng=make_rng(config.seed, "label"),
        weights=weights,
        scored=scored,
        good_pairs=good_pairs,
        lexicon=lexicon,
        thresholds=config.fusion_thresholds(),
        drift_window=config.drift_window,
        strict_loose=config.strict_loose,
    )
    write_labeled_tsv(labeled, args.out)
    with open(args.out + ".discards.tsv", "w", encoding="utf-8") as fh:
        for pair, s_bow, s_rfc in discards:
            fh.write(f"{pair.source_text}\t{pair.target_text}\t{s_bow:.6f}\t{s_rfc:.6f}\n")
    print(report.source_table())
    print()
    print(report.label_table())
    return 0


def cmd_train_rfc(args) -> int:
    config = _load_config(args)
    pairs = read_pairs_tsv(args.corpus)
    src_table, tgt_table = _load_tables(config)
    from .synth import build_rfc_corpus
    rng = make_rng(config.seed, "rfc")
    labeled = build_rfc_corpus(pairs, rng)
    src_freqs = NgramFrequencies.from_sentences(
        [p.source_text.split() for p in pairs])
    tgt_freqs = NgramFrequencies.from_sentences(
        [p.target_text.split() for p in pairs])
    X = np.stack([
        extract_features(p, src_table, tgt_table, src_freqs, tgt_freqs)
        for p, _ in labeled
    ])
    y = np.array([int(lbl) for _, lbl in labeled])
    # 80/20 split by seeded shuffle
    order = np.random.default_rng(derive_seed(config.seed, "rfc-split")).permutation(len(y))
    cut = int(0.8 * len(y))
    tr, te = order[:cut], order[cut:]
    model = forest_mod.train_rfc(X[tr], y[tr], config.forest_params(),
                                 seed=config.seed)
    train_acc = ((forest_mod.rfc_scores(model, X[tr]) > 0.5) == y[tr]).mean()
    test_acc = ((forest_mod.rfc_scores(model, X[te]) > 0.5) == y[te]).mean()
    forest_mod.save_forest(model, args.out)
    with open(args.out + ".layout.tsv", "w", encoding="utf-8") as fh:
        for slot in feature_layout():
            fh.write(f"{slot.index}\t{slot.family}\t{slot.description}\n")
    print(f"train accuracy {100 * train_acc:.2f}  test accuracy {100 * test_acc:.2f}")
    return 0


def cmd_train_qe(args) -> int:
    config = _load_config(args)
    labeled = read_labeled_tsv(args.dataset, config.source_lang, config.target_lang)
    src_table, tgt_table = _load_tables(config)
    data = model_mod.encode_dataset(labeled, src_table, tgt_table)
    net = model_mod.build_model(config.model_config(),
                                seed=derive_seed(config.seed, "qe-init"))
    result = model_mod.train(net, data, config.train_config())
    model_mod.save_checkpoint(result, args.out)
    with open(args.out + ".log", "w", encoding="utf-8") as fh:
        for e in result.log:
            fh.write(f"{e.epoch}\t{e.loss:.6f}\t{e.lr:g}\t{e.seconds:.2f}\n")
    print(f"trained {len(result.log)} epochs, final loss {result.log[-1].loss:.4f}")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args)
    labeled = read_labeled_tsv(args.dataset, config.source_lang, config.target_lang)
    src_table, tgt_table = _load_tables(config)
    result = model_mod.load_checkpoint(args.checkpoint)
    data = model_mod.encode_dataset(labeled, src_table, tgt_table)
    pred, _ = model_mod.predict_batch(result.model, data)
    truth = [lp.label for lp in labeled]
    lines = []
    if args.positives_only:
        fnr = miss_rate(pred, truth)
        lines.append(f"FNR {100 * fnr:.2f} on {len(pred)} positive pairs")
    else:
        report = metrics(confusion(pred, truth))
        report.per_length_accuracy = length_buckets(
            [lp.pair.target_text for lp in labeled], pred, truth)
        lines.append(report.table())
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_score(args) -> int:
    config = _load_config(args)
    src_table, tgt_table = _load_tables(config)
    result = model_mod.load_checkpoint(args.checkpoint)
    if args.pair:
        src, _, tgt = args.pair.partition("|||")
        pairs = [BilingualPair(src.strip(), tgt.strip(),
                               config.source_lang, config.target_lang)]
    else:
        pairs = read_pairs_tsv(args.file)
    for pair in pairs:
        label, values = model_mod.predict(result.model, pair, src_table, tgt_table)
        if result.model.config.head is model_mod.Head.SCORING:
            print(f"{label.value}\t{float(values):.6f}")
        else:
            print(f"{label.value}\t" + "\t".join(f"{v:.6f}" for v in values))
        if args.dump_activations:
            acts = model_mod.penultimate_activations(
                result.model, pair, src_table, tgt_table)
            print("activations\t" + "\t".join(f"{v:.6f}" for v in acts))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subqe")
    parser.add_argument("--config", help="pipeline config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--lang-pair", help="e.g. en-de")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align bilingual SRT files by timestamp")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("synth", help="run corruption generators over a pair TSV")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--src-srt")
    p.add_argument("--tgt-srt")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("label", help="assemble the weakly labeled dataset")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rfc-model")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train-rfc", help="train the random forest scorer")
    p.add_argument("--corpus", required=True, help="parallel pair TSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_rfc)

    p = sub.add_parser("train-qe", help="train the neural classifier")
    p.add_argument("--dataset", required=True, help="labeled TSV")
    p.add_argument("--out", required=True)
    p.add_argument("--arch", choices=[a.value for a in model_mod.Architecture])
    p.add_argument("--head", choices=[h.value for h in model_mod.Head])
    p.set_defaults(func=cmd_train_qe)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a labeled TSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out")
    p.add_argument("--positives-only", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("score", help="score a pair or pair file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pair", help='single pair as "source ||| target"')
    p.add_argument("--file", help="pair TSV")
    p.add_argument("--dump-activations", action="store_true")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 2
    except (SubqeError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
