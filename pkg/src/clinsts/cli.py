"""Command-line front end.

Exit codes: 0 success, 2 input/parse error, 3 computation or contract error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, encoder, evaluation, forest, stacking
from .entity import EntityLexicon, load_lexicon
from .errors import ComputationError, InputError, MissingGold, ParseError
from .features import (
    FEATURE_NAMES,
    FeatureContext,
    SplitSpec,
    featurize_dataset,
    fit_idf,
    load_pairs,
    read_features,
    split,
    write_features,
)
from .persist import model_kind
from .semantic import load_embeddings, load_sentence_vectors
from .text_prep import default_stopwords, load_stopwords

log = logging.getLogger("clinsts")

ENV_STOPWORDS = "CLINSTS_STOPWORDS"
ENV_LEXICON = "CLINSTS_LEXICON"

# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_scores(path, scores) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in scores:
            fh.write(f"{v:.9f}\n")


def read_scores(path) -> np.ndarray:
    path = Path(path)
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ParseError(f"not a number: {text!r}", path, lineno) from None
    return np.array(values, dtype=np.float64)


def read_gold(path) -> np.ndarray:
    """Gold scores from a feature TSV (gold column), a pair TSV (third
    column) or a plain one-score-per-line file."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("id\t"):
        table = read_features(path)
        if table.gold is None:
            raise ParseError("feature file has no gold column", path)
        return table.gold
    if "\t" in first:
        ds = load_pairs(path, has_gold=True)
        return ds.gold()
    scores = read_scores(path)
    if np.any((scores < 0) | (scores > 5)):
        raise ParseError("gold scores must lie in [0, 5]", path)
    return scores


def write_manifest(out_path, args, inputs, seeds) -> None:
    doc = {
        "tool": "clinsts",
        "version": __version__,
        "command": args.command,
        "config": {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k != "func"},
        "inputs": {str(p): sha256(p) for p in inputs if p is not None},
        "seeds": seeds,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    write_json(str(out_path) + ".manifest.json", doc)


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _stopwords(args):
    path = args.stopwords or os.environ.get(ENV_STOPWORDS)
    return (load_stopwords(path) if path else default_stopwords()), path


def _lexicon(args):
    path = args.lexicon or os.environ.get(ENV_LEXICON)
    return (load_lexicon(path) if path else EntityLexicon()), path


def _split_spec(args) -> SplitSpec:
    return SplitSpec(args.train_count, args.validation_count, args.split_seed)


def _context(args, idf=None):
    stopwords, sw_path = _stopwords(args)
    lexicon, lex_path = _lexicon(args)
    embeddings = load_embeddings(args.embeddings)
    vectors = load_sentence_vectors(args.sentence_vectors) if args.sentence_vectors else None
    ctx = FeatureContext(stopwords, idf, embeddings, lexicon, vectors)
    return ctx, [sw_path, lex_path, args.embeddings, args.sentence_vectors]


def _eval_json(pred, gold) -> dict:
    doc = evaluation.build_report(pred, gold)
    doc.pop("per_feature")
    doc.pop("ablation")
    return doc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_featurize(args) -> None:
    dataset = load_pairs(args.pairs, has_gold=False)
    ctx, inputs = _context(args)
    idf_path = args.idf_from or args.pairs
    idf_source = dataset if idf_path == args.pairs else load_pairs(idf_path, has_gold=False)
    if args.idf_split_seed is not None:
        spec = SplitSpec(args.train_count, args.validation_count, args.idf_split_seed)
        idf_source, _ = split(idf_source, spec)
    ctx = FeatureContext(ctx.stopwords, fit_idf(idf_source, ctx.stopwords), ctx.embeddings,
                         ctx.lexicon, ctx.sentence_vectors)
    X, gold = featurize_dataset(dataset, ctx)
    write_features(args.out, [p.id for p in dataset], X, gold)
    write_manifest(args.out, args, [args.pairs, idf_path, *inputs], {"idf_split_seed": args.idf_split_seed})
    log.info("wrote %d feature rows to %s", len(X), args.out)


def cmd_train_rf(args) -> None:
    table = read_features(args.features)
    if table.gold is None:
        raise MissingGold(f"{args.features} has no gold column")
    train_ds, val_ds = split(table.as_dataset(), _split_spec(args))
    tr = table.rows([p.id for p in train_ds])
    va = table.rows([p.id for p in val_ds])
    if np.ptp(tr.gold) == 0:
        raise ComputationError("training gold scores are constant")
    config = forest.ForestConfig(
        n_trees=args.trees,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        features_per_split=args.features_per_split,
        seed=args.seed,
    )
    model = forest.fit(tr.X, tr.gold, config)
    forest.save(model, args.out_model)
    val_pred = forest.predict(model, va.X)
    report = {
        "model": "random_forest",
        "n_train": len(tr),
        "n_validation": len(va),
        "validation": _eval_json(val_pred, va.gold),
        "importances": [
            {"index": j, "name": FEATURE_NAMES[j], "importance": evaluation.sig6(v)}
            for j, v in enumerate(model.importances)
        ],
        "config": {"n_trees": config.n_trees, "max_depth": config.max_depth,
                   "min_samples_leaf": config.min_samples_leaf,
                   "features_per_split": config.features_per_split, "seed": config.seed,
                   "split_seed": args.split_seed},
    }
    if args.report:
        write_json(args.report, report)
    _write_validation(args, val_pred, va.gold, [int(i) for i in va.ids])
    write_manifest(args.out_model, args, [args.features], {"split_seed": args.split_seed, "seed": args.seed})


def _write_validation(args, pred, gold, ids) -> None:
    if args.val_preds:
        write_scores(args.val_preds, pred)
    if args.val_gold:
        write_scores(args.val_gold, gold)
    if args.val_ids:
        Path(args.val_ids).write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")


def _parse_hidden(text: str) -> tuple:
    try:
        widths = tuple(int(w) for w in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated widths, got {text!r}") from None
    if not widths or min(widths) < 1:
        raise argparse.ArgumentTypeError("hidden widths must be positive")
    return widths


def cmd_train_encoder(args) -> None:
    dataset = load_pairs(args.pairs, has_gold=False)
    if not dataset.has_gold:
        raise MissingGold(f"{args.pairs}: every pair needs a gold score to train the encoder")
    train_ds, val_ds = split(dataset, _split_spec(args))
    ctx, inputs = _context(args)
    config = encoder.MlpConfig(
        embed_dim=ctx.embeddings.dim,
        hidden=args.hidden,
        learning_rate=args.lr,
        l2_coeff=args.l2,
        dropout_rate=args.dropout,
        patience_epochs=args.patience,
        max_epochs=args.max_epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        pair_features=args.pair_features,
    )
    model, state = encoder.train(train_ds, ctx, config, val_ds)
    encoder.save(model, args.out_model)
    val_pred = encoder.predict_pairs(model, val_ds, ctx)
    report = {
        "model": "mlp",
        "n_train": len(train_ds),
        "n_validation": len(val_ds),
        "best_epoch": state.best_epoch,
        "last_epoch": state.epoch,
        "best_validation_pearson": evaluation.sig6(state.best_validation_correlation),
        "validation": _eval_json(val_pred, val_ds.gold()),
        "history": [
            {"epoch": h["epoch"], "train_mse": evaluation.sig6(h["train_mse"]),
             "val_mse": evaluation.sig6(h["val_mse"]), "val_pearson": evaluation.sig6(h["val_pearson"])}
            for h in state.history
        ],
        "config": {"hidden": list(config.hidden), "learning_rate": config.learning_rate,
                   "l2_coeff": config.l2_coeff, "dropout_rate": config.dropout_rate,
                   "patience_epochs": config.patience_epochs, "max_epochs": config.max_epochs,
                   "batch_size": config.batch_size, "seed": config.seed,
                   "pair_features": config.pair_features, "split_seed": args.split_seed},
    }
    if args.report:
        write_json(args.report, report)
    _write_validation(args, val_pred, val_ds.gold(), [p.id for p in val_ds])
    write_manifest(args.out_model, args, [args.pairs, *inputs], {"split_seed": args.split_seed, "seed": args.seed})


def _stack_matrix(paths) -> np.ndarray:
    cols = [read_scores(p) for p in paths]
    lengths = {len(c) for c in cols}
    if len(lengths) != 1:
        raise ParseError(f"base prediction files differ in length: {sorted(lengths)}")
    return np.column_stack(cols)


def cmd_stack(args) -> None:
    P = _stack_matrix(args.base_preds)
    gold = read_gold(args.gold)
    stacker = stacking.fit_ols(P, gold)
    stacking.save(stacker, args.out_model)
    if args.report:
        fitted = stacking.predict(stacker, P)
        write_json(args.report, {
            "model": "linear_stacker",
            "coefficients": [evaluation.sig6(c) for c in stacker.coefficients],
            "intercept": evaluation.sig6(stacker.intercept),
            "fit": _eval_json(fitted, gold),
        })
    write_manifest(args.out_model, args, [*args.base_preds, args.gold], {})


def cmd_predict(args) -> None:
    kind = model_kind(args.model)
    inputs = [args.model]
    if kind == "random_forest":
        if not args.features:
            raise InputError("a random forest model needs --features")
        model = forest.load(args.model)
        pred = forest.predict(model, read_features(args.features).X)
        inputs.append(args.features)
    elif kind == "mlp":
        if not (args.pairs and args.embeddings):
            raise InputError("an encoder model needs --pairs and --embeddings")
        model = encoder.load(args.model)
        ctx, ctx_inputs = _context(args)
        pred = encoder.predict_pairs(model, load_pairs(args.pairs, has_gold=False), ctx)
        inputs += [args.pairs, *ctx_inputs]
    else:
        if not args.base_preds:
            raise InputError("a stacker model needs --base-preds")
        stacker = stacking.load(args.model)
        pred = stacking.predict(stacker, _stack_matrix(args.base_preds))
        inputs += args.base_preds
    write_scores(args.out, pred)
    write_manifest(args.out, args, inputs, {})


def cmd_evaluate(args) -> None:
    pred = read_scores(args.pred)
    gold = read_gold(args.gold)
    features = read_features(args.features).X if args.features else None
    report = evaluation.build_report(pred, gold, features)
    write_json(args.out_report, report)
    if args.top_errors:
        pairs = load_pairs(args.pairs, has_gold=False) if args.pairs else None
        for i in evaluation.top_errors(pred, gold, args.top_errors):
            line = f"{i}\tgold={gold[i]:.2f}\tpred={pred[i]:.2f}"
            if pairs is not None and i < len(pairs):
                line += f"\t{pairs.pairs[i].s1}\t{pairs.pairs[i].s2}"
            print(line)
    write_manifest(args.out_report, args, [args.pred, args.gold, args.features, args.pairs], {})


def cmd_ablate(args) -> None:
    table = read_features(args.features)
    if table.gold is None:
        raise MissingGold(f"{args.features} has no gold column")
    train_ds, val_ds = split(table.as_dataset(), _split_spec(args))
    tr = table.rows([p.id for p in train_ds])
    va = table.rows([p.id for p in val_ds])
    test = None
    if args.test_features:
        tt = read_features(args.test_features)
        if tt.gold is None:
            raise MissingGold(f"{args.test_features} has no gold column")
        test = (tt.X, tt.gold)
    config = forest.ForestConfig(n_trees=args.trees, seed=args.seed)
    report = evaluation.ablation((tr.X, tr.gold), (va.X, va.gold), config, test)
    write_json(args.out_report, {"ablation": evaluation.ablation_rows_json(report)})
    write_manifest(args.out_report, args, [args.features, args.test_features],
                   {"split_seed": args.split_seed, "seed": args.seed})


def cmd_export_dot(args) -> None:
    model = forest.load(args.model)
    Path(args.out).write_text(forest.export_tree_dot(model, args.tree, FEATURE_NAMES), encoding="utf-8")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_split(p) -> None:
    p.add_argument("--split-seed", type=int, default=42)
    p.add_argument("--train-count", type=int, default=600)
    p.add_argument("--validation-count", type=int, default=150)


def _add_resources(p, embeddings_required=True) -> None:
    p.add_argument("--embeddings", required=embeddings_required, help="token embedding text file")
    p.add_argument("--stopwords", help=f"stopword file (default: ${ENV_STOPWORDS} or bundled list)")
    p.add_argument("--lexicon", help=f"entity lexicon TSV (default: ${ENV_LEXICON} or empty)")
    p.add_argument("--sentence-vectors", help="per-sentence vector cache overriding token means")


def _add_val_outputs(p) -> None:
    p.add_argument("--val-preds", help="write validation-partition predictions, one per line")
    p.add_argument("--val-gold", help="write validation-partition gold scores, one per line")
    p.add_argument("--val-ids", help="write validation-partition pair ids, one per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clinsts", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="compute the 14 similarity features per pair")
    p.add_argument("--pairs", required=True)
    _add_resources(p)
    p.add_argument("--idf-from", help="pair file whose sentences fit the idf statistics (default: --pairs)")
    p.add_argument("--idf-split-seed", type=int,
                   help="fit idf on the training partition of --idf-from split with this seed")
    p.add_argument("--train-count", type=int, default=600)
    p.add_argument("--validation-count", type=int, default=150)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train-rf", help="fit the random forest on the training partition")
    p.add_argument("--features", required=True)
    _add_split(p)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--features-per-split", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model", required=True)
    p.add_argument("--report")
    _add_val_outputs(p)
    p.set_defaults(func=cmd_train_rf)

    p = sub.add_parser("train-encoder", help="train the sentence-vector MLP with early stopping")
    p.add_argument("--pairs", required=True)
    _add_resources(p)
    _add_split(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=_parse_hidden, default=(480, 240, 80))
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--patience", type=int, default=200)
    p.add_argument("--max-epochs", type=int, default=10000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--pair-features", choices=encoder.PAIR_FEATURES, default="elementwise")
    p.add_argument("--out-model", required=True)
    p.add_argument("--report")
    _add_val_outputs(p)
    p.set_defaults(func=cmd_train_encoder)

    p = sub.add_parser("stack", help="fit the linear stacker on validation predictions")
    p.add_argument("--base-preds", nargs="+", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_stack)

    p = sub.add_parser("predict", help="score pairs with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features")
    p.add_argument("--pairs")
    _add_resources(p, embeddings_required=False)
    p.add_argument("--base-preds", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="pearson, mse, region errors and per-feature correlation")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--features")
    p.add_argument("--pairs", help="pair file used to print sentences with --top-errors")
    p.add_argument("--top-errors", type=int, default=0)
    p.add_argument("--out-report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="feature-group ablation of the random forest")
    p.add_argument("--features", required=True)
    p.add_argument("--test-features")
    _add_split(p)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-report", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("export-dot", help="write one forest tree as Graphviz DOT")
    p.add_argument("--model", required=True)
    p.add_argument("--tree", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_dot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (InputError, UnicodeDecodeError) as exc:
        print(f"clinsts: error: {exc}", file=sys.stderr)
        return 2
    except (ComputationError, IndexError) as exc:
        print(f"clinsts: error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"clinsts: error: cannot access {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # invalid option values rejected by a config object
        print(f"clinsts: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
