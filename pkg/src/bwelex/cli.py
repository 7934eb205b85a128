"""Command-line interface for the full lexicon-induction pipeline.

Subcommands: train, translate, eval, markup, oov-scan, export-compressed.
Options can come from flags or from a key=value config file; flags win
over config values, which win over built-in defaults. Logs go to standard
error, data to standard output or files, and every file is written
atomically.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .embeddings import EmbeddingStore, load_embeddings
from .evaluation import (
    compress,
    export_compressed,
    numerical_rank,
    precision_at_k,
    write_eval_report,
)
from .lexicon import load_lexicon, split_lexicon
from .model import BilinearModel, load_model, save_model
from .oov import (
    MarkupPolicy,
    annotate_corpus,
    format_probability,
    load_system_vocabulary,
    read_corpus,
    scan_oov,
    write_corpus,
    write_oov_report,
)
from .optim import (
    TrainConfig,
    select_model,
    train,
    write_grid_table,
    write_train_log,
)


class CliError(Exception):
    """User-facing failure; main() turns it into a one-line diagnostic."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise CliError(f"not a boolean: {text!r}")


def load_config(path) -> dict[str, str]:
    """Parse a key=value config file; '#' starts a comment line."""
    values: dict[str, str] = {}
    path = Path(path)
    if not path.is_file():
        raise CliError(f"config file not found: {path}")
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


class Settings:
    """Flag-over-config-over-default resolution for one invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(args.config) if args.config else {}

    def get(self, name: str, default=None, cast=str, config_key=None):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        key = config_key or name
        if key in self.config:
            raw = self.config[key]
            if cast is bool:
                return _parse_bool(raw)
            try:
                return cast(raw)
            except ValueError as exc:
                raise CliError(f"config key {key}: {exc}") from None
        return default

    def require(self, name: str, cast=str, config_key=None):
        value = self.get(name, default=None, cast=cast, config_key=config_key)
        if value is None:
            flag = "--" + (config_key or name).replace("_", "-")
            raise CliError(f"missing required option {flag}")
        return value

    def input_path(self, name: str, config_key=None) -> Path:
        path = Path(self.require(name, config_key=config_key))
        if not path.is_file():
            raise CliError(f"input file not found: {path}")
        return path


def _load_store(settings: Settings, name: str, config_key=None) -> EmbeddingStore:
    path = settings.input_path(name, config_key=config_key)
    store = load_embeddings(
        path,
        limit=settings.get("limit_vocab", cast=int),
        normalize=settings.get("normalize", default=False, cast=bool),
    )
    print(
        f"loaded {len(store)} x {store.dimension} embeddings from {path}",
        file=sys.stderr,
    )
    return store


def _load_model(settings: Settings) -> BilinearModel:
    src = _load_store(settings, "src_emb")
    tgt = _load_store(settings, "tgt_emb")
    model_path = settings.input_path("model")
    return load_model(model_path, src, tgt)


def _out_dir(settings: Settings) -> Path:
    out = Path(settings.get("out_dir", default="."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _train_config(settings: Settings, lam: float) -> TrainConfig:
    return TrainConfig(
        regularizer=settings.get("reg", default="trace"),
        lam=lam,
        eta0=settings.get("eta0", default=0.01, cast=float),
        schedule=settings.get("schedule", default="inverse_sqrt"),
        epochs=settings.get("epochs", default=100, cast=int),
        init=settings.get("init", default="zeros"),
        init_scale=settings.get("init_scale", default=0.01, cast=float),
        rng_seed=settings.get("seed", default=0, cast=int),
        early_stop_patience=settings.get("patience", cast=int),
        frobenius_squared=settings.get(
            "frobenius_squared", default=False, cast=bool
        ),
    )


def cmd_train(settings: Settings) -> int:
    src = _load_store(settings, "src_emb")
    tgt = _load_store(settings, "tgt_emb")
    dict_path = settings.input_path("dict", config_key="dict")
    lexicon, filt = load_lexicon(dict_path, src, tgt)
    print(
        f"dictionary {dict_path}: kept {filt.kept} pairs "
        f"(dropped {filt.dropped_uncovered} uncovered, "
        f"{filt.duplicates} duplicate, {filt.dropped_multiword} multiword)",
        file=sys.stderr,
    )

    dev_fraction = settings.get("dev_fraction", default=0.3, cast=float)
    seed = settings.get("seed", default=0, cast=int)
    if dev_fraction > 0:
        lexicon = split_lexicon(lexicon, 1.0 - dev_fraction, seed)
    print(
        f"split: {len(lexicon.train_indices)} train / "
        f"{len(lexicon.dev_indices)} dev pairs",
        file=sys.stderr,
    )

    out = _out_dir(settings)
    grid_text = settings.get("lambda_grid")
    if grid_text:
        lams = [float(x) for x in str(grid_text).split(",") if x.strip()]
        if not lams:
            raise CliError("empty --lambda-grid")
        grid = [_train_config(settings, lam) for lam in lams]
        model, report, cells = select_model(
            grid, src, tgt, lexicon, log=sys.stderr
        )
        write_grid_table(cells, out / "grid.tsv")
        print(f"wrote {out / 'grid.tsv'}", file=sys.stderr)
    else:
        lam = settings.get("lam", default=0.0, cast=float, config_key="lambda")
        cfg = _train_config(settings, lam)
        model, report = train(src, tgt, lexicon, cfg, log=sys.stderr)

    model_path = Path(
        settings.get("model_out", default=str(out / "model.bin"))
    )
    save_model(model, model_path)
    write_train_log(report, out / "train_log.tsv")
    best = report.best_dev_p1
    best_text = f"{best:.4f}" if best is not None else "n/a"
    print(
        f"trained: best_epoch={report.best_epoch} dev_p1={best_text} "
        f"final_rank={report.final_rank}",
        file=sys.stderr,
    )
    print(f"wrote {model_path} and {out / 'train_log.tsv'}", file=sys.stderr)
    return 0


def cmd_translate(settings: Settings) -> int:
    n = settings.get("top_n", default=10, cast=int)
    if n < 1:
        raise CliError("--top-n must be a positive integer")
    model = _load_model(settings)

    words = []
    if settings.args.word:
        words.extend(settings.args.word)
    words_file = settings.get("words_file")
    if words_file:
        path = Path(words_file)
        if not path.is_file():
            raise CliError(f"input file not found: {path}")
        words.extend(path.read_text(encoding="utf-8").split())
    if not words:
        raise CliError("no words given; pass words or --words-file")

    for word in words:
        if len(words) > 1:
            print(f"# {word}")
        if word not in model.source_store:
            print(f"{word}\tOOV-in-embeddings")
            continue
        ranked = model.top_n(word, n)
        for rank, (token, prob) in enumerate(ranked.entries, 1):
            print(f"{rank}\t{token}\t{format_probability(prob)}")
    return 0


def cmd_eval(settings: Settings) -> int:
    model = _load_model(settings)
    dict_path = settings.input_path("dict", config_key="dict")
    lexicon, _ = load_lexicon(
        dict_path, model.source_store, model.target_store
    )
    ks_text = settings.get("ks", default="1")
    try:
        ks = [int(x) for x in str(ks_text).split(",") if x.strip()]
    except ValueError:
        raise CliError(f"bad --ks value: {ks_text!r}") from None
    result = precision_at_k(model, lexicon.pairs, ks)
    for k in result.k_values:
        print(f"{k}\t{result.precision_at_k[k]:.6f}")
    print(
        f"evaluated {result.evaluated_types} source types "
        f"({len(result.gold_uncovered)} gold-uncovered excluded)",
        file=sys.stderr,
    )
    out = settings.get("out")
    if out:
        write_eval_report(
            result, out,
            include_ranks=settings.get(
                "include_ranks", default=False, cast=bool
            ),
        )
        print(f"wrote {out}", file=sys.stderr)
    return 0


def _markup_policy(settings: Settings) -> MarkupPolicy:
    return MarkupPolicy(
        mode=settings.get("policy", default="none"),
        top_n=settings.get("top_n", default=50, cast=int),
        add_verbatim_option=settings.get(
            "add_verbatim_option", default=True, cast=bool
        ),
    )


def cmd_markup(settings: Settings) -> int:
    policy = _markup_policy(settings)
    corpus = read_corpus(settings.input_path("corpus"))
    vocab = load_system_vocabulary(settings.input_path("vocab"))
    model = None
    if policy.mode in ("bwe_all", "bwe_cw"):
        model = _load_model(settings)
    lines, summary = annotate_corpus(
        corpus, vocab, policy, model=model,
        tag=settings.get("tag", default="oov"),
    )
    out = settings.get("out")
    if out:
        write_corpus(lines, out)
        print(f"wrote {out}", file=sys.stderr)
    else:
        for line in lines:
            print(line)
    report_out = settings.get("report_out")
    if report_out:
        write_oov_report(summary.report, report_out)
        print(f"wrote {report_out}", file=sys.stderr)
    rep = summary.report
    print(
        f"marked {summary.marked_tokens} of {rep.oov_all} OOV tokens "
        f"({rep.oov_cw} content words) in {rep.tokens} tokens; "
        f"{summary.verbatim_fallbacks} verbatim fallbacks",
        file=sys.stderr,
    )
    return 0


def cmd_oov_scan(settings: Settings) -> int:
    corpus = read_corpus(settings.input_path("corpus"))
    vocab = load_system_vocabulary(settings.input_path("vocab"))
    report, _ = scan_oov(corpus, vocab)
    print(f"sentences\t{report.sentences}")
    print(f"tokens\t{report.tokens}")
    print(f"oov_all\t{report.oov_all}\t{report.oov_all_fraction:.6f}")
    print(f"oov_cw\t{report.oov_cw}\t{report.oov_cw_fraction:.6f}")
    out = settings.get("out")
    if out:
        write_oov_report(report, out)
        print(f"wrote {out}", file=sys.stderr)
    return 0


def cmd_export_compressed(settings: Settings) -> int:
    model = _load_model(settings)
    k = settings.get("k", cast=int)
    comp = compress(model, k)
    out = _out_dir(settings)
    src_base = out / Path(settings.require("src_emb")).name
    tgt_base = out / Path(settings.require("tgt_emb")).name
    src_path, tgt_path = export_compressed(comp, src_base, tgt_base)
    print(
        f"rank {comp.rank_k} (numerical rank {numerical_rank(model.W)}); "
        f"wrote {src_path} and {tgt_path}",
        file=sys.stderr,
    )
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, help="random seed")


def _add_embeddings(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--src-emb", dest="src_emb",
                        help="source embedding text file")
    parser.add_argument("--tgt-emb", dest="tgt_emb",
                        help="target embedding text file")
    parser.add_argument("--limit-vocab", dest="limit_vocab", type=int,
                        help="load only the first N embedding rows")
    parser.add_argument("--normalize", action="store_const", const=True,
                        default=None, help="L2-normalize embedding rows")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwelex",
        description="Bilingual lexicon induction from monolingual "
                    "embeddings, with OOV markup for translation systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a bilinear model with FOBOS")
    _add_common(p)
    _add_embeddings(p)
    p.add_argument("--dict", dest="dict", help="seed dictionary file")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--model-out", dest="model_out", help="model file path")
    p.add_argument("--reg", choices=["frobenius", "trace"],
                   help="regularizer (default trace)")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="regularization constant")
    p.add_argument("--lambda-grid", dest="lambda_grid",
                   help="comma-separated lambdas; model selection over grid")
    p.add_argument("--eta0", type=float, help="base step size")
    p.add_argument("--schedule", choices=["constant", "inverse_sqrt"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--dev-fraction", dest="dev_fraction", type=float,
                   help="dev split fraction (default 0.3; 0 disables)")
    p.add_argument("--patience", type=int,
                   help="early-stop after this many stale dev epochs")
    p.add_argument("--init", choices=["zeros", "scaled_gaussian"])
    p.add_argument("--init-scale", dest="init_scale", type=float)
    p.add_argument("--frobenius-squared", dest="frobenius_squared",
                   action="store_const", const=True, default=None,
                   help="use the squared Frobenius penalty")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="rank candidate translations")
    _add_common(p)
    _add_embeddings(p)
    p.add_argument("--model", help="trained model file")
    p.add_argument("--top-n", "-n", dest="top_n", type=int,
                   help="list length (default 10)")
    p.add_argument("--words-file", dest="words_file",
                   help="file of words to translate")
    p.add_argument("word", nargs="*", help="words to translate")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("eval", help="precision@k against a dictionary")
    _add_common(p)
    _add_embeddings(p)
    p.add_argument("--model", help="trained model file")
    p.add_argument("--dict", dest="dict", help="gold dictionary file")
    p.add_argument("--ks", help="comma-separated k values (default 1)")
    p.add_argument("--out", help="write the report here as well")
    p.add_argument("--include-ranks", dest="include_ranks",
                   action="store_const", const=True, default=None,
                   help="append per-type ranks to the report file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("markup", help="annotate OOVs with decoder markup")
    _add_common(p)
    _add_embeddings(p)
    p.add_argument("--model", help="trained model file (bwe_* policies)")
    p.add_argument("--corpus", help="tokenized corpus, one sentence per line")
    p.add_argument("--vocab", help="system vocabulary, one token per line")
    p.add_argument("--policy",
                   choices=["none", "verbatim", "bwe_all", "bwe_cw"],
                   help="marking policy (default none)")
    p.add_argument("--top-n", dest="top_n", type=int,
                   help="model options per OOV (default 50)")
    p.add_argument("--no-verbatim-option", dest="add_verbatim_option",
                   action="store_const", const=False, default=None,
                   help="do not append the source token as an option")
    p.add_argument("--tag", help="markup element name (default oov)")
    p.add_argument("--out", help="write marked corpus here (default stdout)")
    p.add_argument("--report-out", dest="report_out",
                   help="write the OOV report here")
    p.set_defaults(func=cmd_markup)

    p = sub.add_parser("oov-scan", help="count OOVs against a vocabulary")
    _add_common(p)
    p.add_argument("--corpus", help="tokenized corpus, one sentence per line")
    p.add_argument("--vocab", help="system vocabulary, one token per line")
    p.add_argument("--out", help="write the report here as well")
    p.set_defaults(func=cmd_oov_scan)

    p = sub.add_parser("export-compressed",
                       help="export aligned low-rank embeddings")
    _add_common(p)
    _add_embeddings(p)
    p.add_argument("--model", help="trained model file")
    p.add_argument("-k", type=int,
                   help="compression rank (default: numerical rank of W)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.set_defaults(func=cmd_export_compressed)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        return args.func(settings)
    except (CliError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
