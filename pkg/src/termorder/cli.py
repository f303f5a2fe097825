"""Command-line driver: indexing, batch retrieval, evaluation and analyses.

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import axioms, evaluation, plm, sdm, synthetic
from .evaluation import EvalFormatError
from .index import IndexFormatError, PositionalIndex, build_index
from .sito import Sito
from .text import STOPWORDS, CorpusFormatError, Pipeline, read_corpus, read_topics

log = logging.getLogger("termorder")

MODELS = ("sdm", "sdm-m", "plm", "plm-m")

# Every tunable, with its type and default.  Flags override the config
# file, which overrides these.
DEFAULTS = {
    "mu": (float, 2500.0),
    "window": (int, 4),
    "lambda_t": (float, 0.85),
    "lambda_o": (float, 0.10),
    "lambda_u": (float, 0.05),
    "lambda_ow": (float, 0.05),
    "unordered_span": (int, 8),
    "sigma": (float, 175.0),
    "plm_lambda": (float, 4.0),
    "k": (int, 1000),
    "tag": (str, "termorder"),
    "threads": (int, 1),
    "seed": (int, 0),
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    config = {key: default for key, (_, default) in DEFAULTS.items()}
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            if key in DEFAULTS:
                try:
                    config[key] = DEFAULTS[key][0](value)
                except ValueError:
                    raise UsageError(f"bad value for {key}: {value!r}") from None
            else:
                config[key] = value
    for key, value in vars(args).items():
        if value is not None and key not in ("func", "config"):
            config[key] = value
    return config


def sdm_params(config) -> sdm.SdmParams:
    return sdm.SdmParams(config["lambda_t"], config["lambda_o"], config["lambda_u"], config["lambda_ow"],
                         config["mu"], config["window"], config["unordered_span"])


def plm_params(config) -> plm.PlmParams:
    return plm.PlmParams(config["mu"], config["sigma"], config["plm_lambda"], config["window"])


def report_header(config, index: PositionalIndex | None = None) -> list[str]:
    lines = [f"config {k}={config[k]}" for k in sorted(config) if not callable(config[k])]
    if index is not None:
        lines.append(f"index_manifest_sha256={index.manifest_hash}")
    lines.append(f"generated={datetime.now(timezone.utc).isoformat(timespec='seconds')}")
    return lines


def _load_index(path) -> PositionalIndex:
    if path is None:
        raise UsageError("--index is required")
    return PositionalIndex.load(path)


def _pipeline_for(index: PositionalIndex) -> Pipeline:
    stop = STOPWORDS if index.meta.get("stopwords") else None
    return Pipeline(index.vocab, stop)


def _write(text: str, output) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------


def cmd_build_index(config) -> int:
    stop = STOPWORDS if config.get("stopwords") else None
    pipeline = Pipeline(stopwords=stop)
    docs = read_corpus(config["corpus"], config["format"], pipeline, workers=config["threads"])
    try:
        index = build_index(docs, pipeline.vocab)
    except IndexFormatError as exc:
        raise DataError(str(exc)) from exc
    digest = index.save(config["index"], meta={"stopwords": bool(stop), "format": config["format"]})
    print(f"docs={index.num_docs} tokens={index.total_tokens} vocab={len(index.vocab)} manifest={digest}")
    return 0


def search(index: PositionalIndex, queries, model: str, config, neutral=False, threads=1):
    """Rank every query; returns ``{query_id: [ScoredDoc, ...]}`` in topic order."""
    k = config["k"]

    def one(query):
        if not query.terms:
            log.warning("topic %s is empty after analysis; skipped", query.query_id)
            return query.query_id, None
        if model in ("sdm", "sdm-m"):
            variant = "sdm" if model == "sdm" else "sdm_m"
            return query.query_id, sdm.rank(index, query.terms, sdm_params(config), k, variant, neutral)
        variant = "plm" if model == "plm" else "plm_m"
        return query.query_id, plm.rank(index, query.terms, plm_params(config), k, variant)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ranked = list(pool.map(one, queries))
    else:
        ranked = [one(q) for q in queries]
    return {qid: docs for qid, docs in ranked if docs is not None}


def cmd_batch_search(config) -> int:
    index = _load_index(config.get("index"))
    queries = read_topics(config["topics"], _pipeline_for(index))
    results = search(index, queries, config["model"], config, config.get("neutral_order_weights", False),
                     config["threads"])
    output = config.get("output")
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            evaluation.write_run(fh, results, config["tag"])
        Path(f"{output}.config").write_text(
            "".join(f"# {h}\n" for h in report_header(config, index)), encoding="utf-8")
    else:
        evaluation.write_run(sys.stdout, results, config["tag"])
    return 0


def cmd_eval(config) -> int:
    qrels = evaluation.read_qrels(config["qrels"])
    report = evaluation.evaluate_run(evaluation.read_run(config["run"]), qrels)
    if config.get("baseline"):
        baseline = evaluation.evaluate_run(evaluation.read_run(config["baseline"]), qrels)
        evaluation.compare(report, baseline)
    _write(evaluation.format_eval(report, report_header(config)), config.get("output"))
    return 0


def cmd_analyze_order(config) -> int:
    index = _load_index(config.get("index"))
    queries = read_topics(config["topics"], _pipeline_for(index))
    qrels = evaluation.read_qrels(config["qrels"])
    report = evaluation.order_association(queries, qrels, index, config["order_window"])
    _write(evaluation.format_order_association(report, index.vocab, report_header(config, index)),
           config.get("output"))
    if config.get("pairs"):
        sito = Sito(index, config["window"])
        lines = ["term_a\tterm_b\tDf_ab\tDf_ba\tsem"]
        seen = set()
        for q in queries:
            for i, a in enumerate(q.terms):
                for b in q.terms[i + 1:]:
                    if a != b and (a, b) not in seen:
                        seen.add((a, b))
                        lines.append(f"{index.vocab.term(a)}\t{index.vocab.term(b)}"
                                     f"\t{sito.df(a, b)}\t{sito.df(b, a)}\t{sito.sem(a, b):.6f}")
        Path(config["pairs"]).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_check_axioms(config) -> int:
    if config.get("synthetic"):
        corpus = synthetic.order_corpus(config["seed"])
        index = None
    else:
        index = _load_index(config.get("index"))
        corpus = axioms.corpus_from_index(index, config["seed"], window=config["window"])
    scorers = axioms.default_scorers(sdm_params(config), plm_params(config), config["models"])
    gaps = config["gaps"] if config.get("gaps") is not None else list(range(config["window"]))
    padded = (True, False) if config.get("verbose") else (True,)
    report = axioms.run_suite(scorers, corpus, config["trials"], gaps, config["seed"], config["window"],
                              padded=padded)
    header = "".join(f"# {h}\n" for h in report_header(config, index))
    if config.get("output"):
        Path(config["output"]).write_text(header + report.to_tsv(), encoding="utf-8")
    sys.stdout.write(header + report.to_text())
    return 0


def sweep_values(param: str, values) -> list:
    if values:
        return values
    if param == "window":
        return list(range(2, 16))
    return [0.5, 1.0, 2.0, 4.0, 8.0]


def cmd_sweep(config) -> int:
    index = _load_index(config.get("index"))
    queries = read_topics(config["topics"], _pipeline_for(index))
    qrels = evaluation.read_qrels(config["qrels"])
    param = config["param"]
    key = {"window": "window", "lambda": "plm_lambda"}[param]
    rows = []
    for value in sweep_values(param, config.get("values")):
        run_config = dict(config, **{key: int(value) if key == "window" else float(value)})
        results = search(index, queries, config["model"], run_config, threads=config["threads"])
        run = {qid: [evaluation.RunEntry(sd.external_id, r, sd.score, config["tag"])
                     for r, sd in enumerate(docs, 1)] for qid, docs in results.items()}
        report = evaluation.evaluate_run(run, qrels)
        rows.append((run_config[key], report.map, report.p10))
    lines = [f"# {h}" for h in report_header(config, index)]
    lines.append(f"{param}\tMAP\tP@10")
    lines += [f"{v}\t{m:.6f}\t{p:.6f}" for v, m, p in rows]
    _write("\n".join(lines) + "\n", config.get("output"))
    return 0


def cmd_make_synthetic(config) -> int:
    collection = synthetic.retrieval_collection(config["seed"], config["docs"], config["queries"])
    paths = collection.write(config["out"])
    for name, path in paths.items():
        print(f"{name}={path}")
    return 0


# -- argument parsing --------------------------------------------------


def _add_params(p, names):
    for name in names:
        typ, default = DEFAULTS[name]
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, type=typ, default=None, help=f"(default {default})")


RANK_PARAMS = ("mu", "window", "lambda_t", "lambda_o", "lambda_u", "lambda_ow", "unordered_span",
               "sigma", "plm_lambda", "threads")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="termorder", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--log-level", default="WARNING", dest="log_level")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key=value parameter file")
        p.set_defaults(func=func)
        return p

    p = command("build-index", cmd_build_index, "tokenize, stem and index a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("trec_text", "lines"), default="trec_text")
    p.add_argument("--index", required=True)
    p.add_argument("--stopwords", action="store_true", default=None)
    _add_params(p, ("threads",))

    p = command("batch-search", cmd_batch_search, "rank topics and write a TREC run")
    p.add_argument("--index")
    p.add_argument("--topics", required=True)
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--neutral-order-weights", action="store_true", default=None,
                   help="testing aid: force g = h = 1 in sdm-m")
    _add_params(p, RANK_PARAMS + ("k", "tag"))

    p = command("eval", cmd_eval, "MAP and P@10 of a run, optionally against a baseline")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--baseline")
    p.add_argument("--output", "-o")

    p = command("analyze-order", cmd_analyze_order, "relevance vs query term order")
    p.add_argument("--index")
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--order-window", dest="order_window", type=int, default=5)
    p.add_argument("--pairs", help="also write per-pair Df and SITO values to this TSV")
    p.add_argument("--output", "-o")
    _add_params(p, ("window",))

    p = command("check-axioms", cmd_check_axioms, "check the term-order constraint")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--index")
    src.add_argument("--synthetic", action="store_true", default=None)
    p.add_argument("--models", nargs="+", choices=MODELS, default=list(MODELS))
    p.add_argument("--trials", type=int, default=120)
    p.add_argument("--gaps", type=int, nargs="+")
    p.add_argument("--verbose", action="store_true", default=None, help="also run without the pad token")
    p.add_argument("--output", "-o", help="TSV trial log")
    _add_params(p, RANK_PARAMS + ("seed",))

    p = command("sweep", cmd_sweep, "MAP over a window or lambda grid")
    p.add_argument("--index")
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--param", choices=("window", "lambda"), required=True)
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--output", "-o")
    _add_params(p, RANK_PARAMS + ("k", "tag"))

    p = command("make-synthetic", cmd_make_synthetic, "write a synthetic corpus, topics and qrels")
    p.add_argument("--out", required=True)
    p.add_argument("--docs", type=int, default=1000)
    p.add_argument("--queries", type=int, default=20)
    _add_params(p, ("seed",))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    func = args.func
    del args.log_level, args.command
    try:
        config = resolve_config(args)
        return func(config)
    except UsageError as exc:
        print(f"termorder: {exc}", file=sys.stderr)
        return 1
    except (DataError, CorpusFormatError, IndexFormatError, EvalFormatError, OSError, ValueError) as exc:
        print(f"termorder: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
