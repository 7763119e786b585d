"""Operator entry points.

Exit codes: 0 success, 1 usage error, 2 data error, 3 remote failure.
Output files are written atomically, so a failing subcommand never leaves
a partial artifact behind.
"""

from __future__ import annotations

import argparse
import sys

from .config import EngineConfig, load_config
from .corpus import ingest_corpus, tokenize_sids
from .decoder import DecodeConfig
from .dialogue import Engine, RemoteReformulator
from .errors import EvaluatorUnavailable, RemoteUnavailable, SidSearchError
from .estimator import _POLICIES
from .evaluation import load_dialogues, per_turn_csv, run_eval, save_report
from .fm_index import FmIndex
from .lm import train_reference_lm
from .remote import ChatTransport
from .synth import synth_generate
from .tokenizer import Vocab, build_vocab
from .ttr import make_evaluator
from .util import atomic_write_text

USAGE_ERROR = 1
DATA_ERROR = 2
REMOTE_ERROR = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _engine_from_config(cfg: EngineConfig) -> Engine:
    policy = _POLICIES[cfg.sid_policy]
    corpus = ingest_corpus(cfg.corpus_path, policy)
    if cfg.vocab_path:
        vocab = Vocab.load(cfg.vocab_path)
    else:
        vocab = build_vocab(corpus)
    sids = tokenize_sids(corpus.sids, vocab)
    if cfg.index_path:
        index = FmIndex.load(cfg.index_path, vocab_digest=vocab.digest)
    else:
        index = FmIndex.build(sids, vocab)
    model = train_reference_lm(sids, vocab, alpha=cfg.alpha, beta=cfg.beta)
    transport = None
    if cfg.remote.configured():
        transport = ChatTransport(
            base_url=cfg.remote.base_url,
            model=cfg.remote.model,
            api_key=cfg.remote.api_key,
            timeout=cfg.remote.timeout,
            retries=cfg.remote.retries,
        )
    reformulator = None
    if cfg.reformulator == "remote":
        if transport is None:
            raise SidSearchError("remote reformulator configured without remote endpoint settings")
        reformulator = RemoteReformulator(transport, strict=cfg.ttr.strict)
    evaluator = make_evaluator(cfg.ttr, transport=transport) if cfg.ttr.evaluator != "oracle" else None
    return Engine(
        corpus=corpus,
        vocab=vocab,
        sids=sids,
        index=index,
        model=model,
        reformulator=reformulator,
        evaluator=evaluator,
        ttr=cfg.ttr,
        decode=cfg.decode,
    )


def _apply_flag_overrides(cfg: EngineConfig, args) -> EngineConfig:
    # Flags win over the config file, the file wins over defaults.
    if getattr(args, "corpus", None):
        cfg.corpus_path = args.corpus
    if getattr(args, "beam_width", None) is not None:
        cfg.decode = DecodeConfig(
            beam_width=args.beam_width,
            top_b=cfg.decode.top_b,
            max_len=cfg.decode.max_len,
            k_results=cfg.decode.k_results,
        )
    if getattr(args, "top_b", None) is not None:
        cfg.decode = DecodeConfig(
            beam_width=cfg.decode.beam_width,
            top_b=args.top_b,
            max_len=cfg.decode.max_len,
            k_results=cfg.decode.k_results,
        )
    if getattr(args, "max_len", None) is not None:
        cfg.decode = DecodeConfig(
            beam_width=cfg.decode.beam_width,
            top_b=cfg.decode.top_b,
            max_len=args.max_len,
            k_results=cfg.decode.k_results,
        )
    return cfg


def _cmd_index_build(args) -> int:
    corpus = ingest_corpus(args.corpus)
    vocab = build_vocab(corpus)
    sids = tokenize_sids(corpus.sids, vocab)
    index = FmIndex.build(sids, vocab)
    vocab.save(f"{args.out}/vocab.jsonl")
    index.save(f"{args.out}/corpus.fmsid")
    print(f"indexed {corpus.size} products, {len(sids)} sids, {index.size} symbols")
    print(f"wrote {args.out}/vocab.jsonl and {args.out}/corpus.fmsid")
    return 0


def _cmd_retrieve(args) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    cfg.ttr.enabled = args.ttr
    engine = _engine_from_config(cfg)
    from .dialogue import Session, UserInput, post_turn

    session = Session(session_id="cli", decode=cfg.decode, ttr=cfg.ttr)
    turn = post_turn(session, engine, UserInput(user_text=args.query))
    print("rank\tproduct_id\trm_raw\trm_ttr\tbest_sid")
    for r in turn.results:
        print(f"{r.rank}\t{r.product_id}\t{r.rm_raw:.6f}\t{r.rm_ttr:.6f}\t{r.best_sid.text}")
    return 0


def _cmd_eval_run(args) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    engine = _engine_from_config(cfg)
    dialogues = load_dialogues(args.dataset)
    modes = ("raw", "ttr") if args.ttr else ("raw",)
    report = run_eval(
        dialogues,
        engine,
        modes=modes,
        candidate_n=args.candidates,
        seed=args.seed,
    )
    save_report(report, args.report)
    if args.csv:
        atomic_write_text(args.csv, per_turn_csv(report))
    for mode in sorted(report["results"]):
        final = report["results"][mode]["final_turn"]
        print(
            f"{mode}: MRR={final['mrr']:.4f} nDCG@1={final['ndcg@1']:.4f} "
            f"nDCG@5={final['ndcg@5']:.4f} nDCG@10={final['ndcg@10']:.4f}"
        )
    print(f"wrote {args.report}")
    return 0


def _cmd_synth(args) -> int:
    synth_generate(
        seed=args.seed,
        n_products=args.products,
        n_dialogues=args.dialogues,
        turns_per_dialogue=args.turns,
        corpus_path=args.corpus_out,
        dialogue_path=args.dialogues_out,
    )
    print(f"wrote {args.corpus_out} and {args.dialogues_out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = load_config(args.config)
    engine = _engine_from_config(cfg)
    app = create_app(engine, snapshot_dir=cfg.snapshot_dir or None)
    uvicorn.run(app, host=cfg.bind_host, port=cfg.bind_port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sidsearch", description="semantic-ID conversational retrieval engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="index management")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)
    p_build = index_sub.add_parser("build", help="build vocab and FM-index from a corpus")
    p_build.add_argument("--corpus", required=True)
    p_build.add_argument("--out", required=True)
    p_build.set_defaults(fn=_cmd_index_build)

    p_retrieve = sub.add_parser("retrieve", help="one-shot retrieval")
    p_retrieve.add_argument("--query", required=True)
    p_retrieve.add_argument("--config", default=None)
    p_retrieve.add_argument("--corpus", default=None)
    p_retrieve.add_argument("--ttr", action="store_true")
    p_retrieve.add_argument("--beam-width", type=int, dest="beam_width")
    p_retrieve.add_argument("--top-b", type=int, dest="top_b")
    p_retrieve.add_argument("--max-len", type=int, dest="max_len")
    p_retrieve.set_defaults(fn=_cmd_retrieve)

    p_eval = sub.add_parser("eval", help="evaluation runs")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)
    p_run = eval_sub.add_parser("run", help="run the benchmark on a dialogue dataset")
    p_run.add_argument("--dataset", required=True)
    p_run.add_argument("--report", required=True)
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--corpus", default=None)
    p_run.add_argument("--ttr", action="store_true", help="also compute the TTR column")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--candidates", type=int, default=100)
    p_run.add_argument("--csv", default=None, help="optional per-turn CSV export")
    p_run.add_argument("--beam-width", type=int, dest="beam_width")
    p_run.add_argument("--top-b", type=int, dest="top_b")
    p_run.add_argument("--max-len", type=int, dest="max_len")
    p_run.set_defaults(fn=_cmd_eval_run)

    p_synth = sub.add_parser("synth", help="generate a synthetic benchmark fixture")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--products", type=int, default=500)
    p_synth.add_argument("--dialogues", type=int, default=100)
    p_synth.add_argument("--turns", type=int, default=4)
    p_synth.add_argument("--corpus-out", required=True)
    p_synth.add_argument("--dialogues-out", required=True)
    p_synth.set_defaults(fn=_cmd_synth)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--config", required=True)
    p_serve.set_defaults(fn=_cmd_serve)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.fn(args)
    except (RemoteUnavailable, EvaluatorUnavailable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return REMOTE_ERROR
    except (SidSearchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
