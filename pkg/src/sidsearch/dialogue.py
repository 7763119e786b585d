"""Multi-turn session management and the per-turn retrieval pipeline.

A turn runs reformulate -> generate_sids -> rerank and appends the result
to the session. Turns are append-only and a failed turn leaves the
session untouched. Image input is carried exclusively as a product
reference resolved to that product's caption; the index only ever sees
text.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources

from .corpus import Corpus
from .decoder import DecodeConfig, generate_sids, group_by_product
from .errors import ProductNotFound, RemoteUnavailable, SessionNotFound, UnresolvedReference
from .fm_index import FmIndex
from .remote import ChatTransport
from .ttr import RankedProduct, RerankBatch, SidCandidate, TtrSettings, make_evaluator, rerank
from .util import atomic_write_text


@dataclass(frozen=True)
class UserInput:
    user_text: str
    ref_product_id: str | None = None


@dataclass
class Turn:
    user_text: str
    ref_product_id: str | None
    inferred_query: str
    results: list[RankedProduct]
    timestamp: float


class BaselineReformulator:
    """Deterministic template: prior inferred queries joined with " | ",
    then the current text, then "ref: <caption>" when a reference is given.
    """

    name = "baseline"

    def reformulate(self, history: list[Turn], current: UserInput, ref_caption: str | None) -> str:
        parts = [turn.inferred_query for turn in history]
        parts.append(current.user_text)
        text = " | ".join(p for p in parts if p)
        if ref_caption:
            text = f"{text} | ref: {ref_caption}"
        return text


class RemoteReformulator:
    """LLM reformulation with the baseline as non-strict fallback."""

    name = "remote"

    def __init__(self, transport: ChatTransport, strict: bool = False):
        self.transport = transport
        self.strict = strict
        self.baseline = BaselineReformulator()
        self.prompt_template = (
            resources.files("sidsearch.prompts").joinpath("reformulate.txt").read_text(encoding="utf-8")
        )

    def reformulate(self, history: list[Turn], current: UserInput, ref_caption: str | None) -> str:
        history_text = "\n".join(f"user: {t.user_text}" for t in history) or "(empty)"
        reference = f"Referenced product: {ref_caption}" if ref_caption else ""
        prompt = self.prompt_template.format(
            history=history_text, current=current.user_text, reference=reference
        )
        try:
            text = self.transport.complete([{"role": "user", "content": prompt}]).strip()
        except RemoteUnavailable:
            if self.strict:
                raise
            return self.baseline.reformulate(history, current, ref_caption)
        if not text:
            if self.strict:
                raise RemoteUnavailable("reformulator returned empty text")
            return self.baseline.reformulate(history, current, ref_caption)
        return text.splitlines()[0].strip()


def reformulate(history: list[Turn], current: UserInput, corpus: Corpus, reformulator=None) -> str:
    """Resolve the reference and produce the inferred query for this turn."""
    ref_caption = None
    if current.ref_product_id:
        try:
            product = corpus.get_product(current.ref_product_id)
        except ProductNotFound:
            raise UnresolvedReference(
                f"referenced product {current.ref_product_id!r} not in corpus"
            ) from None
        ref_caption = product.caption or product.description
    if reformulator is None:
        reformulator = BaselineReformulator()
    return reformulator.reformulate(history, current, ref_caption)


@dataclass
class Session:
    """Dialogue state; config is frozen at creation, turns are append-only."""

    session_id: str
    decode: DecodeConfig
    ttr: TtrSettings
    turns: list[Turn] = field(default_factory=list)

    def snapshot_lines(self) -> list[str]:
        rows = []
        for i, turn in enumerate(self.turns):
            rows.append(
                json.dumps(
                    {
                        "session_id": self.session_id,
                        "turn": i + 1,
                        "user_text": turn.user_text,
                        "ref_product_id": turn.ref_product_id,
                        "inferred_query": turn.inferred_query,
                        "timestamp": turn.timestamp,
                        "results": [
                            {
                                "rank": r.rank,
                                "product_id": r.product_id,
                                "rm_raw": r.rm_raw,
                                "rm_ttr": r.rm_ttr,
                                "best_sid": r.best_sid.text,
                            }
                            for r in turn.results
                        ],
                    },
                    ensure_ascii=False,
                )
            )
        return rows

    def save_snapshot(self, path: str) -> None:
        atomic_write_text(path, "\n".join(self.snapshot_lines()) + "\n")


class Engine:
    """Read-only retrieval state shared by sessions: corpus, index, models."""

    def __init__(self, corpus: Corpus, vocab, sids, index: FmIndex, model,
                 reformulator=None, evaluator=None, ttr: TtrSettings | None = None,
                 decode: DecodeConfig | None = None):
        self.corpus = corpus
        self.vocab = vocab
        self.sids = sids
        self.sids_by_id = {s.sid_id: s for s in sids}
        self.index = index
        self.model = model
        self.reformulator = reformulator
        self.evaluator = evaluator
        self.ttr = ttr or TtrSettings()
        self.decode = decode or DecodeConfig()

    def evaluator_for(self, settings: TtrSettings):
        if self.evaluator is not None:
            return self.evaluator
        return make_evaluator(settings)


def post_turn(
    session: Session,
    engine: Engine,
    user_input: UserInput,
    candidate_scope: set[str] | None = None,
    scoped=None,
) -> Turn:
    """Run the full pipeline for one turn and append it to the session."""
    inferred = reformulate(session.turns, user_input, engine.corpus, engine.reformulator)
    query_tokens = tuple(engine.vocab.encode(inferred))
    sids = generate_sids(
        engine.model,
        engine.index,
        engine.sids,
        query_tokens,
        query_text=inferred,
        scope=candidate_scope,
        config=session.decode,
        scoped=scoped,
    )
    grouped = group_by_product(sids, top_b=session.decode.top_b)
    if grouped:
        text_of = engine.sids_by_id
        batch = RerankBatch(
            products=tuple(
                (
                    pid,
                    tuple(
                        SidCandidate(
                            sid_id=s.sid_id,
                            product_id=pid,
                            text=text_of[s.sid_id].text,
                            logprob=s.logprob,
                        )
                        for s in group
                    ),
                )
                for pid, group in grouped.items()
            ),
            query=inferred,
        )
        ranked = rerank(
            batch,
            evaluator=engine.evaluator_for(session.ttr),
            ttr_enabled=session.ttr.enabled,
            parallelism=session.ttr.parallelism,
        )[: session.decode.k_results]
    else:
        ranked = []
    turn = Turn(
        user_text=user_input.user_text,
        ref_product_id=user_input.ref_product_id,
        inferred_query=inferred,
        results=ranked,
        timestamp=time.time(),
    )
    session.turns.append(turn)
    return turn


class SessionStore:
    """In-memory session registry with optional JSONL snapshots."""

    def __init__(self, snapshot_dir: str | None = None):
        self._sessions: dict[str, Session] = {}
        self.snapshot_dir = snapshot_dir
        self._counter = 0

    def create(self, decode: DecodeConfig, ttr: TtrSettings) -> Session:
        self._counter += 1
        session = Session(session_id=f"s{self._counter:06d}", decode=decode, ttr=ttr)
        self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionNotFound(f"session {session_id!r} not found") from None

    def snapshot(self, session: Session) -> None:
        if self.snapshot_dir:
            session.save_snapshot(f"{self.snapshot_dir}/{session.session_id}.jsonl")
