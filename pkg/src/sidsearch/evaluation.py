"""Dataset loading, candidate sets, ranking metrics, and evaluation runs.

Each dialogue targets a single product, so MRR and nDCG reduce to closed
forms of the target's 1-based rank. A run replays every dialogue through
the turn pipeline against a per-dialogue 100-candidate set (target always
included), then aggregates final-turn means plus a per-turn table over
dialogues of one declared length.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import Corpus
from .decoder import DecodeConfig, build_scoped_index
from .dialogue import Engine, Session, UserInput, post_turn
from .errors import DatasetCorpusMismatch, InvalidCutoff, TooFewProducts
from .ttr import TtrSettings
from .util import atomic_write_text, digest_json


def mrr(rank: int | None) -> float:
    """Reciprocal rank; 0 when the target is not ranked."""
    if rank is None:
        return 0.0
    return 1.0 / rank


def ndcg_at_k(rank: int | None, k: int) -> float:
    """Single-relevant nDCG: 1/log2(1+rank) inside the cutoff, else 0."""
    if k < 1:
        raise InvalidCutoff(f"cutoff must be >= 1, got {k}")
    if rank is None or rank > k:
        return 0.0
    return 1.0 / math.log2(1 + rank)


@dataclass(frozen=True)
class EvalTurn:
    user_text: str
    target_product_id: str
    ref_product_id: str | None = None


@dataclass(frozen=True)
class EvalDialogue:
    dialogue_id: str
    turns: tuple[EvalTurn, ...]
    candidate_ids: tuple[str, ...] | None = None


def load_dialogues(path: str) -> list[EvalDialogue]:
    dialogues = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            turns = tuple(
                EvalTurn(
                    user_text=t["user_text"],
                    target_product_id=t["target_product_id"],
                    ref_product_id=t.get("ref_product_id"),
                )
                for t in obj["turns"]
            )
            candidates = obj.get("candidate_ids")
            dialogues.append(
                EvalDialogue(
                    dialogue_id=str(obj["dialogue_id"]),
                    turns=turns,
                    candidate_ids=tuple(candidates) if candidates else None,
                )
            )
    return dialogues


def validate_dataset(dialogues: list[EvalDialogue], corpus: Corpus) -> None:
    for d in dialogues:
        for turn in d.turns:
            if turn.target_product_id not in corpus.products:
                raise DatasetCorpusMismatch(
                    f"dialogue {d.dialogue_id}: target {turn.target_product_id!r} not in corpus"
                )
        if d.candidate_ids is not None:
            targets = {t.target_product_id for t in d.turns}
            if not targets.issubset(set(d.candidate_ids)):
                raise DatasetCorpusMismatch(
                    f"dialogue {d.dialogue_id}: candidate set is missing a target"
                )


def build_candidate_set(corpus: Corpus, target: str, n: int, seed: int) -> tuple[str, ...]:
    """Target plus n-1 distinct distractors, uniform without replacement.

    Deterministic per (corpus content, target, n, seed).
    """
    if target not in corpus.products:
        raise DatasetCorpusMismatch(f"target {target!r} not in corpus")
    if corpus.size < n:
        raise TooFewProducts(f"need {n} products, corpus has {corpus.size}")
    others = [pid for pid in corpus.products if pid != target]
    rng = random.Random(f"{seed}:{target}:{n}")
    distractors = rng.sample(others, n - 1)
    return tuple([target] + distractors)


@dataclass
class DialogueOutcome:
    dialogue_id: str
    turn_count: int
    ranks: list[int | None]


def _target_rank(results, target: str) -> int | None:
    for r in results:
        if r.product_id == target:
            return r.rank
    return None


def run_dialogue(
    engine: Engine,
    dialogue: EvalDialogue,
    ttr_enabled: bool,
    candidate_n: int,
    seed: int,
) -> DialogueOutcome:
    """Replay one dialogue through post_turn with candidate scoping.

    The candidate set is drawn once per dialogue (seeded by the final
    target) and reused across its turns; the session ranks the full
    candidate set so target ranks are exact.
    """
    final_target = dialogue.turns[-1].target_product_id
    if dialogue.candidate_ids is not None:
        candidates = dialogue.candidate_ids
    else:
        candidates = build_candidate_set(engine.corpus, final_target, candidate_n, seed)
    scope = set(candidates)
    scoped = build_scoped_index(engine.index, engine.sids, scope)

    decode = DecodeConfig(
        beam_width=engine.decode.beam_width,
        top_b=engine.decode.top_b,
        max_len=engine.decode.max_len,
        k_results=len(candidates),
    )
    ttr = TtrSettings(
        enabled=ttr_enabled,
        evaluator=engine.ttr.evaluator,
        parallelism=engine.ttr.parallelism,
        strict=engine.ttr.strict,
    )
    session = Session(session_id=f"eval-{dialogue.dialogue_id}-{'ttr' if ttr_enabled else 'raw'}",
                      decode=decode, ttr=ttr)
    ranks: list[int | None] = []
    for turn in dialogue.turns:
        result = post_turn(
            session,
            engine,
            UserInput(user_text=turn.user_text, ref_product_id=turn.ref_product_id),
            candidate_scope=scope,
            scoped=scoped,
        )
        ranks.append(_target_rank(result.results, turn.target_product_id))
    return DialogueOutcome(dialogue_id=dialogue.dialogue_id, turn_count=len(dialogue.turns), ranks=ranks)


def _mode_report(outcomes: list[DialogueOutcome], per_turn_length: int) -> dict:
    final = [(o.ranks[-1]) for o in outcomes]
    metrics = {
        "mrr": sum(mrr(r) for r in final) / len(final),
        "ndcg@1": sum(ndcg_at_k(r, 1) for r in final) / len(final),
        "ndcg@5": sum(ndcg_at_k(r, 5) for r in final) / len(final),
        "ndcg@10": sum(ndcg_at_k(r, 10) for r in final) / len(final),
    }
    uniform = [o for o in outcomes if o.turn_count == per_turn_length]
    per_turn = []
    for t in range(per_turn_length):
        rs = [o.ranks[t] for o in uniform]
        per_turn.append(
            {
                "turn": t + 1,
                "mrr": sum(mrr(r) for r in rs) / len(rs) if rs else 0.0,
                "dialogues": len(rs),
            }
        )
    return {"final_turn": metrics, "per_turn": per_turn}


def run_eval(
    dialogues: list[EvalDialogue],
    engine: Engine,
    modes: tuple[str, ...] = ("raw",),
    candidate_n: int = 100,
    seed: int = 0,
    per_turn_length: int | None = None,
    runner=None,
    workers: int = 1,
) -> dict:
    """Evaluate the dataset and return the report as a JSON-ready dict.

    ``modes`` selects the TTR columns ("raw", "ttr", or both). A custom
    ``runner`` with run_dialogue's signature substitutes the pipeline for
    fixture-driven tests. Dialogues may be evaluated concurrently
    (``workers``); outcomes are keyed by dialogue order, so the report is
    identical at any parallelism level and carries enough metadata
    (config digest, seed, TTR flags) to reproduce it bit for bit.
    """
    if not dialogues:
        raise DatasetCorpusMismatch("empty dataset")
    if engine is not None:
        validate_dataset(dialogues, engine.corpus)
    if per_turn_length is None:
        per_turn_length = Counter(len(d.turns) for d in dialogues).most_common(1)[0][0]
    run = runner or run_dialogue

    report_modes = {}
    for mode in modes:
        ttr_enabled = mode == "ttr"
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(
                    pool.map(lambda d: run(engine, d, ttr_enabled, candidate_n, seed), dialogues)
                )
        else:
            outcomes = [run(engine, d, ttr_enabled, candidate_n, seed) for d in dialogues]
        report_modes[mode] = _mode_report(outcomes, per_turn_length)

    config_digest = digest_json(
        {
            "decode": engine.decode.as_dict() if engine else None,
            "ttr": engine.ttr.as_dict() if engine else None,
            "candidate_n": candidate_n,
            "per_turn_length": per_turn_length,
            "modes": sorted(modes),
        }
    )
    return {
        "metadata": {
            "seed": seed,
            "dialogues": len(dialogues),
            "candidate_n": candidate_n,
            "per_turn_length": per_turn_length,
            "modes": sorted(modes),
            "config_digest": config_digest,
        },
        "results": report_modes,
    }


def report_to_json(report: dict) -> str:
    """Canonical serialization; identical runs produce identical bytes."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_report(report: dict, path: str) -> None:
    atomic_write_text(path, report_to_json(report))


def per_turn_csv(report: dict) -> str:
    """CSV export of the per-turn table, one row per (mode, turn)."""
    lines = ["mode,turn,mrr,dialogues"]
    for mode in sorted(report["results"]):
        for row in report["results"][mode]["per_turn"]:
            lines.append(f"{mode},{row['turn']},{row['mrr']:.6f},{row['dialogues']}")
    return "\n".join(lines) + "\n"
