"""Constrained beam search over the FM-index.

Every hypothesis carries an index interval, so a partial sequence exists
iff it is a prefix of some in-scope SID; a hypothesis completes only on
the END_SID sentinel, which makes every emission a whole SID record. The
reward of a finished SID is the sum of its per-step log-probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EmptyScope, NonFiniteInput, VocabMismatch
from .fm_index import FmIndex, Interval
from .lm import LmContext
from .tokenizer import END_SID


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 10
    top_b: int = 2  # SIDs kept per product
    max_len: int = 32  # maximum SID tokens
    k_results: int = 10  # top-K products returned per turn

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.top_b > self.beam_width:
            raise ValueError("top_b must not exceed beam_width")

    def as_dict(self) -> dict:
        return {
            "beam_width": self.beam_width,
            "top_b": self.top_b,
            "max_len": self.max_len,
            "k_results": self.k_results,
        }


@dataclass(frozen=True)
class ScoredSid:
    """A decoded semantic ID: the reward is the summed token log-prob."""

    sid_id: int
    product_id: str
    token_ids: tuple[int, ...]
    logprob: float
    step_logprobs: tuple[float, ...] = field(default=(), repr=False)


def sid_logprob(step_logprobs: list[float]) -> float:
    """Sum of per-step log-probabilities (0.0 for the empty product)."""
    for value in step_logprobs:
        if not math.isfinite(value):
            raise NonFiniteInput(f"non-finite step log-probability {value!r}")
    return math.fsum(step_logprobs)


@dataclass(frozen=True)
class _Hypothesis:
    tokens: tuple[int, ...]
    interval: Interval
    logprob: float
    steps: tuple[float, ...]


def build_scoped_index(index: FmIndex, sids, scope: set[str]):
    """Ephemeral sub-index over the SIDs of a candidate product set.

    Cheap at candidate-set scale and keeps interval queries free of any
    document filtering.
    """
    in_scope = [s for s in sids if s.product_id in scope]
    if not in_scope:
        raise EmptyScope("no SIDs for the requested candidate scope")
    sub = FmIndex.build_raw(
        in_scope,
        vocab_size=index.vocab_size,
        vocab_digest=index.vocab_digest,
        occ_stride=index.occ_stride,
        sa_stride=index.sa_stride,
    )
    return sub, in_scope


def generate_sids(
    model,
    index: FmIndex,
    sids,
    query_tokens,
    query_text: str = "",
    scope: set[str] | None = None,
    config: DecodeConfig = DecodeConfig(),
    scoped: tuple[FmIndex, list] | None = None,
) -> list[ScoredSid]:
    """Beam-search the constrained space and return scored SIDs.

    ``sids`` is the tokenized record list ``index`` was built from. A
    candidate ``scope`` restricts decoding to those products through an
    ephemeral sub-index (pass ``scoped`` to reuse a prebuilt one across
    calls). Per product only the ``top_b`` best SIDs are kept; the result
    is sorted by log-prob descending with lexicographic tie-breaks.
    """
    model_digest = getattr(model, "vocab_digest", None)
    if model_digest is not None and model_digest != index.vocab_digest:
        raise VocabMismatch("model and index were built under different vocabularies")

    if scoped is not None:
        active_index, active_sids = scoped
    elif scope is not None:
        active_index, active_sids = build_scoped_index(index, sids, scope)
    else:
        active_index, active_sids = index, sids
    by_sid = {s.sid_id: s for s in active_sids}

    query = tuple(query_tokens)
    beams = [_Hypothesis(tokens=(), interval=active_index.root_interval(), logprob=0.0, steps=())]
    finished: list[tuple[ScoredSid, ...]] = []

    for _ in range(config.max_len + 1):  # +1 admits the END step after max_len tokens
        if not beams:
            break
        candidates: list[_Hypothesis] = []
        for hyp in beams:
            conts = active_index.continuations(hyp.interval)
            if not conts:
                continue
            ctx = LmContext(
                query_tokens=query,
                prefix_tokens=hyp.tokens,
                query_text=query_text,
                prefix_text="",
            )
            logprobs = model.score_next(ctx, set(conts))
            for token in conts:
                step = logprobs[token]
                new = _Hypothesis(
                    tokens=hyp.tokens + (token,),
                    interval=conts[token],
                    logprob=hyp.logprob + step,
                    steps=hyp.steps + (step,),
                )
                if token == END_SID:
                    completed = tuple(
                        ScoredSid(
                            sid_id=sid_id,
                            product_id=by_sid[sid_id].product_id,
                            token_ids=hyp.tokens,
                            logprob=new.logprob,
                            step_logprobs=new.steps,
                        )
                        for sid_id in sorted(active_index.locate(new.interval))
                    )
                    finished.append(completed)
                elif len(new.tokens) <= config.max_len:
                    candidates.append(new)
        # Completed hypotheses live on the finished list and do not occupy
        # beam slots; ties break lexicographically for reproducible output.
        candidates.sort(key=lambda h: (-h.logprob, h.tokens))
        beams = candidates[: config.beam_width]

    emitted = [s for group in finished for s in group]
    kept = _keep_top_b(emitted, config.top_b)
    kept.sort(key=lambda s: (-s.logprob, s.token_ids, s.sid_id))
    return kept


def _keep_top_b(emitted: list[ScoredSid], top_b: int) -> list[ScoredSid]:
    grouped: dict[str, list[ScoredSid]] = {}
    for sid in emitted:
        grouped.setdefault(sid.product_id, []).append(sid)
    kept = []
    for product_id in grouped:
        best = sorted(grouped[product_id], key=lambda s: (-s.logprob, s.sid_id))
        kept.extend(best[:top_b])
    return kept


def group_by_product(sids: list[ScoredSid], top_b: int | None = None) -> dict[str, list[ScoredSid]]:
    """Group by product, sorted by log-prob descending, truncated to top_b.

    Ties within a product break by sid_id ascending.
    """
    grouped: dict[str, list[ScoredSid]] = {}
    for sid in sids:
        grouped.setdefault(sid.product_id, []).append(sid)
    out = {}
    for product_id in sorted(grouped):
        ranked = sorted(grouped[product_id], key=lambda s: (-s.logprob, s.sid_id))
        out[product_id] = ranked[:top_b] if top_b is not None else ranked
    return out
