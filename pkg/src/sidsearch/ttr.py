"""Test-time reranking: rescale generation rewards by evaluator confidence.

For a batch of candidate products with decoded SIDs, the raw rewards are
min-max normalized jointly over the whole batch, each SID gets one
evaluator confidence in [0, 1], and the adjusted score is the product of
the two. A product is scored by the maximum adjusted score over its SIDs
and the batch is sorted descending. The evaluator step is embarrassingly
parallel (one call per SID), bounded by ``parallelism``.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

from .errors import EmptyBatch, EmptyInput, EvaluatorUnavailable, NonFiniteInput
from .remote import ChatTransport
from .tokenizer import normalize

logger = logging.getLogger(__name__)

_DECIMAL_RE = re.compile(r"(?<![\w.])(?:0(?:\.\d+)?|1(?:\.0+)?)(?![\w.])")


@dataclass(frozen=True)
class EvaluatorVerdict:
    confidence: float  # clamped to [0, 1]
    rationale: str = ""

    def __post_init__(self):
        object.__setattr__(self, "confidence", min(1.0, max(0.0, self.confidence)))


@dataclass(frozen=True)
class SidCandidate:
    sid_id: int
    product_id: str
    text: str
    logprob: float


@dataclass(frozen=True)
class RerankBatch:
    """Candidate products with their decoded SIDs for one query."""

    products: tuple[tuple[str, tuple[SidCandidate, ...]], ...]
    query: str

    @property
    def a_products(self) -> int:
        return len(self.products)

    @property
    def b_max_sids(self) -> int:
        return max((len(sids) for _, sids in self.products), default=0)


@dataclass(frozen=True)
class RankedProduct:
    product_id: str
    best_sid: SidCandidate
    rm_raw: float  # max raw log-prob over the product's SIDs
    rm_ttr: float  # max adjusted score over the product's SIDs, in [0, 1]
    rank: int  # 1-based


def minmax_normalize(scores: list[float]) -> list[float]:
    """Scale to [0, 1], order preserving; all-equal input maps to all 1.0.

    The degenerate case keeps the multiplicative adjusted score defined
    (the evaluator alone decides) instead of dividing by zero.
    """
    if not scores:
        raise EmptyInput("minmax_normalize needs at least one score")
    for s in scores:
        if not math.isfinite(s):
            raise NonFiniteInput(f"non-finite score {s!r}")
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [1.0] * len(scores)
    span = hi - lo
    return [(s - lo) / span for s in scores]


def evaluate_lexical(sid_text: str, query_text: str) -> EvaluatorVerdict:
    """Token-level F1 between the normalized token multisets."""
    sid_tokens = Counter(normalize(sid_text))
    query_tokens = Counter(normalize(query_text))
    if not sid_tokens or not query_tokens:
        return EvaluatorVerdict(0.0, "empty side")
    overlap = sum((sid_tokens & query_tokens).values())
    if overlap == 0:
        return EvaluatorVerdict(0.0, "no overlap")
    precision = overlap / sum(sid_tokens.values())
    recall = overlap / sum(query_tokens.values())
    f1 = 2 * precision * recall / (precision + recall)
    return EvaluatorVerdict(f1, f"P={precision:.3f} R={recall:.3f}")


class LexicalEvaluator:
    """Deterministic stand-in for a remote judge."""

    name = "lexical"

    def judge(self, sid_text: str, query_text: str, product_id: str = "") -> EvaluatorVerdict:
        return evaluate_lexical(sid_text, query_text)


class ConstantEvaluator:
    name = "constant"

    def __init__(self, confidence: float = 1.0):
        self.confidence = confidence

    def judge(self, sid_text: str, query_text: str, product_id: str = "") -> EvaluatorVerdict:
        return EvaluatorVerdict(self.confidence)


class OracleEvaluator:
    """Full confidence for the target product's SIDs, near-zero otherwise."""

    name = "oracle"

    def __init__(self, target_product_id: str, low: float = 0.01):
        self.target_product_id = target_product_id
        self.low = low

    def judge(self, sid_text: str, query_text: str, product_id: str = "") -> EvaluatorVerdict:
        if product_id == self.target_product_id:
            return EvaluatorVerdict(1.0, "target")
        return EvaluatorVerdict(self.low)


def load_judge_prompt() -> str:
    return resources.files("sidsearch.prompts").joinpath("judge.txt").read_text(encoding="utf-8")


class RemoteJudgeEvaluator:
    """Asks a chat endpoint for a single decimal confidence in [0, 1].

    Parse failures retry twice, then fall back to the neutral 0.5 with a
    logged warning unless strict mode is configured, in which case
    EvaluatorUnavailable propagates. Neutral fallback avoids silently
    biasing an evaluation run toward 0 or 1.
    """

    name = "remote"

    def __init__(self, transport: ChatTransport, strict: bool = False, parse_retries: int = 2):
        self.transport = transport
        self.strict = strict
        self.parse_retries = parse_retries
        self.prompt_template = load_judge_prompt()

    def judge(self, sid_text: str, query_text: str, product_id: str = "") -> EvaluatorVerdict:
        prompt = self.prompt_template.format(query=query_text, sid=sid_text)
        messages = [{"role": "user", "content": prompt}]
        for _ in range(self.parse_retries + 1):
            text = self.transport.complete(messages, max_tokens=8)
            match = _DECIMAL_RE.search(text)
            if match:
                return EvaluatorVerdict(float(match.group(0)), text.strip())
        if self.strict:
            raise EvaluatorUnavailable(f"judge returned no parseable confidence: {text!r}")
        logger.warning("judge output unparseable after retries; using neutral 0.5")
        return EvaluatorVerdict(0.5, "fallback")


@dataclass
class TtrSettings:
    enabled: bool = True
    evaluator: str = "lexical"  # lexical | constant | oracle | remote
    parallelism: int = 8
    strict: bool = False

    def as_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "evaluator": self.evaluator,
            "parallelism": self.parallelism,
            "strict": self.strict,
        }


def _judge_all(batch: RerankBatch, evaluator, parallelism: int) -> dict[tuple[str, int], float]:
    """One confidence per SID; results keyed, never ordered by completion."""
    items = [(pid, sid) for pid, sids in batch.products for sid in sids]
    if parallelism > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            verdicts = list(
                pool.map(lambda it: evaluator.judge(it[1].text, batch.query, it[0]), items)
            )
    else:
        verdicts = [evaluator.judge(sid.text, batch.query, pid) for pid, sid in items]
    return {(pid, sid.sid_id): v.confidence for (pid, sid), v in zip(items, verdicts)}


def rerank(
    batch: RerankBatch,
    evaluator=None,
    ttr_enabled: bool = True,
    parallelism: int = 8,
) -> list[RankedProduct]:
    """Rank the batch; descending score, ties broken by product_id.

    With TTR enabled, scores are max over SIDs of sigma(logprob) * w_eval,
    where sigma is the joint min-max normalization over every SID in the
    batch. Disabled, products are scored by max raw log-prob (the sigma
    values are still reported, which equals a constant-confidence run).
    """
    if not batch.products:
        raise EmptyBatch("rerank needs at least one candidate product")
    for pid, sids in batch.products:
        if not sids:
            raise EmptyBatch(f"product {pid!r} has no SIDs")

    all_sids = [(pid, sid) for pid, sids in batch.products for sid in sids]
    sigma = minmax_normalize([sid.logprob for _, sid in all_sids])
    sigma_by_key = {(pid, sid.sid_id): s for (pid, sid), s in zip(all_sids, sigma)}

    if ttr_enabled:
        if evaluator is None:
            evaluator = LexicalEvaluator()
        confidence = _judge_all(batch, evaluator, parallelism)
    else:
        confidence = {key: 1.0 for key in sigma_by_key}

    scored = []
    for pid, sids in batch.products:
        adjusted = [sigma_by_key[(pid, s.sid_id)] * confidence[(pid, s.sid_id)] for s in sids]
        rm_ttr = max(adjusted)
        rm_raw = max(s.logprob for s in sids)
        if ttr_enabled:
            best = min(zip(adjusted, sids), key=lambda pair: (-pair[0], pair[1].sid_id))[1]
            sort_score = rm_ttr
        else:
            best = min(sids, key=lambda s: (-s.logprob, s.sid_id))
            sort_score = rm_raw
        scored.append((sort_score, pid, best, rm_raw, rm_ttr))

    scored.sort(key=lambda row: (-row[0], row[1]))
    return [
        RankedProduct(product_id=pid, best_sid=best, rm_raw=rm_raw, rm_ttr=rm_ttr, rank=i)
        for i, (_, pid, best, rm_raw, rm_ttr) in enumerate(scored, start=1)
    ]


def make_evaluator(settings: TtrSettings, transport: ChatTransport | None = None,
                   target_product_id: str = ""):
    if settings.evaluator == "lexical":
        return LexicalEvaluator()
    if settings.evaluator == "constant":
        return ConstantEvaluator()
    if settings.evaluator == "oracle":
        return OracleEvaluator(target_product_id)
    if settings.evaluator == "remote":
        if transport is None:
            raise ValueError("remote evaluator requires a chat transport")
        return RemoteJudgeEvaluator(transport, strict=settings.strict)
    raise ValueError(f"unknown evaluator kind {settings.evaluator!r}")
