"""Scoring models for constrained generation.

Two implementations share one contract, ``score_next``: given the inferred
query and the SID prefix generated so far, return log-probabilities over
exactly the allowed next tokens (masked then renormalized, standard
logits-processor semantics).

* ``BigramLm`` is the deterministic reference model: add-alpha smoothed
  bigram counts over SID token sequences plus a query-affinity bonus.
* ``RemoteLm`` asks an OpenAI-compatible endpoint for top-k token
  log-probs and maps them onto the word-level alphabet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EmptyAllowedSet, EmptyCorpus
from .remote import ChatTransport
from .tokenizer import END_SID, Vocab

BOS = -1  # internal predecessor state for the first token of a SID

# Allowed tokens the remote endpoint did not mention get this log-prob
# before renormalization, preserving constraint feasibility.
REMOTE_FLOOR_LOGPROB = -20.0


@dataclass(frozen=True)
class LmContext:
    """Conditioning for one decoding step."""

    query_tokens: tuple[int, ...]
    prefix_tokens: tuple[int, ...]
    query_text: str = ""
    prefix_text: str = ""
    scope_note: str = ""

    def __post_init__(self):
        if END_SID in self.prefix_tokens:
            raise ValueError("prefix must not contain the END_SID sentinel")


@dataclass(frozen=True)
class TokenLogProbs:
    """Distribution over an allowed token set; values sum to 1 in prob space."""

    entries: dict[int, float]

    def __getitem__(self, token: int) -> float:
        return self.entries[token]


def renormalize(raw_scores: dict[int, float]) -> TokenLogProbs:
    """Log-softmax over the allowed set."""
    mx = max(raw_scores.values())
    lse = mx + math.log(sum(math.exp(v - mx) for v in raw_scores.values()))
    return TokenLogProbs({t: v - lse for t, v in raw_scores.items()})


class BigramLm:
    """Query-conditioned bigram reference model.

    Raw score before masking:
        score(t | prev, q) = log((count(prev,t) + alpha) / (count(prev) + alpha*V))
                             + beta * 1[t in q]
    Transitions into END_SID are counted, so SID termination is learned
    from the data like any other token.
    """

    def __init__(self, bigrams: dict[int, dict[int, int]], vocab_size: int,
                 alpha: float, beta: float, vocab_digest: str):
        self.bigrams = bigrams
        self.context_totals = {prev: sum(nxt.values()) for prev, nxt in bigrams.items()}
        self.vocab_size = vocab_size
        self.alpha = alpha
        self.beta = beta
        self.vocab_digest = vocab_digest

    def raw_score(self, prev: int, token: int, query_tokens: tuple[int, ...]) -> float:
        count = self.bigrams.get(prev, {}).get(token, 0)
        total = self.context_totals.get(prev, 0)
        score = math.log((count + self.alpha) / (total + self.alpha * self.vocab_size))
        if token in query_tokens:
            score += self.beta
        return score

    def score_next(self, ctx: LmContext, allowed: set[int]) -> TokenLogProbs:
        if not allowed:
            raise EmptyAllowedSet("score_next needs at least one allowed token")
        prev = ctx.prefix_tokens[-1] if ctx.prefix_tokens else BOS
        query = set(ctx.query_tokens)
        raw = {t: self.raw_score(prev, t, tuple(query)) for t in sorted(allowed)}
        return renormalize(raw)


def train_reference_lm(sids, vocab: Vocab, alpha: float = 0.1, beta: float = 2.0) -> BigramLm:
    """Count bigrams over tokenized SID records (BOS -> t0, ..., t_last -> END)."""
    records = list(sids)
    if not records:
        raise EmptyCorpus("cannot train the reference model on an empty corpus")
    bigrams: dict[int, dict[int, int]] = {}
    for s in records:
        seq = (BOS,) + tuple(s.token_ids) + (END_SID,)
        for prev, nxt in zip(seq, seq[1:]):
            slot = bigrams.setdefault(prev, {})
            slot[nxt] = slot.get(nxt, 0) + 1
    return BigramLm(bigrams, vocab.size, alpha, beta, vocab.digest)


class UniformLm:
    """Equal probability over the allowed set; handy for exact oracles."""

    vocab_digest = None

    def score_next(self, ctx: LmContext, allowed: set[int]) -> TokenLogProbs:
        if not allowed:
            raise EmptyAllowedSet("score_next needs at least one allowed token")
        p = -math.log(len(allowed))
        return TokenLogProbs({t: p for t in sorted(allowed)})


@dataclass
class RemoteLm:
    """Propose-mode client for an OpenAI-compatible chat endpoint.

    Requests top-k token log-probs for the continuation prompt, keeps the
    whole-word matches that fall inside the allowed set, floors the rest,
    and renormalizes. Failures surface as RemoteUnavailable after the
    transport's retries; there is no silent fallback.
    """

    transport: ChatTransport
    vocab: Vocab
    top_k: int = 20
    vocab_digest: str = field(init=False)

    def __post_init__(self):
        self.vocab_digest = self.vocab.digest

    def _prompt(self, ctx: LmContext) -> list[dict]:
        system = (
            "You complete product descriptions one word at a time. "
            "Reply with the single next word only."
        )
        user = f"Query: {ctx.query_text}\n"
        if ctx.scope_note:
            user += f"Candidates: {ctx.scope_note}\n"
        user += f"Description so far: {ctx.prefix_text}\nNext word:"
        return [{"role": "system", "content": system}, {"role": "user", "content": user}]

    def score_next(self, ctx: LmContext, allowed: set[int]) -> TokenLogProbs:
        if not allowed:
            raise EmptyAllowedSet("score_next needs at least one allowed token")
        top = self.transport.top_logprobs(self._prompt(ctx), self.top_k)
        raw = {t: REMOTE_FLOOR_LOGPROB for t in allowed}
        for word, logprob in top.items():
            token = self.vocab.symbol_to_id.get(word.strip().lower())
            if token in raw:
                raw[token] = max(raw[token], logprob)
        return renormalize(raw)
