"""OpenAI-compatible chat transport shared by the remote LM, the remote
judge, and the remote reformulator.

One transport instance holds the endpoint configuration; each call is a
single POST to /chat/completions with up to ``retries`` attempts and
exponential backoff. Responses pair with requests through the HTTP
request/response cycle itself (plus a correlation id echoed in headers),
never through arrival order, so concurrent in-flight calls are safe.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import httpx

from .errors import RemoteUnavailable

_correlation = itertools.count(1)


@dataclass
class ChatTransport:
    base_url: str
    model: str
    api_key: str = ""
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.5
    client: httpx.Client | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.client is None:
            self.client = httpx.Client(base_url=self.base_url, timeout=self.timeout)

    def _post(self, payload: dict) -> dict:
        headers = {"X-Correlation-Id": str(next(_correlation))}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = self.client.post("/chat/completions", json=payload, headers=headers)
                if response.status_code == 200:
                    return response.json()
                last_error = RemoteUnavailable(f"endpoint returned {response.status_code}")
            except httpx.HTTPError as exc:
                last_error = exc
            if attempt + 1 < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise RemoteUnavailable(f"remote endpoint failed after {self.retries} attempts: {last_error}")

    def complete(self, messages: list[dict], max_tokens: int = 256) -> str:
        data = self._post({"model": self.model, "messages": messages, "max_tokens": max_tokens})
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise RemoteUnavailable("malformed completion response") from None

    def top_logprobs(self, messages: list[dict], top_k: int) -> dict[str, float]:
        """Top-k next-token log-probs for the first generated position."""
        data = self._post(
            {
                "model": self.model,
                "messages": messages,
                "max_tokens": 1,
                "logprobs": True,
                "top_logprobs": top_k,
            }
        )
        try:
            entries = data["choices"][0]["logprobs"]["content"][0]["top_logprobs"]
            return {e["token"]: float(e["logprob"]) for e in entries}
        except (KeyError, IndexError, TypeError, ValueError):
            raise RemoteUnavailable("malformed logprobs response") from None
