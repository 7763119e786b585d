"""Engine configuration: TOML file plus environment overrides.

Remote-LLM credentials come from the environment (SIDSEARCH_API_KEY and
friends) so config files stay checkable into version control.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .decoder import DecodeConfig
from .ttr import TtrSettings
from .util import digest_json


@dataclass
class RemoteSettings:
    base_url: str = ""
    model: str = ""
    api_key: str = ""
    timeout: float = 30.0
    retries: int = 3

    def configured(self) -> bool:
        return bool(self.base_url and self.model)


@dataclass
class EngineConfig:
    corpus_path: str = ""
    index_path: str = ""
    vocab_path: str = ""
    snapshot_dir: str = ""
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    sid_policy: str = "default"
    alpha: float = 0.1
    beta: float = 2.0
    reformulator: str = "baseline"  # baseline | remote
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    ttr: TtrSettings = field(default_factory=TtrSettings)
    remote: RemoteSettings = field(default_factory=RemoteSettings)

    def digest(self) -> str:
        return digest_json(
            {
                "sid_policy": self.sid_policy,
                "alpha": self.alpha,
                "beta": self.beta,
                "reformulator": self.reformulator,
                "decode": self.decode.as_dict(),
                "ttr": self.ttr.as_dict(),
            }
        )


def load_config(path: str | None = None, env: dict | None = None) -> EngineConfig:
    env = os.environ if env is None else env
    data: dict = {}
    if path:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)

    decode_data = data.get("decode", {})
    ttr_data = data.get("ttr", {})
    remote_data = data.get("remote", {})
    cfg = EngineConfig(
        corpus_path=data.get("corpus_path", ""),
        index_path=data.get("index_path", ""),
        vocab_path=data.get("vocab_path", ""),
        snapshot_dir=data.get("snapshot_dir", ""),
        bind_host=data.get("bind_host", "127.0.0.1"),
        bind_port=int(data.get("bind_port", 8080)),
        sid_policy=data.get("sid_policy", "default"),
        alpha=float(data.get("alpha", 0.1)),
        beta=float(data.get("beta", 2.0)),
        reformulator=data.get("reformulator", "baseline"),
        decode=DecodeConfig(
            beam_width=int(decode_data.get("beam_width", 10)),
            top_b=int(decode_data.get("top_b", 2)),
            max_len=int(decode_data.get("max_len", 32)),
            k_results=int(decode_data.get("k_results", 10)),
        ),
        ttr=TtrSettings(
            enabled=bool(ttr_data.get("enabled", True)),
            evaluator=ttr_data.get("evaluator", "lexical"),
            parallelism=int(ttr_data.get("parallelism", 8)),
            strict=bool(ttr_data.get("strict", False)),
        ),
        remote=RemoteSettings(
            base_url=remote_data.get("base_url", ""),
            model=remote_data.get("model", ""),
            api_key=remote_data.get("api_key", ""),
            timeout=float(remote_data.get("timeout", 30.0)),
            retries=int(remote_data.get("retries", 3)),
        ),
    )
    # Environment wins for credentials and endpoint coordinates.
    cfg.remote.base_url = env.get("SIDSEARCH_BASE_URL", cfg.remote.base_url)
    cfg.remote.model = env.get("SIDSEARCH_MODEL", cfg.remote.model)
    cfg.remote.api_key = env.get("SIDSEARCH_API_KEY", cfg.remote.api_key)
    return cfg
