"""Runtime configuration: config file loading and provider construction.

Secrets never appear in config files or flags; providers read API keys
from the environment variable named in their config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .embedding import Embedder, MockEmbedder, RemoteEmbedder, RemoteProviderConfig
from .errors import ConfigurationError
from .llm import ChatProvider, RemoteChatProvider, RoutingScriptedProvider, ScriptedProvider
from .model import Language
from .testkit import ToolchainSpec, default_toolchains


@dataclass
class AppConfig:
    """Merged view of the config file; flag values override these."""

    toolchains: dict[Language, ToolchainSpec] = field(default_factory=default_toolchains)
    chat: RemoteProviderConfig | None = None
    embedding: RemoteProviderConfig | None = None
    k: int = 1
    n: int = 5
    timeout: float = 10.0
    mock_dimension: int = 256
    index_path: str | None = None
    pool_path: str | None = None
    out_dir: str | None = None

    @classmethod
    def load(cls, path: str | Path | None) -> "AppConfig":
        config = cls()
        if path is None:
            return config
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
        for lang_name, spec in doc.get("toolchains", {}).items():
            language = Language.from_name(lang_name)
            config.toolchains[language] = ToolchainSpec(
                language=language,
                file_name=spec["file_name"],
                run_cmd=tuple(spec["run_cmd"]),
                compile_cmd=tuple(spec["compile_cmd"]) if spec.get("compile_cmd") else None,
            )
        providers = doc.get("providers", {})
        if "chat" in providers:
            config.chat = _provider_config(providers["chat"])
        if "embedding" in providers:
            config.embedding = _provider_config(providers["embedding"])
        defaults = doc.get("defaults", {})
        config.k = int(defaults.get("k", config.k))
        config.n = int(defaults.get("n", config.n))
        config.timeout = float(defaults.get("timeout", config.timeout))
        config.mock_dimension = int(defaults.get("mock_dimension", config.mock_dimension))
        paths = doc.get("paths", {})
        config.index_path = paths.get("index", config.index_path)
        config.pool_path = paths.get("pool", config.pool_path)
        config.out_dir = paths.get("out_dir", config.out_dir)
        _validate_paths(config)
        return config


def _validate_paths(config: AppConfig) -> None:
    for label, value in (("index", config.index_path), ("pool", config.pool_path)):
        if value is not None and not Path(value).exists():
            raise ConfigurationError(f"configured {label} path does not exist: {value}")


def _provider_config(doc: dict[str, Any]) -> RemoteProviderConfig:
    try:
        return RemoteProviderConfig(
            base_url=doc["base_url"],
            model_id=doc["model_id"],
            api_key_env=doc.get("api_key_env", "APITRANS_API_KEY"),
            timeout=float(doc.get("timeout", 60.0)),
            max_retries=int(doc.get("max_retries", 3)),
            batch_size=int(doc.get("batch_size", 64)),
        )
    except KeyError as exc:
        raise ConfigurationError(f"provider config missing field: {exc}") from exc


def load_scripted_fixtures(path: str | Path) -> ChatProvider:
    """A scripted provider from a fixture file.

    A JSON array replays responses in order; a JSON object maps routing
    substrings to per-route response queues.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, list):
        return ScriptedProvider(doc)
    if isinstance(doc, dict):
        return RoutingScriptedProvider(doc)
    raise ConfigurationError(f"fixture file {path} must hold a JSON array or object")


def make_embedder(kind: str, config: AppConfig) -> Embedder:
    if kind == "mock":
        return MockEmbedder(dimension=config.mock_dimension)
    if kind == "remote":
        if config.embedding is None:
            raise ConfigurationError(
                "remote embedder requested but no providers.embedding config present"
            )
        return RemoteEmbedder(config.embedding)
    raise ConfigurationError(f"unknown embedder kind: {kind!r}")


def make_chat_provider(
    kind: str, config: AppConfig, fixtures: str | Path | None = None
) -> ChatProvider:
    if kind == "scripted":
        if fixtures is None:
            raise ConfigurationError("scripted provider requires --fixtures")
        return load_scripted_fixtures(fixtures)
    if kind == "remote":
        if config.chat is None:
            raise ConfigurationError(
                "remote chat provider requested but no providers.chat config present"
            )
        return RemoteChatProvider(config.chat)
    raise ConfigurationError(f"unknown llm kind: {kind!r}")
