"""Chat-completion gateway: prompt templates, providers, response parsing.

The three prompt templates are fixed text; substitution never alters the
surrounding wording (tests byte-diff rendered prompts against golden
files). Tests run on the scripted provider; the remote provider shares
its HTTP config shape with the remote embedder.
"""

from __future__ import annotations

import logging
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

from .embedding import RemoteProviderConfig
from .errors import (
    EmptyTranslationError,
    FixtureError,
    TransportError,
    ValidationError,
)
from .mappings import ApiMappingRecord
from .model import ApiSequence, Language, TranslationTask, serialize_sequence

logger = logging.getLogger(__name__)

END_OF_CODE = "|End-of-Code|"

PROMPT1_TEMPLATE = """### Unformatted source code
{source_code}

Translate the above {source_lang} code to {target_lang}. Print only the {target_lang} code, end with comment "|End-of-Code|"."""

PROMPT2_TEMPLATE = """Please provide a detailed mapping of {target_lang} API sequence to their {source_lang} equivalents.

### Target Api sequence
{target_apis}"""

PROMPT3_TEMPLATE = """### Source to Target API Mappings
{api_mappings}

Below is the input source code written in {source_lang} that you should re-write into {target_lang} programming language. Use the {source_lang} to {target_lang} API Mappings and API Sequence above as references. Give me only the translated {target_lang} code. Do not add explanations, comments, annotations, or anything else.

### Unformatted Source Code
{source_code}"""


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValidationError(f"bad message role: {self.role!r}")
        if not self.content:
            raise ValidationError("message content must be non-empty")

    def to_json_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}

    @classmethod
    def from_json_dict(cls, doc: dict[str, str]) -> "Message":
        return cls(role=doc["role"], content=doc["content"])


class Conversation:
    """Append-only message history; roles must alternate after any system prefix."""

    def __init__(self, messages: Sequence[Message] = ()):
        self._messages: list[Message] = []
        for message in messages:
            self.append(message)

    def append(self, message: Message) -> None:
        if self._messages and message.role != "system":
            last = self._messages[-1]
            if last.role == message.role:
                raise ValidationError(f"two consecutive {message.role!r} messages")
        elif self._messages and message.role == "system":
            raise ValidationError("system messages must come first")
        self._messages.append(message)

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    def __len__(self) -> int:
        return len(self._messages)

    def to_json_list(self) -> list[dict[str, str]]:
        return [m.to_json_dict() for m in self._messages]

    @classmethod
    def from_json_list(cls, docs: Sequence[dict[str, str]]) -> "Conversation":
        return cls([Message.from_json_dict(d) for d in docs])


def render_prompt1(task: TranslationTask) -> Message:
    """The direct-translation prompt."""
    return Message(
        role="user",
        content=PROMPT1_TEMPLATE.format(
            source_code=task.source_code,
            source_lang=task.source_lang.display_name,
            target_lang=task.target_lang.display_name,
        ),
    )


def render_prompt2(
    target_apis: ApiSequence, source_lang: Language, target_lang: Language
) -> Message:
    """The back-translation prompt for one retrieved target sequence."""
    if not target_apis:
        raise ValidationError("cannot back-translate an empty sequence")
    return Message(
        role="user",
        content=PROMPT2_TEMPLATE.format(
            target_lang=target_lang.display_name,
            source_lang=source_lang.display_name,
            target_apis=serialize_sequence(target_apis),
        ),
    )


def render_mapping_line(record: ApiMappingRecord) -> str:
    targets = ", ".join(record.target_apis) if record.target_apis else "(none)"
    return f"{record.source_api} → {targets} — {record.description} — {record.caveats}"


def render_prompt3(
    history: Conversation,
    mappings: Sequence[ApiMappingRecord],
    task: TranslationTask,
) -> list[Message]:
    """History plus the knowledge-augmented re-translation request.

    The retrieved sequences and their back-translations ride along as the
    recorded Prompt 2 exchanges inside ``history``; only the single-API
    mappings are inlined here.
    """
    if not any(m.role == "assistant" for m in history.messages):
        raise ValidationError("prompt 3 requires the initial translation exchange in history")
    mapping_block = "\n".join(render_mapping_line(r) for r in mappings)
    content = PROMPT3_TEMPLATE.format(
        api_mappings=mapping_block,
        source_lang=task.source_lang.display_name,
        target_lang=task.target_lang.display_name,
        source_code=task.source_code,
    )
    return [*history.messages, Message(role="user", content=content)]


class ChatProvider(Protocol):
    def complete(self, messages: Sequence[Message]) -> str: ...


class ScriptedProvider:
    """Replays canned responses in order; records every request for assertions."""

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._lock = threading.Lock()
        self.requests: list[tuple[Message, ...]] = []

    def complete(self, messages: Sequence[Message]) -> str:
        with self._lock:
            self.requests.append(tuple(messages))
            if not self._responses:
                raise FixtureError("scripted provider has no responses left")
            return self._responses.pop(0)

    @property
    def calls(self) -> int:
        return len(self.requests)


class RoutingScriptedProvider:
    """Scripted provider for batch runs: routes by substring of the last message.

    Each route key is matched against the final user message; the matching
    queue supplies the next response. Keeps concurrent batch tests
    deterministic regardless of scheduling order.
    """

    def __init__(self, routes: dict[str, Sequence[str]]):
        self._routes = {key: list(queue) for key, queue in routes.items()}
        self._lock = threading.Lock()
        self.requests: list[tuple[Message, ...]] = []

    def complete(self, messages: Sequence[Message]) -> str:
        with self._lock:
            self.requests.append(tuple(messages))
            last = messages[-1].content
            for key, queue in self._routes.items():
                if key in last:
                    if not queue:
                        raise FixtureError(f"scripted route {key!r} has no responses left")
                    return queue.pop(0)
            raise FixtureError("no scripted route matches the request")

    @property
    def calls(self) -> int:
        return len(self.requests)


class RemoteChatProvider:
    """OpenAI-style chat-completions client with bounded retries.

    Generation parameters stay at provider defaults on purpose.
    """

    def __init__(self, config: RemoteProviderConfig, session: Any | None = None):
        import requests

        self.config = config
        self._session = session or requests.Session()

    def complete(self, messages: Sequence[Message]) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.config.model_id,
            "messages": [m.to_json_dict() for m in messages],
        }
        headers = {"Authorization": f"Bearer {self.config.api_key()}"}
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = self._session.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout
                )
                if resp.status_code >= 500 or resp.status_code == 429:
                    raise TransportError(f"server returned {resp.status_code}")
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - retry loop surfaces the last error
                last_error = exc
                if attempt < self.config.max_retries:
                    time.sleep(self.config.backoff_seconds * (2**attempt))
        raise TransportError(f"chat request failed after retries: {last_error}")


def complete(messages: Sequence[Message], provider: ChatProvider) -> str:
    """Single completion (first result only) from the given provider."""
    return provider.complete(messages)


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)(?:```|\Z)", re.DOTALL)


def parse_code_response(text: str, language: Language) -> str:
    """Extract code from an LLM response.

    Takes the first fenced block when present, else the whole text; strips
    the end-of-code sentinel and everything after it; trims blank edges.
    """
    m = _FENCE_RE.search(text)
    body = m.group(1) if m else text
    sentinel_at = body.find(END_OF_CODE)
    if sentinel_at != -1:
        body = body[:sentinel_at]
        # drop a trailing comment marker left in front of the sentinel
        body = re.sub(r"(?:#|//)\s*$", "", body.rstrip() + "\n").rstrip() + "\n"
    lines = body.split("\n")
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    code = "\n".join(lines)
    if not code.strip():
        raise EmptyTranslationError("response contained no code")
    return code
