"""Language-model clients: a Protocol, scripted replay for tests, and an HTTPS adapter."""
from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import urllib.request
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Protocol, Sequence

ROLES = ("system", "user", "assistant")
API_KEY_ENV = "AUTOTAMP_API_KEY"


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; expected one of {ROLES}")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


Transcript = Sequence[Message]


class LlmError(RuntimeError):
    """A client failure; ``transcript`` is the conversation that triggered it."""

    def __init__(self, message: str, transcript: Transcript = ()):
        super().__init__(message)
        self.transcript = tuple(transcript)


class CacheMiss(LlmError):
    pass


class LlmClient(Protocol):
    def complete(self, transcript: Transcript) -> str: ...

    def score_options(self, transcript: Transcript, options: Sequence[str]) -> list[float]: ...


def transcript_sha256(transcript: Transcript) -> str:
    payload = json.dumps([[m.role, m.content] for m in transcript], ensure_ascii=False,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def scoring_transcript(transcript: Transcript, options: Sequence[str]) -> tuple[Message, ...]:
    """The transcript a scripted client keys ``score_options`` replies on."""
    body = "Score each option:\n" + "\n".join(options)
    return tuple(transcript) + (Message("user", body),)


def parse_scores(text: str, n: int) -> list[float]:
    vals = json.loads(text)
    if not isinstance(vals, list) or len(vals) != n:
        raise ValueError(f"expected a JSON list of {n} scores, got {text[:80]!r}")
    return [float(v) for v in vals]


class ScriptedClient:
    """Replays recorded (transcript hash -> response) pairs; unknown transcripts raise."""

    def __init__(self, entries: Iterable[Mapping[str, str]]):
        table = {}
        for e in entries:
            table[e["transcript_sha256"]] = e["response_text"]
        self._table = table

    @classmethod
    def from_file(cls, path) -> "ScriptedClient":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def __len__(self) -> int:
        return len(self._table)

    def complete(self, transcript: Transcript) -> str:
        key = transcript_sha256(transcript)
        try:
            return self._table[key]
        except KeyError:
            last = transcript[-1].content[-200:] if transcript else ""
            raise CacheMiss(f"no scripted response for transcript {key[:12]} (ends with {last!r})",
                            transcript) from None

    def score_options(self, transcript: Transcript, options: Sequence[str]) -> list[float]:
        return parse_scores(self.complete(scoring_transcript(transcript, options)), len(options))


class CallbackClient:
    """Wraps plain functions; handy for building fixtures."""

    def __init__(self, respond: Callable[[Transcript], str],
                 score: Callable[[Transcript, Sequence[str]], list[float]] | None = None):
        self._respond = respond
        self._score = score

    def complete(self, transcript: Transcript) -> str:
        return self._respond(tuple(transcript))

    def score_options(self, transcript: Transcript, options: Sequence[str]) -> list[float]:
        if self._score is None:
            raise LlmError("this client cannot score options", transcript)
        return list(self._score(tuple(transcript), list(options)))


class RecordingClient:
    """Forwards to ``inner`` and records every exchange in the scripted fixture format."""

    def __init__(self, inner: LlmClient):
        self.inner = inner
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()

    def _keep(self, transcript: Transcript, text: str):
        with self._lock:
            self._entries[transcript_sha256(transcript)] = text

    def complete(self, transcript: Transcript) -> str:
        text = self.inner.complete(transcript)
        self._keep(transcript, text)
        return text

    def score_options(self, transcript: Transcript, options: Sequence[str]) -> list[float]:
        scores = self.inner.score_options(transcript, options)
        self._keep(scoring_transcript(transcript, options), json.dumps(scores))
        return scores

    def entries(self) -> list[dict]:
        with self._lock:
            return [{"transcript_sha256": k, "response_text": v} for k, v in sorted(self._entries.items())]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.entries(), fh, indent=1, ensure_ascii=False)
            fh.write("\n")


class HttpsChatClient:
    """OpenAI-style chat-completions endpoint. Never used by the tests.

    ``score_options`` asks the model for one probability per option and returns
    their logarithms, a proxy for sequence likelihoods that chat APIs do not expose.
    """

    def __init__(self, model: str, url: str = "https://api.openai.com/v1/chat/completions",
                 api_key: str | None = None, temperature: float = 0.0, timeout: float = 120.0):
        self.model = model
        self.url = url
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")
        self.temperature = temperature
        self.timeout = timeout
        self._lock = threading.Lock()

    def complete(self, transcript: Transcript) -> str:
        if not self.api_key:
            raise LlmError(f"set {API_KEY_ENV} to use the HTTPS client", transcript)
        body = json.dumps({"model": self.model, "temperature": self.temperature,
                           "messages": [m.to_dict() for m in transcript]}).encode("utf-8")
        req = urllib.request.Request(self.url, data=body, method="POST", headers={
            "Content-Type": "application/json", "Authorization": f"Bearer {self.api_key}"})
        try:
            with self._lock, urllib.request.urlopen(req, timeout=self.timeout) as resp:
                data = json.loads(resp.read().decode("utf-8"))
            return data["choices"][0]["message"]["content"]
        except (OSError, ValueError, KeyError, IndexError) as exc:
            raise LlmError(f"chat request failed: {exc}", transcript) from exc

    def score_options(self, transcript: Transcript, options: Sequence[str]) -> list[float]:
        ask = scoring_transcript(transcript, options)
        ask = ask[:-1] + (Message("user", ask[-1].content + "\nReply with only a JSON list of "
                                  f"{len(options)} probabilities, one per option, in order."),)
        probs = parse_scores(self.complete(ask), len(options))
        return [math.log(p) if p > 0 else -math.inf for p in probs]


def get_client(spec: str) -> LlmClient:
    """``scripted:path.json`` or ``https:model-name``."""
    kind, _, arg = spec.partition(":")
    if kind == "scripted":
        return ScriptedClient.from_file(arg)
    if kind == "https":
        if not arg:
            raise ValueError("name the model: https:MODEL")
        return HttpsChatClient(arg)
    raise ValueError(f"unknown client {spec!r}; use scripted:FILE or https:MODEL")


__all__ = [
    "Message", "Transcript", "LlmClient", "LlmError", "CacheMiss", "ScriptedClient", "CallbackClient",
    "RecordingClient", "HttpsChatClient", "transcript_sha256", "scoring_transcript", "parse_scores",
    "get_client", "API_KEY_ENV",
]
