"""Provider-agnostic LLM access.

Renders the four prompt templates byte-exactly, sends completions through
a pluggable provider with retry and a content-addressed persistent cache,
and parses replies into structured results. A scripted mock provider makes
every downstream flow runnable offline.

Reply parsing is deliberately tolerant (markdown bullets, numbering, code
fences, Portuguese "grupo" markers) but never inventive: reply items that
match no input term are dropped and logged, and input terms missing from a
reply fall back to a conservative default (related / unplaced) instead of
being lost.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .corpus import normalize_term, tokenize

log = logging.getLogger(__name__)

# Template texts with <placeholder> slots; the second element is the
# joiner used when a binding is a list of terms.
TEMPLATES: dict[str, tuple[str, str]] = {
    "separate_terms": (
        "Given the terms in the following list: <words_list>. "
        "Separate them into two groups. "
        "In group 1 the terms with no relation to the topic <type>. "
        "And in group 2 the terms that are related.",
        ", ",
    ),
    "build_hierarchy": (
        "Create a dictionary by hierarchically arranging the following "
        "words: <words_list>. Use JSON format as the output such as the "
        'following: {"key": ["list of words"]}',
        ", ",
    ),
    "taxonomy_context": ("Childs of <node>: [<children>]", ","),
    "parent_query": ("Who is the father of <new_term>?", ", "),
}

_PLACEHOLDER = re.compile(r"<([a-z_]+)>")


class GatewayError(Exception):
    pass


class UnboundPlaceholder(GatewayError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"template placeholder <{name}> is unbound")


class TransientProviderError(GatewayError):
    """Retryable provider failure (scripted mock failure, 5xx, connection)."""


class ProviderUnavailable(GatewayError):
    pass


class Timeout(GatewayError):
    pass


class CacheCorruption(GatewayError):
    pass


class UnparseableSeparation(GatewayError):
    pass


class NoJsonFound(GatewayError):
    pass


class MalformedStructure(GatewayError):
    pass


def render(template_id: str, bindings: dict[str, str | Sequence[str]]) -> str:
    """Substitute bindings into a template, byte-exact otherwise.

    List bindings are joined with the template's joiner (comma-space for
    term lists, bare comma inside the taxonomy-context brackets).
    """
    try:
        text, joiner = TEMPLATES[template_id]
    except KeyError:
        raise KeyError(f"unknown template {template_id!r}") from None

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise UnboundPlaceholder(name)
        value = bindings[name]
        if isinstance(value, str):
            return value
        return joiner.join(value)

    return _PLACEHOLDER.sub(substitute, text)


@dataclass
class PromptExchange:
    rendered_prompt: str
    provider_id: str
    model_id: str
    raw_reply: str
    cache_key: str
    timestamp: str
    from_cache: bool = False
    attempts: int = 1
    parsed: object = None


@dataclass(frozen=True)
class SeparationResult:
    """Group 1 = unrelated to the topic, group 2 = related."""

    unrelated: tuple[str, ...]
    related: tuple[str, ...]


@dataclass(frozen=True)
class HierarchyResult:
    """Nested mapping (keys = subcategory labels, leaves = term lists)
    plus the input terms the reply never placed."""

    tree: dict
    unplaced: tuple[str, ...]

    def leaf_terms(self) -> list[str]:
        found: list[str] = []

        def walk(node: dict) -> None:
            for value in node.values():
                if isinstance(value, dict):
                    walk(value)
                else:
                    found.extend(value)

        walk(self.tree)
        return found


class Provider(Protocol):
    provider_id: str
    model_id: str

    def send(self, prompt: str, timeout: float | None = None) -> str: ...


class MockProvider:
    """Scripted provider: a list of {match, reply, fail_times} entries.

    The first entry whose `match` substring occurs in the prompt wins; its
    first `fail_times` hits raise a retryable error before the reply is
    served. A prompt matching no entry is a hard ProviderUnavailable (the
    script is the closed world; retrying cannot help). `call_count` counts
    every send, which lets tests assert cache hits took no network trip.
    """

    def __init__(
        self,
        script: Sequence[dict],
        provider_id: str = "mock",
        model_id: str = "scripted",
    ):
        self.provider_id = provider_id
        self.model_id = model_id
        self._entries = []
        for entry in script:
            self._entries.append(
                {
                    "match": entry["match"],
                    "reply": entry["reply"],
                    "fail_times": int(entry.get("fail_times", 0)),
                }
            )
        self.call_count = 0

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "MockProvider":
        script = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(script, **kwargs)

    def send(self, prompt: str, timeout: float | None = None) -> str:
        self.call_count += 1
        for entry in self._entries:
            if entry["match"] in prompt:
                if entry["fail_times"] > 0:
                    entry["fail_times"] -= 1
                    raise TransientProviderError(
                        f"scripted failure for match {entry['match']!r}"
                    )
                return entry["reply"]
        raise ProviderUnavailable(
            f"no mock entry matches prompt starting {prompt[:60]!r}"
        )


ENDPOINT_VAR = "TAXOKIT_LLM_ENDPOINT"
MODEL_VAR = "TAXOKIT_LLM_MODEL"
API_KEY_NAME_VAR = "TAXOKIT_LLM_API_KEY_VAR"
DEFAULT_API_KEY_VAR = "TAXOKIT_LLM_API_KEY"


class HttpProvider:
    """Chat-completions HTTP provider (OpenAI-compatible wire format).

    Sends {model, messages, temperature: 0} and reads
    choices[0].message.content. Credentials stay in the environment and
    are never written to cache files.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key: str | None = None,
        provider_id: str = "http",
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self._api_key = api_key
        self.provider_id = provider_id

    @classmethod
    def from_env(cls) -> "HttpProvider":
        endpoint = os.environ.get(ENDPOINT_VAR)
        model_id = os.environ.get(MODEL_VAR)
        if not endpoint or not model_id:
            raise ProviderUnavailable(
                f"set {ENDPOINT_VAR} and {MODEL_VAR} to use the HTTP provider"
            )
        key_var = os.environ.get(API_KEY_NAME_VAR, DEFAULT_API_KEY_VAR)
        return cls(endpoint, model_id, api_key=os.environ.get(key_var))

    def send(self, prompt: str, timeout: float | None = None) -> str:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        payload = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            response = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=timeout
            )
        except requests.Timeout as exc:
            raise Timeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise TransientProviderError(str(exc)) from exc
        if response.status_code in (408, 429, 500, 502, 503, 504):
            raise TransientProviderError(f"HTTP {response.status_code}")
        if response.status_code != 200:
            raise ProviderUnavailable(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"malformed provider response: {exc}") from exc


class LlmGateway:
    """complete() = cache lookup, then provider send with retry/backoff.

    The cache is content-addressed: one JSON file per exchange, named by
    sha256(provider_id NUL model_id NUL prompt). A checksum mismatch on
    read is logged and treated as a miss. Writes go through a temp file
    and rename, so concurrent readers never see a torn file.
    """

    def __init__(
        self,
        provider: Provider,
        cache_dir: str | Path | None = None,
        retries: int = 3,
        backoff_base: float = 0.5,
        timeout: float | None = 60.0,
        parse_retries: int = 2,
    ):
        self.provider = provider
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.retries = retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.parse_retries = parse_retries
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)

    def cache_key(self, prompt: str) -> str:
        material = "\0".join(
            (self.provider.provider_id, self.provider.model_id, prompt)
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def _cache_read(self, key: str) -> tuple[str, str] | None:
        path = self._cache_path(key)
        if not path.exists():
            return None
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            reply = payload["reply"]
            checksum = payload["checksum"]
        except (OSError, ValueError, KeyError) as exc:
            log.warning("cache entry %s unreadable (%s); treating as miss", key, exc)
            return None
        if hashlib.sha256(reply.encode("utf-8")).hexdigest() != checksum:
            log.warning("cache entry %s failed checksum; treating as miss", key)
            return None
        return reply, payload.get("timestamp", "")

    def _cache_write(self, key: str, prompt: str, reply: str, timestamp: str) -> None:
        payload = {
            "prompt": prompt,
            "reply": reply,
            "provider_id": self.provider.provider_id,
            "model_id": self.provider.model_id,
            "timestamp": timestamp,
            "checksum": hashlib.sha256(reply.encode("utf-8")).hexdigest(),
        }
        path = self._cache_path(key)
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        tmp.replace(path)

    def complete(self, prompt: str, refresh: bool = False) -> PromptExchange:
        """Return the cached or fresh reply for a rendered prompt.

        refresh=True skips the cache read (the fresh reply still gets
        written back), which is how parse-failure retries avoid being
        served the same bad reply forever.
        """
        key = self.cache_key(prompt)
        if self.cache_dir is not None and not refresh:
            cached = self._cache_read(key)
            if cached is not None:
                reply, stamp = cached
                return PromptExchange(
                    rendered_prompt=prompt,
                    provider_id=self.provider.provider_id,
                    model_id=self.provider.model_id,
                    raw_reply=reply,
                    cache_key=key,
                    timestamp=stamp,
                    from_cache=True,
                    attempts=0,
                )

        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                reply = self.provider.send(prompt, timeout=self.timeout)
                break
            except (TransientProviderError, Timeout) as exc:
                last_error = exc
                if attempt < self.retries and self.backoff_base > 0:
                    time.sleep(self.backoff_base * (2**attempt))
        else:
            attempts = self.retries + 1
            if isinstance(last_error, Timeout):
                raise Timeout(f"provider timed out on all {attempts} attempts") from last_error
            raise ProviderUnavailable(
                f"provider failed after {attempts} attempts: {last_error}"
            ) from last_error

        timestamp = datetime.now(timezone.utc).isoformat()
        if self.cache_dir is not None:
            self._cache_write(key, prompt, reply, timestamp)
        return PromptExchange(
            rendered_prompt=prompt,
            provider_id=self.provider.provider_id,
            model_id=self.provider.model_id,
            raw_reply=reply,
            cache_key=key,
            timestamp=timestamp,
            attempts=attempt + 1,
        )

    def separate_terms(self, terms: Sequence[str], topic: str) -> SeparationResult:
        """Render the two-group separation prompt and parse the reply,
        re-asking (cache bypassed) up to parse_retries times when the
        reply has no usable group markers."""
        prompt = render("separate_terms", {"words_list": list(terms), "type": topic})
        last_error: Exception | None = None
        for attempt in range(self.parse_retries + 1):
            exchange = self.complete(prompt, refresh=attempt > 0)
            try:
                result = parse_separation(exchange.raw_reply, terms)
                exchange.parsed = result
                return result
            except UnparseableSeparation as exc:
                last_error = exc
                log.warning("separation reply unparseable (attempt %d)", attempt + 1)
        raise UnparseableSeparation(
            f"no usable reply after {self.parse_retries + 1} attempts"
        ) from last_error

    def request_hierarchy(self, terms: Sequence[str]) -> HierarchyResult:
        """Render the hierarchy prompt and parse the JSON reply, with the
        same bypass-and-retry policy as separate_terms."""
        prompt = render("build_hierarchy", {"words_list": list(terms)})
        last_error: Exception | None = None
        for attempt in range(self.parse_retries + 1):
            exchange = self.complete(prompt, refresh=attempt > 0)
            try:
                result = parse_hierarchy(exchange.raw_reply, terms)
                exchange.parsed = result
                return result
            except (NoJsonFound, MalformedStructure) as exc:
                last_error = exc
                log.warning("hierarchy reply unparseable (attempt %d): %s", attempt + 1, exc)
        raise last_error


_GROUP_MARKER = re.compile(r"(?i)(?:group|grupo)\s*0*([12])\b")
_BULLET = re.compile(r"^[\-\*•>]+\s*")
_NUMBERING = re.compile(r"^\(?\d{1,3}[.)]\s+")


def _clean_item(piece: str) -> str:
    s = piece.strip()
    s = s.lstrip(":").strip()
    s = _BULLET.sub("", s)
    s = _NUMBERING.sub("", s)
    s = s.strip().strip("*_`\"'").strip()
    return s.rstrip(".:").strip()


def parse_separation(raw_reply: str, input_terms: Sequence[str]) -> SeparationResult:
    """Split a two-group reply back onto the input terms.

    Accepts "group"/"grupo" markers in any casing, items separated by
    commas, semicolons, or newlines, with bullets/numbering/bold tolerated.
    The first group assignment of a term wins; reply items matching no
    input term are dropped; input terms the reply never mentions default
    to related (both logged). Raises UnparseableSeparation when neither
    marker appears.
    """
    markers = list(_GROUP_MARKER.finditer(raw_reply))
    if not markers:
        raise UnparseableSeparation("no group 1 / group 2 marker in reply")

    unique_inputs = list(dict.fromkeys(input_terms))
    norm_map: dict[str, str] = {}
    for term in unique_inputs:
        norm_map.setdefault(normalize_term(term), term)

    assigned: dict[str, int] = {}
    for i, marker in enumerate(markers):
        group = int(marker.group(1))
        end = markers[i + 1].start() if i + 1 < len(markers) else len(raw_reply)
        segment = raw_reply[marker.end() : end]
        for piece in re.split(r"[\n,;]+", segment):
            item = _clean_item(piece)
            if not item:
                continue
            term = norm_map.get(normalize_term(item))
            if term is None:
                log.info("separation reply item %r matches no input term; dropped", item)
                continue
            if term not in assigned:
                assigned[term] = group

    for term in unique_inputs:
        if term not in assigned:
            log.info("input term %r missing from separation reply; defaulting to related", term)

    unrelated = tuple(t for t in unique_inputs if assigned.get(t) == 1)
    related = tuple(t for t in unique_inputs if assigned.get(t, 2) == 2)
    return SeparationResult(unrelated=unrelated, related=related)


def _first_wins(pairs):
    out = {}
    for key, value in pairs:
        if key not in out:
            out[key] = value
    return out


def _balanced_object_end(text: str, start: int) -> int | None:
    """Index one past the brace closing the object opened at start, or
    None when the braces never balance. String-aware."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def extract_json_object(text: str) -> dict:
    """First balanced, parseable top-level JSON object in the text."""
    position = text.find("{")
    while position != -1:
        end = _balanced_object_end(text, position)
        if end is not None:
            try:
                value = json.loads(text[position:end], object_pairs_hook=_first_wins)
            except ValueError:
                value = None
            if isinstance(value, dict):
                return value
        position = text.find("{", position + 1)
    raise NoJsonFound("reply contains no parseable JSON object")


def parse_hierarchy(raw_reply: str, input_terms: Sequence[str]) -> HierarchyResult:
    """Parse a hierarchy reply into a validated nested mapping.

    Keys may be model-invented subcategory labels and pass through as-is;
    leaf strings must match input terms (normalized) or they are dropped
    and logged. A term's first placement wins; duplicates elsewhere are
    dropped. Terms never placed end up in `unplaced`.
    """
    obj = extract_json_object(raw_reply)

    unique_inputs = list(dict.fromkeys(input_terms))
    norm_map: dict[str, str] = {}
    for term in unique_inputs:
        norm_map.setdefault(normalize_term(term), term)
    placed: set[str] = set()

    def walk(node: dict) -> dict:
        out = {}
        for key, value in node.items():
            if isinstance(value, dict):
                out[key] = walk(value)
            elif isinstance(value, list):
                leaves = []
                for item in value:
                    if not isinstance(item, str):
                        raise MalformedStructure(
                            f"non-string leaf {item!r} under key {key!r}"
                        )
                    term = norm_map.get(normalize_term(item))
                    if term is None:
                        log.info("hierarchy leaf %r matches no input term; dropped", item)
                        continue
                    if term in placed:
                        log.info("hierarchy leaf %r already placed; duplicate dropped", item)
                        continue
                    placed.add(term)
                    leaves.append(term)
                out[key] = leaves
            else:
                raise MalformedStructure(
                    f"value under key {key!r} is neither object nor array"
                )
        return out

    tree = walk(obj)
    unplaced = tuple(t for t in unique_inputs if t not in placed)
    return HierarchyResult(tree=tree, unplaced=unplaced)


def parse_parent(raw_reply: str, candidate_parents: Sequence[str]) -> str | None:
    """Earliest candidate label occurring in the reply, or None.

    Matching is on normalized token sequences, so casing, diacritics, and
    punctuation never block a match. When two candidates start at the same
    token, the longer (more specific) one wins, then lexicographic label.
    """
    reply_tokens = [tok.normalized for tok in tokenize(raw_reply)]
    best: tuple[int, int, str] | None = None
    for candidate in candidate_parents:
        cand_tokens = [tok.normalized for tok in tokenize(candidate)]
        if not cand_tokens or len(cand_tokens) > len(reply_tokens):
            continue
        length = len(cand_tokens)
        for start in range(len(reply_tokens) - length + 1):
            if reply_tokens[start : start + length] == cand_tokens:
                key = (start, -length, candidate)
                if best is None or key < best:
                    best = key
                break
    return best[2] if best else None
