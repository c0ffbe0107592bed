"""Dataset ingestion, the entailment cache, and the remote oracle client.

Datasets are UTF-8 line-delimited JSON, one question per line. Known fields
are validated strictly; unknown fields are preserved and re-emitted, so a
canonicalized file round-trips byte for byte. The cache file is plain text,
one ``<hash_a> <hash_b> <0|1>`` line per directional pair, sorted, where
hashes are sha256 of the normalized text (see ``clustering.text_hash``).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import requests

from .clustering import MatrixOracle, ResponseSample, normalize_text, text_hash
from .errors import (
    ConfigError,
    DataError,
    MissingLabel,
    MissingLogprob,
    OracleFailure,
    ParseError,
    SchemaViolation,
)

DEFAULT_ENDPOINT_ENV = "COE_NLI_ENDPOINT"
DEFAULT_TIMEOUT = 30.0
DEFAULT_SCORE_CUTOFF = 0.5
DEFAULT_MAX_RETRIES = 3


@dataclass(frozen=True)
class ModelRecord:
    """One model's samples for one question, plus optional per-model labels."""

    samples: tuple
    p_false: float | None = None
    correct: bool | None = None
    extras: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class QuestionRecord:
    """One benchmark question with every model's sampled responses."""

    question_id: str
    question: str
    gold_answers: tuple
    models: tuple
    system_correct: bool | None = None
    extras: Mapping = field(default_factory=dict)

    def pooled_samples(self) -> list:
        """All models' samples in model order, ready for clustering."""
        pooled = []
        for m in self.models:
            pooled.extend(m.samples)
        return pooled


class Matcher(Enum):
    EXACT = "exact"
    CONTAINS = "contains"
    ORACLE = "oracle"

    @classmethod
    def parse(cls, name: str) -> "Matcher":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ConfigError(
                f"unknown matcher {name!r}; expected exact, contains or oracle"
            ) from None


def _expect(condition: bool, fld: str, message: str, line: int | None):
    if not condition:
        raise SchemaViolation(fld, message, line=line)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _sample_from_dict(d: dict, model_index: int, where: str,
                      line: int | None):
    _expect(isinstance(d, dict), where, "sample must be an object", line)
    extras = dict(d)
    text = extras.pop("text", None)
    _expect(isinstance(text, str) and text != "", f"{where}.text",
            "required non-empty string", line)
    sum_logprob = extras.pop("sum_logprob", None)
    token_count = extras.pop("token_count", None)
    _expect(sum_logprob is None or _is_number(sum_logprob),
            f"{where}.sum_logprob", "must be a number", line)
    _expect(token_count is None or
            (isinstance(token_count, int) and not isinstance(token_count, bool)
             and token_count >= 1),
            f"{where}.token_count", "must be an integer >= 1", line)
    _expect((sum_logprob is None) == (token_count is None),
            f"{where}.token_count",
            "sum_logprob and token_count must be present together", line)
    return ResponseSample(
        model_index=model_index,
        text=text,
        sum_logprob=None if sum_logprob is None else float(sum_logprob),
        token_count=token_count,
    ), extras


def _model_from_dict(d: dict, model_index: int, line: int | None) -> ModelRecord:
    where = f"models[{model_index}]"
    _expect(isinstance(d, dict), where, "model entry must be an object", line)
    extras = dict(d)
    raw_samples = extras.pop("samples", None)
    _expect(isinstance(raw_samples, list) and raw_samples,
            f"{where}.samples", "required non-empty array", line)
    samples = []
    sample_extras = []
    for k, sd in enumerate(raw_samples):
        s, se = _sample_from_dict(sd, model_index, f"{where}.samples[{k}]", line)
        samples.append(s)
        sample_extras.append(se)
    p_false = extras.pop("p_false", None)
    _expect(p_false is None or (_is_number(p_false) and 0.0 <= p_false <= 1.0),
            f"{where}.p_false", "must be a number in [0, 1]", line)
    correct = extras.pop("correct", None)
    _expect(correct is None or isinstance(correct, bool),
            f"{where}.correct", "must be a boolean", line)
    extras["__sample_extras__"] = sample_extras
    return ModelRecord(
        samples=tuple(samples),
        p_false=None if p_false is None else float(p_false),
        correct=correct,
        extras=extras,
    )


def record_from_dict(d: dict, line: int | None = None) -> QuestionRecord:
    """Validate one parsed JSON object against the dataset schema."""
    _expect(isinstance(d, dict), "record", "must be an object", line)
    extras = dict(d)
    question_id = extras.pop("question_id", None)
    _expect(isinstance(question_id, str) and question_id != "",
            "question_id", "required non-empty string", line)
    question = extras.pop("question", None)
    _expect(isinstance(question, str), "question", "required string", line)
    gold = extras.pop("gold_answers", None)
    _expect(isinstance(gold, list) and all(isinstance(g, str) for g in gold),
            "gold_answers", "required array of strings", line)
    raw_models = extras.pop("models", None)
    _expect(isinstance(raw_models, list) and raw_models,
            "models", "required non-empty array", line)
    models = tuple(_model_from_dict(m, i, line)
                   for i, m in enumerate(raw_models))
    system_correct = extras.pop("system_correct", None)
    _expect(system_correct is None or isinstance(system_correct, bool),
            "system_correct", "must be a boolean", line)
    return QuestionRecord(
        question_id=question_id,
        question=question,
        gold_answers=tuple(gold),
        models=models,
        system_correct=system_correct,
        extras=extras,
    )


def record_to_dict(r: QuestionRecord) -> dict:
    d = dict(r.extras)
    d["question_id"] = r.question_id
    d["question"] = r.question
    d["gold_answers"] = list(r.gold_answers)
    models = []
    for m in r.models:
        md = {k: v for k, v in m.extras.items() if k != "__sample_extras__"}
        sample_extras = m.extras.get("__sample_extras__",
                                     [{}] * len(m.samples))
        samples = []
        for s, se in zip(m.samples, sample_extras):
            sd = dict(se)
            sd["text"] = s.text
            if s.sum_logprob is not None:
                sd["sum_logprob"] = s.sum_logprob
                sd["token_count"] = s.token_count
            samples.append(sd)
        md["samples"] = samples
        if m.p_false is not None:
            md["p_false"] = m.p_false
        if m.correct is not None:
            md["correct"] = m.correct
        models.append(md)
    d["models"] = models
    if r.system_correct is not None:
        d["system_correct"] = r.system_correct
    return d


def _canonical_json(d: dict) -> str:
    return json.dumps(d, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":"))


def load_dataset(path) -> list:
    """Parse a line-delimited dataset file; strict schema, precise errors."""
    records = []
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
            record = record_from_dict(obj, line=lineno)
            if record.question_id in seen_ids:
                raise SchemaViolation("question_id",
                                      f"duplicate id {record.question_id!r}",
                                      line=lineno)
            seen_ids.add(record.question_id)
            records.append(record)
    return records


def save_dataset(records: Sequence[QuestionRecord], path) -> None:
    """Write records in canonical form (sorted keys, compact separators)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(_canonical_json(record_to_dict(r)))
            fh.write("\n")


def label_correctness(record: QuestionRecord, system_answer_text: str,
                      matcher: Matcher = Matcher.CONTAINS) -> bool:
    """Judge a system answer against the record's gold answers.

    ``exact`` is normalized equality to any gold answer, ``contains`` asks
    whether any normalized gold appears inside the normalized answer, and
    ``oracle`` reads the precomputed label off the record.
    """
    if matcher is Matcher.ORACLE:
        if record.system_correct is None:
            raise MissingLabel(
                f"record {record.question_id!r} has no system_correct label"
            )
        return record.system_correct
    if not record.gold_answers:
        raise DataError(
            f"record {record.question_id!r} has no gold answers to match"
        )
    answer = normalize_text(system_answer_text)
    golds = [normalize_text(g) for g in record.gold_answers]
    if matcher is Matcher.EXACT:
        return any(answer == g for g in golds)
    return any(g and g in answer for g in golds)


class EntailmentCache:
    """Directional entailment results keyed by (hash_a, hash_b).

    Entries are write-once: storing a conflicting value for an existing pair
    is an error, storing the same value is a no-op.
    """

    def __init__(self, entries: Mapping | None = None):
        self._entries: dict = dict(entries) if entries else {}

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, hash_a: str, hash_b: str):
        return self._entries.get((hash_a, hash_b))

    def put(self, hash_a: str, hash_b: str, value: bool) -> None:
        key = (hash_a, hash_b)
        existing = self._entries.get(key)
        if existing is None:
            self._entries[key] = bool(value)
        elif existing != bool(value):
            raise DataError(
                f"cache entry {hash_a[:12]}…/{hash_b[:12]}… cannot change "
                f"from {existing} to {bool(value)}"
            )

    def merge(self, other: "EntailmentCache") -> None:
        for (ha, hb), v in other._entries.items():
            self.put(ha, hb, v)

    def as_mapping(self) -> dict:
        return dict(self._entries)


def load_cache(path) -> EntailmentCache:
    """Read a cache file; a missing file is an empty cache."""
    cache = EntailmentCache()
    if not os.path.exists(path):
        return cache
    offset = 0
    with open(path, "rb") as fh:
        for raw in fh:
            line = raw.decode("utf-8", errors="replace").strip()
            if line:
                parts = line.split()
                if len(parts) != 3 or parts[2] not in ("0", "1"):
                    raise ParseError("malformed cache line", offset=offset)
                cache.put(parts[0], parts[1], parts[2] == "1")
            offset += len(raw)
    return cache


def save_cache(cache: EntailmentCache, path) -> None:
    """Write the cache deterministically, sorted by key pair."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for (ha, hb) in sorted(cache.as_mapping()):
            fh.write(f"{ha} {hb} {1 if cache.get(ha, hb) else 0}\n")


def load_matrix_oracle(path) -> MatrixOracle:
    """Matrix oracle backed by a cache file's truth table."""
    return MatrixOracle(load_cache(path).as_mapping())


@dataclass
class OracleCounters:
    calls: int = 0
    reflexive_hits: int = 0
    cache_hits: int = 0
    network_calls: int = 0
    retries: int = 0


class _MalformedResponse(Exception):
    pass


class RemoteEntailmentOracle:
    """HTTP entailment oracle with write-through caching and bounded retries.

    POSTs ``{"premise": ..., "hypothesis": ...}`` (normalized texts) and
    accepts either ``{"entails": bool}`` or ``{"score": number}`` responses,
    thresholding scores at the configured cutoff. Transport errors,
    timeouts and malformed payloads are retried with exponential backoff
    and finally surfaced as ``OracleFailure``.
    """

    def __init__(self, endpoint: str | None = None, *,
                 timeout: float = DEFAULT_TIMEOUT,
                 score_cutoff: float = DEFAULT_SCORE_CUTOFF,
                 max_retries: int = DEFAULT_MAX_RETRIES,
                 backoff: float = 0.5,
                 cache: EntailmentCache | None = None,
                 session=None):
        endpoint = endpoint or os.environ.get(DEFAULT_ENDPOINT_ENV)
        if not endpoint:
            raise ConfigError(
                f"no oracle endpoint configured (flag or {DEFAULT_ENDPOINT_ENV})"
            )
        self.endpoint = endpoint
        self.timeout = timeout
        self.score_cutoff = score_cutoff
        self.max_retries = max_retries
        self.backoff = backoff
        self.cache = cache if cache is not None else EntailmentCache()
        self.counters = OracleCounters()
        self._session = session if session is not None else requests.Session()

    def entails(self, premise: str, hypothesis: str) -> bool:
        self.counters.calls += 1
        a, b = normalize_text(premise), normalize_text(hypothesis)
        if a == b:
            self.counters.reflexive_hits += 1
            return True
        ha, hb = text_hash(a), text_hash(b)
        cached = self.cache.get(ha, hb)
        if cached is not None:
            self.counters.cache_hits += 1
            return cached
        value = self._ask(a, b)
        self.cache.put(ha, hb, value)
        return value

    def _ask(self, premise: str, hypothesis: str) -> bool:
        last_error = None
        for attempt in range(self.max_retries + 1):
            if attempt > 0:
                self.counters.retries += 1
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                self.counters.network_calls += 1
                resp = self._session.post(
                    self.endpoint,
                    json={"premise": premise, "hypothesis": hypothesis},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return self._interpret(resp.json())
            except (requests.RequestException, ValueError,
                    _MalformedResponse) as exc:
                last_error = exc
        raise OracleFailure(
            f"entailment endpoint failed after {self.max_retries + 1} "
            f"attempts: {last_error}"
        ) from last_error

    def _interpret(self, payload) -> bool:
        if isinstance(payload, dict):
            if isinstance(payload.get("entails"), bool):
                return payload["entails"]
            score = payload.get("score")
            if _is_number(score):
                return float(score) >= self.score_cutoff
        raise _MalformedResponse(f"unusable oracle response: {payload!r}")
