"""Synthetic sequence tasks, vocabulary conventions and corpus file I/O.

Token ids 0..2 are reserved in every vocabulary (PAD, BOS, EOS) and never
appear inside payloads. Corpora are stored as JSONL: a header line
``{"vocab": V, "task": tag}`` followed by one ``{"src": [...], "tgt": [...]}``
object per pair, so files stay line-oriented and diff-able.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CorpusError, DomainError

PAD, BOS, EOS = 0, 1, 2
NUM_RESERVED = 3

TASKS = ("copy", "reverse", "sort")


@dataclass
class Corpus:
    vocab_size: int
    pairs: list = field(default_factory=list)
    task: str = "file"
    # model outputs written for evaluation may contain reserved ids; training
    # corpora never do
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.vocab_size < NUM_RESERVED:
            raise DomainError(f"vocab size must be >= {NUM_RESERVED}, got {self.vocab_size}")
        for i, (src, tgt) in enumerate(self.pairs):
            for name, seq in (("src", src), ("tgt", tgt)):
                if not seq and (self.strict or name == "src"):
                    raise DomainError(f"pair {i}: empty {name} sequence")
                for tok in seq:
                    if not 0 <= tok < self.vocab_size:
                        raise DomainError(
                            f"pair {i}: {name} id {tok} outside vocab [0, {self.vocab_size})"
                        )
                    if self.strict and tok < NUM_RESERVED:
                        raise DomainError(
                            f"pair {i}: reserved id {tok} inside a {name} payload"
                        )

    def __len__(self) -> int:
        return len(self.pairs)


def gen_task(task: str, n_pairs: int, seq_len: int, payload_vocab: int, seed: int) -> Corpus:
    """Generate a deterministic copy / reverse / sort corpus.

    Payload ids are drawn uniformly from the ``payload_vocab`` ids following
    the reserved range; the target is the source transformed per task.
    """
    if task not in TASKS:
        raise DomainError(f"unknown task {task!r}, expected one of {TASKS}")
    if payload_vocab < 2:
        raise DomainError(f"payload vocab must be >= 2, got {payload_vocab}")
    if seq_len < 1:
        raise DomainError(f"sequence length must be >= 1, got {seq_len}")
    if n_pairs < 1:
        raise DomainError(f"pair count must be >= 1, got {n_pairs}")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_pairs):
        src = [int(t) for t in rng.integers(NUM_RESERVED, NUM_RESERVED + payload_vocab, seq_len)]
        if task == "copy":
            tgt = list(src)
        elif task == "reverse":
            tgt = src[::-1]
        else:
            tgt = sorted(src)
        pairs.append((src, tgt))
    return Corpus(vocab_size=NUM_RESERVED + payload_vocab, pairs=pairs, task=task)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"vocab": corpus.vocab_size, "task": corpus.task}) + "\n")
        for src, tgt in corpus.pairs:
            f.write(json.dumps({"src": src, "tgt": tgt}) + "\n")


def _int_list(value, line_no: int, key: str) -> list:
    if not isinstance(value, list) or not all(
        isinstance(t, int) and not isinstance(t, bool) for t in value
    ):
        raise CorpusError(f"line {line_no}: {key!r} must be a list of integer token ids")
    return list(value)


def load_corpus(path, strict: bool = True) -> Corpus:
    """Parse a JSONL corpus, validating every line; errors name the line number.

    ``strict=False`` permits reserved ids inside payloads, for files holding
    raw model generations.
    """
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or all(not ln.strip() for ln in lines):
        return Corpus(vocab_size=NUM_RESERVED, pairs=[], task="file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise CorpusError(f"line 1: malformed JSON header ({e.msg})") from e
    if not isinstance(header, dict) or "vocab" not in header:
        raise CorpusError("line 1: header must be an object with a 'vocab' key")
    vocab = header["vocab"]
    if not isinstance(vocab, int) or vocab < NUM_RESERVED:
        raise CorpusError(f"line 1: vocab must be an integer >= {NUM_RESERVED}, got {vocab!r}")
    task = header.get("task", "file")
    pairs = []
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise CorpusError(f"line {line_no}: malformed JSON ({e.msg})") from e
        if not isinstance(obj, dict) or "src" not in obj or "tgt" not in obj:
            raise CorpusError(f"line {line_no}: expected an object with 'src' and 'tgt'")
        src = _int_list(obj["src"], line_no, "src")
        tgt = _int_list(obj["tgt"], line_no, "tgt")
        for key, seq in (("src", src), ("tgt", tgt)):
            if not seq and (strict or key == "src"):
                raise CorpusError(f"line {line_no}: empty {key} sequence")
            for tok in seq:
                if not 0 <= tok < vocab:
                    raise CorpusError(
                        f"line {line_no}: {key} id {tok} outside vocab [0, {vocab})"
                    )
                if strict and tok < NUM_RESERVED:
                    raise CorpusError(
                        f"line {line_no}: reserved id {tok} inside a {key} payload"
                    )
        pairs.append((src, tgt))
    return Corpus(vocab_size=vocab, pairs=pairs, task=task, strict=strict)
