import json

import pytest

from hamattn.data import (
    BOS,
    EOS,
    NUM_RESERVED,
    PAD,
    Corpus,
    gen_task,
    load_corpus,
    save_corpus,
)
from hamattn.errors import CorpusError, DomainError


def test_reserved_ids():
    assert (PAD, BOS, EOS) == (0, 1, 2)
    assert NUM_RESERVED == 3


@pytest.mark.parametrize("task", ["copy", "reverse", "sort"])
def test_task_transformations(task):
    corpus = gen_task(task, 50, 7, 8, seed=0)
    assert corpus.vocab_size == 11
    assert len(corpus) == 50
    for src, tgt in corpus.pairs:
        assert len(src) == 7
        assert all(NUM_RESERVED <= t < corpus.vocab_size for t in src + tgt)
        if task == "copy":
            assert tgt == src
        elif task == "reverse":
            assert tgt == src[::-1]
        else:
            assert tgt == sorted(src)


def test_generation_determinism():
    a = gen_task("copy", 30, 5, 6, seed=7)
    b = gen_task("copy", 30, 5, 6, seed=7)
    c = gen_task("copy", 30, 5, 6, seed=8)
    assert a == b
    assert a != c


def test_gen_task_validation():
    with pytest.raises(DomainError):
        gen_task("shuffle", 10, 5, 8, 0)
    with pytest.raises(DomainError):
        gen_task("copy", 10, 0, 8, 0)
    with pytest.raises(DomainError):
        gen_task("copy", 10, 5, 1, 0)
    with pytest.raises(DomainError):
        gen_task("copy", 0, 5, 8, 0)


def test_roundtrip_identity(tmp_path):
    corpus = gen_task("sort", 100, 6, 9, seed=3)
    path = tmp_path / "corpus.jsonl"
    save_corpus(corpus, path)
    assert load_corpus(path) == corpus
    # header + one line per pair
    assert len(path.read_text().splitlines()) == 101


def test_header_line(tmp_path):
    corpus = gen_task("reverse", 4, 3, 5, seed=1)
    path = tmp_path / "c.jsonl"
    save_corpus(corpus, path)
    header = json.loads(path.read_text().splitlines()[0])
    assert header == {"vocab": 8, "task": "reverse"}


def test_empty_file_is_an_empty_corpus(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    corpus = load_corpus(path)
    assert len(corpus) == 0
    assert corpus.vocab_size == NUM_RESERVED


def test_malformed_line_names_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"vocab": 10, "task": "copy"}\n{"src": [3], "tgt": [4]}\n{"src": [3, "x"], "tgt": [4]}\n')
    with pytest.raises(CorpusError, match="line 3"):
        load_corpus(path)


def test_non_integer_token_rejected(tmp_path):
    path = tmp_path / "bad2.jsonl"
    path.write_text('{"vocab": 10}\n{"src": [3.5], "tgt": [4]}\n')
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(path)


def test_out_of_vocab_id_rejected(tmp_path):
    path = tmp_path / "bad3.jsonl"
    path.write_text('{"vocab": 5, "task": "copy"}\n{"src": [3], "tgt": [7]}\n')
    with pytest.raises(CorpusError, match="line 2.*outside vocab"):
        load_corpus(path)


def test_reserved_id_in_payload_rejected_unless_lenient(tmp_path):
    path = tmp_path / "gen.jsonl"
    path.write_text('{"vocab": 5, "task": "copy"}\n{"src": [3], "tgt": [0, 4]}\n')
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(path)
    corpus = load_corpus(path, strict=False)
    assert corpus.pairs == [([3], [0, 4])]


def test_malformed_header(tmp_path):
    path = tmp_path / "h.jsonl"
    path.write_text("not json\n")
    with pytest.raises(CorpusError, match="line 1"):
        load_corpus(path)
    path.write_text('{"task": "copy"}\n')
    with pytest.raises(CorpusError, match="vocab"):
        load_corpus(path)


def test_corpus_validation():
    with pytest.raises(DomainError):
        Corpus(vocab_size=2)
    with pytest.raises(DomainError):
        Corpus(vocab_size=8, pairs=[([3], [])])
    with pytest.raises(DomainError):
        Corpus(vocab_size=8, pairs=[([3], [9])])
    with pytest.raises(DomainError):
        Corpus(vocab_size=8, pairs=[([1], [3])])
