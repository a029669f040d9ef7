# Copyright 2026 The s2sw Authors
# SPDX-License-Identifier: Apache-2.0

import math

import pytest

import s2sw


def test_bigram_mle_perplexity():
    model = s2sw.train_ngram(["a b", "a a"], order=2, alpha=[1e-9])
    assert model.kind == "ngram"
    report = model.evaluate(["a b", "a a"])
    assert report["word_count"] == 6
    assert report["perplexity"] == pytest.approx(math.sqrt(3.0), rel=1e-7)


def test_save_load_round_trip(tmp_path):
    model = s2sw.train_ngram(["x y z", "y z", "z"], order=3)
    path = str(tmp_path / "m.s2sw")
    model.save(path)
    again = s2sw.Model.load(path)
    assert again.evaluate(["x z q"]) == model.evaluate(["x z q"])
    with open(path, "rb") as f:
        assert f.read(4) == b"S2SW"


def test_errors(tmp_path):
    bad = tmp_path / "bad.s2sw"
    bad.write_bytes(b"nope")
    with pytest.raises(s2sw.DataError):
        s2sw.Model.load(str(bad))
    with pytest.raises(s2sw.ConfigError):
        s2sw.train_ngram(["a"]).translate(["a"])
    with pytest.raises(ValueError):
        s2sw.bleu(["a"], ["a"], max_n=0)


def test_bleu():
    r = s2sw.bleu(["the cat sat on the mat"], ["the cat sat on the mat"])
    assert r["bleu"] == 1.0
    assert r["precisions"] == [1.0, 1.0, 1.0, 1.0]


def test_cli_and_translation(tmp_path):
    src = tmp_path / "src.txt"
    lines = ["a b", "b c a", "c", "a a b"] * 5
    src.write_text("\n".join(lines) + "\n")
    model = str(tmp_path / "ed.s2sw")
    code, _, err = s2sw.run_cli([
        "train-encdec", "--train-src", str(src), "--train-tgt", str(src), "--model", model,
        "--epochs", "2", "--embed", "4", "--enc-hidden", "4", "--dec-hidden", "6",
        "--attention-hidden", "3", "--unk", "keep_all",
    ])
    assert code == 0, err
    ed = s2sw.Model.load(model)
    assert ed.is_encdec
    greedy = ed.translate(["a b"])
    beam1 = ed.translate(["a b"], search="beam", beam_size=1)
    assert greedy[0][0] == beam1[0][0]
    nbest = ed.translate(["a b"], search="beam", beam_size=3, nbest=3)[0]
    assert 1 <= len(nbest) <= 3
    assert all(score <= 0.0 for _, score in nbest)
    assert len(ed.sample(count=3, source="a b")) == 3
    report = ed.evaluate(["a b"], targets=["a b"])
    assert report["word_count"] == 3

    code, _, _ = s2sw.run_cli(["translate", "--model", model])
    assert code == 1
