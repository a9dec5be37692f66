import json
import os
import subprocess

import numpy as np
import pytest

import tokengraft as tg

CORPUS = ["the quick brown fox jumps over the lazy dog", "the cat sat on the mat"] * 30


def test_tokenizer_json_schema(tmp_path):
    tok = tg.train_bpe(CORPUS, 300, specials=["<s>"])
    path = tmp_path / "tok.json"
    tok.save(path)
    doc = json.loads(path.read_text())
    assert doc["version"] == 1 and doc["byte_level"] is True
    assert doc["specials"] == ["<s>"]
    assert sorted(doc["vocab"].values()) == list(range(len(tok)))
    assert all(len(m) == 2 for m in doc["merges"])
    back = tg.Tokenizer.load(path)
    text = "the lazy cat, naïve 🙂"
    assert back.encode(text) == tok.encode(text)
    assert back.decode(back.encode(text)) == text


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(tg.ConfigError):
        tg.train_bpe(CORPUS, 10)
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(tg.FormatError):
        tg.Tokenizer.load(bad)
    assert issubclass(tg.InputError, tg.Error)


def test_supertokenizer_learns_multiword_tokens():
    tok = tg.train_supertokenizer(["the cat sat on the mat with joy"] * 300, 320)
    words = [tg.count_words(tok.decode_token(i).decode("utf-8", "replace")) for i in range(len(tok))]
    assert max(words) >= 2
    assert all(tg.DEFAULT_SEPARATOR.encode() not in tok.decode_token(i) for i in range(len(tok)))
    hist = tg.word_count_histogram(tok, ["the cat sat on the mat with joy"])
    assert max(hist) >= 2


def test_transplant_golden_fixture(golden, expected):
    old = tg.Tokenizer.load(golden / "old_tokenizer.json")
    new = tg.Tokenizer.load(golden / "new_tokenizer.json")
    store = tg.AuxStore.load(golden / "aux.auxv1")
    tensors = tg.read_tensors(golden / "embeddings.safetensors")
    e_in, e_out, report = tg.transplant(
        old, new, tensors[tg.INPUT_TENSOR], tensors[tg.OUTPUT_TENSOR], store, k=3
    )
    want = expected["methods"]["tokenadapt_w0.3"]
    assert e_in.dtype == np.float32 and e_in.shape == (8, 4)
    np.testing.assert_allclose(e_in, np.array(want["input"]), atol=1e-5)
    np.testing.assert_allclose(e_out, np.array(want["output"]), atol=1e-5)
    assert report["counts"]["total"] == 8
    assert report["counts"]["shared"] == 5

    tied_in, tied_out, _ = tg.transplant(old, new, tensors[tg.INPUT_TENSOR], None, None, method="mean")
    assert tied_out is None
    np.testing.assert_allclose(tied_in, np.array(expected["methods"]["mean"]["input"]), atol=1e-5)


def test_tensor_file_is_safetensors_compatible(tmp_path):
    safetensors_numpy = pytest.importorskip("safetensors.numpy")
    rng = np.random.default_rng(0)
    arrays = {
        tg.INPUT_TENSOR: rng.standard_normal((5, 3)).astype(np.float32),
        tg.OUTPUT_TENSOR: np.array([[0.0, -0.0, 1e-45], [3e38, -1.0, 2.5]], dtype=np.float32),
    }
    ours = tmp_path / "ours.safetensors"
    tg.write_tensors(ours, arrays)
    loaded = safetensors_numpy.load_file(str(ours))
    for name, arr in arrays.items():
        assert loaded[name].tobytes() == arr.tobytes()

    theirs = tmp_path / "theirs.safetensors"
    safetensors_numpy.save_file(arrays, str(theirs))
    back = tg.read_tensors(theirs)
    for name, arr in arrays.items():
        assert back[name].tobytes() == arr.tobytes()


def test_compression_bytes_per_token():
    merges_text = "abcdef"
    tok = tg.train_bpe([merges_text] * 50, 261)
    stats = tg.eval_compression(tok, [merges_text * 3])
    assert stats["corpus_bytes"] == 18
    assert stats["total_tokens"] == 3
    assert stats["bytes_per_token"] == pytest.approx(6.0)


@pytest.mark.skipif(not os.environ.get("TOKENGRAFT_CLI"), reason="command-line tool not built")
def test_cli_outputs_read_by_python(tmp_path, golden):
    out = tmp_path / "new.safetensors"
    subprocess.run(
        [
            os.environ["TOKENGRAFT_CLI"], "transplant",
            "--old-tokenizer", str(golden / "old_tokenizer.json"),
            "--new-tokenizer", str(golden / "new_tokenizer.json"),
            "--embeddings", str(golden / "embeddings.safetensors"),
            "--aux", str(golden / "aux.auxv1"), "--untied", "--k", "3",
            "--out", str(out),
        ],
        check=True,
        capture_output=True,
    )
    tensors = tg.read_tensors(out)
    assert set(tensors) == {tg.INPUT_TENSOR, tg.OUTPUT_TENSOR}
    manifest = json.loads((tmp_path / "new.safetensors.manifest.json").read_text())
    assert manifest["subcommand"] == "transplant"
    assert {i["role"] for i in manifest["inputs"]} >= {"old_tokenizer", "new_tokenizer", "embeddings", "aux"}
    assert json.loads((tmp_path / "report.json").read_text())["counts"]["total"] == 8
