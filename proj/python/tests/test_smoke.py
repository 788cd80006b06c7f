# Copyright 2026 The switchconv Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import csv
import io
import json

import pytest

import switchconv as sc


def test_bleu_identity_and_half_precision():
    assert sc.bleu(["a b c d"], ["a b c d"]) == pytest.approx(1.0)
    assert sc.bleu(["a b c d e f"], ["x y z w v u"]) == 0.0


def test_gleu_penalizes_copied_source():
    src, ref = ["um a b c d"], ["a b c d"]
    assert sc.gleu(src, ref, ref) == pytest.approx(1.0)
    assert sc.gleu(src, ref, src) < sc.gleu(src, ref, ref)


def test_meteor_exact_match():
    assert sc.meteor(["the cat sat"], ["the cat sat"]) == pytest.approx(
        1.0 * (1 - 0.5 * (1 / 3) ** 3)
    )


def test_tokenize_splits_punctuation():
    assert sc.tokenize("the cat, sat.") == ["the", "cat", ",", "sat", "."]
    assert sc.tokenize("ab c", "character") == ["a", "b", "c"]


def test_unknown_granularity_raises():
    with pytest.raises(sc.Error):
        sc.tokenize("x", "sentence")


def test_variants_compose():
    fillers = sc.desk_fillers()
    for v in sc.generate_variants(50, seed=3):
        assert sc.remove_disfluencies(v.punc_target, fillers) == v.joint_target
        assert v.joint_target.endswith(".")


def test_score_reports_all_metrics():
    s = sc.score(["a b"], ["a b"], ["a b"])
    assert set(s) == {"bleu", "meteor", "gleu", "exact_match"}
    assert s["exact_match"] == 1.0


def test_tiny_experiment_and_decoder(tmp_path):
    cfg = {
        "model": {"d_model": 16, "n_heads": 2, "enc_layers": 1, "dec_layers": 1,
                  "ffn_dim": 32, "dropout": 0.0, "max_len": 96},
        "train": {"max_epochs": 1, "batch_size": 16, "learning_rate": 1e-3},
        "sizes": [20],
        "valid_size": 5,
        "test_size": 6,
        "bench_repetitions": 1,
        "decode": {"beam_size": 2, "max_len": 30},
        "output_dir": str(tmp_path),
    }
    report = sc.run_experiment(json.dumps(cfg))
    rows = list(csv.DictReader(io.StringIO(report)))
    assert len(rows) == 11
    assert all(r["status"] == "ok" for r in rows)

    joint = sc.Decoder(str(tmp_path / "models" / "joint.20.ckpt"))
    assert joint.kind == "joint"
    out = joint.convert(["um the cat sat", "a dog ran"], mode="joint", beam=2, max_len=30)
    assert len(out) == 2
    assert joint.passes == 2
    joint.convert(["a dog ran"], mode="cascade-fwd", beam=1, max_len=30)
    assert joint.passes == 4

    pair = sc.Decoder(str(tmp_path / "models" / "dedicated-disf.20.ckpt"),
                      str(tmp_path / "models" / "dedicated-punc.20.ckpt"))
    assert pair.params == joint.params
    pair.convert(["a dog ran"], mode="cascade-fwd", beam=1, max_len=30)
    assert pair.passes == 2


def test_missing_checkpoint_raises(tmp_path):
    with pytest.raises(sc.Error):
        sc.Decoder(str(tmp_path / "nope.ckpt"))
