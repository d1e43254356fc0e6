import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from subfuse import __version__
from subfuse.cli import main
from subfuse.config import PipelineConfig, load_config, parse_config_text
from subfuse.model import ValidationError, parse_timeline
from subfuse.synth import lm_corpus, phrase_bank

PROFILE = {"seed": 3, "char_sub_rate": 0.05, "char_homophone_rate": 0.05, "bg_text_rate": 0.3,
           "merge_fault_rate": 0.1, "asr_sub_rate": 0.02}


# ------------------------------------------------------------------- config


def test_config_text_round_trip():
    cfg = PipelineConfig()
    assert PipelineConfig().with_values(parse_config_text(cfg.to_text())) == cfg


def test_config_parsing():
    values = parse_config_text("# tracker\ngate_cost = 0.5  # tighter\n\nposition_filter = off\n"
                               "remove_lm_floor = -2.5\nlm_mode = loglinear\n")
    cfg = PipelineConfig().with_values(values)
    assert cfg.tracker.gate_cost == 0.5 and cfg.tracker.position_filter is False
    assert cfg.fusion.remove_lm_floor == -2.5 and cfg.lm.mode == "loglinear"


@pytest.mark.parametrize("text,msg", [
    ("bogus = 1\n", "unknown config key"),
    ("gate_cost\n", "expected"),
    ("gate_cost = high\n", "cannot read"),
    ("gate_cost = 0.5\ngate_cost = 0.6\n", "duplicate"),
    ("band_count = 1.5\n", "cannot read"),
])
def test_config_errors(text, msg):
    with pytest.raises(ValidationError, match=msg):
        parse_config_text(text)


def test_invalid_value_rejected_by_owner():
    with pytest.raises(ValidationError, match="tracker"):
        PipelineConfig().with_values({"gate_cost": 3.0})


def test_precedence(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("beam_width = 4\nn_best = 3\n")
    cfg = load_config(str(p), {"beam_width": 7, "n_best": None})
    assert (cfg.decoder.beam_width, cfg.decoder.n_best, cfg.decoder.lm_weight) == (7, 3, 0.3)


# ---------------------------------------------------------------------- cli


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "p.json").write_text(json.dumps(PROFILE))
    (root / "clean.json").write_text('{"seed": 3}')
    assert main(["synth", "--profile", str(root / "clean.json"), "--videos", "2",
                 "--out-dir", str(root / "clean")]) == 0
    assert main(["synth", "--profile", str(root / "p.json"), "--videos", "2",
                 "--out-dir", str(root / "noisy")]) == 0
    (root / "dom.txt").write_text("\n".join(lm_corpus(3, 500)), encoding="utf-8")
    (root / "uni.txt").write_text("\n".join(phrase_bank()), encoding="utf-8")
    assert main(["lm-train", str(root / "dom.txt"), "-o", str(root / "dom.arpa")]) == 0
    assert main(["lm-train", str(root / "uni.txt"), "-o", str(root / "uni.arpa")]) == 0
    return root


def _run_pipeline(root, src, out, threads=1):
    ocr = sorted(str(p) for p in (root / src).glob("*.ocr.json"))
    assert main(["extract", *ocr, "--out-dir", str(root / out), "--threads", str(threads)]) == 0
    pairs = []
    for p in ocr:
        vid = Path(p).name.split(".")[0]
        pairs += [str(root / out / f"{vid}.visual.json"), str(root / src / f"{vid}.asr.json")]
    assert main(["fuse", *pairs, "--lm-universal", str(root / "uni.arpa"),
                 "--lm-domain", str(root / "dom.arpa"), "--out-dir", str(root / out),
                 "--threads", str(threads)]) == 0


def test_noiseless_fuse_is_exact(corpus, capsys):
    _run_pipeline(corpus, "clean", "clean_out")
    for vid in ("v000", "v001"):
        truth = parse_timeline((corpus / "clean" / f"{vid}.truth.json").read_bytes())
        fused = parse_timeline((corpus / "clean_out" / f"{vid}.fused.json").read_bytes())
        assert [s.text for s in fused.segments] == [s.text for s in truth.segments]
        assert (corpus / "clean_out" / f"{vid}.fused.srt").read_bytes().startswith(b"1\n")
        audit = json.loads((corpus / "clean_out" / f"{vid}.audit.json").read_bytes())
        assert audit["output_count"] == len(truth.segments)


def test_threads_do_not_change_outputs(corpus):
    _run_pipeline(corpus, "noisy", "t1", threads=1)
    _run_pipeline(corpus, "noisy", "t2", threads=2)
    names = sorted(p.name for p in (corpus / "t1").iterdir())
    assert names == sorted(p.name for p in (corpus / "t2").iterdir())
    for n in names:
        assert (corpus / "t1" / n).read_bytes() == (corpus / "t2" / n).read_bytes()


def test_eval_self_is_zero(corpus, capsys):
    ref = str(corpus / "clean" / "v000.truth.json")
    assert main(["eval", ref, ref, "--json", str(corpus / "r.json")]) == 0
    assert capsys.readouterr().out.splitlines()[-1].split()[-1] == "0.0000"
    assert json.loads((corpus / "r.json").read_text())["aggregate_cer"] == 0.0


def test_eval_directories(corpus, tmp_path, capsys):
    (tmp_path / "ref").mkdir()
    (tmp_path / "hyp").mkdir()
    for vid in ("v000", "v001"):
        (tmp_path / "ref" / f"{vid}.json").write_bytes(
            (corpus / "clean" / f"{vid}.truth.json").read_bytes())
    (tmp_path / "hyp" / "v000.json").write_bytes(
        (corpus / "clean" / "v000.truth.json").read_bytes())
    assert main(["eval", str(tmp_path / "ref"), str(tmp_path / "hyp"), "--macro"]) == 0
    last = capsys.readouterr().out.splitlines()[-1].split()
    assert last[:2] == ["ALL", "(macro)"] and float(last[-1]) == 0.5


def test_track_subcommand(corpus):
    assert main(["track", str(corpus / "clean" / "v000.ocr.json"),
                 "--out-dir", str(corpus / "tracks")]) == 0
    doc = json.loads((corpus / "tracks" / "v000.tracks.json").read_bytes())
    assert doc["video_id"] == "v000" and len(doc["tracks"]) == 12


def test_lm_score(corpus, capsys):
    assert main(["lm-score", str(corpus / "dom.arpa"), "今天的话题"]) == 0
    value = float(capsys.readouterr().out)
    assert math.isfinite(value) and value < 0
    assert main(["lm-score", str(corpus / "uni.arpa"), "今天", "--domain",
                 str(corpus / "dom.arpa")]) == 0


def test_decode(corpus, tmp_path):
    em = {"tokens": ["-", "今", "天"],
          "log_probs": [[math.log(p) for p in row] for row in
                        [[0.1, 0.8, 0.1], [0.6, 0.2, 0.2], [0.1, 0.1, 0.8]]]}
    (tmp_path / "em.json").write_text(json.dumps(em, ensure_ascii=False), encoding="utf-8")
    assert main(["decode", str(tmp_path / "em.json"), "--lm-universal", str(corpus / "uni.arpa"),
                 "--lm-domain", str(corpus / "dom.arpa"), "--beam-width", "5",
                 "--out-dir", str(tmp_path)]) == 0
    hyps = json.loads((tmp_path / "em.nbest.json").read_bytes())["hypotheses"]
    assert hyps[0]["text"] == "今天" and len(hyps) <= 10
    assert main(["decode", str(tmp_path / "em.json"), "-o", str(tmp_path / "plain.json")]) == 0
    plain = json.loads((tmp_path / "plain.json").read_bytes())["hypotheses"]
    assert all(h["lm_score"] is None for h in plain)


def test_decode_needs_both_lms(corpus, tmp_path):
    em = {"tokens": ["-", "a"], "log_probs": [[math.log(0.5), math.log(0.5)]]}
    (tmp_path / "em.json").write_text(json.dumps(em))
    assert main(["decode", str(tmp_path / "em.json"),
                 "--lm-universal", str(corpus / "uni.arpa")]) == 1


def test_malformed_json_exits_1(tmp_path, capsys):
    (tmp_path / "bad.json").write_text('{"frames": [')
    assert main(["extract", str(tmp_path / "bad.json"), "--out-dir", str(tmp_path)]) == 1
    assert "offset" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert main(["extract", str(tmp_path / "nope.json")]) == 2
    assert main(["extract", str(tmp_path / "nope.json"), "--config",
                 str(tmp_path / "nope.cfg")]) == 2


def test_bad_config_exits_1(tmp_path, corpus):
    (tmp_path / "c.cfg").write_text("gate_cost = 9\n")
    assert main(["extract", str(corpus / "clean" / "v000.ocr.json"),
                 "--config", str(tmp_path / "c.cfg")]) == 1


def test_fuse_needs_pairs(corpus):
    assert main(["fuse", str(corpus / "clean" / "v000.asr.json")]) == 1


def test_fuse_rejects_mismatched_videos(corpus, tmp_path):
    _run_pipeline(corpus, "clean", "mm")
    assert main(["fuse", str(corpus / "mm" / "v000.visual.json"),
                 str(corpus / "clean" / "v001.asr.json"), "--out-dir", str(tmp_path)]) == 1


def test_version_and_module_entry():
    out = subprocess.run([sys.executable, "-m", "subfuse", "--version"], capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == f"subfuse {__version__}"
