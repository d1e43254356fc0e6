"""Acceptance criteria, one test each.

Every test prints a single ``[ACCEPT] <criterion>: PASS|FAIL (<detail>)``
line that survives pytest's output capture, so ``pytest -v`` doubles as the
acceptance report. Run this file directly for just those lines.
"""
import json
import math
import random
import time

import numpy as np
import pytest

from subfuse.assignment import assignment_cost, solve_assignment
from subfuse.decoder import EmissionMatrix, prefix_beam_search
from subfuse.evaluate import eval_timelines
from subfuse.extractor import build_visual_timeline
from subfuse.fusion import fuse, pad_missing, split_merged
from subfuse.lm import read_arpa, score_text, train_lm, write_arpa
from subfuse.model import (AsrSegment, Candidate, SubtitleSegment, Timeline, dumps,
                           parse_asr_document, parse_ocr_video, write_timeline)
from subfuse.synth import NoiseProfile, lm_corpus, make_corpus, phrase_bank
from subfuse.textsim import char_similarity, default_syllable_table, syllable_similarity

from oracles import brute_assignment_cost, ctc_path_sums

NOISY = NoiseProfile(seed=7, char_sub_rate=0.05, char_homophone_rate=0.05, bg_text_rate=0.3,
                     merge_fault_rate=0.1, asr_sub_rate=0.02)
CLEAN = NoiseProfile(seed=7)
N_VIDEOS = 50


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[ACCEPT] {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"{criterion}: {detail}"
    return emit


def _seg(start, end, text, cands=None):
    cands = cands or [(text, 1, 1.0)]
    return SubtitleSegment(start, end, text, "visual",
                           tuple(Candidate(t, n, c) for t, n, c in cands))


def run_pipeline(profile):
    """Synthesize the corpus and run extract + fuse; returns CERs, outputs and timing."""
    t0 = time.perf_counter()
    corpus = make_corpus(profile, N_VIDEOS)
    domain = train_lm(lm_corpus(profile.seed), order=4)
    universal = train_lm(phrase_bank(), order=4)
    refs, visual, fused, outputs = {}, {}, {}, {}
    for v in corpus:
        tl = build_visual_timeline(parse_ocr_video(dumps(v.ocr)))
        _, asr = parse_asr_document(dumps(v.asr))
        out, audit = fuse(tl, asr, universal, domain)
        refs[v.video_id], visual[v.video_id], fused[v.video_id] = v.truth, tl, out
        outputs[v.video_id] = (write_timeline(tl), write_timeline(out), dumps(audit.to_dict()))
    elapsed = time.perf_counter() - t0
    return {
        "visual_cer": eval_timelines(refs, visual).aggregate_cer,
        "fused_cer": eval_timelines(refs, fused).aggregate_cer,
        "outputs": outputs,
        "seconds": elapsed,
    }


@pytest.fixture(scope="module")
def noisy_run():
    return run_pipeline(NOISY)


# -------------------------------------------------------- worked examples


def test_filter_similarities(report):
    table = default_syllable_table()
    pairs = [("比如说感冒的其他的病毒感染", "比如说感冒的其它的病毒感染", 24 / 26, 1.0),
             ("但是如果是无中生有的度", "但是如果是无中生有的杜撰", 20 / 23, 22 / 23)]
    got, ok = [], True
    for a, b, want_c, want_s in pairs:
        c, s = char_similarity(a, b), syllable_similarity(a, b, table)
        got.append(f"{c:.4f}/{s:.4f}")
        ok &= abs(round(c, 2) - want_c) <= 0.005 and abs(round(s, 2) - want_s) <= 0.005
        ok &= math.isclose(c, want_c) and math.isclose(s, want_s)
    report("Filter char/syllable similarity pairs", ok, ", ".join(got))


def test_padder_decisions(report):
    rows = [("到现在", "到现在为止你大概借给她多少钱", False),
            ("都会说一些", "她会讲一些很难听的话", False),
            ("我来跟你说几句", "我来跟您说几句哥哥", False),
            ("机会我不是没给你", "我讲得很清楚", True),
            ("你们好欢迎陈曦大家好", "陪妈妈们学习为妈妈们服务", True),
            ("陈勇鹏安徽中医药大学第一附属医院儿科副主任医师", "从事儿科临床教学工作二十余年", True)]
    decisions = []
    for asr_text, nxt, _ in rows:
        pads = pad_missing([AsrSegment(0, 1000, asr_text)], Timeline("v", (_seg(3000, 5000, nxt),)))
        decisions.append(bool(pads))
    want = [r[2] for r in rows]
    shown = " ".join("YES" if d else "NO" for d in decisions)
    report("Padder decisions (six rows)", decisions == want, shown)


def test_splitter_examples(report):
    a, b = "他可能就是一个普通的感冒", "有可能不是普通的感冒"
    out1 = split_merged(_seg(0, 4000, a, [(a, 2, 0.9), (b, 2, 0.9)]),
                        "也不能讲他可能就是一个普通的感冒有可能不是普通的感冒有可能是一个")
    c, d = "你们俩都是二婚", "你们都是头婚吗"
    out2 = split_merged(_seg(0, 3000, c, [(c, 1, 0.9), (d, 1, 0.9)]),
                        "你们都是结婚你们俩都是二婚家庭")
    t1, t2 = [s.text for s in out1], [s.text for s in out2]
    report("Splitter outputs and order", t1 == [a, b] and t2 == [d, c],
           f"{'|'.join(t1)} ; {'|'.join(t2)}")


# ------------------------------------------------------------------ oracles


def test_assignment_oracle(report):
    rng = np.random.default_rng(2024)
    cases = []
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        cases.append(rng.integers(0, 100, size=(n, n)))
    for _ in range(200):
        cases.append(rng.integers(0, 100, size=(int(rng.integers(1, 6)), int(rng.integers(1, 6)))))
    t0 = time.perf_counter()
    solved = [solve_assignment(c) for c in cases]
    elapsed = time.perf_counter() - t0
    bad = sum(1 for c, p in zip(cases, solved)
              if len(p) != min(c.shape) or assignment_cost(c, p) != brute_assignment_cost(c))
    report("Assignment vs brute force (1000 square + 200 rectangular, < 5 s)",
           bad == 0 and elapsed < 5.0, f"{bad} mismatches, solver {elapsed:.2f} s")


def test_ctc_oracle(report):
    rng = np.random.default_rng(99)
    worst_lp, worst_total = 0.0, 0.0
    for _ in range(200):
        T, V = int(rng.integers(1, 5)), int(rng.integers(2, 5))
        logits = rng.normal(size=(T, V)) * 2
        lp = logits - np.logaddexp.reduce(logits, axis=1, keepdims=True)
        em = EmissionMatrix(lp, tuple(str(i) for i in range(V)))
        oracle = ctc_path_sums(lp)
        worst_total = max(worst_total, abs(sum(oracle.values()) - 1.0))
        hyps = prefix_beam_search(em, beam_width=V ** T, n_best=V ** T)
        if {h.labels for h in hyps} != set(oracle):
            worst_lp = math.inf
            break
        for h in hyps:
            worst_lp = max(worst_lp, abs(h.log_prob - math.log(oracle[h.labels])))
    report("CTC prefix beam vs path enumeration (200 cases)",
           worst_lp <= 1e-9 and worst_total <= 1e-9,
           f"max |dlogp| {worst_lp:.2e}, max |sum-1| {worst_total:.2e}")


def test_lm_values(report):
    score = score_text(train_lm(["aab"], order=1), "ab")
    rng = random.Random(11)
    alphabet = "今天天气不错我们出去走吗"
    corpus = ["".join(rng.choice(alphabet) for _ in range(rng.randint(3, 15)))
              for _ in range(300)]
    model = train_lm(corpus, order=4)
    back = read_arpa(write_arpa(model))
    drift = max(abs(score_text(model, t) - score_text(back, t))
                for t in ("".join(rng.choice(alphabet + "雨") for _ in range(rng.randint(1, 20)))
                          for _ in range(100)))
    report("LM hand score and ARPA round trip", abs(score + 0.3266) <= 1e-4 and drift <= 1e-9,
           f"score {score:.6f}, drift {drift:.1e}")


# --------------------------------------------------------------- end to end


def test_end_to_end_zero_noise(report):
    run = run_pipeline(CLEAN)
    report("End-to-end zero noise CER = 0 (50 videos)",
           run["visual_cer"] == 0.0 and run["fused_cer"] == 0.0,
           f"visual {run['visual_cer']:.4f}, fused {run['fused_cer']:.4f}")


def test_end_to_end_noisy(report, noisy_run):
    v, f, s = noisy_run["visual_cer"], noisy_run["fused_cer"], noisy_run["seconds"]
    report("End-to-end noisy: fused < visual < 0.25, < 60 s",
           f < v < 0.25 and s < 60.0, f"visual {v:.4f}, fused {f:.4f}, {s:.1f} s")


def test_determinism(report, noisy_run):
    again = run_pipeline(NOISY)
    same = again["outputs"] == noisy_run["outputs"]
    n_files = 3 * len(noisy_run["outputs"])
    report("Determinism: byte-identical timelines and audits", same,
           f"{n_files} files compared")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
