"""Command-line entry point: ``subfuse <subcommand> ...``.

Exit status is 0 on success, 1 when an input fails to parse or validate and
2 when a file cannot be read or written.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import __version__
from .config import PipelineConfig, load_config
from .decoder import (hypotheses_to_dict, lm_rescorer, parse_emissions, prefix_beam_search,
                      rescore_nbest)
from .evaluate import eval_timelines
from .extractor import build_visual_timeline
from .fusion import fuse
from .lm import DualLm, NGramModel, dual_score, read_arpa, score_text, train_lm, write_arpa
from .model import (ParseError, ValidationError, dumps, parse_asr_document, parse_ocr_video,
                    parse_timeline, write_srt, write_timeline)
from .synth import NoiseProfile, make_corpus, profile_from_json
from .tracker import position_filter, run_tracker, tracks_to_dict


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}", 2) from e


def _write(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror or e}", 2) from e


def _load_arpa(path: str | None) -> NGramModel | None:
    if path is None:
        return None
    try:
        return read_arpa(_read(path))
    except (ParseError, ValidationError, ValueError) as e:
        raise CliError(f"{path}: {e}", 1) from e


def _run_all(fn: Callable, jobs: Sequence, threads: int) -> list:
    """Per-video jobs, in input order; results are written by the caller."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------- workers
# Module-level so that they pickle for the process pool. Each returns
# ("ok", payload) or ("err", message) so one bad video names itself.


def _track_job(job):
    path, data, cfg = job
    try:
        video = parse_ocr_video(data)
        tracks = run_tracker(video.frames, cfg.tracker)
        if cfg.tracker.position_filter:
            tracks = position_filter(tracks, video.dims()[1], cfg.tracker)
        doc = {"video_id": video.video_id, "tracks": tracks_to_dict(tracks)}
        return "ok", (video.video_id, dumps(doc))
    except (ParseError, ValidationError, ValueError) as e:
        return "err", f"{path}: {e}"


def _extract_job(job):
    path, data, cfg = job
    try:
        video = parse_ocr_video(data)
        tl = build_visual_timeline(video, cfg.tracker, cfg.extractor)
        return "ok", (tl.video_id, write_timeline(tl), write_srt(tl))
    except (ParseError, ValidationError, ValueError) as e:
        return "err", f"{path}: {e}"


def _fuse_job(job):
    vis_path, vis_data, asr_path, asr_data, universal, domain, cfg = job
    try:
        visual = parse_timeline(vis_data)
    except (ParseError, ValidationError, ValueError) as e:
        return "err", f"{vis_path}: {e}"
    try:
        asr_id, asr = parse_asr_document(asr_data)
    except (ParseError, ValidationError, ValueError) as e:
        return "err", f"{asr_path}: {e}"
    if asr_id != visual.video_id:
        return "err", f"video_id mismatch: {visual.video_id!r} vs {asr_id!r}"
    try:
        tl, audit = fuse(visual, asr, universal, domain, cfg.fusion, None, cfg.lm)
    except (ValidationError, ValueError) as e:
        return "err", f"{vis_path}: {e}"
    return "ok", (tl.video_id, write_timeline(tl), write_srt(tl), dumps(audit.to_dict()))


def _collect(results: Iterable) -> list:
    out = []
    for status, payload in results:
        if status == "err":
            raise CliError(payload, 1)
        out.append(payload)
    return out


# ------------------------------------------------------------ subcommands


def cmd_track(args, cfg: PipelineConfig) -> int:
    jobs = [(p, _read(p), cfg) for p in args.ocr]
    out = Path(cfg.paths.out_dir)
    for vid, doc in _collect(_run_all(_track_job, jobs, args.threads)):
        _write(out / f"{vid}.tracks.json", doc)
    return 0


def cmd_extract(args, cfg: PipelineConfig) -> int:
    jobs = [(p, _read(p), cfg) for p in args.ocr]
    out = Path(cfg.paths.out_dir)
    for vid, tl, srt in _collect(_run_all(_extract_job, jobs, args.threads)):
        _write(out / f"{vid}.visual.json", tl)
        _write(out / f"{vid}.visual.srt", srt)
    return 0


def cmd_fuse(args, cfg: PipelineConfig) -> int:
    if len(args.inputs) % 2:
        raise CliError("fuse expects VISUAL ASR pairs", 1)
    universal = _load_arpa(cfg.paths.lm_universal)
    domain = _load_arpa(cfg.paths.lm_domain)
    pairs = list(zip(args.inputs[::2], args.inputs[1::2]))
    jobs = [(v, _read(v), a, _read(a), universal, domain, cfg) for v, a in pairs]
    out = Path(cfg.paths.out_dir)
    for vid, tl, srt, audit in _collect(_run_all(_fuse_job, jobs, args.threads)):
        _write(out / f"{vid}.fused.json", tl)
        _write(out / f"{vid}.fused.srt", srt)
        _write(out / f"{vid}.audit.json", audit)
    return 0


def cmd_lm_train(args, cfg: PipelineConfig) -> int:
    try:
        lines = _read(args.corpus).decode("utf-8").splitlines()
    except UnicodeDecodeError as e:
        raise CliError(f"{args.corpus}: not UTF-8 text", 1) from e
    try:
        model = train_lm(lines, cfg.decoder.lm_order)
    except ValueError as e:
        raise CliError(f"{args.corpus}: {e}", 1) from e
    _write(Path(args.output), write_arpa(model))
    return 0


def cmd_lm_score(args, cfg: PipelineConfig) -> int:
    model = _load_arpa(args.model)
    try:
        if args.domain:
            value = dual_score(model, _load_arpa(args.domain), cfg.lm, args.text)
        else:
            value = score_text(model, args.text)
    except ValueError as e:
        raise CliError(str(e), 1) from e
    print(f"{value:.6f}")
    return 0


def cmd_decode(args, cfg: PipelineConfig) -> int:
    try:
        em = parse_emissions(_read(args.emissions))
    except (ParseError, ValidationError) as e:
        raise CliError(f"{args.emissions}: {e}", 1) from e
    universal = _load_arpa(cfg.paths.lm_universal)
    domain = _load_arpa(cfg.paths.lm_domain)
    if (universal is None) != (domain is None):
        raise CliError("decode needs both --lm-universal and --lm-domain, or neither", 1)
    lms = DualLm(universal, domain, cfg.lm) if universal is not None else None
    d = cfg.decoder
    hyps = prefix_beam_search(em, d.beam_width, lms, d.lm_weight, d.n_best)
    if hyps and domain is not None:
        hyps = rescore_nbest(hyps, lm_rescorer(domain, em.tokens), d.rescore_weight)
    doc = {"hypotheses": hypotheses_to_dict(hyps, em.tokens)}
    target = Path(args.output) if args.output else (
        Path(cfg.paths.out_dir) / (Path(args.emissions).stem + ".nbest.json"))
    _write(target, dumps(doc))
    return 0


def _timelines(path: str) -> dict:
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    if p.is_dir() and not files:
        raise CliError(f"{path}: no timeline JSON files", 2)
    out = {}
    for f in files:
        try:
            tl = parse_timeline(_read(str(f)))
        except (ParseError, ValidationError) as e:
            raise CliError(f"{f}: {e}", 1) from e
        if tl.video_id in out:
            raise CliError(f"{f}: duplicate video_id {tl.video_id!r}", 1)
        out[tl.video_id] = tl
    return out


def cmd_eval(args, cfg: PipelineConfig) -> int:
    refs, hyps = _timelines(args.ref), _timelines(args.hyp)
    try:
        report = eval_timelines(refs, hyps, macro=args.macro)
    except (KeyError, ValueError) as e:
        raise CliError(str(e.args[0] if e.args else e), 1) from e
    sys.stdout.write(report.table())
    if args.json:
        _write(Path(args.json), dumps(report.to_dict()))
    return 0


def cmd_synth(args, cfg: PipelineConfig) -> int:
    if args.profile:
        try:
            profile = profile_from_json(_read(args.profile))
        except (ValueError, TypeError) as e:
            raise CliError(f"{args.profile}: {e}", 1) from e
    else:
        profile = NoiseProfile()
    if args.seed is not None:
        profile = NoiseProfile.from_dict({**profile.__dict__, "seed": args.seed})
    out = Path(cfg.paths.out_dir)
    for v in make_corpus(profile, args.videos, args.lines):
        _write(out / f"{v.video_id}.ocr.json", dumps(v.ocr))
        _write(out / f"{v.video_id}.asr.json", dumps(v.asr))
        _write(out / f"{v.video_id}.truth.json", write_timeline(v.truth))
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--threads", type=int, default=1, help="parallel videos (default 1)")
    common.add_argument("--out-dir", dest="out_dir", help="directory for output files")

    p = argparse.ArgumentParser(prog="subfuse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("track", parents=[common], help="link OCR detections into tracks")
    s.add_argument("ocr", nargs="+")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("extract", parents=[common], help="visual subtitle timeline from OCR")
    s.add_argument("ocr", nargs="+")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("lm-train", parents=[common], help="train a character n-gram LM")
    s.add_argument("corpus")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--order", dest="lm_order", type=int)
    s.set_defaults(func=cmd_lm_train)

    s = sub.add_parser("lm-score", parents=[common], help="mean log10 score of a text")
    s.add_argument("model")
    s.add_argument("text")
    s.add_argument("--domain", help="second (domain) model for dual scoring")
    s.set_defaults(func=cmd_lm_score)

    s = sub.add_parser("decode", parents=[common], help="CTC prefix beam search")
    s.add_argument("emissions")
    s.add_argument("-o", "--output")
    s.add_argument("--beam-width", dest="beam_width", type=int)
    s.add_argument("--n-best", dest="n_best", type=int)
    s.add_argument("--lm-weight", dest="lm_weight", type=float)
    _lm_flags(s)
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("fuse", parents=[common], help="fuse visual and ASR timelines")
    s.add_argument("inputs", nargs="+", metavar="VISUAL ASR")
    _lm_flags(s)
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("eval", parents=[common], help="character error rate report")
    s.add_argument("ref", help="timeline JSON or a directory of them")
    s.add_argument("hyp", help="timeline JSON or a directory of them")
    s.add_argument("--macro", action="store_true", help="average per-video CERs")
    s.add_argument("--json", help="also write the report as JSON")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    s.add_argument("--seed", type=int)
    s.add_argument("--profile", help="noise profile JSON")
    s.add_argument("--videos", type=int, default=1)
    s.add_argument("--lines", type=int, default=12)
    s.set_defaults(func=cmd_synth)
    return p


def _lm_flags(s: argparse.ArgumentParser) -> None:
    s.add_argument("--lm-universal", dest="lm_universal")
    s.add_argument("--lm-domain", dest="lm_domain")


_OVERRIDES = ("out_dir", "lm_universal", "lm_domain", "beam_width", "n_best", "lm_weight",
              "lm_order")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    try:
        if args.threads < 1:
            raise CliError("--threads must be >= 1", 1)
        try:
            cfg = load_config(args.config, overrides)
        except OSError as e:
            raise CliError(f"cannot read config {args.config}: {e.strerror or e}", 2) from e
        except (ValidationError, ValueError) as e:
            raise CliError(str(e), 1) from e
        return args.func(args, cfg)
    except CliError as e:
        print(f"subfuse: error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
