"""Command-line front end.

Subcommands:
  av-align   score audio-video temporal alignment (file pair or --batch)
  tokens     export per-frame conditioning tokens as a TTC1 file
  gen-synth  write a synthetic audio-video corpus
  train-toy  train the adapter on a corpus, write a TTCKPT1 checkpoint
  generate   sample a video from a checkpoint and an audio file

Exit codes: 0 success, 2 format or input error, 3 duration mismatch
beyond the truncation policy, 4 numeric failure (non-finite loss).

A plain-text config file (--config, key=value per line, keys mirror
long flag names with '-' or '_') can preset any flag; explicit flags
win. The TEMPO_SEED environment variable overrides the default seed
for commands that take one.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import av_align, diffusion_toy, media_io, synthgen, tempo_tokens
from .audio_analysis import OnsetParams, toy_audio_features
from .errors import (DurationError, FormatError, NumericError, TempokitError,
                     ValidationError)
from .motion_analysis import FlowParams
from .numerics import Rng
from .peaks import PeakPickParams

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_DURATION = 3
EXIT_NUMERIC = 4


def _default_seed():
    try:
        return int(os.environ.get("TEMPO_SEED", "0"))
    except ValueError:
        return 0


def _parse_fps(text):
    if "/" in text:
        num, den = text.split("/", 1)
        return int(num), int(den)
    value = float(text)
    if value == int(value):
        return int(value), 1
    return int(round(value * 1000)), 1000


def _load_config_file(path):
    settings = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            settings[key.strip().replace("-", "_")] = value.strip()
    return settings


def _subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def _apply_config_defaults(parser, argv):
    """Pre-scan argv for --config and install its values as defaults on
    every subcommand that knows the key, so explicit flags still win."""
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    settings = _load_config_file(path)
    subs = _subparsers(parser)
    known = set()
    for sub in subs.values():
        known.update(a.dest for a in sub._actions)
    unknown = set(settings) - known
    if unknown:
        raise ValidationError(
            f"unknown config keys: {', '.join(sorted(unknown))}")
    for sub in subs.values():
        dests = {a.dest for a in sub._actions}
        sub.set_defaults(**{k: v for k, v in settings.items()
                            if k in dests})


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _align_params(args):
    onset = OnsetParams(win=int(args.onset_win),
                        threshold_k=float(args.threshold_k),
                        smoothing=int(args.smoothing))
    flow = FlowParams(alpha=float(args.flow_alpha),
                      iterations=int(args.flow_iterations))
    peaks = PeakPickParams(threshold_k=float(args.threshold_k),
                           smoothing=int(args.smoothing))
    return onset, flow, peaks


def _score_pair(video_path, audio_path, args):
    video = media_io.read_video(video_path)
    audio = media_io.read_wav(audio_path)
    onset, flow, peaks = _align_params(args)
    fps = None
    if args.fps_override:
        num, den = _parse_fps(str(args.fps_override))
        fps = num / den
    return av_align.av_align_from_media(
        video, audio, onset_params=onset, flow_params=flow,
        peak_params=peaks, tolerance=int(args.tolerance), fps_override=fps)


def cmd_av_align(args):
    if args.batch:
        reports = []
        for lineno, raw in enumerate(sys.stdin, 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                print(f"line {lineno}: expected 'video audio'",
                      file=sys.stderr)
                return EXIT_FORMAT
            reports.append((parts[0], _score_pair(parts[0], parts[1], args)))
        if args.json:
            print(json.dumps(
                {"clips": [{"video": name, **rep.to_dict()}
                           for name, rep in reports],
                 "mean_score": (float(np.mean([r.score for _, r in reports]))
                                if reports else None)},
                indent=2))
        else:
            for name, rep in reports:
                print(f"{name} score={rep.score:.6f}")
            if reports:
                mean = np.mean([r.score for _, r in reports])
                print(f"mean_score={mean:.6f}")
        return EXIT_OK

    report = _score_pair(args.video, args.audio, args)
    print(report.to_json() if args.json else report.to_text())
    return EXIT_OK


def cmd_tokens(args):
    if bool(args.embeddings) == bool(args.audio):
        print("exactly one of --embeddings or --audio is required",
              file=sys.stderr)
        return EXIT_FORMAT
    seed = args.seed if args.seed is not None else _default_seed()

    if args.ckpt:
        comp = diffusion_toy.load_checkpoint(args.ckpt)
        mapper, pooling, dims = comp.mapper, comp.pooling, comp.dims
    else:
        dims = diffusion_toy.desk_train_dims()
        comp = diffusion_toy.build_components(dims, int(seed))
        mapper, pooling = comp.mapper, comp.pooling

    if args.embeddings:
        emb = media_io.read_embeddings(args.embeddings)
    else:
        if not args.toy_encoder:
            print("--audio requires --toy-encoder", file=sys.stderr)
            return EXIT_FORMAT
        audio = media_io.read_wav(args.audio)
        emb = toy_audio_features(audio, int(args.length), int(args.layers),
                                 int(args.dim))
    if emb.layers * emb.dim != mapper.in_dim:
        print(f"embeddings have segment dim {emb.layers * emb.dim}, "
              f"mapper expects {mapper.in_dim}", file=sys.stderr)
        return EXIT_FORMAT

    tokens = tempo_tokens.map_audio(emb, mapper)
    if args.mode == "vec":
        cond = tempo_tokens.single_vector_condition(tokens)
    else:
        cond = tempo_tokens.build_condition(tokens, pooling)
    media_io.write_condition(cond, args.out)
    print(f"tokens_per_frame={cond.tokens_per_frame}")
    return EXIT_OK


def cmd_gen_synth(args):
    seed = args.seed if args.seed is not None else _default_seed()
    config = synthgen.SynthConfig(
        width=int(args.width), height=int(args.height), fps=int(args.fps),
        duration=float(args.duration), sample_rate=int(args.sample_rate),
        n_events=int(args.events), event_kind=args.kind,
        shift_frames=int(args.shift), seed=int(seed))
    manifest = synthgen.corpus(config, int(args.clips), args.out)
    print(f"manifest={manifest}")
    return EXIT_OK


def cmd_train_toy(args):
    seed = args.seed if args.seed is not None else _default_seed()
    clips = synthgen.read_corpus(os.path.join(args.corpus, "manifest.txt")
                                 if os.path.isdir(args.corpus)
                                 else args.corpus)
    dims = diffusion_toy.desk_train_dims()
    if args.hidden:
        dims.mapper_hidden = tuple(int(h) for h in args.hidden.split(","))
    comp = diffusion_toy.build_components(dims, int(seed))
    items = [diffusion_toy.prepare_item(pair, comp.codec, dims.embed_layers,
                                        dims.embed_dim)
             for pair, _ in clips]
    config = diffusion_toy.TrainConfig(
        batch_videos=int(args.batch), frames_per_video=int(args.frames),
        steps=int(args.steps), learning_rate=float(args.lr),
        lambda_l1=float(args.lambda_l1), seed=int(seed))
    history = diffusion_toy.train(items, config, comp.mapper, comp.pooling,
                                  comp.denoiser, comp.schedule)
    diffusion_toy.save_checkpoint(comp, args.ckpt)
    if args.loss_log:
        with open(args.loss_log, "w", encoding="ascii") as fh:
            fh.write("\n".join(f"{v:.10g}" for v in history) + "\n")
    if history:
        window = min(20, len(history))
        lead = float(np.mean(history[:window]))
        trail = float(np.mean(history[-window:]))
        print(f"steps={len(history)} lead{window}_mean={lead:.6f} "
              f"trail{window}_mean={trail:.6f} ratio={trail / lead:.4f}")
    else:
        print("steps=0 (checkpoint equals initialization)")
    return EXIT_OK


def cmd_generate(args):
    seed = args.seed if args.seed is not None else _default_seed()
    comp = diffusion_toy.load_checkpoint(args.ckpt)
    audio = media_io.read_wav(args.audio)
    emb = toy_audio_features(audio, comp.dims.frames_per_video,
                             comp.dims.embed_layers, comp.dims.embed_dim)
    rng = Rng(int(seed)).derive(diffusion_toy._KEY_GENERATE)
    video = diffusion_toy.generate(emb, comp.mapper, comp.pooling,
                                   comp.denoiser, comp.codec, comp.schedule,
                                   rng, fps=comp.dims.fps)
    media_io.write_video(video, args.out)
    print(f"frames={video.frame_count} size={video.frames.shape[2]}x"
          f"{video.frames.shape[1]} fps={video.fps:g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="tempokit",
        description="audio-conditioned video toolkit: alignment metric, "
                    "token export, synthetic data, toy training")
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("av-align", help="score audio-video alignment")
    p.add_argument("--video", help="RVID file or PPM directory")
    p.add_argument("--audio", help="WAV file")
    p.add_argument("--tolerance", default=1, type=int,
                   help="match window in frames (default 1)")
    p.add_argument("--fps-override", default=None,
                   help="rational fps like 30000/1001")
    p.add_argument("--json", action="store_true")
    p.add_argument("--batch", action="store_true",
                   help="read 'video audio' path pairs from stdin")
    p.add_argument("--onset-win", default=1024)
    p.add_argument("--threshold-k", default=1.5)
    p.add_argument("--smoothing", default=5)
    p.add_argument("--flow-alpha", default=10.0)
    p.add_argument("--flow-iterations", default=100)
    p.set_defaults(func=cmd_av_align)

    p = sub.add_parser("tokens", help="export conditioning tokens (TTC1)")
    p.add_argument("--embeddings", help="TTE1 input file")
    p.add_argument("--audio", help="WAV input (with --toy-encoder)")
    p.add_argument("--toy-encoder", action="store_true")
    p.add_argument("--L", dest="length", default=24,
                   help="segments for the toy encoder")
    p.add_argument("--layers", default=2)
    p.add_argument("--dim", default=12)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("windows", "vec"), default="windows")
    p.add_argument("--ckpt", help="optional trained checkpoint")
    p.add_argument("--seed", default=None, type=int)
    p.set_defaults(func=cmd_tokens)

    p = sub.add_parser("gen-synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--clips", default=32)
    p.add_argument("--shift", default=0)
    p.add_argument("--seed", default=None, type=int)
    p.add_argument("--width", default=64)
    p.add_argument("--height", default=64)
    p.add_argument("--fps", default=24)
    p.add_argument("--duration", default=4.0)
    p.add_argument("--sample-rate", default=16000)
    p.add_argument("--events", default=6)
    p.add_argument("--kind", choices=("bounce", "flash"), default="bounce")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("train-toy", help="train the adapter on a corpus")
    p.add_argument("--corpus", required=True,
                   help="corpus directory or manifest path")
    p.add_argument("--steps", default=200)
    p.add_argument("--lr", default=2e-3)
    p.add_argument("--lambda-l1", dest="lambda_l1", default=0.5)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--loss-log", default=None)
    p.add_argument("--batch", default=8)
    p.add_argument("--frames", default=24)
    p.add_argument("--hidden", default=None,
                   help="mapper hidden sizes, e.g. 64,64,64")
    p.add_argument("--seed", default=None, type=int)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("generate", help="sample a video from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", default=None, type=int)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (FormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except DurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DURATION
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TempokitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
