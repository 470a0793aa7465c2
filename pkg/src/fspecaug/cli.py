"""Command-line interface.

Exit codes: 0 success, 2 usage error (including invalid policies), 3 data or
format error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

from . import __version__
from .bench import run_bench
from .errors import DataError, FormatError, NumericError, PolicyError
from .feature_store import (
    FeatureMatrix,
    compute_global_stats,
    gen_synthetic,
    load_corpus,
    normalize,
    read_stats,
    save_corpus,
    write_header,
    write_record,
    write_stats,
)
from .manifest import load_manifest, output_checksums, write_manifest
from .pipeline import iter_augmented_windows
from .policy import CONFIG_KEYS, UTTERANCE, AugmentPolicy, read_policy_config, validate_policy
from .render import pgm_bytes, write_csv

logger = logging.getLogger("fspecaug")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _frames_range(text: str):
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO..HI, got {text!r}")
    if lo < 1 or lo > hi:
        raise argparse.ArgumentTypeError(f"bad frame range {text!r}")
    return lo, hi


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("policy (override --config)")
    g.add_argument("--config", help="policy file with 'key = value' lines")
    for key in CONFIG_KEYS:
        names = [f"--{key}"]
        if "_" in key:
            names.append(f"--{key.replace('_', '-')}")
        g.add_argument(*names, dest=f"policy_{key}", metavar="VALUE", default=None)


def _resolve_policy(args) -> AugmentPolicy:
    entries = {}
    if args.config:
        with open(args.config) as fh:
            entries.update(read_policy_config(fh))
    for key in CONFIG_KEYS:
        value = getattr(args, f"policy_{key}")
        if value is not None:
            entries[key] = value
    level = str(entries.get("level", "frame")).strip()
    base = AugmentPolicy.utterance_default() if level == UTTERANCE else AugmentPolicy()
    return AugmentPolicy.from_config(entries, base)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fspecaug", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic standard-normal corpus")
    p.add_argument("--utts", type=int, default=10)
    p.add_argument("--dims", type=int, default=80)
    p.add_argument("--frames", type=_frames_range, default=(50, 200), help="N or LO..HI")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="per-dimension global mean/variance sidecar")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("normalize", help="apply a stats sidecar to a corpus")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("augment", help="window + augment a corpus into a window archive")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--left", type=int, default=20)
    p.add_argument("--right", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--workers", type=int, default=1)
    _add_policy_flags(p)

    p = sub.add_parser("render", help="dump archive records as PGM images and/or CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--select", default=None, help="record indices, e.g. '0,3,10-12' (default: all)")
    p.add_argument("--format", choices=("pgm", "csv", "both"), default="both")

    p = sub.add_parser("bench", help="throughput of copy-only / masking / masking+warp")
    p.add_argument("--in", dest="inp", default=None, help="corpus (default: synthetic, in memory)")
    p.add_argument("--windows", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=int, default=80)
    p.add_argument("--left", type=int, default=20)
    p.add_argument("--right", type=int, default=20)
    p.add_argument("--out", default=None, help="also write the report here")
    _add_policy_flags(p)

    p = sub.add_parser("replay", help="re-run a manifest and verify its outputs")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="write to this path instead of the recorded one")
    return parser


def _check_positive(name: str, value: int, minimum: int = 1) -> None:
    if value < minimum:
        raise UsageError(f"{name} must be >= {minimum}, got {value}")


# --------------------------------------------------------------------------
# commands


def cmd_gen(args, argv) -> int:
    _check_positive("--dims", args.dims, 2)
    _check_positive("--utts", args.utts, 0)
    corpus = gen_synthetic(args.utts, args.frames, args.dims, args.seed)
    n = save_corpus(args.out, corpus)
    write_manifest("gen", argv, args.out, master_seed=args.seed)
    logger.info("wrote %d utterances (%d bytes) to %s", len(corpus), n, args.out)
    return EXIT_OK


def cmd_stats(args, argv) -> int:
    stats = compute_global_stats(load_corpus(args.inp))
    with open(args.out, "w") as fh:
        write_stats(stats, fh)
    write_manifest("stats", argv, args.out, inputs={"in": args.inp})
    return EXIT_OK


def cmd_normalize(args, argv) -> int:
    corpus = load_corpus(args.inp)
    with open(args.stats) as fh:
        stats = read_stats(fh)
    save_corpus(args.out, [normalize(m, stats) for m in corpus])
    write_manifest("normalize", argv, args.out, inputs={"in": args.inp, "stats": args.stats})
    return EXIT_OK


def cmd_augment(args, argv) -> int:
    _check_positive("--batch-size", args.batch_size)
    _check_positive("--workers", args.workers)
    _check_positive("--left", args.left, 0)
    _check_positive("--right", args.right, 0)
    policy = _resolve_policy(args)
    corpus = load_corpus(args.inp)
    if not corpus:
        raise DataError("input corpus is empty")
    tau = args.left + 1 + args.right
    if policy.level == UTTERANCE:
        if policy.enable_warp:
            raise PolicyError("time warping is not allowed at utterance level")
    else:
        validate_policy(policy, tau, corpus[0].num_dims)
    total = sum(m.num_frames for m in corpus)
    windows = iter_augmented_windows(
        corpus, policy, args.seed, args.left, args.right, args.batch_size, args.workers
    )
    with open(args.out, "wb") as fh:
        write_header(fh, total)
        for record_id, values in windows:
            write_record(fh, FeatureMatrix(record_id, values))
    write_manifest(
        "augment", argv, args.out, inputs={"in": args.inp, "config": args.config},
        policy=policy.to_config(), master_seed=args.seed,
    )
    return EXIT_OK


def parse_select(text: Optional[str], count: int) -> List[int]:
    if text is None:
        return list(range(count))
    picked = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                picked.extend(range(lo, hi + 1))
            else:
                picked.append(int(part))
        except ValueError:
            raise UsageError(f"bad --select entry {part!r}")
    for i in picked:
        if not 0 <= i < count:
            raise UsageError(f"--select index {i} out of range (archive has {count} records)")
    return picked


def _safe_name(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in text)


def cmd_render(args, argv) -> int:
    corpus = load_corpus(args.inp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in parse_select(args.select, len(corpus)):
        m = corpus[i]
        stem = out / f"{i:06d}_{_safe_name(m.utterance_id)}"
        if args.format in ("pgm", "both"):
            stem.with_suffix(".pgm").write_bytes(pgm_bytes(m.values))
        if args.format in ("csv", "both"):
            with open(stem.with_suffix(".csv"), "w") as fh:
                write_csv(m.values, fh)
    write_manifest("render", argv, out, inputs={"in": args.inp})
    return EXIT_OK


def cmd_bench(args, argv) -> int:
    _check_positive("--windows", args.windows)
    _check_positive("--reps", args.reps, 5)
    _check_positive("--warmup", args.warmup, 0)
    _check_positive("--batch-size", args.batch_size)
    _check_positive("--dims", args.dims, 2)
    policy = _resolve_policy(args)
    corpus = load_corpus(args.inp) if args.inp else None
    report = run_bench(
        corpus, args.windows, args.reps, args.warmup, args.batch_size,
        args.seed, args.left, args.right, args.dims, policy,
    )
    text = report.text()
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


@contextmanager
def _working_dir(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def _with_out(argv: List[str], new_out: str) -> List[str]:
    argv = list(argv)
    for i, tok in enumerate(argv):
        if tok == "--out" and i + 1 < len(argv):
            argv[i + 1] = new_out
            return argv
        if tok.startswith("--out="):
            argv[i] = f"--out={new_out}"
            return argv
    raise UsageError("manifest argv has no --out")


def cmd_replay(args, argv) -> int:
    record = load_manifest(args.manifest)
    rerun = record["argv"]
    out_path = record["output"]
    if args.out:
        out_path = str(Path(args.out).resolve())
        rerun = _with_out(rerun, out_path)
    with _working_dir(record["cwd"]):
        code = main(rerun)
    if code != EXIT_OK:
        return code
    got = output_checksums(out_path)
    if got != record["output_sha256"]:
        logger.error("replay outputs differ from manifest %s", args.manifest)
        return EXIT_DATA
    print(f"replay ok: {len(got)} output file(s) match {args.manifest}")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "stats": cmd_stats,
    "normalize": cmd_normalize,
    "augment": cmd_augment,
    "render": cmd_render,
    "bench": cmd_bench,
    "replay": cmd_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args, argv)
    except (UsageError, PolicyError) as exc:
        print(f"fspecaug {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"fspecaug {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, DataError, OSError, ValueError) as exc:
        print(f"fspecaug {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
