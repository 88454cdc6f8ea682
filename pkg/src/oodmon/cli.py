"""Command-line pipeline: corpus, score, calibrate, monitor, analyze.

Every file-writing command drops a ``run_manifest.json`` beside its outputs
holding the resolved configuration, toolkit version, and input digests, so a
run can be reproduced bit for bit. All configuration is explicit flags; no
environment variables are read.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

from . import __version__
from .analysis import group_summary, regress, windowed_pairs
from .calibration import build_histogram, find_min_tau, windowed_means, write_histogram_csv
from .errors import (
    DegenerateXError,
    EmptyInputError,
    EmptyMatrixError,
    IdenticalImagesError,
    LabelOutOfRangeError,
    MalformedHeaderError,
    MissingMiouError,
    NoFullWindowError,
    NonMonotonicFrameIdError,
    NonPositiveFrameRateError,
    ShapeMismatchError,
    TooFewPointsError,
    TruncatedPixelDataError,
    UnsupportedMaxvalError,
)
from .image_io import load_image, load_label_map, write_image
from .metrics import confusion, miou, psnr
from .monitor import (
    PSNR_CAP_DB,
    SLIDING,
    TUMBLING,
    Monitor,
    ScoreRecord,
    decision_latency,
    record_from_json,
    record_to_json,
    verdict_to_json,
)
from .reconstructor import SHIFT_KINDS, CorpusSpec, StandInConfig, generate_corpus, reconstruct

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FRAME = 4
EXIT_NO_SEPARATION = 5
EXIT_STREAM_ORDER = 6
EXIT_MISSING_MIOU = 7


# -- shared helpers -------------------------------------------------------


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_run_manifest(out_dir: Path, command: str, config: dict, input_paths: list[Path]) -> None:
    digests = {}
    for path in input_paths:
        key = str(path)
        if key not in digests:
            digests[key] = _sha256(path)
    doc = {
        "command": command,
        "config": config,
        "toolkit_version": __version__,
        "input_digests": digests,
    }
    (out_dir / "run_manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def _require_out(args) -> Path:
    if not args.out:
        raise ValueError("--out is required for this command")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w_text, h_text = text.lower().split("x")
        return int(w_text), int(h_text)
    except ValueError:
        raise ValueError(f"--size must look like WIDTHxHEIGHT, got {text!r}") from None


def _parse_shift(text: str) -> tuple[str, float]:
    kind, _, amount_text = text.partition(":")
    if kind not in SHIFT_KINDS:
        raise ValueError(f"--shift kind must be one of {SHIFT_KINDS}, got {kind!r}")
    if kind == "invert":
        if amount_text:
            raise ValueError("--shift invert takes no amount")
        return kind, 0.0
    if not amount_text:
        raise ValueError(f"--shift {kind} needs an amount, e.g. {kind}:0.15")
    try:
        return kind, float(amount_text)
    except ValueError:
        raise ValueError(f"--shift amount must be numeric, got {amount_text!r}") from None


def _parse_standin(text: str) -> StandInConfig:
    try:
        k_text, b_text = text.split(",")
        return StandInConfig(block=int(k_text), quant_bits=int(b_text))
    except ValueError as exc:
        raise ValueError(f"--standin must look like K,B (e.g. 2,6): {exc}") from None


def _read_corpus_manifest(path: Path) -> list[dict]:
    entries = []
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        if "path" not in doc:
            raise ValueError(f"{path}:{line_no}: manifest entry without a path")
        entries.append(doc)
    if not entries:
        raise ValueError(f"{path}: empty corpus manifest")
    return entries


def _read_score_file(path: Path, cap: float = PSNR_CAP_DB) -> list[ScoreRecord]:
    records = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if line:
            records.append(record_from_json(line, cap=cap))
    return records


# -- corpus ---------------------------------------------------------------


def cmd_corpus(args) -> int:
    kind, amount = _parse_shift(args.shift)
    width, height = _parse_size(args.size)
    spec = CorpusSpec(
        count=args.count,
        width=width,
        height=height,
        shift_kind=kind,
        shift_amount=amount,
        seed=args.seed,
    )
    out_dir = _require_out(args)
    counters = {"in": 0, "out": 0}
    lines = []
    for img, domain in generate_corpus(spec):
        ext = "pgm" if img.channels == 1 else "ppm"
        name = f"{domain}_{counters[domain]:03d}.{ext}"
        counters[domain] += 1
        write_image(img, out_dir / name)
        lines.append(json.dumps({"path": name, "domain": domain}))
    (out_dir / "manifest.jsonl").write_text("\n".join(lines) + "\n")
    _write_run_manifest(
        out_dir,
        "corpus",
        {
            "count": spec.count,
            "width": spec.width,
            "height": spec.height,
            "shift_kind": spec.shift_kind,
            "shift_amount": spec.shift_amount,
            "seed": spec.seed,
        },
        [],
    )
    _say(args, f"wrote {len(lines)} images and manifest.jsonl to {out_dir}")
    return EXIT_OK


# -- score ----------------------------------------------------------------


def cmd_score(args) -> int:
    if bool(args.standin) == bool(args.recon_dir):
        raise ValueError("exactly one of --standin or --recon-dir is required")
    if (args.gt_dir is None) != (args.pred_dir is None):
        raise ValueError("--gt-dir and --pred-dir must be given together")
    if args.gt_dir is not None and args.classes is None:
        raise ValueError("--classes is required with --gt-dir/--pred-dir")
    manifest_path = Path(args.manifest)
    entries = _read_corpus_manifest(manifest_path)
    base = manifest_path.parent
    standin = _parse_standin(args.standin) if args.standin else None
    out_dir = _require_out(args)

    records = []
    inputs = [manifest_path]
    channels_seen = set()
    for frame_id, entry in enumerate(entries):
        rel = entry["path"]
        image_path = base / rel
        img = load_image(image_path)
        inputs.append(image_path)
        channels_seen.add(img.channels)
        if standin is not None:
            recon = reconstruct(img, standin)
        else:
            recon_path = Path(args.recon_dir) / rel
            if not recon_path.exists():
                _fail(f"frame {frame_id} ({rel}): no reconstruction at {recon_path}")
                return EXIT_FRAME
            recon = load_image(recon_path)
            inputs.append(recon_path)
        try:
            value = psnr(img, recon)
            capped = False
        except IdenticalImagesError:
            value = args.cap
            capped = True
        except ShapeMismatchError as exc:
            _fail(f"frame {frame_id} ({rel}): {exc}")
            return EXIT_FRAME
        miou_value = None
        if args.gt_dir is not None:
            gt_path = Path(args.gt_dir) / rel
            pred_path = Path(args.pred_dir) / rel
            try:
                gt = load_label_map(gt_path)
                pred = load_label_map(pred_path)
                miou_value = miou(confusion(gt, pred, args.classes))
            except (ShapeMismatchError, LabelOutOfRangeError, EmptyMatrixError) as exc:
                _fail(f"frame {frame_id} ({rel}): {exc}")
                return EXIT_FRAME
            inputs.extend([gt_path, pred_path])
        records.append(
            ScoreRecord(
                frame_id=frame_id,
                psnr=value,
                domain=entry.get("domain"),
                miou=miou_value,
                capped=capped,
            )
        )

    scores_path = out_dir / "scores.jsonl"
    scores_path.write_text("\n".join(record_to_json(r) for r in records) + "\n")
    _write_run_manifest(
        out_dir,
        "score",
        {
            "manifest": str(manifest_path),
            "standin": args.standin,
            "recon_dir": args.recon_dir,
            "gt_dir": args.gt_dir,
            "pred_dir": args.pred_dir,
            "classes": args.classes,
            "cap": args.cap,
            "channels": sorted(channels_seen),
        },
        inputs,
    )
    _say(args, f"scored {len(records)} frames into {scores_path}")
    return EXIT_OK


# -- calibrate --------------------------------------------------------------


def cmd_calibrate(args) -> int:
    if args.bins < 1:
        raise ValueError(f"--bins must be >= 1, got {args.bins}")
    in_path = Path(args.in_scores)
    out_path = Path(args.out_scores)
    in_scores = [r.psnr for r in _read_score_file(in_path)]
    out_scores = [r.psnr for r in _read_score_file(out_path)]
    result = find_min_tau(in_scores, out_scores, args.tau_max)
    out_dir = _require_out(args)
    (out_dir / "calibration.json").write_text(json.dumps(result.to_dict(), indent=2) + "\n")

    taus = list(args.hist_tau or [])
    if not taus:
        taus = [1]
        if result.tau_min is not None and result.tau_min != 1:
            taus.append(result.tau_min)
    for tau in taus:
        if tau < 1:
            raise ValueError(f"--hist-tau must be >= 1, got {tau}")
        if tau > len(in_scores) or tau > len(out_scores):
            _say(args, f"skipping histograms at tau={tau}: no full window in one set")
            continue
        in_means = windowed_means(in_scores, tau)
        out_means = windowed_means(out_scores, tau)
        lo = float(math.floor(min(min(in_means), min(out_means))))
        hi = float(math.ceil(max(max(in_means), max(out_means))))
        if hi <= lo:
            hi = lo + 1.0
        hist_in = build_histogram(in_means, args.bins, lo, hi, label="in")
        hist_out = build_histogram(out_means, args.bins, lo, hi, label="out")
        write_histogram_csv(hist_in, out_dir / f"hist_in_tau{tau}.csv")
        write_histogram_csv(hist_out, out_dir / f"hist_out_tau{tau}.csv")
        if not args.no_figures:
            from . import plots

            plots.save_histogram_figure(
                [hist_in, hist_out], out_dir / f"hist_tau{tau}.png", title=f"window length tau = {tau}"
            )
    if not args.no_figures:
        from . import plots

        plots.save_margin_curve_figure(result, out_dir / "margin_curve.png")

    _write_run_manifest(
        out_dir,
        "calibrate",
        {
            "in": str(in_path),
            "out_domain": str(out_path),
            "tau_max": args.tau_max,
            "bins": args.bins,
            "hist_tau": taus,
        },
        [in_path, out_path],
    )
    if result.tau_min is None:
        _fail(f"no complete separation for any tau up to {args.tau_max}")
        return EXIT_NO_SEPARATION
    _say(args, f"tau_min={result.tau_min} threshold={result.threshold:.4f} margin={result.margin:.4f}")
    return EXIT_OK


# -- monitor ----------------------------------------------------------------


def cmd_monitor(args) -> int:
    threshold = args.threshold
    tau = args.tau
    if args.calib:
        calib = json.loads(Path(args.calib).read_text())
        if threshold is None:
            threshold = calib.get("threshold")
        if tau is None:
            tau = calib.get("tau_min")
    if tau is None:
        tau = 1
    latency = None
    if args.frame_rate is not None:
        latency = decision_latency(tau, args.frame_rate)
    mon = Monitor(tau=tau, threshold=threshold, mode=args.mode)

    emitted: list[str] = []

    def emit(verdict) -> None:
        line = verdict_to_json(verdict)
        print(line, flush=True)
        emitted.append(line)

    stream = sys.stdin if args.scores == "-" else open(args.scores)
    try:
        for line in stream:
            line = line.strip()
            if not line:
                continue
            record = record_from_json(line, cap=args.cap)
            try:
                verdict = mon.push(record)
            except NonMonotonicFrameIdError as exc:
                _fail(str(exc))
                return EXIT_STREAM_ORDER
            if verdict is not None:
                emit(verdict)
        if args.flush:
            verdict = mon.flush()
            if verdict is not None:
                emit(verdict)
    finally:
        if stream is not sys.stdin:
            stream.close()

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "verdicts.jsonl").write_text("\n".join(emitted) + ("\n" if emitted else ""))
        config = {
            "scores": args.scores,
            "calib": args.calib,
            "tau": tau,
            "threshold": threshold,
            "mode": args.mode,
            "flush": args.flush,
            "cap": args.cap,
            "frame_rate": args.frame_rate,
        }
        if latency is not None:
            config["decision_latency_s"] = latency
        inputs = [Path(p) for p in (args.scores, args.calib) if p and p != "-"]
        _write_run_manifest(out_dir, "monitor", config, inputs)
    return EXIT_OK


# -- analyze ----------------------------------------------------------------


def cmd_analyze(args) -> int:
    paths = [Path(p) for p in args.scores]
    records = []
    for path in paths:
        records.extend(_read_score_file(path))
    if not records:
        raise EmptyInputError("no score records in input")
    out_dir = _require_out(args)

    groups: dict[str, list[ScoreRecord]] = {}
    for record in records:
        groups.setdefault(record.domain or "", []).append(record)
    pairs_by_group = {tag: windowed_pairs(members, args.tau) for tag, members in groups.items()}

    fits = {}
    regressions = []
    for tag, pairs in pairs_by_group.items():
        try:
            fit = regress(pairs, group=tag, tau=args.tau)
        except (TooFewPointsError, DegenerateXError) as exc:
            _say(args, f"no regression for group {tag!r}: {exc}")
            continue
        fits[tag] = fit
        regressions.append(fit)

    doc = {
        "tau": args.tau,
        "groups": group_summary(records),
        "regressions": [fit.to_dict() for fit in regressions],
    }
    if args.pooled:
        pooled_pairs = [pair for pairs in pairs_by_group.values() for pair in pairs]
        doc["pooled"] = regress(pooled_pairs, group="pooled", tau=args.tau).to_dict()
        doc["pooled_caveat"] = (
            "pooled fit mixes domain populations whose accuracy differs for "
            "reasons PSNR does not explain; prefer the per-group fits"
        )
    (out_dir / "analysis.json").write_text(json.dumps(doc, indent=2) + "\n")

    with open(out_dir / "scatter.csv", "w", newline="") as fh:
        fh.write("psnr,miou,domain\n")
        for tag, pairs in pairs_by_group.items():
            for x, y in pairs:
                fh.write(f"{x!r},{y!r},{tag}\n")

    if not args.no_figures:
        from . import plots

        plots.save_scatter_figure(
            pairs_by_group, fits, out_dir / f"scatter_tau{args.tau}.png", title=f"tau = {args.tau}"
        )

    _write_run_manifest(
        out_dir,
        "analyze",
        {"scores": [str(p) for p in paths], "tau": args.tau, "pooled": args.pooled},
        paths,
    )
    _say(args, f"analyzed {len(records)} records across {len(groups)} group(s)")
    return EXIT_OK


# -- parser / dispatch --------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oodmon",
        description="Out-of-domain detection from reconstruction error: "
        "generate corpora, score frames, calibrate thresholds, monitor streams, analyze accuracy.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="PRNG seed (default 0)")
    common.add_argument("--quiet", action="store_true", help="suppress status messages")

    p = sub.add_parser("corpus", parents=[common], help="generate a synthetic two-domain image corpus")
    p.add_argument("--count", type=int, required=True, help="images per domain")
    p.add_argument("--size", required=True, metavar="WxH", help="image size, e.g. 64x64")
    p.add_argument(
        "--shift",
        required=True,
        metavar="KIND[:AMOUNT]",
        help="domain shift: noise:SIGMA, brightness:DELTA, or invert",
    )
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("score", parents=[common], help="score frames: one PSNR record per manifest entry")
    p.add_argument("--manifest", required=True, help="corpus manifest (JSON lines: path, domain)")
    p.add_argument("--standin", metavar="K,B", help="reconstruct with the stand-in codec (block K, B bits)")
    p.add_argument("--recon-dir", help="directory of externally produced reconstructions (same file names)")
    p.add_argument("--gt-dir", help="directory of ground-truth label maps (same file names)")
    p.add_argument("--pred-dir", help="directory of predicted label maps (same file names)")
    p.add_argument("--classes", type=int, help="number of segmentation classes for mIoU")
    p.add_argument("--cap", type=float, default=PSNR_CAP_DB, help="PSNR substitute for identical frames (dB)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate", parents=[common], help="find the minimal separating tau and threshold")
    p.add_argument("--in", dest="in_scores", required=True, metavar="FILE", help="in-domain score file")
    p.add_argument("--out-domain", dest="out_scores", required=True, metavar="FILE", help="out-of-domain score file")
    p.add_argument("--tau-max", type=int, default=50, help="largest window length to scan (default 50)")
    p.add_argument("--bins", type=int, default=50, help="histogram bin count (default 50)")
    p.add_argument("--hist-tau", type=int, action="append", metavar="TAU",
                   help="emit histograms at this tau (repeatable; default: 1 and tau_min)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering, write CSV/JSON only")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("monitor", parents=[common], help="stream score records into windowed verdicts")
    p.add_argument("scores", nargs="?", default="-", help="score JSONL file (default: standard input)")
    p.add_argument("--calib", help="calibration.json supplying threshold and tau")
    p.add_argument("--threshold", type=float, help="decision threshold in dB (overrides --calib)")
    p.add_argument("--tau", type=int, help="window length (overrides --calib; default 1)")
    p.add_argument("--mode", choices=[TUMBLING, SLIDING], default=TUMBLING, help="windowing mode")
    p.add_argument("--flush", action="store_true", help="emit a partial verdict for a trailing short window")
    p.add_argument("--frame-rate", type=float, help="camera rate in Hz; records decision latency in the manifest")
    p.add_argument("--cap", type=float, default=PSNR_CAP_DB, help="PSNR substitute for non-finite scores (dB)")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("analyze", parents=[common], help="regress mIoU on PSNR per domain group")
    p.add_argument("scores", nargs="+", help="score JSONL file(s) carrying miou")
    p.add_argument("--tau", type=int, default=1, help="window length for paired means (default 1)")
    p.add_argument("--pooled", action="store_true", help="also fit a pooled regression across groups")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering, write CSV/JSON only")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (
        ValueError,
        EmptyInputError,
        NoFullWindowError,
        TooFewPointsError,
        DegenerateXError,
        NonPositiveFrameRateError,
    ) as exc:
        _fail(str(exc))
        return EXIT_USAGE
    except (MalformedHeaderError, UnsupportedMaxvalError, TruncatedPixelDataError, OSError) as exc:
        _fail(str(exc))
        return EXIT_IO
    except (ShapeMismatchError, LabelOutOfRangeError, EmptyMatrixError) as exc:
        _fail(str(exc))
        return EXIT_FRAME
    except NonMonotonicFrameIdError as exc:
        _fail(str(exc))
        return EXIT_STREAM_ORDER
    except MissingMiouError as exc:
        _fail(str(exc))
        return EXIT_MISSING_MIOU


if __name__ == "__main__":
    sys.exit(main())
