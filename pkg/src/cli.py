import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .harness.benchmark import benchmark
from .harness.config import ExitCode, GridConfig, HarnessConfig, PrecisionMode
from .harness.dataset import ScoreTable, format_value, load_manifest
from .harness.degrade import DEFAULT_SIGMAS, DEGRADATIONS, write_synthetic_dataset
from .harness.optimizer import export_surface, grid_search
from .harness.scoring import RANK_TEST_NOTE, compare_measures, evaluate, score_dataset
from .iqa import __version__
from .iqa.errors import DimensionMismatchError, ParameterError
from .iqa.haarpsi import available_presets, haarpsi_score
from .iqa.imgio import (
    CropRect,
    DynamicRange,
    GrayImage,
    RgbImage,
    crop,
    load_image,
    normalize_array,
    prepare_image,
    save_image,
    to_byte_range,
)
from .iqa.measures import parse_measure
from .iqa.stats import SIGNIFICANCE_TESTS, RatingMatrix
from .iqa.wavelet import Padding, ResponseMap
from .utils.console import info, warn
from .utils.run_journal import RunJournal


class UsageError(ParameterError):
    pass


class CliArgumentParser(argparse.ArgumentParser):
    """Reports bad flags as parameter errors (exit 4) instead of argparse's exit 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def exit_code_for(error: BaseException) -> ExitCode:
    if isinstance(error, DimensionMismatchError):
        return ExitCode.SHAPE
    if isinstance(error, OSError):
        return ExitCode.IO
    if isinstance(error, ValueError):
        return ExitCode.PARAMS
    return ExitCode.INTERNAL


def _measure_from_args(args):
    return parse_measure(args.measure, preset=args.preset, C=args.C, alpha=args.alpha,
                         subsample=not args.no_subsample, padding=args.padding)


def _harness_config(args) -> HarnessConfig:
    return HarnessConfig.from_env(
        threads=getattr(args, "threads", None),
        skip_errors=getattr(args, "skip_errors", None) or None,
        verbose=getattr(args, "verbose", None) or None,
        log_dir=getattr(args, "log_dir", None),
    )


def _byte_image(path: str, gray: bool, normalize: bool, rect: Optional[CropRect], label: str):
    img = prepare_image(load_image(path), gray=gray, normalize=normalize)
    if img.range is DynamicRange.UNIT:
        img = to_byte_range(img)
        info(f"{label}: scaled unit range to byte range [0, 255]")
    if rect is not None:
        img = crop(img, rect)
    return img


def _write_maps(out_dir: Path, maps: List[ResponseMap], prefix: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, response in enumerate(maps, 1):
        scaled = GrayImage(normalize_array(response.data), DynamicRange.UNIT)
        save_image(scaled, out_dir / f"{prefix}_{k}.png", bitdepth=16)


def cmd_score(args) -> int:
    measure = _measure_from_args(args)
    rect = CropRect.parse(args.crop) if args.crop else None
    f1 = _byte_image(args.reference, args.gray, args.normalize, rect, "reference")
    f2 = _byte_image(args.distorted, args.gray, args.normalize, rect, "distorted")

    if args.maps:
        if measure.name != "haarpsi":
            raise ParameterError("--maps is only available for haarpsi")
        result = haarpsi_score(f1, f2, measure.params)
        out_dir = Path(args.maps)
        _write_maps(out_dir, list(result.hs_maps), "hs")
        _write_maps(out_dir, list(result.weight_maps), "w")
        value = result.score
    else:
        value = measure.compute(f1, f2)
    print(f"{measure.display_name} {format_value(value)}")
    return ExitCode.OK


def cmd_batch(args) -> int:
    config = _harness_config(args)
    measure = _measure_from_args(args)
    manifest = load_manifest(args.manifest)
    journal = RunJournal(config.log_dir)
    table = score_dataset(manifest, measure, config, journal)
    table.notes.append(f"manifest={manifest.name} grayscale={str(manifest.grayscale).lower()} "
                       f"normalize={str(manifest.normalize).lower()} range=byte")
    if args.out:
        table.to_csv(args.out)
        if config.verbose:
            info(f"wrote {len(table.present)} scores to {args.out}")
    else:
        for image_id, score in table.present:
            print(f"{image_id},{format_value(score)}")
    return ExitCode.OK


def cmd_evaluate(args) -> int:
    scores = ScoreTable.from_csv(args.scores)
    ratings = RatingMatrix.from_csv(args.ratings)
    report = evaluate(scores, ratings)
    line = f"SRCC={report.abs_srcc:.6f} KRCC={report.abs_krcc:.6f} n={report.n}"
    if report.srcc < 0:
        line += " sign=negative"
    print(line)

    if args.against:
        other = ScoreTable.from_csv(args.against)
        other_report = evaluate(other, ratings)
        print(f"{other_report.measure}: SRCC={other_report.abs_srcc:.6f} "
              f"KRCC={other_report.abs_krcc:.6f} n={other_report.n}")
        entries = compare_measures(report, other_report, scores, other, ratings, method=args.method)
        for entry in entries:
            print(f"{entry.method} {entry.statistic} vs {entry.reference}: z={entry.z:.6f} "
                  f"p={entry.p:.6f} flag={entry.direction}")
        if entries[0].caveat:
            warn(entries[0].caveat)
        elif args.verbose:
            info(RANK_TEST_NOTE)
    return ExitCode.OK


def cmd_optimize(args) -> int:
    config = _harness_config(args)
    grid = GridConfig(c_spec=args.c_grid, alpha_spec=args.alpha_grid,
                      precision_mode=PrecisionMode(args.precision_mode))
    base = parse_measure("haarpsi", subsample=not args.no_subsample, padding=args.padding).params
    c_values, alpha_values = grid.c_values(), grid.alpha_values()
    manifests = [load_manifest(path) for path in args.manifests]
    if config.verbose:
        info(f"grid: {len(c_values)} C values x {len(alpha_values)} alpha values "
             f"over {len(manifests)} dataset(s)")

    surface = grid_search(manifests, c_values, alpha_values, base_params=base,
                          precision_mode=grid.precision_mode, report_digits=grid.report_digits,
                          config=config, journal=RunJournal(config.log_dir))
    if args.out:
        export_surface(surface, args.out)
    print(surface.footer())
    return ExitCode.OK


def cmd_bench(args) -> int:
    config = _harness_config(args)
    measure = _measure_from_args(args)
    manifest = load_manifest(args.manifest)
    report = benchmark(manifest, measure, args.reps, config, RunJournal(config.log_dir))
    if config.verbose:
        for rep, total in enumerate(report.run_totals, 1):
            info(f"run {rep}: total_seconds={total:.6f}")
        for phase, stats in report.phases.items():
            info(f"phase {phase}: n={stats['total']} avg_seconds={stats['avg_seconds']:.6f} "
                 f"p90_seconds={stats['p90_seconds']:.6f} max_seconds={stats['max_seconds']:.6f}")
        info(f"host: cpu_count={report.cpu_count} process_cpu_seconds={report.process_cpu_seconds:.6f}")
    print(report.summary_line())
    return ExitCode.OK


def cmd_convert(args) -> int:
    img = load_image(args.input)
    rect = CropRect.parse(args.crop) if args.crop else None
    if not (args.gray or args.normalize or args.byte or rect) and isinstance(img, RgbImage):
        save_image(img, args.output)
        return ExitCode.OK
    converted = prepare_image(img, gray=args.gray, normalize=args.normalize, to_byte=args.byte, rect=rect)
    save_image(converted, args.output)
    return ExitCode.OK


def cmd_synth(args) -> int:
    try:
        sigmas = [float(s) for s in args.sigmas.split(",") if s.strip()]
    except ValueError:
        raise ParameterError(f"--sigmas must be comma-separated numbers, got '{args.sigmas}'")
    kinds = [d.strip() for d in args.degradations.split(",") if d.strip()]
    path = write_synthetic_dataset(args.out_dir, name=args.name, n_images=args.images, size=args.size,
                                   sigmas=sigmas, seed=args.seed, degradations=kinds)
    print(path)
    return ExitCode.OK


def _add_measure_flags(parser, default: str = "haarpsi"):
    parser.add_argument("--measure", default=default,
                        help="haarpsi, haarpsi-<preset>, psnr or ssim (default: %(default)s)")
    parser.add_argument("--preset", help=f"HaarPSI preset: {', '.join(available_presets())}")
    parser.add_argument("--C", dest="C", type=float, help="HaarPSI stabilization constant (with --alpha)")
    parser.add_argument("--alpha", type=float, help="HaarPSI logistic steepness (with --C)")
    _add_haarpsi_flags(parser)


def _add_haarpsi_flags(parser):
    parser.add_argument("--no-subsample", action="store_true", help="Skip the 2x2 mean subsampling")
    parser.add_argument("--padding", default=Padding.SYMMETRIC.value, choices=[p.value for p in Padding],
                        help="Convolution boundary handling (default: %(default)s)")


def _add_run_flags(parser):
    parser.add_argument("--threads", type=int, help="Worker threads (default: IQA_THREADS or 1)")
    parser.add_argument("--log-dir", help="Directory for JSON-lines run journals")
    parser.add_argument("--verbose", action="store_true", help="Progress and details on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(prog="iqa", description="HaarPSI image quality assessment toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("score", help="Score one reference/distorted pair")
    p.add_argument("reference")
    p.add_argument("distorted")
    _add_measure_flags(p)
    p.add_argument("--crop", help="Region of interest x,y,w,h (applied after conversion)")
    p.add_argument("--gray", action="store_true", help="Convert RGB input to grayscale")
    p.add_argument("--normalize", action="store_true", help="Min-max normalize before scoring")
    p.add_argument("--maps", help="Directory for 16-bit HS and weight map PNGs (haarpsi only)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("batch", help="Score every entry of a dataset manifest")
    p.add_argument("manifest")
    _add_measure_flags(p)
    p.add_argument("--out", help="Score table CSV (default: rows on stdout)")
    p.add_argument("--skip-errors", action="store_true", help="Record failing entries as skipped")
    _add_run_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("evaluate", help="SRCC/KRCC of a score table against z-scored ratings")
    p.add_argument("scores")
    p.add_argument("ratings")
    p.add_argument("--against", help="Second score table for a dependent-correlation test")
    p.add_argument("--method", default="steiger", choices=list(SIGNIFICANCE_TESTS),
                   help="Significance test (default: %(default)s)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="Grid search over (C, alpha) maximizing mean SRCC")
    p.add_argument("manifests", nargs="+")
    p.add_argument("--c-grid", default=GridConfig.c_spec, help="lo:hi:step (default: %(default)s)")
    p.add_argument("--alpha-grid", default=GridConfig.alpha_spec, help="lo:hi:step (default: %(default)s)")
    p.add_argument("--precision-mode", default=PrecisionMode.REPORT.value,
                   choices=[m.value for m in PrecisionMode],
                   help="select: pick the argmax on 4-digit SRCC (default: %(default)s)")
    p.add_argument("--out", help="Surface CSV")
    _add_haarpsi_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bench", help="Wall-clock timing of scoring a dataset")
    p.add_argument("manifest")
    _add_measure_flags(p, default="haarpsi-med")
    p.add_argument("--reps", type=int, default=1, help="Repetitions, best-of (default: %(default)s)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("convert", help="Apply gray -> normalize -> byte -> crop and write a PNG")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--gray", action="store_true")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--byte", action="store_true")
    p.add_argument("--crop", help="x,y,w,h")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("synth", help="Write a synthetic degraded-image dataset")
    p.add_argument("out_dir")
    p.add_argument("--name", default="synthetic")
    p.add_argument("--images", type=int, default=4)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--degradations", default="noise",
                   help=f"Comma-separated families: {', '.join(DEGRADATIONS)} (default: %(default)s)")
    p.add_argument("--sigmas", default=",".join(f"{s:g}" for s in DEFAULT_SIGMAS))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return int(args.func(args))
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else ExitCode.OK
    except KeyboardInterrupt:
        print("Interrupted", file=sys.stderr)
        return ExitCode.INTERNAL
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        return int(exit_code_for(e))
