# Tracking/CLI/cli.py
"""
`mbpp` command line: simulate scenes, track candidate streams, evaluate trajectories,
generate training pairs, compare reports and ingest COCO annotations.

Exit codes: 0 success, 1 usage error, 2 data/format/config error. Errors are printed
to stderr as one JSON line {"error": code, "message": text}.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import dotenv
from pydantic import ValidationError

from Tracking.Adapters.Outbound.jsonl_stream_adapter import JsonlManifestAdapter, JsonlStreamAdapter, write_jsonl
from Tracking.Adapters.Outbound.opencv_image_adapter import OpenCVImageAdapter
from Tracking.Adapters.Outbound.otb_trajectory_adapter import OtbTrajectoryAdapter
from Tracking.Adapters.Outbound.report_file_adapter import ReportFileAdapter
from Tracking.Adapters.Outbound.yaml_config_adapter import YamlConfigAdapter
from Tracking.Domain import candidates, evaluation, mbpp, pairgen, simulator
from Tracking.Domain.errors import StreamFormatError, TrackingError
from Tracking.Domain.image_domain_enum import ImageDomain
from Tracking.Domain.mbpp import FrameObservation, StreamHeader
from Tracking.Domain.run_config import RunConfig, resolve
from Tracking.Domain.tracking_mode_enum import TrackingMode
from Tracking.Domain.utils.report_markdown import rows_to_markdown

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

COMPARISON_HEADERS = {
    "scope": "Scope",
    "label": "Run",
    "count": "Seqs",
    "auc": "AUC",
    "precision": "P",
    "norm_precision": "P-Norm",
    "d_auc": "dAUC",
    "d_precision": "dP",
    "d_norm_precision": "dP-Norm",
}

streams = JsonlStreamAdapter()
manifests = JsonlManifestAdapter()
trajectories = OtbTrajectoryAdapter()
images = OpenCVImageAdapter()
reports = ReportFileAdapter()
configs = YamlConfigAdapter()


def emit_error(code: str, message: str) -> None:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)


class JsonArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        emit_error("usage_error", f"{self.prog}: {message}")
        sys.exit(EXIT_USAGE)


# config

def _run_config_dict(data: dict) -> dict:
    # a bare scenario document (SceneConfig keys only) is accepted as the scene section
    if data and not set(data) <= set(RunConfig.model_fields):
        return {"scene": data}
    return data


def load_run_config(args: argparse.Namespace) -> RunConfig:
    data = _run_config_dict(configs.load(args.config)) if args.config else {}
    overrides = list(args.set or [])
    if args.conf is not None:
        overrides.append(f"mbpp.conf={args.conf}")
    if args.num_candidates is not None:
        overrides += [f"candidates.n={args.num_candidates}", f"scene.num_candidates={args.num_candidates}"]
    if args.seed is not None:
        overrides.append(f"scene.seed={args.seed}")
    if getattr(args, "epoch_size", None) is not None:
        overrides.append(f"sampler.epoch_size={args.epoch_size}")
    return resolve(data, overrides)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) in (None, [])]
    if missing:
        args.parser.error(f"the following arguments are required: {', '.join(missing)}")


def _fan_out(fn, items: list, workers: int | None = None) -> list:
    if len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# simulate

def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "out")
    out = Path(args.out)
    scenes = [config.scene.model_copy(update={"seed": config.scene.seed + i}) for i in range(args.batch)]

    def _one(scene) -> str:
        sequence = simulator.generate(scene)
        header = StreamHeader(
            sequence=sequence.name,
            init_box=sequence.init_box,
            width=int(scene.arena_width),
            height=int(scene.arena_height),
        )
        if args.response_maps:
            records = [
                simulator.render_response_frame(sequence, frame, grid_size=args.grid_size)
                for frame in range(1, scene.num_frames)
            ]
        else:
            records = sequence.stream
        streams.write(str(out / "streams" / f"{sequence.name}.jsonl"), header, records)
        trajectories.write(str(out / "groundtruth" / f"{sequence.name}.txt"), sequence.ground_truth)
        return sequence.name

    names = _fan_out(_one, scenes)
    logger.info("simulated %d scene(s) into %s: %s", len(names), out, ", ".join(names))
    return EXIT_OK


# track

def _observations(records: list, config: RunConfig) -> list[FrameObservation]:
    out = []
    for record in records:
        if isinstance(record, candidates.ResponseFrame):
            found = candidates.extract(record, config.candidates.n, config.candidates.nms_threshold)
            out.append(candidates.to_observation(record.frame, found))
        else:
            out.append(record)
    return out


def track_stream(path: str, mode: TrackingMode, config: RunConfig) -> tuple[StreamHeader, mbpp.SequenceRun]:
    header, records = streams.read(path)
    observations = _observations(records, config)
    if mode is TrackingMode.DBPP:
        mbpp.check_contiguous([o.frame for o in observations])
        run = mbpp.SequenceRun(trajectory=simulator.dbpp_baseline(observations, header.init_box), diagnostics=[])
    else:
        run = mbpp.run_sequence(observations, header.init_box, config.mbpp, config.filter)
    return header, run


def cmd_track(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "stream", "out")
    mode = TrackingMode(args.mode)
    source = Path(args.stream)
    if source.is_dir():
        jobs = [(str(p), str(Path(args.out) / f"{p.stem}.txt")) for p in sorted(source.glob("*.jsonl"))]
        if not jobs:
            raise FileNotFoundError(f"no .jsonl streams in {source}")
    else:
        jobs = [(str(source), args.out)]

    def _one(job: tuple[str, str]) -> tuple[StreamHeader, mbpp.SequenceRun]:
        stream_path, out_path = job
        header, run = track_stream(stream_path, mode, config)
        trajectories.write(out_path, run.trajectory)
        logger.info(
            "%s [%s]: %d frames, %d drift corrections, %.3f ms/step",
            header.sequence, mode.value, len(run.trajectory), len(run.drift_frames), run.mean_step_ms,
        )
        return header, run

    results = _fan_out(_one, jobs)
    if args.diagnostics:
        rows = []
        for header, run in results:
            rows.extend({"sequence": header.sequence, **d.model_dump(mode="json")} for d in run.diagnostics)
        write_jsonl(args.diagnostics, rows)
    return EXIT_OK


# eval

def _pairs(traj: Path, gt: Path) -> dict[str, tuple[list, list]]:
    if traj.is_dir():
        if not gt.is_dir():
            raise FileNotFoundError(f"{gt} must be a directory when {traj} is")
        pairs = {}
        for path in sorted(traj.glob("*.txt")):
            gt_path = gt / path.name
            if not gt_path.is_file():
                raise FileNotFoundError(f"no ground truth for {path.stem} in {gt}")
            pairs[path.stem] = (trajectories.read(str(path)), trajectories.read(str(gt_path)))
        if not pairs:
            raise FileNotFoundError(f"no .txt trajectories in {traj}")
        return pairs
    return {traj.stem: (trajectories.read(str(traj)), trajectories.read(str(gt)))}


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "traj", "gt", "out")
    pairs = _pairs(Path(args.traj), Path(args.gt))
    results = evaluation.evaluate_many(pairs, max_workers=args.workers or config.eval.workers)

    subsets_file = args.subsets or config.eval.subsets_file
    subsets = configs.load_subsets(subsets_file) if subsets_file else []
    report = evaluation.build_report(results, subsets, label=args.label or config.eval.label or Path(args.traj).stem)
    reports.write_report(args.out, report)

    if args.csv:
        reports.write_rows_csv(args.csv, [r.model_dump() for r in report.sequences])
    if args.curves:
        for name, (traj, gt) in pairs.items():
            reports.write_curve_csv(str(Path(args.curves) / f"{name}_success.csv"), evaluation.success_curve(traj, gt))
            reports.write_curve_csv(str(Path(args.curves) / f"{name}_precision.csv"), evaluation.precision_curve(traj, gt))
            reports.write_curve_csv(str(Path(args.curves) / f"{name}_norm_precision.csv"), evaluation.norm_precision_curve(traj, gt))

    overall = report.overall
    logger.info(
        "%s: %d sequences, AUC %.2f  P %.2f  P-Norm %.2f",
        report.label, overall.count, 100 * overall.auc, 100 * overall.precision, 100 * overall.norm_precision,
    )
    return EXIT_OK


# report

def cmd_report(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "inputs")
    loaded = [reports.read_report(path) for path in args.inputs]
    rows = [r.model_dump() for r in evaluation.compare_reports(loaded)]
    keys = list(COMPARISON_HEADERS)
    markdown = rows_to_markdown(
        rows,
        keys,
        title="MBPP vs DBPP comparison" if args.title is None else args.title,
        headers=COMPARISON_HEADERS,
        notes={"deltas": f"percentage points against {loaded[0].label or args.inputs[0]}", **loaded[0].conventions},
    )
    if args.out:
        reports.write_text(args.out, markdown)
    if args.csv:
        reports.write_rows_csv(args.csv, rows)
    print(markdown, end="")
    return EXIT_OK


# pairgen

def cmd_pairgen(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "manifest", "out")
    records = manifests.read_records(args.manifest)
    grouped = pairgen.group_by_dataset(records)
    seed = args.seed if args.seed is not None else 0
    manifest = pairgen.sample_epoch(grouped, config.sampler, seed)
    out = Path(args.out)

    def _one(spec: pairgen.PairSpec) -> dict:
        pair = pairgen.build_pair(images.read(spec.image), spec.box, spec.seed, config.augmentation, config.crop)
        images.write(str(out / f"{spec.index:06d}_template.png"), pair.template)
        images.write(str(out / f"{spec.index:06d}_search.png"), pair.search)
        return {
            "index": spec.index,
            "dataset": spec.dataset,
            "image": spec.image,
            "box": spec.box.as_list(),
            "search_box": pair.search_box.as_list(),
            "applied_ops": pair.applied_ops,
            "seed": spec.seed,
        }

    rows = _fan_out(_one, manifest, args.workers)
    write_jsonl(str(out / "manifest.jsonl"), rows)
    open_air = sum(1 for s in manifest if s.domain is ImageDomain.OPEN_AIR)
    logger.info("wrote %d pairs to %s (%d open-air, %d underwater)", len(rows), out, open_air, len(rows) - open_air)
    return EXIT_OK


# ingest-coco

def cmd_ingest_coco(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "annotations", "out")
    with open(args.annotations, encoding="utf-8") as fh:
        try:
            coco = json.load(fh)
        except json.JSONDecodeError as e:
            raise StreamFormatError(f"{args.annotations}: invalid JSON ({e.msg})") from e
    records = pairgen.coco_to_records(coco, args.image_root, ImageDomain(args.domain), args.dataset)
    manifests.write_records(args.out, records)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "track": cmd_track,
    "eval": cmd_eval,
    "report": cmd_report,
    "pairgen": cmd_pairgen,
    "ingest-coco": cmd_ingest_coco,
}


def build_parser() -> JsonArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config (or a bare scenario document)")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")
    common.add_argument("--conf", type=float, help="drift threshold (mbpp.conf)")
    common.add_argument("--num-candidates", type=int, help="candidates kept per frame")
    common.add_argument("--seed", type=int, help="scene seed / sampling seed")
    common.add_argument("--print-config", action="store_true", help="print the resolved config and exit")

    parser = JsonArgumentParser(prog="mbpp", description="Motion-based post-processing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate synthetic candidate streams")
    p.add_argument("--out", help="output directory (streams/ and groundtruth/)")
    p.add_argument("--batch", type=int, default=1, help="number of seeds, starting at scene.seed")
    p.add_argument("--response-maps", action="store_true", help="emit s x s response maps instead of candidates")
    p.add_argument("--grid-size", type=int, default=candidates.DEFAULT_GRID_SIZE)

    p = sub.add_parser("track", parents=[common], help="run MBPP or DBPP over candidate streams")
    p.add_argument("--stream", help="stream file or directory of .jsonl streams")
    p.add_argument("--mode", choices=[m.value for m in TrackingMode], default=TrackingMode.MBPP.value)
    p.add_argument("--out", help="trajectory file (or directory for a stream directory)")
    p.add_argument("--diagnostics", help="per-frame diagnostics JSONL")

    p = sub.add_parser("eval", parents=[common], help="one-pass evaluation of trajectories")
    p.add_argument("--traj", help="trajectory file or directory")
    p.add_argument("--gt", help="ground-truth file or directory")
    p.add_argument("--subsets", help="YAML subset definitions")
    p.add_argument("--out", help="report JSON")
    p.add_argument("--csv", help="per-sequence CSV rows")
    p.add_argument("--curves", help="directory for per-sequence curve CSVs")
    p.add_argument("--label", help="report label (defaults to the trajectory path stem)")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("report", parents=[common], help="compare evaluation reports")
    p.add_argument("--inputs", nargs="+", help="report JSON files; deltas are against the first")
    p.add_argument("--out", help="Markdown output")
    p.add_argument("--csv", help="comparison rows as CSV")
    p.add_argument("--title")

    p = sub.add_parser("pairgen", parents=[common], help="build template/search training pairs")
    p.add_argument("--manifest", help="detection manifest JSONL")
    p.add_argument("--out", help="pair directory")
    p.add_argument("--epoch-size", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("ingest-coco", parents=[common], help="convert COCO annotations to a detection manifest")
    p.add_argument("--annotations", help="COCO annotation JSON")
    p.add_argument("--image-root", default="", help="prefix for image file names")
    p.add_argument("--dataset", default="coco")
    p.add_argument("--domain", choices=[d.value for d in ImageDomain], default=ImageDomain.UNDERWATER.value)
    p.add_argument("--out", help="detection manifest JSONL")

    for name, choice in sub.choices.items():
        choice.set_defaults(handler=COMMANDS[name], parser=choice)
    return parser


def main(argv: list[str] | None = None) -> int:
    dotenv.load_dotenv()
    logging.basicConfig(
        level=os.getenv("TRACKING_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)

    try:
        config = load_run_config(args)
        if args.print_config:
            print(config.to_yaml(), end="")
            return EXIT_OK
        return args.handler(args, config)
    except TrackingError as e:
        emit_error(e.code, str(e))
    except ValidationError as e:
        first = e.errors()[0]
        emit_error("format_error", f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}")
    except FileNotFoundError as e:
        emit_error("file_not_found", str(e))
    except OSError as e:
        logger.exception("I/O failure")
        emit_error("io_error", str(e))
    except ValueError as e:
        emit_error("data_error", str(e))
    return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
