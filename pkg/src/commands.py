"""Subcommand handlers; each returns the process exit code"""
import argparse
import json
import os
import sys
from typing import Any

from loguru import logger

# Add foiwatch to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from foiwatch import bench, evalkit, fixtures, synth
from foiwatch.errors import InputError
from foiwatch.models.evaluation import EvalLevel
from foiwatch.models.reference import ReferenceRecord
from foiwatch.store import ReferenceStore, load_snapshot, save_snapshot
from foiwatch.utils.io import iter_jsonl, open_text, parse_model, to_jsonable

from config import Config
from tracking_service import TrackingService

# Defaults for flags that are not session tunables
DEFAULTS = {
    'input': '-',
    'k': 5,
    'out': '-',
    'seed': 0,
    'n_frames': 120,
    'sigma': 0.05,
    'iou': 0.5,
    'level': EvalLevel.FINE.value,
    'size': 4513,
    'queries': 10_000,
    'warmup': 0.1,
    'workers': 1,
}


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) is None]
    if missing:
        raise InputError(f"{args.command} needs {', '.join(missing)}")


def _emit(payload: Any, sink: str = '-') -> None:
    with open_text(sink, 'w') as out:
        json.dump(to_jsonable(payload), out, ensure_ascii=False, indent=2)
        out.write('\n')


def build_store(args: argparse.Namespace) -> int:
    _require(args, 'out')
    taxonomy = Config.taxonomy()
    if args.base:
        store = load_snapshot(args.base, dim=Config.DIM, taxonomy=taxonomy)
    else:
        store = ReferenceStore(dim=Config.DIM, taxonomy=taxonomy)

    context = {'dim': Config.DIM}
    added = 0
    for line_no, data in iter_jsonl(args.input):
        record = parse_model(ReferenceRecord, data, line=line_no, context=context)
        store.insert(record)
        added += 1

    save_snapshot(store, args.out)
    _emit({"records": len(store), "added": added, "labels": store.labels(),
           "unmapped_labels": store.unmapped_labels()})
    return 0


def _read_query(path: str) -> Any:
    with open_text(path, 'r') as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise InputError(f"{path} is not valid JSON: {e.msg}") from e
    if isinstance(payload, dict):
        if 'embedding' not in payload:
            raise InputError(f"{path} has no 'embedding' field")
        payload = payload['embedding']
    return payload


def query(args: argparse.Namespace) -> int:
    _require(args, 'store', 'embedding')
    store = load_snapshot(args.store, dim=Config.DIM, taxonomy=Config.taxonomy())
    matches = store.nearest(_read_query(args.embedding), int(args.k))
    _emit([m.model_dump() for m in matches])
    return 0


def track(args: argparse.Namespace) -> int:
    _require(args, 'frames', 'store')
    service = TrackingService(args.store)
    stats = service.run(args.frames, args.out, reports=args.reports,
                        diagnostics_out=args.diagnostics, timings_out=args.timings)
    logger.info(f"Stats: {stats}")
    return 0


def run_synth(args: argparse.Namespace) -> int:
    _require(args, 'out_dir')
    config = synth.crossing_scenario(int(args.seed), n_frames=int(args.n_frames), sigma=float(args.sigma),
                                     dim=Config.DIM)
    scenario = synth.synth(config, progress=Config.LOG_LEVEL in ("DEBUG", "INFO"))
    paths = synth.write_scenario(scenario, args.out_dir)
    _emit(paths)
    return 0


def evaluate(args: argparse.Namespace) -> int:
    _require(args, 'pred', 'gt')
    try:
        level = EvalLevel(args.level)
    except ValueError:
        raise InputError(f"--level must be one of: {', '.join(l.value for l in EvalLevel)}") from None
    summary = evalkit.evaluate_files(args.pred, args.gt, iou_threshold=float(args.iou), level=level,
                                     taxonomy=Config.taxonomy())
    _emit(summary, args.out)
    return 0


def run_bench(args: argparse.Namespace) -> int:
    progress = Config.LOG_LEVEL in ("DEBUG", "INFO")
    if args.store:
        store = load_snapshot(args.store, dim=Config.DIM)
    else:
        store = bench.build_random_store(int(args.size), Config.DIM, seed=int(args.seed), progress=progress)
    report = bench.bench_store(store, n_queries=int(args.queries), seed=int(args.seed),
                               warmup_fraction=float(args.warmup), workers=int(args.workers), progress=progress)
    _emit(report, args.out)
    return 0


def write_fixtures(args: argparse.Namespace) -> int:
    _require(args, 'out_dir')
    _emit(fixtures.write_fixtures(args.out_dir, dim=Config.DIM))
    return 0
