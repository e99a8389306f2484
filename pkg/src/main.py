import argparse
import os
import sys

import yaml
from loguru import logger
from pydantic import ValidationError

# Add foiwatch to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from foiwatch.errors import ContractViolation, InputError

import commands
from config import Config

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_CONTRACT_VIOLATION = 2

LOG_FORMAT = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>"


class HarnessParser(argparse.ArgumentParser):
    """Unknown or malformed flags are input errors (exit 1)"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _tracker_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--iou-threshold', type=float)
    parser.add_argument('--feature-threshold', type=float, help='values above 1 disable the appearance fallback')
    parser.add_argument('--max-misses', type=int)
    parser.add_argument('--buffer-size', type=int)
    parser.add_argument('--approach-window', type=int)
    parser.add_argument('--zone', action='append', help='[name:]x_min,y_min,x_max,y_max (repeatable)')


def build_parser() -> argparse.ArgumentParser:
    common = HarnessParser(add_help=False)
    common.add_argument('--config', help='YAML or JSON file whose keys mirror the long flags')
    common.add_argument('--log-level')
    common.add_argument('--dim', type=int)
    common.add_argument('--taxonomy')

    parser = HarnessParser(prog='foiwatch', description='Foreign-object intrusion tracking harness',
                           allow_abbrev=False)
    sub = parser.add_subparsers(dest='command', required=True)

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text, allow_abbrev=False)
        p.set_defaults(handler=handler)
        return p

    p = add('build-store', commands.build_store, 'build or extend a reference store snapshot')
    p.add_argument('--input', help='reference records as JSONL (- for stdin)')
    p.add_argument('--base', help='existing snapshot to extend')
    p.add_argument('--out', help='snapshot to write')

    p = add('query', commands.query, 'top-k matches for one embedding')
    p.add_argument('--store')
    p.add_argument('--embedding', help='JSON array or object with an "embedding" field')
    p.add_argument('--k', type=int)

    p = add('track', commands.track, 'track a frame stream and raise zone alerts')
    p.add_argument('--frames')
    p.add_argument('--store')
    p.add_argument('--out', help='alert events (JSONL, default stdout)')
    p.add_argument('--reports', help='track reports (JSONL)')
    p.add_argument('--diagnostics', help='per-frame association diagnostics (JSONL)')
    p.add_argument('--timings', help='per-frame stage timings (JSONL)')
    _tracker_flags(p)

    p = add('synth', commands.run_synth, 'generate the crossing scenario')
    p.add_argument('--out-dir')
    p.add_argument('--seed', type=int)
    p.add_argument('--n-frames', type=int)
    p.add_argument('--sigma', type=float)

    p = add('eval', commands.evaluate, 'score diagnostics against ground truth')
    p.add_argument('--pred')
    p.add_argument('--gt')
    p.add_argument('--iou', type=float)
    p.add_argument('--level', help='fine or aggregate')
    p.add_argument('--out')

    p = add('bench', commands.run_bench, 'retrieval latency benchmark')
    p.add_argument('--store', help='snapshot to benchmark (a random store is built otherwise)')
    p.add_argument('--size', type=int)
    p.add_argument('--queries', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--warmup', type=float, help='fraction of queries excluded as warm-up')
    p.add_argument('--workers', type=int)
    p.add_argument('--out')

    p = add('fixtures', commands.write_fixtures, 'write the crane and net golden traces')
    p.add_argument('--out-dir')

    return parser


def setup_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)


def _merge(args: argparse.Namespace, file_values: dict) -> None:
    """File values fill flags that were not given; remaining gaps take DEFAULTS"""
    for key, value in file_values.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    for key, value in commands.DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    Config.reset()
    setup_logging(Config.LOG_LEVEL)
    try:
        overrides = {key: getattr(args, key, None) for key in Config.TUNABLES}
        extra_keys = set(vars(args)) - set(Config.TUNABLES) - {'command', 'handler', 'config'}
        file_values = Config.load(args.config, overrides=overrides, extra_keys=extra_keys)
        setup_logging(Config.LOG_LEVEL)
        _merge(args, file_values)

        logger.debug(f"Running {args.command}")
        return args.handler(args)

    except KeyboardInterrupt:
        logger.info("Received interrupt, shutting down")
        return EXIT_INPUT_ERROR
    except ContractViolation as e:
        logger.error(f"Contract violation: {e}")
        return EXIT_CONTRACT_VIOLATION
    except (InputError, ValidationError, yaml.YAMLError, OSError, ValueError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
