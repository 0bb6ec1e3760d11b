"""Checkpoint interpolation command for the matinfo CLI."""

import csv
import sys
from contextlib import nullcontext

from matinfo.cli_helpers import fail, format_scalar
from matinfo.common.errors import MatinfoError, MatrixFileError
from matinfo.core.checkpoint import Checkpoint
from matinfo.core.trainer import interpolate, load_datasets, omega_grid

CSV_HEADER = ("omega", "accuracy", "mir", "hdr")


def format_omega(omega: float, steps: int) -> str:
    """Two decimals when the grid lands on hundredths, six otherwise."""
    return f"{omega:.2f}" if 100 % steps == 0 else f"{omega:.6f}"


class InterpolateCommand:
    """Evaluates the straight line between two checkpoints and emits CSV."""

    @staticmethod
    def add_parser(subparsers) -> None:
        parser = subparsers.add_parser('interpolate', help='Sweep (1 - w) * A + w * B and write omega,accuracy,mir,hdr')
        parser.add_argument('--ckpt-a', required=True, help='Checkpoint at omega = 0')
        parser.add_argument('--ckpt-b', required=True, help='Checkpoint at omega = 1')
        parser.add_argument('--steps', type=int, default=20, help='Number of intervals; steps + 1 rows (default: 20)')
        parser.add_argument('--eval-split', choices=('train', 'test'), default='test',
                            help="Split of checkpoint A's dataset to evaluate on (default: test)")
        parser.add_argument('--out', default='-', help="CSV output path ('-' for stdout)")
        parser.set_defaults(func=InterpolateCommand.execute)

    @staticmethod
    def execute(args) -> None:
        try:
            first = Checkpoint.load(args.ckpt_a)
            second = Checkpoint.load(args.ckpt_b)
            omegas = omega_grid(args.steps)
            train_set, test_set = load_datasets(first.config.dataset, first.config.seed)
            dataset = train_set if args.eval_split == 'train' else test_set
            points = interpolate(first, second, omegas, dataset, settings=getattr(args, 'settings', None))
        except MatinfoError as exc:
            fail(exc, "interpolate failed")

        try:
            target = nullcontext(sys.stdout) if args.out == '-' else open(args.out, 'w', encoding='utf-8', newline='')
        except OSError as exc:
            fail(MatrixFileError(f"cannot write {args.out}: {exc.strerror or exc}"), "interpolate failed")
        with target as stream:
            writer = csv.writer(stream, lineterminator='\n')
            writer.writerow(CSV_HEADER)
            for point in points:
                writer.writerow((
                    format_omega(point.omega, args.steps),
                    format_scalar(point.accuracy),
                    "" if point.mir is None else format_scalar(point.mir),
                    format_scalar(point.hdr),
                ))
