"""Simplex ETF generation for the matinfo CLI."""

from matinfo.cli_helpers import fail
from matinfo.common.errors import MatinfoError
from matinfo.core.collapse import simplex_etf
from matinfo.core.matrix_io import write_npy


class EtfCommand:
    """Writes a seeded simplex equiangular tight frame as npy."""

    @staticmethod
    def add_parser(subparsers) -> None:
        parser = subparsers.add_parser('etf', help='Write C unit vectors with pairwise cosine -1/(C-1)')
        parser.add_argument('--classes', type=int, required=True, help='Number of vertices C')
        parser.add_argument('--dim', type=int, required=True, help='Ambient dimension d (>= C-1)')
        parser.add_argument('--seed', type=int, default=0, help='Seed of the embedding frame')
        parser.add_argument('--out', required=True, help='Output .npy path (d x C, float64)')
        parser.set_defaults(func=EtfCommand.execute)

    @staticmethod
    def execute(args) -> None:
        try:
            means = simplex_etf(args.classes, args.dim, seed=args.seed)
            write_npy(args.out, means.data)
        except MatinfoError as exc:
            fail(exc, "etf failed")
        print(f"Wrote {args.classes}-vertex simplex ETF ({args.dim} x {args.classes}) to {args.out}")
