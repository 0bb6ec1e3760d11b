"""Scalar metric commands: entropy, erank, mi, mir, hdr."""

from typing import Callable, Dict, Tuple

from matinfo.cli_helpers import fail, format_scalar
from matinfo.common.errors import MatinfoError
from matinfo.core.linalg import FeatureMatrix, GramMatrix, gram
from matinfo.core.matrix_io import MATRIX_FORMATS, read_matrix
from matinfo.core.metrics import effective_rank, hdr, matrix_entropy, matrix_mi, mir

_PAIR_METRICS: Dict[str, Tuple[Callable[[GramMatrix, GramMatrix], float], str]] = {
    "mi": (matrix_mi, "Matrix mutual information H(K1) + H(K2) - H(K1*K2)"),
    "mir": (mir, "Mutual information ratio MI / min(H(K1), H(K2))"),
    "hdr": (hdr, "Entropy difference ratio |H(K1) - H(K2)| / max(H(K1), H(K2))"),
}


class MetricCommand:
    """Handles the single-number metric commands."""

    @staticmethod
    def add_parser(subparsers) -> None:
        """Add one parser per metric."""
        entropy = subparsers.add_parser('entropy', help='Matrix entropy H(G(Z)) in nats')
        entropy.add_argument('matrix', help='Features (d x N) or, with --as-gram, an N x N Gram matrix')
        MetricCommand._add_common(entropy, gram_flag=True)
        entropy.set_defaults(func=MetricCommand.execute, metric='entropy')

        erank = subparsers.add_parser('erank', help='Effective rank of a feature matrix')
        erank.add_argument('matrix', help='Features (d x N)')
        MetricCommand._add_common(erank, gram_flag=False)
        erank.set_defaults(func=MetricCommand.execute, metric='erank')

        for name, (_, description) in _PAIR_METRICS.items():
            parser = subparsers.add_parser(name, help=description)
            parser.add_argument('first', help='First features or Gram matrix')
            parser.add_argument('second', help='Second features or Gram matrix')
            MetricCommand._add_common(parser, gram_flag=True)
            parser.set_defaults(func=MetricCommand.execute, metric=name)

    @staticmethod
    def _add_common(parser, gram_flag: bool) -> None:
        if gram_flag:
            parser.add_argument('--as-gram', action='store_true',
                                help='Inputs already hold validated N x N Gram matrices')
        parser.add_argument('--format', choices=MATRIX_FORMATS, default=None,
                            help='Override format detection from the file extension')

    @staticmethod
    def _load_gram(path: str, args) -> GramMatrix:
        array = read_matrix(path, args.format)
        if getattr(args, 'as_gram', False):
            return GramMatrix.from_array(array)
        return gram(FeatureMatrix(array))

    @staticmethod
    def compute(args) -> float:
        if args.metric == 'entropy':
            return matrix_entropy(MetricCommand._load_gram(args.matrix, args))
        if args.metric == 'erank':
            return effective_rank(FeatureMatrix(read_matrix(args.matrix, args.format)))
        metric, _ = _PAIR_METRICS[args.metric]
        return metric(MetricCommand._load_gram(args.first, args), MetricCommand._load_gram(args.second, args))

    @staticmethod
    def execute(args) -> None:
        """Print the requested metric as a 12-decimal scalar."""
        try:
            value = MetricCommand.compute(args)
        except MatinfoError as exc:
            fail(exc, f"{args.metric} failed")
        print(format_scalar(value))
