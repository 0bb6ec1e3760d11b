"""Neural Collapse report command for the matinfo CLI."""

import json

from matinfo.cli_helpers import fail
from matinfo.common.errors import MatinfoError
from matinfo.core.collapse import nc_check
from matinfo.core.linalg import FeatureMatrix
from matinfo.core.matrix_io import MATRIX_FORMATS, read_labels, read_matrix


class NcCheckCommand:
    """Prints NC 1-3 residuals and MIR / HDR as JSON.

    Exits 0 whatever the residual magnitudes; this is a report, not a gate.
    """

    @staticmethod
    def add_parser(subparsers) -> None:
        parser = subparsers.add_parser('nc-check', help='Report Neural Collapse residuals as JSON')
        parser.add_argument('--features', required=True, help='Penultimate features (d x N)')
        parser.add_argument('--labels', required=True, help='Integer labels, one per sample')
        parser.add_argument('--weights', required=True, help='Classifier weights, one column per class (d x C)')
        parser.add_argument('--format', choices=MATRIX_FORMATS, default=None,
                            help='Override format detection for the matrix files')
        parser.set_defaults(func=NcCheckCommand.execute)

    @staticmethod
    def execute(args) -> None:
        try:
            weights = FeatureMatrix(read_matrix(args.weights, args.format))
            labels = read_labels(args.labels)
            features = FeatureMatrix(read_matrix(args.features, args.format), labels, weights.size)
            report = nc_check(features, weights)
        except MatinfoError as exc:
            fail(exc, "nc-check failed")
        print(json.dumps(report.to_dict(), indent=2))
