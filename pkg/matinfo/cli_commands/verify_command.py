"""Property-suite command for the matinfo CLI."""

import sys

from matinfo.cli_helpers import fail
from matinfo.common.constants import ExitCodes
from matinfo.common.errors import MatinfoError
from matinfo.core.verify import SUITES, run_suite


class VerifyCommand:
    """Runs a seeded verification suite; exits 1 if any instance fails."""

    @staticmethod
    def add_parser(subparsers) -> None:
        parser = subparsers.add_parser('verify', help='Run closed-form, lemma or gradient property suites')
        parser.add_argument('--suite', choices=SUITES, required=True, help='Suite to run')
        parser.add_argument('--instances', type=int, default=20, help='Number of seeded instances (default: 20)')
        parser.add_argument('--seed', type=int, default=0, help='Base seed (default: 0)')
        parser.set_defaults(func=VerifyCommand.execute)

    @staticmethod
    def execute(args) -> None:
        try:
            report = run_suite(args.suite, args.instances, args.seed, settings=getattr(args, 'settings', None))
        except MatinfoError as exc:
            fail(exc, "verify failed")

        for result in report.failed:
            for message in result.failures:
                print(f"instance {result.index}: FAIL {message}")
        passed = len(report.results) - len(report.failed)
        print(f"suite {report.suite}: {passed}/{len(report.results)} instances passed")
        if report.suite == "gradients":
            print(f"max relative error: {report.max_relative_error:.3e}")
        if not report.passed:
            sys.exit(ExitCodes.VERIFICATION_FAILED)
