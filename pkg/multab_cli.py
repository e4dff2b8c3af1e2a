"""
Command Line Interface untuk multab-lab
=======================================

Batch front-end untuk exact counts, verification suites, asymptotic fit
tables, degree-interval construction and Monte-Carlo sampling.

Exit codes: 0 ok, 1 check failure, 2 usage error, 3 resource limit.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add project root ke Python path
project_root = Path(__file__).parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from app import create_lab, setup_logging
from app.exceptions import CheckFailure, LabError, UsageError
from app.utils.file_manager import FileManager
from app.utils.validators import COUNT_KINDS, FORMATS, MODELS, SAMPLE_KINDS, SCOPES, validate_run_parameters


class LabCLI:
    """
    Command Line Interface class untuk multab-lab
    """

    def __init__(self):
        """Initialize CLI dengan logging dan output handling"""
        self.setup_logging()
        self.file_manager = FileManager()

    def setup_logging(self, level: Optional[int] = None, config=None):
        """Setup logging configuration (stderr only)"""
        setup_logging(config, level)
        self.logger = logging.getLogger('app.cli')

    def create_argument_parser(self) -> argparse.ArgumentParser:
        """Create argument parser untuk CLI"""
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--format', choices=FORMATS, default='csv', help='Output format (default: csv)')
        common.add_argument('--output', '-o', help='Output file (default: stdout)')
        common.add_argument('--threads', type=int, default=1, help='Worker processes (default: 1)')
        common.add_argument('--max-table-entries', type=int, dest='max_table_entries',
                            help='SpfTable entry budget')
        common.add_argument('--max-partitions', type=int, dest='max_partitions',
                            help='Partition sweep budget')
        common.add_argument('--env', choices=['development', 'production', 'testing'],
                            help='Configuration profile (default: MULTAB_ENV)')
        common.add_argument('--verbose', '-v', action='store_true', help='Debug logging and tracebacks')
        common.add_argument('--quiet', action='store_true', help='Errors only')

        parser = argparse.ArgumentParser(
            description='multab-lab - divisors of polynomials over finite fields and fixed sets of permutations',
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  %(prog)s count --kind H --q 2 --n 4 --b 2
  %(prog)s count --kind T --n 4 --b 2
  %(prog)s count --kind M --q 2 --deg 4
  %(prog)s count --kind H --q 3 --n 2:12 --format json -o counts.json
  %(prog)s verify --scope appendix
  %(prog)s fit --kind T --n 32,48,64 --b 16 --gnuplot
  %(prog)s construct --q 2 --intervals 12
  %(prog)s construct --family --q 2 --b 1024 --M 4
  %(prog)s sample --kind T --n 10000 --b 100 --trials 1000000 --seed 7

Ranges: '4', '2,4,8', '2:8' (inclusive) or '2:16:2'.
            """
        )
        subparsers = parser.add_subparsers(dest='command', required=True)

        count = subparsers.add_parser('count', parents=[common], help='Exact counts H, M, T, Hsf')
        count.add_argument('--kind', choices=COUNT_KINDS, required=True)
        count.add_argument('--q', type=int, help='Field size (prime power)')
        count.add_argument('--n', help='Degree or permutation size (range)')
        count.add_argument('--deg', help='Total degree 2n for kind M (range)')
        count.add_argument('--b', help='Divisor degree / fixed-set size (range, default: all)')

        verify = subparsers.add_parser('verify', parents=[common], help='Run verification suites')
        verify.add_argument('--scope', choices=SCOPES, default='all')

        fit = subparsers.add_parser('fit', parents=[common], help='Asymptotic ratio tables')
        fit.add_argument('--kind', choices=('H', 'T'), required=True)
        fit.add_argument('--q', type=int)
        fit.add_argument('--n', required=True)
        fit.add_argument('--b', help='default: every b >= 2')
        fit.add_argument('--model', choices=MODELS, default='asymptotic')
        fit.add_argument('--gnuplot', action='store_true', help='Whitespace columns for gnuplot')

        construct = subparsers.add_parser('construct', parents=[common], help='Degree intervals and families')
        construct.add_argument('--q', type=int, required=True)
        construct.add_argument('--intervals', type=int, default=0, help='Number of blocks J')
        construct.add_argument('--family', action='store_true', help='Build the lower-bound family')
        construct.add_argument('--b', help='Family parameter b (range)')
        construct.add_argument('--M', type=int, default=4)

        sample = subparsers.add_parser('sample', parents=[common], help='Monte-Carlo density estimates')
        sample.add_argument('--kind', choices=SAMPLE_KINDS, required=True)
        sample.add_argument('--q', type=int, help='Prime p for kind H')
        sample.add_argument('--n', required=True)
        sample.add_argument('--b', required=True)
        sample.add_argument('--trials', type=int, required=True)
        sample.add_argument('--seed', type=int, default=7)

        return parser

    def run(self, argv: Optional[List[str]] = None) -> int:
        """
        Main CLI run method

        Returns:
            int: Exit code
        """
        parser = self.create_argument_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else UsageError.exit_code

        level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else None
        self.setup_logging(level, args.env)

        try:
            validation = validate_run_parameters(vars(args))
            if not validation['valid']:
                raise UsageError(validation['message'], {'errors': validation['errors']})
            run_config = validation['run_config']

            lab = create_lab(args.env, run_config, level)
            controller = lab['lab']

            if run_config.subcommand == 'count':
                text = controller.run_count(run_config)
            elif run_config.subcommand == 'fit':
                text = controller.run_fit(run_config)
            elif run_config.subcommand == 'construct':
                text = controller.run_construct(run_config)
            elif run_config.subcommand == 'sample':
                text, digest = controller.run_sample(run_config)
                self.logger.info(f"sha256 {digest}")
            else:
                results, text = lab['verify']().run(run_config.scope)
                self.file_manager.write_report(text, run_config.output)
                failed = [r['name'] for r in results if not r['passed']]
                if failed:
                    raise CheckFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}", {'failed': failed})
                return 0

            path = self.file_manager.write_report(text, run_config.output)
            if path:
                self.logger.info(f"Report written to {path}")
            return 0

        except LabError as e:
            if args.verbose:
                self.logger.exception(e.message)
            else:
                self.logger.error(e.message)
            return e.exit_code
        except KeyboardInterrupt:
            self.logger.info("Process interrupted by user")
            return 1
        except Exception as e:
            if args.verbose:
                self.logger.exception(f"Unexpected error: {e}")
            else:
                self.logger.error(f"Unexpected error: {e}")
            return 1


def main():
    """Main entry point"""
    cli = LabCLI()
    exit_code = cli.run()
    sys.exit(exit_code)


if __name__ == '__main__':
    main()
