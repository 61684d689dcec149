import logging
import sys

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from django_gelfand.exceptions import GelfandError
from django_gelfand.runner import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, Action, RunConfig, run

logger = logging.getLogger(__name__)


def _float_list(text):
    return [float(part) for part in text.split(',') if part.strip()]


def _label_list(text):
    return [part.strip() for part in text.split(',') if part.strip()]


class Command(BaseCommand):
    help = 'Solve Gelfand problems -Δu = λ f(u) on weighted graphs and emit CSV'

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        # Usage errors exit with 1 rather than argparse's 2.
        def error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
            raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)

        parser.error = error
        return parser

    def add_arguments(self, parser):
        parser.add_argument(
            'action',
            choices=Action.values,
            help='What to compute',
        )
        parser.add_argument(
            'target',
            nargs='?',
            help='Example name for demo (default: the whole corpus)',
        )
        parser.add_argument(
            '--graph',
            help='Graph file with edge and omega directives',
        )
        parser.add_argument(
            '--builtin',
            help='Built-in example, e.g. path4-exp or khat-n:1,1,0,5',
        )
        parser.add_argument(
            '--omega',
            type=_label_list,
            default=[],
            help='Comma separated Omega labels, overriding the omega line of --graph',
        )
        parser.add_argument(
            '--f',
            dest='f_spec',
            help='Nonlinearity: exp, power:<p>, affine, allen-cahn, log, poly:<c0>,..., piecewise:..., clip:<lo>,<hi>:<spec>',
        )
        parser.add_argument(
            '--lambda',
            dest='lam',
            type=float,
            help='Parameter value',
        )
        parser.add_argument(
            '--init',
            type=_float_list,
            help='Newton starting point, one value per Omega vertex or a single constant',
        )
        parser.add_argument(
            '--newton',
            action='store_true',
            help='Use Newton from --init instead of the monotone iteration',
        )
        parser.add_argument('--from', dest='lam_from', type=float, help='First lambda of a sweep')
        parser.add_argument('--to', dest='lam_to', type=float, help='Last lambda of a sweep')
        parser.add_argument(
            '--points',
            type=int,
            default=20,
            help='Number of sweep points (default: 20)',
        )
        parser.add_argument(
            '--tol',
            type=float,
            help='Bracket width for lambda-star (default: GELFAND_LAMBDA_TOL)',
        )
        parser.add_argument('--solve-tol', type=float, help='Monotone iteration tolerance')
        parser.add_argument('--stab-tol', type=float, help='Stability tolerance on mu1')
        parser.add_argument(
            '--out',
            help='Write CSV to this file instead of stdout',
        )
        parser.add_argument(
            '--parallel',
            action='store_true',
            help='Cold-start sweep points in a process pool',
        )
        parser.add_argument('--start-lambda', type=float, help='Where continuation starts')
        parser.add_argument('--step', type=float, help='Initial arclength step')
        parser.add_argument('--max-points', type=int, help='Continuation point limit')

    def handle(self, *args, **options):
        try:
            config = RunConfig(
                command=options['action'],
                graph=options.get('graph'),
                builtin=options.get('builtin'),
                omega=options.get('omega') or [],
                f_spec=options.get('f_spec'),
                lam=options.get('lam'),
                init=options.get('init'),
                newton=options.get('newton', False),
                lam_from=options.get('lam_from'),
                lam_to=options.get('lam_to'),
                points=options.get('points', 20),
                tol=options.get('tol'),
                solve_tol=options.get('solve_tol'),
                stab_tol=options.get('stab_tol'),
                out=options.get('out'),
                parallel=options.get('parallel', False),
                start_lambda=options.get('start_lambda'),
                step=options.get('step'),
                max_points=options.get('max_points'),
                target=options.get('target'),
            )
            status = run(config, stream=self.stdout)
        except ValidationError as e:
            logger.error(f"Invalid input: {e.messages[0]}")
            raise CommandError(e.messages[0], returncode=EXIT_INPUT)
        except GelfandError as e:
            logger.error(f"Numerical failure: {e}")
            raise CommandError(str(e), returncode=EXIT_NUMERICAL)

        if status != EXIT_OK:
            raise CommandError(f"{config.command}: some checks failed", returncode=status)
        if config.out:
            self.stdout.write(self.style.SUCCESS(f"Wrote {config.out}"))
