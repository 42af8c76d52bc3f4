"""
Command line front-end, one subcommand per analysis:

matrix      family matrix, determinant, optional power and coefficient growth
spectrum    eigenvalue distribution of T (and T^-1), entropy
correlate   D_n(f, f) for the smooth family, exact or Monte Carlo
scan-d1     one-step polynomial correlators D_1(r), K_1(r)
fit-decay   exact decay series fitted against the entropy bound
timescales  tau0, t_int, tau and the published MIXMAX reports
rng         MIXMAX stream, decimal or raw little-endian words
selftest    statistical self-test of the generator
trajectory  exact orbit on the 2^64 lattice

Data goes to stdout or --output; logs and JSON errors go to stderr.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from anosov_gym.analysis.correlation import exact_series, monte_carlo_series, polynomial_one_step_quadrature, \
    polynomial_one_step_scan
from anosov_gym.analysis.observables import smooth_family
from anosov_gym.analysis.timescales import MIXMAX_PRESETS, preset_report, timescale_report
from anosov_gym.csystem.matrix_core import build_family_matrix, determinant_exact, largest_coefficient_growth, \
    matrix_power
from anosov_gym.csystem.spectral import DEFAULT_TOL, compute_spectrum, spectrum_distribution_rows
from anosov_gym.csystem.torus_dynamics import TorusPoint, trajectory, trajectory_hex, trajectory_rows
from anosov_gym.errors import AnosovGymError
from anosov_gym.pipelines import decay_analysis_pipeline
from anosov_gym.rng.mixmax import MixmaxGenerator, self_test
from anosov_gym.utils.benchmark import reproducibility_header, write_csv, write_header, write_json

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'ANOSOV_GYM_OUTPUT_DIR'


class UsageError(Exception):
    code = 'usage'


class JsonArgumentParser(argparse.ArgumentParser):
    """
    Reports usage errors as a JSON payload on stderr, exit status 2.
    """
    def error(self, message):
        _emit_error('usage', 'UsageError', message)
        self.exit(2)


def _emit_error(code, kind, message):
    sys.stderr.write(json.dumps({'error': code, 'type': kind, 'message': message}) + '\n')


def parse_n_range(text):
    """
    'a:b' (inclusive) or a single integer.
    """
    try:
        if ':' in text:
            lo, hi = (int(x) for x in text.split(':', 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'invalid range {text!r}, expected a:b or an integer')
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f'invalid range {text!r}, need 0 <= a <= b')
    return list(range(lo, hi + 1))


def _output_path(path):
    if path is None or os.path.isabs(path):
        return path
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, ''), path)


class _Output:
    """
    Text or binary sink: --output file, or stdout.
    """
    def __init__(self, path, binary=False):
        self.path = _output_path(path)
        self.binary = binary
        self.handle = None

    def __enter__(self):
        if self.path is None:
            self.handle = sys.stdout.buffer if self.binary else sys.stdout
        else:
            self.handle = open(self.path, 'wb') if self.binary else open(self.path, 'w', newline='')
        return self.handle

    def __exit__(self, *exc):
        if self.path is not None:
            self.handle.close()
        else:
            self.handle.flush()
        return False


def _header(args):
    config = {k: v for k, v in vars(args).items() if k not in ('func', 'verbose', 'output')}
    return reproducibility_header(config, getattr(args, 'seed', None))


def _emit(args, rows, data):
    """
    Write `rows` (CSV, first row = column names) or `data` (JSON) per --format.
    """
    with _Output(args.output) as stream:
        if args.format == 'json':
            write_json(stream, data, _header(args))
        else:
            write_csv(stream, rows, _header(args))


def cmd_matrix(args):
    T = build_family_matrix(args.N)
    det = determinant_exact(T)
    M = matrix_power(T, args.power) if args.power is not None else T
    power = args.power if args.power is not None else 1
    data = {'N': args.N, 'det': str(det), 'power': power, 'matrix': json.loads(M.to_json())}
    rows = [['row'] + ['c{}'.format(j) for j in range(args.N)]]
    rows += [[i] + [str(x) for x in M.row(i)] for i in range(args.N)]
    if args.n_range is not None:
        growth = largest_coefficient_growth(T, args.n_range)
        data['growth'] = [{'n': n, 'largest': str(big), 'rate': rate} for n, big, rate in growth]
        rows = [['n', 'largest', 'rate']] + [[n, str(big), '{:.17g}'.format(rate)] for n, big, rate in growth]
    _emit(args, rows, data)


def cmd_spectrum(args):
    T = build_family_matrix(args.N)
    spectrum = compute_spectrum(T, args.tol)
    panels = spectrum_distribution_rows(T, args.inverse, args.tol)
    data = {name: [list(r) for r in rows] for name, rows in panels.items()}
    data.update({'entropy': spectrum.entropy, 'entropy_per_dimension': spectrum.entropy_per_dimension,
                 'c_system': spectrum.is_c_system})
    rows = [['panel', 're', 'im']] if args.inverse else [['re', 'im']]
    for name, panel in panels.items():
        for re, im in panel:
            cells = ['{:.17g}'.format(re), '{:.17g}'.format(im)]
            rows.append([name] + cells if args.inverse else cells)
    _emit(args, rows, data)


def cmd_correlate(args):
    T = build_family_matrix(args.N)
    f = smooth_family(args.p, args.cutoff, args.N)
    if args.method == 'exact':
        series = exact_series(T, f, f, args.n_range, args.workers)
    else:
        series = monte_carlo_series(T, f, f, args.n_range, args.samples, args.seed, args.workers, progress=args.verbose > 0)
    _emit(args, series.csv_rows(), series.to_dict())


def cmd_scan_d1(args):
    if args.quadrature:
        d_series, k_series = polynomial_one_step_quadrature(args.r_max)
    else:
        d_series, k_series = polynomial_one_step_scan(args.r_max, args.samples, args.seed, args.workers,
                                                      progress=args.verbose > 0)
    rows = [['r', 'd1', 'd1_stderr', 'k1', 'k1_stderr', 'method', 'samples']]
    for i, r in enumerate(d_series.n_values):
        d_err = '' if d_series.stderr is None else '{:.17g}'.format(d_series.stderr[i])
        k_err = '' if k_series.stderr is None else '{:.17g}'.format(k_series.stderr[i])
        rows.append([r, '{:.17g}'.format(d_series.d_values[i]), d_err, '{:.17g}'.format(k_series.d_values[i]), k_err,
                     d_series.method, d_series.sample_count or ''])
    _emit(args, rows, {'D1': d_series.to_dict(), 'K1': k_series.to_dict()})


def cmd_fit_decay(args):
    analyse = decay_analysis_pipeline(N=args.N, p=args.p, cutoff=args.cutoff, workers=args.workers,
                                      noise_floor=args.noise_floor)
    results = analyse(args.n_range)
    fit = results['fit']
    if args.verbose and args.output is not None:
        fit.display()
    data = {'fit': fit.to_dict(), 'series': results['series'].to_dict(),
            'vanishing_bound': results['vanishing_bound'], 'vanishing_step': results['vanishing_step']}
    rows = [['key', 'value']] + [[k, json.dumps(v)] for k, v in sorted(fit.to_dict().items())]
    _emit(args, rows, data)


def cmd_timescales(args):
    if args.preset is not None:
        report = preset_report(args.preset)
    else:
        if args.h is None or args.log2_inv_dv0 is None:
            raise UsageError('timescales needs --preset or both --h and --log2-inv-dv0')
        report = timescale_report(args.N, args.p, args.h, args.log2_inv_dv0)
    if args.verbose and args.output is not None:
        report.display()
    data = report.to_dict()
    rows = [['key', 'value']] + [[k, json.dumps(v)] for k, v in sorted(data.items())]
    _emit(args, rows, data)


def cmd_rng(args):
    generator = MixmaxGenerator(args.N, args.seed, args.stream)
    if args.raw:
        words = generator.raw_words(args.count)
        logger.info('raw stream header: %s', json.dumps(_header(args), sort_keys=True))
        with _Output(args.output, binary=True) as stream:
            stream.write(np.array(words, dtype='<u8').tobytes())
        return
    values = generator.random(args.count)
    _emit(args, [['u']] + [['{:.17g}'.format(v)] for v in values], [float(v) for v in values])


def cmd_selftest(args):
    report = self_test(args.N, args.seed, args.samples)
    if args.verbose and args.output is not None:
        report.display()
    data = report.to_dict()
    rows = [['key', 'value']] + [[k, json.dumps(v)] for k, v in sorted(data.items())]
    _emit(args, rows, data)
    return 0 if report.passed else 1


def cmd_trajectory(args):
    T = build_family_matrix(args.N)
    x0 = TorusPoint.random(args.N, np.random.default_rng(args.seed))
    orbit = trajectory(T, x0, args.length)
    if args.hex:
        with _Output(args.output) as stream:
            write_header(stream, _header(args))
            stream.write(trajectory_hex(orbit))
        return
    _emit(args, trajectory_rows(orbit), {'hex': [p.hex() for p in orbit], 'x': [list(p.to_floats()) for p in orbit]})


def build_parser():
    parser = JsonArgumentParser(prog='anosov-gym', description='C-system correlation and MIXMAX tooling.')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG logs')
    sub = parser.add_subparsers(dest='subcommand', parser_class=JsonArgumentParser)
    sub.required = True

    def add(name, func, help_text, N=2, fmt='csv'):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument('--N', type=int, default=N, help=f'dimension of the family operator (default {N})')
        p.add_argument('--output', default=None,
                       help=f'output file; relative paths are placed under ${OUTPUT_DIR_ENV} when set')
        p.add_argument('--format', choices=('csv', 'json'), default=fmt)
        p.set_defaults(func=func)
        return p

    def add_sampling(p, samples):
        p.add_argument('--samples', type=int, default=samples)
        p.add_argument('--seed', type=int, default=0)
        p.add_argument('--workers', type=int, default=1, help='worker processes (recorded in the header)')

    p = add('matrix', cmd_matrix, 'Family matrix, exact determinant and powers.', fmt='json')
    p.add_argument('--power', type=int, default=None, help='emit T^n instead of T')
    p.add_argument('--n-range', type=parse_n_range, default=None, help='largest coefficient of T^n for n in a:b')

    p = add('spectrum', cmd_spectrum, 'Eigenvalue distribution of T; --inverse adds T^-1.')
    p.add_argument('--inverse', action='store_true')
    p.add_argument('--tol', type=float, default=DEFAULT_TOL)

    p = add('correlate', cmd_correlate, 'D_n of the smooth family against itself.')
    p.add_argument('--n-range', type=parse_n_range, default=parse_n_range('0:6'))
    p.add_argument('--p', type=int, default=1)
    p.add_argument('--cutoff', type=int, default=4)
    p.add_argument('--method', choices=('exact', 'monte_carlo'), default='exact')
    add_sampling(p, 10 ** 6)

    p = add('scan-d1', cmd_scan_d1, 'One-step correlators D_1(r) and K_1(r) of polynomial observables.')
    p.add_argument('--r-max', type=int, default=30)
    p.add_argument('--quadrature', action='store_true', help='deterministic quadrature instead of Monte Carlo')
    add_sampling(p, 10 ** 6)

    p = add('fit-decay', cmd_fit_decay, 'Exact decay series fitted against the entropy bound.', fmt='json')
    p.add_argument('--n-range', type=parse_n_range, default=None)
    p.add_argument('--p', type=int, default=1)
    p.add_argument('--cutoff', type=int, default=4)
    p.add_argument('--noise-floor', type=float, default=None)
    p.add_argument('--workers', type=int, default=1)

    p = add('timescales', cmd_timescales,
            'Time scales tau0, t_int, tau. Presets: mixmax240 (h=8679, dv0=2^-(61*240)), '
            'mixmax256 (h=194, dv0=2^-(61*256)).', N=256, fmt='json')
    p.add_argument('--preset', choices=sorted(MIXMAX_PRESETS), default=None)
    p.add_argument('--p', type=int, default=1)
    p.add_argument('--h', type=float, default=None, help='entropy in nats per iteration')
    p.add_argument('--log2-inv-dv0', type=float, default=None, help='log2(1/dv0) in bits')

    p = add('rng', cmd_rng, 'MIXMAX stream: decimal doubles one per line, or --raw little-endian 64-bit words.', N=256)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--count', type=int, default=1000)
    p.add_argument('--stream', type=int, default=0, help='stream index, starts at jump 2^64 * stream')
    p.add_argument('--raw', action='store_true')

    p = add('selftest', cmd_selftest, 'Chi-square, lag-1 serial and coordinate-mean tests of the generator.',
            N=256, fmt='json')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--samples', type=int, default=10 ** 6)

    p = add('trajectory', cmd_trajectory, 'Exact orbit of a random lattice point.')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--length', type=int, default=100)
    p.add_argument('--hex', action='store_true', help='raw 64-bit words in hex for bit-exact replay')
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')
    try:
        status = args.func(args)
    except UsageError as e:
        _emit_error(e.code, type(e).__name__, str(e))
        return 2
    except AnosovGymError as e:
        _emit_error(e.code, type(e).__name__, str(e))
        return 1
    except OSError as e:
        _emit_error('io', type(e).__name__, str(e))
        return 1
    return status or 0
