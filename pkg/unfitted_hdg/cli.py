# -*- coding: utf-8 -*-
"""Command line entry point `solve`.

Options are resolved in the order case config < config file < command line flags.
Exit codes: 0 success, 2 configuration error, 3 geometry or topology error, 4 solver error.
"""
import argparse
import sys
from typing import Any, Dict, List, Optional

from .bases import FACE_BASIS_KINDS
from .case_runner import run_case
from .cases import CASES, PERIODIC_AXES
from .utils import ConfigError, UnfittedHdgError
from .utils_config import exclusive_order, read_config_file, resolved_config


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='solve', description='Unfitted HDG Stokes solver on NURBS geometries.')
    parser.add_argument('--case', choices=CASES, help='Benchmark case.')
    parser.add_argument('--mesh', type=int, help='Number of elements per direction.')
    order = parser.add_mutually_exclusive_group()
    order.add_argument('--degree', type=int, help='Uniform polynomial degree.')
    order.add_argument('--adapt', type=float, metavar='EPS', help='Adapt the degrees to the error tolerance EPS.')
    parser.add_argument('--face-basis', choices=FACE_BASIS_KINDS, help='Basis of the hybrid velocity.')
    parser.add_argument('--alpha-min', type=float, help='Area ratio below which cut cells are extended.')
    parser.add_argument('--no-extension', action='store_true', help='Keep badly cut cells as they are.')
    parser.add_argument('--periodic', choices=sorted(PERIODIC_AXES), help='Periodic axes of the cell.')
    parser.add_argument('--out', help='Output directory.')
    parser.add_argument('--emit', help='Comma separated outputs, any of report, fields, plots.')
    parser.add_argument('--config', help='Text file of key = value lines.')
    parser.add_argument('-v', '--verbosity', type=int, help='0 silent, 1 stage summaries, 2 details.')
    return parser.parse_args(argv)


def flag_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Config options given on the command line."""
    options = {'mesh': args.mesh, 'degree': args.degree, 'adapt_tolerance': args.adapt,
               'face_basis': args.face_basis, 'alpha_min': args.alpha_min, 'periodic': args.periodic,
               'out_dir': args.out, 'verbosity': args.verbosity}
    options = {key: value for key, value in options.items() if value is not None}
    if args.no_extension:
        options['extension'] = False
    if args.emit is not None:
        options['emit'] = tuple(item.strip() for item in args.emit.split(',') if item.strip())
    return exclusive_order(options)


def build_config(args: argparse.Namespace):
    """Resolved and checked config of the parsed arguments."""
    file_options = read_config_file(args.config) if args.config is not None else {}
    case = args.case or file_options.pop('case', None)
    file_options.pop('case', None)
    if case is None:
        raise ConfigError('No case given, use --case or a case entry in the config file')

    return resolved_config(case, {**exclusive_order(file_options), **flag_overrides(args)})


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    try:
        conf = build_config(args)
        result = run_case(conf)
    except UnfittedHdgError as e:
        context = getattr(e, 'case', None) or args.case
        prefix = f'{context}: ' if context else ''
        print(f'error: {prefix}{e}', file=sys.stderr)
        return e.exit_code

    for path in result.files:
        print(path)
    return 0


if __name__ == '__main__':
    sys.exit(main())
