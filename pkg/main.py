#!/usr/bin/env python3
"""
Quantum intersection numbers, one-part double Hurwitz numbers and stationary
relative invariants of the projective line, computed exactly
Commands: qint, hurwitz, gw, wedge-vev, quantum, crosscheck, table
"""

import argparse
import csv
import io
import itertools
import json
import logging
import os
import re
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError

from closedform import CorrelatorKey, PreconditionError, gjv_hurwitz, hurwitz_oracle, hurwitz_table, purely_quantum
from crosscheck import run_suites
from data_manager import DataManager
from exact_arith import ParseError, format_gaussian, format_rational
from gw import InterpolationError, Profile, ProfileError, connected_invariant, genus_of
from quant_config import QuantConfig
from quantization import (DensityFormatError, NormalizationError, TableInconsistencyError, WindowError,
                          builtin_densities, load_density, quantum_intersection)
from wedge import WedgeError, WedgeWord, fock_vev, vev

# Configure logging
logging.basicConfig(
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    level=logging.INFO)
logger = logging.getLogger(__name__)

USAGE_ERRORS = (ParseError, PreconditionError, ProfileError, DensityFormatError, ValidationError)
COMPUTATION_ERRORS = (InterpolationError, WindowError, NormalizationError, TableInconsistencyError, WedgeError)

_DENSITY_NAME = re.compile(r'hbar(\d+)\.txt$')


class UsageError(ValueError):
    """Bad command-line input, exit code 2"""


class QintCLI:

    def __init__(self, data_manager: Optional[DataManager] = None):
        self.config = QuantConfig()
        self.data_manager = data_manager or DataManager()

    # --- output ---------------------------------------------------------------

    def emit(self, args, text: str):
        """Print a result or write it to --out"""
        if getattr(args, 'out', None):
            self.data_manager.save_text_file(args.out, text)
        else:
            print(text)

    def emit_value(self, args, payload: Dict, value_text: str):
        if args.format == 'json':
            self.emit(args, json.dumps(payload, ensure_ascii=False))
        elif args.format == 'csv':
            row = [' '.join(map(str, v)) if isinstance(v, list) else v for v in payload.values()]
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator='\n')
            writer.writerow(payload.keys())
            writer.writerow(row)
            self.emit(args, buffer.getvalue().rstrip('\n'))
        else:
            self.emit(args, value_text)

    # --- commands -------------------------------------------------------------

    def qint_command(self, args) -> int:
        """<tau_d>_{0,g} from the closed formula"""
        value = purely_quantum(args.d, args.g)
        text = format_rational(value)
        self.emit_value(args, {'d': list(args.d), 'g': args.g, 'value': text}, text)
        return self.config.EXIT_OK

    def hurwitz_command(self, args) -> int:
        """One-part double Hurwitz number H^g_((d), mu)"""
        mu = Profile(args.mu)
        value = format_rational(gjv_hurwitz(args.g, mu))
        payload = {'g': args.g, 'mu': list(mu.parts), 'value': value}
        text = value
        status = self.config.EXIT_OK
        if args.oracle:
            oracle = format_rational(hurwitz_oracle(args.g, Profile([mu.total]), mu))
            payload['oracle'] = oracle
            text = f"{value} (oracle {oracle})"
            if oracle != value:
                logger.error(f"Closed formula {value} disagrees with the oracle {oracle}")
                status = self.config.EXIT_CHECK_FAILED
        self.emit_value(args, payload, text)
        return status

    def gw_command(self, args) -> int:
        """Connected <A, prod tau_d(omega), a> with A = |a|"""
        a = Profile(args.a)
        value = format_rational(connected_invariant(a.total, a, args.d).real_value())
        payload = {'A': a.total, 'a': list(a.parts), 'd': list(args.d),
                   'g': genus_of(1, len(a), args.d), 'value': value}
        self.emit_value(args, payload, value)
        return self.config.EXIT_OK

    def wedge_vev_command(self, args) -> int:
        """Vacuum expectation of an operator word, optionally against the Fock oracle"""
        word = WedgeWord.parse(args.word)
        variables = tuple(sorted(word.variables()))
        series = vev(word, variables, args.cap)
        payload = {'word': str(word), 'variables': list(variables), 'cap': args.cap, 'series': str(series)}
        text = str(series)
        status = self.config.EXIT_OK
        if args.oracle:
            cutoff = 2 * sum(abs(g.energy) for g in word) + 2
            literal = fock_vev(word, variables, args.cap, cutoff)
            agrees = series.agrees_with(literal)
            payload['oracle_agrees'] = agrees
            text = f"{text}\noracle: {'agrees' if agrees else 'DISAGREES: ' + str(literal)}"
            if not agrees:
                status = self.config.EXIT_CHECK_FAILED
        self.emit_value(args, payload, text)
        return status

    def load_densities(self, paths: List[str]):
        densities = dict(builtin_densities())
        for path in paths or []:
            match = _DENSITY_NAME.search(os.path.basename(path))
            if not match:
                raise UsageError(f"Density file name must look like hbarD.txt: {path}")
            densities[int(match.group(1))] = load_density(self.data_manager.read_density_file(path))
            logger.info(f"Loaded density for Hbar_{match.group(1)} from {path}")
        return densities

    def quantum_command(self, args) -> int:
        """<tau_0 tau_d>_{l, g-l} through the quantum chain"""
        if args.l > args.g:
            raise UsageError(f"--l {args.l} exceeds --g {args.g}")
        densities = self.load_densities(args.density)
        margin = args.window if args.window is not None else self.config.WINDOW_MARGIN
        value = quantum_intersection(args.d, args.l, args.g - args.l, densities,
                                     self.config.bounds().eval_budget, margin)
        key = CorrelatorKey((0,) + tuple(args.d), args.l, args.g - args.l)
        if not value.is_real():
            raise NormalizationError(f"{key}: normalized value {format_gaussian(value)} is not real")
        text = format_rational(value.re)
        self.emit_value(args, {'key': str(key), 'd': [0] + list(args.d), 'l': args.l, 'g': args.g,
                               'value': text}, text)
        return self.config.EXIT_OK

    def crosscheck_command(self, args) -> int:
        """Run cross-check suites; exit 1 on any failed comparison"""
        for name in args.suites:
            if not self.config.is_suite(name):
                known = ['all'] + self.config.SUITES + list(self.config.SUITE_ALIASES)
                raise UsageError(f"Unknown suite {name!r}; choose from {known}")
        reports = run_suites(args.suites, self.config.bounds())
        if args.format == 'json':
            text = json.dumps([report.to_dict() for report in reports], indent=2, ensure_ascii=False)
        else:
            lines = []
            for report in reports:
                lines.append(report.summary())
                for entry in report.failures():
                    lines.append(f"  FAIL {entry['instance']}: {entry['lhs']} vs {entry['rhs']}")
                for note in report.informational:
                    lines.append(f"  note {note['instance']}: {note['value']}")
            text = '\n'.join(lines)
        self.emit(args, text)
        success = all(report.success for report in reports)
        return self.config.EXIT_OK if success else self.config.EXIT_CHECK_FAILED

    def table_command(self, args) -> int:
        """Write a qint, hurwitz or gw table as CSV (or JSON)"""
        if args.kind == 'qint':
            columns, rows = ['g', 'd', 'value'], self.qint_rows(args.g, args.n)
        elif args.kind == 'hurwitz':
            columns = ['g', 'mu', 'value']
            rows = [{'g': row['g'], 'mu': ' '.join(map(str, row['mu'])), 'value': format_rational(row['value'])}
                    for row in hurwitz_table(args.g, args.degree)]
        else:
            if not args.a:
                raise UsageError("table gw needs --a")
            columns, rows = ['g', 'd', 'value'], self.gw_rows(Profile(args.a), args.n, args.g)
        fmt = 'json' if args.format == 'json' else 'csv'
        out = args.out or os.path.join(self.config.DATA_PATHS['tables'], f"{args.kind}.{fmt}")
        if fmt == 'json':
            self.data_manager.save_json_file(out, {'header': self.config.table_header(args.kind), 'rows': rows})
        else:
            self.data_manager.save_csv_table(out, self.config.table_header(args.kind), columns, rows)
        print(out)
        return self.config.EXIT_OK

    # --- table rows -----------------------------------------------------------

    @staticmethod
    def qint_rows(max_genus: int, max_points: int) -> List[Dict]:
        rows = []
        for g in range(max_genus + 1):
            for n in range(1, max_points + 1):
                top = 4 * g - 3 + n
                for d in itertools.combinations_with_replacement(range(max(top, 0) + 1), n):
                    if sum(d) > top:
                        continue
                    try:
                        value = purely_quantum(d, g)
                    except PreconditionError:
                        continue
                    rows.append({'g': g, 'd': ' '.join(map(str, d)), 'value': format_rational(value)})
        return rows

    @staticmethod
    def gw_rows(a: Profile, n: int, max_genus: int) -> List[Dict]:
        rows = []
        top = 2 * max_genus - 1 + len(a)
        for d in itertools.product(range(top + 1), repeat=n):
            g = genus_of(1, len(a), d)
            if g is None or g > max_genus:
                continue
            value = connected_invariant(a.total, a, d).real_value()
            rows.append({'g': g, 'd': ' '.join(map(str, d)), 'value': format_rational(value)})
        return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='qint', description=__doc__.strip().splitlines()[0])
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p):
        p.add_argument('--format', choices=QuantConfig.OUTPUT_FORMATS, default='text')
        p.add_argument('--out', help='write the output to this file')

    p = sub.add_parser('qint', help='<tau_d>_{0,g} from the closed formula')
    p.add_argument('--d', type=int, nargs='+', required=True)
    p.add_argument('--g', type=int, required=True)
    common(p)

    p = sub.add_parser('hurwitz', help='one-part double Hurwitz number')
    p.add_argument('--g', type=int, required=True)
    p.add_argument('--mu', type=int, nargs='+', required=True)
    p.add_argument('--oracle', action='store_true', help='also count factorizations')
    common(p)

    p = sub.add_parser('gw', help='connected stationary relative invariant')
    p.add_argument('--a', type=int, nargs='+', required=True)
    p.add_argument('--d', type=int, nargs='+', required=True)
    common(p)

    p = sub.add_parser('wedge-vev', help='vacuum expectation of an operator word')
    p.add_argument('--word', required=True, help='e.g. "a2 E0(z) a-2"')
    p.add_argument('--cap', type=int, default=QuantConfig.DEFAULT_CAP)
    p.add_argument('--oracle', action='store_true', help='compare with the Fock-space action')
    common(p)

    p = sub.add_parser('quantum', help='<tau_0 tau_d>_{l,g-l} from the quantum Hamiltonians')
    p.add_argument('--d', type=int, nargs='+', required=True)
    p.add_argument('--g', type=int, required=True)
    p.add_argument('--l', type=int, default=0)
    p.add_argument('--window', type=int,
                   help='margin added to the mode and target indices when sizing the p-window')
    p.add_argument('--density', action='append', help='density file hbarD.txt (repeatable)')
    common(p)

    p = sub.add_parser('crosscheck', help='run cross-check suites')
    p.add_argument('suites', nargs='*', help=f"suite names or 'all': {', '.join(QuantConfig.SUITES)}")
    common(p)

    p = sub.add_parser('table', help='write a table of values')
    p.add_argument('kind', choices=QuantConfig.TABLE_KINDS)
    p.add_argument('--g', type=int, default=1, help='maximal genus')
    p.add_argument('--n', type=int, default=1, help='number of insertions (maximal for qint)')
    p.add_argument('--degree', type=int, default=4, help='maximal degree (hurwitz)')
    p.add_argument('--a', type=int, nargs='+', help='profile over infinity (gw)')
    common(p)
    return parser


COMMANDS = {
    'qint': QintCLI.qint_command,
    'hurwitz': QintCLI.hurwitz_command,
    'gw': QintCLI.gw_command,
    'wedge-vev': QintCLI.wedge_vev_command,
    'quantum': QintCLI.quantum_command,
    'crosscheck': QintCLI.crosscheck_command,
    'table': QintCLI.table_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main function: parse arguments, run one command, return the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return QuantConfig.EXIT_USAGE if e.code else QuantConfig.EXIT_OK
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    if args.command == 'crosscheck' and not args.suites:
        parser.print_usage(sys.stderr)
        logger.error("crosscheck needs at least one suite")
        return QuantConfig.EXIT_USAGE

    cli = QintCLI()
    try:
        return COMMANDS[args.command](cli, args)
    except (UsageError,) + USAGE_ERRORS as e:
        logger.error(f"Usage error in {args.command}: {e}")
        return QuantConfig.EXIT_USAGE
    except COMPUTATION_ERRORS as e:
        logger.error(f"Computation failed in {args.command}: {e}")
        return QuantConfig.EXIT_CHECK_FAILED
    except OSError as e:
        logger.error(f"I/O error in {args.command}: {e}")
        return QuantConfig.EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
