"""
Command-line front door.

    surplus-sharing run --model 2 tests/fixtures/w1.json
    surplus-sharing run --model all tests/fixtures/w1-model4.json --format csv
    surplus-sharing sweep --grid 0.25:8:32 tests/fixtures/w1-model4.json
    surplus-sharing verify --seed 0 --count 200
    surplus-sharing validate --model 4 tests/fixtures/w1-model4.json

Exit codes: 0 all verdicts accepted (and all checks passed), 1 invalid
input, 2 internal error, 3 a verdict or check failed.
"""
from __future__ import annotations

import argparse
import dataclasses
import enum
import json
import logging
import pathlib
import sys
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from surplus_sharing.allocation import upper_premia
from surplus_sharing.coherent import parse_distortion
from surplus_sharing.models import (
    MODEL_IDS,
    CapitalSweep,
    Portfolio,
    check_grid,
    validate_portfolio,
)
from surplus_sharing.oracle import check_report
from surplus_sharing.prob_core import ProbSpace, RandomVar
from surplus_sharing.queues import RunQueue
from surplus_sharing.reports import (
    render_reports,
    render_sweep,
    render_verification,
    report_to_dict,
)
from surplus_sharing.types import ModelId, OutputFormat, PremiaPrinciple
from surplus_sharing.utils import (
    CONFIG,
    MAX_ORACLE_AGENTS,
    MAX_ORACLE_ATOMS,
    GuardError,
    InputError,
    field_context,
    parse_number,
)

logger = logging.getLogger(__name__)


class ExitCode(enum.IntEnum):
    OK = 0
    INPUT_ERROR = 1
    INTERNAL_ERROR = 2
    REJECTED = 3


@dataclasses.dataclass
class RunConfig:
    """Parsed command line."""

    command: str
    input: Optional[pathlib.Path] = None
    models: tuple[ModelId, ...] = MODEL_IDS
    fmt: OutputFormat = 'json'
    out: Optional[pathlib.Path] = None
    grid: Optional[tuple[float, ...]] = None
    verify: bool = False
    seed: int = 0
    count: int = 100
    atoms: int = 4
    agents: int = 2
    tie_frequency: float = 0.0
    premia_principle: PremiaPrinciple = 'charged'
    verbose: int = 0


def _mapping(doc: Any, field: str) -> Mapping[str, Any]:
    if not isinstance(doc, Mapping):
        raise InputError(f'expected an object, got {type(doc).__name__}', field)
    return doc


def _numbers(values: Any, field: str) -> list[float]:
    with field_context(field):
        if not isinstance(values, list):
            raise InputError(f'expected a list of numbers, got {type(values).__name__}')
        return [parse_number(v) for v in values]


def load_portfolio(doc: Any, models: Sequence[ModelId] = ()) -> Portfolio:
    """Build a portfolio from a parsed JSON document and validate it for
    each of `models`.

    >>> load_portfolio({'space': {'atoms': ['a'], 'probs': [0.9]}})
    Traceback (most recent call last):
    ...
    InputError: space.probs: probabilities sum to 0.9, expected 1
    """
    doc = _mapping(doc, 'portfolio')
    space_doc = _mapping(doc.get('space'), 'space')
    with field_context('space.atoms'):
        atoms = space_doc.get('atoms')
        if not isinstance(atoms, list) or not all(isinstance(a, str) for a in atoms):
            raise InputError('expected a list of atom ids')
    space = ProbSpace(tuple(atoms), _numbers(space_doc.get('probs'), 'space.probs'))

    claims_doc = _mapping(doc.get('claims'), 'claims')
    agents = tuple(claims_doc)
    claims = []
    for agent in agents:
        with field_context(f'claims.{agent}'):
            claims.append(RandomVar(_numbers(claims_doc[agent], f'claims.{agent}')))

    with field_context('capital'):
        if 'capital' not in doc:
            raise InputError('capital is required')
        capital = parse_number(doc['capital'])

    premia = None
    if doc.get('premia') is not None:
        premia_doc = _mapping(doc['premia'], 'premia')
        unknown = set(premia_doc) - set(agents)
        if unknown:
            raise InputError(f'premia for unknown agents: {sorted(unknown)}', 'premia')
        premia = []
        for agent in agents:
            with field_context(f'premia.{agent}'):
                if agent not in premia_doc:
                    raise InputError('missing premium')
                premia.append(parse_number(premia_doc[agent]))

    utilities = _mapping(doc.get('utilities'), 'utilities')
    with field_context('utilities.insurer'):
        if 'insurer' not in utilities:
            raise InputError('insurer distortion is required')
        insurer = parse_distortion(utilities['insurer'])
    reinsurer = None
    if utilities.get('reinsurer') is not None:
        with field_context('utilities.reinsurer'):
            reinsurer = parse_distortion(utilities['reinsurer'])
    agents_doc = _mapping(utilities.get('agents'), 'utilities.agents')
    agent_utilities = []
    for agent in agents:
        with field_context(f'utilities.agents.{agent}'):
            if agent not in agents_doc:
                raise InputError('missing agent distortion')
            agent_utilities.append(parse_distortion(agents_doc[agent]))

    portfolio = Portfolio(
        space=space,
        agents=agents,
        claims=tuple(claims),
        capital=capital,
        insurer=insurer,
        agent_utilities=tuple(agent_utilities),
        reinsurer=reinsurer,
        premia=None if premia is None else tuple(premia),
    )
    for model in models:
        validate_portfolio(portfolio, model)
    return portfolio


def parse_portfolio(path: str | pathlib.Path, models: Sequence[ModelId] = ()) -> Portfolio:
    """Read and validate a portfolio file. Invalid content raises
    `InputError` naming the offending field."""
    path = pathlib.Path(path)
    logger.info('Reading portfolio from %s', path)
    return load_portfolio(json.loads(path.read_text()), models)


def dump_portfolio(portfolio: Portfolio) -> dict[str, Any]:
    """Inverse of `load_portfolio`, field for field."""
    doc: dict[str, Any] = {
        'space': {
            'atoms': list(portfolio.space.atoms),
            'probs': portfolio.space.probs.tolist(),
        },
        'claims': {a: x.values.tolist() for a, x in zip(portfolio.agents, portfolio.claims)},
        'capital': portfolio.capital,
    }
    if portfolio.premia is not None:
        doc['premia'] = dict(zip(portfolio.agents, portfolio.premia))
    utilities: dict[str, Any] = {'insurer': portfolio.insurer.spec}
    if portfolio.reinsurer is not None:
        utilities['reinsurer'] = portfolio.reinsurer.spec
    utilities['agents'] = {a: f.spec for a, f in zip(portfolio.agents, portfolio.agent_utilities)}
    doc['utilities'] = utilities
    return doc


def parse_grid(text: str) -> tuple[float, ...]:
    """`lo:hi:steps` (evenly spaced, both ends included) or one number.

    >>> parse_grid('0.5:2:4')
    (0.5, 1.0, 1.5, 2.0)
    >>> parse_grid('3')
    (3.0,)
    """
    with field_context('grid'):
        parts = text.split(':')
        if len(parts) == 1:
            return check_grid([parse_number(parts[0])])
        if len(parts) != 3:
            raise InputError(f'expected lo:hi:steps, got {text!r}')
        lo, hi = parse_number(parts[0]), parse_number(parts[1])
        steps = int(parts[2])
        if steps < 1:
            raise InputError(f'steps must be a positive integer, got {steps}')
        return check_grid(np.linspace(lo, hi, steps).tolist())


def _parse_models(text: str) -> tuple[ModelId, ...]:
    if text == 'all':
        return MODEL_IDS
    if text in {'1', '2', '3', '4'}:
        return (int(text),)  # type: ignore[return-value]
    raise InputError(f"model must be 1, 2, 3, 4 or 'all', got {text!r}", 'model')


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are input errors (exit code 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise InputError(message, 'argv')


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='surplus-sharing', description=__doc__.splitlines()[1])
    parser.add_argument('-v', '--verbose', action='count', default=0, help='INFO, repeat for DEBUG')
    commands = parser.add_subparsers(dest='command', required=True)

    def with_output(sub: argparse.ArgumentParser) -> None:
        sub.add_argument('--format', dest='fmt', choices=('json', 'csv', 'text'), default='json')
        sub.add_argument('--out', type=pathlib.Path, help='write here instead of stdout')

    run = commands.add_parser('run', help='run surplus-sharing models on a portfolio file')
    run.add_argument('input', type=pathlib.Path)
    run.add_argument('--model', default='all', help='1, 2, 3, 4 or all (default)')
    run.add_argument(
        '--premia-principle',
        choices=('charged', 'insurer-sup', 'reinsurer-sup'),
        default='charged',
        help='charge the premia in the file, or sup_Q E_Q[X_i] under the insurer or reinsurer',
    )
    run.add_argument('--verify', action='store_true', help='cross-check results by brute force')
    with_output(run)

    sweep = commands.add_parser('sweep', help='model 4 across a grid of capital levels')
    sweep.add_argument('input', type=pathlib.Path)
    sweep.add_argument('--grid', required=True, help='lo:hi:steps or a single capital level')
    with_output(sweep)

    verify = commands.add_parser('verify', help='compare fast and brute-force results on random instances')
    verify.add_argument('--seed', type=int, default=0)
    verify.add_argument('--count', type=int, default=100)
    verify.add_argument('--atoms', type=int, default=4)
    verify.add_argument('--agents', type=int, default=2)
    verify.add_argument('--tie-frequency', type=float, default=0.0)
    with_output(verify)

    validate = commands.add_parser('validate', help='check a portfolio file')
    validate.add_argument('input', type=pathlib.Path)
    validate.add_argument('--model', default='all', help='1, 2, 3, 4 or all (default)')
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    >>> parse_args(['run', '--model', '2', 'w1.json']).models
    (2,)
    >>> parse_args(['sweep', '--grid', '1:2:2', 'w1.json']).grid
    (1.0, 2.0)
    """
    args = build_parser().parse_args(argv)
    config = RunConfig(command=args.command, verbose=args.verbose)
    if args.command in ('run', 'sweep', 'validate'):
        config.input = args.input
    if args.command in ('run', 'validate'):
        config.models = _parse_models(args.model)
    if args.command == 'run':
        config.premia_principle = args.premia_principle
        config.verify = args.verify
    if args.command == 'sweep':
        config.models = (4,)
        config.grid = parse_grid(args.grid)
    if args.command == 'verify':
        if args.count < 1:
            raise InputError(f'count must be positive, got {args.count}', 'count')
        if not 1 <= args.atoms <= MAX_ORACLE_ATOMS:
            raise GuardError(f'atom count must be in [1, {MAX_ORACLE_ATOMS}]', 'atoms')
        if not 1 <= args.agents <= MAX_ORACLE_AGENTS:
            raise GuardError(f'agent count must be in [1, {MAX_ORACLE_AGENTS}]', 'agents')
        if not 0 <= args.tie_frequency <= 1:
            raise InputError('tie frequency must be in [0, 1]', 'tie_frequency')
        config.seed, config.count = args.seed, args.count
        config.atoms, config.agents, config.tie_frequency = args.atoms, args.agents, args.tie_frequency
    if args.command != 'validate':
        config.fmt, config.out = args.fmt, args.out
    return config


def apply_premia_principle(portfolio: Portfolio, principle: PremiaPrinciple) -> Portfolio:
    """Replace the charged premia by `-u(-X_i)` under the insurer's or the
    reinsurer's utility."""
    if principle == 'charged':
        return portfolio
    f = portfolio.insurer if principle == 'insurer-sup' else portfolio.reinsurer
    if f is None:
        raise InputError(f'premia principle {principle} needs a reinsurer distortion', 'utilities.reinsurer')
    return portfolio.with_premia(upper_premia(portfolio.space, f, portfolio.claims).premia)


def _emit(text: str, out: Optional[pathlib.Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        logger.info('Wrote %s', out)


def run(config: RunConfig, queue: Optional[RunQueue] = None) -> ExitCode:
    assert config.input is not None
    portfolio = apply_premia_principle(parse_portfolio(config.input), config.premia_principle)
    for model in config.models:
        validate_portfolio(portfolio, model)
    queue = queue or RunQueue()
    reports = queue.gather(queue.map('run_model', [(portfolio, m) for m in config.models]))
    checks = [check_report(portfolio, r) if config.verify else () for r in reports]
    _emit(render_reports([report_to_dict(r, c) for r, c in zip(reports, checks)], config.fmt), config.out)
    if all(r.accepted for r in reports) and not any(checks):
        return ExitCode.OK
    return ExitCode.REJECTED


def sweep(config: RunConfig, queue: Optional[RunQueue] = None) -> ExitCode:
    assert config.input is not None and config.grid is not None
    portfolio = parse_portfolio(config.input)
    validate_portfolio(portfolio.with_capital(config.grid[0]), 4)
    queue = queue or RunQueue()
    rows = queue.gather(queue.map('sweep_point', [(portfolio, k0) for k0 in config.grid]))
    table = CapitalSweep(tuple(rows))
    _emit(render_sweep(table, config.fmt), config.out)
    return ExitCode.OK if table.monotone else ExitCode.REJECTED


def verify(config: RunConfig, queue: Optional[RunQueue] = None) -> ExitCode:
    queue = queue or RunQueue()
    seeds = range(config.seed, config.seed + config.count)
    results = queue.gather(
        queue.map(
            'verify_instance',
            [(seed, config.atoms, config.agents, config.tie_frequency) for seed in seeds],
        )
    )
    _emit(render_verification(results, config.fmt), config.out)
    return ExitCode.OK if all(r.passed for r in results) else ExitCode.REJECTED


def validate(config: RunConfig) -> ExitCode:
    assert config.input is not None
    portfolio = parse_portfolio(config.input, config.models)
    models = ', '.join(str(m) for m in config.models)
    sys.stdout.write(
        f'{config.input}: valid for model(s) {models} '
        f'({len(portfolio.space)} atoms, {len(portfolio.agents)} agents)\n'
    )
    return ExitCode.OK


def configure_logging(verbose: int) -> None:
    level = {0: CONFIG['logging']['level'], 1: 'INFO'}.get(verbose, 'DEBUG')
    logging.basicConfig(format='%(asctime)s | %(levelname)s | %(name)s | %(message)s')
    logging.getLogger().setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_args(argv)
        configure_logging(config.verbose)
        if config.command == 'run':
            code = run(config)
        elif config.command == 'sweep':
            code = sweep(config)
        elif config.command == 'verify':
            code = verify(config)
        else:
            code = validate(config)
    except InputError as exc:
        sys.stderr.write(f'error: {exc}\n')
        return ExitCode.INPUT_ERROR
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f'error: cannot read input: {exc}\n')
        return ExitCode.INPUT_ERROR
    except Exception:
        logger.exception('Internal error')
        return ExitCode.INTERNAL_ERROR
    return code


if __name__ == '__main__':
    import doctest

    doctest.testmod()
