"""
Rendering of model reports, capital sweeps and verification runs as json,
csv or text.

Output is byte-deterministic: fields are emitted in a fixed order and every
number is rounded to `SIGNIFICANT_DIGITS` significant digits.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from typing import Any, Mapping, Optional, Sequence

import pandas as pd

from surplus_sharing.models import CapitalSweep, Flag, ModelReport, SurplusShares, Verdict
from surplus_sharing.oracle import VerificationResult
from surplus_sharing.prob_core import RandomVar
from surplus_sharing.types import OutputFormat
from surplus_sharing.utils import format_number

logger = logging.getLogger(__name__)


def _per_agent(agents: Sequence[str], values: Sequence[float]) -> dict[str, float]:
    return {a: format_number(v) for a, v in zip(agents, values)}


def _per_atom(atoms: Sequence[str], x: RandomVar) -> dict[str, float]:
    return {a: format_number(v) for a, v in zip(atoms, x)}


def _shares(agents: Sequence[str], shares: Optional[SurplusShares]) -> Optional[dict[str, Any]]:
    if shares is None:
        return None
    return {
        'insurer': format_number(shares.insurer),
        'agents': _per_agent(agents, shares.agents),
        'degenerate': shares.degenerate,
    }


def _verdict(v: Verdict) -> dict[str, Any]:
    return {
        'party': v.party,
        'utility': format_number(v.utility),
        'threshold': format_number(v.threshold),
        'gap': format_number(v.gap),
        'accepted': v.accepted,
    }


def _flag(flag: Flag) -> dict[str, Any]:
    return {
        'name': flag.name,
        'lhs': format_number(flag.lhs),
        'relation': flag.relation,
        'rhs': format_number(flag.rhs),
        'holds': flag.holds,
    }


def variables(report: ModelReport) -> dict[str, RandomVar]:
    """Per-atom variables of a report, in output order."""
    result = {
        'aggregate': report.aggregate,
        'surplus': report.surplus,
        'recovery': report.recovery,
        'government_transfer': report.government_transfer,
    }
    result.update({f'payoff.{party}': x for party, x in report.payoffs.items()})
    return result


def report_to_dict(report: ModelReport, mismatches: Sequence[str] = ()) -> dict[str, Any]:
    atoms, agents = report.space.atoms, report.agents
    retention = report.retention
    alternative = report.alternative
    result: dict[str, Any] = {
        'model': report.model,
        'accepted': report.accepted,
        'agents': list(agents),
        'atoms': list(atoms),
        'capital': format_number(report.capital),
        'total_premium': format_number(report.total_premium),
        'fair_premia': _per_agent(agents, report.fair_premia),
        'charged_premia': _per_agent(agents, report.charged_premia),
        'capital_inputs': _per_agent(agents, report.capital_inputs),
        'retention': None
        if retention is None
        else {
            'R': format_number(retention.R),
            'pi_R': format_number(retention.pi_R),
            'rho_R': format_number(retention.rho_R),
            'segment': retention.segment,
            'exact': retention.exact,
            'beyond_max': retention.beyond_max,
        },
        'reinsurance_premium': format_number(report.reinsurance_premium),
        'shares': _shares(agents, report.shares),
        'events': {name: list(members) for name, members in report.events.items()},
        'variables': {name: _per_atom(atoms, x) for name, x in variables(report).items()},
        'verdicts': [_verdict(v) for v in report.verdicts],
        'flags': [_flag(f) for f in report.flags],
        'figures': {name: format_number(value) for name, value in report.figures.items()},
        'alternative': None
        if alternative is None
        else {
            'advisory': alternative.advisory,
            'premia': _per_agent(agents, alternative.premia),
            'capital_inputs': _per_agent(agents, alternative.capital_inputs),
            'shares': _shares(agents, alternative.shares),
            'verdicts': [_verdict(v) for v in alternative.verdicts],
        },
        'balance_residual': format_number(report.balance_residual),
        'warnings': list(report.warnings),
    }
    if mismatches:
        result['oracle_mismatches'] = list(mismatches)
    return result


def _scalar(value: Any) -> Any:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return value


def _csv_rows(report: Mapping[str, Any]) -> list[dict[str, Any]]:
    """Flatten one report dict into `(model, quantity, value, atom_<id>...)`
    rows; per-atom variables fill the atom columns."""
    rows: list[dict[str, Any]] = []
    model = report['model']

    def add(quantity: str, value: Any) -> None:
        rows.append({'model': model, 'quantity': quantity, 'value': _scalar(value)})

    for key in ('accepted', 'capital', 'total_premium', 'reinsurance_premium', 'balance_residual'):
        add(key, report[key])
    for key in ('fair_premia', 'charged_premia', 'capital_inputs'):
        for agent, value in report[key].items():
            add(f'{key}.{agent}', value)
    if report['retention'] is not None:
        for key, value in report['retention'].items():
            add(f'retention.{key}', value)
    if report['shares'] is not None:
        add('shares.insurer', report['shares']['insurer'])
        for agent, value in report['shares']['agents'].items():
            add(f'shares.{agent}', value)
    for name, members in report['events'].items():
        add(f'event.{name}', ' '.join(members))
    for verdict in report['verdicts']:
        for key in ('utility', 'threshold', 'gap', 'accepted'):
            add(f"verdict.{verdict['party']}.{key}", verdict[key])
    for flag in report['flags']:
        add(f"flag.{flag['name']}", flag['holds'])
    for name, value in report['figures'].items():
        add(f'figure.{name}', value)
    alternative = report['alternative']
    if alternative is not None:
        for agent, value in alternative['premia'].items():
            add(f'alternative.premia.{agent}', value)
        for verdict in alternative['verdicts']:
            add(f"alternative.verdict.{verdict['party']}.accepted", verdict['accepted'])
    for warning in report['warnings']:
        add('warning', warning)
    for message in report.get('oracle_mismatches', ()):
        add('oracle_mismatch', message)
    for name, values in report['variables'].items():
        row: dict[str, Any] = {'model': model, 'quantity': name, 'value': None}
        row.update({f'atom_{atom}': value for atom, value in values.items()})
        rows.append(row)
    return rows


def _text(report: Mapping[str, Any]) -> str:
    lines = [f"Model {report['model']}: {'accepted' if report['accepted'] else 'REJECTED'}"]
    lines.append(f"  capital k0          {report['capital']:.12g}")
    lines.append(f"  total premium       {report['total_premium']:.12g}")
    for agent in report['agents']:
        lines.append(
            f"  {agent:<18}  fair {report['fair_premia'][agent]:.12g}"
            f"  charged {report['charged_premia'][agent]:.12g}"
            f"  capital input {report['capital_inputs'][agent]:.12g}"
        )
    if report['retention'] is not None:
        r = report['retention']
        lines.append(f"  retention R         {r['R']:.12g} (pi_R {r['pi_R']:.12g}, rho_R {r['rho_R']:.12g})")
    if report['shares'] is not None:
        shares = ', '.join(f'{a} {v:.12g}' for a, v in report['shares']['agents'].items())
        lines.append(f"  shares              insurer {report['shares']['insurer']:.12g}; {shares}")
    for name, members in report['events'].items():
        lines.append(f"  event {name}             {{{', '.join(members)}}}")
    for verdict in report['verdicts']:
        mark = 'ok' if verdict['accepted'] else 'FAIL'
        lines.append(
            f"  verdict {verdict['party']:<12} {verdict['utility']:.12g} >= "
            f"{verdict['threshold']:.12g}  [{mark}]"
        )
    for flag in report['flags']:
        lines.append(
            f"  flag {flag['name']:<30} {flag['lhs']:.12g} {flag['relation']} "
            f"{flag['rhs']:.12g}  [{'yes' if flag['holds'] else 'no'}]"
        )
    for name, value in report['figures'].items():
        lines.append(f'  {name:<28} {value:.12g}')
    if report['alternative'] is not None:
        premia = ', '.join(f'{a} {v:.12g}' for a, v in report['alternative']['premia'].items())
        lines.append(f'  alternative premia (advisory): {premia}')
    for name, values in report['variables'].items():
        lines.append(f"  {name:<28} {' '.join(f'{v:.12g}' for v in values.values())}")
    for warning in report['warnings']:
        lines.append(f'  warning: {warning}')
    for message in report.get('oracle_mismatches', ()):
        lines.append(f'  oracle mismatch: {message}')
    return '\n'.join(lines)


def render_reports(reports: Sequence[Mapping[str, Any]], fmt: OutputFormat) -> str:
    """Render report dicts (from `report_to_dict`) in submission order.

    >>> render_reports([], 'json')
    '{\\n  "reports": []\\n}\\n'
    """
    if fmt == 'json':
        return json.dumps({'reports': list(reports)}, indent=2) + '\n'
    if fmt == 'csv':
        rows = [row for report in reports for row in _csv_rows(report)]
        atoms = reports[0]['atoms'] if reports else []
        columns = ['model', 'quantity', 'value', *(f'atom_{a}' for a in atoms)]
        return pd.DataFrame(rows, columns=columns).to_csv(index=False, lineterminator='\n')
    if fmt == 'text':
        return '\n\n'.join(_text(report) for report in reports) + '\n'
    raise ValueError(f'unknown output format {fmt!r}')


def _formatted(frame: pd.DataFrame) -> pd.DataFrame:
    return frame.apply(lambda column: column.map(format_number))


def render_sweep(sweep: CapitalSweep, fmt: OutputFormat) -> str:
    frame = _formatted(sweep.to_frame())
    checks = {
        'monotone_retention': sweep.monotone_retention,
        'monotone_utility': sweep.monotone_utility,
    }
    if fmt == 'json':
        return json.dumps({'rows': frame.to_dict(orient='records'), **checks}, indent=2) + '\n'
    summary = ' '.join(f"{name}={'true' if ok else 'false'}" for name, ok in checks.items())
    if fmt == 'csv':
        return frame.to_csv(index=False, lineterminator='\n') + f'# {summary}\n'
    if fmt == 'text':
        return frame.to_string(index=False) + f'\n{summary}\n'
    raise ValueError(f'unknown output format {fmt!r}')


def render_verification(results: Sequence[VerificationResult], fmt: OutputFormat) -> str:
    records = []
    for result in results:
        record = dataclasses.asdict(result)
        record['insurer_accepted'] = all(result.insurer_accepted)
        record['passed'] = result.passed
        for key in ('utility_gap', 'retention_gap', 'allocation_gap', 'core_gap', 'balance_residual'):
            if record[key] is not None:
                record[key] = format_number(record[key], 3)
        records.append(record)
    passed = sum(r.passed for r in results)
    summary = f'passed {passed} of {len(results)}'
    if fmt == 'json':
        return json.dumps({'results': records, 'passed': passed, 'total': len(results)}, indent=2) + '\n'
    frame = pd.DataFrame(records, columns=[*(f.name for f in dataclasses.fields(VerificationResult)), 'passed'])
    if fmt == 'csv':
        return frame.to_csv(index=False, lineterminator='\n') + f'# {summary}\n'
    if fmt == 'text':
        return frame.to_string(index=False) + f'\n{summary}\n'
    raise ValueError(f'unknown output format {fmt!r}')
