"""Experiment report rows and their CSV, JSON-lines and text renderings.

Floats are written with ``repr`` so that parsing an emitted file gives back
the same values bit for bit.
"""
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields

__all__ = ['SolveRow', 'CSV_FIELDS', 'to_csv', 'from_csv', 'to_jsonl', 'from_jsonl',
           'format_table', 'table_to_csv', 'table_from_csv', 'format_generic_table']

CSV_FIELDS = ('param', 'cf', 'cc', 'wpd', 'iters', 'converged')


@dataclass
class SolveRow:
    """One solve: sweep parameter, convergence factor, cycle complexity,
    work units per digit, GMRES iterations and setup fallback counts."""
    param: object
    cf: float
    cc: float
    wpd: float
    iters: int
    converged: bool
    r_fallbacks: int = 0
    p_fallbacks: int = 0

    @property
    def dnc(self):
        return not self.converged or not self.cf < 1.0


def _fmt(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_param(text):
    try:
        return float(text)
    except ValueError:
        return text


def to_csv(rows):
    """CSV text with header ``param,cf,cc,wpd,iters,converged``."""
    return table_to_csv([{k: getattr(r, k) for k in CSV_FIELDS} for r in rows],
                        CSV_FIELDS)


def from_csv(text):
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        if tuple(rec) != CSV_FIELDS:
            raise ValueError(f'unexpected CSV header {tuple(rec)}')
        out.append(SolveRow(_parse_param(rec['param']), float(rec['cf']),
                            float(rec['cc']), float(rec['wpd']), int(rec['iters']),
                            rec['converged'] == 'true'))
    return out


def to_jsonl(rows):
    return ''.join(json.dumps(asdict(r)) + '\n' for r in rows)


def from_jsonl(text):
    names = {f.name for f in fields(SolveRow)}
    out = []
    for line in text.splitlines():
        if line.strip():
            rec = json.loads(line)
            out.append(SolveRow(**{k: v for k, v in rec.items() if k in names}))
    return out


def table_to_csv(records, columns):
    """CSV for a list of dicts with a fixed column order (LF line endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_fmt(rec[c]) for c in columns])
    return buf.getvalue()


def table_from_csv(text):
    """Parse :func:`table_to_csv` output, converting numeric cells to float."""
    return [{k: _parse_param(v) for k, v in rec.items()}
            for rec in csv.DictReader(io.StringIO(text))]


def format_table(rows, param_name='param'):
    """Fixed-width text table; non-converged rows show ``DNC``."""
    head = f"{param_name:>12} {'CF':>8} {'CC':>7} {'WPD':>8} {'iters':>6} {'R_fb':>5} {'P_fb':>5}"
    lines = [head, '-' * len(head)]
    for r in rows:
        param = f'{r.param:>12.3g}' if isinstance(r.param, float) else f'{r.param!s:>12}'
        if r.dnc:
            cf = wpd = 'DNC'
        else:
            cf = f'{r.cf:.3f}'
            wpd = f'{r.wpd:.1f}' if math.isfinite(r.wpd) else 'DNC'
        lines.append(f'{param} {cf:>8} {r.cc:>7.2f} {wpd:>8} {r.iters:>6} '
                     f'{r.r_fallbacks:>5} {r.p_fallbacks:>5}')
    return '\n'.join(lines) + '\n'


def format_generic_table(records, columns):
    """Fixed-width rendering of dict records (floats with 4 significant digits)."""
    def cell(v):
        return f'{v:.4g}' if isinstance(v, float) else str(v)
    width = {c: max([len(c)] + [len(cell(r[c])) for r in records]) for c in columns}
    lines = [' '.join(f'{c:>{width[c]}}' for c in columns)]
    lines.append('-' * len(lines[0]))
    lines += [' '.join(f'{cell(r[c]):>{width[c]}}' for c in columns) for r in records]
    return '\n'.join(lines) + '\n'
