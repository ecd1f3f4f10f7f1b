import math

import pytest
from hypothesis import given, strategies as st

from lair.report import (CSV_FIELDS, SolveRow, format_generic_table, format_table,
                         from_csv, from_jsonl, table_from_csv, table_to_csv, to_csv, to_jsonl)

finite = st.floats(allow_nan=False, allow_infinity=False)
rows = st.lists(st.builds(SolveRow, param=st.one_of(finite, st.sampled_from(['h', 'sqrth'])),
                          cf=finite, cc=finite,
                          wpd=st.one_of(finite, st.just(math.inf)),
                          iters=st.integers(0, 10**4), converged=st.booleans()),
                max_size=6)


@given(rows)
def test_csv_round_trip(rs):
    assert from_csv(to_csv(rs)) == rs


@given(rows)
def test_jsonl_round_trip(rs):
    assert from_jsonl(to_jsonl(rs)) == rs


def test_csv_header_and_booleans():
    text = to_csv([SolveRow(1e-4, 0.1, 2.5, 5.0, 9, True)])
    head, line = text.splitlines()
    assert head == ','.join(CSV_FIELDS)
    assert line == '0.0001,0.1,2.5,5.0,9,true'
    with pytest.raises(ValueError):
        from_csv('a,b\n1,2\n')


def test_table_marks_dnc():
    text = format_table([SolveRow(1.0, 0.2, 3.0, 4.3, 12, True),
                         SolveRow(0.0, 1.2, 3.0, math.inf, 200, False)], 'kappa')
    lines = text.splitlines()
    assert lines[0].split()[0] == 'kappa'
    assert 'DNC' not in lines[2]
    assert lines[3].count('DNC') == 2


def test_generic_table_round_trip():
    recs = [dict(param=0.5, a=0.25, b='x'), dict(param='h', a=1e-9, b='y')]
    text = table_to_csv(recs, ('param', 'a', 'b'))
    assert table_from_csv(text) == recs
    assert format_generic_table(recs, ('param', 'a', 'b')).count('\n') == 4
