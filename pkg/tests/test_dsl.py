import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdeqomp import dsl, synth
from qdeqomp.dsl import (
    N,
    Abs,
    Add,
    AngleExpr,
    DslSyntaxError,
    DuplicateQubitOperands,
    IntConst,
    InvalidProgram,
    LoopVar,
    ResourceExceeded,
    Sub,
    UnboundLoopVar,
    ZeroDenominator,
    eval_angle,
    eval_index,
    gate,
    instantiate,
    loop,
    node_count,
    parse_dsl,
    program,
    render_dsl,
    render_pythonic,
    simplify,
    simplify_index,
)
from qdeqomp.qasm import Instruction

i0, i1 = LoopVar(0), LoopVar(1)
C = IntConst
RX_C = program(loop(0, N, gate("rx", i0, angles=[AngleExpr(1, i0, C(0), 0)])))
WIDE = synth.GenGrammarParams(allowed_gates=("h", "x", "cx", "rx", "cp", "ccx"), max_length=10, max_loop_depth=3)


def chain(first, *rest):
    """Left-nested chain; rest items are ('+'|'-', expr)."""
    e = first
    for op, x in rest:
        e = Add(e, x) if op == "+" else Sub(e, x)
    return e


@pytest.mark.parametrize(
    "expr, n, env, value",
    [
        (chain(N, ("-", N), ("-", N)), 5, [], -5),
        (chain(i0, ("-", N), ("+", C(3)), ("+", C(2))), 4, [1], 2),
        (Abs(Sub(i0, N)), 3, [0], 3),
        (Add(i1, C(-2)), 7, [0, 4], 2),
    ],
)
def test_eval_index(expr, n, env, value):
    assert eval_index(expr, n, env) == value


def test_eval_index_unbound():
    with pytest.raises(UnboundLoopVar):
        eval_index(i1, 3, [0])


@pytest.mark.parametrize(
    "angle, env, value",
    [
        (AngleExpr(1, C(0), C(0), 0), [], math.pi),
        (AngleExpr(1, i0, C(0), 0), [2], math.pi / 4),
        (AngleExpr(-1, C(1), C(1), -1), [], -math.pi / 2),
        (AngleExpr(1, Sub(C(0), C(2)), C(0), 0), [], 4 * math.pi),
    ],
)
def test_eval_angle(angle, env, value):
    assert eval_angle(angle, 3, env) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize(
    "angle",
    [AngleExpr(1, C(0), C(-3), 2), AngleExpr(1, C(2000), C(0), 0), AngleExpr(1, C(1), Sub(C(0), N), 1)],
)
def test_zero_denominator(angle):
    with pytest.raises(ZeroDenominator):
        eval_angle(angle, 3, [])


def test_instantiate_rx_c():
    c = instantiate(RX_C, 3)
    assert c.n_qubits == 3
    assert c.instructions == (
        Instruction("rx", (0,), (math.pi,)),
        Instruction("rx", (1,), (math.pi / 2,)),
        Instruction("rx", (2,), (math.pi / 4,)),
    )


def test_instantiate_mod_n():
    c = instantiate(program(gate("h", Sub(N, C(0)))), 4)
    assert c.instructions == (Instruction("h", (0,)),)
    c = instantiate(program(gate("h", Sub(C(0), C(5)))), 3)
    assert c.instructions == (Instruction("h", (1,)),)


def test_instantiate_duplicate_operands():
    with pytest.raises(DuplicateQubitOperands):
        instantiate(program(gate("cx", C(1), Add(N, C(1)))), 3)


def test_negative_range_is_empty():
    p = program(loop(0, Sub(C(0), N), gate("h", i0)))
    assert len(instantiate(p, 4)) == 0


def test_resource_cap():
    p = program(loop(0, N, loop(1, N, gate("h", i1))))
    assert len(instantiate(p, 10)) == 100
    with pytest.raises(ResourceExceeded):
        instantiate(p, 10, max_instructions=99)


def test_gate_free_loops_are_skipped():
    p = program(loop(0, C(10**9), loop(1, N)), gate("h", C(0)))
    assert len(instantiate(p, 3)) == 1


@pytest.mark.parametrize(
    "p, count",
    [
        (program(gate("h", N)), 2),
        (program(), 0),
        (program(loop(0, N, gate("h", i0))), 4),
        (RX_C, 1 + 1 + 1 + 1 + (1 + 1 + 1 + 1)),
    ],
)
def test_node_count(p, count):
    assert node_count(p) == count


@pytest.mark.parametrize(
    "expr, expected",
    [
        (chain(N, ("-", N), ("-", N)), Sub(C(0), N)),
        (chain(i0, ("+", C(0)), ("+", C(0)), ("-", N), ("+", C(0))), Sub(i0, N)),
        (Abs(Sub(C(2), C(7))), C(5)),
        (chain(C(1), ("+", N), ("-", C(1))), N),
        (Abs(Abs(Sub(i0, N))), Abs(Sub(i0, N))),
        (Abs(Sub(C(0), N)), N),
    ],
)
def test_simplify_index(expr, expected):
    assert simplify_index(expr) == expected
    for n in range(1, 33):
        for v in range(4):
            assert eval_index(expected, n, [v]) == eval_index(expr, n, [v])


def test_simplify_folds_angle_constants():
    p = program(loop(0, N, gate("rx", i0, angles=[AngleExpr(1, Add(i0, C(0)), Sub(C(3), C(1)), -2)])))
    q = simplify(p)
    assert q == RX_C
    assert node_count(q) < node_count(p)


def test_simplify_idempotent_on_reference():
    assert simplify(RX_C) == RX_C


def test_check_program():
    dsl.check_program(RX_C, max_length=1, max_loop_depth=1)
    with pytest.raises(InvalidProgram):
        dsl.check_program(program(gate("h", i0)))
    with pytest.raises(InvalidProgram):
        dsl.check_program(program(loop(1, N, gate("h", C(0)))))
    with pytest.raises(InvalidProgram):
        dsl.check_program(RX_C, max_loop_depth=0)
    with pytest.raises(InvalidProgram):
        dsl.check_program(program(gate("h", N), gate("x", N)), max_length=1)
    with pytest.raises(InvalidProgram):
        gate("cx", N)


def test_render_dsl_text():
    text = render_dsl(program(gate("h", C(0)), loop(0, Sub(N, C(1)), gate("cx", i0, Add(i0, C(1))))))
    assert text == "g h [0]\nfor i0 in range(n - 1):\n  g cx [i0, i0 + 1]\n"


def test_render_parenthesizes_right_operands():
    e = Sub(N, Sub(i0, C(1)))
    p = program(loop(0, N, gate("h", e)))
    assert "n - (i0 - 1)" in render_dsl(p)
    assert parse_dsl(render_dsl(p)) == p


def test_render_pythonic():
    text = render_pythonic(RX_C, "rx_c")
    assert "def rx_c(n):" in text
    assert "for i0 in range(n):" in text
    assert "qc.rx(" in text
    empty = render_pythonic(program())
    assert "return qc" in empty and "qc." not in empty.replace("qc = ", "").replace("return qc", "")


def test_parse_comments_and_negatives():
    p = parse_dsl("# header\ng h [-1]  # trailing\ng rx [0] (-pi/(2**(-2) + (0) + -3))\n")
    assert p == program(gate("h", C(-1)), gate("rx", C(0), angles=[AngleExpr(-1, C(-2), C(0), -3)]))


@pytest.mark.parametrize(
    "text",
    [
        "g h [n -]\n",
        "g foo [0]\n",
        "for i0 in range(n):\n",
        "for i1 in range(n):\n  g h [0]\n",
        "g h [i0]\n",
        "  g h [0]\n",
        "g rx [0]\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises((DslSyntaxError, InvalidProgram)):
        parse_dsl(text)


def test_parse_error_location():
    with pytest.raises(DslSyntaxError) as info:
        parse_dsl("g h [0]\ng h [n -]\n")
    assert info.value.line == 2


programs = st.builds(lambda seed: synth.random_program(WIDE, random.Random(seed)), st.integers(0, 2**32))


@settings(max_examples=1000, deadline=None)
@given(programs)
def test_render_parse_round_trip(p):
    assert parse_dsl(render_dsl(p)) == p


@settings(max_examples=1000, deadline=None)
@given(programs)
def test_simplify_sound_and_shrinking(p):
    q = simplify(p)
    assert node_count(q) <= node_count(p)
    assert simplify(q) == q
    assert dsl.semantic_mismatches(p, q, range(1, 17)) == []
    dsl.check_program(q, max_length=WIDE.max_length, max_loop_depth=WIDE.max_loop_depth)


@settings(max_examples=300, deadline=None)
@given(programs, st.integers(1, 12))
def test_qubits_in_range(p, n):
    out = dsl.instantiation_outcome(p, n)
    if not isinstance(out, str):
        assert out.n_qubits == n
        assert all(0 <= q < n for ins in out.instructions for q in ins.qubits)
        assert dsl.instantiation_outcome(p, n) == out
