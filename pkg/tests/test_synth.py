import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdeqomp import dsl, synth
from qdeqomp.dsl import N, Add, ForStmt, GateStmt, IntConst, LoopVar, Sub
from qdeqomp.synth import GenGrammarParams


def leaves(e):
    t = type(e)
    if t in (Add, Sub):
        return leaves(e.left) + leaves(e.right)
    if t is dsl.Abs:
        return leaves(e.inner)
    return [e]


def operators(e):
    t = type(e)
    if t in (Add, Sub):
        return 1 + operators(e.left) + operators(e.right)
    if t is dsl.Abs:
        return operators(e.inner)
    return 0


def reachable(make, predicate, tries=20000, seed=0):
    rng = random.Random(seed)
    return any(predicate(make(rng)) for _ in range(tries))


@pytest.mark.parametrize("depth, var_depth", [(0, 0), (0, 2), (1, 2), (2, 3), (3, 1)])
def test_random_expr_shape(depth, var_depth):
    rng = random.Random(depth * 10 + var_depth)
    for _ in range(1000):
        e = synth.random_expr(depth, 2, var_depth, rng)
        ls = leaves(e)
        assert 1 <= len(ls) <= 1 + var_depth
        assert operators(e) == len(ls) - 1
        for leaf in ls:
            assert leaf == N or (type(leaf) is LoopVar and leaf.k < depth) or (
                type(leaf) is IntConst and 0 <= leaf.value <= synth.MAX_CONST
            )


def test_random_expr_example_shapes_reachable():
    n_minus_n_minus_n = Sub(Sub(N, N), N)
    assert reachable(lambda r: synth.random_expr(0, 1, 2, r), lambda e: e == n_minus_n_minus_n)
    i0 = LoopVar(0)
    target = Add(Add(Sub(i0, N), IntConst(3)), IntConst(2))
    assert reachable(lambda r: synth.random_expr(1, 2, 3, r), lambda e: e == target, tries=200000)


def test_phase_expr_binding_at_depth_zero():
    rng = random.Random(1)
    for _ in range(1000):
        e = synth.random_phase_expr(0, rng)
        assert e.b == IntConst(0)
        assert not any(type(x) is LoopVar for x in leaves(e.a))
        assert e.sign in (1, -1)


def test_phase_expr_gaussian_offset():
    rng = random.Random(7)
    cs = [synth.random_phase_expr(1, rng).c for _ in range(10000)]
    assert abs(statistics.fmean(cs)) < 0.1
    assert sum(abs(c) <= 5 for c in cs) >= 9999
    assert all(isinstance(c, int) for c in cs)


def test_valid_phase_never_provably_zero():
    rng = random.Random(3)
    checked = 0
    for _ in range(5000):
        e = synth._valid_phase_expr(0, rng, 2, 2)
        a, b = dsl.simplify_index(e.a), dsl.simplify_index(e.b)
        if type(a) is IntConst and type(b) is IntConst:
            dsl.eval_angle(e, 1, ())
            checked += 1
    assert checked > 100


@pytest.mark.parametrize("gate, qubits, angles", [("cp", 2, 1), ("h", 1, 0), ("ccx", 3, 0), ("rx", 1, 1)])
def test_generate_gate_call_arity(gate, qubits, angles):
    st_ = synth.generate_gate_call(1, gate, random.Random(0))
    assert (st_.gate, len(st_.qubits), len(st_.angles)) == (gate, qubits, angles)


def test_gate_call_example_shape_reachable():
    i0 = LoopVar(0)
    control = Add(Sub(N, IntConst(0)), N)
    target = Sub(Add(i0, N), IntConst(0))

    def calls(r):
        return synth.generate_gate_call(1, "cx", r)

    assert reachable(calls, lambda s: s.qubits[0] == control)
    assert reachable(calls, lambda s: s.qubits[1] == target)


def test_random_program_limits():
    params = GenGrammarParams(allowed_gates=("h", "cx", "rz"), max_length=10, max_loop_depth=2)
    rng = random.Random(11)
    for _ in range(1000):
        p = synth.random_program(params, rng)
        assert dsl.loop_depth(p) <= 2
        assert 1 <= dsl.gate_count(p) <= 10
        assert {s.gate for s in dsl.iter_statements(p.body) if type(s) is GateStmt} <= {"h", "cx", "rz"}
        dsl.check_program(p, 10, 2)


def test_single_gate_set():
    params = GenGrammarParams(allowed_gates=("h",))
    rng = random.Random(2)
    for _ in range(500):
        p = synth.random_program(params, rng)
        assert all(s.gate == "h" for s in dsl.iter_statements(p.body) if type(s) is GateStmt)


def test_three_nested_loops_with_crx_reachable():
    params = GenGrammarParams(allowed_gates=("crx",), max_length=4, max_loop_depth=3)

    def nested(p):
        return dsl.loop_depth(p) == 3 and any(type(s) is ForStmt for s in p.body)

    assert reachable(lambda r: synth.random_program(params, r), nested, tries=5000)


def test_reproducible():
    params = GenGrammarParams(allowed_gates=("h", "x", "cx", "cp"))
    a = [synth.random_program(params, synth.make_rng(5)) for _ in range(3)]
    b = [synth.random_program(params, synth.make_rng(5)) for _ in range(3)]
    assert a == b


def test_fallback_respects_gate_set():
    p = synth._fallback_program(GenGrammarParams(allowed_gates=("rz",)))
    assert p.body[0].gate == "rz"
    assert len(dsl.instantiate(p, 1)) == 1


@pytest.mark.parametrize(
    "kwargs", [dict(allowed_gates=()), dict(allowed_gates=("foo",)), dict(max_length=0), dict(var_depth=-1)]
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        GenGrammarParams(**kwargs)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 12), st.integers(0, 3))
def test_random_statement_gate_budget(seed, max_gates, depth):
    params = GenGrammarParams(allowed_gates=("h", "cp"), max_length=12, max_loop_depth=3)
    rng = random.Random(seed)
    lo = rng.randint(1, max_gates) if depth < 3 else 1
    stmt = synth.random_statement(params, depth, rng, lo, max_gates)
    assert lo <= dsl.gate_count(stmt) <= max_gates
    assert dsl.loop_depth(stmt) <= 3 - depth
