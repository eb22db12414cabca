"""Random program generation: seeding, re-seeding and mutation material."""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import dsl
from .dsl import (
    N,
    Abs,
    Add,
    AngleExpr,
    ForStmt,
    GateStmt,
    GenProgram,
    IndexExpr,
    IntConst,
    LoopVar,
    Statement,
    Sub,
)
from .qasm import GATES

LOOP_PROBABILITY = 0.3
MAX_CONST = 3
RETRY_LIMIT = 100


@dataclass(frozen=True)
class GenGrammarParams:
    allowed_gates: tuple[str, ...] = ("h", "x", "cx")
    max_length: int = 10
    max_loop_depth: int = 2
    max_expr_operators: int = 2
    var_depth: int = 2
    loop_probability: float = LOOP_PROBABILITY

    def __post_init__(self):
        object.__setattr__(self, "allowed_gates", tuple(self.allowed_gates))
        if not self.allowed_gates:
            raise ValueError("allowed_gates must not be empty")
        unknown = [g for g in self.allowed_gates if g not in GATES]
        if unknown:
            raise ValueError(f"unknown gates {unknown}")
        if self.max_expr_operators < 0 or self.var_depth < 0 or self.max_loop_depth < 0:
            raise ValueError("grammar limits must be non-negative")
        if self.max_length < 1:
            raise ValueError("max_length must be at least 1")


def make_rng(seed: int | None) -> random.Random:
    return random.Random(seed)


def _leaf(depth: int, rng: random.Random) -> IndexExpr:
    # pool: n, the bound loop variables, and one slot for a small constant
    k = rng.randrange(depth + 2)
    if k == 0:
        return N
    if k == depth + 1:
        return IntConst(rng.randint(0, MAX_CONST))
    return LoopVar(k - 1)


def random_expr(depth: int, max_expr_operators: int, var_depth: int, rng: random.Random) -> IndexExpr:
    """A left-nested +/- chain of 1 + k leaves, k uniform in [0, var_depth].

    The operator count is k, so ``var_depth`` is the binding limit and
    ``max_expr_operators`` does not cut it further: ``random_expr(0, 1, 2)``
    must still be able to produce ``n - n - n``.
    """
    extra = rng.randint(0, var_depth)
    expr = _leaf(depth, rng)
    for _ in range(extra):
        leaf = _leaf(depth, rng)
        expr = Add(expr, leaf) if rng.random() < 0.5 else Sub(expr, leaf)
    return expr


def _provably_zero(e: AngleExpr) -> bool:
    a = dsl.simplify_index(e.a)
    b = dsl.simplify_index(e.b)
    if type(a) is not IntConst or type(b) is not IntConst:
        return False
    try:
        dsl.eval_angle(AngleExpr(e.sign, a, b, e.c), 1, ())
    except dsl.ZeroDenominator:
        return True
    return False


def random_phase_expr(
    depth: int, rng: random.Random, max_expr_operators: int = 2, var_depth: int = 2
) -> AngleExpr:
    """``±pi / (2**a + b + c)`` with c a rounded standard normal draw.

    Both a and b may use the loop variables bound at ``depth``; at depth 0 the
    offset b is the constant 0.
    """
    sign = 1 if rng.random() < 0.5 else -1
    a = random_expr(depth, max_expr_operators, var_depth, rng)
    b = random_expr(depth, max_expr_operators, var_depth, rng) if depth > 0 else IntConst(0)
    c = int(round(rng.gauss(0.0, 1.0)))
    return AngleExpr(sign, a, b, c)


class Exhausted(Exception):
    """Angle resampling hit the retry limit."""


def _valid_phase_expr(depth, rng, max_expr_operators, var_depth) -> AngleExpr:
    for _ in range(RETRY_LIMIT):
        e = random_phase_expr(depth, rng, max_expr_operators, var_depth)
        if not _provably_zero(e):
            return e
    raise Exhausted


def generate_gate_call(
    depth: int, gate: str, rng: random.Random, max_expr_operators: int = 2, var_depth: int = 2
) -> GateStmt:
    kind = GATES[gate]
    qubits = tuple(random_expr(depth, max_expr_operators, var_depth, rng) for _ in range(kind.arity))
    angles = tuple(
        _valid_phase_expr(depth, rng, max_expr_operators, var_depth) for _ in range(kind.param_count)
    )
    return GateStmt(gate, qubits, angles)


def random_statement(
    params: GenGrammarParams, depth: int, rng: random.Random, min_gates: int = 1, max_gates: int = 1
) -> Statement:
    """A fresh statement at loop ``depth`` holding between min_gates and max_gates gates.

    Loops are only produced when ``depth < max_loop_depth``; a request for more
    than one gate therefore needs loop room.
    """
    if max_gates < min_gates or max_gates < 1:
        raise ValueError("empty gate budget")
    can_loop = depth < params.max_loop_depth
    if min_gates > 1 and not can_loop:
        raise ValueError("need loop room to place several gates in one statement")
    if min_gates <= 1 and (not can_loop or rng.random() >= params.loop_probability):
        return _random_gate(params, depth, rng)
    return _random_loop(params, depth, rng, rng.randint(max(min_gates, 1), max_gates))


def _random_gate(params: GenGrammarParams, depth: int, rng: random.Random) -> GateStmt:
    g = rng.choice(params.allowed_gates)
    return generate_gate_call(depth, g, rng, params.max_expr_operators, params.var_depth)


def _random_loop(params: GenGrammarParams, depth: int, rng: random.Random, gates: int) -> ForStmt:
    rng_expr = Abs(random_expr(depth, params.max_expr_operators, params.var_depth, rng))
    return ForStmt(depth, rng_expr, _random_body(params, depth + 1, rng, gates))


def _random_body(params: GenGrammarParams, depth: int, rng: random.Random, gates: int) -> tuple[Statement, ...]:
    """Statements at ``depth`` holding exactly ``gates`` gate statements."""
    body: list[Statement] = []
    left = gates
    while left > 0:
        if depth < params.max_loop_depth and rng.random() < params.loop_probability:
            st = _random_loop(params, depth, rng, rng.randint(1, left))
        else:
            st = _random_gate(params, depth, rng)
        body.append(st)
        left -= dsl.gate_count(st)
    return tuple(body)


def _fallback_program(params: GenGrammarParams) -> GenProgram:
    plain = [g for g in params.allowed_gates if GATES[g].param_count == 0]
    g = ("h" if "h" in plain else plain[0]) if plain else params.allowed_gates[0]
    kind = GATES[g]
    angles = tuple(AngleExpr(1, IntConst(1), IntConst(0), 0) for _ in range(kind.param_count))
    return GenProgram((GateStmt(g, tuple(IntConst(i) for i in range(kind.arity)), angles),))


def random_program(params: GenGrammarParams, rng: random.Random) -> GenProgram:
    """A random program with between 1 and ``max_length`` gate statements."""
    try:
        target = rng.randint(1, params.max_length)
        return GenProgram(_random_body(params, 0, rng, target))
    except Exhausted:
        return _fallback_program(params)
