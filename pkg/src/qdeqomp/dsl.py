"""Circuit-generator programs: the genome that evolution manipulates.

A program is a list of statements over one formal parameter ``n``. Gate
statements carry integer index expressions for their qubits and angle
expressions of the form ``sign * pi / (2**a + b + c)``; ``for`` statements
bind loop variable ``i<depth>`` and iterate it over ``range(expr)``.

All node types are frozen dataclasses, so programs are hashable values that
can be shared between individuals and used as cache keys.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .qasm import GATES, Circuit, Instruction

DEFAULT_MAX_LENGTH = 10
# largest exponent for which 2**a is still a finite double
MAX_EXPONENT = 1023


# ---------------------------------------------------------------------------
# errors


class InstantiationError(Exception):
    """A program cannot be executed at a particular ``n``."""


class DuplicateQubitOperands(InstantiationError):
    pass


class ZeroDenominator(InstantiationError):
    pass


class ResourceExceeded(InstantiationError):
    pass


class UnboundLoopVar(Exception):
    pass


class InvalidProgram(ValueError):
    pass


class DslSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}")


# ---------------------------------------------------------------------------
# index expressions


@dataclass(frozen=True, slots=True)
class SizeVar:
    pass


@dataclass(frozen=True, slots=True)
class LoopVar:
    k: int


@dataclass(frozen=True, slots=True)
class IntConst:
    value: int


@dataclass(frozen=True, slots=True)
class Add:
    left: "IndexExpr"
    right: "IndexExpr"


@dataclass(frozen=True, slots=True)
class Sub:
    left: "IndexExpr"
    right: "IndexExpr"


@dataclass(frozen=True, slots=True)
class Abs:
    inner: "IndexExpr"


IndexExpr = Union[SizeVar, LoopVar, IntConst, Add, Sub, Abs]

N = SizeVar()


@dataclass(frozen=True, slots=True)
class AngleExpr:
    """``sign * pi / (2**a + b + c)``."""

    sign: int
    a: IndexExpr
    b: IndexExpr
    c: int = 0

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


# ---------------------------------------------------------------------------
# statements and programs


@dataclass(frozen=True, slots=True)
class GateStmt:
    gate: str
    qubits: tuple[IndexExpr, ...]
    angles: tuple[AngleExpr, ...] = ()

    def __post_init__(self):
        kind = GATES.get(self.gate)
        if kind is None:
            raise InvalidProgram(f"unknown gate {self.gate!r}")
        if len(self.qubits) != kind.arity or len(self.angles) != kind.param_count:
            raise InvalidProgram(
                f"{self.gate} needs {kind.arity} qubit and {kind.param_count} angle expressions"
            )


@dataclass(frozen=True, slots=True)
class ForStmt:
    depth: int
    range_expr: IndexExpr
    body: tuple["Statement", ...]


Statement = Union[GateStmt, ForStmt]


@dataclass(frozen=True, slots=True)
class GenProgram:
    body: tuple[Statement, ...] = ()

    def __len__(self):
        return len(self.body)


def gate(name: str, *qubits: IndexExpr, angles: Sequence[AngleExpr] = ()) -> GateStmt:
    return GateStmt(name, tuple(qubits), tuple(angles))


def loop(depth: int, range_expr: IndexExpr, *body: Statement) -> ForStmt:
    return ForStmt(depth, range_expr, tuple(body))


def program(*body: Statement) -> GenProgram:
    return GenProgram(tuple(body))


# ---------------------------------------------------------------------------
# evaluation


def eval_index(e: IndexExpr, n: int, loop_env: Mapping[int, int] | Sequence[int]) -> int:
    t = type(e)
    if t is LoopVar:
        try:
            return loop_env[e.k]
        except (IndexError, KeyError):
            raise UnboundLoopVar(f"i{e.k} is not bound here") from None
    if t is SizeVar:
        return n
    if t is IntConst:
        return e.value
    if t is Add:
        return eval_index(e.left, n, loop_env) + eval_index(e.right, n, loop_env)
    if t is Sub:
        return eval_index(e.left, n, loop_env) - eval_index(e.right, n, loop_env)
    if t is Abs:
        return abs(eval_index(e.inner, n, loop_env))
    raise TypeError(f"not an index expression: {e!r}")


def eval_angle(e: AngleExpr, n: int, loop_env: Mapping[int, int] | Sequence[int]) -> float:
    a = eval_index(e.a, n, loop_env)
    # b + c is summed as integers first so that moving constants between
    # them (as simplify does) cannot change the floating-point result
    offset = eval_index(e.b, n, loop_env) + e.c
    if a > MAX_EXPONENT:
        raise ZeroDenominator(f"2**{a} overflows")
    if a >= 0:
        den = (1 << a) + offset
        if den == 0:
            raise ZeroDenominator("denominator is zero")
    else:
        den = 2.0**a + offset
        if den == 0.0:
            raise ZeroDenominator("denominator is zero")
    value = e.sign * math.pi / den
    if not math.isfinite(value):
        raise ZeroDenominator("denominator underflows to zero")
    return value


def default_instruction_cap(n: int, max_length: int = DEFAULT_MAX_LENGTH) -> int:
    return 10 * n * max_length


def instantiate(p: GenProgram, n: int, max_instructions: int | None = None) -> Circuit:
    """Execute ``p`` at size ``n`` and return the emitted circuit.

    Qubit indices are reduced mod n. Raises an `InstantiationError` subclass
    when the program is invalid at this size.
    """
    if n < 1:
        raise ValueError("n must be positive")
    cap = default_instruction_cap(n) if max_instructions is None else max_instructions
    # loops whose bodies emit nothing can still spin; bound total iterations too
    steps_left = [100 * cap + 1000]
    out: list[Instruction] = []
    env: list[int] = []
    new_instruction = Instruction.unchecked

    def run(body: tuple[Statement, ...]):
        for st in body:
            if type(st) is GateStmt:
                qs = tuple(eval_index(q, n, env) % n for q in st.qubits)
                if len(qs) > 1 and len(set(qs)) != len(qs):
                    raise DuplicateQubitOperands(f"{st.gate} on {qs} at n={n}")
                params = tuple(eval_angle(a, n, env) for a in st.angles)
                if len(out) >= cap:
                    raise ResourceExceeded(f"more than {cap} instructions at n={n}")
                out.append(new_instruction(st.gate, qs, params))
            else:
                if not _has_gates(st.body):
                    continue
                count = eval_index(st.range_expr, n, env)
                if count <= 0:
                    continue
                env.append(0)
                for i in range(count):
                    steps_left[0] -= 1
                    if steps_left[0] < 0:
                        raise ResourceExceeded(f"loop iteration budget exhausted at n={n}")
                    env[-1] = i
                    run(st.body)
                env.pop()

    run(p.body)
    return Circuit(n, tuple(out))


def instantiation_outcome(p: GenProgram, n: int, max_instructions: int | None = None):
    """The circuit ``p`` emits at ``n``, or the name of the error it raises."""
    try:
        return instantiate(p, n, max_instructions)
    except InstantiationError as e:
        return type(e).__name__


def semantic_mismatches(
    p: GenProgram, q: GenProgram, sizes: Iterable[int] = range(1, 17), max_instructions: int | None = None
) -> list[int]:
    """Sizes at which ``p`` and ``q`` emit different circuits (or fail differently)."""
    return [
        n
        for n in sizes
        if instantiation_outcome(p, n, max_instructions) != instantiation_outcome(q, n, max_instructions)
    ]


def _has_gates(body: tuple[Statement, ...]) -> bool:
    return any(type(s) is GateStmt or _has_gates(s.body) for s in body)


# ---------------------------------------------------------------------------
# structure


def iter_statements(body: tuple[Statement, ...]) -> Iterator[Statement]:
    for st in body:
        yield st
        if type(st) is ForStmt:
            yield from iter_statements(st.body)


def gate_count(p: GenProgram | tuple[Statement, ...] | Statement) -> int:
    if isinstance(p, GenProgram):
        body = p.body
    elif isinstance(p, tuple):
        body = p
    else:
        body = (p,)
    return sum(1 for st in iter_statements(body) if type(st) is GateStmt)


def loop_depth(p: GenProgram | tuple[Statement, ...] | Statement) -> int:
    """Maximum nesting of for statements (0 for a flat program)."""
    if isinstance(p, GenProgram):
        body = p.body
    elif isinstance(p, tuple):
        body = p
    else:
        body = (p,)
    return max((1 + loop_depth(st.body) for st in body if type(st) is ForStmt), default=0)


def expr_nodes(e: IndexExpr) -> int:
    t = type(e)
    if t is Add or t is Sub:
        return 1 + expr_nodes(e.left) + expr_nodes(e.right)
    if t is Abs:
        return 1 + expr_nodes(e.inner)
    return 1


def angle_nodes(e: AngleExpr) -> int:
    return 1 + expr_nodes(e.a) + expr_nodes(e.b) + 1


def statement_nodes(st: Statement) -> int:
    if type(st) is GateStmt:
        return 1 + sum(map(expr_nodes, st.qubits)) + sum(map(angle_nodes, st.angles))
    return 1 + expr_nodes(st.range_expr) + sum(map(statement_nodes, st.body))


def node_count(p: GenProgram) -> int:
    return sum(map(statement_nodes, p.body))


def _loop_vars(e: IndexExpr) -> Iterator[int]:
    t = type(e)
    if t is LoopVar:
        yield e.k
    elif t is Add or t is Sub:
        yield from _loop_vars(e.left)
        yield from _loop_vars(e.right)
    elif t is Abs:
        yield from _loop_vars(e.inner)


def check_program(
    p: GenProgram, max_length: int | None = None, max_loop_depth: int | None = None
) -> None:
    """Raise `InvalidProgram` unless ``p`` satisfies the genome invariants."""

    def check_expr(e, depth, where):
        for k in _loop_vars(e):
            if not 0 <= k < depth:
                raise InvalidProgram(f"i{k} unbound in {where} at depth {depth}")

    def walk(body, depth):
        for st in body:
            if type(st) is GateStmt:
                for q in st.qubits:
                    check_expr(q, depth, st.gate)
                for a in st.angles:
                    check_expr(a.a, depth, st.gate)
                    check_expr(a.b, depth, st.gate)
            elif type(st) is ForStmt:
                if st.depth != depth:
                    raise InvalidProgram(f"loop at depth {depth} binds i{st.depth}")
                check_expr(st.range_expr, depth, "loop range")
                walk(st.body, depth + 1)
            else:
                raise InvalidProgram(f"not a statement: {st!r}")

    walk(p.body, 0)
    if max_length is not None and gate_count(p) > max_length:
        raise InvalidProgram(f"{gate_count(p)} gate statements exceed max_length {max_length}")
    if max_loop_depth is not None and loop_depth(p) > max_loop_depth:
        raise InvalidProgram(f"nesting {loop_depth(p)} exceeds max_loop_depth {max_loop_depth}")


def is_valid(p: GenProgram, max_length: int | None = None, max_loop_depth: int | None = None) -> bool:
    try:
        check_program(p, max_length, max_loop_depth)
    except InvalidProgram:
        return False
    return True


# ---------------------------------------------------------------------------
# simplification
#
# Index expressions are linear in n and the loop variables, with abs() terms
# treated as opaque atoms. Simplifying means collecting coefficients and
# rebuilding a canonical +/- chain: positive atoms in order n, i0, i1, ...,
# abs atoms; then negative atoms; then the constant.


def _linear(e: IndexExpr, coeffs: dict, sign: int) -> int:
    """Accumulate ``sign * e`` into ``coeffs``; return the constant part."""
    t = type(e)
    if t is IntConst:
        return sign * e.value
    if t is SizeVar or t is LoopVar:
        coeffs[e] = coeffs.get(e, 0) + sign
        return 0
    if t is Add:
        return _linear(e.left, coeffs, sign) + _linear(e.right, coeffs, sign)
    if t is Sub:
        return _linear(e.left, coeffs, sign) + _linear(e.right, coeffs, -sign)
    if t is Abs:
        inner = _simplify_abs(e)
        if type(inner) is not Abs:
            return _linear(inner, coeffs, sign)
        coeffs[inner] = coeffs.get(inner, 0) + sign
        return 0
    raise TypeError(f"not an index expression: {e!r}")


def _atom_order(atom) -> tuple:
    t = type(atom)
    if t is SizeVar:
        return (0, 0)
    if t is LoopVar:
        return (1, atom.k)
    return (2, 0)


def _rebuild(coeffs: dict, const: int) -> IndexExpr:
    # sorted() is stable, so abs atoms keep their order of first appearance
    atoms = sorted((a for a, c in coeffs.items() if c), key=_atom_order)
    pos = [a for a in atoms for _ in range(coeffs[a]) if coeffs[a] > 0]
    neg = [a for a in atoms for _ in range(-coeffs[a]) if coeffs[a] < 0]
    if pos:
        expr = pos[0]
        for a in pos[1:]:
            expr = Add(expr, a)
        for a in neg:
            expr = Sub(expr, a)
        if const > 0:
            expr = Add(expr, IntConst(const))
        elif const < 0:
            expr = Sub(expr, IntConst(-const))
        return expr
    expr = IntConst(const)
    for a in neg:
        expr = Sub(expr, a)
    return expr


def _simplify_abs(e: Abs) -> IndexExpr:
    inner = e.inner
    while type(inner) is Abs:
        inner = inner.inner
    coeffs: dict = {}
    const = _linear(inner, coeffs, 1)
    simple = _rebuild(coeffs, const)
    if type(simple) is IntConst:
        return IntConst(abs(simple.value))
    # n >= 1, loop variables and abs terms are all non-negative, so a form
    # whose terms share one sign needs no abs
    signs = {c > 0 for c in coeffs.values() if c} | ({const > 0} if const else set())
    if signs == {True}:
        return simple
    flipped = _rebuild({a: -c for a, c in coeffs.items()}, -const)
    if signs == {False}:
        return flipped
    if expr_nodes(flipped) < expr_nodes(simple):
        simple = flipped
    if type(simple) is Abs:
        return simple
    return Abs(simple)


def simplify_index(e: IndexExpr) -> IndexExpr:
    coeffs: dict = {}
    const = _linear(e, coeffs, 1)
    simple = _rebuild(coeffs, const)
    # never trade a shorter expression for a canonical but longer one
    return simple if expr_nodes(simple) <= expr_nodes(e) else e


def simplify_angle(e: AngleExpr) -> AngleExpr:
    coeffs: dict = {}
    b_const = _linear(e.b, coeffs, 1)
    b = _rebuild(coeffs, 0)
    return AngleExpr(e.sign, simplify_index(e.a), b, e.c + b_const)


def _simplify_stmt(st: Statement) -> Statement:
    if type(st) is GateStmt:
        return GateStmt(
            st.gate,
            tuple(simplify_index(q) for q in st.qubits),
            tuple(simplify_angle(a) for a in st.angles),
        )
    return ForStmt(st.depth, simplify_index(st.range_expr), tuple(_simplify_stmt(s) for s in st.body))


def simplify(p: GenProgram) -> GenProgram:
    return GenProgram(tuple(_simplify_stmt(st) for st in p.body))


# ---------------------------------------------------------------------------
# DSL text
#
#   for i0 in range(n - 1):
#     g cx [i0, i0 + 1]
#   g rx [0] (-pi/(2**(i0) + (0) + 0))


def render_index(e: IndexExpr) -> str:
    t = type(e)
    if t is SizeVar:
        return "n"
    if t is LoopVar:
        return f"i{e.k}"
    if t is IntConst:
        return str(e.value)
    if t is Abs:
        return f"abs({render_index(e.inner)})"
    op = " + " if t is Add else " - "
    right = render_index(e.right)
    if type(e.right) in (Add, Sub):
        right = f"({right})"
    return render_index(e.left) + op + right


def render_angle(e: AngleExpr) -> str:
    sign = "-" if e.sign < 0 else ""
    return f"{sign}pi/(2**({render_index(e.a)}) + ({render_index(e.b)}) + {e.c})"


def _dsl_lines(body, indent: int, out: list[str]):
    pad = "  " * indent
    for st in body:
        if type(st) is GateStmt:
            qs = ", ".join(render_index(q) for q in st.qubits)
            line = f"{pad}g {st.gate} [{qs}]"
            if st.angles:
                line += " (" + ", ".join(render_angle(a) for a in st.angles) + ")"
            out.append(line)
        else:
            out.append(f"{pad}for i{st.depth} in range({render_index(st.range_expr)}):")
            _dsl_lines(st.body, indent + 1, out)


def render_dsl(p: GenProgram) -> str:
    out: list[str] = []
    _dsl_lines(p.body, 0, out)
    return "".join(line + "\n" for line in out)


def _py_index(e: IndexExpr) -> str:
    return render_index(e)


def _py_angle(e: AngleExpr) -> str:
    core = f"pi * (1 / (2 ** ({_py_index(e.a)}) + ({_py_index(e.b)}) + {e.c}))"
    return f"-({core})" if e.sign < 0 else core


def render_pythonic(p: GenProgram, name: str = "circuit") -> str:
    """Qiskit-flavoured source for human review. Not meant to be executed."""
    out = [
        "from math import pi",
        "from qiskit import QuantumCircuit",
        "",
        "",
        f"def {name}(n):",
        "    qc = QuantumCircuit(n)",
    ]

    def emit(body, indent):
        pad = "    " * indent
        for st in body:
            if type(st) is GateStmt:
                args = [_py_angle(a) for a in st.angles]
                args += [f"({_py_index(q)}) % n" for q in st.qubits]
                out.append(f"{pad}qc.{st.gate}({', '.join(args)})")
            else:
                out.append(f"{pad}for i{st.depth} in range({_py_index(st.range_expr)}):")
                emit(st.body, indent + 1)

    emit(p.body, 1)
    out.append("    return qc")
    return "\n".join(out) + "\n"


_DSL_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\*\*|[-+()\[\],/:]))")


class _LineParser:
    def __init__(self, text: str, line: int, col0: int):
        self.text = text
        self.line = line
        self.col0 = col0
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _DSL_TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise DslSyntaxError(f"unexpected character {text[pos:].strip()[0]!r}", line, col0 + pos + 1)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), col0 + m.start(kind) + 1))
            pos = m.end()
        self.i = 0

    def error(self, message):
        col = self.toks[self.i][2] if self.i < len(self.toks) else self.col0 + len(self.text) + 1
        return DslSyntaxError(message, self.line, col)

    def peek(self) -> str | None:
        return self.toks[self.i][1] if self.i < len(self.toks) else None

    def take(self) -> tuple[str, str, int]:
        if self.i >= len(self.toks):
            raise self.error("unexpected end of line")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        if self.peek() != value:
            raise self.error(f"expected {value!r}, got {self.peek()!r}")
        self.i += 1

    def done(self):
        if self.i != len(self.toks):
            raise self.error(f"unexpected {self.peek()!r}")

    def expr(self) -> IndexExpr:
        e = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()[1]
            r = self.term()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def term(self) -> IndexExpr:
        kind, val, _ = self.take()
        if kind == "int":
            return IntConst(int(val))
        if val == "-":
            kind, val, _ = self.take()
            if kind != "int":
                self.i -= 1
                raise self.error("unary minus only applies to integer literals")
            return IntConst(-int(val))
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if val == "n":
            return N
        if val == "abs":
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Abs(e)
        if kind == "id" and re.fullmatch(r"i\d+", val):
            return LoopVar(int(val[1:]))
        self.i -= 1
        raise self.error(f"unexpected {val!r} in expression")

    def signed_int(self) -> int:
        neg = False
        if self.peek() == "-":
            self.take()
            neg = True
        kind, val, _ = self.take()
        if kind != "int":
            self.i -= 1
            raise self.error("expected an integer")
        return -int(val) if neg else int(val)

    def angle(self) -> AngleExpr:
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        self.expect("pi")
        self.expect("/")
        self.expect("(")
        self.expect("2")
        self.expect("**")
        self.expect("(")
        a = self.expr()
        self.expect(")")
        self.expect("+")
        self.expect("(")
        b = self.expr()
        self.expect(")")
        self.expect("+")
        c = self.signed_int()
        self.expect(")")
        return AngleExpr(sign, a, b, c)


def parse_dsl(text: str) -> GenProgram:
    """Parse the canonical DSL text produced by `render_dsl`."""
    # stack of (indent, statements, pending for-header)
    root: list = []
    stack: list[tuple[int, list, tuple | None]] = [(0, root, None)]
    expect_deeper = False

    def close_until(indent, lineno):
        while stack[-1][0] > indent:
            ind, stmts, header = stack.pop()
            if not stmts:
                raise DslSyntaxError("empty loop body", lineno)
            depth, rng = header
            stack[-1][1].append(ForStmt(depth, rng, tuple(stmts)))
        if stack[-1][0] != indent:
            raise DslSyntaxError("inconsistent indentation", lineno, 1)

    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        if "\t" in raw[: len(raw) - len(raw.lstrip())]:
            raise DslSyntaxError("tabs are not allowed for indentation", lineno, 1)
        indent = len(stripped) - len(stripped.lstrip(" "))
        body = stripped.lstrip(" ")
        if expect_deeper:
            if indent <= stack[-1][0]:
                raise DslSyntaxError("expected an indented loop body", lineno, 1)
            ind, stmts, header = stack.pop()
            stack.append((indent, stmts, header))
            expect_deeper = False
        else:
            close_until(indent, lineno)
        depth = len(stack) - 1
        lp = _LineParser(body, lineno, indent)
        head = lp.take()
        if head[1] == "for":
            kind, var, col = lp.take()
            if var != f"i{depth}":
                raise DslSyntaxError(f"loop at depth {depth} must bind i{depth}, not {var}", lineno, col)
            lp.expect("in")
            lp.expect("range")
            lp.expect("(")
            rng = lp.expr()
            lp.expect(")")
            lp.expect(":")
            lp.done()
            stack.append((indent + 1, [], (depth, rng)))
            expect_deeper = True
        elif head[1] == "g":
            kind, name, col = lp.take()
            if name not in GATES:
                raise DslSyntaxError(f"unknown gate {name!r}", lineno, col)
            lp.expect("[")
            qubits = [lp.expr()]
            while lp.peek() == ",":
                lp.take()
                qubits.append(lp.expr())
            lp.expect("]")
            angles = []
            if lp.peek() == "(":
                lp.take()
                if lp.peek() != ")":
                    angles.append(lp.angle())
                    while lp.peek() == ",":
                        lp.take()
                        angles.append(lp.angle())
                lp.expect(")")
            lp.done()
            try:
                st = GateStmt(name, tuple(qubits), tuple(angles))
            except InvalidProgram as e:
                raise DslSyntaxError(str(e), lineno, col) from None
            stack[-1][1].append(st)
        else:
            raise DslSyntaxError(f"expected 'for' or 'g', got {head[1]!r}", lineno, indent + 1)
    if expect_deeper:
        raise DslSyntaxError("loop without a body", lineno + 1)
    close_until(0, lineno + 1)
    p = GenProgram(tuple(root))
    try:
        check_program(p)
    except InvalidProgram as e:
        raise DslSyntaxError(str(e), 0) from None
    return p
