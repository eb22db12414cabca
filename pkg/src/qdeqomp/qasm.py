"""OpenQASM 2.0 subset: parsing, canonical printing and corpus files.

Only flat gate sequences over a single quantum register are accepted.
Canonical output is what every similarity metric compares, so both the
target corpus and the candidate circuits always go through `print_qasm`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path


@dataclass(frozen=True)
class GateKind:
    name: str
    arity: int
    param_count: int


GATES: dict[str, GateKind] = {
    g.name: g
    for g in (
        GateKind("h", 1, 0),
        GateKind("x", 1, 0),
        GateKind("y", 1, 0),
        GateKind("z", 1, 0),
        GateKind("s", 1, 0),
        GateKind("t", 1, 0),
        GateKind("sx", 1, 0),
        GateKind("rx", 1, 1),
        GateKind("ry", 1, 1),
        GateKind("rz", 1, 1),
        GateKind("p", 1, 1),
        GateKind("cx", 2, 0),
        GateKind("cz", 2, 0),
        GateKind("cp", 2, 1),
        GateKind("crx", 2, 1),
        GateKind("cry", 2, 1),
        GateKind("crz", 2, 1),
        GateKind("swap", 2, 0),
        GateKind("ccx", 3, 0),
    )
}


class QasmError(ValueError):
    """Base class for everything `parse_qasm` can raise."""


class QasmSyntaxError(QasmError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class UnsupportedFeature(QasmSyntaxError):
    pass


class IndexOutOfRange(QasmSyntaxError):
    pass


class UnknownGate(QasmSyntaxError):
    pass


@dataclass(frozen=True)
class Instruction:
    gate: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        kind = GATES.get(self.gate)
        if kind is None:
            raise UnknownGate(f"unknown gate {self.gate!r}")
        if len(self.qubits) != kind.arity:
            raise ValueError(f"{self.gate} takes {kind.arity} qubits, got {len(self.qubits)}")
        if len(self.params) != kind.param_count:
            raise ValueError(f"{self.gate} takes {kind.param_count} params, got {len(self.params)}")
        if any(q < 0 for q in self.qubits):
            raise ValueError("negative qubit index")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit operands in {self.gate}{self.qubits}")
        if not all(math.isfinite(a) for a in self.params):
            raise ValueError("non-finite angle")

    @classmethod
    def unchecked(cls, gate: str, qubits: tuple[int, ...], params: tuple[float, ...] = ()) -> "Instruction":
        # hot path for program instantiation, which guarantees the invariants itself
        obj = object.__new__(cls)
        object.__setattr__(obj, "gate", gate)
        object.__setattr__(obj, "qubits", qubits)
        object.__setattr__(obj, "params", params)
        return obj

    @property
    def kind(self) -> GateKind:
        return GATES[self.gate]


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: tuple[Instruction, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        object.__setattr__(self, "instructions", tuple(self.instructions))
        for ins in self.instructions:
            if max(ins.qubits) >= self.n_qubits:
                raise ValueError(f"qubit index out of range in {ins}")

    def __len__(self):
        return len(self.instructions)


@dataclass
class Corpus:
    algorithm_name: str
    entries: dict[int, Circuit] = field(default_factory=dict)

    def __post_init__(self):
        for n, circ in self.entries.items():
            if circ.n_qubits != n:
                raise ValueError(f"corpus entry {n} has {circ.n_qubits} qubits")
        self.entries = dict(sorted(self.entries.items()))

    @property
    def sizes(self) -> list[int]:
        return list(self.entries)

    def restrict(self, n_max: int) -> "Corpus":
        return Corpus(self.algorithm_name, {n: c for n, c in self.entries.items() if n <= n_max})


# ---------------------------------------------------------------------------
# printing


def format_angle(x: float) -> str:
    s = f"{x:.12g}"
    if s in ("-0", "0"):
        return "0"
    return s


@lru_cache(maxsize=1 << 16)
def format_instruction(ins: Instruction) -> str:
    ops = ",".join(f"q[{q}]" for q in ins.qubits)
    if ins.params:
        return f"{ins.gate}({','.join(format_angle(a) for a in ins.params)}) {ops};"
    return f"{ins.gate} {ops};"


def header(n_qubits: int) -> str:
    return f'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[{n_qubits}];\n'


def gate_lines(c: Circuit) -> list[str]:
    return [format_instruction(ins) for ins in c.instructions]


def print_qasm(c: Circuit) -> str:
    body = "".join(line + "\n" for line in gate_lines(c))
    return header(c.n_qubits) + body


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<sym>[;,()\[\]+\-*/^{}])
    """,
    re.VERBOSE,
)

_UNSUPPORTED = {
    "creg": "classical registers",
    "measure": "measurement",
    "gate": "custom gate definitions",
    "opaque": "opaque gates",
    "if": "conditionals",
    "barrier": "barriers",
    "reset": "reset",
}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QasmSyntaxError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind not in ("ws", "comment"):
            tokens.append((kind, m.group(), line))
        pos = m.end()
    tokens.append(("eof", "", line))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, line = self.next()
        if val != value or kind == "string":
            raise QasmSyntaxError(f"expected {value!r}, got {val or 'end of input'!r}", line)
        return line

    def expect_kind(self, kind: str):
        k, val, line = self.next()
        if k != kind:
            raise QasmSyntaxError(f"expected {kind}, got {val or 'end of input'!r}", line)
        return val, line

    def expect_int(self) -> int:
        val, line = self.expect_kind("number")
        if not val.isdigit():
            raise QasmSyntaxError(f"expected an integer, got {val!r}", line)
        return int(val)

    # angle expressions: + - * / ^, unary minus, pi, decimal literals
    def expr(self) -> float:
        value = self.term()
        while self.peek[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> float:
        value = self.unary()
        while self.peek[1] in ("*", "/"):
            op, line = self.next()[1:]
            rhs = self.unary()
            if op == "*":
                value *= rhs
            elif rhs == 0:
                raise QasmSyntaxError("division by zero in angle", line)
            else:
                value /= rhs
        return value

    def unary(self) -> float:
        if self.peek[1] in ("+", "-"):
            op = self.next()[1]
            v = self.unary()
            return -v if op == "-" else v
        return self.power()

    def power(self) -> float:
        base = self.atom()
        if self.peek[1] == "^":
            line = self.next()[2]
            exp = self.unary()
            try:
                return float(base**exp)
            except (OverflowError, ZeroDivisionError) as e:
                raise QasmSyntaxError(f"bad power in angle: {e}", line) from None
        return base

    def atom(self) -> float:
        kind, val, line = self.next()
        if kind == "number":
            return float(val)
        if kind == "id" and val == "pi":
            return math.pi
        if val == "(" and kind == "sym":
            v = self.expr()
            self.expect(")")
            return v
        if kind == "id":
            raise QasmSyntaxError(f"unknown constant {val!r} in angle", line)
        raise QasmSyntaxError(f"unexpected {val or 'end of input'!r} in angle", line)

    def parse(self) -> Circuit:
        kind, val, line = self.peek
        if val != "OPENQASM":
            raise QasmSyntaxError("missing 'OPENQASM 2.0;' header", line)
        self.next()
        version, vline = self.expect_kind("number")
        if version not in ("2.0", "2"):
            raise UnsupportedFeature(f"OpenQASM version {version}", vline)
        self.expect(";")

        reg_name = None
        n_qubits = 0
        seen_include = False
        instructions: list[Instruction] = []

        while self.peek[0] != "eof":
            kind, val, line = self.next()
            if kind != "id":
                raise QasmSyntaxError(f"unexpected {val!r}", line)
            if val == "include":
                if seen_include:
                    raise UnsupportedFeature("more than one include", line)
                self.expect_kind("string")
                self.expect(";")
                seen_include = True
            elif val == "qreg":
                if reg_name is not None:
                    raise UnsupportedFeature("multiple quantum registers", line)
                reg_name, _ = self.expect_kind("id")
                self.expect("[")
                n_qubits = self.expect_int()
                self.expect("]")
                self.expect(";")
                if n_qubits < 1:
                    raise QasmSyntaxError("register must hold at least one qubit", line)
            elif val in _UNSUPPORTED:
                raise UnsupportedFeature(_UNSUPPORTED[val], line)
            elif val == "OPENQASM":
                raise QasmSyntaxError("duplicate header", line)
            else:
                instructions.append(self.gate(val, line, reg_name, n_qubits))
        if reg_name is None:
            raise QasmSyntaxError("no quantum register declared", self.peek[2])
        return Circuit(n_qubits, tuple(instructions))

    def gate(self, name: str, line: int, reg_name: str | None, n_qubits: int) -> Instruction:
        kind = GATES.get(name)
        if kind is None:
            raise UnknownGate(f"unknown gate {name!r}", line)
        if reg_name is None:
            raise QasmSyntaxError("gate applied before qreg declaration", line)
        params: list[float] = []
        if self.peek[1] == "(":
            self.next()
            if self.peek[1] != ")":
                params.append(self.expr())
                while self.peek[1] == ",":
                    self.next()
                    params.append(self.expr())
            self.expect(")")
        qubits: list[int] = []
        while True:
            reg, rline = self.expect_kind("id")
            if reg != reg_name:
                raise QasmSyntaxError(f"unknown register {reg!r}", rline)
            if self.peek[1] != "[":
                raise UnsupportedFeature("whole-register gate broadcast", rline)
            self.next()
            q = self.expect_int()
            self.expect("]")
            if q >= n_qubits:
                raise IndexOutOfRange(f"{reg}[{q}] outside register of size {n_qubits}", rline)
            qubits.append(q)
            if self.peek[1] != ",":
                break
            self.next()
        self.expect(";")
        if len(qubits) != kind.arity:
            raise QasmSyntaxError(f"{name} takes {kind.arity} qubit(s), got {len(qubits)}", line)
        if len(params) != kind.param_count:
            raise QasmSyntaxError(f"{name} takes {kind.param_count} angle(s), got {len(params)}", line)
        if len(set(qubits)) != len(qubits):
            raise QasmSyntaxError(f"duplicate qubit operands for {name}", line)
        if not all(math.isfinite(a) for a in params):
            raise QasmSyntaxError("non-finite angle", line)
        return Instruction(name, tuple(qubits), tuple(params))


def parse_qasm(text: str) -> Circuit:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# corpus files

_CORPUS_FILE = re.compile(r"^(?P<name>.+)_(?P<n>\d+)\.qasm$")


def write_corpus(corpus: Corpus, directory: str | Path) -> list[Path]:
    """Write one canonical `<name>_<n>.qasm` file per entry."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for n, circ in corpus.entries.items():
        path = directory / f"{corpus.algorithm_name}_{n}.qasm"
        path.write_text(print_qasm(circ), encoding="utf-8")
        paths.append(path)
    return paths


def read_corpus(directory: str | Path, algorithm_name: str | None = None) -> Corpus:
    """Load every `<name>_<n>.qasm` file in `directory`.

    The qubit count is taken from the register size and must agree with the
    number in the file name.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory {directory} does not exist")
    entries: dict[int, Circuit] = {}
    names = set()
    for path in sorted(directory.glob("*.qasm")):
        m = _CORPUS_FILE.match(path.name)
        if m is None:
            continue
        if algorithm_name is not None and m["name"] != algorithm_name:
            continue
        names.add(m["name"])
        circ = parse_qasm(path.read_text(encoding="utf-8"))
        n = int(m["n"])
        if circ.n_qubits != n:
            raise QasmError(f"{path.name}: register has {circ.n_qubits} qubits, file name says {n}")
        entries[n] = circ
    if not entries:
        raise FileNotFoundError(f"no <name>_<n>.qasm files in {directory}")
    if len(names) > 1:
        raise QasmError(f"corpus directory mixes algorithms: {sorted(names)}")
    return Corpus(algorithm_name or names.pop(), entries)
