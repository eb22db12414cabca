import math

from hypothesis import strategies as st

from qdeqomp.qasm import GATES, Circuit, Instruction

GATE_NAMES = sorted(GATES)
ANGLES = st.one_of(
    st.sampled_from([math.pi, math.pi / 2, math.pi / 4, -math.pi / 8]),
    st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False),
)


@st.composite
def instructions(draw, n_qubits: int, gates=GATE_NAMES):
    name = draw(st.sampled_from([g for g in gates if GATES[g].arity <= n_qubits]))
    kind = GATES[name]
    qubits = tuple(draw(st.permutations(range(n_qubits)))[: kind.arity])
    params = tuple(draw(ANGLES) for _ in range(kind.param_count))
    return Instruction(name, qubits, params)


@st.composite
def circuits(draw, max_qubits: int = 5, max_len: int = 12, gates=GATE_NAMES):
    n = draw(st.integers(1, max_qubits))
    ins = draw(st.lists(instructions(n, gates), max_size=max_len))
    return Circuit(n, tuple(ins))


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def record_acceptance(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[criterion])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
