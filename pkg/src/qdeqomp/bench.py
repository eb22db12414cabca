"""Benchmark families written as ground-truth generator programs.

Each benchmark is a `GenProgram` in the same language the decompiler
evolves, so instantiating it gives the target corpus and scoring it against
that corpus is an exact fixed point.

QPE uses U = P(pi/4) acting on a single eigenstate qubit |1>, so the
controlled powers are plain ``cp`` gates. The inverse QFT is the forward QFT
(with swaps) reversed, with every ``cp`` angle negated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dsl import N, Add, AngleExpr, GenProgram, IntConst, LoopVar, Sub, gate, instantiate, loop, program
from .qasm import Corpus, write_corpus

BENCHMARKS = (
    "h_0",
    "h_c",
    "rx_c",
    "hx_loop",
    "nested_rx_h",
    "ry_c",
    "ry_rx_rz",
    "ry_h_rx_h",
    "ghz",
    "qft",
    "qft_noswap",
    "qpe",
)

MIN_QUBITS = 2
MAX_QUBITS = 30


class UnknownBenchmark(KeyError):
    pass


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    n_min: int = MIN_QUBITS
    n_max: int = 10

    def __post_init__(self):
        if self.name not in BENCHMARKS:
            raise UnknownBenchmark(self.name)
        if not MIN_QUBITS <= self.n_min <= self.n_max <= MAX_QUBITS:
            raise ValueError(
                f"qubit range {self.n_min}..{self.n_max} must lie within {MIN_QUBITS}..{MAX_QUBITS}"
            )

    @property
    def n_range(self) -> range:
        return range(self.n_min, self.n_max + 1)


i0, i1, i2 = LoopVar(0), LoopVar(1), LoopVar(2)
ZERO, ONE, TWO = IntConst(0), IntConst(1), IntConst(2)


def _pi_over_pow2(exponent, sign: int = 1) -> AngleExpr:
    return AngleExpr(sign, exponent, ZERO, 0)


def _ry_chain(replacement):
    return program(loop(0, N, *replacement))


def _qft_core():
    # for each target j: h(j), then cp(pi/2^(k-j)) controlled by k = j+1..n-1
    return loop(
        0,
        N,
        gate("h", i0),
        loop(
            1,
            Sub(Sub(N, ONE), i0),
            gate("cp", Add(Add(i0, ONE), i1), i0, angles=[_pi_over_pow2(Add(i1, ONE))]),
        ),
    )


def _qft_swaps():
    # swap(i, n-1-i) exactly for i < n-1-i: the middle loop runs n-1-2i times
    # (zero when negative) and the inner one only on its first iteration
    return loop(
        0,
        N,
        loop(
            1,
            Sub(Sub(Sub(N, ONE), i0), i0),
            loop(2, Sub(ONE, i1), gate("swap", i0, Sub(Sub(N, ONE), i0))),
        ),
    )


def _qpe():
    # counting register 0..n-2, eigenstate qubit n-1; m = n-1 counting qubits
    last = Sub(N, ONE)

    def m_minus_1_minus(v):
        return Sub(Sub(N, TWO), v)

    return program(
        loop(0, Sub(N, ONE), gate("h", i0)),
        gate("x", last),
        loop(0, Sub(N, ONE), gate("cp", i0, last, angles=[_pi_over_pow2(Sub(TWO, i0))])),
        # inverse QFT on the counting register: reversed swaps ...
        loop(
            0,
            Sub(N, ONE),
            loop(
                1,
                Add(Sub(Add(i0, i0), N), TWO),
                loop(2, Sub(ONE, i1), gate("swap", m_minus_1_minus(i0), i0)),
            ),
        ),
        # ... then targets j = m-1..0, each with its cp chain reversed and negated
        loop(
            0,
            Sub(N, ONE),
            loop(
                1,
                i0,
                gate(
                    "cp",
                    m_minus_1_minus(i1),
                    m_minus_1_minus(i0),
                    angles=[_pi_over_pow2(Sub(i0, i1), sign=-1)],
                ),
            ),
            gate("h", m_minus_1_minus(i0)),
        ),
    )


def reference_program(name: str) -> GenProgram:
    if name == "h_0":
        return program(loop(0, N, gate("h", ZERO)))
    if name == "h_c":
        return program(loop(0, N, gate("h", i0)))
    if name == "rx_c":
        return program(loop(0, N, gate("rx", i0, angles=[_pi_over_pow2(i0)])))
    if name == "hx_loop":
        return program(loop(0, N, gate("h", i0), gate("x", i0)))
    if name == "nested_rx_h":
        return program(
            loop(
                0,
                N,
                loop(1, Add(i0, ONE), gate("rx", i0, angles=[_pi_over_pow2(i1)])),
                gate("h", Add(i0, ONE)),
            )
        )
    if name == "ry_c":
        return _ry_chain([gate("ry", i0, angles=[_pi_over_pow2(i0)])])
    if name == "ry_rx_rz":
        # Ry(t) = Rz(pi/2) Rx(t) Rz(-pi/2): rightmost factor comes first in time
        return _ry_chain(
            [
                gate("rz", i0, angles=[_pi_over_pow2(ONE, sign=-1)]),
                gate("rx", i0, angles=[_pi_over_pow2(i0)]),
                gate("rz", i0, angles=[_pi_over_pow2(ONE)]),
            ]
        )
    if name == "ry_h_rx_h":
        return _ry_chain(
            [gate("h", i0), gate("rx", i0, angles=[_pi_over_pow2(i0)]), gate("h", i0)]
        )
    if name == "ghz":
        return program(gate("h", ZERO), loop(0, Sub(N, ONE), gate("cx", i0, Add(i0, ONE))))
    if name == "qft":
        return program(_qft_core(), _qft_swaps())
    if name == "qft_noswap":
        return program(_qft_core())
    if name == "qpe":
        return _qpe()
    raise UnknownBenchmark(name)


def build_corpus(spec: BenchmarkSpec) -> Corpus:
    p = reference_program(spec.name)
    # references are exact, so no instruction cap applies
    return Corpus(spec.name, {n: instantiate(p, n, max_instructions=1 << 30) for n in spec.n_range})


def generate_corpus(spec: BenchmarkSpec, out_dir: str | Path | None = None) -> Corpus:
    """Build the corpus and, if ``out_dir`` is given, write ``<out_dir>/<name>_<n>.qasm``."""
    corpus = build_corpus(spec)
    if out_dir is not None:
        try:
            write_corpus(corpus, out_dir)
        except OSError as e:
            raise IOFailure(str(e)) from e
    return corpus


class IOFailure(OSError):
    pass


def write_corpus_manifest(spec: BenchmarkSpec, out_dir: str | Path, version: str) -> Path:
    path = Path(out_dir) / "manifest.json"
    manifest = {
        "benchmark": spec.name,
        "n_min": spec.n_min,
        "n_max": spec.n_max,
        "files": [f"{spec.name}_{n}.qasm" for n in spec.n_range],
        "tool_version": version,
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


__all__ = [
    "BENCHMARKS",
    "BenchmarkSpec",
    "IOFailure",
    "UnknownBenchmark",
    "build_corpus",
    "generate_corpus",
    "reference_program",
    "write_corpus_manifest",
]
