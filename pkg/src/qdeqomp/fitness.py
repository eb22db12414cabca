"""Syntactic similarity between circuits and the fitness of a program.

Three scores compare a candidate circuit with a target circuit through their
canonical instruction lines:

* sequence similarity, ``1 - sqrt(D / max(|A|, |B|))`` with D the edit
  distance between the two line lists;
* frequency similarity, the cosine between per-gate-name counts;
* LCS similarity, longest common subsequence of lines over target length.

Edit distance and LCS use the bit-vector formulation of the usual dynamic
program (one machine word per column becomes one Python int), which keeps a
whole population evaluation cheap enough for pure Python.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Sequence

from . import dsl
from .dsl import GenProgram
from .qasm import Circuit, Corpus, gate_lines


class ComparisonMethod(str, Enum):
    COMBINED = "combined"
    L_BY_L = "l_by_l"
    SEQ = "seq"
    FREQ = "freq"


class Aggregation(str, Enum):
    MEAN = "mean"
    SUM = "sum"


DEFAULT_LAMBDA = 1e-4


# ---------------------------------------------------------------------------
# sequence kernels


def _pattern_masks(pattern: Sequence[Hashable]) -> dict:
    peq: dict = {}
    for i, tok in enumerate(pattern):
        peq[tok] = peq.get(tok, 0) | (1 << i)
    return peq


def _levenshtein_masks(peq: dict, m: int, text: Sequence[Hashable]) -> int:
    if m == 0:
        return len(text)
    mask = (1 << m) - 1
    high = 1 << (m - 1)
    vp, vn, score = mask, 0, m
    for tok in text:
        eq = peq.get(tok, 0)
        xv = eq | vn
        xh = (((eq & vp) + vp) ^ vp) | eq
        hp = vn | (~(xh | vp) & mask)
        hn = vp & xh
        if hp & high:
            score += 1
        elif hn & high:
            score -= 1
        hp = ((hp << 1) | 1) & mask
        hn = (hn << 1) & mask
        vp = hn | (~(xv | hp) & mask)
        vn = hp & xv
    return score


def _lcs_masks(peq: dict, m: int, text: Sequence[Hashable]) -> int:
    mask = (1 << m) - 1
    v = mask
    for tok in text:
        u = v & peq.get(tok, 0)
        if u:
            v = ((v + u) | (v - u)) & mask
    return m - v.bit_count()


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Edit distance between two token sequences (unit insert/delete/substitute)."""
    if len(a) < len(b):
        a, b = b, a
    # shorter sequence as the bit pattern
    return _levenshtein_masks(_pattern_masks(b), len(b), a)


def lcs_length(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    if len(a) < len(b):
        a, b = b, a
    return _lcs_masks(_pattern_masks(b), len(b), a)


# ---------------------------------------------------------------------------
# circuit similarity


def gate_frequencies(c: Circuit) -> Counter:
    return Counter(ins.gate for ins in c.instructions)


def _seq_score(distance: int, len_a: int, len_b: int) -> float:
    longest = max(len_a, len_b)
    if longest == 0:
        return 1.0
    return 1.0 - math.sqrt(distance / longest)


def _cosine(f1: Counter, f2: Counter) -> float:
    if not f1 and not f2:
        return 1.0
    if not f1 or not f2:
        return 0.0
    dot = sum(v * f2.get(k, 0) for k, v in f1.items())
    n1 = sum(v * v for v in f1.values())
    n2 = sum(v * v for v in f2.values())
    # integer product keeps identical vectors at exactly 1.0
    return min(1.0, dot / math.sqrt(n1 * n2))


def _lcs_score(lcs: int, len_candidate: int, len_target: int) -> float:
    if len_target == 0:
        return 1.0 if len_candidate == 0 else 0.0
    return min(1.0, lcs / len_target)


def seq_similarity(a: Circuit, b: Circuit) -> float:
    la, lb = gate_lines(a), gate_lines(b)
    return _seq_score(levenshtein(la, lb), len(la), len(lb))


def freq_similarity(a: Circuit, b: Circuit) -> float:
    return _cosine(gate_frequencies(a), gate_frequencies(b))


def lcs_similarity(candidate: Circuit, target: Circuit) -> float:
    lc, lt = gate_lines(candidate), gate_lines(target)
    return _lcs_score(lcs_length(lc, lt), len(lc), len(lt))


def _combine(s_seq: float, s_freq: float, s_lcs: float, method: ComparisonMethod) -> float:
    if method is ComparisonMethod.COMBINED:
        return (s_seq * s_freq * s_lcs) ** (1.0 / 3.0)
    if method is ComparisonMethod.L_BY_L:
        return s_lcs
    if method is ComparisonMethod.SEQ:
        return s_seq
    return s_freq


def combined_score(candidate: Circuit, target: Circuit, method: ComparisonMethod | str = "combined") -> float:
    method = ComparisonMethod(method)
    return _combine(
        seq_similarity(candidate, target),
        freq_similarity(candidate, target),
        lcs_similarity(candidate, target),
        method,
    )


# ---------------------------------------------------------------------------
# program fitness


@dataclass(frozen=True)
class SizeScores:
    s_seq: float
    s_freq: float
    s_lcs: float
    s_total: float
    error: str | None = None

    @property
    def valid(self) -> bool:
        return self.error is None


INVALID = SizeScores(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class FitnessReport:
    per_n: dict[int, SizeScores]
    node_count: int
    parsimony: float
    aggregate: float

    @property
    def mean_total(self) -> float:
        """Mean per-size score, without the parsimony term."""
        return statistics.fmean(s.s_total for s in self.per_n.values())


@dataclass
class _Target:
    circuit: Circuit
    lines: list[str]
    freq: Counter
    peq: dict


@dataclass
class Scorer:
    """Scores programs against one corpus, memoising reports per program.

    ``max_length`` only sets the per-size instruction cap
    (``10 * n * max_length``) used when instantiating candidates.
    """

    corpus: Corpus
    method: ComparisonMethod | str = ComparisonMethod.COMBINED
    parsimony_lambda: float = DEFAULT_LAMBDA
    aggregation: Aggregation | str = Aggregation.MEAN
    max_length: int = dsl.DEFAULT_MAX_LENGTH
    cache_size: int = 50_000
    _targets: dict[int, _Target] = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False)

    def __post_init__(self):
        if not self.corpus.entries:
            raise ValueError("corpus is empty")
        self.method = ComparisonMethod(self.method)
        self.aggregation = Aggregation(self.aggregation)
        self._targets = {}
        for n, circ in self.corpus.entries.items():
            lines = gate_lines(circ)
            self._targets[n] = _Target(circ, lines, gate_frequencies(circ), _pattern_masks(lines))
        self._cache = {}

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state

    def score_size(self, candidate: Circuit, n: int) -> SizeScores:
        t = self._targets[n]
        lines = gate_lines(candidate)
        if lines == t.lines:
            return SizeScores(1.0, 1.0, 1.0, 1.0)
        m = len(t.lines)
        s_seq = _seq_score(_levenshtein_masks(t.peq, m, lines), len(lines), m)
        s_freq = _cosine(Counter(ins.gate for ins in candidate.instructions), t.freq)
        s_lcs = _lcs_score(_lcs_masks(t.peq, m, lines) if m else 0, len(lines), m)
        return SizeScores(s_seq, s_freq, s_lcs, _combine(s_seq, s_freq, s_lcs, self.method))

    def evaluate(self, p: GenProgram) -> FitnessReport:
        report = self._cache.get(p)
        if report is not None:
            return report
        per_n: dict[int, SizeScores] = {}
        for n in self._targets:
            try:
                circ = dsl.instantiate(p, n, dsl.default_instruction_cap(n, self.max_length))
            except dsl.InstantiationError as e:
                per_n[n] = SizeScores(0.0, 0.0, 0.0, 0.0, type(e).__name__)
                continue
            per_n[n] = self.score_size(circ, n)
        nodes = dsl.node_count(p)
        parsimony = -self.parsimony_lambda * nodes
        totals = [s.s_total for s in per_n.values()]
        base = statistics.fmean(totals) if self.aggregation is Aggregation.MEAN else math.fsum(totals)
        report = FitnessReport(per_n, nodes, parsimony, base + parsimony)
        if len(self._cache) >= self.cache_size:
            self._cache.clear()
        self._cache[p] = report
        return report

    __call__ = evaluate


def evaluate(
    p: GenProgram,
    corpus: Corpus,
    method: ComparisonMethod | str = ComparisonMethod.COMBINED,
    parsimony_lambda: float = DEFAULT_LAMBDA,
    aggregation: Aggregation | str = Aggregation.MEAN,
    max_length: int = dsl.DEFAULT_MAX_LENGTH,
) -> FitnessReport:
    return Scorer(corpus, method, parsimony_lambda, aggregation, max_length).evaluate(p)
