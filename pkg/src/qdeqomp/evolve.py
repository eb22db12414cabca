"""Genetic-programming engine.

Per generation: evaluate, sort, keep the single best unchanged, breed
crossover children that displace the worst survivors, mutate a fraction of
the non-elite members with an annealed per-site rate, and replace the tail
with fresh random programs.
"""

from __future__ import annotations

import logging
import math
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Callable, Sequence

from . import dsl, synth
from .dsl import ForStmt, GenProgram
from .fitness import Aggregation, ComparisonMethod, FitnessReport, Scorer
from .qasm import GATES, Corpus
from .synth import GenGrammarParams

log = logging.getLogger(__name__)


class SelectionMethod(str, Enum):
    TOURNAMENT = "tournament"
    ROULETTE = "roulette"
    RANK = "rank"
    RANDOM = "random"
    WEIGHTED_ROULETTE = "weighted_roulette"


class ConfigError(ValueError):
    pass


class EmptyPopulation(ValueError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    algorithm_name: str = ""
    qubit_limit: int = 20
    generations: int = 100
    pop_size: int = 50
    max_length: int = 10
    crossover_rate: float = 0.3
    new_gen_rate: float = 0.2
    mutation_rate: float = 0.1
    compare_method: str = "l_by_l"
    max_loop_depth: int = 2
    selection_method: str = "tournament"
    operations: tuple[str, ...] = ("h", "x", "cx")
    # engine extensions
    mutation_rate_2_initial: float = 0.5
    decay: float = 0.98
    mutation_rate_2_min: float = 0.1
    parsimony_lambda: float = 1e-4
    seed: int = 0
    tournament_size: int = 3
    max_expr_operators: int = 2
    var_depth: int = 2
    aggregation: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        problems = []
        for name in ("crossover_rate", "new_gen_rate", "mutation_rate", "mutation_rate_2_initial", "mutation_rate_2_min"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must lie in [0, 1]")
        if self.pop_size < 2:
            problems.append("pop_size must be at least 2")
        if self.generations < 1:
            problems.append("generations must be at least 1")
        if not 0.0 < self.decay < 1.0:
            problems.append("decay must lie in (0, 1)")
        if self.mutation_rate_2_min > self.mutation_rate_2_initial:
            problems.append("mutation_rate_2_min exceeds mutation_rate_2_initial")
        if self.max_length < 1 or self.max_loop_depth < 0 or self.qubit_limit < 1:
            problems.append("max_length, max_loop_depth and qubit_limit must be positive")
        if self.tournament_size < 1:
            problems.append("tournament_size must be at least 1")
        if self.parsimony_lambda < 0:
            problems.append("parsimony_lambda must be non-negative")
        if not self.operations:
            problems.append("operations must not be empty")
        unknown = [g for g in self.operations if g not in GATES]
        if unknown:
            problems.append(f"unknown operations {unknown}")
        for name, enum in (
            ("compare_method", ComparisonMethod),
            ("selection_method", SelectionMethod),
            ("aggregation", Aggregation),
        ):
            try:
                enum(getattr(self, name))
            except ValueError:
                problems.append(f"{name} must be one of {[e.value for e in enum]}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def grammar(self) -> GenGrammarParams:
        return GenGrammarParams(
            allowed_gates=self.operations,
            max_length=self.max_length,
            max_loop_depth=self.max_loop_depth,
            max_expr_operators=self.max_expr_operators,
            var_depth=self.var_depth,
        )

    # flat key=value text, one key per line, '#' comments

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, **overrides) -> "EvolutionConfig":
        types = {f.name: f.type for f in fields(cls)}
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _convert(key, value, types[key], lineno)
        values.update(overrides)
        return cls(**values)


def _convert(key: str, value: str, typ: str, lineno: int):
    value = value.strip().strip("'\"")
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
        if typ.startswith("tuple"):
            items = value.strip("[]()")
            return tuple(s.strip().strip("'\"") for s in items.split(",") if s.strip())
        return value
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None


@dataclass
class Individual:
    program: GenProgram
    report: FitnessReport | None = None
    birth_generation: int = 0

    @property
    def fitness(self) -> float:
        if self.report is None:
            raise ValueError("individual has not been evaluated")
        return self.report.aggregate


def rank_key(ind: Individual):
    """Sort key: higher fitness first, then fewer nodes, then older."""
    return (-ind.fitness, ind.report.node_count, ind.birth_generation)


@dataclass(frozen=True)
class GenerationLog:
    generation: int
    best_fitness: float
    mean_fitness: float
    median_fitness: float
    best_node_count: int
    elapsed_ms: float
    m_r2: float


# ---------------------------------------------------------------------------
# selection


def selection_probabilities(population: Sequence[Individual], method: SelectionMethod | str) -> list[float]:
    """Per-individual selection probability for the fitness-proportional schemes."""
    method = SelectionMethod(method)
    if not population:
        raise EmptyPopulation("cannot select from an empty population")
    k = len(population)
    if method is SelectionMethod.RANDOM:
        return [1.0 / k] * k
    if method is SelectionMethod.RANK:
        order = sorted(range(k), key=lambda i: rank_key(population[i]), reverse=True)
        weights = [0.0] * k
        for rank, i in enumerate(order, start=1):
            weights[i] = float(rank)
    elif method in (SelectionMethod.ROULETTE, SelectionMethod.WEIGHTED_ROULETTE):
        lo = min(ind.fitness for ind in population)
        weights = [ind.fitness - lo for ind in population]
        if method is SelectionMethod.WEIGHTED_ROULETTE:
            weights = [w * w for w in weights]
        if not any(weights):
            return [1.0 / k] * k
    else:
        raise ValueError(f"{method.value} selection has no closed-form probabilities")
    total = math.fsum(weights)
    return [w / total for w in weights]


def select(
    population: Sequence[Individual],
    method: SelectionMethod | str,
    rng: random.Random,
    tournament_size: int = 3,
) -> Individual:
    method = SelectionMethod(method)
    if not population:
        raise EmptyPopulation("cannot select from an empty population")
    if method is SelectionMethod.TOURNAMENT:
        contenders = rng.sample(list(population), min(tournament_size, len(population)))
        return min(contenders, key=rank_key)
    if method is SelectionMethod.RANDOM:
        return population[rng.randrange(len(population))]
    probs = selection_probabilities(population, method)
    return rng.choices(population, weights=probs, k=1)[0]


# ---------------------------------------------------------------------------
# variation


def crossover(
    p1: GenProgram,
    p2: GenProgram,
    rng: random.Random,
    max_length: int | None = None,
    retries: int = 10,
) -> tuple[GenProgram, GenProgram]:
    """Swap the tails of the two top-level statement lists.

    Loops are never split, so children stay syntactically valid.
    """
    for _ in range(retries):
        s1 = rng.randint(0, len(p1.body))
        s2 = rng.randint(0, len(p2.body))
        c1 = GenProgram(p1.body[:s1] + p2.body[s2:])
        c2 = GenProgram(p2.body[:s2] + p1.body[s1:])
        if max_length is None or (dsl.gate_count(c1) <= max_length and dsl.gate_count(c2) <= max_length):
            return c1, c2
    return p1, p2


def mutate(p: GenProgram, m_r2: float, params: GenGrammarParams, rng: random.Random) -> GenProgram:
    """Insert or replace statements; never delete.

    Each body (top level and every loop body of the input) is a mutation site
    hit with probability ``m_r2``. A hit either appends a fresh statement or
    replaces one statement with a fresh one holding at least as many gates.
    """
    total = [dsl.gate_count(p)]

    def visit(body: tuple, depth: int) -> tuple:
        stmts = [
            ForStmt(st.depth, st.range_expr, visit(st.body, depth + 1)) if type(st) is ForStmt else st
            for st in body
        ]
        if rng.random() < m_r2:
            _mutate_site(stmts, depth, params, rng, total)
        return tuple(stmts)

    return GenProgram(visit(p.body, 0))


def _mutate_site(stmts: list, depth: int, params: GenGrammarParams, rng: random.Random, total: list[int]):
    insert = rng.random() < 0.5 or not stmts
    try:
        if insert:
            budget = params.max_length - total[0]
            if budget < 1:
                return
            new = synth.random_statement(params, depth, rng, 1, budget)
            stmts.append(new)
            total[0] += dsl.gate_count(new)
        else:
            idx = rng.randrange(len(stmts))
            old_gates = dsl.gate_count(stmts[idx])
            budget = params.max_length - total[0] + old_gates
            if budget < old_gates or (old_gates > 1 and depth >= params.max_loop_depth):
                return
            new = synth.random_statement(params, depth, rng, old_gates, budget)
            stmts[idx] = new
            total[0] += dsl.gate_count(new) - old_gates
    except synth.Exhausted:
        return


def anneal(g: int, cfg: EvolutionConfig) -> float:
    return max(cfg.mutation_rate_2_initial * cfg.decay**g, cfg.mutation_rate_2_min)


# ---------------------------------------------------------------------------
# main loop

_worker_scorer: Scorer | None = None


def _init_worker(scorer: Scorer):
    global _worker_scorer
    _worker_scorer = scorer


def _score_in_worker(p: GenProgram) -> FitnessReport:
    return _worker_scorer.evaluate(p)


@dataclass
class RunResult:
    best: Individual
    logs: list[GenerationLog]
    population: list[Individual] = field(default_factory=list)


def _evaluate_all(population: list[Individual], scorer: Scorer, pool: ProcessPoolExecutor | None):
    pending = [ind for ind in population if ind.report is None]
    if pool is None or len(pending) < 2:
        for ind in pending:
            ind.report = scorer.evaluate(ind.program)
        return
    # fan out distinct programs, gather in submission order
    unique = list(dict.fromkeys(ind.program for ind in pending))
    reports = dict(zip(unique, pool.map(_score_in_worker, unique)))
    for ind in pending:
        ind.report = reports[ind.program]


def run(
    cfg: EvolutionConfig,
    corpus: Corpus,
    progress: Callable[[GenerationLog], None] | None = None,
    initial_population: Sequence[GenProgram] = (),
    workers: int = 1,
) -> RunResult:
    corpus = corpus.restrict(cfg.qubit_limit)
    if not corpus.entries:
        raise ConfigError(f"no corpus entries with n <= qubit_limit={cfg.qubit_limit}")
    rng = random.Random(cfg.seed)
    grammar = cfg.grammar
    scorer = Scorer(corpus, cfg.compare_method, cfg.parsimony_lambda, cfg.aggregation, cfg.max_length)
    selection = SelectionMethod(cfg.selection_method)

    def fresh(g: int) -> Individual:
        return Individual(dsl.simplify(synth.random_program(grammar, rng)), None, g)

    population = [Individual(dsl.simplify(p), None, 0) for p in initial_population][: cfg.pop_size]
    while len(population) < cfg.pop_size:
        population.append(fresh(0))

    n_pairs = int(cfg.crossover_rate * cfg.pop_size / 2)
    n_mutants = int(cfg.mutation_rate * cfg.pop_size)
    n_fresh = min(int(cfg.new_gen_rate * cfg.pop_size), cfg.pop_size - 1)

    logs: list[GenerationLog] = []
    best: Individual | None = None
    pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(scorer,)) if workers > 1 else None
    start = time.perf_counter()
    try:
        for g in range(cfg.generations):
            _evaluate_all(population, scorer, pool)
            population.sort(key=rank_key)
            elite = population[0]
            if best is None or rank_key(elite) < rank_key(best):
                best = elite
            m_r2 = anneal(g, cfg)
            fits = [ind.fitness for ind in population]
            entry = GenerationLog(
                generation=g,
                best_fitness=elite.fitness,
                mean_fitness=statistics.fmean(fits),
                median_fitness=statistics.median(fits),
                best_node_count=elite.report.node_count,
                elapsed_ms=(time.perf_counter() - start) * 1000.0,
                m_r2=m_r2,
            )
            logs.append(entry)
            if progress is not None:
                progress(entry)
            if g == cfg.generations - 1:
                break

            children: list[Individual] = []
            for _ in range(n_pairs):
                a = select(population, selection, rng, cfg.tournament_size)
                b = select(population, selection, rng, cfg.tournament_size)
                c1, c2 = crossover(a.program, b.program, rng, cfg.max_length)
                children.append(Individual(dsl.simplify(c1), None, g + 1))
                children.append(Individual(dsl.simplify(c2), None, g + 1))

            # children displace the worst survivors; fresh programs take the tail
            nxt = ([elite] + children + population[1:])[: cfg.pop_size - n_fresh]
            if len(nxt) > 1 and n_mutants:
                for i in rng.sample(range(1, len(nxt)), min(n_mutants, len(nxt) - 1)):
                    mutated = dsl.simplify(mutate(nxt[i].program, m_r2, grammar, rng))
                    if mutated != nxt[i].program:
                        nxt[i] = Individual(mutated, None, g + 1)
            nxt.extend(fresh(g + 1) for _ in range(cfg.pop_size - len(nxt)))
            population = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    return RunResult(best, logs, population)


def config_dict(cfg: EvolutionConfig) -> dict:
    d = asdict(cfg)
    d["operations"] = list(cfg.operations)
    return d
