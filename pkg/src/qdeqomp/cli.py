"""``qdeqomp generate|decompile|score|simplify``.

Exit codes: 0 success, 1 failed ``simplify --check``, 2 bad arguments,
configuration or parse errors, 3 unreadable corpus or IO failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, bench, dsl, evolve, synth
from .fitness import ComparisonMethod, FitnessReport, Scorer
from .qasm import Corpus, QasmError, read_corpus

FITNESS_COLUMNS = (
    "generation",
    "best_fitness",
    "mean_fitness",
    "median_fitness",
    "best_node_count",
    "m_r2",
    "elapsed_ms",
)
REPORT_COLUMNS = ("n", "s_seq", "s_freq", "s_lcs", "s_total", "error")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    config: dict
    corpus_path: str
    seed: int
    started_at: str
    tool_version: str
    output_dir: str
    workers: int = 1
    files: list[str] = field(default_factory=list)

    def write(self, path: Path):
        path.write_text(json.dumps(self.__dict__, indent=2) + "\n", encoding="utf-8")


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_corpus(path: str) -> Corpus:
    try:
        return read_corpus(path)
    except (OSError, QasmError, ValueError) as e:
        raise CliError(f"cannot read corpus {path}: {e}", EXIT_IO) from e


def _load_program(path: str) -> dsl.GenProgram:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read program {path}: {e}", EXIT_IO) from e
    try:
        return dsl.parse_dsl(text)
    except (dsl.DslSyntaxError, dsl.InvalidProgram, ValueError) as e:
        raise CliError(f"{path}: {e}", EXIT_USAGE) from e


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    try:
        spec = bench.BenchmarkSpec(args.benchmark, args.n_min, args.n_max)
    except bench.UnknownBenchmark:
        raise CliError(
            f"unknown benchmark {args.benchmark!r}; choose from {', '.join(bench.BENCHMARKS)}", EXIT_USAGE
        )
    except ValueError as e:
        raise CliError(str(e), EXIT_USAGE)
    out = Path(args.out_dir) / spec.name
    try:
        bench.generate_corpus(spec, out)
        bench.write_corpus_manifest(spec, out, __version__)
    except OSError as e:
        raise CliError(f"cannot write corpus: {e}", EXIT_IO) from e
    count = len(spec.n_range)
    print(f"wrote {count} files to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# decompile


def fitness_csv_rows(logs: list[evolve.GenerationLog], timing: bool) -> list[list[str]]:
    return [
        [
            str(g.generation),
            _fmt(g.best_fitness),
            _fmt(g.mean_fitness),
            _fmt(g.median_fitness),
            str(g.best_node_count),
            _fmt(g.m_r2),
            f"{g.elapsed_ms:.3f}" if timing else "",
        ]
        for g in logs
    ]


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def report_rows(report: FitnessReport) -> list[list[str]]:
    return [
        [str(n), _fmt(s.s_seq), _fmt(s.s_freq), _fmt(s.s_lcs), _fmt(s.s_total), s.error or ""]
        for n, s in report.per_n.items()
    ]


def cmd_decompile(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read config {args.config}: {e}", EXIT_USAGE) from e
    overrides = {} if args.seed is None else {"seed": args.seed}
    try:
        cfg = evolve.EvolutionConfig.from_text(text, **overrides)
    except (evolve.ConfigError, TypeError) as e:
        raise CliError(f"{args.config}: {e}", EXIT_USAGE) from e
    corpus = _load_corpus(args.corpus)
    if not corpus.restrict(cfg.qubit_limit).entries:
        raise CliError(f"no corpus entries with n <= qubit_limit={cfg.qubit_limit}", EXIT_USAGE)
    if not cfg.algorithm_name:
        cfg = evolve.EvolutionConfig(**{**evolve.config_dict(cfg), "algorithm_name": corpus.algorithm_name})

    out = Path(args.out_dir)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot write to {out}: {e}", EXIT_IO) from e

    def progress(entry: evolve.GenerationLog):
        if args.verbose:
            print(
                f"gen {entry.generation:4d}  best {entry.best_fitness:.6f}  "
                f"mean {entry.mean_fitness:.6f}  nodes {entry.best_node_count}",
                file=sys.stderr,
            )

    result = evolve.run(cfg, corpus, progress, workers=args.workers)
    best = result.best

    try:
        _write_csv(out / "fitness.csv", FITNESS_COLUMNS, fitness_csv_rows(result.logs, args.timing))
        _write_csv(
            out / "timing.csv",
            ("generation", "elapsed_ms"),
            [[str(g.generation), f"{g.elapsed_ms:.3f}"] for g in result.logs],
        )
        (out / "best.dsl").write_text(dsl.render_dsl(best.program), encoding="utf-8")
        (out / "best.py.txt").write_text(dsl.render_pythonic(best.program, cfg.algorithm_name or "circuit"), encoding="utf-8")
        _write_csv(out / "best_report.csv", REPORT_COLUMNS, report_rows(best.report))
        files = ["config.txt", "fitness.csv", "timing.csv", "best.dsl", "best.py.txt", "best_report.csv"]
        RunManifest(
            config=evolve.config_dict(cfg),
            corpus_path=str(Path(args.corpus).resolve()),
            seed=cfg.seed,
            started_at=started,
            tool_version=__version__,
            output_dir=str(out.resolve()),
            workers=args.workers,
            files=files,
        ).write(out / "manifest.json")
    except OSError as e:
        raise CliError(f"cannot write results: {e}", EXIT_IO) from e

    print(f"best fitness {best.fitness:.6f} with {best.report.node_count} nodes")
    print(dsl.render_dsl(best.program), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# score


def cmd_score(args) -> int:
    program = _load_program(args.program)
    corpus = _load_corpus(args.corpus)
    report = Scorer(corpus, args.method, args.parsimony_lambda).evaluate(program)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS + ("node_count", "aggregate"))
        for row in report_rows(report):
            w.writerow(row + [str(report.node_count), _fmt(report.aggregate)])
        print(buf.getvalue(), end="")
        return EXIT_OK
    print(f"{'n':>4} {'s_seq':>10} {'s_freq':>10} {'s_lcs':>10} {'s_total':>10}")
    for n, s in report.per_n.items():
        note = f"  ({s.error})" if s.error else ""
        print(f"{n:>4} {s.s_seq:10.6f} {s.s_freq:10.6f} {s.s_lcs:10.6f} {s.s_total:10.6f}{note}")
    print(f"node_count {report.node_count}")
    print(f"aggregate {report.aggregate:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simplify


def cmd_simplify(args) -> int:
    if args.random is not None:
        return _simplify_random(args.random, args.seed)
    if args.program is None:
        raise CliError("simplify needs a program path or --random N", EXIT_USAGE)
    p = _load_program(args.program)
    q = dsl.simplify(p)
    print(dsl.render_dsl(q), end="")
    if not args.check:
        return EXIT_OK
    bad = dsl.semantic_mismatches(p, q)
    print(f"# nodes {dsl.node_count(p)} -> {dsl.node_count(q)}")
    print(f"# equivalence n=1..16: {'ok' if not bad else 'FAILED at ' + str(bad)}")
    return EXIT_OK if not bad else EXIT_CHECK_FAILED


def _simplify_random(count: int, seed: int) -> int:
    rng = synth.make_rng(seed)
    params = synth.GenGrammarParams(allowed_gates=("h", "x", "cx", "rx", "cp"), max_loop_depth=3)
    failures = 0
    before = after = 0
    for _ in range(count):
        p = synth.random_program(params, rng)
        q = dsl.simplify(p)
        before += dsl.node_count(p)
        after += dsl.node_count(q)
        if dsl.semantic_mismatches(p, q):
            failures += 1
            print(dsl.render_dsl(p), file=sys.stderr)
    print(f"checked {count} programs: {failures} equivalence failures, nodes {before} -> {after}")
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdeqomp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a benchmark corpus as QASM files")
    g.add_argument("benchmark")
    g.add_argument("n_min", type=int)
    g.add_argument("n_max", type=int)
    g.add_argument("out_dir")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("decompile", help="evolve a generator program for a corpus")
    d.add_argument("config", help="key=value hyperparameter file")
    d.add_argument("corpus", help="directory of <name>_<n>.qasm files")
    d.add_argument("out_dir")
    d.add_argument("--seed", type=int, default=None, help="override the config seed")
    d.add_argument("--workers", type=int, default=1, help="parallel fitness workers")
    d.add_argument("--timing", action="store_true", help="fill the elapsed_ms column of fitness.csv")
    d.add_argument("-v", "--verbose", action="store_true")
    d.set_defaults(func=cmd_decompile)

    s = sub.add_parser("score", help="score a DSL program against a corpus")
    s.add_argument("program", help="DSL file, or - for stdin")
    s.add_argument("corpus")
    s.add_argument("--method", choices=[m.value for m in ComparisonMethod], default="combined")
    s.add_argument("--lambda", dest="parsimony_lambda", type=float, default=0.0)
    s.add_argument("--csv", action="store_true")
    s.set_defaults(func=cmd_score)

    m = sub.add_parser("simplify", help="simplify a DSL program")
    m.add_argument("program", nargs="?", help="DSL file, or - for stdin")
    m.add_argument("--check", action="store_true", help="verify equivalence for n = 1..16")
    m.add_argument("--random", type=int, metavar="N", help="check N random programs instead")
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_simplify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        if e.code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        print(f"qdeqomp: error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
