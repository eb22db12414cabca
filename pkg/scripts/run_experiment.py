"""Reproduce one fitness-vs-generation experiment over several seeds.

Writes ``<out>/<benchmark>/seed<k>/fitness.csv`` for each seed plus a
``summary.csv`` holding the per-generation mean-of-best and max-of-best
curves, the two series shown in fitness-vs-generation plots.

    python3 scripts/run_experiment.py ghz --preset algorithms --seeds 3 --out runs
"""

from __future__ import annotations

import argparse
import csv
import statistics
import time
from pathlib import Path

from qdeqomp import bench, dsl, evolve
from qdeqomp.cli import FITNESS_COLUMNS, fitness_csv_rows

PRESETS = {
    "ansatz": dict(
        mutation_rate=0.3,
        pop_size=40,
        generations=100,
        qubit_limit=20,
        max_length=10,
        crossover_rate=0.3,
        new_gen_rate=0.2,
        max_loop_depth=2,
        mutation_rate_2_initial=0.5,
    ),
    "algorithms": dict(
        mutation_rate=0.3,
        new_gen_rate=0.3,
        crossover_rate=0.2,
        mutation_rate_2_initial=0.99,
        max_length=4,
        max_loop_depth=3,
        qubit_limit=10,
        pop_size=40,
        generations=500,
    ),
    "ry": dict(
        mutation_rate=0.3,
        new_gen_rate=0.3,
        crossover_rate=0.2,
        mutation_rate_2_initial=0.99,
        max_length=4,
        max_loop_depth=3,
        qubit_limit=10,
        pop_size=50,
        generations=400,
    ),
}

GATE_SETS = {
    "h_0": ("h",),
    "h_c": ("h",),
    "rx_c": ("rx",),
    "hx_loop": ("h", "x"),
    "nested_rx_h": ("rx", "h"),
    "ry_c": ("ry",),
    "ry_rx_rz": ("rz", "rx"),
    "ry_h_rx_h": ("h", "rx"),
    "ghz": ("h", "cx"),
    "qft": ("h", "cp", "swap"),
    "qft_noswap": ("h", "cp", "swap"),
    "qpe": ("h", "x", "cp", "swap"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("benchmark", choices=bench.BENCHMARKS)
    ap.add_argument("--preset", choices=sorted(PRESETS), default="ansatz")
    ap.add_argument("--n-max", type=int, default=None, help="largest corpus size (default: preset qubit_limit)")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--generations", type=int, default=None)
    ap.add_argument("--lambda", dest="parsimony_lambda", type=float, default=0.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs")
    args = ap.parse_args()

    hyper = dict(PRESETS[args.preset])
    if args.generations is not None:
        hyper["generations"] = args.generations
    n_max = args.n_max or hyper["qubit_limit"]
    corpus = bench.build_corpus(bench.BenchmarkSpec(args.benchmark, 2, n_max))
    root = Path(args.out) / args.benchmark
    curves = []
    for seed in range(args.seeds):
        cfg = evolve.EvolutionConfig(
            **hyper,
            algorithm_name=args.benchmark,
            operations=GATE_SETS[args.benchmark],
            compare_method="combined",
            parsimony_lambda=args.parsimony_lambda,
            seed=seed,
        )
        t0 = time.time()
        result = evolve.run(cfg, corpus, workers=args.workers)
        out = root / f"seed{seed}"
        out.mkdir(parents=True, exist_ok=True)
        with (out / "fitness.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(FITNESS_COLUMNS)
            w.writerows(fitness_csv_rows(result.logs, timing=True))
        (out / "best.dsl").write_text(dsl.render_dsl(result.best.program))
        curves.append([g.best_fitness for g in result.logs])
        print(f"seed {seed}: best {result.best.fitness:.4f} in {time.time() - t0:.1f}s")
        print(dsl.render_dsl(result.best.program), end="")

    with (root / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generation", "mean_best", "max_best"])
        for g, values in enumerate(zip(*curves)):
            w.writerow([g, repr(statistics.fmean(values)), repr(max(values))])
    print(f"wrote {root / 'summary.csv'}")


if __name__ == "__main__":
    main()
