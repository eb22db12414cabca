"""Per-seed success rate of one benchmark at a fitness threshold.

Used to quantify how often a configuration escapes the local optima that
the syntactic fitness creates (for GHZ and QFT in particular).

    python3 scripts/convergence_sweep.py ghz --preset algorithms --seeds 12 --threshold 0.95
"""

from __future__ import annotations

import argparse
import time

from qdeqomp import bench, dsl, evolve

from run_experiment import GATE_SETS, PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("benchmark", choices=bench.BENCHMARKS)
    ap.add_argument("--preset", choices=sorted(PRESETS), default="algorithms")
    ap.add_argument("--n-max", type=int, default=None)
    ap.add_argument("--seeds", type=int, default=12)
    ap.add_argument("--generations", type=int, default=None)
    ap.add_argument("--threshold", type=float, default=0.95)
    args = ap.parse_args()

    hyper = dict(PRESETS[args.preset])
    if args.generations is not None:
        hyper["generations"] = args.generations
    corpus = bench.build_corpus(bench.BenchmarkSpec(args.benchmark, 2, args.n_max or hyper["qubit_limit"]))
    hits = 0
    optima = {}
    for seed in range(args.seeds):
        cfg = evolve.EvolutionConfig(
            **hyper,
            operations=GATE_SETS[args.benchmark],
            compare_method="combined",
            parsimony_lambda=0.0,
            seed=seed,
        )
        t0 = time.time()
        result = evolve.run(cfg, corpus)
        hit = next((g.generation for g in result.logs if g.best_fitness >= args.threshold), None)
        hits += hit is not None
        key = round(result.best.fitness, 4)
        optima.setdefault(key, dsl.render_dsl(result.best.program))
        print(f"seed {seed:3d}  best {result.best.fitness:.4f}  first hit {hit}  ({time.time() - t0:.1f}s)", flush=True)
    print(f"success {hits}/{args.seeds} at threshold {args.threshold}")
    for score, text in sorted(optima.items(), reverse=True):
        print(f"--- best program at {score}")
        print(text, end="")


if __name__ == "__main__":
    main()
