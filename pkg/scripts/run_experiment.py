"""Run the full sensitivity experiment and print the index table.

    python scripts/run_experiment.py --config configs/default.yaml --out results/default
"""

import argparse
import logging
import time

from radarsense.pipeline import ExperimentConfig, load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--out", default="results/default")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.workers is not None:
        cfg = cfg.replace(workers=args.workers)

    start = time.perf_counter()
    result = run_experiment(cfg, args.out)
    print(f"{len(result.records)} runs in {time.perf_counter() - start:.1f} s, {result.n_flagged} flagged")
    for mode, res in result.results.items():
        print(f"\n[{mode}]  total variance {res.total_variance:.4g}")
        print(f"  {'parameter':14s} {'S':>7s} {'ST':>7s} {'ST-S':>7s}")
        for name, p in res.indices.items():
            print(f"  {name:14s} {p.s_first:7.3f} {p.s_total:7.3f} {p.interaction:7.3f}{'  *' if p.flagged else ''}")


if __name__ == "__main__":
    main()
