"""Desk-scale MES simulation on rounded bivariate normal data.

    python scripts/run_table1.py --runs 2000 --threads 4 --out table1.csv
"""

from __future__ import annotations

import argparse
import csv
import time
from dataclasses import asdict, dataclass, field

from discrete_copula.experiments import run_table1

# reference averages under the checkerboard coupling, for comparison only
REFERENCE_AVG_PERP = {
    (0.2, 0.9): 3.502, (0.3, 0.9): 5.257, (0.4, 0.9): 7.001,
    (0.2, 0.95): 4.116, (0.3, 0.95): 6.171, (0.4, 0.95): 8.234,
    (0.2, 0.975): 4.688, (0.3, 0.975): 6.992, (0.4, 0.975): 9.330,
}


@dataclass
class Table1Config:
    r: list[float] = field(default_factory=lambda: [0.2, 0.3, 0.4])
    p: list[float] = field(default_factory=lambda: [0.9, 0.95, 0.975])
    sigma: float = 10.0
    n_samples: int = 1000
    n_runs: int = 2000
    seed: int = 7
    mode: str = "interp"
    threads: int | None = None


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=Table1Config.n_runs)
    ap.add_argument("--seed", type=int, default=Table1Config.seed)
    ap.add_argument("--mode", choices=("step", "interp"), default=Table1Config.mode)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--full", action="store_true", help="10,000 runs per cell")
    ap.add_argument("--out", default=None, help="CSV path for the long-format results")
    a = ap.parse_args()
    cfg = Table1Config(n_runs=10_000 if a.full else a.runs, seed=a.seed, mode=a.mode, threads=a.threads)
    rows = []
    t0 = time.perf_counter()
    print(f"{'p':>6} {'r':>4} {'normal':>8} {'C_perp':>8} {'ref':>7} {'C_plus':>8} {'mse_perp':>9} {'mse_plus':>9}")
    for p in cfg.p:
        for r in cfg.r:
            row = run_table1(r, p, cfg.sigma, cfg.n_samples, cfg.n_runs, cfg.seed, cfg.mode, cfg.threads)
            rows.append(row)
            print(
                f"{p:6.3f} {r:4.1f} {row.normal_formula:8.3f} {row.avg_perp:8.3f} {REFERENCE_AVG_PERP[(r, p)]:7.3f}"
                f" {row.avg_plus:8.3f} {row.mse_perp:9.3f} {row.mse_plus:9.3f}",
                flush=True,
            )
    print(f"elapsed {time.perf_counter() - t0:.1f}s  config {asdict(cfg)}")
    if a.out:
        with open(a.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0].to_dict()))
            w.writeheader()
            for row in rows:
                w.writerow(row.to_dict())


if __name__ == "__main__":
    main()
