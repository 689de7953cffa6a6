"""Benchmark the fused Monte Carlo trial kernel: numba vs numpy fallback.

Run both paths in subprocesses (the backend is chosen at import time via
MMFDR_NO_NUMBA):

    python benchmarks/bench_mc.py [--trials 200] [--n 96] [--k 4]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_once(trials: int, n: int, k: int) -> float:
    import numpy as np

    from mmfdr.config import SystemConfig, draw_correlation_phases
    from mmfdr.model import correlation_set
    from mmfdr import rates
    from mmfdr.accel import USE_NUMBA

    cfg = SystemConfig(
        k=k, n_s=max(1, n // k), n_d=max(1, n // k), n_r=n, n_t=n, t=300, tau=2,
        e_s=3.0, e_r=3.0, e_s_max=3.0, e_r_max=3.0 * k, e_t=10.0,
        nu_s=0.01, nu_d=0.01, nu_r=0.01, mu_r=0.01, mu_d=0.01,
        beta_sr=1.0, beta_rd=1.0, beta_ei=3.0)
    cfg = draw_correlation_phases(cfg, 0.3, 0.7, np.random.default_rng(1))
    corr = correlation_set(cfg)
    a = max(k, (2 * n) // 3)
    # warmup covers jit compilation and statistics setup
    rates.run_monte_carlo(cfg, a, a, 2, seed=0, corr=corr)
    t0 = time.perf_counter()
    acc = rates.run_monte_carlo(cfg, a, a, trials, seed=1, corr=corr)
    dt = time.perf_counter() - t0
    sr, _ = rates.mc_rate_sr(cfg, acc)
    print(json.dumps({"numba": USE_NUMBA, "seconds": dt,
                      "trials": trials, "rate_check": float(sr[0])}))
    return dt


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--n", type=int, default=96)
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.child:
        run_once(args.trials, args.n, args.k)
        return

    results = {}
    for label, env_val in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, MMFDR_NO_NUMBA=env_val)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--child",
             "--trials", str(args.trials), "--n", str(args.n), "--k", str(args.k)],
            env=env, capture_output=True, text=True, check=True)
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        results[label] = payload
        per_trial = payload["seconds"] / args.trials * 1e3
        print(f"{label:6s}: {payload['seconds']:.2f}s for {args.trials} trials "
              f"({per_trial:.2f} ms/trial), rate_check={payload['rate_check']:.6f}")
    ratio = results["numpy"]["seconds"] / results["numba"]["seconds"]
    print(f"speedup (numpy / numba): {ratio:.2f}x")
    drift = abs(results["numpy"]["rate_check"] - results["numba"]["rate_check"])
    print(f"cross-path rate drift: {drift:.3e}")


if __name__ == "__main__":
    main()
