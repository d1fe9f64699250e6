#!/usr/bin/env python3
"""Compare the pure-numpy and numba backends on the hot numeric kernels.

Run without arguments to benchmark both backends (each in a subprocess so
the VNELAB_NUMBA import-time switch takes effect) and print a speedup table:

    python3 benchmarks/bench_backends.py

Pass --backend to time the current interpreter's backend only; this is the
mode the parent process invokes internally.
"""

import argparse
import os
import re
import subprocess
import sys
import time

import numpy as np


def time_median(func, iterations=200, warmup=5):
    """Median wall time of func() in microseconds, after warmup calls."""
    for _ in range(warmup):
        func()
    times = []
    for _ in range(iterations):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return float(np.median(times)) * 1e6


def build_workloads():
    from vnelab import _kernels
    from vnelab.embedders import EmbedderConfig, noderank_scores, train_agent
    from vnelab.sim import ScenarioConfig, generate_requests, generate_substrate
    from vnelab.spectral import top_k_eigen

    rng = np.random.default_rng(7)
    T, d, h, n = 6, 4, 16, 50

    X = rng.standard_normal((T, d))
    h0 = rng.standard_normal(h)
    gates = [0.3 * rng.standard_normal((d + h, h)) for _ in range(3)]
    biases = [0.3 * rng.standard_normal(h) for _ in range(3)]
    run = _kernels.gru_seq_forward(X, h0, *gates, *biases)
    dH = rng.standard_normal((T + 1, h))

    Enc = rng.standard_normal((n, h))
    dec = rng.standard_normal(h)
    W1, W2 = 0.5 * rng.standard_normal((2, h, h))
    w = rng.standard_normal(h)
    _, Tcache = _kernels.attention_forward(Enc, dec, W1, W2, w)
    dlogits = rng.standard_normal(n)

    A = rng.standard_normal((n, n))
    S = A @ A.T

    cfg = ScenarioConfig(substrate_nodes=30, waxman_alpha=0.6, seed=5,
                         request_count=40, epochs=1)
    net = generate_substrate(cfg)
    requests = generate_requests(cfg)
    train_cfg = EmbedderConfig(algorithm="pointer", learning_rate=0.001,
                               epochs=1, seed=5)

    return {
        "gru_forward": lambda: _kernels.gru_seq_forward(
            X, h0, *gates, *biases),
        "gru_backward": lambda: _kernels.gru_seq_backward(
            *run, *gates, dH),
        "attention_forward": lambda: _kernels.attention_forward(
            Enc, dec, W1, W2, w),
        "attention_backward": lambda: _kernels.attention_backward(
            Enc, dec, W1, W2, w, Tcache, dlogits),
        "top_k_eigen_50": lambda: top_k_eigen(S, 4),
        "walk_scores_50": lambda: noderank_scores(net),
        "pointer_epoch": lambda: train_agent(net, requests, train_cfg),
    }


SLOW = {"pointer_epoch": 3, "top_k_eigen_50": 50}


def run_current_backend():
    from vnelab._accel import NUMBA_ACTIVE

    print("backend: %s" % ("numba" if NUMBA_ACTIVE else "numpy"), flush=True)
    for name, func in build_workloads().items():
        median = time_median(func, iterations=SLOW.get(name, 200))
        print("RESULT %s %.1f" % (name, median), flush=True)


def run_comparison():
    script = os.path.abspath(__file__)
    results = {}
    for flag, label in (("0", "numpy"), ("1", "numba")):
        env = dict(os.environ, VNELAB_NUMBA=flag)
        proc = subprocess.run([sys.executable, script, "--backend"],
                              capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            if label == "numba":
                print("numba backend unavailable; nothing to compare")
                return 0
            return proc.returncode
        for line in proc.stdout.splitlines():
            m = re.match(r"RESULT (\S+) (\S+)", line)
            if m:
                results.setdefault(m.group(1), {})[label] = float(m.group(2))

    print("%-22s %12s %12s %9s" % ("kernel", "numpy (us)", "numba (us)",
                                   "speedup"))
    for name, timings in results.items():
        speedup = timings["numpy"] / timings["numba"]
        print("%-22s %12.1f %12.1f %8.2fx"
              % (name, timings["numpy"], timings["numba"], speedup))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--backend", action="store_true",
                        help="time the current process's backend only")
    args = parser.parse_args(argv)
    if args.backend:
        run_current_backend()
        return 0
    return run_comparison()


if __name__ == "__main__":
    sys.exit(main())
