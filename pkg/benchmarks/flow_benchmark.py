#!/usr/bin/env python3
"""Benchmark the compiled flow kernels against the pure-Python fallback.

The hot loop of the whole package is adaptive Runge-Kutta stepping with
constraint projection (every period_basis/monodromy/cartography call
sits on top of it), so this is the number that matters.

Run:  python benchmarks/flow_benchmark.py
"""

import time

import numpy as np

from semitoric.models import get_model
from semitoric.models.engine import BACKEND, first_return, integrate

CASES = [
    ("spherical_pendulum", np.array([1.0, 0, 0, 0, 0.3, 0.9]), 40.0),
    ("coupled_angular_momenta", None, 40.0),
    ("spin_oscillator", np.array([0.6, 0.1, 0.3, -0.2, 0.9]), 40.0),
]


def time_integrate(model, z0, T, force_python, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        z = integrate(model, z0, 0.4, 0.8, T, rtol=1e-9,
                      force_python=force_python)
        best = min(best, time.perf_counter() - t0)
    return best, z


def main():
    print(f"import-time backend selection: {BACKEND}")
    rng = np.random.default_rng(0)
    rows = []
    for name, z0, T in CASES:
        model = get_model(name)
        if z0 is None:
            z0 = model.project(rng.normal(size=model.dim))
        z0 = model.project(z0)
        t_c, z_c = time_integrate(model, z0, T, force_python=False)
        t_p, z_p = time_integrate(model, z0, T, force_python=True)
        dev = np.linalg.norm(z_c - z_p)
        rows.append((name, T, t_c, t_p, t_p / t_c, dev))
    print(f"\n{'model':28s} {'T':>5s} {'compiled':>10s} {'python':>10s} "
          f"{'speedup':>8s} {'|dz|':>9s}")
    for name, T, t_c, t_p, s, dev in rows:
        print(f"{name:28s} {T:5.0f} {t_c * 1e3:9.2f}ms {t_p * 1e3:9.2f}ms "
              f"{s:7.1f}x {dev:9.2e}")

    model = get_model("spherical_pendulum")
    z0 = np.array([1.0, 0, 0, 0, 0, 0.5])
    t0 = time.perf_counter()
    n = 200
    for _ in range(n):
        first_return(model, z0)
    dt = (time.perf_counter() - t0) / n
    print(f"\nfirst_return (pendulum, compiled event location): "
          f"{dt * 1e3:.2f} ms/call")


if __name__ == "__main__":
    main()
