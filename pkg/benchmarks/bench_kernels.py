#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python reference.

Times the individual hot kernels and one full scenario run per backend.

    python benchmarks/bench_kernels.py [--full]
"""

import argparse
import math
import subprocess
import sys
import time
from pathlib import Path
from random import Random

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from boltsim._speedup import _pure  # noqa: E402

UR5E_DH = (
    (0.0, 0.1625, math.pi / 2, 0.0),
    (-0.425, 0.0, 0.0, 0.0),
    (-0.3922, 0.0, 0.0, 0.0),
    (0.0, 0.1333, math.pi / 2, 0.0),
    (0.0, 0.0997, -math.pi / 2, 0.0),
    (0.0, 0.0996, 0.0, 0.0),
)
LO = (-2 * math.pi,) * 6
HI = (2 * math.pi,) * 6
TOOL_P = (0.0, 0.0, 0.18)
TOOL_Q = (0.0, 1.0, 0.0, 0.0)


def make_cases(n=2000):
    rng = Random(3)
    cases = []
    for _ in range(n):
        q = tuple(-1.2 + rng.uniform(-0.4, 0.4) for _ in range(6))
        target = _pure.fk_pose(UR5E_DH, q, TOOL_P, TOOL_Q)
        seed = tuple(v + rng.uniform(-0.02, 0.02) for v in q)
        cases.append((q, target, seed))
    return cases


def bench(label, fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    dt = time.perf_counter() - t0
    return dt / reps


def kernel_suite(mod, cases):
    out = {}
    qs = [c[0] for c in cases]
    out["fk_pose"] = bench("fk", lambda: [
        mod.fk_pose(UR5E_DH, q, TOOL_P, TOOL_Q) for q in qs[:500]], 5) / 500
    out["ik_warm"] = bench("ik", lambda: [
        mod.ik_damped_ls(UR5E_DH, TOOL_P, TOOL_Q, t[0], t[1], s, LO, HI,
                         10, 1e-7, 1e-6, 0.05, 0.3)
        for _, t, s in cases[:300]], 3) / 300
    e = (0.001,) * 6
    v = (0.0,) * 6
    f = (1.0,) * 6
    m = (8.0,) * 3 + (0.5,) * 3
    d = (180.0,) * 3 + (6.0,) * 3
    k = (1000.0,) * 3 + (25.0,) * 3
    out["admittance_step"] = bench("adm", lambda: [
        mod.admittance_step(e, v, f, m, d, k, 0.002) for _ in range(2000)],
        5) / 2000
    sp = (0.501, 0.0, 0.199)
    sq = bq = (1.0, 0.0, 0.0, 0.0)
    out["contact_eval"] = bench("contact", lambda: [
        mod.contact_eval(sp, sq, (0.5, 0.0, 0.2), bq, 2e4, 50.0, 1e4,
                         0.002, 0.12, 0.15, 0.0, 0.002)
        for _ in range(2000)], 5) / 2000
    return out


def scenario_wall(backend):
    code = (
        "import sys; sys.path.insert(0, %r)\n"
        "import time\n"
        "from boltsim.scenario import load_spec\n"
        "from boltsim.runner import run_scenario\n"
        "t0 = time.perf_counter()\n"
        "run_scenario(load_spec('exp_compliance_ab', variant='A'), seed=0)\n"
        "print(time.perf_counter() - t0)\n" % str(REPO / "src"))
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True,
                          text=True, env={"BOLTSIM_BACKEND": backend,
                                          "PATH": "/usr/bin:/bin"})
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr)
    return float(proc.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--full", action="store_true",
                        help="also time a whole scenario per backend")
    args = parser.parse_args()

    backends = {"pure": _pure}
    try:
        from boltsim._speedup import _native
        backends["native"] = _native
    except ImportError:
        print("native backend not built; showing pure only")

    cases = make_cases()
    results = {name: kernel_suite(mod, cases) for name, mod in backends.items()}

    kernels = list(next(iter(results.values())))
    print(f"{'kernel':<18}" + "".join(f"{n + ' (us)':>14}" for n in results)
          + ("      speedup" if len(results) == 2 else ""))
    for kern in kernels:
        row = f"{kern:<18}"
        for name in results:
            row += f"{results[name][kern] * 1e6:>14.2f}"
        if len(results) == 2:
            row += f"{results['pure'][kern] / results['native'][kern]:>12.1f}x"
        print(row)

    if args.full:
        print()
        for name in backends:
            wall = scenario_wall(name)
            print(f"scenario exp_compliance_ab:A, backend={name}: {wall:.2f} s")


if __name__ == "__main__":
    main()
