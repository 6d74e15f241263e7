"""Compare the compiled and pure-Python kernels, then time tracker steps.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import tempfile
import timeit
from pathlib import Path

import numpy as np

from diversort.core_io import load_detections, load_features
from diversort.kernels import _pykernels
from diversort.simulate import builtin_scenario, generate
from diversort.tracker import run_sequence

try:
    from diversort.kernels import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat)) * 1e3


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    cases = []
    for n in (8, 32, 128):
        cost = rng.random((n, n))
        cases.append((f"solve_dense {n}x{n}", "solve_dense", (cost,)))
    for n in (16, 128):
        a = np.column_stack([rng.uniform(0, 500, (n, 2)), rng.uniform(10, 80, (n, 2))])
        b = np.column_stack([rng.uniform(0, 500, (n, 2)), rng.uniform(10, 80, (n, 2))])
        cases.append((f"iou_matrix {n}x{n}", "iou_matrix", (a, b)))
    for label, name, args in cases:
        py = _time(lambda: getattr(_pykernels, name)(*args), repeat)
        if _ckernels is None:
            print(f"{label:<24}{py:>12.3f}{'n/a':>12}{'':>10}")
            continue
        cy = _time(lambda: getattr(_ckernels, name)(*args), repeat)
        print(f"{label:<24}{py:>12.3f}{cy:>12.3f}{py / cy:>9.1f}x")


def bench_tracker():
    with tempfile.TemporaryDirectory() as tmp:
        generate(builtin_scenario("clutter"), tmp)
        dets = load_features(str(Path(tmp) / "features.txt"), load_detections(str(Path(tmp) / "det.txt")))
    timings = np.array(run_sequence(dets).timings_ms)
    print(f"\ntracker step on clutter: mean {timings.mean():.3f} ms, "
          f"p95 {np.percentile(timings, 95):.3f} ms, max {timings.max():.3f} ms "
          f"over {len(timings)} frames")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    bench_kernels(args.repeat)
    bench_tracker()


if __name__ == "__main__":
    main()
