"""Compare the compiled kernel backend against the numpy fallback.

Times each low-level kernel on desk-scale shapes, then one full
training epoch with either backend swapped in.  Both backends return
bit-identical arrays, so the numbers are the whole story.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import statistics
import time

import numpy as np

import nvsr.backend as backend
from nvsr.backend import _pyref
from nvsr.models import ModelConfig, SRBConfig, SRModel
from nvsr.synth import make_synthetic_video
from nvsr.train import TrainSchedule, fit_video

try:
    from nvsr.backend import _core
except ImportError:
    _core = None


def _time(fn, repeats):
    fn()  # warmup, also primes any lazy allocation
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def kernel_cases(rng):
    """(label, impl -> callable) pairs covering every backend entry point."""
    small = rng.standard_normal((1, 16, 16, 32))
    mid = rng.standard_normal((1, 32, 32, 64))
    big = rng.standard_normal((1, 32, 64, 128))
    cols = _pyref.im2col(np.ascontiguousarray(big), 3, 3, 1, 1)
    shuf = rng.standard_normal((1, 64, 32, 64))
    rgb = rng.standard_normal((1, 3, 64, 128))
    rgb2x = rng.standard_normal((1, 3, 128, 256))
    return [
        ("im2col    k3 (1,16,16,32)", lambda m: m.im2col(small, 3, 3, 1, 1)),
        ("im2col    k3 (1,32,32,64)", lambda m: m.im2col(mid, 3, 3, 1, 1)),
        ("im2col    k3 (1,32,64,128)", lambda m: m.im2col(big, 3, 3, 1, 1)),
        ("col2im    k3 (1,32,64,128)", lambda m: m.col2im(cols, 32, 64, 128, 3, 3, 1, 1)),
        ("pixel_shuffle   r2 (1,64,32,64)", lambda m: m.pixel_shuffle(shuf, 2)),
        ("pixel_unshuffle r2 (1,3,128,256)", lambda m: m.pixel_unshuffle(rgb2x, 2)),
        ("upsample2x (1,3,64,128)", lambda m: m.upsample2x_nearest(rgb)),
        ("downsum2x  (1,3,128,256)", lambda m: m.downsum2x(rgb2x)),
    ]


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    cases = [(label, fn) for label, fn in kernel_cases(rng)]
    print(f"{'kernel':<34} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for label, fn in cases:
        t_py = _time(lambda: fn(_pyref), repeats)
        if _core is None:
            print(f"{label:<34} {'n/a':>10} {t_py * 1e3:>9.3f}ms {'':>8}")
            continue
        t_c = _time(lambda: fn(_core), repeats)
        print(f"{label:<34} {t_c * 1e3:>9.3f}ms {t_py * 1e3:>9.3f}ms {t_py / t_c:>7.1f}x")


def bench_epoch():
    """One sr-nerv epoch on a tiny clip, kernels swapped via the dispatcher."""
    clip = make_synthetic_video("gradient-drift", 2, 32, 64, 0)
    srb = SRBConfig(channels=8, num_res_blocks=1, scale=2)
    config = ModelConfig(variant="sr-nerv", base_width=8, strides=(2,),
                         output_hw=(32, 64), srb=srb)
    schedule = TrainSchedule(total_epochs=3, seed=0)
    block = SRModel(srb, np.random.default_rng(0))

    def run():
        fit_video(clip, config, schedule, pretrained_srb=block)

    impls = [("python", _pyref)] + ([("compiled", _core)] if _core else [])
    times = {}
    saved = backend._impl
    try:
        for name, impl in impls:
            backend._impl = impl
            t0 = time.perf_counter()
            run()
            times[name] = (time.perf_counter() - t0) / schedule.total_epochs
    finally:
        backend._impl = saved
    line = "  ".join(f"{k} {v * 1e3:.1f}ms/epoch" for k, v in times.items())
    print(f"\nsr-nerv tiny fit: {line}", end="")
    if len(times) == 2:
        print(f"  ({times['python'] / times['compiled']:.1f}x)", end="")
    print()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20, help="timed runs per kernel")
    args = parser.parse_args()
    print(f"active backend: {backend.BACKEND}"
          + ("" if _core else "  (compiled extension unavailable)"))
    bench_kernels(args.repeats)
    bench_epoch()


if __name__ == "__main__":
    main()
