"""Time the numba and numpy flavours of each hot kernel on realistic shapes.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both flavours are called directly, so ``MONOLAYER_NUMBA`` does not matter
here. The first numba call (JIT compile) is excluded from the timings.
"""
import argparse
import time

import numpy as np

from monolayer import kernels


def cases(rng):
    img = rng.random((224, 224))
    stack = rng.random((5 * 128, 28, 28))
    h, s, v = rng.random((3, 128 * 28 * 28))
    x = rng.random((128, 28, 28, 1))
    w = rng.normal(size=(3, 3, 1, 6))
    b = rng.normal(size=6)
    dout = rng.normal(size=(128, 28, 28, 6))
    return {
        "min_filter 224x224, 15": ("min_filter", (img, 15)),
        "window_mean 640x28x28, 7": ("window_mean", (stack, 7)),
        "hsv_to_rgb 100k px": ("hsv_to_rgb", (h, s, v)),
        "conv3x3 128x28x28x1 -> 6": ("conv3x3", (x, w, b)),
        "conv3x3 weight grad": ("conv3x3_weight_grad", (x, dout)),
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for label, (name, call_args) in cases(rng).items():
        nb, np_ = getattr(kernels, f"{name}_nb"), getattr(kernels, f"{name}_np")
        ref = np_(*call_args)
        got = nb(*call_args)  # compile
        for a, c in zip(ref if isinstance(ref, tuple) else (ref,), got if isinstance(got, tuple) else (got,)):
            assert np.allclose(a, c, atol=1e-9), label
        t_np, t_nb = best_of(np_, call_args, args.repeat), best_of(nb, call_args, args.repeat)
        print(f"{label:<28}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
