"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Shapes match training (batch 64 of 8x8x3) plus a larger 256x256x3 image.
"""

import argparse
import timeit

import numpy as np

from glowgan import kernels


def cases(rng):
    for b, n in ((64, 192), (1, 256 * 256 * 3)):
        r = np.exp2(rng.uniform(-10, 6, (b, n)))
        factor = np.exp2(rng.normal(0, 0.5, b))
        beta = rng.uniform(0.4, 0.8, b)
        gamma = rng.uniform(0.7, 1.1, b)
        g = rng.normal(size=(b, n))
        tag = f"{b}x{n}"
        yield f"camera_forward {tag}", lambda m, r=r, f=factor, be=beta, ga=gamma: kernels.camera_forward(r, f, be, ga, impl=m)
        yield f"camera_vjp {tag}", lambda m, r=r, f=factor, be=beta, ga=gamma, g=g: kernels.camera_vjp(r, f, be, ga, g, impl=m)
    ldr = rng.uniform(0, 1, (256, 256, 3))
    yield "soft_mask 256x256", lambda m: kernels.soft_mask(ldr, 0.97, impl=m)
    stack = np.round(rng.uniform(0, 1, (5, 256 * 256 * 3)) * 255) / 255
    fac = np.exp2(np.arange(-2, 3, dtype=np.float64))
    yield "merge_stack 5x256x256", lambda m: kernels.merge_stack(stack, fac, 0.6, 0.9, 1 - 0.5 / 255, impl=m)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    impls = kernels.implementations()
    print(f"backend at import: {kernels.BACKEND}")
    print(f"{'kernel':28s}" + "".join(f"{k:>12s}" for k in impls) + ("    speedup" if len(impls) > 1 else ""))
    for name, fn in cases(np.random.default_rng(0)):
        ms = {}
        for k, m in impls.items():
            fn(m)  # warm up
            ms[k] = min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) * 1e3
        row = f"{name:28s}" + "".join(f"{ms[k]:10.3f}ms" for k in impls)
        if "cython" in ms:
            row += f"{ms['numpy'] / ms['cython']:10.1f}x"
        print(row)


if __name__ == "__main__":
    main()
