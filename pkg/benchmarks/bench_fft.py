"""Compare the compiled radix-2 kernel with the numpy fallback.

Usage: python benchmarks/bench_fft.py [--repeat 20]

Times the raw kernel on the layouts the model produces, the real transforms
built on top of it, and one full training step (forward, backward, Adam).
Both backends are also checked for bit-identical output.
"""
import argparse
import time

import numpy as np

from frets import _kernels_py
from frets import numeric as nm
from frets.model import ModelConfig, init_params, loss_and_grads
from frets.training import adam_init, adam_step


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(rng):
    # temporal layout (B*N, L, d), many short rows, one long row
    x_temporal = rng.standard_normal((128, 128, 16))
    x_rows = rng.standard_normal((4096, 64, 1))
    x_wide = rng.standard_normal((1, 4096, 1))
    x_real = rng.standard_normal((128, 256, 16))
    spec = nm.rfft(x_real, axis=1)
    return {
        "fft_pow2 (128, 128, 16)": lambda: nm._backend.fft_pow2(x_temporal, np.zeros_like(x_temporal)),
        "fft_pow2 (4096, 64, 1)": lambda: nm._backend.fft_pow2(x_rows, np.zeros_like(x_rows)),
        "fft_pow2 (1, 4096, 1)": lambda: nm._backend.fft_pow2(x_wide, np.zeros_like(x_wide)),
        "rfft axis=1 (128, 256, 16)": lambda: nm.rfft(x_real, axis=1),
        "irfft axis=1 (128, 129, 16)": lambda: nm.irfft(spec, 256, axis=1),
    }


def training_step(lookback):
    cfg = ModelConfig(channels=4, lookback=lookback, horizon=96, embed_dim=16, seed=0)
    params = init_params(cfg)
    rng = np.random.default_rng(1)
    X = rng.standard_normal((32, 4, lookback))
    Y = rng.standard_normal((32, 4, 96))
    state = adam_init(params)

    def step():
        _, grads = loss_and_grads(X, Y, params, cfg)
        adam_step(params, grads, state)

    return step


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)

    backends = nm.available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; only the python backend is available")

    rng = np.random.default_rng(0)
    benches = cases(rng)
    benches["train step L=128 (pow2 path)"] = training_step(128)
    benches["train step L=96 (direct path)"] = training_step(96)

    results = {}
    for name in backends:
        nm.set_backend(name)
        results[name] = {label: best_of(fn, args.repeat) for label, fn in benches.items()}

    header = f"{'case':34s}" + "".join(f"{b:>12s}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for label in benches:
        row = f"{label:34s}" + "".join(f"{results[b][label] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{results['python'][label] / results['cython'][label]:9.2f}x"
        print(row)

    if len(backends) == 2:
        x = rng.standard_normal((64, 256, 8))
        y = rng.standard_normal((64, 256, 8))
        nm.set_backend("cython")
        a = nm._backend.fft_pow2(x, y)
        b = _kernels_py.fft_pow2(x, y)
        same = all(np.array_equal(p, q) for p, q in zip(a, b))
        print(f"bit-identical output: {same}")


if __name__ == "__main__":
    main()
