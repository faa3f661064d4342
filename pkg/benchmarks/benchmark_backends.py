#!/usr/bin/env python3
"""Compare the compiled kernel extension against the pure-Python fallback.

Times the raw kernels (matmul, LSTM-sized elementwise chains) and one full
training batch on a small copy-task model, then prints a side-by-side table.
Run from a source checkout after `python setup.py build_ext --inplace`:

    python benchmarks/benchmark_backends.py
"""

import os
import random
import sys
import time
from array import array

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from seq2seq.backend import get_kernels  # noqa: E402


def timeit(fn, min_time=0.2, max_rounds=10000):
    fn()  # warm up
    start = time.perf_counter()
    rounds = 0
    while time.perf_counter() - start < min_time and rounds < max_rounds:
        fn()
        rounds += 1
    return (time.perf_counter() - start) / max(rounds, 1)


def rand_arr(n, seed):
    rng = random.Random(seed)
    return array("d", [rng.uniform(-1, 1) for _ in range(n)])


def kernel_benchmarks(kern):
    m, n, k = 32, 256, 64  # one LSTM gate block: batch x 4H x H
    a, b = rand_arr(m * k, 1), rand_arr(n * k, 2)
    out = array("d", bytes(8 * m * n))
    yield "matmul_nt 32x64 @ 256x64^T", timeit(
        lambda: kern.matmul_nt(m, n, k, a, b, out))
    size = 32 * 256
    x = rand_arr(size, 3)
    y = array("d", bytes(8 * size))
    yield "sigmoid 32x256", timeit(lambda: kern.sigmoid(size, x, y))
    rows, cols = 32, 1000
    lg = rand_arr(rows * cols, 4)
    lo = array("d", bytes(8 * rows * cols))
    yield "log_softmax 32x1000", timeit(
        lambda: kern.log_softmax_rows(rows, cols, lg, lo))


def batch_benchmark(backend_name):
    env = os.environ.copy()
    # run in a subprocess so the backend choice is fixed at import time
    import subprocess

    code = r"""
import time
from seq2seq.tasks import TaskSpec, generate
from seq2seq.model import ModelConfig, init_params, batch_loss_and_grads
from seq2seq.training import bucket_batches
train_c, _ = generate(TaskSpec("copy", 20, 1, 8, 400, seed=1))
model = init_params(ModelConfig(2, 64, 32), train_c.src_vocab, train_c.tgt_vocab, 0)
batch = bucket_batches(train_c.pairs, 32, 4, seed=1)[0]
batch_loss_and_grads(model, batch)  # warm up
start = time.perf_counter()
rounds = 3
for _ in range(rounds):
    batch_loss_and_grads(model, batch)
print((time.perf_counter() - start) / rounds)
"""
    env["SEQ2SEQ_BACKEND"] = backend_name
    env["PYTHONPATH"] = os.pathsep.join(
        [os.path.join(os.path.dirname(__file__), "..", "src"),
         env.get("PYTHONPATH", "")])
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    backends = {}
    for name in ("python", "c"):
        try:
            backends[name] = get_kernels(name)
        except ImportError:
            print(f"backend {name!r} unavailable, skipping")
    rows = []
    names = list(backends)
    results = {name: dict(kernel_benchmarks(kern))
               for name, kern in backends.items()}
    for label in results[names[0]]:
        rows.append([label] + [results[name][label] for name in names])
    print(f"{'benchmark':<32}" + "".join(f"{name:>14}" for name in names)
          + ("     speedup" if len(names) == 2 else ""))
    for row in rows:
        line = f"{row[0]:<32}"
        for value in row[1:]:
            line += f"{value * 1e6:>12.1f}us"
        if len(row) == 3:
            line += f"{row[1] / row[2]:>11.1f}x"
        print(line)

    print()
    batch_rows = {}
    for name in names:
        batch_rows[name] = batch_benchmark(name)
        print(f"training batch (copy task, B=32, 2x64): "
              f"{name:<7} {batch_rows[name] * 1e3:9.1f} ms")
    if len(names) == 2:
        print(f"training-batch speedup: "
              f"{batch_rows['python'] / batch_rows['c']:.1f}x")


if __name__ == "__main__":
    main()
