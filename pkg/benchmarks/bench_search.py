"""Compare the compiled and pure-Python transformer-search kernels.

    python3 benchmarks/bench_search.py [--rows 3] [--width 7] [--repeat 3]

The workload is an exhaustive search with no passing candidate, so both
kernels walk the entire size-pruned space.
"""

import argparse
import math
import time

from refinery import _kernels
from refinery._kernels import py_first_passing
from refinery.canonical import Answer, Unit
from refinery.core import FiniteType, Slot, SlotKind, make_operation
from refinery.refinement import search_output_transformer


def synthetic(rows, width):
    n = rows * width
    row_masks = [((1 << width) - 1) << (k * width) for k in range(rows)]
    col_masks = [sum(1 << (k * width + j) for k in range(rows)) for j in range(width)]
    # needs both bits of one column: impossible for an injective candidate
    need = [1, 1 << width]
    return n, row_masks, col_masks, need, rows, width


def timed(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def operations_pair(width):
    """A 2-answer operation against one with ``width`` distinct exhaust tags."""
    tags = FiniteType("Tag", tuple(f"t{k}" for k in range(width)))
    frame = [Slot("u", SlotKind.STATE, Unit), Slot("u", SlotKind.PRIMED, Unit)]
    aop = make_operation("A", frame + [Slot("a", SlotKind.OUTPUT, Answer)], [("u", "u", v) for v in Answer])
    cop = make_operation(
        "C", frame + [Slot("a", SlotKind.OUTPUT, Answer), Slot("e", SlotKind.OUTPUT, tags)],
        [("u", "u", v, t) for v in Answer for t in tags],
    )
    return aop, cop


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=3)
    ap.add_argument("--width", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    n, rows, cols, need, kmin, kmax = synthetic(args.rows, args.width)
    space = sum(math.comb(n, k) for k in range(kmin, kmax + 1))
    print(f"kernel backend: {_kernels.BACKEND}")
    print(f"synthetic: {n} pairs, {space} candidates")
    py_t, py_out = timed(lambda: py_first_passing(n, rows, cols, need, 10**12, kmin, kmax), args.repeat)
    print(f"  python  {py_t:8.3f}s  {space / py_t:12.0f} cand/s")
    if _kernels.c_first_passing is not None:
        c_t, c_out = timed(lambda: _kernels.c_first_passing(n, rows, cols, need, 10**12, kmin, kmax), args.repeat)
        assert c_out == py_out, (c_out, py_out)
        print(f"  cython  {c_t:8.3f}s  {space / c_t:12.0f} cand/s  ({py_t / c_t:.0f}x)")
    else:
        print("  cython  (extension not built)")

    aop, cop = operations_pair(3)
    t, ot = timed(lambda: search_output_transformer(aop, cop), args.repeat)
    print(f"end-to-end search ({_kernels.BACKEND}): {t * 1000:.2f} ms, found {len(ot.pairs)}-pair transformer")


if __name__ == "__main__":
    main()
