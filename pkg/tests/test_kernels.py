import itertools
import random

import pytest

from refinery import _kernels
from refinery._kernels import BUDGET, FOUND, NONE, py_first_passing

compiled = pytest.mark.skipif(_kernels.c_first_passing is None, reason="compiled kernel not built")


def random_problem(rng):
    rows, width = rng.randint(1, 3), rng.randint(1, 4)
    n = rows * width
    row_masks = [((1 << width) - 1) << (k * width) for k in range(rows)]
    col_masks = [sum(1 << (k * width + j) for k in range(rows)) for j in range(width)]
    need = []
    for _ in range(rng.randint(0, 4)):
        m = 0
        for b in range(n):
            if rng.random() < 0.3:
                m |= 1 << b
        need.append(m or 1)
    return n, row_masks, col_masks, need


def naive(n, row_masks, col_masks, need_masks):
    for k in range(n + 1):
        for combo in itertools.combinations(range(n), k):
            mask = sum(1 << c for c in combo)
            if (
                all(mask & r for r in row_masks)
                and all(bin(mask & c).count("1") <= 1 for c in col_masks)
                and all(mask & m for m in need_masks)
            ):
                return mask
    return None


@pytest.mark.parametrize("seed", range(200))
def test_python_kernel_matches_naive(seed):
    n, rows, cols, need = random_problem(random.Random(seed))
    status, mask, _ = py_first_passing(n, rows, cols, need, 10**7)
    expected = naive(n, rows, cols, need)
    assert (status, mask if status == FOUND else None) == (FOUND if expected is not None else NONE, expected)


@compiled
@pytest.mark.parametrize("seed", range(200))
def test_compiled_kernel_matches_python(seed):
    rng = random.Random(seed)
    n, rows, cols, need = random_problem(rng)
    kmin = rng.randint(0, min(2, n))
    kmax = rng.randint(kmin, n)
    budget = rng.choice([1, 5, 50, 10**6])
    args = (n, rows, cols, need, budget, kmin, kmax)
    assert _kernels.c_first_passing(*args) == py_first_passing(*args)


@pytest.mark.parametrize("impl", ["python", pytest.param("compiled", marks=compiled)])
def test_budget_exhaustion(impl):
    fn = py_first_passing if impl == "python" else _kernels.c_first_passing
    # no candidate satisfies an empty need mask list plus an impossible row
    status, mask, examined = fn(4, [0], [], [], 3, 0, 4)
    assert (status, mask, examined) == (BUDGET, 0, 3)
    status, _, examined = fn(4, [0], [], [], 100, 0, 4)
    assert (status, examined) == (NONE, 16)


@pytest.mark.parametrize("impl", ["python", pytest.param("compiled", marks=compiled)])
def test_empty_mask_first(impl):
    fn = py_first_passing if impl == "python" else _kernels.c_first_passing
    assert fn(3, [], [], [], 10, 0, 3) == (FOUND, 0, 1)


@compiled
def test_compiled_handles_63_pairs():
    n = 63
    need = [1 << 62]
    args = (n, [], [], need, 10**6, 0, n)
    assert _kernels.c_first_passing(*args) == py_first_passing(*args)


def test_dispatch_falls_back_above_63_pairs():
    n = 70
    status, mask, _ = _kernels.first_passing(n, [], [], [1 << 69], 10**6, 0, n)
    assert status == FOUND and mask == 1 << 69


def test_backend_name():
    assert _kernels.BACKEND in {"cython", "python"}
