"""Pure-Python candidate enumeration (reference backend)."""

from itertools import combinations

FOUND, NONE, BUDGET = 1, 0, -1


def _passes(mask, row_masks, col_masks, need_masks):
    for r in row_masks:
        if not mask & r:
            return False
    for c in col_masks:
        hit = mask & c
        if hit & (hit - 1):
            return False
    for m in need_masks:
        if not mask & m:
            return False
    return True


def first_passing(n, row_masks, col_masks, need_masks, budget, kmin=0, kmax=None):
    if kmax is None:
        kmax = n
    row_masks, col_masks, need_masks = list(row_masks), list(col_masks), list(need_masks)
    examined = 0
    for k in range(max(kmin, 0), min(kmax, n) + 1):
        for combo in combinations(range(n), k):
            if examined >= budget:
                return BUDGET, 0, examined
            examined += 1
            mask = 0
            for c in combo:
                mask |= 1 << c
            if _passes(mask, row_masks, col_masks, need_masks):
                return FOUND, mask, examined
    return NONE, 0, examined
