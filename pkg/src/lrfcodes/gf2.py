"""Dense GF(2) elimination on XOR constraint systems.

Used by the precode residual solver after peeling stalls. Coefficients are a
dense uint8 matrix over the unknown columns only; right-hand sides are symbol
payloads carried as big integers so row operations are single XORs.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def solve_partial(rows, unknowns):
    """Solve XOR equations for as many unknowns as the system determines.

    Args:
        rows: iterable of ``(unknown_indices, rhs_int)``; each equation says
            the XOR of those unknowns equals ``rhs_int``.
        unknowns: the unknown indices, in any order.

    Returns:
        Mapping unknown index -> value for every unknown whose value the
        system pins down (pivot column with no free columns in its row).

    Raises:
        InvalidInputError: the system is inconsistent (a zero row with a
            non-zero right-hand side), which indicates corrupted input.
    """
    unknowns = list(unknowns)
    pos = {u: i for i, u in enumerate(unknowns)}
    nu = len(unknowns)
    eqs = [(idxs, rhs) for idxs, rhs in rows]
    nr = len(eqs)
    if nu == 0 or nr == 0:
        return {}

    A = np.zeros((nr, nu), dtype=np.uint8)
    rhs = [0] * nr
    for r, (idxs, value) in enumerate(eqs):
        for u in idxs:
            A[r, pos[u]] ^= 1
        rhs[r] = value

    pivot_of_col: dict[int, int] = {}
    pivot_row = 0
    for col in range(nu):
        hit = np.flatnonzero(A[pivot_row:, col])
        if hit.size == 0:
            continue
        src = pivot_row + int(hit[0])
        if src != pivot_row:
            A[[pivot_row, src]] = A[[src, pivot_row]]
            rhs[pivot_row], rhs[src] = rhs[src], rhs[pivot_row]
        # Eliminate everywhere else (full reduction, so determined rows
        # end up with a lone pivot plus free columns only).
        for r in np.flatnonzero(A[:, col]).tolist():
            if r != pivot_row:
                A[r] ^= A[pivot_row]
                rhs[r] ^= rhs[pivot_row]
        pivot_of_col[col] = pivot_row
        pivot_row += 1
        if pivot_row == nr:
            break

    for r in range(pivot_row, nr):
        if rhs[r] != 0 and not A[r].any():
            raise InvalidInputError("inconsistent XOR system")

    free = np.ones(nu, dtype=bool)
    for col in pivot_of_col:
        free[col] = False

    solved: dict[int, int] = {}
    for col, r in pivot_of_col.items():
        if not (A[r] & free).any():
            solved[unknowns[col]] = rhs[r]
    return solved


def rank(rows, unknowns) -> int:
    """GF(2) rank of the coefficient matrix over the given unknowns."""
    unknowns = list(unknowns)
    pos = {u: i for i, u in enumerate(unknowns)}
    nu = len(unknowns)
    eqs = list(rows)
    if nu == 0 or not eqs:
        return 0
    A = np.zeros((len(eqs), nu), dtype=np.uint8)
    for r, idxs in enumerate(eqs):
        for u in idxs:
            A[r, pos[u]] ^= 1
    rk = 0
    for col in range(nu):
        hit = np.flatnonzero(A[rk:, col])
        if hit.size == 0:
            continue
        src = rk + int(hit[0])
        if src != rk:
            A[[rk, src]] = A[[src, rk]]
        for r in np.flatnonzero(A[rk + 1:, col]).tolist():
            A[rk + 1 + r] ^= A[rk]
        rk += 1
        if rk == len(eqs):
            break
    return rk
