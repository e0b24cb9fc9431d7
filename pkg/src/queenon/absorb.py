"""Completion of a partial configuration by absorbers.

A queen ``(x, y)`` absorbs the uncovered pair ``(c, r)`` (column ``c``, row
``r``) when ``(c, r)`` and ``(x, y)`` share no diagonal and the four
diagonals through ``(c, y)`` and ``(x, r)`` are all free.  Replacing
``(x, y)`` by ``(c, y)`` and ``(x, r)`` then covers row ``r`` and column
``c`` without breaking the configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .board import BoardError, BoardState, Position

__all__ = [
    "AbsorbError",
    "AbsorberSet",
    "CompletionResult",
    "uncovered",
    "is_absorber",
    "find_absorbers",
    "absorb_step",
    "undo_step",
    "complete",
    "pair_absorber_counts",
    "absorber_counts",
    "absorbing_number",
]


class AbsorbError(BoardError):
    pass


@dataclass(frozen=True)
class AbsorberSet:
    target: Position
    absorbers: list

    def __len__(self) -> int:
        return len(self.absorbers)

    def __contains__(self, q) -> bool:
        return Position(*q) in self.absorbers


def uncovered(state: BoardState) -> tuple[list[int], list[int]]:
    """Free rows and free columns, each ascending."""
    return state.uncovered()


def _check_target(state: BoardState, c: int, r: int) -> None:
    if not (1 <= c <= state.n and 1 <= r <= state.n):
        raise AbsorbError(f"target ({c}, {r}) outside the board")
    if state.row_occ[r] or state.col_occ[c]:
        raise AbsorbError(f"target ({c}, {r}) needs a free row and a free column")


def is_absorber(state: BoardState, target, queen) -> bool:
    """Both absorber conditions, checked with the occupancy flags."""
    c, r = target
    x, y = queen
    if c + r == x + y or c - r == x - y:
        return False
    return (
        state.plus_free(c + y)
        and state.minus_free(y - c)
        and state.plus_free(x + r)
        and state.minus_free(r - x)
    )


def find_absorbers(state: BoardState, target) -> AbsorberSet:
    """All absorbers of ``target`` in lexicographic ``(x, y)`` order."""
    c, r = target
    _check_target(state, c, r)
    hits = [q for q in sorted(state.queens) if is_absorber(state, (c, r), q)]
    return AbsorberSet(Position(c, r), hits)


def absorb_step(state: BoardState, target, absorber) -> BoardState:
    """Replace ``absorber`` by the two squares covering ``target`` (in place)."""
    c, r = target
    x, y = absorber
    _check_target(state, c, r)
    if Position(x, y) not in state.queens:
        raise AbsorbError(f"({x}, {y}) is not a queen")
    if not is_absorber(state, (c, r), (x, y)):
        raise AbsorbError(f"({x}, {y}) does not absorb ({c}, {r})")
    state.remove(x, y)
    state.place(c, y)
    state.place(x, r)
    return state


def undo_step(state: BoardState, target, absorber) -> BoardState:
    """Inverse of :func:`absorb_step` (in place)."""
    c, r = target
    x, y = absorber
    state.remove(c, y)
    state.remove(x, r)
    state.place(x, y)
    return state


@dataclass
class CompletionResult:
    success: bool
    state: BoardState
    steps: list = field(default_factory=list)  # (target, absorber) pairs
    abort_index: int | None = None  # 1-based index of the failing pair
    failed_target: tuple | None = None
    snapshot: list | None = None  # queens at the moment of the abort

    @property
    def config(self) -> list[tuple[int, int]]:
        return self.state.config()

    def to_json(self) -> dict:
        out = {
            "success": self.success,
            "n": self.state.n,
            "queens": [list(q) for q in self.config],
            "steps": [[list(t), list(a)] for t, a in self.steps],
        }
        if not self.success:
            out["abort_index"] = self.abort_index
            out["failed_target"] = list(self.failed_target)
            out["snapshot"] = [list(q) for q in self.snapshot]
        return out


def pair_absorber_counts(state: BoardState, pairs) -> np.ndarray:
    """``|B_Q(c, r)|`` for each listed ``(c, r)`` pair."""
    if not pairs or not state.queens:
        return np.zeros(len(pairs), dtype=np.int64)
    n = state.n
    q = np.array(sorted(state.queens), dtype=np.int64)
    X, Y = q[:, 0], q[:, 1]
    pc = np.asarray(pairs, dtype=np.int64)
    c, r = pc[:, :1], pc[:, 1:]
    plus = np.frombuffer(state.plus_occ, dtype=np.uint8)
    minus = np.frombuffer(state.minus_occ, dtype=np.uint8)
    ok = (
        (plus[c + Y] == 0)
        & (minus[Y - c + n] == 0)
        & (plus[X + r] == 0)
        & (minus[r - X + n] == 0)
        & (c + r != X + Y)
        & (c - r != X - Y)
    )
    return ok.sum(axis=1)


def _guided_choice(work: BoardState, target, found, rest):
    """Absorber leaving the remaining pairs with the most absorbers."""
    best, score = None, None
    for a in found:
        absorb_step(work, target, a)
        left = pair_absorber_counts(work, rest)
        undo_step(work, target, a)
        s = (int(left.min()), int(left.sum())) if len(left) else (0, 0)
        if score is None or s > score:
            best, score = a, s
    return best


POLICIES = ("first", "random", "guided")


def complete(state: BoardState, order_seed: int | None = None, policy: str = "first",
             rng: np.random.Generator | None = None) -> CompletionResult:
    """Absorb every uncovered (column, row) pair in turn.

    Free columns are matched to free rows in sorted order; ``order_seed``
    permutes the rows instead.  Policies:

    ``"first"``
        pairs in matching order, lexicographically smallest absorber.
    ``"random"``
        pairs in matching order, uniform absorber drawn from ``rng``.
    ``"guided"``
        the pair with the fewest absorbers next, and the absorber after
        which the remaining pairs keep the largest (minimum, total)
        absorber counts.

    The input board is not modified.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown absorber policy {policy!r}")
    if policy == "random" and rng is None:
        rng = np.random.default_rng(order_seed)
    work = state.copy()
    rows, cols = uncovered(work)
    if len(rows) != len(cols):
        raise AbsorbError("numbers of free rows and columns differ")
    if order_seed is not None:
        perm = np.random.default_rng(order_seed).permutation(len(rows))
        rows = [rows[i] for i in perm]
    pending = list(zip(cols, rows))
    result = CompletionResult(True, work)
    i = 0
    while pending:
        i += 1
        if policy == "guided":
            k = int(np.argmin(pair_absorber_counts(work, pending)))
        else:
            k = 0
        target = pending.pop(k)
        found = find_absorbers(work, target).absorbers
        if not found:
            result.success = False
            result.abort_index = i
            result.failed_target = target
            result.snapshot = work.config()
            return result
        if policy == "first":
            pick = found[0]
        elif policy == "random":
            pick = found[int(rng.integers(len(found)))]
        else:
            pick = _guided_choice(work, target, found, pending)
        absorb_step(work, target, pick)
        result.steps.append((tuple(target), tuple(pick)))
    return result


def absorber_counts(state: BoardState, cols=None, rows=None) -> np.ndarray:
    """``|B_Q(c, r)|`` for every free column ``c`` and free row ``r``.

    Returns an array indexed ``[column position, row position]``.  Counting is
    vectorised: free-diagonal indicators per (column, queen) and (row, queen)
    are multiplied, then queens sharing a diagonal with the target are removed.
    """
    if cols is None or rows is None:
        r0, c0 = uncovered(state)
        rows = r0 if rows is None else rows
        cols = c0 if cols is None else cols
    n = state.n
    cols = np.asarray(cols, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.int64)
    if state.queens and (cols.size and rows.size):
        q = np.array(sorted(state.queens), dtype=np.int64)
    else:
        return np.zeros((cols.size, rows.size), dtype=np.int64)
    X, Y = q[:, 0], q[:, 1]
    plus = np.frombuffer(state.plus_occ, dtype=np.uint8)
    minus = np.frombuffer(state.minus_occ, dtype=np.uint8)
    # column c with queen row y: square (c, y)
    pc = cols[:, None] + Y[None, :]
    mc = Y[None, :] - cols[:, None] + n
    A = (plus[pc] == 0) & (minus[mc] == 0)
    # row r with queen column x: square (x, r)
    pr = X[None, :] + rows[:, None]
    mr = rows[:, None] - X[None, :] + n
    B = (plus[pr] == 0) & (minus[mr] == 0)
    counts = A.astype(np.int64) @ B.T.astype(np.int64)
    # remove pairs where (c, r) shares a diagonal with the absorber; the two
    # diagonals never give the same r since (c, r) = (x, y) is impossible
    where = np.full(2 * n + 2, -1, dtype=np.int64)
    where[rows] = np.arange(rows.size)
    for k in range(len(X)):
        ca = np.nonzero(A[:, k])[0]
        if ca.size == 0:
            continue
        c = cols[ca]
        for r in (X[k] + Y[k] - c, c - X[k] + Y[k]):
            pos = where[np.clip(r, 0, 2 * n + 1)]
            ok = (r >= 1) & (r <= n) & (pos >= 0)
            ok[ok] &= B[pos[ok], k]
            counts[ca[ok], pos[ok]] -= 1
    return counts


def absorbing_number(state: BoardState, targets="all") -> int | None:
    """Minimum ``|B_Q(c, r)|`` over ``targets``.

    ``"all"`` uses every free (column, row) pair.  Returns ``None`` when there
    are no targets.
    """
    if isinstance(targets, str):
        if targets != "all":
            raise ValueError("targets must be 'all' or a list of (c, r) pairs")
        rows, cols = uncovered(state)
        if not rows or not cols:
            return None
        return int(absorber_counts(state, cols, rows).min())
    targets = list(targets)
    if not targets:
        return None
    return min(len(find_absorbers(state, t)) for t in targets)
