"""Mutable n x n board with constant-time line bookkeeping.

Positions are 1-based ``(x, y)`` pairs: ``x`` is the column, ``y`` the row.
Plus-diagonals are keyed by ``x + y`` and minus-diagonals by ``y - x``.
"""

from __future__ import annotations

import json
from typing import Iterable, NamedTuple

import numpy as np

from .queenon import cell_geometry, cell_index_map

__all__ = [
    "Position",
    "BoardError",
    "BoardState",
    "BoardPartition",
    "new_board",
    "dumps_config",
    "loads_config",
    "from_columns",
    "is_valid_configuration",
]


class Position(NamedTuple):
    x: int
    y: int


class BoardError(ValueError):
    pass


class BoardState:
    """A partial n-queens configuration.

    ``row_occ[y]``, ``col_occ[x]``, ``plus_occ[x + y]`` and
    ``minus_occ[y - x + n]`` are 1 exactly when a queen sits on that line.
    """

    __slots__ = ("n", "queens", "row_occ", "col_occ", "plus_occ", "minus_occ")

    def __init__(self, n: int):
        if n < 1:
            raise BoardError(f"board size must be positive, got {n}")
        self.n = n
        self.queens: set[Position] = set()
        self.row_occ = bytearray(n + 1)
        self.col_occ = bytearray(n + 1)
        self.plus_occ = bytearray(2 * n + 1)
        self.minus_occ = bytearray(2 * n)

    @classmethod
    def from_queens(cls, n: int, queens: Iterable) -> "BoardState":
        state = cls(n)
        for x, y in queens:
            state.place(x, y)
        return state

    def copy(self) -> "BoardState":
        other = BoardState.__new__(BoardState)
        other.n = self.n
        other.queens = set(self.queens)
        other.row_occ = bytearray(self.row_occ)
        other.col_occ = bytearray(self.col_occ)
        other.plus_occ = bytearray(self.plus_occ)
        other.minus_occ = bytearray(self.minus_occ)
        return other

    def __len__(self) -> int:
        return len(self.queens)

    def __contains__(self, p) -> bool:
        return Position(*p) in self.queens

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoardState):
            return NotImplemented
        return (
            self.n == other.n
            and self.queens == other.queens
            and self.row_occ == other.row_occ
            and self.col_occ == other.col_occ
            and self.plus_occ == other.plus_occ
            and self.minus_occ == other.minus_occ
        )

    def __repr__(self) -> str:
        return f"BoardState(n={self.n}, queens={sorted(self.queens)})"

    def _check(self, x: int, y: int) -> None:
        if not (1 <= x <= self.n and 1 <= y <= self.n):
            raise BoardError(f"position ({x}, {y}) outside the {self.n}x{self.n} board")

    def is_available(self, x: int, y: int) -> bool:
        self._check(x, y)
        return not (
            self.row_occ[y]
            or self.col_occ[x]
            or self.plus_occ[x + y]
            or self.minus_occ[y - x + self.n]
        )

    def plus_free(self, c: int) -> bool:
        return 2 <= c <= 2 * self.n and not self.plus_occ[c]

    def minus_free(self, d: int) -> bool:
        return -self.n < d < self.n and not self.minus_occ[d + self.n]

    def place(self, x: int, y: int) -> "BoardState":
        if not self.is_available(x, y):
            raise BoardError(f"({x}, {y}) is not available")
        self.queens.add(Position(x, y))
        self.row_occ[y] = 1
        self.col_occ[x] = 1
        self.plus_occ[x + y] = 1
        self.minus_occ[y - x + self.n] = 1
        return self

    def remove(self, x: int, y: int) -> "BoardState":
        p = Position(x, y)
        if p not in self.queens:
            raise BoardError(f"no queen at ({x}, {y})")
        self.queens.remove(p)
        self.row_occ[y] = 0
        self.col_occ[x] = 0
        self.plus_occ[x + y] = 0
        self.minus_occ[y - x + self.n] = 0
        return self

    def available_in_region(self, cell: int, partition: "BoardPartition") -> list[Position]:
        """Available positions of one cell of ``partition``, row-major."""
        if partition.n != self.n:
            raise BoardError("partition was built for a different board size")
        if not 0 <= cell < partition.n_cells:
            raise BoardError(f"invalid cell id {cell}")
        xs, ys = partition.positions(cell)
        return [Position(x, y) for x, y in zip(xs.tolist(), ys.tolist()) if self.is_available(x, y)]

    def config(self) -> list[tuple[int, int]]:
        return sorted((q.x, q.y) for q in self.queens)

    def check_invariants(self) -> None:
        """Recompute every flag from the queen set; raise on mismatch."""
        n = self.n
        fresh = BoardState(n)
        for q in self.queens:
            fresh.place(q.x, q.y)
        if fresh != self:
            raise AssertionError("occupancy flags disagree with the queen set")

    def uncovered(self) -> tuple[list[int], list[int]]:
        rows = [y for y in range(1, self.n + 1) if not self.row_occ[y]]
        cols = [x for x in range(1, self.n + 1) if not self.col_occ[x]]
        return rows, cols


def new_board(n: int) -> BoardState:
    return BoardState(n)


class BoardPartition:
    """The partition ``{alpha_n}`` of an ``n`` board into ``I_N`` cells."""

    def __init__(self, n: int, N: int):
        self.n = n
        self.n_steps = N
        self.geometry = cell_geometry(N)
        self.cell_of = cell_index_map(n, N)  # [x - 1, y - 1] -> cell
        x, y = np.indices((n, n)) + 1
        cells = self.cell_of.ravel()
        order = np.lexsort((x.ravel(), y.ravel(), cells))  # by cell, then row, then column
        self._xs = x.ravel()[order]
        self._ys = y.ravel()[order]
        self.sizes = np.bincount(cells, minlength=self.geometry.n_cells)
        self._start = np.concatenate([[0], np.cumsum(self.sizes)])

    @property
    def n_cells(self) -> int:
        return self.geometry.n_cells

    def positions(self, cell: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self._start[cell], self._start[cell + 1]
        return self._xs[a:b], self._ys[a:b]

    def cell(self, x: int, y: int) -> int:
        return int(self.cell_of[x - 1, y - 1])


def is_valid_configuration(queens, n: int, complete: bool = True) -> bool:
    qs = [tuple(q) for q in queens]
    if complete and len(qs) != n:
        return False
    try:
        BoardState.from_queens(n, qs)
    except BoardError:
        return False
    return True


def from_columns(cols) -> list[tuple[int, int]]:
    """Pairs ``(x, y)`` from a row-indexed column sequence ``cols[y - 1] = x``."""
    return sorted((int(x), y) for y, x in enumerate(cols, start=1))


def dumps_config(queens) -> str:
    """JSON array of ``[x, y]`` pairs sorted by ``x``."""
    return json.dumps([list(map(int, q)) for q in sorted(tuple(q) for q in queens)])


def loads_config(text: str) -> list[tuple[int, int]]:
    return sorted((int(x), int(y)) for x, y in json.loads(text))
