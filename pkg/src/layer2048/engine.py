"""Board representation and 2048 move rules.

Boards store cell *exponents*: 0 is an empty cell and ``e`` is the tile
``2**e``.  Everything here comes in two flavours: scalar functions on
:class:`Board` (used by oracles, the lemma policy and the CLI) and
vectorised kernels on ``(N, rows*cols)`` int8 arrays (used by the layer
solvers).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_EXPONENT = 15


class Direction(enum.IntEnum):
    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3


class Turn(enum.IntEnum):
    PLAYER = 0
    COMPUTER = 1


@dataclass(frozen=True)
class Board:
    rows: int
    cols: int
    cells: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"bad board shape {self.rows}x{self.cols}")
        if len(self.cells) != self.rows * self.cols:
            raise ValueError("cell count does not match shape")
        for e in self.cells:
            if not 0 <= e <= MAX_EXPONENT:
                raise ValueError(f"exponent {e} out of range")

    @classmethod
    def empty(cls, rows: int, cols: int) -> Board:
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def from_values(cls, grid: Sequence[Sequence[int]]) -> Board:
        """Build a board from tile values (0 for empty), e.g. ``[[2, 0], [0, 4]]``."""
        rows = len(grid)
        cols = len(grid[0]) if rows else 0
        cells = []
        for row in grid:
            if len(row) != cols:
                raise ValueError("ragged rows")
            cells.extend(exponent_of(v) for v in row)
        return cls(rows, cols, tuple(cells))

    def value(self, r: int, c: int) -> int:
        """Tile value at 0-based ``(r, c)``."""
        e = self.cells[r * self.cols + c]
        return 1 << e if e else 0

    def values(self) -> list[list[int]]:
        return [[self.value(r, c) for c in range(self.cols)] for r in range(self.rows)]

    def empties(self) -> list[int]:
        return [i for i, e in enumerate(self.cells) if e == 0]

    def __str__(self) -> str:
        return render_board(self)


@dataclass(frozen=True)
class Caps:
    """Per-cell maximum tile exponent (inclusive)."""

    rows: int
    cols: int
    exps: tuple[int, ...]

    def __post_init__(self):
        if len(self.exps) != self.rows * self.cols:
            raise ValueError("cap count does not match shape")
        for e in self.exps:
            if not 1 <= e <= MAX_EXPONENT:
                raise ValueError(f"cap exponent {e} out of range")

    @classmethod
    def uniform(cls, rows: int, cols: int, tile: int) -> Caps:
        return cls(rows, cols, (exponent_of(tile),) * (rows * cols))

    @classmethod
    def from_values(cls, grid: Sequence[Sequence[int]]) -> Caps:
        b = Board.from_values(grid)
        return cls(b.rows, b.cols, b.cells)

    @property
    def max_sum(self) -> int:
        return sum(1 << e for e in self.exps)

    def values(self) -> list[list[int]]:
        return [[1 << self.exps[r * self.cols + c] for c in range(self.cols)]
                for r in range(self.rows)]


@dataclass(frozen=True)
class MergeGoal:
    """Win once a swipe can produce a tile of at least ``tile``."""

    tile: int

    def __post_init__(self):
        if self.tile < 4 or self.tile & (self.tile - 1):
            raise ValueError(f"goal tile must be a power of two >= 4, got {self.tile}")

    @property
    def exponent(self) -> int:
        return self.tile.bit_length() - 1


@dataclass(frozen=True)
class ConfigGoal:
    """Win once every listed ``(cell_index, exponent)`` is on the board."""

    required: tuple[tuple[int, int], ...]

    def __post_init__(self):
        cells = [c for c, _ in self.required]
        if len(set(cells)) != len(cells):
            raise ValueError("goal configuration cells must be distinct")

    @classmethod
    def from_tiles(cls, cols: int, tiles: Iterable[tuple[int, int, int]]) -> ConfigGoal:
        """``tiles`` holds 1-based ``(row, col, value)`` triples."""
        return cls(tuple(((r - 1) * cols + (c - 1), exponent_of(v)) for r, c, v in tiles))


Goal = MergeGoal | ConfigGoal


def exponent_of(value: int) -> int:
    if value == 0:
        return 0
    if value < 2 or value & (value - 1):
        raise ValueError(f"{value} is not a tile value")
    e = value.bit_length() - 1
    if e > MAX_EXPONENT:
        raise ValueError(f"tile {value} too large")
    return e


# --- scalar rules -----------------------------------------------------------

def _line_indices(rows: int, cols: int, direction: Direction) -> list[list[int]]:
    """Cell indices of every line, ordered from the destination edge outward."""
    if direction == Direction.LEFT:
        return [[r * cols + c for c in range(cols)] for r in range(rows)]
    if direction == Direction.RIGHT:
        return [[r * cols + c for c in reversed(range(cols))] for r in range(rows)]
    if direction == Direction.UP:
        return [[r * cols + c for r in range(rows)] for c in range(cols)]
    return [[r * cols + c for r in reversed(range(rows))] for c in range(cols)]


def slide_line(line: Sequence[int]) -> list[int]:
    """Slide exponents toward index 0, merging equal neighbours once."""
    out: list[int] = []
    mergeable = False
    for e in line:
        if not e:
            continue
        if mergeable and out[-1] == e:
            out[-1] += 1
            mergeable = False
        else:
            out.append(e)
            mergeable = True
    return out + [0] * (len(line) - len(out))


def swipe(board: Board, direction: Direction) -> Board | None:
    """Result of a swipe, or None when it changes nothing (illegal move)."""
    cells = list(board.cells)
    for idx in _line_indices(board.rows, board.cols, direction):
        for i, e in zip(idx, slide_line([board.cells[i] for i in idx])):
            cells[i] = e
    out = tuple(cells)
    if out == board.cells:
        return None
    return Board(board.rows, board.cols, out)


def legal_moves(board: Board) -> set[Direction]:
    return {d for d in Direction if swipe(board, d) is not None}


def spawn(board: Board, cell: tuple[int, int], value: int) -> Board:
    """Place a 2 or 4 on the empty 0-based ``(row, col)``."""
    if value not in (2, 4):
        raise ValueError(f"spawned tile must be 2 or 4, got {value}")
    r, c = cell
    i = r * board.cols + c
    if board.cells[i]:
        raise ValueError(f"cell {cell} is occupied")
    cells = list(board.cells)
    cells[i] = exponent_of(value)
    return Board(board.rows, board.cols, tuple(cells))


def board_sum(board: Board) -> int:
    return sum(1 << e for e in board.cells if e)


def goal_merge_reached(board: Board, tile: int) -> bool:
    target = exponent_of(tile)
    for d in Direction:
        after = swipe(board, d)
        if after is not None and max(after.cells) >= target:
            return True
    return False


def goal_config_reached(board: Board, goal: ConfigGoal) -> bool:
    return all(board.cells[i] == e for i, e in goal.required)


def goal_reached(board: Board, goal: Goal) -> bool:
    if isinstance(goal, MergeGoal):
        return goal_merge_reached(board, goal.tile)
    return goal_config_reached(board, goal)


def within_caps(board: Board, caps: Caps) -> bool:
    if (board.rows, board.cols) != (caps.rows, caps.cols):
        raise ValueError("board and caps shapes differ")
    return all(e <= c for e, c in zip(board.cells, caps.exps))


# --- text formats -------------------------------------------------------------

def parse_board(text: str) -> Board:
    """Parse ``2,0,4;0,0,0`` style boards (rows split by ``;``)."""
    grid = []
    for r, row in enumerate(text.strip().split(";")):
        cells = []
        for c, tok in enumerate(row.split(",")):
            tok = tok.strip()
            try:
                v = int(tok)
                exponent_of(v)
            except ValueError:
                raise ValueError(f"cell ({r + 1},{c + 1}): {tok!r} is not a tile value") from None
            cells.append(v)
        if grid and len(cells) != len(grid[0]):
            raise ValueError(f"row {r + 1}: ragged row ({len(cells)} cells, expected {len(grid[0])})")
        grid.append(cells)
    return Board.from_values(grid)


def render_board(board: Board) -> str:
    return ";".join(",".join(str(v) for v in row) for row in board.values())


def parse_caps(text: str) -> Caps:
    """Caps file: one line per row of space-separated tile values."""
    grid = [[int(t) for t in line.split()] for line in text.splitlines() if line.strip()]
    if len({len(r) for r in grid}) != 1:
        raise ValueError("ragged caps rows")
    return Caps.from_values(grid)


def render_caps(caps: Caps) -> str:
    return "\n".join(" ".join(str(v) for v in row) for row in caps.values()) + "\n"


def parse_goal_config(text: str, cols: int) -> ConfigGoal:
    """Goal configuration file: lines ``r c value`` with 1-based coordinates."""
    tiles = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            r, c, v = (int(t) for t in line.split())
            tiles.append((r, c, v))
    return ConfigGoal.from_tiles(cols, tiles)


# --- vectorised kernels -------------------------------------------------------

def line_index_array(rows: int, cols: int, direction: Direction) -> np.ndarray:
    return np.asarray(_line_indices(rows, cols, direction), dtype=np.intp)


def slide_lines(lines: np.ndarray) -> np.ndarray:
    """Vectorised :func:`slide_line` over an ``(M, L)`` exponent array."""
    m, length = lines.shape
    out = np.zeros_like(lines)
    pos = np.full(m, -1, dtype=np.intp)
    last = np.zeros(m, dtype=lines.dtype)  # value of the last tile if it may still merge
    rows = np.arange(m)
    for j in range(length):
        v = lines[:, j]
        nz = v != 0
        merge = nz & (last == v)
        out[rows[merge], pos[merge]] += 1
        last[merge] = 0
        place = nz & ~merge
        pos[place] += 1
        out[rows[place], pos[place]] = v[place]
        last[place] = v[place]
    return out


def swipe_many(cells: np.ndarray, rows: int, cols: int,
               direction: Direction) -> tuple[np.ndarray, np.ndarray]:
    """Swipe every board in an ``(N, rows*cols)`` array.

    Returns the resulting boards and a boolean mask of legal (changing) swipes.
    """
    idx = line_index_array(rows, cols, direction)
    n = cells.shape[0]
    lines = cells[:, idx].reshape(-1, idx.shape[1])
    slid = slide_lines(lines).reshape(n, *idx.shape)
    out = np.empty_like(cells)
    out[:, idx] = slid
    legal = np.any(out != cells, axis=1)
    return out, legal


def board_sums(cells: np.ndarray) -> np.ndarray:
    vals = np.where(cells > 0, np.left_shift(1, cells.astype(np.int64)), 0)
    return vals.sum(axis=1)
