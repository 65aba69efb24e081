"""Guaranteed reachability against an adversarial spawner."""

from __future__ import annotations

import dataclasses
import itertools
import sys
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from . import engine
from .engine import Board, Caps, ConfigGoal, Goal, MergeGoal, Turn
from .indexer import CountTable
from .layerstore import Payload
from .sweep import LayerDB, SolveConfig, SolveStats, solve


class ReachDB(LayerDB):
    """Solved reachability run: one bit per position, 1 = player wins."""

    def query(self, board: Board, turn: Turn) -> bool:
        return bool(self.lookup(board, turn))

    @property
    def start_wins(self) -> bool:
        """Verdict for the empty board with the computer to move."""
        return self.query(Board.empty(self.caps.rows, self.caps.cols), Turn.COMPUTER)


def solve_reach(config: SolveConfig) -> tuple[ReachDB, SolveStats]:
    config = dataclasses.replace(config, payload=Payload.BIT)
    stats = solve(config)
    return ReachDB(config.out), stats


def query_reach(db: ReachDB, board: Board, turn: Turn) -> bool:
    return db.query(board, turn)


@dataclass
class StartReport:
    starts: list[tuple[Board, bool]]

    @property
    def total(self) -> int:
        return len(self.starts)

    @property
    def wins(self) -> int:
        return sum(w for _, w in self.starts)

    @property
    def all_win(self) -> bool:
        return self.wins == self.total


def two_tile_starts(rows: int, cols: int) -> list[Board]:
    n = rows * cols
    out = []
    for i, j in itertools.combinations(range(n), 2):
        for a, b in itertools.product((1, 2), repeat=2):
            cells = [0] * n
            cells[i], cells[j] = a, b
            out.append(Board(rows, cols, tuple(cells)))
    return out


def evaluate_two_tile_starts(db: ReachDB) -> StartReport:
    """Every player-to-move board holding exactly two tiles from {2, 4}."""
    res = []
    for b in two_tile_starts(db.caps.rows, db.caps.cols):
        if isinstance(db.goal, MergeGoal) and max(b.cells) >= db.goal.exponent:
            res.append((b, True))
        elif not engine.within_caps(b, db.caps):
            res.append((b, False))
        else:
            res.append((b, db.query(b, Turn.PLAYER)))
    return StartReport(res)


@dataclass
class MaxTileResult:
    rows: int
    cols: int
    tile: int
    exact: bool
    verdicts: dict[int, bool]


def max_guaranteed_tile(rows: int, cols: int, workdir: str | Path | None = None,
                        max_positions: int = 50_000_000, workers: int = 1,
                        max_goal: int = 1 << 15) -> MaxTileResult:
    """Largest tile reachable against every spawn sequence, with caps T/2.

    Goals double from 4 until a run loses.  If the next run would exceed
    ``max_positions`` positions per turn, the result is a lower bound and
    ``exact`` is False.
    """
    verdicts: dict[int, bool] = {}
    best = 2  # the first spawn is already a 2 or a 4
    tmp = None
    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="maxtile")
        workdir = tmp.name
    try:
        goal = 4
        while goal <= max_goal:
            caps = Caps.uniform(rows, cols, goal // 2)
            table = CountTable(caps)
            size = sum(table.layer_size(s) for s in table.sums())
            if size > max_positions:
                return MaxTileResult(rows, cols, best, False, verdicts)
            out = Path(workdir) / f"reach_{rows}x{cols}_T{goal}"
            db, _ = solve_reach(SolveConfig(caps, MergeGoal(goal), out, workers=workers))
            verdicts[goal] = db.start_wins
            if not db.start_wins:
                return MaxTileResult(rows, cols, best, True, verdicts)
            best = goal
            goal *= 2
        return MaxTileResult(rows, cols, best, False, verdicts)
    finally:
        if tmp is not None:
            tmp.cleanup()


def minimax_oracle(caps: Caps, goal: Goal):
    """Memoised min-max over the raw game graph (no layers, no indexing).

    Returns ``value(board, turn) -> bool``.
    """
    limit = caps.max_sum + 100
    if sys.getrecursionlimit() < 4 * limit:
        sys.setrecursionlimit(4 * limit)

    @lru_cache(maxsize=None)
    def player(cells: tuple[int, ...]) -> bool:
        b = Board(caps.rows, caps.cols, cells)
        if engine.goal_reached(b, goal):
            return True
        for d in engine.Direction:
            after = engine.swipe(b, d)
            if after is None:
                continue
            if isinstance(goal, ConfigGoal) and engine.goal_config_reached(after, goal):
                return True
            if engine.within_caps(after, caps) and computer(after.cells):
                return True
        return False

    @lru_cache(maxsize=None)
    def computer(cells: tuple[int, ...]) -> bool:
        b = Board(caps.rows, caps.cols, cells)
        empties = b.empties()
        if not empties:
            return False
        for i in empties:
            for v in (2, 4):
                e = v.bit_length() - 1
                if isinstance(goal, MergeGoal) and v >= goal.tile:
                    continue
                if e > caps.exps[i]:
                    return False
                if not player(engine.spawn(b, divmod(i, caps.cols), v).cells):
                    return False
        return True

    def value(board: Board, turn: Turn) -> bool:
        return player(board.cells) if turn == Turn.PLAYER else computer(board.cells)

    return value
