"""Sound lower bounds on winning probability against the random spawner.

Probabilities are unsigned 32-bit numerators over 2**32.  Every operation
rounds down and certainty saturates at ``2**32 - 1``, so each stored word
is a proved lower bound on the true value.
"""

from __future__ import annotations

import dataclasses
import sys
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import engine
from .engine import Board, Caps, ConfigGoal, Goal, MergeGoal, Turn
from .layerstore import Payload
from .sweep import FULL, LayerDB, SolveConfig, SolveStats, combine_fixed, solve

SCALE = 1 << 32


def fp_combine_spawn(pairs: Iterable[tuple[int, int]], k: int) -> int:
    """Value of a computer node from per-empty-cell ``(raw2, raw4)`` words.

    >>> fp_combine_spawn([(FULL, 0)], 1)
    3865470565
    """
    pairs = list(pairs)
    if k < 1 or len(pairs) != k:
        raise ValueError("need one (raw2, raw4) pair per empty cell")
    total = sum(9 * a + b for a, b in pairs)
    return int(combine_fixed(np.array([total], dtype=np.uint64), np.array([k]))[0])


def to_fraction(raw: int) -> Fraction:
    return Fraction(int(raw), SCALE)


def render_decimal(raw: int, digits: int = 8) -> str:
    """Truncated decimal expansion of ``raw / 2**32`` (never rounded up)."""
    q = (int(raw) * 10 ** digits) >> 32
    return f"0.{q:0{digits}d}"


class ProbDB(LayerDB):
    def query(self, board: Board, turn: Turn) -> int | float:
        v = self.lookup(board, turn)
        return float(v) if self.payload == Payload.FLOAT64 else int(v)

    @property
    def start_bound(self) -> int | float:
        return self.query(Board.empty(self.caps.rows, self.caps.cols), Turn.COMPUTER)


def solve_prob(config: SolveConfig, unverified_float: bool = False) -> tuple[ProbDB, SolveStats]:
    kind = Payload.FLOAT64 if unverified_float else Payload.FIXED32
    config = dataclasses.replace(config, payload=kind)
    stats = solve(config)
    return ProbDB(config.out), stats


def query_prob(db: ProbDB, board: Board, turn: Turn) -> tuple[int, str]:
    """Stored word and its truncated decimal rendering."""
    raw = db.query(board, turn)
    if db.payload == Payload.FLOAT64:
        return raw, f"{raw:.8f} (unverified float)"
    return raw, render_decimal(raw)


class BudgetExceeded(RuntimeError):
    pass


def expectimax_oracle(caps: Caps, goal: Goal, budget: int = 10 ** 7):
    """Exact-rational value of the same recurrence, memoised, no rounding.

    Returns ``value(board, turn) -> Fraction``.
    """
    if sys.getrecursionlimit() < 4 * (caps.max_sum + 100):
        sys.setrecursionlimit(4 * (caps.max_sum + 100))
    seen = [0]

    def tick():
        seen[0] += 1
        if seen[0] > budget:
            raise BudgetExceeded(f"more than {budget} positions")

    @lru_cache(maxsize=None)
    def player(cells: tuple[int, ...]) -> Fraction:
        tick()
        b = Board(caps.rows, caps.cols, cells)
        if engine.goal_reached(b, goal):
            return Fraction(1)
        best = Fraction(0)
        for d in engine.Direction:
            after = engine.swipe(b, d)
            if after is None:
                continue
            if isinstance(goal, ConfigGoal) and engine.goal_config_reached(after, goal):
                return Fraction(1)
            if engine.within_caps(after, caps):
                best = max(best, computer(after.cells))
        return best

    @lru_cache(maxsize=None)
    def computer(cells: tuple[int, ...]) -> Fraction:
        tick()
        b = Board(caps.rows, caps.cols, cells)
        empties = b.empties()
        if not empties:
            return Fraction(0)
        total = Fraction(0)
        for i in empties:
            for v, w in ((2, Fraction(9, 10)), (4, Fraction(1, 10))):
                if isinstance(goal, MergeGoal) and v >= goal.tile:
                    total += w
                elif v.bit_length() - 1 <= caps.exps[i]:
                    total += w * player(engine.spawn(b, divmod(i, caps.cols), v).cells)
        return total / len(empties)

    def value(board: Board, turn: Turn) -> Fraction:
        return player(board.cells) if turn == Turn.PLAYER else computer(board.cells)

    return value
