"""Explicit strategy from the five-big-tile configuration to 2048, and a checker.

The configuration (1-based cells)::

    1024  512   .    .
     256  256  128   .
      .    .    .    .
      .    .    .    .

The strategy opens with Left (merging the 256s), then swipes Up while it
can and branches on how many tiles the first two rows hold:

* first row full: alternate Right/Left until the two 512s share a column,
  then Up and merge the 1024s;
* a "direct" row-count pattern: Right, Up, Right;
* a "loop" pattern: Right, then Left while possible, then start over.  The
  tile sum of rows 3-4 must grow from one loop iteration to the next.

Two readings of which row-count pattern is direct are supported; see
:data:`READINGS`.  :func:`check_lemma` is the arbiter.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field, replace

from . import engine
from .engine import Board, Caps, Direction

L, R, U, D = Direction.LEFT, Direction.RIGHT, Direction.UP, Direction.DOWN

BIG = ((0, 10), (1, 9), (4, 8), (5, 8), (6, 7))  # (cell, exponent) on a 4x4 board
DEFAULT_CAPS = Caps.from_values([[1024, 512, 64, 16],
                                 [256, 256, 128, 16],
                                 [16, 16, 32, 16],
                                 [16, 16, 16, 16]])

# direct: (row-1 tiles, row-2 tiles) patterns finished with Right, Up, Right.
# literal keeps the case order as stated; swapped exchanges the second and
# third cases, which is the version whose Right actually aligns the 512s.
READINGS = {
    "literal": {"direct": {(3, 3)}, "loop": {(3, 2)}, "four_shortcut": True},
    "swapped": {"direct": {(3, 2)}, "loop": {(3, 3)}, "four_shortcut": False},
}


class Phase(enum.Enum):
    OPENING = "opening"
    UP = "up"
    SEQUENCE = "sequence"
    CASE1 = "case1"
    CASE3_RIGHT = "case3-right"
    CASE3_LEFT = "case3-left"


class PolicyError(Exception):
    pass


@dataclass(frozen=True)
class LemmaState:
    board: Board
    phase: Phase = Phase.OPENING
    queue: tuple[Direction, ...] = ()
    last_side: Direction | None = None
    # rows 3-4 sum at the previous loop restart; None before the first
    progress: int | None = None


def lemma_board(extra: Board | None = None) -> Board:
    """The five big tiles, optionally on top of a filling of the other cells."""
    cells = list(extra.cells) if extra is not None else [0] * 16
    for i, e in BIG:
        cells[i] = e
    return Board(4, 4, tuple(cells))


def has_big_tiles(board: Board) -> bool:
    return all(board.cells[i] == e for i, e in BIG)


def _row(board: Board, r: int) -> tuple[int, ...]:
    return board.cells[4 * r: 4 * r + 4]


def row_count(board: Board, r: int) -> int:
    return sum(1 for e in _row(board, r) if e)


def lower_sum(board: Board) -> int:
    return sum(1 << e for e in board.cells[8:] if e)


def _wins_now(board: Board) -> Direction | None:
    for d in (L, R, U, D):
        after = engine.swipe(board, d)
        if after is not None and max(after.cells) >= 11:
            return d
    return None


def _aligned_512s(board: Board) -> bool:
    """An Up would turn a vertical 512 pair into a 1024 beside the 1024."""
    after = engine.swipe(board, U)
    if after is None:
        return False
    row = _row(after, 0)
    return any(row[c] == row[c + 1] == 10 for c in range(3))


def _only_big(board: Board) -> bool:
    return sorted(e for e in board.cells[:8] if e) == [7, 9, 10, 10]


def policy_move(state: LemmaState, reading: str = "swapped",
                skip_opening: bool = False) -> tuple[Direction, LemmaState]:
    """Next swipe and the state to carry into the following turn."""
    rules = READINGS[reading]
    b = state.board
    if state.phase == Phase.OPENING:
        if not has_big_tiles(b):
            raise PolicyError("the five big tiles are not in place")
        if not skip_opening:
            return L, replace(state, phase=Phase.UP)
        state = replace(state, phase=Phase.UP)

    # finishing merges are always taken once available
    d = _wins_now(b)
    if d is not None:
        return d, state
    if _aligned_512s(b):
        return U, state

    if state.phase == Phase.SEQUENCE and state.queue:
        d, rest = state.queue[0], state.queue[1:]
        if engine.swipe(b, d) is not None:
            return d, replace(state, queue=rest, phase=Phase.SEQUENCE if rest else Phase.UP)
        # a spawn made the scripted move illegal; dispatch afresh
        state = replace(state, queue=(), phase=Phase.UP)

    if state.phase == Phase.CASE3_LEFT:
        if engine.swipe(b, L) is not None:
            return L, state
        state = _restart(state, b)
        if row_count(b, 0) == 4:
            state = replace(state, phase=Phase.CASE1)
        else:
            state = replace(state, phase=Phase.UP)

    if state.phase == Phase.CASE1:
        side = R if state.last_side != R else L
        if engine.swipe(b, side) is None:
            side = L if side == R else R
        if engine.swipe(b, side) is not None:
            return side, replace(state, last_side=side)
        state = replace(state, phase=Phase.UP)

    if state.phase in (Phase.UP, Phase.SEQUENCE):
        if rules["four_shortcut"] and _only_big(b):
            return R, replace(state, phase=Phase.SEQUENCE, queue=(U, R))
        if engine.swipe(b, U) is not None:
            return U, replace(state, phase=Phase.UP)
        counts = (row_count(b, 0), row_count(b, 1))
        if counts[0] == 4 and _side_legal(b):
            return policy_move(replace(state, phase=Phase.CASE1), reading)
        if engine.swipe(b, R) is not None:
            if counts in rules["direct"]:
                return R, replace(state, phase=Phase.SEQUENCE, queue=(U, R), last_side=None)
            # loop case; row-count patterns not named above land here too
            return R, replace(state, phase=Phase.CASE3_LEFT, last_side=None)
        for d in (L, D):
            if engine.swipe(b, d) is not None:
                return d, replace(state, phase=Phase.UP, last_side=None)
        raise PolicyError("no legal move")

    raise PolicyError(f"no rule for phase {state.phase}")


def _side_legal(b: Board) -> bool:
    return engine.swipe(b, L) is not None or engine.swipe(b, R) is not None


def _restart(state: LemmaState, b: Board) -> LemmaState:
    """Loop restart bookkeeping: rows 3-4 must have grown."""
    now = lower_sum(b)
    if state.progress is not None and now <= state.progress:
        raise ProgressError(state.progress, now)
    return replace(state, progress=now)


class ProgressError(PolicyError):
    def __init__(self, before: int, after: int):
        super().__init__(f"rows 3-4 sum did not grow across a loop ({before} -> {after})")
        self.before, self.after = before, after


# --- checking -----------------------------------------------------------------

@dataclass
class Counterexample:
    reason: str
    boards: list[Board]


@dataclass
class LemmaReport:
    reading: str
    playouts: int = 0
    wins: int = 0
    max_length: int = 0
    exhaustive_depth: int = 0
    exhaustive_starts: int = 0
    exhaustive_nodes: int = 0
    loop_iterations: int = 0
    progress_violations: int = 0
    counterexamples: list[Counterexample] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.wins == self.playouts and not self.counterexamples

    def summary(self) -> str:
        return (f"reading={self.reading} playouts={self.playouts} wins={self.wins} "
                f"max_length={self.max_length} depth={self.exhaustive_depth} "
                f"starts={self.exhaustive_starts} nodes={self.exhaustive_nodes} "
                f"loops={self.loop_iterations} progress_violations={self.progress_violations} "
                f"counterexamples={len(self.counterexamples)}")


def random_filling(rng: random.Random, caps: Caps = DEFAULT_CAPS, density: float = 0.5) -> Board:
    """Big tiles plus random small tiles within ``caps`` on the other cells."""
    big = {i for i, _ in BIG}
    cells = [0] * 16
    for i in range(16):
        if i not in big and rng.random() < density:
            cells[i] = rng.randint(1, caps.exps[i])
    return lemma_board(Board(4, 4, tuple(cells)))


def _won(b: Board, goal_exp: int) -> bool:
    return max(b.cells) >= goal_exp


def play(start: Board, rng: random.Random, reading: str = "swapped", goal: int = 2048,
         max_moves: int = 10_000, skip_opening: bool = False) -> PlayResult:
    """One game against the random spawner."""
    goal_exp = engine.exponent_of(goal)
    state = LemmaState(start)
    history = [start]
    loops = 0
    for _ in range(max_moves):
        b = state.board
        if _won(b, goal_exp):
            return PlayResult(True, history, loops)
        try:
            d, state = policy_move(state, reading, skip_opening)
        except ProgressError as exc:
            return PlayResult(False, history, loops, str(exc))
        except PolicyError as exc:
            return PlayResult(False, history, loops, f"lost: {exc}")
        after = engine.swipe(b, d)
        if after is None:
            return PlayResult(False, history, loops, f"illegal move {d.name}")
        if _won(after, goal_exp):
            history.append(after)
            return PlayResult(True, history, loops)
        empties = after.empties()
        if not empties:
            return PlayResult(False, history, loops, "board full after swipe")
        i = rng.choice(empties)
        v = 4 if rng.random() < 0.1 else 2
        nxt = engine.spawn(after, divmod(i, 4), v)
        if d == R and state.phase == Phase.CASE3_LEFT:
            loops += 1
        history.append(nxt)
        state = replace(state, board=nxt)
    return PlayResult(False, history, loops, f"no win within {max_moves} moves")


@dataclass
class PlayResult:
    won: bool
    history: list[Board]
    loops: int
    reason: str = ""


def _explore(state: LemmaState, depth: int, reading: str, goal_exp: int, skip_opening: bool,
             path: list[Board], report: LemmaReport, seen: set) -> None:
    """Every spawn choice for ``depth`` plies (a swipe or a spawn each)."""
    key = (state, depth)
    if key in seen or len(report.counterexamples) >= 50:
        return
    seen.add(key)
    report.exhaustive_nodes += 1
    b = state.board
    if _won(b, goal_exp) or depth <= 0:
        return
    try:
        d, nstate = policy_move(state, reading, skip_opening)
    except PolicyError as exc:
        report.counterexamples.append(Counterexample(str(exc), path + [b]))
        return
    after = engine.swipe(b, d)
    if after is None:
        report.counterexamples.append(Counterexample(f"illegal move {d.name}", path + [b]))
        return
    if _won(after, goal_exp) or depth == 1:
        return
    empties = after.empties()
    if not empties:
        report.counterexamples.append(Counterexample("board full after swipe", path + [b, after]))
        return
    for i in empties:
        for v in (2, 4):
            nxt = engine.spawn(after, divmod(i, 4), v)
            _explore(replace(nstate, board=nxt), depth - 2, reading, goal_exp, skip_opening,
                     path + [b], report, seen)


def check_lemma(goal: int = 2048, playouts: int = 10_000, depth: int = 6, seed: int = 0,
                reading: str = "swapped", fillings: int = 0, skip_opening: bool = False,
                max_counterexamples: int = 5) -> LemmaReport:
    """Bounded-exhaustive adversary search plus seeded random playouts.

    Both start from the bare configuration; ``fillings`` adds seeded random
    small-tile fillings as extra starts for the exhaustive part only.
    Failures are collected, not raised.
    """
    rng = random.Random(seed)
    goal_exp = engine.exponent_of(goal)
    report = LemmaReport(reading, exhaustive_depth=depth)
    starts = [lemma_board()] + [random_filling(rng) for _ in range(fillings)]
    seen: set = set()
    for start in starts:
        report.exhaustive_starts += 1
        _explore(LemmaState(start), depth, reading, goal_exp, skip_opening, [], report, seen)
    for _ in range(playouts):
        res = play(lemma_board(), rng, reading, goal, skip_opening=skip_opening)
        report.playouts += 1
        report.loop_iterations += res.loops
        report.max_length = max(report.max_length, len(res.history) - 1)
        if res.won:
            report.wins += 1
            continue
        if res.reason.startswith("rows 3-4"):
            report.progress_violations += 1
        if len(report.counterexamples) < max_counterexamples:
            report.counterexamples.append(Counterexample(res.reason, res.history))
    return report
