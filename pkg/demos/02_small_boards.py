"""Guaranteed tiles on small boards, and one capped 3x3 run queried by hand."""

import tempfile
from pathlib import Path

from layer2048 import Board, Caps, MergeGoal, SolveConfig, Turn, max_guaranteed_tile, solve_reach
from layer2048.reach import evaluate_two_tile_starts

for shape in [(1, 2), (1, 4), (2, 2), (2, 3)]:
    res = max_guaranteed_tile(*shape)
    print(shape, "->", res.tile, res.verdicts)

work = Path(tempfile.mkdtemp())
caps = Caps.from_values([[16, 16, 16], [16, 16, 16], [8, 8, 8]])
db, stats = solve_reach(SolveConfig(caps, MergeGoal(32), work / "capped"))
print("3x3 to 32 with a low bottom row:", "WIN" if db.start_wins else "LOSS",
      f"({stats.positions} positions, {stats.seconds:.1f}s)")
print("after a 2 in the corner, player to move:",
      db.query(Board.from_values([[2, 0, 0], [0, 0, 0], [0, 0, 0]]), Turn.PLAYER))

starts = evaluate_two_tile_starts(db)
print(f"two-tile starts won: {starts.wins} of {starts.total}")
