"""Winning-probability lower bounds in 32-bit fixed point, next to exact values."""

import tempfile
from pathlib import Path

from layer2048 import Board, Caps, MergeGoal, SolveConfig, Turn, expectimax_oracle, solve_prob
from layer2048.prob import render_decimal, to_fraction

work = Path(tempfile.mkdtemp())
for shape, goal in [((1, 3), 8), ((2, 2), 8), ((2, 3), 16), ((2, 4), 32)]:
    caps = Caps.uniform(*shape, goal // 2)
    db, _ = solve_prob(SolveConfig(caps, MergeGoal(goal), work / f"{shape}_{goal}"))
    raw = db.start_bound
    exact = expectimax_oracle(caps, MergeGoal(goal), budget=10 ** 7)(Board.empty(*shape),
                                                                    Turn.COMPUTER)
    gap = exact - to_fraction(raw)
    print(shape, goal, render_decimal(raw), f"exact {float(exact):.10f}", f"gap {float(gap):.2e}")
