from fractions import Fraction

import numpy as np
import pytest

from helpers import payloads, positions
from layer2048.engine import Board, Caps, ConfigGoal, MergeGoal, Turn, parse_board
from layer2048.layerstore import Payload
from layer2048.prob import (BudgetExceeded, expectimax_oracle, fp_combine_spawn, query_prob,
                            render_decimal, solve_prob, to_fraction)
from layer2048.sweep import FULL, SolveConfig

DESK = [((2, 2), 8), ((1, 4), 8), ((2, 3), 16)]


def prob(tmp_path, caps, goal, name="run", **kw):
    return solve_prob(SolveConfig(caps, goal, tmp_path / name, **kw))


def test_fp_combine_examples():
    assert fp_combine_spawn([(FULL, 0)], 1) == 3865470565
    assert fp_combine_spawn([(FULL, FULL)], 1) == FULL
    assert fp_combine_spawn([(FULL, FULL), (0, 0)], 2) == 2147483647
    with pytest.raises(ValueError):
        fp_combine_spawn([(1, 1)], 2)


def test_rendering_truncates():
    assert render_decimal(2147483647) == "0.49999999"
    assert render_decimal(FULL) == "0.99999999"
    assert render_decimal(0) == "0.00000000"
    assert to_fraction(1 << 31) == Fraction(1, 2)


@pytest.mark.parametrize("shape,goal", DESK + [((1, 3), 8), ((3, 1), 8)])
def test_sound_and_tight_everywhere(tmp_path, shape, goal):
    caps = Caps.uniform(*shape, goal // 2)
    db, _ = prob(tmp_path, caps, MergeGoal(goal))
    oracle = expectimax_oracle(caps, MergeGoal(goal))
    for _, b in positions(db.table):
        for turn in Turn:
            raw = db.query(b, turn)
            exact = oracle(b, turn)
            assert 0 <= raw <= FULL
            assert to_fraction(raw) <= exact
            assert exact - to_fraction(raw) < Fraction(1, 2 ** 20)
    start = Board.empty(*shape)
    assert oracle(start, Turn.COMPUTER) - to_fraction(db.start_bound) < Fraction(1, 2 ** 20)


def test_terminal_wins_saturate(tmp_path):
    db, _ = prob(tmp_path, Caps.uniform(2, 2, 4), MergeGoal(8))
    assert db.query(parse_board("4,4;0,0"), Turn.PLAYER) == FULL
    assert db.query(parse_board("2,4;4,2"), Turn.PLAYER) == 0


def test_player_is_max_and_computer_between(tmp_path):
    from layer2048.engine import swipe, Direction, within_caps, spawn
    caps = Caps.uniform(2, 3, 8)
    db, _ = prob(tmp_path, caps, MergeGoal(16))
    for s, b in positions(db.table):
        v = db.query(b, Turn.PLAYER)
        for d in Direction:
            a = swipe(b, d)
            if a is not None and within_caps(a, caps):
                assert v >= db.query(a, Turn.COMPUTER)
        kids = [db.query(spawn(b, divmod(i, 3), x), Turn.PLAYER)
                for i in b.empties() for x in (2, 4) if s + x <= caps.max_sum]
        if kids and len(kids) == 2 * len(b.empties()):
            c = db.query(b, Turn.COMPUTER)
            assert min(kids) - 1 <= c <= max(kids)


def test_batched_equals_monolithic(tmp_path):
    caps = Caps.uniform(2, 3, 8)
    a, _ = prob(tmp_path, caps, MergeGoal(16), "single")
    b, _ = prob(tmp_path, caps, MergeGoal(16), "batched", batch_size=16, chunk_size=8)
    assert payloads(tmp_path / "single", a.table) == payloads(tmp_path / "batched", b.table)


def test_float_mode(tmp_path):
    caps = Caps.uniform(2, 3, 8)
    fx, _ = prob(tmp_path, caps, MergeGoal(16), "fixed")
    fl, _ = solve_prob(SolveConfig(caps, MergeGoal(16), tmp_path / "float"), unverified_float=True)
    assert fl.payload == Payload.FLOAT64
    oracle = expectimax_oracle(caps, MergeGoal(16))
    for _, b in positions(fx.table):
        for turn in Turn:
            f = fl.query(b, turn)
            assert abs(f - fx.query(b, turn) / 2 ** 32) < 1e-6
            assert abs(f - float(oracle(b, turn))) < 1e-12
    _, text = query_prob(fl, Board.empty(2, 3), Turn.COMPUTER)
    assert "unverified" in text


def test_config_goal(tmp_path):
    caps = Caps.from_values([[8, 4], [4, 4]])
    goal = ConfigGoal.from_tiles(2, [(1, 1, 8)])
    db, _ = prob(tmp_path, caps, goal)
    oracle = expectimax_oracle(caps, goal)
    assert db.query(parse_board("8,0;0,0"), Turn.PLAYER) == FULL
    for _, b in positions(db.table):
        for turn in Turn:
            assert to_fraction(db.query(b, turn)) <= oracle(b, turn)


def test_oracle_budget():
    with pytest.raises(BudgetExceeded):
        expectimax_oracle(Caps.uniform(2, 3, 8), MergeGoal(16), budget=50)(
            Board.empty(2, 3), Turn.COMPUTER)


def test_query_rendering(tmp_path):
    db, _ = prob(tmp_path, Caps.uniform(1, 3, 4), MergeGoal(8))
    raw, text = query_prob(db, Board.empty(1, 3), Turn.COMPUTER)
    assert text == render_decimal(raw)
    assert isinstance(raw, int) and np.uint32(raw) == raw
