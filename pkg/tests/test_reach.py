import os

import pytest

from helpers import layer_files, positions
from layer2048.engine import Board, Caps, ConfigGoal, MergeGoal, Turn, parse_board
from layer2048.reach import (evaluate_two_tile_starts, max_guaranteed_tile, minimax_oracle,
                             query_reach, solve_reach, two_tile_starts)
from layer2048.sweep import LayerDB, SolveConfig

SHAPES = [(r, c) for r in range(1, 7) for c in range(1, 7) if r * c <= 6]


def reach(tmp_path, caps, goal, name="run", **kw):
    db, stats = solve_reach(SolveConfig(caps, goal, tmp_path / name, **kw))
    return db, stats


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("goal", [4, 8, 16])
def test_matches_minimax_everywhere(tmp_path, shape, goal):
    caps = Caps.uniform(*shape, goal // 2)
    db, _ = reach(tmp_path, caps, MergeGoal(goal))
    oracle = minimax_oracle(caps, MergeGoal(goal))
    for _, b in positions(db.table):
        for turn in Turn:
            assert db.query(b, turn) == oracle(b, turn), (b, turn)


def test_small_verdicts(tmp_path):
    assert reach(tmp_path, Caps.uniform(2, 2, 4), MergeGoal(8), "a")[0].start_wins
    assert not reach(tmp_path, Caps.uniform(2, 2, 8), MergeGoal(16), "b")[0].start_wins


def test_terminal_queries(tmp_path):
    db, _ = reach(tmp_path, Caps.uniform(2, 2, 4), MergeGoal(8))
    assert query_reach(db, parse_board("4,4;0,0"), Turn.PLAYER)
    assert not query_reach(db, parse_board("2,4;4,2"), Turn.PLAYER)


def test_monotone_in_caps(tmp_path):
    low = Caps.from_values([[8, 4, 8], [4, 8, 4]])
    high = Caps.uniform(2, 3, 8)
    a, _ = reach(tmp_path, low, MergeGoal(16), "low")
    b, _ = reach(tmp_path, high, MergeGoal(16), "high")
    for _, board in positions(a.table):
        for turn in Turn:
            if a.query(board, turn):
                assert b.query(board, turn)


def test_two_tile_starts(tmp_path):
    assert len(two_tile_starts(2, 2)) == 24
    db, _ = reach(tmp_path, Caps.uniform(2, 2, 4), MergeGoal(8))
    rep = evaluate_two_tile_starts(db)
    assert rep.total == 24
    oracle = minimax_oracle(db.caps, db.goal)
    assert [w for _, w in rep.starts] == [oracle(b, Turn.PLAYER) for b, _ in rep.starts]
    one_by_two, _ = reach(tmp_path, Caps.uniform(1, 2, 2), MergeGoal(4), "12")
    assert dict(evaluate_two_tile_starts(one_by_two).starts)[parse_board("2,2")]


def test_at_most_three_layers_resident(tmp_path):
    _, stats = reach(tmp_path, Caps.uniform(2, 3, 8), MergeGoal(16), batch_size=16, chunk_size=8)
    assert stats.peak_resident <= 3


@pytest.mark.parametrize("workers", sorted({2, 3, os.cpu_count() or 1}))
def test_worker_count_does_not_change_bytes(tmp_path, workers):
    caps = Caps.uniform(2, 3, 8)
    reach(tmp_path, caps, MergeGoal(16), "one", batch_size=64, chunk_size=8)
    reach(tmp_path, caps, MergeGoal(16), "many", batch_size=64, chunk_size=8, workers=workers)
    assert layer_files(tmp_path / "one") == layer_files(tmp_path / "many")


def test_resume_skips_finished_layers(tmp_path):
    caps = Caps.uniform(2, 2, 8)
    reach(tmp_path, caps, MergeGoal(16))
    before = layer_files(tmp_path / "run")
    (tmp_path / "run" / "s0_P.layer").unlink()
    _, stats = reach(tmp_path, caps, MergeGoal(16))
    assert stats.layers_written == 1 and len(stats.skipped) == len(before) - 1
    assert layer_files(tmp_path / "run") == before


def test_consumed_layers_can_be_dropped(tmp_path):
    caps = Caps.uniform(2, 2, 8)
    db, _ = reach(tmp_path, caps, MergeGoal(16), keep_layers=False)
    left = sorted(p.name for p in (tmp_path / "run").glob("*.layer"))
    assert "s0_C.layer" in left and len(left) <= 4
    assert db.start_wins == minimax_oracle(caps, MergeGoal(16))(Board.empty(2, 2), Turn.COMPUTER)


def test_config_goal_matches_oracle(tmp_path):
    caps = Caps.from_values([[8, 4], [4, 4]])
    goal = ConfigGoal.from_tiles(2, [(1, 1, 8), (1, 2, 4)])
    db, _ = reach(tmp_path, caps, goal)
    assert isinstance(LayerDB(tmp_path / "run").goal, ConfigGoal)
    oracle = minimax_oracle(caps, goal)
    for _, b in positions(db.table):
        for turn in Turn:
            assert db.query(b, turn) == oracle(b, turn)


def test_caps_must_stay_below_goal(tmp_path):
    with pytest.raises(ValueError):
        SolveConfig(Caps.uniform(2, 2, 8), MergeGoal(8), tmp_path)


@pytest.mark.parametrize("shape,tile", [((1, 1), 2), ((1, 2), 4), ((1, 3), 4), ((1, 4), 4),
                                        ((2, 2), 8), ((2, 3), 16)])
def test_max_guaranteed_tile_small(shape, tile):
    res = max_guaranteed_tile(*shape)
    assert res.exact and res.tile == tile
    assert res.verdicts.get(tile * 2) is False


def test_max_tile_budget_gives_lower_bound():
    res = max_guaranteed_tile(2, 3, max_positions=1000)
    assert not res.exact and res.tile < 16
