import random

import pytest

from layer2048.engine import Direction, parse_board, swipe
from layer2048.lemma import (BIG, LemmaState, Phase, PolicyError, ProgressError, _restart,
                             check_lemma, has_big_tiles, lemma_board, lower_sum, play,
                             policy_move, random_filling)

L, R, U = Direction.LEFT, Direction.RIGHT, Direction.UP


def test_lemma_board_layout():
    b = lemma_board()
    assert b.values()[:2] == [[1024, 512, 0, 0], [256, 256, 128, 0]]
    assert has_big_tiles(b) and len(BIG) == 5


@pytest.mark.parametrize("seed", range(5))
def test_opening_is_left(seed):
    start = lemma_board() if seed == 0 else random_filling(random.Random(seed))
    d, state = policy_move(LemmaState(start))
    assert d == L and state.phase == Phase.UP


def test_precondition():
    with pytest.raises(PolicyError):
        policy_move(LemmaState(parse_board("2,0,0,0;0,0,0,0;0,0,0,0;0,0,0,0")))


def test_first_row_full_starts_right_left():
    b = parse_board("1024,512,4,2;512,128,0,0;0,0,0,0;0,0,0,0")
    d, st = policy_move(LemmaState(b, Phase.UP))
    assert d == R and st.phase == Phase.CASE1
    after = parse_board("1024,512,4,2;2,0,512,128;0,0,0,0;0,0,0,0")
    d2, _ = policy_move(LemmaState(after, st.phase, last_side=st.last_side))
    assert d2 == L


@pytest.mark.parametrize("reading", ["swapped", "literal"])
def test_three_and_three_starts_right(reading):
    b = parse_board("1024,512,4,0;512,128,2,0;0,0,0,0;0,0,0,0")
    assert policy_move(LemmaState(b, Phase.UP), reading)[0] == R


def test_up_while_possible():
    b = parse_board("1024,512,0,0;512,128,0,0;2,0,0,0;0,4,0,0")
    assert policy_move(LemmaState(b, Phase.UP))[0] == U


def test_finishing_merges_taken():
    aligned = parse_board("1024,512,2,0;4,512,128,0;0,0,0,0;0,0,0,0")
    assert policy_move(LemmaState(aligned, Phase.UP))[0] == U
    win = parse_board("1024,1024,2,0;4,8,0,0;0,0,0,0;0,0,0,0")
    d, _ = policy_move(LemmaState(win, Phase.CASE1))
    assert max(swipe(win, d).cells) == 11


def test_progress_metric_must_grow():
    b = parse_board("1024,512,0,0;512,128,0,0;2,0,0,0;0,0,0,0")
    st = _restart(LemmaState(b), b)
    assert st.progress == lower_sum(b) == 2
    with pytest.raises(ProgressError):
        _restart(st, b)


def test_explored_moves_are_legal():
    rep = check_lemma(playouts=0, depth=6, fillings=3)
    assert rep.exhaustive_nodes > 100
    assert not [c for c in rep.counterexamples if "illegal" in c.reason]


def test_playouts_are_reproducible():
    a = check_lemma(playouts=30, depth=2, seed=7)
    b = check_lemma(playouts=30, depth=2, seed=7)
    assert a.summary() == b.summary()


def test_dense_filling_can_be_lost():
    # the small tiles matter: after the opening Left one cell is free, and a 2 there ends the game
    start = parse_board("1024,512,64,16;256,256,128,16;2,4,2,4;4,2,4,2")
    assert has_big_tiles(start)
    after = swipe(start, L)
    assert after.empties() == [7]
    from layer2048.engine import legal_moves, spawn
    assert legal_moves(spawn(after, (1, 3), 2)) == set()
    res = play(start, random.Random(0))
    assert not res.won and res.reason


def test_mutated_policy_is_caught():
    rep = check_lemma(playouts=2000, depth=6, seed=1, skip_opening=True)
    assert rep.counterexamples and not rep.passed
