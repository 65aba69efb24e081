"""The five-big-tile strategy: one narrated game, then a batch of checks."""

import random

from layer2048.engine import render_board
from layer2048.lemma import check_lemma, lemma_board, play

game = play(lemma_board(), random.Random(4))
print("won" if game.won else f"lost ({game.reason})", "in", len(game.history) - 1, "moves")
for b in game.history[:6]:
    print(" ", render_board(b))

for reading in ("swapped", "literal"):
    rep = check_lemma(playouts=1000, depth=6, seed=0, reading=reading)
    print(rep.summary())
if rep.counterexamples:
    print("first loss ends with:")
    for b in rep.counterexamples[0].boards[-3:]:
        print(" ", render_board(b))
