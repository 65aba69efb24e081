"""Positions grouped by tile sum: layer sizes and the rank/unrank bijection."""

from layer2048 import Board, Caps, CountTable, layer_census

table = CountTable(Caps.uniform(4, 4, 128))  # 4x4, every tile below 256
census = layer_census(table)
biggest = max(census, key=lambda row: row[1])
print("layers:", len(census), " largest:", biggest, " total:", sum(n for _, n in census))

small = CountTable(Caps.uniform(2, 2, 4))
for r in range(small.layer_size(4)):  # the ten boards of sum 4, in rank order
    b = small.unrank(4, r)
    print(r, b.values(), small.rank(b))

b = Board.from_values([[2, 2], [0, 0]])
print("rank of", b.values(), "=", small.rank(b))
