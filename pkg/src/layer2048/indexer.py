"""Dense indexing of fixed-sum layers.

A layer is every cap-respecting board with a given tile sum.  Boards are
ordered lexicographically over row-major cells with ``0 < 2 < 4 < ...``,
and :class:`CountTable` maps that order to ``[0, layer_size)`` and back.

``C[i][h]`` counts fillings of cells ``i..mn-1`` whose tiles sum to
``2*h``; with uniform caps row ``i`` is the classic ``I[mn - i]`` table.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .engine import Board, Caps

U64_MAX = (1 << 64) - 1


class CountOverflowError(OverflowError):
    pass


class CountTable:
    """Suffix filling counts for one board shape and cap mask.

    Parameters
    ----------
    caps:
        Per-cell cap mask; fixes the board shape.
    max_sum:
        Largest layer sum of interest (defaults to the sum of all caps).
    wide:
        Keep Python integers instead of checked 64-bit words.  Only the
        census needs this, and only for shapes whose total exceeds 2**64.
    """

    def __init__(self, caps: Caps, max_sum: int | None = None, wide: bool = False):
        if max_sum is None:
            max_sum = caps.max_sum
        if max_sum < 0 or max_sum % 2:
            raise ValueError(f"max_sum must be even and non-negative, got {max_sum}")
        self.caps = caps
        self.rows, self.cols = caps.rows, caps.cols
        self.cells = caps.rows * caps.cols
        self.max_sum = max_sum
        self.wide = wide
        h = max_sum // 2 + 1
        n = self.cells
        table = [[0] * h for _ in range(n + 1)]
        table[n][0] = 1
        for i in range(n - 1, -1, -1):
            nxt, cur = table[i + 1], table[i]
            for s in range(h):
                acc = nxt[s]
                for k in range(1, caps.exps[i] + 1):
                    step = 1 << (k - 1)  # 2**k in half-units
                    if step > s:
                        break
                    acc += nxt[s - step]
                if acc > U64_MAX and not wide:
                    raise CountOverflowError(
                        f"layer count {acc} exceeds 64 bits; rebuild with wide=True for census")
                cur[s] = acc
        self._py = table
        if wide:
            self.C = np.array(table, dtype=object)
        else:
            self.C = np.array(table, dtype=np.uint64)
        self._offsets: np.ndarray | None = None

    # -- sizes ------------------------------------------------------------

    def count(self, i: int, s: int) -> int:
        """Fillings of cells ``i..`` (0-based) with tile sum ``s``; 0 outside range."""
        if s < 0 or s > self.max_sum or s % 2:
            return 0
        return self._py[i][s // 2]

    def layer_size(self, s: int) -> int:
        return self.count(0, s)

    def sums(self) -> range:
        return range(0, self.max_sum + 1, 2)

    # -- scalar rank / unrank ---------------------------------------------

    def rank(self, board: Board) -> int:
        if (board.rows, board.cols) != (self.rows, self.cols):
            raise ValueError("board shape does not match table")
        if any(e > c for e, c in zip(board.cells, self.caps.exps)):
            raise ValueError("board violates caps")
        s = sum(1 << e for e in board.cells if e)
        if s > self.max_sum:
            raise ValueError(f"board sum {s} exceeds table max {self.max_sum}")
        index = 0
        for i, e in enumerate(board.cells):
            if e:
                index += self.count(i + 1, s)
                for k in range(1, e):
                    index += self.count(i + 1, s - (1 << k))
                s -= 1 << e
        return index

    def unrank(self, s: int, index: int) -> Board:
        size = self.layer_size(s)
        if not 0 <= index < size:
            raise IndexError(f"index {index} outside layer of sum {s} (size {size})")
        r = index
        cells = []
        for i in range(self.cells):
            here = self.count(i + 1, s)
            if r < here:
                cells.append(0)
                continue
            r -= here
            k = 1
            while True:
                cnt = self.count(i + 1, s - (1 << k))
                if r < cnt:
                    break
                r -= cnt
                k += 1
            cells.append(k)
            s -= 1 << k
        assert r == 0 and s == 0
        return Board(self.rows, self.cols, tuple(cells))

    # -- vectorised rank / unrank -----------------------------------------

    def _offset_table(self) -> np.ndarray:
        """``off[i, h, e]``: rank contribution of exponent ``e`` at cell ``i``
        when the remaining sum (including this cell) is ``2*h``."""
        if self._offsets is None:
            if self.wide:
                raise ValueError("vectorised indexing needs a 64-bit table")
            if int(self.C.max()) >= 1 << 63:
                raise CountOverflowError("layer too large for int64 indexing")
            n, h = self.cells, self.max_sum // 2 + 1
            emax = max(self.caps.exps)
            off = np.zeros((n, h, emax + 1), dtype=np.int64)
            nxt_all = self.C.astype(np.int64)
            for i in range(n):
                nxt = nxt_all[i + 1]
                padded = np.concatenate([np.zeros(1 << emax, dtype=np.int64), nxt])
                base = 1 << emax
                acc = nxt.copy()
                for e in range(1, self.caps.exps[i] + 1):
                    off[i, :, e] = acc
                    acc = acc + padded[base - (1 << (e - 1)): base - (1 << (e - 1)) + h]
            self._offsets = off
        return self._offsets

    def rank_many(self, cells: np.ndarray) -> np.ndarray:
        """Ranks of an ``(N, mn)`` exponent array; rows must respect the caps."""
        off = self._offset_table()
        n = cells.shape[0]
        e = cells.astype(np.intp)
        half = np.where(e > 0, np.left_shift(1, np.maximum(e, 1) - 1), 0)
        remaining = half[:, ::-1].cumsum(axis=1)[:, ::-1]
        out = np.zeros(n, dtype=np.int64)
        for i in range(self.cells):
            out += off[i, remaining[:, i], e[:, i]]
        return out

    def unrank_many(self, s: int, index: np.ndarray) -> np.ndarray:
        """Boards (``(N, mn)`` int8) for indices within the sum-``s`` layer."""
        C = self.C.astype(np.int64)
        r = np.asarray(index, dtype=np.int64).copy()
        n = r.shape[0]
        h = np.full(n, s // 2, dtype=np.int64)
        out = np.zeros((n, self.cells), dtype=np.int8)
        for i in range(self.cells):
            nxt = C[i + 1]
            here = nxt[h]
            filled = r >= here
            r -= np.where(filled, here, 0)
            pending = filled
            for k in range(1, self.caps.exps[i] + 1):
                if not pending.any():
                    break
                hk = h - (1 << (k - 1))
                cnt = np.where(hk >= 0, nxt[np.maximum(hk, 0)], 0)
                pick = pending & (r < cnt)
                out[pick, i] = k
                h -= np.where(pick, 1 << (k - 1), 0)
                r -= np.where(pending & ~pick, cnt, 0)
                pending = pending & ~pick
        return out


def layer_census(table: CountTable) -> list[tuple[int, int]]:
    return [(s, table.layer_size(s)) for s in table.sums()]


def census_csv(census: list[tuple[int, int]], delimiter: str = ",") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["sum", "count"])
    w.writerows(census)
    return buf.getvalue()
