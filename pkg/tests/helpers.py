"""Shared test utilities."""

from pathlib import Path

import numpy as np

from layer2048.engine import Board, Turn
from layer2048.layerstore import layer_name, open_layer


def positions(table):
    """Every (board, sum) the table indexes, in rank order per sum."""
    caps = table.caps
    for s in table.sums():
        n = table.layer_size(s)
        if not n:
            continue
        for cells in table.unrank_many(s, np.arange(n, dtype=np.uint64)):
            yield s, Board(caps.rows, caps.cols, tuple(int(x) for x in cells))


def payloads(run: Path, table):
    """Raw payload bytes of every layer of a run, keyed by file name."""
    out = {}
    for s in table.sums():
        for turn in Turn:
            _, h = open_layer(Path(run) / layer_name(s, turn))
            with h:
                out[layer_name(s, turn)] = h.payload_bytes()
    return out


def layer_files(run: Path):
    return {p.name: p.read_bytes() for p in sorted(Path(run).glob("*.layer"))}


# criterion id -> (passed, detail), filled by the acceptance suite
VERDICTS: dict[str, tuple[bool, str]] = {}


class criterion:
    """Record the outcome of one acceptance criterion; failures still raise."""

    def __init__(self, key: str, title: str):
        self.key, self.title, self.notes = key, title, []

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        detail = self.title + ("; " + "; ".join(self.notes) if self.notes else "")
        if exc is not None:
            detail += f"; {kind.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        VERDICTS[self.key] = (exc is None, detail)
        print(f"criterion {self.key}: {'PASS' if exc is None else 'FAIL'}  {detail}")
        return False
