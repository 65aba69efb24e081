"""Backward sweep over ``(sum, turn)`` layers shared by both solvers.

Layers are produced from the largest sum down to 0.  At each sum the
computer layer is built first from the player layers at ``sum + 2`` and
``sum + 4``, then the player layer from the computer layer at the same
sum.  Every layer is processed batch by batch: for each output batch the
successor indices are computed once, then every batch of every successor
layer is streamed past them.  At most three layer files are open at once.

Within a batch, work is split into fixed-size chunks handed to worker
threads by a hash of the chunk index.  Chunks never share output bytes, so
the result does not depend on the worker count.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine
from .engine import Caps, ConfigGoal, Direction, Goal, MergeGoal, Turn
from .indexer import CountTable
from .layerstore import (CHUNK_SIZE, LayerHandle, LayerMeta, Payload, ResidencyTracker,
                         chunk_owner, create_layer, layer_name, open_layer, validate_batch_size)

logger = logging.getLogger(__name__)

FULL = (1 << 32) - 1
MANIFEST = "manifest.json"
MANIFEST_VERSION = 1


@dataclass
class SolveConfig:
    """Everything a solver run needs.

    ``batch_size`` of None stores each layer as a single batch.  ``payload``
    selects the solver: BIT for guaranteed reachability, FIXED32 for sound
    probability bounds and FLOAT64 for the unverified float mode.
    """

    caps: Caps
    goal: Goal
    out: Path
    payload: Payload = Payload.BIT
    batch_size: int | None = None
    chunk_size: int = CHUNK_SIZE
    workers: int = 1
    keep_layers: bool = True

    def __post_init__(self):
        self.out = Path(self.out)
        if self.batch_size is not None:
            validate_batch_size(self.batch_size, self.chunk_size)
        else:
            validate_batch_size(self.chunk_size, self.chunk_size)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if isinstance(self.goal, MergeGoal):
            for e in self.caps.exps:
                if e >= self.goal.exponent:
                    raise ValueError("caps must stay below the goal tile")
        else:
            for i, e in self.goal.required:
                if not 0 <= i < len(self.caps.exps) or e > self.caps.exps[i]:
                    raise ValueError(f"goal tile at cell {i} exceeds its cap")

    @property
    def rows(self) -> int:
        return self.caps.rows

    @property
    def cols(self) -> int:
        return self.caps.cols

    @property
    def goal_exp(self) -> int:
        return self.goal.exponent if isinstance(self.goal, MergeGoal) else 0

    def describe(self) -> dict:
        goal = ({"merge": self.goal.tile} if isinstance(self.goal, MergeGoal)
                else {"config": [[i, e] for i, e in self.goal.required]})
        return {
            "rows": self.rows, "cols": self.cols, "caps": list(self.caps.exps),
            "goal": goal, "payload": self.payload.name,
        }


@dataclass
class SolveStats:
    layers_written: int = 0
    positions: int = 0
    peak_resident: int = 0
    seconds: float = 0.0
    skipped: list[str] = field(default_factory=list)


def goal_from_description(d: dict) -> Goal:
    if "merge" in d:
        return MergeGoal(d["merge"])
    return ConfigGoal(tuple((i, e) for i, e in d["config"]))


class _Values:
    """Arithmetic for one payload kind."""

    def __init__(self, kind: Payload):
        self.kind = kind
        if kind == Payload.BIT:
            self.dtype, self.win = np.dtype(bool), True
        elif kind == Payload.FIXED32:
            self.dtype, self.win = np.dtype(np.uint64), FULL
        else:
            self.dtype, self.win = np.dtype(np.float64), 1.0

    def zeros(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=self.dtype)

    def best(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a | b if self.kind == Payload.BIT else np.maximum(a, b)

    def combine_spawns(self, two: np.ndarray, four: np.ndarray, empties: np.ndarray) -> np.ndarray:
        """Merge per-cell outcome arrays ``(N, cells)`` into computer values.

        Non-empty cells carry placeholder values and are masked out here.
        """
        k = empties.sum(axis=1)
        if self.kind == Payload.BIT:
            ok = np.all(~empties | (two & four), axis=1)
            return ok & (k > 0)
        if self.kind == Payload.FIXED32:
            total = (9 * np.where(empties, two, 0) + np.where(empties, four, 0)).sum(axis=1, dtype=np.uint64)
            return combine_fixed(total, k)
        total = (0.9 * np.where(empties, two, 0.0) + 0.1 * np.where(empties, four, 0.0)).sum(axis=1)
        return np.where(k > 0, total / np.maximum(k, 1), 0.0)


def combine_fixed(total: np.ndarray, k: np.ndarray) -> np.ndarray:
    """``floor(total / (10 k))`` capped at FULL; zero where ``k == 0``.

    ``total`` is a sum of ``9*raw2 + raw4`` terms, at most ``10 * k * FULL``,
    which stays far below 2**64 for any board of up to 36 cells.
    """
    k = np.asarray(k, dtype=np.uint64)
    denom = np.maximum(k, 1) * np.uint64(10)
    out = np.minimum(np.asarray(total, dtype=np.uint64) // denom, np.uint64(FULL))
    return np.where(k > 0, out, np.uint64(0))


class _Successors:
    """Successor indices of one chunk into one target layer."""

    def __init__(self, n: int, slots: int, values: _Values):
        self.index = np.full((n, slots), -1, dtype=np.int64)
        self.value = np.zeros((n, slots), dtype=values.dtype)

    def gather(self, lo: int, hi: int, batch: np.ndarray) -> None:
        m = (self.index >= lo) & (self.index < hi)
        self.value[m] = batch[self.index[m] - lo]


class LayerSweep:
    def __init__(self, config: SolveConfig):
        self.config = config
        self.table = CountTable(config.caps)
        self.values = _Values(config.payload)
        self.tracker = ResidencyTracker()
        self.cap_arr = np.asarray(config.caps.exps, dtype=np.int8)
        self.n = config.rows * config.cols
        self.stats = SolveStats()
        self._pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None

    # -- files ------------------------------------------------------------

    def path(self, s: int, turn: Turn) -> Path:
        return self.config.out / layer_name(s, turn)

    def _meta(self, s: int, turn: Turn) -> LayerMeta:
        count = self.table.layer_size(s)
        cs = self.config.chunk_size
        bs = self.config.batch_size or max(cs, -(-count // cs) * cs)
        return LayerMeta(self.config.rows, self.config.cols, self.config.goal_exp,
                         self.config.caps.exps, s, turn, self.config.payload, count, bs)

    def _open(self, s: int, turn: Turn) -> LayerHandle | None:
        if s > self.table.max_sum:
            return None
        meta, handle = open_layer(self.path(s, turn), tracker=self.tracker)
        if meta.payload != self.config.payload:
            handle.close()
            raise ValueError(f"{handle.path}: payload {meta.payload.name} does not match run")
        return handle

    # -- chunk scheduling ---------------------------------------------------

    def _run_chunks(self, chunks: list[tuple[int, int, int]], fn) -> list:
        """Apply ``fn(lo, hi)`` to every chunk; results keep chunk order."""
        if self._pool is None:
            return [fn(lo, hi) for _, lo, hi in chunks]
        w = self.config.workers
        results: list = [None] * len(chunks)

        def work(owner: int) -> None:
            for pos, (ci, lo, hi) in enumerate(chunks):
                if chunk_owner(ci, w) == owner:
                    results[pos] = fn(lo, hi)

        for f in [self._pool.submit(work, o) for o in range(w)]:
            f.result()
        return results

    def _chunks(self, meta: LayerMeta, batch: int) -> list[tuple[int, int, int]]:
        lo, hi = meta.batch_span(batch)
        cs = self.config.chunk_size
        return [(c // cs, c, min(c + cs, hi)) for c in range(lo, hi, cs)]

    # -- computer layers ----------------------------------------------------

    def _spawn_successors(self, s: int, lo: int, hi: int):
        boards = self.table.unrank_many(s, np.arange(lo, hi, dtype=np.int64))
        empties = boards == 0
        n = hi - lo
        targets = {}
        fixed = {}
        goal = self.config.goal
        for exp in (1, 2):
            succ = _Successors(n, self.n, self.values)
            const = np.zeros((n, self.n), dtype=self.values.dtype)
            for c in range(self.n):
                rows = np.nonzero(empties[:, c])[0]
                if not len(rows):
                    continue
                if isinstance(goal, MergeGoal) and exp >= goal.exponent:
                    const[rows, c] = self.values.win  # spawned tile is already the goal
                    continue
                if exp > self.cap_arr[c]:
                    continue  # spawn leaves the capped set: a loss for the player
                child = boards[rows].copy()
                child[:, c] = exp
                succ.index[rows, c] = self.table.rank_many(child)
            targets[exp] = succ
            fixed[exp] = const
        return empties, targets, fixed

    def _compute_layer_computer(self, s: int) -> None:
        meta = self._meta(s, Turn.COMPUTER)
        out = create_layer(meta, self.path(s, Turn.COMPUTER), tracker=self.tracker)
        sources = {exp: self._open(s + (1 << exp), Turn.PLAYER) for exp in (1, 2)}
        try:
            for b in range(meta.n_batches):
                chunks = self._chunks(meta, b)
                work = self._run_chunks(chunks, lambda lo, hi: self._spawn_successors(s, lo, hi))
                for exp, src in sources.items():
                    if src is None:
                        continue
                    for b1 in range(src.meta.n_batches):
                        lo1, hi1 = src.meta.batch_span(b1)
                        data = src.read_batch(b1)
                        if self.values.kind == Payload.FIXED32:
                            data = data.astype(np.uint64)
                        self._run_chunks(
                            [(ci, i, i + 1) for i, (ci, _, _) in enumerate(chunks)],
                            lambda i, _: work[i][1][exp].gather(lo1, hi1, data))
                vals = self._run_chunks(
                    [(ci, i, i + 1) for i, (ci, _, _) in enumerate(chunks)],
                    lambda i, _: self._finish_computer(*work[i]))
                out.write_batch(b, np.concatenate(vals) if vals else self.values.zeros(0))
                self.stats.positions += sum(hi - lo for _, lo, hi in chunks)
        finally:
            for src in sources.values():
                if src is not None:
                    src.close()
            out.close()

    def _finish_computer(self, empties, targets, fixed) -> np.ndarray:
        two = np.where(targets[1].index >= 0, targets[1].value, fixed[1])
        four = np.where(targets[2].index >= 0, targets[2].value, fixed[2])
        return self.values.combine_spawns(two, four, empties)

    # -- player layers ------------------------------------------------------

    def _swipe_successors(self, s: int, lo: int, hi: int):
        boards = self.table.unrank_many(s, np.arange(lo, hi, dtype=np.int64))
        n = hi - lo
        goal = self.config.goal
        if isinstance(goal, ConfigGoal):
            won = _config_mask(boards, goal)
        else:
            won = np.zeros(n, dtype=bool)
        succ = _Successors(n, 4, self.values)
        const = np.zeros((n, 4), dtype=self.values.dtype)
        for d in Direction:
            after, legal = engine.swipe_many(boards, self.config.rows, self.config.cols, d)
            if isinstance(goal, MergeGoal):
                won |= legal & (after.max(axis=1) >= goal.exponent)
            else:
                hit = legal & _config_mask(after, goal)
                const[hit, d] = self.values.win
                legal &= ~hit
            ok = legal & np.all(after <= self.cap_arr, axis=1)
            rows = np.nonzero(ok)[0]
            if len(rows):
                succ.index[rows, d] = self.table.rank_many(after[rows])
        return won, succ, const

    def _compute_layer_player(self, s: int) -> None:
        meta = self._meta(s, Turn.PLAYER)
        out = create_layer(meta, self.path(s, Turn.PLAYER), tracker=self.tracker)
        src = self._open(s, Turn.COMPUTER)
        try:
            for b in range(meta.n_batches):
                chunks = self._chunks(meta, b)
                work = self._run_chunks(chunks, lambda lo, hi: self._swipe_successors(s, lo, hi))
                slots = [(ci, i, i + 1) for i, (ci, _, _) in enumerate(chunks)]
                for b1 in range(src.meta.n_batches):
                    lo1, hi1 = src.meta.batch_span(b1)
                    data = src.read_batch(b1)
                    if self.values.kind == Payload.FIXED32:
                        data = data.astype(np.uint64)
                    self._run_chunks(slots, lambda i, _: work[i][1].gather(lo1, hi1, data))
                vals = self._run_chunks(slots, lambda i, _: self._finish_player(*work[i]))
                out.write_batch(b, np.concatenate(vals) if vals else self.values.zeros(0))
                self.stats.positions += sum(hi - lo for _, lo, hi in chunks)
        finally:
            src.close()
            out.close()

    def _finish_player(self, won, succ, const) -> np.ndarray:
        v = np.where(succ.index >= 0, succ.value, const)
        if self.values.kind == Payload.BIT:
            best = v.any(axis=1)
        else:
            best = v.max(axis=1)
        return np.where(won, self.values.win, best).astype(self.values.dtype)

    # -- driver -------------------------------------------------------------

    def run(self) -> SolveStats:
        cfg = self.config
        cfg.out.mkdir(parents=True, exist_ok=True)
        manifest = self._load_manifest()
        done = set(manifest["layers"])
        t0 = time.perf_counter()
        try:
            for s in range(self.table.max_sum, -1, -2):
                for turn in (Turn.COMPUTER, Turn.PLAYER):
                    name = layer_name(s, turn)
                    if name in done and self._valid(s, turn):
                        self.stats.skipped.append(name)
                    else:
                        if turn == Turn.COMPUTER:
                            self._compute_layer_computer(s)
                        else:
                            self._compute_layer_player(s)
                        self.stats.layers_written += 1
                        manifest["layers"][name] = "done"
                        self._save_manifest(manifest)
                    if turn == Turn.COMPUTER and not cfg.keep_layers:
                        # nothing below sum s reads the player layer at s + 4
                        self.path(s + 4, Turn.PLAYER).unlink(missing_ok=True)
                if not cfg.keep_layers and s + 2 <= self.table.max_sum:
                    self.path(s + 2, Turn.COMPUTER).unlink(missing_ok=True)
        finally:
            if self._pool is not None:
                self._pool.shutdown()
        self.stats.seconds = time.perf_counter() - t0
        self.stats.peak_resident = self.tracker.peak
        manifest["complete"] = True
        manifest["seconds"] = round(self.stats.seconds, 3)
        self._save_manifest(manifest)
        logger.info("solved %s in %.1fs (%d positions)", cfg.out, self.stats.seconds,
                    self.stats.positions)
        return self.stats

    def _valid(self, s: int, turn: Turn) -> bool:
        try:
            meta, h = open_layer(self.path(s, turn))
        except Exception:
            return False
        h.close()
        return meta.payload == self.config.payload

    def _load_manifest(self) -> dict:
        path = self.config.out / MANIFEST
        if path.exists():
            m = json.loads(path.read_text())
            if m.get("config") == self.config.describe() and m.get("version") == MANIFEST_VERSION:
                return m
            logger.warning("manifest in %s belongs to another run; starting over", self.config.out)
        return {"version": MANIFEST_VERSION, "config": self.config.describe(),
                "layers": {}, "complete": False}

    def _save_manifest(self, manifest: dict) -> None:
        path = self.config.out / MANIFEST
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(manifest, indent=1))
        tmp.replace(path)


def _config_mask(boards: np.ndarray, goal: ConfigGoal) -> np.ndarray:
    m = np.ones(boards.shape[0], dtype=bool)
    for i, e in goal.required:
        m &= boards[:, i] == e
    return m


def solve(config: SolveConfig) -> SolveStats:
    return LayerSweep(config).run()


class LayerDB:
    """Read access to a solved run directory."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        mf = self.path / MANIFEST
        if not mf.exists():
            raise FileNotFoundError(f"no manifest in {self.path}")
        self.manifest = json.loads(mf.read_text())
        c = self.manifest["config"]
        self.caps = Caps(c["rows"], c["cols"], tuple(c["caps"]))
        self.goal = goal_from_description(c["goal"])
        self.payload = Payload[c["payload"]]
        self.table = CountTable(self.caps)
        self._cache: dict[tuple[int, Turn], np.ndarray] = {}

    @property
    def complete(self) -> bool:
        return bool(self.manifest.get("complete"))

    def layer(self, s: int, turn: Turn) -> np.ndarray:
        key = (s, turn)
        if key not in self._cache:
            _, h = open_layer(self.path / layer_name(s, turn), caps=self.caps)
            with h:
                self._cache[key] = h.read_all()
        return self._cache[key]

    def lookup(self, board: engine.Board, turn: Turn):
        s = engine.board_sum(board)
        return self.layer(s, turn)[self.table.rank(board)]
