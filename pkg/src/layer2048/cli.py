"""Command-line entry point.

Every verdict ends with a machine-readable line: ``RESULT win``,
``RESULT loss`` or ``RESULT bound=<decimal>``.  Exit codes: 0 success
(a lost game is still a successful run), 1 domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

from . import engine
from .engine import Caps, MergeGoal, Turn
from .indexer import CountTable, census_csv, layer_census
from .layerstore import CHUNK_SIZE, LayerError, Payload, payload_bytes
from .lemma import check_lemma
from .prob import ProbDB, query_prob, render_decimal, solve_prob
from .reach import ReachDB, evaluate_two_tile_starts, max_guaranteed_tile, solve_reach
from .sweep import MANIFEST, LayerDB, SolveConfig


class UsageError(Exception):
    """Bad argument; the message names the flag."""


class DomainError(Exception):
    pass


def _flag_error(flag: str, msg: str) -> UsageError:
    return UsageError(f"{flag}: {msg}")


def _read_text(path: str, flag: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _flag_error(flag, f"cannot read {path} ({exc.strerror})") from None


def _goal_tile(args) -> int:
    if args.goal is None:
        raise _flag_error("--goal", "required")
    try:
        engine.exponent_of(args.goal)
    except ValueError:
        raise _flag_error("--goal", f"{args.goal} is not a tile value") from None
    if args.goal < 4:
        raise _flag_error("--goal", "must be at least 4")
    return args.goal


def _caps(args, goal: int | None) -> Caps:
    if args.caps:
        try:
            caps = engine.parse_caps(_read_text(args.caps, "--caps"))
        except ValueError as exc:
            raise _flag_error("--caps", str(exc)) from None
        if args.rows is not None and args.rows != caps.rows:
            raise _flag_error("--rows", f"caps file has {caps.rows} rows")
        if args.cols is not None and args.cols != caps.cols:
            raise _flag_error("--cols", f"caps file has {caps.cols} columns")
        return caps
    if args.rows is None or args.cols is None:
        raise _flag_error("--rows/--cols", "required without --caps")
    if goal is None:
        raise _flag_error("--caps", "required with --goal-config")
    return Caps.uniform(args.rows, args.cols, goal // 2)


def _workers(args) -> int:
    k = args.threads
    if k is None:
        return 1
    if k == 0:
        return os.cpu_count() or 1
    if k < 0:
        raise _flag_error("--threads", "must be >= 0 (0 means all cores)")
    return k


def _batch_size(args, kind: Payload) -> int | None:
    if args.batch_size is not None and args.ram_budget is not None:
        raise _flag_error("--batch-size", "give either --batch-size or --ram-budget")
    if args.batch_size is not None:
        if args.batch_size <= 0 or args.batch_size % 8:
            raise _flag_error("--batch-size", "must be a positive multiple of 8")
        return args.batch_size
    if args.ram_budget is not None:
        return batch_for_budget(args.ram_budget, kind)
    return None


def batch_for_budget(budget: int, kind: Payload, chunk: int = CHUNK_SIZE) -> int:
    """Largest chunk-aligned batch whose payload fits in a third of ``budget``."""
    per_chunk = payload_bytes(kind, chunk)
    chunks = (budget // 3) // per_chunk
    if chunks < 1:
        raise _flag_error("--ram-budget", f"{budget} bytes cannot hold three batches of one chunk")
    return chunks * chunk


def _chunk_for(batch: int | None) -> int:
    if batch is None or batch % CHUNK_SIZE == 0:
        return CHUNK_SIZE
    return 8


def _solve_config(args, kind: Payload) -> SolveConfig:
    if args.goal_config:
        caps = _caps(args, None)
        try:
            goal = engine.parse_goal_config(_read_text(args.goal_config, "--goal-config"), caps.cols)
        except ValueError as exc:
            raise _flag_error("--goal-config", str(exc)) from None
    else:
        tile = _goal_tile(args)
        caps = _caps(args, tile)
        goal = MergeGoal(tile)
    if not args.out:
        raise _flag_error("--out", "required")
    batch = _batch_size(args, kind)
    try:
        return SolveConfig(caps, goal, Path(args.out), payload=kind, batch_size=batch,
                           chunk_size=_chunk_for(batch), workers=_workers(args),
                           keep_layers=not args.drop_consumed)
    except ValueError as exc:
        raise _flag_error("--caps", str(exc)) from None


# --- subcommands ----------------------------------------------------------------

def cmd_census(args, out) -> int:
    tile = _goal_tile(args)
    caps = _caps(args, tile)
    table = CountTable(caps, wide=args.wide)
    census = layer_census(table)
    text = census_csv(census, "\t" if args.format == "tsv" else ",")
    out.write(text)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"census_{caps.rows}x{caps.cols}_T{tile}.csv").write_text(census_csv(census))
    big = max(census, key=lambda row: row[1])
    total = sum(c for _, c in census)
    print(f"# max layer size {big[1]} at sum {big[0]}; total {total}", file=sys.stderr)
    return 0


def cmd_solve(args, out) -> int:
    if args.mode == "reach":
        cfg = _solve_config(args, Payload.BIT)
        db, stats = solve_reach(cfg)
        win = db.start_wins
        out.write(f"{cfg.rows}x{cfg.cols} {_goal_text(cfg)}: {'WIN' if win else 'LOSS'} "
                  f"from the empty board, computer to move\n")
        out.write(f"layers={stats.layers_written} positions={stats.positions} "
                  f"peak_resident={stats.peak_resident} seconds={stats.seconds:.2f}\n")
        out.write(f"RESULT {'win' if win else 'loss'}\n")
        return 0
    kind = Payload.FLOAT64 if args.unverified_float else Payload.FIXED32
    cfg = _solve_config(args, kind)
    db, stats = solve_prob(cfg, unverified_float=args.unverified_float)
    raw, text = query_prob(db, engine.Board.empty(cfg.rows, cfg.cols), Turn.COMPUTER)
    out.write(f"{cfg.rows}x{cfg.cols} {_goal_text(cfg)}: lower bound {text} (raw {raw})\n")
    out.write(f"layers={stats.layers_written} positions={stats.positions} "
              f"peak_resident={stats.peak_resident} seconds={stats.seconds:.2f}\n")
    out.write(f"RESULT bound={text.split()[0]}\n")
    return 0


def _goal_text(cfg: SolveConfig) -> str:
    if isinstance(cfg.goal, MergeGoal):
        return f"T={cfg.goal.tile}"
    return "config goal " + " ".join(f"{1 << e}@({i // cfg.cols + 1},{i % cfg.cols + 1})"
                                     for i, e in cfg.goal.required)


def _open_db(args) -> LayerDB:
    if not args.db:
        raise _flag_error("--db", "required")
    try:
        db = LayerDB(args.db)
    except FileNotFoundError as exc:
        raise _flag_error("--db", str(exc)) from None
    if not db.complete:
        raise DomainError(f"run in {args.db} is incomplete; rerun the solve to resume it")
    cls = ReachDB if db.payload == Payload.BIT else ProbDB
    return cls(args.db)


def cmd_query(args, out) -> int:
    db = _open_db(args)
    if not args.board:
        raise _flag_error("--board", "required")
    try:
        board = engine.parse_board(args.board)
    except ValueError as exc:
        raise _flag_error("--board", str(exc)) from None
    if (board.rows, board.cols) != (db.caps.rows, db.caps.cols):
        raise _flag_error("--board", f"expected {db.caps.rows}x{db.caps.cols}, "
                                     f"got {board.rows}x{board.cols}")
    if not engine.within_caps(board, db.caps):
        raise _flag_error("--board", "a tile exceeds its cell cap")
    if engine.board_sum(board) > db.caps.max_sum:
        raise _flag_error("--board", "tile sum exceeds the run's range")
    turn = Turn.PLAYER if args.turn == "player" else Turn.COMPUTER
    if isinstance(db, ReachDB):
        win = db.query(board, turn)
        out.write(f"{engine.render_board(board)} {args.turn} to move: {'WIN' if win else 'LOSS'}\n")
        out.write(f"RESULT {'win' if win else 'loss'}\n")
    else:
        raw, text = query_prob(db, board, turn)
        out.write(f"{engine.render_board(board)} {args.turn} to move: {text} (raw {raw})\n")
        out.write(f"RESULT bound={text.split()[0]}\n")
    return 0


def cmd_starts(args, out) -> int:
    db = _open_db(args)
    if not isinstance(db, ReachDB):
        raise _flag_error("--db", "starts needs a reach run")
    report = evaluate_two_tile_starts(db)
    sep = "\t" if args.format == "tsv" else ","
    w = csv.writer(out, delimiter=sep, lineterminator="\n")
    w.writerow(["board", "result"])
    for b, win in report.starts:
        w.writerow([engine.render_board(b), "win" if win else "loss"])
    out.write(f"# {report.wins} of {report.total} two-tile starts win\n")
    out.write(f"RESULT {'win' if report.all_win else 'loss'}\n")
    return 0


def cmd_max_tile(args, out) -> int:
    if args.rows is None or args.cols is None:
        raise _flag_error("--rows/--cols", "required")
    res = max_guaranteed_tile(args.rows, args.cols, workdir=args.out,
                              max_positions=args.budget, workers=_workers(args))
    for t, win in sorted(res.verdicts.items()):
        out.write(f"# {args.rows}x{args.cols} T={t}: {'WIN' if win else 'LOSS'}\n")
    if not res.exact:
        out.write(f"# budget reached; {res.tile} is a lower bound\n")
    out.write(f"{res.tile}\n")
    return 0


LEMMA_FIELDS = ["reading", "goal", "playouts", "wins", "max_length", "depth", "starts",
                "nodes", "loops", "progress_violations", "counterexamples", "passed"]


def cmd_verify_lemma(args, out) -> int:
    goal = args.goal if args.goal is not None else 2048
    rep = check_lemma(goal=goal, playouts=args.playouts, depth=args.depth, seed=args.seed,
                      reading=args.reading, fillings=args.fillings,
                      skip_opening=args.skip_opening)
    if args.format:
        w = csv.writer(out, delimiter="\t" if args.format == "tsv" else ",", lineterminator="\n")
        w.writerow(LEMMA_FIELDS)
        w.writerow([rep.reading, goal, rep.playouts, rep.wins, rep.max_length,
                    rep.exhaustive_depth, rep.exhaustive_starts, rep.exhaustive_nodes,
                    rep.loop_iterations, rep.progress_violations, len(rep.counterexamples),
                    int(rep.passed)])
    else:
        out.write(rep.summary() + "\n")
        for cx in rep.counterexamples[:3]:
            out.write(f"counterexample ({cx.reason}), last boards:\n")
            for b in cx.boards[-4:]:
                out.write(f"  {engine.render_board(b)}\n")
    out.write(f"RESULT {'win' if rep.passed else 'loss'}\n")
    return 0 if rep.passed else 1


def cmd_emit_tables(args, out) -> int:
    if not args.db:
        raise _flag_error("--db", "required (results directory)")
    root = Path(args.db)
    if not root.is_dir():
        raise _flag_error("--db", f"{root} is not a directory")
    dest = Path(args.out) if args.out else root
    written = emit_tables(root, dest, "\t" if args.format == "tsv" else ",")
    for p in written:
        out.write(f"wrote {p}\n")
    return 0


def emit_tables(root: Path, dest: Path, sep: str = ",") -> list[Path]:
    """Collect solved runs and census files under ``root`` into tables."""
    runs = sorted(p.parent for p in root.rglob(MANIFEST))
    censuses = sorted(root.rglob("census_*.csv"))
    if not runs and not censuses:
        raise DomainError(f"nothing to tabulate in {root}: expected run directories containing "
                          f"{MANIFEST} (from solve/max-tile --out) or census_*.csv files "
                          f"(from census --out)")
    reach_rows, bound_rows, best = [], [], {}
    for run in runs:
        db = LayerDB(run)
        if not db.complete:
            continue
        rows, cols = db.caps.rows, db.caps.cols
        goal = db.goal.tile if isinstance(db.goal, MergeGoal) else "config"
        empty = engine.Board.empty(rows, cols)
        if db.payload == Payload.BIT:
            win = bool(db.lookup(empty, Turn.COMPUTER))
            caps = " ".join(str(v) for v in db.caps.values()[0]) if _uniform(db.caps) else "mixed"
            reach_rows.append([rows, cols, goal, caps, "win" if win else "loss"])
            if (win and isinstance(db.goal, MergeGoal) and _uniform(db.caps)
                    and (1 << db.caps.exps[0]) * 2 == db.goal.tile):
                best[(rows, cols)] = max(best.get((rows, cols), 2), db.goal.tile)
        elif db.payload == Payload.FIXED32:
            raw = int(db.lookup(empty, Turn.COMPUTER))
            bound_rows.append([rows, cols, goal, raw, render_decimal(raw)])
    written = []
    dest.mkdir(parents=True, exist_ok=True)

    def put(name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=sep, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        path = dest / name
        path.write_text(buf.getvalue())
        written.append(path)

    if reach_rows:
        put("reach.csv", ["rows", "cols", "T", "caps", "result"], sorted(reach_rows, key=str))
        put("guaranteed.csv", ["rows", "cols", "tile"],
            [[r, c, t] for (r, c), t in sorted(best.items())])
    if bound_rows:
        put("bounds.csv", ["rows", "cols", "goal", "bound_raw", "bound_decimal_truncated"],
            sorted(bound_rows, key=str))
    if censuses:
        rows = []
        for f in censuses:
            shape, tile = f.stem.split("_")[1:3]
            r, c = shape.split("x")
            for row in csv.DictReader(io.StringIO(f.read_text())):
                rows.append([int(r), int(c), int(tile[1:]), int(row["sum"]), int(row["count"])])
        put("layers.csv", ["rows", "cols", "T", "sum", "count"], rows)
    return written


def _uniform(caps: Caps) -> bool:
    return len(set(caps.exps)) == 1


# --- argument parsing -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p, *, shape=True, solve=False, db=False, fmt=False):
    if shape:
        p.add_argument("--rows", type=int)
        p.add_argument("--cols", type=int)
        p.add_argument("--goal", type=int, help="goal tile T")
        p.add_argument("--caps", help="caps file: one line per row of tile values")
    p.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
    if solve:
        p.add_argument("--goal-config", help="goal configuration file: lines 'r c value'")
        p.add_argument("--out", help="run directory")
        p.add_argument("--batch-size", type=int, help="positions per batch")
        p.add_argument("--ram-budget", type=int, help="bytes; picks the batch size")
        p.add_argument("--drop-consumed", action="store_true",
                       help="delete layers once nothing below reads them")
    if db:
        p.add_argument("--db", help="solved run directory")
    if fmt:
        p.add_argument("--format", choices=("csv", "tsv"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="layer2048", description="Exhaustive 2048 solver and prover")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("census", help="layer sizes per tile sum")
    _common(p, fmt=True)
    p.add_argument("--out", help="also write census_<r>x<c>_T<goal>.csv here")
    p.add_argument("--wide", action="store_true", help="arbitrary-precision counts")

    p = sub.add_parser("solve", help="solve a configuration")
    p.add_argument("mode", choices=("reach", "prob"))
    _common(p, solve=True)
    p.add_argument("--unverified-float", action="store_true",
                   help="prob only: float64 values, no soundness guarantee")

    p = sub.add_parser("query", help="look up one position")
    _common(p, shape=False, db=True)
    p.add_argument("--board", help="e.g. 2,0;0,4")
    p.add_argument("--turn", choices=("player", "computer"), default="computer")

    p = sub.add_parser("starts", help="all two-tile starts of a reach run")
    _common(p, shape=False, db=True, fmt=True)

    p = sub.add_parser("max-tile", help="largest guaranteed tile with caps T/2")
    _common(p)
    p.add_argument("--out", help="keep run directories here")
    p.add_argument("--budget", type=int, default=50_000_000,
                   help="max positions per turn for one run")

    p = sub.add_parser("verify-lemma", help="check the five-big-tile strategy")
    p.add_argument("--goal", type=int, default=2048)
    p.add_argument("--playouts", type=int, default=10_000)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fillings", type=int, default=0,
                   help="extra random small-tile starts for the exhaustive part")
    p.add_argument("--reading", choices=("swapped", "literal"), default="swapped")
    p.add_argument("--skip-opening", action="store_true", help="mutation: omit the opening Left")
    p.add_argument("--format", choices=("csv", "tsv"), default=None)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("emit-tables", help="tabulate results under a directory")
    _common(p, shape=False, db=True, fmt=True)
    p.add_argument("--out", help="destination (default: the results directory)")
    return ap


COMMANDS = {
    "census": cmd_census, "solve": cmd_solve, "query": cmd_query, "starts": cmd_starts,
    "max-tile": cmd_max_tile, "verify-lemma": cmd_verify_lemma, "emit-tables": cmd_emit_tables,
}


def run(argv: list[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, LayerError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
