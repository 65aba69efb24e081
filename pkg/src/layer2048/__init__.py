"""Exhaustive 2048 solving over fixed-sum position layers."""

from .engine import (Board, Caps, ConfigGoal, Direction, MergeGoal, Turn, legal_moves,
                     parse_board, render_board, spawn, swipe)
from .indexer import CountTable, layer_census
from .layerstore import LayerMeta, Payload, create_layer, open_layer
from .lemma import check_lemma, policy_move
from .prob import ProbDB, expectimax_oracle, query_prob, solve_prob
from .reach import ReachDB, max_guaranteed_tile, minimax_oracle, query_reach, solve_reach
from .sweep import SolveConfig

__all__ = [
    "Board", "Caps", "ConfigGoal", "Direction", "MergeGoal", "Turn", "legal_moves",
    "parse_board", "render_board", "spawn", "swipe", "CountTable", "layer_census",
    "LayerMeta", "Payload", "create_layer", "open_layer", "check_lemma", "policy_move",
    "ProbDB", "expectimax_oracle", "query_prob", "solve_prob", "ReachDB",
    "max_guaranteed_tile", "minimax_oracle", "query_reach", "solve_reach", "SolveConfig",
]
