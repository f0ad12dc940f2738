"""Exact endgame solving and strategy-path dynamics laboratory.

Solve small material classes to perfect win/draw/loss and distance-to-
mate tables, encode positions as integer vectors, generate optimal-play
playouts, measure how fast perturbed playouts diverge, and fit
capacity-bounded static evaluators against table truth.
"""

__version__ = "0.1.0"

from .board import (
    BoardSpec,
    CastleRights,
    Color,
    Move,
    Outcome,
    Piece,
    PieceKind,
    Position,
    apply_move,
    in_check,
    legal_moves,
    legal_transitions,
    outcome,
    perft,
    validate_position,
)
from .dynamics import (
    DEFAULT_THRESHOLDS,
    AtypicalityResult,
    AtypicalityThresholds,
    DivergenceRecord,
    ExperimentReport,
    OutcomeClass,
    Perturbation,
    divergence,
    finite_time_lyapunov,
    is_atypical,
    perturbations,
    sample_experiment,
)
from .encoding import (
    ConfigVector,
    Mode,
    SparseDelta,
    apply_delta,
    decode,
    delta,
    encode,
)
from .errors import (
    BudgetExceededError,
    IllegalMoveError,
    MaterialMismatchError,
    ParseError,
    StrategiaError,
    TablebaseFormatError,
    UnknownFeatureError,
    UnsupportedCaseError,
    ValidationError,
)
from .evalprobe import (
    DEFAULT_FEATURE_CHAIN,
    ErrorReport,
    LinearEvaluator,
    build_dtm_dataset,
    capacity_sweep,
    evaluator_error,
    extract_features,
    fit_evaluator,
)
from .fen import format_fen, parse_fen
from .playout import Playout, PlayoutStep, generate_playout, policy_delta, policy_step
from .tablebase import (
    MaterialClass,
    SolveStats,
    Tablebase,
    Wdl,
    WdlDtm,
    index_of,
    material_key_of,
    position_at,
    solve,
)
