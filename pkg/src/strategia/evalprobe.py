"""Capacity-bounded static evaluators fitted against tablebase truth.

A static evaluator scores a position from its surface features alone,
with no search. The model family here is linear least squares over a
fixed, named feature chain; capacity = how many leading features of
the chain the model may use. Regression targets are signed distances
to mate (positive when the side to move wins, negative when it loses),
so the sign of a prediction doubles as a win/loss call. Fitting and
evaluation are deterministic given dataset order and seed.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from typing import IO, Optional, Sequence

import numpy as np

from .board import Color, PieceKind, Position, geometry
from .errors import UnknownFeatureError, ValidationError
from .tablebase import Tablebase, Wdl, position_at


def _material_count(kind: PieceKind, color: Color):
    cell = kind.value * color.sign

    def count(pos: Position) -> float:
        return float(sum(1 for c in pos.placement if c == cell))

    return count


def _king_square(pos: Position, color: Color) -> int:
    cell = PieceKind.KING.value * color.sign
    return pos.placement.index(cell)


def _chebyshev(a: int, b: int, width: int) -> int:
    return max(abs(a % width - b % width), abs(a // width - b // width))


def _king_distance(pos: Position) -> float:
    wk = _king_square(pos, Color.WHITE)
    bk = _king_square(pos, Color.BLACK)
    return float(_chebyshev(wk, bk, pos.spec.width))


def _defender_color(pos: Position) -> Color:
    """The materially weaker side (Black on ties)."""
    from .dynamics import STANDARD_VALUES

    points = {Color.WHITE: 0, Color.BLACK: 0}
    for _, piece in pos.pieces():
        points[piece.color] += STANDARD_VALUES[piece.kind]
    return Color.WHITE if points[Color.WHITE] < points[Color.BLACK] else Color.BLACK


def _defender_edge_distance(pos: Position) -> float:
    sq = _king_square(pos, _defender_color(pos))
    w, h = pos.spec.width, pos.spec.height
    f, r = sq % w, sq // w
    return float(min(f, w - 1 - f, r, h - 1 - r))


def _defender_corner_distance(pos: Position) -> float:
    sq = _king_square(pos, _defender_color(pos))
    w, h = pos.spec.width, pos.spec.height
    corners = (0, w - 1, (h - 1) * w, (h - 1) * w + w - 1)
    return float(min(_chebyshev(sq, c, w) for c in corners))


def _side_to_move(pos: Position) -> float:
    return 1.0 if pos.side_to_move is Color.WHITE else -1.0


def _pseudo_mobility(pos: Position, color: Color) -> float:
    """Pseudo-legal move count for one side: a cheap static activity measure.

    Counts destination squares ignoring king safety; moves onto a king
    square are excluded. Promotion choices count once per target square.
    """
    geo = geometry(pos.spec.width, pos.spec.height)
    board = pos.placement
    sign = color.sign
    total = 0
    for sq, cell in enumerate(board):
        if cell == 0 or (cell > 0) != (color is Color.WHITE):
            continue
        kind = abs(cell)
        if kind == 1:
            fwd = geo.pawn_push[color.value][sq]
            if fwd >= 0 and board[fwd] == 0:
                total += 1
                dbl = geo.pawn_double[color.value][sq]
                if dbl >= 0 and board[dbl] == 0:
                    total += 1
            for cap in geo.pawn_caps[color.value][sq]:
                if board[cap] * sign < 0 and abs(board[cap]) != 6:
                    total += 1
        elif kind == 2 or kind == 6:
            steps = geo.knight_steps[sq] if kind == 2 else geo.king_steps[sq]
            for to_sq in steps:
                cell_to = board[to_sq]
                if cell_to == 0 or (cell_to * sign < 0 and abs(cell_to) != 6):
                    total += 1
        else:
            rays = geo.ortho_rays[sq] if kind == 4 else geo.diag_rays[sq]
            if kind == 5:
                rays = geo.ortho_rays[sq] + geo.diag_rays[sq]
            for ray in rays:
                for to_sq in ray:
                    cell_to = board[to_sq]
                    if cell_to == 0:
                        total += 1
                        continue
                    if cell_to * sign < 0 and abs(cell_to) != 6:
                        total += 1
                    break
    return float(total)


FEATURE_EXTRACTORS = {
    "side_to_move": _side_to_move,
    "king_distance": _king_distance,
    "defender_edge_distance": _defender_edge_distance,
    "defender_corner_distance": _defender_corner_distance,
    "mobility_white": lambda pos: _pseudo_mobility(pos, Color.WHITE),
    "mobility_black": lambda pos: _pseudo_mobility(pos, Color.BLACK),
    "material_wp": _material_count(PieceKind.PAWN, Color.WHITE),
    "material_wn": _material_count(PieceKind.KNIGHT, Color.WHITE),
    "material_wb": _material_count(PieceKind.BISHOP, Color.WHITE),
    "material_wr": _material_count(PieceKind.ROOK, Color.WHITE),
    "material_wq": _material_count(PieceKind.QUEEN, Color.WHITE),
    "material_bp": _material_count(PieceKind.PAWN, Color.BLACK),
    "material_bn": _material_count(PieceKind.KNIGHT, Color.BLACK),
    "material_bb": _material_count(PieceKind.BISHOP, Color.BLACK),
    "material_br": _material_count(PieceKind.ROOK, Color.BLACK),
    "material_bq": _material_count(PieceKind.QUEEN, Color.BLACK),
}

# The nested capacity sweep walks this chain front to back; 16 features.
DEFAULT_FEATURE_CHAIN = (
    "side_to_move",
    "king_distance",
    "mobility_white",
    "defender_edge_distance",
    "defender_corner_distance",
    "mobility_black",
    "material_wp",
    "material_wn",
    "material_wb",
    "material_wr",
    "material_wq",
    "material_bp",
    "material_bn",
    "material_bb",
    "material_br",
    "material_bq",
)


def extract_features(pos: Position, names: Sequence[str] = DEFAULT_FEATURE_CHAIN) -> np.ndarray:
    """Feature vector for one position, in the order of `names`."""
    values = np.empty(len(names), dtype=np.float64)
    for i, name in enumerate(names):
        extractor = FEATURE_EXTRACTORS.get(name)
        if extractor is None:
            raise UnknownFeatureError(f"unknown feature {name!r}")
        values[i] = extractor(pos)
    return values


def signed_dtm(wdl: Wdl, dtm: int) -> float:
    """Regression target: +dtm for wins, -dtm for losses (side to move view)."""
    return float(dtm) if wdl is Wdl.WIN else -float(dtm)


def build_dtm_dataset(
    tb: Tablebase,
    names: Sequence[str] = DEFAULT_FEATURE_CHAIN,
    sample_size: Optional[int] = None,
    seed: int = 0,
):
    """(X, y, indices) over decisive entries, optionally a seeded subsample.

    Rows are ordered by table index, so the dataset is a pure function
    of (table, names, sample_size, seed).
    """
    decisive = tb.decisive_indices().tolist()
    if not decisive:
        raise ValidationError("table has no decisive entries")
    if sample_size is not None and sample_size < len(decisive):
        rng = random.Random(seed)
        decisive = sorted(rng.sample(decisive, sample_size))
    X = np.empty((len(decisive), len(names)), dtype=np.float64)
    y = np.empty(len(decisive), dtype=np.float64)
    for row, idx in enumerate(decisive):
        pos = position_at(idx, tb.material)
        X[row] = extract_features(pos, names)
        y[row] = signed_dtm(Wdl(int(tb.wdl[idx])), int(tb.dtm[idx]))
    return X, y, np.asarray(decisive, dtype=np.int64)


class LinearEvaluator:
    """Least-squares linear evaluator over the first `capacity` chain features.

    Minimal estimator interface: fit/predict plus get_params/set_params,
    so it slots into standard tooling. Capacity 0 is the bias-only
    model. Rank-deficient designs fall back to the minimal-norm
    solution (np.linalg.lstsq); `rank_deficient_` records that.
    """

    def __init__(self, features: Sequence[str] = DEFAULT_FEATURE_CHAIN, capacity: Optional[int] = None):
        self.features = tuple(features)
        self.capacity = len(self.features) if capacity is None else capacity

    def get_params(self, deep: bool = True) -> dict:
        return {"features": self.features, "capacity": self.capacity}

    def set_params(self, **params) -> "LinearEvaluator":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValidationError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def _design(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] < self.capacity:
            raise ValidationError(
                f"feature matrix must have at least {self.capacity} columns"
            )
        ones = np.ones((X.shape[0], 1))
        return np.concatenate([X[:, : self.capacity], ones], axis=1)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearEvaluator":
        if not 0 <= self.capacity <= len(self.features):
            raise ValidationError(
                f"capacity {self.capacity} outside 0..{len(self.features)}"
            )
        y = np.asarray(y, dtype=np.float64)
        if y.size == 0:
            raise ValidationError("empty training dataset")
        design = self._design(X)
        coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        self.weights_ = coef[:-1]
        self.bias_ = float(coef[-1])
        self.rank_ = int(rank)
        self.rank_deficient_ = rank < design.shape[1]
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise ValidationError("evaluator is not fitted")
        design = self._design(X)
        return design[:, :-1] @ self.weights_ + self.bias_


def fit_evaluator(X: np.ndarray, y: np.ndarray, capacity: int,
                  features: Sequence[str] = DEFAULT_FEATURE_CHAIN) -> LinearEvaluator:
    return LinearEvaluator(features=features, capacity=capacity).fit(X, y)


@dataclass(frozen=True)
class ErrorReport:
    dtm_mae: float
    wdl_misclassification: float
    sample_size: int
    capacity: int

    def __post_init__(self):
        if not 0.0 <= self.wdl_misclassification <= 1.0:
            raise ValidationError("misclassification rate must lie in [0, 1]")
        if self.dtm_mae < 0:
            raise ValidationError("MAE must be nonnegative")


def mae(predicted: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean(np.abs(predicted - target)))


def wdl_misclassification(predicted: np.ndarray, target: np.ndarray) -> float:
    """Sign rule: predicted > 0 calls a win, < 0 a loss; 0 is always wrong."""
    return float(np.mean(np.sign(predicted) != np.sign(target)))


def evaluator_error(
    model: LinearEvaluator,
    tb: Tablebase,
    sample_size: Optional[int],
    seed: int,
) -> ErrorReport:
    """Model error against table truth on a seeded decisive sample."""
    X, y, _ = build_dtm_dataset(tb, model.features, sample_size, seed)
    predicted = model.predict(X)
    return ErrorReport(
        dtm_mae=mae(predicted, y),
        wdl_misclassification=wdl_misclassification(predicted, y),
        sample_size=int(y.size),
        capacity=model.capacity,
    )


def capacity_sweep(
    tb: Tablebase,
    capacities: Sequence[int],
    *,
    features: Sequence[str] = DEFAULT_FEATURE_CHAIN,
    train_sample: Optional[int] = None,
    eval_sample: Optional[int] = None,
    seed: int = 0,
) -> list:
    """Fit one model per capacity on a shared train set; report train/eval error.

    Returns rows of (capacity, train_mae, eval_mae, wdl_misclassification,
    train_size, eval_size). The eval sample is drawn with a shifted seed
    so it differs from the train sample when subsampling.
    """
    X_train, y_train, _ = build_dtm_dataset(tb, features, train_sample, seed)
    X_eval, y_eval, _ = build_dtm_dataset(tb, features, eval_sample, seed + 1)
    rows = []
    for capacity in capacities:
        model = fit_evaluator(X_train, y_train, capacity, features)
        train_mae = mae(model.predict(X_train), y_train)
        eval_pred = model.predict(X_eval)
        rows.append(
            (
                capacity,
                train_mae,
                mae(eval_pred, y_eval),
                wdl_misclassification(eval_pred, y_eval),
                int(y_train.size),
                int(y_eval.size),
            )
        )
    return rows


def write_sweep_csv(rows, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(
        ["capacity", "train_mae", "eval_mae", "wdl_misclassification", "train_size", "eval_size"]
    )
    for capacity, train_mae_v, eval_mae_v, misclass, train_size, eval_size in rows:
        writer.writerow(
            [capacity, repr(train_mae_v), repr(eval_mae_v), repr(misclass), train_size, eval_size]
        )
