"""Sensitivity experiments: perturb a position, compare the two playouts.

A perturbation relocates exactly one piece to a king-step-adjacent
empty square, the smallest positional change the board admits. For a
base/perturbed pair the divergence record tracks the per-ply Euclidean
and Hamming distances between the encoded vectors over the common
prefix, the first ply at which the chosen moves differ, and a
finite-time divergence exponent. The experiment driver samples base
positions from a solved table under a fixed seed and aggregates the
records; identical inputs give byte-identical reports.

All numbers reported here are observations about exactly solved small
classes. They say nothing about boards or material beyond what was
measured.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Optional

import numpy as np

from .board import (
    CastleRights,
    Color,
    PieceKind,
    Position,
    geometry,
    square_name,
    validate_position,
)
from .encoding import Mode, encode
from .errors import UnsupportedCaseError, ValidationError
from .fen import format_fen
from .playout import Playout, generate_playout
from .tablebase import Tablebase, Wdl, WdlDtm, index_of, position_at

SCHEMA_VERSION = 1
SCOPE_NOTE = (
    "Desk-scale observations on exactly solved endgame classes; "
    "no claim is made about boards, material, or play beyond what was measured."
)

STANDARD_VALUES = {
    PieceKind.PAWN: 1,
    PieceKind.KNIGHT: 3,
    PieceKind.BISHOP: 3,
    PieceKind.ROOK: 5,
    PieceKind.QUEEN: 9,
    PieceKind.KING: 0,
}


class OutcomeClass(str, Enum):
    SAME_WINNER = "both-decisive-same-winner"
    FLIP = "outcome-flip"
    DRAW_INVOLVED = "draw-involved"


@dataclass(frozen=True)
class Perturbation:
    base: Position
    moved_from: int
    moved_to: int
    perturbed: Position


def perturbations(pos: Position) -> list:
    """All single-piece one-king-step relocations that stay valid.

    Targets must be empty; the relocated position keeps the side to
    move and must satisfy every position invariant. Output is ordered
    by (piece square, target square).
    """
    geo = geometry(pos.spec.width, pos.spec.height)
    out = []
    board = pos.placement
    for from_sq, cell in enumerate(board):
        if cell == 0:
            continue
        for to_sq in geo.king_steps[from_sq]:
            if board[to_sq] != 0:
                continue
            nb = list(board)
            nb[from_sq] = 0
            nb[to_sq] = cell
            candidate = Position(
                spec=pos.spec,
                placement=tuple(nb),
                side_to_move=pos.side_to_move,
                ep_square=pos.ep_square,
                castle_rights=pos.castle_rights,
                ply_index=pos.ply_index,
            )
            try:
                validate_position(candidate)
            except ValidationError:
                if pos.ep_square is None and not pos.castle_rights.any():
                    continue
                # Relocation may have broken only ep/castling bookkeeping;
                # retry with that state dropped before giving up.
                candidate = replace(candidate, ep_square=None, castle_rights=CastleRights())
                try:
                    validate_position(candidate)
                except ValidationError:
                    continue
            out.append(Perturbation(pos, from_sq, to_sq, candidate))
    return out


@dataclass(frozen=True)
class DivergenceRecord:
    """Separation measurements for one base/perturbed pair."""

    base: Position
    perturbed: Position
    base_value: WdlDtm
    perturbed_value: WdlDtm
    outcome_class: OutcomeClass
    d_series: tuple  # Euclidean distances d(0..m) over the common prefix
    hamming_series: tuple
    first_divergence_ply: Optional[int]
    lambda_ft: Optional[float] = None

    @property
    def prefix_plies(self) -> int:
        return len(self.d_series) - 1


def _value_from_playout(playout: Playout) -> WdlDtm:
    wdl = Wdl.WIN if playout.winner is playout.initial.side_to_move else Wdl.LOSS
    return WdlDtm(wdl, playout.initial_dtm)


def divergence(path_a: Playout, path_b: Playout) -> DivergenceRecord:
    """Compare two playouts over their common prefix.

    d(n) and hamming(n) run for n = 0..m where m is the shorter playout
    length in plies; first_divergence_ply is the first ply whose chosen
    moves differ (None if they agree over the whole prefix).
    """
    if path_a.mode is not path_b.mode:
        raise ValidationError("playout encoding modes differ")
    m = min(path_a.plies, path_b.plies)
    vecs_a = path_a.vectors()[: m + 1]
    vecs_b = path_b.vectors()[: m + 1]
    d_series = []
    hamming_series = []
    for va, vb in zip(vecs_a, vecs_b):
        sq_sum = 0
        differing = 0
        for ca, cb in zip(va.components, vb.components):
            if ca != cb:
                diff = cb - ca
                sq_sum += diff * diff
                differing += 1
        d_series.append(math.sqrt(sq_sum))
        hamming_series.append(differing)
    first_div = None
    for n in range(1, m + 1):
        if path_a.steps[n - 1].move != path_b.steps[n - 1].move:
            first_div = n
            break
    winner_a, winner_b = path_a.winner, path_b.winner
    outcome_class = (
        OutcomeClass.SAME_WINNER if winner_a is winner_b else OutcomeClass.FLIP
    )
    return DivergenceRecord(
        base=path_a.initial,
        perturbed=path_b.initial,
        base_value=_value_from_playout(path_a),
        perturbed_value=_value_from_playout(path_b),
        outcome_class=outcome_class,
        d_series=tuple(d_series),
        hamming_series=tuple(hamming_series),
        first_divergence_ply=first_div,
    )


def finite_time_lyapunov(record: DivergenceRecord) -> float:
    """(1/m) * ln(d(m)/d(0)) over the common prefix, in nats per ply.

    Defined only for both-decisive-same-winner pairs with a prefix of
    at least 2 plies and a nonzero initial separation. Pairs whose
    paths merge (d(m) = 0) yield -inf; callers should count those
    separately rather than average them.
    """
    if record.outcome_class is not OutcomeClass.SAME_WINNER:
        raise UnsupportedCaseError(
            "finite-time exponent is defined only for same-winner decisive pairs"
        )
    m = record.prefix_plies
    if m < 2:
        raise UnsupportedCaseError(f"common prefix too short ({m} plies, need >= 2)")
    d0 = record.d_series[0]
    if d0 == 0.0:
        raise UnsupportedCaseError("zero initial separation: identical starts")
    dm = record.d_series[m]
    if dm == 0.0:
        return float("-inf")
    return math.log(dm / d0) / m


@dataclass(frozen=True)
class AtypicalityThresholds:
    depletion_max_pieces: int = 3
    forced_mate_max_dtm: int = 10
    material_gap_min: int = 5

    def __post_init__(self):
        if min(self.depletion_max_pieces, self.forced_mate_max_dtm, self.material_gap_min) <= 0:
            raise ValidationError("atypicality thresholds must be positive")

    def as_dict(self) -> dict:
        return {
            "depletion_max_pieces": self.depletion_max_pieces,
            "forced_mate_max_dtm": self.forced_mate_max_dtm,
            "material_gap_min": self.material_gap_min,
        }


DEFAULT_THRESHOLDS = AtypicalityThresholds()


@dataclass(frozen=True)
class AtypicalityResult:
    atypical: bool
    reasons: tuple
    piece_count: int
    dtm: Optional[int]
    material_gap: int


def material_gap(pos: Position) -> int:
    points = {Color.WHITE: 0, Color.BLACK: 0}
    for _, piece in pos.pieces():
        points[piece.color] += STANDARD_VALUES[piece.kind]
    return abs(points[Color.WHITE] - points[Color.BLACK])


def is_atypical(
    pos: Position, tb: Tablebase, thresholds: AtypicalityThresholds = DEFAULT_THRESHOLDS
) -> AtypicalityResult:
    """Classify a position against the three atypicality conditions.

    A position is atypical when it is depleted of pieces, carries a
    forced mate within the threshold, or shows an overwhelming
    standard-value material gap. Reasons list every triggered condition.
    """
    reasons = []
    count = pos.piece_count()
    if count <= thresholds.depletion_max_pieces:
        reasons.append("depletion")
    value = tb.probe(pos)
    dtm = value.dtm if value.is_decisive else None
    if value.is_decisive and value.dtm <= thresholds.forced_mate_max_dtm:
        reasons.append("forced-mate")
    gap = material_gap(pos)
    if gap >= thresholds.material_gap_min:
        reasons.append("material-gap")
    return AtypicalityResult(bool(reasons), tuple(reasons), count, dtm, gap)


@dataclass(frozen=True)
class PairRecord:
    """Serializable per-pair experiment row."""

    base_index: int
    perturbed_index: int
    record: DivergenceRecord


@dataclass
class ExperimentReport:
    material: str
    board: tuple
    sample_size: int
    seed: int
    mode: Mode
    thresholds: AtypicalityThresholds
    table_checksum: int
    counts: dict
    lambda_summary: Optional[dict]
    first_divergence_histogram: dict
    atypicality: dict
    pairs: tuple

    def json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "divergence-experiment",
            "material": self.material,
            "board": {"width": self.board[0], "height": self.board[1]},
            "sample_size": self.sample_size,
            "seed": self.seed,
            "mode": self.mode.value,
            "thresholds": self.thresholds.as_dict(),
            "table_checksum": f"crc32:{self.table_checksum:08x}",
            "counts": self.counts,
            "lambda_per_ply": self.lambda_summary,
            "first_divergence_histogram": self.first_divergence_histogram,
            "atypicality_of_bases": self.atypicality,
            "records_file": "records.csv",
            "manifest_file": "manifest.jsonl",
            "scope_note": SCOPE_NOTE,
        }

    def json_text(self) -> str:
        return json.dumps(self.json_dict(), indent=2, sort_keys=True) + "\n"

    def write_records_csv(self, stream: IO[str]) -> None:
        import csv as _csv

        writer = _csv.writer(stream, lineterminator="\n")
        writer.writerow(
            [
                "base_index", "base_fen", "base_wdl", "base_dtm",
                "perturb_from", "perturb_to",
                "perturbed_index", "perturbed_fen", "perturbed_wdl", "perturbed_dtm",
                "outcome_class", "prefix_plies", "d0", "dm",
                "first_divergence_ply", "lambda_ft",
                "d_series", "hamming_series",
            ]
        )
        for pair in self.pairs:
            rec = pair.record
            base, pert = rec.base, rec.perturbed
            width = base.spec.width
            lam = rec.lambda_ft
            writer.writerow(
                [
                    pair.base_index,
                    format_fen(base),
                    rec.base_value.wdl.name.lower(),
                    "" if rec.base_value.dtm is None else rec.base_value.dtm,
                    square_name(_perturb_from(base, pert), width),
                    square_name(_perturb_to(base, pert), width),
                    pair.perturbed_index,
                    format_fen(pert),
                    rec.perturbed_value.wdl.name.lower(),
                    "" if rec.perturbed_value.dtm is None else rec.perturbed_value.dtm,
                    rec.outcome_class.value,
                    rec.prefix_plies,
                    repr(rec.d_series[0]),
                    repr(rec.d_series[-1]),
                    "" if rec.first_divergence_ply is None else rec.first_divergence_ply,
                    "" if lam is None else repr(lam),
                    "|".join(repr(d) for d in rec.d_series),
                    "|".join(str(h) for h in rec.hamming_series),
                ]
            )


def _perturb_from(base: Position, perturbed: Position) -> int:
    for sq, (a, b) in enumerate(zip(base.placement, perturbed.placement)):
        if a != 0 and b == 0:
            return sq
    raise ValueError("positions do not differ by a relocation")


def _perturb_to(base: Position, perturbed: Position) -> int:
    for sq, (a, b) in enumerate(zip(base.placement, perturbed.placement)):
        if a == 0 and b != 0:
            return sq
    raise ValueError("positions do not differ by a relocation")


def _draw_involved_record(
    base: Position, perturbed: Position, base_value: WdlDtm, pert_value: WdlDtm, mode: Mode
) -> DivergenceRecord:
    va = encode(base, mode)
    vb = encode(perturbed, mode)
    sq_sum = 0
    differing = 0
    for ca, cb in zip(va.components, vb.components):
        if ca != cb:
            sq_sum += (cb - ca) ** 2
            differing += 1
    return DivergenceRecord(
        base=base,
        perturbed=perturbed,
        base_value=base_value,
        perturbed_value=pert_value,
        outcome_class=OutcomeClass.DRAW_INVOLVED,
        d_series=(math.sqrt(sq_sum),),
        hamming_series=(differing,),
        first_divergence_ply=None,
    )


def _pairs_for_base(tb: Tablebase, base_idx: int, mode: Mode) -> list:
    base = position_at(base_idx, tb.material)
    base_value = tb.probe(base)
    base_path = generate_playout(base, tb, mode)
    out = []
    for perturbation in perturbations(base):
        perturbed = perturbation.perturbed
        pert_idx = index_of(perturbed, tb.material)
        pert_value = tb.probe(perturbed)
        if not pert_value.is_decisive or not base_value.is_decisive:
            record = _draw_involved_record(base, perturbed, base_value, pert_value, mode)
        else:
            pert_path = generate_playout(perturbed, tb, mode)
            record = divergence(base_path, pert_path)
            if record.outcome_class is OutcomeClass.SAME_WINNER and record.prefix_plies >= 2:
                record = replace(record, lambda_ft=finite_time_lyapunov(record))
        out.append(PairRecord(base_idx, pert_idx, record))
    return out


_EXPERIMENT_STATE: Optional[tuple] = None


def _worker_pairs(indices):
    tb, mode = _EXPERIMENT_STATE
    return [_pairs_for_base(tb, idx, mode) for idx in indices]


def sample_experiment(
    tb: Tablebase,
    sample_size: int,
    seed: int,
    *,
    thresholds: AtypicalityThresholds = DEFAULT_THRESHOLDS,
    mode: Mode = Mode.AUGMENTED,
    workers: int = 1,
) -> ExperimentReport:
    """Sample decisive bases, perturb each, and aggregate the divergence records.

    Fully deterministic for a fixed (table, sample_size, seed) triple;
    worker count cannot change the output because records are merged in
    canonical (base index, perturbation) order.
    """
    decisive = tb.decisive_indices()
    if decisive.size == 0:
        raise UnsupportedCaseError("table has no decisive entries to sample")
    if sample_size <= 0:
        raise ValidationError("sample_size must be positive")
    rng = random.Random(seed)
    population = decisive.tolist()
    if sample_size >= len(population):
        chosen = population
    else:
        chosen = rng.sample(population, sample_size)
    base_indices = sorted(chosen)

    if workers > 1:
        import multiprocessing

        global _EXPERIMENT_STATE
        _EXPERIMENT_STATE = (tb, mode)
        chunk = max(1, len(base_indices) // (workers * 4))
        chunks = [base_indices[i:i + chunk] for i in range(0, len(base_indices), chunk)]
        try:
            with multiprocessing.get_context("fork").Pool(workers) as pool:
                nested = pool.map(_worker_pairs, chunks)
        finally:
            _EXPERIMENT_STATE = None
        pairs = [pair for chunk_result in nested for per_base in chunk_result for pair in per_base]
    else:
        pairs = [
            pair for idx in base_indices for pair in _pairs_for_base(tb, idx, mode)
        ]

    counts = {
        "bases": len(base_indices),
        "pairs_total": len(pairs),
        "same_winner": 0,
        "outcome_flip": 0,
        "draw_involved": 0,
        "merged_pairs": 0,
        "short_prefix_pairs": 0,
    }
    lambdas = []
    first_div_hist: dict = {}
    for pair in pairs:
        rec = pair.record
        if rec.outcome_class is OutcomeClass.SAME_WINNER:
            counts["same_winner"] += 1
            if rec.prefix_plies < 2:
                counts["short_prefix_pairs"] += 1
            elif rec.lambda_ft == float("-inf"):
                counts["merged_pairs"] += 1
            else:
                lambdas.append(rec.lambda_ft)
        elif rec.outcome_class is OutcomeClass.FLIP:
            counts["outcome_flip"] += 1
        else:
            counts["draw_involved"] += 1
        if rec.first_divergence_ply is not None:
            key = str(rec.first_divergence_ply)
            first_div_hist[key] = first_div_hist.get(key, 0) + 1
        elif rec.outcome_class is not OutcomeClass.DRAW_INVOLVED:
            first_div_hist["none"] = first_div_hist.get("none", 0) + 1
    counts["lambda_count"] = len(lambdas)
    counts["outcome_flip_rate"] = (
        counts["outcome_flip"] / counts["pairs_total"] if pairs else 0.0
    )

    lambda_summary = None
    if lambdas:
        arr = np.sort(np.asarray(lambdas, dtype=np.float64))
        deciles = {
            f"p{q}": float(np.percentile(arr, q)) for q in range(10, 100, 10)
        }
        lambda_summary = {
            "count": int(arr.size),
            "min": float(arr[0]),
            "median": float(np.percentile(arr, 50)),
            "max": float(arr[-1]),
            **deciles,
        }

    atypicality = {"depletion": 0, "forced-mate": 0, "material-gap": 0, "typical": 0}
    for idx in base_indices:
        result = is_atypical(position_at(idx, tb.material), tb, thresholds)
        if not result.atypical:
            atypicality["typical"] += 1
        for reason in result.reasons:
            atypicality[reason] += 1

    return ExperimentReport(
        material=tb.material.name,
        board=(tb.material.spec.width, tb.material.spec.height),
        sample_size=sample_size,
        seed=seed,
        mode=mode,
        thresholds=thresholds,
        table_checksum=tb.checksum,
        counts=counts,
        lambda_summary=lambda_summary,
        first_divergence_histogram=dict(sorted(first_div_hist.items())),
        atypicality=atypicality,
        pairs=tuple(pairs),
    )
