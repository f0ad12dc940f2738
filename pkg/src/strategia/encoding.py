"""Integer board encoding: one signed code per square, optional side component.

Each square holds an integer code: 0 for empty, positive for White,
negative for Black. The code distinguishes state that the bare piece
letter does not: 1 is a pawn currently capturable en passant, 2 any
other pawn; 3/4/5/6 are knight/bishop/rook/queen; 7 is a king whose
side still has castle rights, 8 a king without. In augmented mode a
trailing +1/-1 component records the side to move, which makes the
vector a complete game state on its own; strict mode omits it and
needs the side supplied out of band.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .board import (
    BoardSpec,
    CastleRights,
    Color,
    PieceKind,
    Position,
    validate_position,
)
from .errors import ValidationError


class Mode(str, Enum):
    STRICT = "strict"
    AUGMENTED = "augmented"


EP_PAWN = 1
PAWN = 2
KNIGHT = 3
BISHOP = 4
ROOK = 5
QUEEN = 6
CASTLE_KING = 7
KING = 8

_KIND_CODES = {
    PieceKind.KNIGHT: KNIGHT,
    PieceKind.BISHOP: BISHOP,
    PieceKind.ROOK: ROOK,
    PieceKind.QUEEN: QUEEN,
}


@dataclass(frozen=True)
class ConfigVector:
    """An encoded position: board components plus, in augmented mode, a side component."""

    mode: Mode
    components: tuple

    @property
    def board_components(self) -> tuple:
        return self.components[:-1] if self.mode is Mode.AUGMENTED else self.components

    @property
    def side_component(self) -> Optional[int]:
        return self.components[-1] if self.mode is Mode.AUGMENTED else None

    def dump(self) -> str:
        """Canonical text form: comma-separated integers, side component last."""
        return ",".join(str(c) for c in self.components)


@dataclass(frozen=True)
class SparseDelta:
    """Nonzero component differences between two vectors of equal shape.

    `entries` holds (square index, integer difference) pairs in square
    order; `side_delta` is the side-component difference in augmented
    mode (None when the sides agree or in strict mode).
    """

    entries: tuple
    side_delta: Optional[int] = None

    def board_entry_count(self) -> int:
        return len(self.entries)


def piece_code(pos: Position, sq: int) -> int:
    """The encoding code for the piece on `sq` of `pos` (0 if empty)."""
    cell = pos.placement[sq]
    if cell == 0:
        return 0
    kind = PieceKind(abs(cell))
    color = Color.WHITE if cell > 0 else Color.BLACK
    if kind is PieceKind.PAWN:
        code = PAWN
        if pos.ep_square is not None and color is not pos.side_to_move:
            if sq - color.sign * pos.spec.width == pos.ep_square:
                code = EP_PAWN
    elif kind is PieceKind.KING:
        code = CASTLE_KING if pos.castle_rights.for_color(color) else KING
    else:
        code = _KIND_CODES[kind]
    return code * color.sign


def encode(pos: Position, mode: Mode = Mode.AUGMENTED) -> ConfigVector:
    """Encode a position as an integer vector in square-index order."""
    components = [piece_code(pos, sq) for sq in range(pos.spec.num_squares)]
    if mode is Mode.AUGMENTED:
        components.append(1 if pos.side_to_move is Color.WHITE else -1)
    return ConfigVector(mode, tuple(components))


def _expected_length(spec: BoardSpec, mode: Mode) -> int:
    return spec.num_squares + (1 if mode is Mode.AUGMENTED else 0)


def decode(vec: ConfigVector, spec: BoardSpec, side: Optional[Color] = None) -> Position:
    """Reconstruct the position an encoded vector describes.

    Strict vectors do not carry the side to move, so `side` is required
    for them and forbidden for augmented vectors. En passant state is
    rebuilt from the code-1 pawn; castle rights are restored for a
    code-7 king only when both friendly rooks stand on their home
    corners, the one configuration the codes describe unambiguously.
    """
    if len(vec.components) != _expected_length(spec, vec.mode):
        raise ValidationError(
            f"vector length {len(vec.components)} does not match "
            f"{spec.width}x{spec.height} board in {vec.mode.value} mode"
        )
    if vec.mode is Mode.STRICT:
        if side is None:
            raise ValidationError("strict mode requires an explicit side to move")
    else:
        if side is not None:
            raise ValidationError("augmented mode forbids an explicit side argument")
        trailing = vec.components[-1]
        if trailing not in (1, -1):
            raise ValidationError(f"augmented side component must be +1/-1, got {trailing}")
        side = Color.WHITE if trailing == 1 else Color.BLACK

    board = [0] * spec.num_squares
    ep_pawns = []  # (square, color)
    castle_kings = []  # color
    kings = {Color.WHITE: 0, Color.BLACK: 0}
    for sq, code in enumerate(vec.board_components):
        if code == 0:
            continue
        mag, color = abs(code), Color.WHITE if code > 0 else Color.BLACK
        if mag > KING:
            raise ValidationError(f"component {code} at square {sq} outside the code set")
        if mag in (EP_PAWN, PAWN):
            board[sq] = PieceKind.PAWN.value * color.sign
            if mag == EP_PAWN:
                ep_pawns.append((sq, color))
        elif mag in (CASTLE_KING, KING):
            board[sq] = PieceKind.KING.value * color.sign
            kings[color] += 1
            if mag == CASTLE_KING:
                castle_kings.append(color)
        else:
            kind = {KNIGHT: PieceKind.KNIGHT, BISHOP: PieceKind.BISHOP,
                    ROOK: PieceKind.ROOK, QUEEN: PieceKind.QUEEN}[mag]
            board[sq] = kind.value * color.sign
    for color in (Color.WHITE, Color.BLACK):
        if kings[color] != 1:
            raise ValidationError(
                f"vector has {kings[color]} {color.name.title()} kings, expected exactly one"
            )

    ep_square = None
    if ep_pawns:
        if len(ep_pawns) > 1:
            raise ValidationError("more than one en-passant-capturable pawn")
        sq, color = ep_pawns[0]
        if color is side:
            raise ValidationError("en-passant-capturable pawn belongs to the side to move")
        ep_square = sq - color.sign * spec.width

    rights = CastleRights()
    if castle_kings:
        rights = _restore_rights(board, spec, castle_kings)

    pos = Position(
        spec=spec,
        placement=tuple(board),
        side_to_move=side,
        ep_square=ep_square,
        castle_rights=rights,
        ply_index=side.value,
    )
    validate_position(pos)
    return pos


def _restore_rights(board, spec: BoardSpec, castle_kings) -> CastleRights:
    if not spec.castling_enabled:
        raise ValidationError("castle-entitled king code on a board without castling")
    flags = {Color.WHITE: (False, False), Color.BLACK: (False, False)}
    for color in castle_kings:
        corners = (0, 7) if color is Color.WHITE else (56, 63)
        rook_cell = PieceKind.ROOK.value * color.sign
        if not all(board[c] == rook_cell for c in corners):
            raise ValidationError(
                "castle-entitled king code without both rooks on their home corners"
            )
        flags[color] = (True, True)
    wq, wk = flags[Color.WHITE][0], flags[Color.WHITE][1]
    bq, bk = flags[Color.BLACK][0], flags[Color.BLACK][1]
    return CastleRights(wk, wq, bk, bq)


def delta(a: ConfigVector, b: ConfigVector) -> SparseDelta:
    """Sparse difference b - a. Both vectors must share mode and length."""
    if a.mode is not b.mode:
        raise ValidationError("vector mode mismatch")
    if len(a.components) != len(b.components):
        raise ValidationError("vector length mismatch")
    entries = tuple(
        (sq, bc - ac)
        for sq, (ac, bc) in enumerate(zip(a.board_components, b.board_components))
        if bc != ac
    )
    side_delta = None
    if a.mode is Mode.AUGMENTED and a.side_component != b.side_component:
        side_delta = b.side_component - a.side_component
    return SparseDelta(entries, side_delta)


def apply_delta(vec: ConfigVector, d: SparseDelta) -> ConfigVector:
    """The vector vec + d, componentwise."""
    components = list(vec.components)
    for sq, diff in d.entries:
        components[sq] += diff
    if d.side_delta is not None:
        if vec.mode is not Mode.AUGMENTED:
            raise ValidationError("side delta on a strict vector")
        components[-1] += d.side_delta
    return ConfigVector(vec.mode, tuple(components))
