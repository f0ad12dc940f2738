"""Exact retrograde solver for small material classes.

A material class is a fixed piece multiset on a fixed board. Every
placement of those pieces (x side to move) gets a dense index; solving
labels each legal index win/draw/loss with distance to mate in plies,
by iterated generational passes: generation d is built only from
generations below d, so the labeled set grows monotonically and the
result is independent of pass scheduling.

Captures and promotions leave the class, so a class is solved on top
of its one-move-reachable subclasses (solved first, recursively); the
value of an out-of-class successor is folded in as a fixed constant.
Distance to mate therefore counts plies across material transitions,
exactly as play does.

The index encodes only piece squares and the side to move. Castle
rights are unrepresentable and refused; en passant state is value
neutral in every supported class (classes with pawns on both sides
are rejected) and is normalized away.
"""

from __future__ import annotations

import functools
import os
import struct
import zlib
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Optional

import numpy as np

from .board import (
    BoardSpec,
    Color,
    Piece,
    PieceKind,
    Position,
    _attacked,
    geometry,
    legal_transitions,
)
from .errors import (
    BudgetExceededError,
    MaterialMismatchError,
    TablebaseFormatError,
    ValidationError,
)

MAGIC = b"CTB1"
FORMAT_VERSION = 1
DTM_ABSENT = 0xFFFF
DEFAULT_BUDGET_MB = 2048
BUDGET_ENV_VAR = "STRATEGIA_MEM_BUDGET_MB"

_UNDECIDED = 4  # in-memory only; never written to disk
_PAD_WDL = 255

_KIND_ORDER = {
    PieceKind.KING: 0,
    PieceKind.QUEEN: 1,
    PieceKind.ROOK: 2,
    PieceKind.BISHOP: 3,
    PieceKind.KNIGHT: 4,
    PieceKind.PAWN: 5,
}


class Wdl(IntEnum):
    WIN = 1
    DRAW = 2
    LOSS = 3


@dataclass(frozen=True)
class WdlDtm:
    """Value of a position from the side-to-move perspective."""

    wdl: Wdl
    dtm: Optional[int]

    def __post_init__(self):
        if self.wdl is Wdl.DRAW:
            if self.dtm is not None:
                raise ValidationError("draws carry no dtm")
        elif self.dtm is None or self.dtm < 0:
            raise ValidationError("decisive values need a nonnegative dtm")

    @property
    def is_decisive(self) -> bool:
        return self.wdl is not Wdl.DRAW


def _canonical_sort_key(piece: Piece):
    return (piece.color.value, _KIND_ORDER[piece.kind])


@dataclass(frozen=True)
class MaterialClass:
    """A piece multiset (both kings included) on a fixed board."""

    spec: BoardSpec
    pieces: tuple

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=_canonical_sort_key))
        object.__setattr__(self, "pieces", pieces)
        kings = {Color.WHITE: 0, Color.BLACK: 0}
        pawns = {Color.WHITE: 0, Color.BLACK: 0}
        for piece in pieces:
            if piece.kind is PieceKind.KING:
                kings[piece.color] += 1
            elif piece.kind is PieceKind.PAWN:
                pawns[piece.color] += 1
        if kings[Color.WHITE] != 1 or kings[Color.BLACK] != 1:
            raise ValidationError("material class needs exactly one king per color")
        if len(pieces) > 5:
            raise ValidationError("material classes are capped at 5 pieces")
        if pawns[Color.WHITE] and pawns[Color.BLACK]:
            raise ValidationError(
                "classes with pawns on both sides are not indexable (en passant state)"
            )
        if (pawns[Color.WHITE] or pawns[Color.BLACK]) and self.spec.height < 3:
            raise ValidationError("pawns need a board of height >= 3")

    @classmethod
    def from_string(cls, text: str, spec: BoardSpec) -> "MaterialClass":
        parts = text.split("v")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ValidationError(f"material spec must look like KRvK, got {text!r}")
        pieces = []
        for letters, color in ((parts[0], Color.WHITE), (parts[1], Color.BLACK)):
            for letter in letters:
                piece = Piece.from_letter(letter.upper())
                pieces.append(Piece(piece.kind, color))
        return cls(spec, tuple(pieces))

    @property
    def name(self) -> str:
        white = "".join(
            p.letter for p in self.pieces if p.color is Color.WHITE
        )
        black = "".join(
            p.letter.upper() for p in self.pieces if p.color is Color.BLACK
        )
        return f"{white}v{black}"

    @property
    def key(self) -> tuple:
        return (
            self.spec.width,
            self.spec.height,
            tuple((p.kind.value, p.color.value) for p in self.pieces),
        )

    @property
    def num_pieces(self) -> int:
        return len(self.pieces)

    @property
    def index_size(self) -> int:
        return 2 * self.spec.num_squares ** len(self.pieces)


def material_key_of(pos: Position) -> tuple:
    pieces = sorted((piece for _, piece in pos.pieces()), key=_canonical_sort_key)
    return (
        pos.spec.width,
        pos.spec.height,
        tuple((p.kind.value, p.color.value) for p in pieces),
    )


def _class_from_key(key: tuple, spec: BoardSpec) -> MaterialClass:
    _, _, codes = key
    pieces = tuple(Piece(PieceKind(kind), Color(color)) for kind, color in codes)
    return MaterialClass(spec, pieces)


class _Ctx:
    """Cached per-class indexing context."""

    __slots__ = (
        "material", "spec", "geo", "S", "k", "half", "powers", "cells",
        "slot_layout", "dup_groups", "pawn_slots", "white_slots", "black_slots",
        "white_king_slot", "black_king_slot",
    )

    def __init__(self, material: MaterialClass):
        self.material = material
        self.spec = material.spec
        self.geo = geometry(self.spec.width, self.spec.height)
        self.S = self.spec.num_squares
        self.k = len(material.pieces)
        self.half = self.S ** self.k
        self.powers = tuple(self.S ** i for i in range(self.k))
        self.cells = tuple(p.cell for p in material.pieces)

        layout = []
        groups = []
        for i, cell in enumerate(self.cells):
            if i > 0 and cell == self.cells[i - 1]:
                continue
            end = i + 1
            while end < self.k and self.cells[end] == cell:
                end += 1
            layout.append((cell, i, end))
            if end - i > 1:
                groups.append((i, end))
        self.slot_layout = tuple(layout)
        self.dup_groups = tuple(groups)
        self.pawn_slots = tuple(
            (i, p.color) for i, p in enumerate(material.pieces) if p.kind is PieceKind.PAWN
        )
        self.white_slots = tuple(
            (i, p.kind.value) for i, p in enumerate(material.pieces) if p.color is Color.WHITE
        )
        self.black_slots = tuple(
            (i, p.kind.value) for i, p in enumerate(material.pieces) if p.color is Color.BLACK
        )
        self.white_king_slot = next(
            i for i, p in enumerate(material.pieces)
            if p.kind is PieceKind.KING and p.color is Color.WHITE
        )
        self.black_king_slot = next(
            i for i, p in enumerate(material.pieces)
            if p.kind is PieceKind.KING and p.color is Color.BLACK
        )


@functools.lru_cache(maxsize=64)
def _context(material: MaterialClass) -> _Ctx:
    return _Ctx(material)


def index_of(pos: Position, material: MaterialClass) -> int:
    """Dense index of a position within its class.

    The index covers piece squares and side to move only. Positions
    with castle rights are refused; an ep_square is accepted but not
    encoded (it cannot change the value in any indexable class).
    """
    ctx = _context(material)
    if (pos.spec.width, pos.spec.height) != (ctx.spec.width, ctx.spec.height):
        raise MaterialMismatchError(
            f"position is on {pos.spec.width}x{pos.spec.height}, "
            f"table is {ctx.spec.width}x{ctx.spec.height}"
        )
    if pos.castle_rights.any():
        raise ValidationError("positions with castle rights are not indexable")
    buckets: dict = {}
    for sq, cell in enumerate(pos.placement):
        if cell:
            buckets.setdefault(cell, []).append(sq)
    digits = []
    for cell, start, end in ctx.slot_layout:
        squares = buckets.pop(cell, ())
        if len(squares) != end - start:
            raise MaterialMismatchError(
                f"position material does not match class {material.name}"
            )
        digits.extend(squares)
    if buckets:
        raise MaterialMismatchError(
            f"position material does not match class {material.name}"
        )
    total = pos.side_to_move.value * ctx.half
    for digit, power in zip(digits, ctx.powers):
        total += digit * power
    return total


def _decode_digits_impl(idx: int, ctx: _Ctx, side: Color):
    """(side, digits, board list) for a raw index, or None if not a legal position."""
    S = ctx.S
    rem = idx - ctx.half if idx >= ctx.half else idx
    digits = []
    for _ in range(ctx.k):
        digits.append(rem % S)
        rem //= S
    if len(set(digits)) != ctx.k:
        return None
    for lo, hi in ctx.dup_groups:
        for j in range(lo, hi - 1):
            if digits[j] >= digits[j + 1]:
                return None
    width, height = ctx.spec.width, ctx.spec.height
    for slot, _color in ctx.pawn_slots:
        rank = digits[slot] // width
        if rank == 0 or rank == height - 1:
            return None
    board = [0] * S
    for slot, cell in enumerate(ctx.cells):
        board[digits[slot]] = cell
    movers = ctx.white_slots if side is Color.WHITE else ctx.black_slots
    mover_list = [(digits[slot], kind) for slot, kind in movers]
    their_king = digits[
        ctx.black_king_slot if side is Color.WHITE else ctx.white_king_slot
    ]
    if _attacked(board, their_king, mover_list, side.value, ctx.geo):
        return None
    return side, digits, board


def position_at(idx: int, material: MaterialClass) -> Optional[Position]:
    """Inverse of index_of; None marks indices that are not legal positions."""
    ctx = _context(material)
    if not 0 <= idx < material.index_size:
        raise ValidationError(f"index {idx} outside [0, {material.index_size})")
    side = Color.BLACK if idx >= ctx.half else Color.WHITE
    decoded = _decode_digits_impl(idx, ctx, side)
    if decoded is None:
        return None
    side, _digits, board = decoded
    return Position(
        spec=material.spec,
        placement=tuple(board),
        side_to_move=side,
        ply_index=side.value,
    )


@dataclass(frozen=True)
class SolveStats:
    legal: int
    invalid: int
    terminal_losses: int
    terminal_draws: int
    passes: tuple  # (wins labeled, losses labeled) per pass
    max_dtm: int


@dataclass
class Tablebase:
    """Solved win/draw/loss and distance-to-mate arrays for one class."""

    material: MaterialClass
    wdl: np.ndarray
    dtm: np.ndarray
    subtables: dict = field(default_factory=dict)
    stats: Optional[SolveStats] = None
    _checksum: Optional[int] = None

    def probe(self, pos: Position) -> WdlDtm:
        """Constant-time value lookup for a position of this class."""
        if material_key_of(pos) != self.material.key:
            raise MaterialMismatchError(
                f"position material does not match table class {self.material.name}"
            )
        if pos.castle_rights.any():
            raise ValidationError("tablebase positions carry no castle rights")
        idx = index_of(pos, self.material)
        raw = int(self.wdl[idx])
        if raw == 0 or raw == _UNDECIDED:
            raise ValidationError("position decodes to an illegal table entry")
        wdl = Wdl(raw)
        dtm = None if wdl is Wdl.DRAW else int(self.dtm[idx])
        return WdlDtm(wdl, dtm)

    def resolve(self, pos: Position, solve_missing: bool = True) -> WdlDtm:
        """Probe across material boundaries, solving subclasses on demand."""
        key = material_key_of(pos)
        if key == self.material.key:
            return self.probe(pos)
        sub = self.subtables.get(key)
        if sub is None:
            if not solve_missing:
                raise MaterialMismatchError(
                    f"no loaded table for material {key} and solve_missing is off"
                )
            registry = dict(self.subtables)
            registry[self.material.key] = self
            sub = solve(_class_from_key(key, self.material.spec), _registry=registry)
            for reg_key, table in registry.items():
                if reg_key != self.material.key:
                    self.subtables.setdefault(reg_key, table)
        return sub.probe(pos)

    def decisive_indices(self) -> np.ndarray:
        return np.flatnonzero((self.wdl == Wdl.WIN.value) | (self.wdl == Wdl.LOSS.value))

    def counts(self) -> dict:
        wdl = self.wdl
        decisive = (wdl == Wdl.WIN.value) | (wdl == Wdl.LOSS.value)
        max_dtm = int(self.dtm[decisive].max()) if decisive.any() else 0
        return {
            "entries": int(wdl.size),
            "invalid": int((wdl == 0).sum()),
            "win": int((wdl == Wdl.WIN.value).sum()),
            "draw": int((wdl == Wdl.DRAW.value).sum()),
            "loss": int((wdl == Wdl.LOSS.value).sum()),
            "max_dtm": max_dtm,
        }

    def _body_bytes(self) -> bytes:
        rec = np.empty(self.wdl.size, dtype=np.dtype([("wdl", "u1"), ("dtm", "<u2")]))
        rec["wdl"] = self.wdl
        rec["dtm"] = self.dtm
        return rec.tobytes()

    @property
    def checksum(self) -> int:
        """CRC32 of the body bytes, as stored in the file trailer."""
        if self._checksum is None:
            self._checksum = zlib.crc32(self._body_bytes())
        return self._checksum

    def file_bytes(self) -> bytes:
        mc = self.material
        header = bytearray()
        header += MAGIC
        header += struct.pack("<BBBB", FORMAT_VERSION, mc.spec.width, mc.spec.height, mc.num_pieces)
        for piece in mc.pieces:
            header += struct.pack("<BB", piece.kind.value, piece.color.value)
        header += struct.pack("<Q", self.wdl.size)
        body = self._body_bytes()
        return bytes(header) + body + struct.pack("<I", zlib.crc32(body))

    def save(self, path) -> None:
        with open(path, "wb") as handle:
            handle.write(self.file_bytes())

    @classmethod
    def load(cls, path) -> "Tablebase":
        with open(path, "rb") as handle:
            blob = handle.read()
        return cls.from_bytes(blob)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Tablebase":
        if len(blob) < 8 or blob[:4] != MAGIC:
            raise TablebaseFormatError("bad magic: not a tablebase file")
        version, width, height, count = struct.unpack_from("<BBBB", blob, 4)
        if version != FORMAT_VERSION:
            raise TablebaseFormatError(
                f"incompatible tablebase version {version}, expected {FORMAT_VERSION}"
            )
        offset = 8
        if len(blob) < offset + 2 * count + 8:
            raise TablebaseFormatError("truncated header")
        pieces = []
        for _ in range(count):
            kind, color = struct.unpack_from("<BB", blob, offset)
            try:
                pieces.append(Piece(PieceKind(kind), Color(color)))
            except ValueError as exc:
                raise TablebaseFormatError(f"bad piece entry: {exc}") from None
            offset += 2
        (entries,) = struct.unpack_from("<Q", blob, offset)
        offset += 8
        try:
            spec = BoardSpec(width, height)
            material = MaterialClass(spec, tuple(pieces))
        except ValidationError as exc:
            raise TablebaseFormatError(f"bad header fields: {exc}") from None
        if entries != material.index_size:
            raise TablebaseFormatError(
                f"entry count {entries} does not match index space {material.index_size}"
            )
        body_len = entries * 3
        if len(blob) != offset + body_len + 4:
            raise TablebaseFormatError("truncated or oversized file body")
        body = blob[offset:offset + body_len]
        (stored_crc,) = struct.unpack_from("<I", blob, offset + body_len)
        actual_crc = zlib.crc32(body)
        if stored_crc != actual_crc:
            raise TablebaseFormatError(
                f"checksum failure: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
            )
        rec = np.frombuffer(body, dtype=np.dtype([("wdl", "u1"), ("dtm", "<u2")]))
        wdl = rec["wdl"].copy()
        if not np.isin(wdl, (0, 1, 2, 3)).all():
            raise TablebaseFormatError("body contains out-of-range wdl codes")
        table = cls(material, wdl, rec["dtm"].copy())
        table._checksum = actual_crc
        return table


def _max_move_bound(material: MaterialClass) -> int:
    geo = geometry(material.spec.width, material.spec.height)
    n = material.spec.num_squares
    ortho_max = max(sum(len(ray) for ray in geo.ortho_rays[sq]) for sq in range(n))
    diag_max = max(sum(len(ray) for ray in geo.diag_rays[sq]) for sq in range(n))
    pawn_max = max(4, 3 * len(material.spec.promotion_kinds))
    per_kind = {
        PieceKind.PAWN: pawn_max,
        PieceKind.KNIGHT: 8,
        PieceKind.BISHOP: diag_max,
        PieceKind.ROOK: ortho_max,
        PieceKind.QUEEN: ortho_max + diag_max,
        PieceKind.KING: 10,
    }
    per_color = {Color.WHITE: 0, Color.BLACK: 0}
    for piece in material.pieces:
        per_color[piece.color] += per_kind[piece.kind]
    return max(per_color.values())


def _successor_keys(material: MaterialClass) -> list:
    """Material keys reachable in one ply (captures, promotions, both)."""
    keys = set()
    pieces = list(material.pieces)
    nonkings = [p for p in pieces if p.kind is not PieceKind.KING]

    def key_of(piece_list) -> tuple:
        ordered = tuple(sorted(piece_list, key=_canonical_sort_key))
        return (
            material.spec.width,
            material.spec.height,
            tuple((p.kind.value, p.color.value) for p in ordered),
        )

    def without(piece_list, victim):
        out = list(piece_list)
        out.remove(victim)
        return out

    for victim in set(nonkings):
        keys.add(key_of(without(pieces, victim)))
    for color in (Color.WHITE, Color.BLACK):
        pawn = Piece(PieceKind.PAWN, color)
        if pawn not in pieces:
            continue
        for promo in sorted(material.spec.promotion_kinds):
            promoted = without(pieces, pawn)
            promoted.append(Piece(promo, color))
            keys.add(key_of(promoted))
            for victim in set(p for p in nonkings if p.color is not color):
                keys.add(key_of(without(promoted, victim)))
    return sorted(keys)


def _static_code(value: WdlDtm) -> int:
    dtm = DTM_ABSENT if value.dtm is None else value.dtm
    return -(2 + (value.wdl.value << 17) + dtm)


def _static_decode(code: int) -> tuple:
    raw = -code - 2
    return raw >> 17, raw & 0x1FFFF


# Module-level state inherited by forked build workers.
_WORKER_STATE: Optional[tuple] = None


def _build_chunk(material: MaterialClass, registry: dict, lo: int, hi: int, max_moves: int):
    """Classify indices in [lo, hi): invalid, terminal, or open with successor rows."""
    ctx = _context(material)
    S = ctx.S
    half = ctx.half
    powers = ctx.powers
    dup_groups = ctx.dup_groups
    spec = material.spec
    key_cache: dict = {}

    term_loss, term_draw = [], []
    open_idx: list = []
    rows = []
    invalid = 0

    for idx in range(lo, hi):
        side = Color.BLACK if idx >= half else Color.WHITE
        decoded = _decode_digits_impl(idx, ctx, side)
        if decoded is None:
            invalid += 1
            continue
        side, digits, board = decoded
        pos = Position(
            spec=spec,
            placement=tuple(board),
            side_to_move=side,
            ply_index=side.value,
        )
        transitions = legal_transitions(pos)
        if not transitions:
            mover_king = digits[
                ctx.white_king_slot if side is Color.WHITE else ctx.black_king_slot
            ]
            others = ctx.black_slots if side is Color.WHITE else ctx.white_slots
            other_list = [(digits[slot], kind) for slot, kind in others]
            if _attacked(board, mover_king, other_list, side.other().value, ctx.geo):
                term_loss.append(idx)
            else:
                term_draw.append(idx)
            continue
        succ_bit = (1 - side.value) * half
        row = []
        for move, succ in transitions:
            if move.promotion is None and board[move.to_sq] == 0:
                nd = list(digits)
                nd[nd.index(move.from_sq)] = move.to_sq
                for glo, ghi in dup_groups:
                    seg = nd[glo:ghi]
                    seg.sort()
                    nd[glo:ghi] = seg
                total = succ_bit
                for digit, power in zip(nd, powers):
                    total += digit * power
                row.append(total)
            else:
                key = material_key_of(succ)
                sub = key_cache.get(key)
                if sub is None:
                    sub = registry[key]
                    key_cache[key] = sub
                row.append(_static_code(sub.probe(succ)))
        open_idx.append(idx)
        rows.append(row)

    matrix = np.full((len(rows), max_moves), -1, dtype=np.int32)
    for i, row in enumerate(rows):
        matrix[i, : len(row)] = row
    return (
        invalid,
        np.asarray(term_loss, dtype=np.int64),
        np.asarray(term_draw, dtype=np.int64),
        np.asarray(open_idx, dtype=np.int64),
        matrix,
    )


def _build_chunk_worker(bounds: tuple):
    material, registry, max_moves = _WORKER_STATE
    return _build_chunk(material, registry, bounds[0], bounds[1], max_moves)


def _resolve_budget(mem_budget_mb: Optional[int]) -> int:
    if mem_budget_mb is None:
        raw = os.environ.get(BUDGET_ENV_VAR, "")
        mem_budget_mb = int(raw) if raw.isdigit() else DEFAULT_BUDGET_MB
    return mem_budget_mb * (1 << 20)


def _check_budget(material: MaterialClass, mem_budget_mb: Optional[int]) -> None:
    estimate = material.index_size * (8 + 4 * _max_move_bound(material))
    budget = _resolve_budget(mem_budget_mb)
    if estimate > budget:
        raise BudgetExceededError(
            f"solving {material.name} needs about {estimate >> 20} MiB, "
            f"budget is {budget >> 20} MiB"
        )


def solve(
    material: MaterialClass,
    *,
    workers: int = 1,
    mem_budget_mb: Optional[int] = None,
    progress: Optional[Callable[[str], None]] = None,
    _registry: Optional[dict] = None,
) -> Tablebase:
    """Solve a material class exactly, subclasses first.

    Refuses up front (no partial output) if the estimated working set
    exceeds the memory budget (STRATEGIA_MEM_BUDGET_MB, default 2048).
    The result is a pure function of the class; worker count only
    affects wall time.
    """
    registry = {} if _registry is None else _registry
    if material.key in registry:
        return registry[material.key]
    _check_budget(material, mem_budget_mb)
    for sub_key in _successor_keys(material):
        if sub_key not in registry:
            solve(
                _class_from_key(sub_key, material.spec),
                workers=workers,
                mem_budget_mb=mem_budget_mb,
                progress=progress,
                _registry=registry,
            )
    table = _solve_single(material, registry, workers, mem_budget_mb, progress)
    registry[material.key] = table
    table.subtables = {k: v for k, v in registry.items() if k != material.key}
    return table


def _solve_single(material, registry, workers, mem_budget_mb, progress) -> Tablebase:
    n = material.index_size
    max_moves = _max_move_bound(material)
    _check_budget(material, mem_budget_mb)
    if progress:
        progress(f"solving {material.name}: {n} indices")

    chunk = max(4096, n // (max(workers, 1) * 8))
    ranges = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    if workers > 1:
        import multiprocessing

        global _WORKER_STATE
        _WORKER_STATE = (material, registry, max_moves)
        try:
            with multiprocessing.get_context("fork").Pool(workers) as pool:
                results = pool.map(_build_chunk_worker, ranges)
        finally:
            _WORKER_STATE = None
    else:
        results = [_build_chunk(material, registry, lo, hi, max_moves) for lo, hi in ranges]

    invalid = sum(r[0] for r in results)
    term_loss = np.concatenate([r[1] for r in results]) if results else np.empty(0, np.int64)
    term_draw = np.concatenate([r[2] for r in results]) if results else np.empty(0, np.int64)
    open_idx = np.concatenate([r[3] for r in results]) if results else np.empty(0, np.int64)
    matrix = np.concatenate([r[4] for r in results]) if results else np.empty((0, max_moves), np.int32)
    del results

    # Intern out-of-class successor values as virtual slots after the
    # real index space, one per distinct (wdl, dtm) value, plus one pad
    # slot that behaves like a successor nothing can come from.
    static_codes = np.unique(matrix[matrix < -1]) if matrix.size else np.empty(0, np.int32)
    virt_values = [
        _static_decode(int(code)) for code in sorted(static_codes.tolist(), reverse=True)
    ]
    slot_of = {}
    for i, code in enumerate(sorted(static_codes.tolist(), reverse=True)):
        slot_of[code] = n + i
    pad_slot = n + len(virt_values)
    for code, slot in slot_of.items():
        matrix[matrix == code] = slot
    matrix[matrix == -1] = pad_slot

    wdl_full = np.zeros(pad_slot + 1, dtype=np.uint8)
    dtm_full = np.full(pad_slot + 1, DTM_ABSENT, dtype=np.uint16)
    for i, (w, d) in enumerate(virt_values):
        wdl_full[n + i] = w
        dtm_full[n + i] = d
    wdl_full[pad_slot] = _PAD_WDL
    dtm_full[pad_slot] = 0
    dtm_full[n:pad_slot][wdl_full[n:pad_slot] == Wdl.DRAW.value] = DTM_ABSENT

    wdl = wdl_full[:n]
    dtm = dtm_full[:n]
    wdl[term_loss] = Wdl.LOSS.value
    dtm[term_loss] = 0
    wdl[term_draw] = Wdl.DRAW.value
    wdl[open_idx] = _UNDECIDED

    # Static values can trigger labels up to their dtm + 1 even across
    # otherwise quiet passes, so termination waits for that horizon.
    static_trigger = 0
    for w, d in virt_values:
        if w in (Wdl.WIN.value, Wdl.LOSS.value) and d != DTM_ABSENT:
            static_trigger = max(static_trigger, d + 1)

    passes = []
    depth = 0
    loss_code = Wdl.LOSS.value
    win_code = Wdl.WIN.value
    while open_idx.size:
        depth += 1
        if depth > n + static_trigger + 2:
            raise RuntimeError("fixpoint failed to terminate")  # pragma: no cover
        succ_wdl = wdl_full[matrix]
        succ_dtm = dtm_full[matrix]
        win_mask = ((succ_wdl == loss_code) & (succ_dtm == depth - 1)).any(axis=1)
        is_win = succ_wdl == win_code
        all_win = (is_win | (succ_wdl == _PAD_WDL)).all(axis=1)
        loss_mask = all_win & (
            np.where(is_win, succ_dtm, 0).max(axis=1, initial=0) == depth - 1
        )
        n_win = int(win_mask.sum())
        n_loss = int(loss_mask.sum())
        if n_win:
            chosen = open_idx[win_mask]
            wdl[chosen] = win_code
            dtm[chosen] = depth
        if n_loss:
            chosen = open_idx[loss_mask]
            wdl[chosen] = loss_code
            dtm[chosen] = depth
        passes.append((n_win, n_loss))
        if n_win or n_loss:
            keep = ~(win_mask | loss_mask)
            open_idx = open_idx[keep]
            matrix = matrix[keep]
            if progress and depth % 8 == 0:
                progress(
                    f"  pass {depth}: {n_win} wins, {n_loss} losses, {open_idx.size} open"
                )
        elif depth >= static_trigger:
            break

    draws_at_fixpoint = int(open_idx.size)
    wdl[open_idx] = Wdl.DRAW.value
    legal = n - invalid
    decisive = (wdl == win_code) | (wdl == loss_code)
    max_dtm = int(dtm[decisive].max()) if decisive.any() else 0
    stats = SolveStats(
        legal=legal,
        invalid=invalid,
        terminal_losses=int(term_loss.size),
        terminal_draws=int(term_draw.size) + draws_at_fixpoint,
        passes=tuple(passes),
        max_dtm=max_dtm,
    )
    if progress:
        progress(f"  {material.name}: {legal} legal, max dtm {max_dtm}, {depth} passes")
    table = Tablebase(material, wdl.copy(), dtm.copy(), stats=stats)
    return table
