import random

import numpy as np
import pytest

import strategia as sg
import oracles

STANDARD = sg.BoardSpec.standard()


def oracle_values_by_index(material):
    """Solve a class with the independent minimax oracle, keyed by table index."""
    spec = material.spec
    rules = oracles.OracleRules(
        spec.width, spec.height, [k.value for k in sorted(spec.promotion_kinds)]
    )
    cells = [p.cell for p in material.pieces]
    states = oracles.enumerate_class_states(rules, cells)
    values = oracles.minimax_solve(rules, states)
    by_index = {}
    for board, white in states:
        side = sg.Color.WHITE if white else sg.Color.BLACK
        pos = sg.Position(spec=spec, placement=board, side_to_move=side,
                          ply_index=side.value)
        by_index[sg.index_of(pos, material)] = values[(board, white)]
    return by_index


def assert_table_matches_oracle(tb):
    expected = oracle_values_by_index(tb.material)
    legal = set(np.flatnonzero(tb.wdl != 0).tolist())
    assert legal == set(expected), "legal position sets differ"
    names = {1: "win", 2: "draw", 3: "loss"}
    for idx, (wdl_name, dtm) in expected.items():
        got_wdl = names[int(tb.wdl[idx])]
        got_dtm = None if got_wdl == "draw" else int(tb.dtm[idx])
        assert (got_wdl, got_dtm) == (wdl_name, dtm), f"index {idx}"


class TestSolveAgainstOracle:
    def test_kqk_4x4_exact(self, kqk4):
        assert_table_matches_oracle(kqk4)

    def test_kpk_4x4_exact_across_promotions(self, kpk4):
        assert_table_matches_oracle(kpk4)

    def test_kvk_4x4_all_draws(self):
        tb = sg.solve(sg.MaterialClass.from_string("KvK", sg.BoardSpec(4, 4)))
        legal = tb.wdl != 0
        assert (tb.wdl[legal] == sg.Wdl.DRAW.value).all()

    def test_krrk_3x3_exact_with_duplicate_pieces(self):
        # Two identical rooks: exercises duplicate-square canonicalization in
        # the index and two capture steps of subclass descent (KRvK, KvK).
        tb = sg.solve(sg.MaterialClass.from_string("KRRvK", sg.BoardSpec(3, 3)))
        assert_table_matches_oracle(tb)

    def test_krk_5x5_sampled_probes_match_oracle(self, krk5):
        expected = oracle_values_by_index(krk5.material)
        rng = random.Random(19)
        names = {1: "win", 2: "draw", 3: "loss"}
        for idx in rng.sample(sorted(expected), 2000):
            pos = sg.position_at(idx, krk5.material)
            value = krk5.probe(pos)
            dtm = None if value.wdl is sg.Wdl.DRAW else value.dtm
            assert (names[value.wdl.value], dtm) == expected[idx]


class TestSolveProperties:
    def test_dtm_recurrence(self, krk5):
        tb = krk5
        rng = random.Random(31)
        decisive = tb.decisive_indices().tolist()
        for idx in rng.sample(decisive, 600):
            pos = sg.position_at(idx, tb.material)
            value = tb.probe(pos)
            succ_values = [tb.resolve(s) for _, s in sg.legal_transitions(pos)]
            if value.wdl is sg.Wdl.WIN:
                losses = [v.dtm for v in succ_values if v.wdl is sg.Wdl.LOSS]
                assert losses and min(losses) == value.dtm - 1
            else:
                if value.dtm == 0:
                    assert not succ_values
                else:
                    assert all(v.wdl is sg.Wdl.WIN for v in succ_values)
                    assert max(v.dtm for v in succ_values) == value.dtm - 1

    def test_trichotomy_no_undecided_entries(self, kqk4, kpk4, krk5):
        for tb in (kqk4, kpk4, krk5):
            legal = tb.wdl != 0
            assert np.isin(tb.wdl[legal], (1, 2, 3)).all()
            decisive = (tb.wdl == 1) | (tb.wdl == 3)
            assert (tb.dtm[decisive] != 0xFFFF).all()
            draws = tb.wdl == 2
            assert (tb.dtm[draws] == 0xFFFF).all()

    def test_passes_grow_monotonically(self, kqk4):
        labeled = 0
        for wins, losses in kqk4.stats.passes:
            assert wins >= 0 and losses >= 0
            labeled += wins + losses
        counts = kqk4.counts()
        assert labeled == counts["win"] + counts["loss"] - kqk4.stats.terminal_losses

    def test_checkmate_probes_loss_zero(self, kqk4):
        pos = sg.parse_fen("k3/1Q2/2K1/4 b - -", sg.BoardSpec(4, 4))
        assert sg.outcome(pos) is sg.Outcome.CHECKMATE
        value = kqk4.probe(pos)
        assert value.wdl is sg.Wdl.LOSS and value.dtm == 0

    def test_stalemate_probes_draw(self, kqk4):
        pos = sg.parse_fen("k3/2Q1/4/2K1 b - -", sg.BoardSpec(4, 4))
        assert sg.outcome(pos) is sg.Outcome.STALEMATE
        value = kqk4.probe(pos)
        assert value.wdl is sg.Wdl.DRAW and value.dtm is None

    def test_workers_do_not_change_the_result(self):
        mc = sg.MaterialClass.from_string("KQvK", sg.BoardSpec(4, 4))
        one = sg.solve(mc, workers=1)
        two = sg.solve(mc, workers=2)
        assert np.array_equal(one.wdl, two.wdl)
        assert np.array_equal(one.dtm, two.dtm)

    def test_budget_refusal(self):
        mc = sg.MaterialClass.from_string("KQvK", STANDARD)
        with pytest.raises(sg.BudgetExceededError):
            sg.solve(mc, mem_budget_mb=1)

    def test_probe_material_mismatch(self, kqk4):
        pos = sg.parse_fen("k3/4/4/K3 w - -", sg.BoardSpec(4, 4))
        with pytest.raises(sg.MaterialMismatchError):
            kqk4.probe(pos)


class TestPersistence:
    def test_round_trip_entrywise(self, kqk4, tmp_path):
        path = tmp_path / "kqk4.ctb"
        kqk4.save(path)
        again = sg.Tablebase.load(path)
        assert np.array_equal(kqk4.wdl, again.wdl)
        assert np.array_equal(kqk4.dtm, again.dtm)
        assert again.material.key == kqk4.material.key
        assert again.checksum == kqk4.checksum

    def test_independent_reader_agrees(self, kqk4, tmp_path):
        path = tmp_path / "kqk4.ctb"
        kqk4.save(path)
        header, records = oracles.read_ctb(path)
        assert header["width"] == 4 and header["height"] == 4
        assert header["entries"] == kqk4.material.index_size
        assert header["pieces"] == [
            (p.kind.value, p.color.value) for p in kqk4.material.pieces
        ]
        for idx, (wdl, dtm) in enumerate(records):
            assert wdl == int(kqk4.wdl[idx])
            assert dtm == int(kqk4.dtm[idx])

    def test_checksum_corruption_detected(self, kqk4, tmp_path):
        path = tmp_path / "kqk4.ctb"
        kqk4.save(path)
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(sg.TablebaseFormatError, match="checksum"):
            sg.Tablebase.load(path)

    def test_version_bump_rejected(self, kqk4, tmp_path):
        path = tmp_path / "kqk4.ctb"
        kqk4.save(path)
        blob = bytearray(path.read_bytes())
        blob[4] = 2
        path.write_bytes(bytes(blob))
        with pytest.raises(sg.TablebaseFormatError, match="version"):
            sg.Tablebase.load(path)

    def test_truncation_rejected(self, kqk4, tmp_path):
        path = tmp_path / "kqk4.ctb"
        kqk4.save(path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(sg.TablebaseFormatError):
            sg.Tablebase.load(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ctb"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(sg.TablebaseFormatError, match="magic"):
            sg.Tablebase.load(path)
