import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynmask import (
    AttentionInputs,
    BitMask,
    build_extended,
    dense_attention,
    efficiency_report,
    masked_softmax,
    match_patterns,
    select_mask,
    sparse_attention,
)
from dynmask.maskgen import PatternId, PatternKind

from conftest import (
    dense_attention_oracle,
    pattern_cells,
    random_causal_mask,
)


def full_causal(n):
    return BitMask.from_bool(np.tri(n, n, dtype=bool))


def random_inputs(rng, n, d):
    return AttentionInputs(
        q=rng.standard_normal((n, d)),
        k=rng.standard_normal((n, d)),
        v=rng.standard_normal((n, d)),
    )


class TestMaskedSoftmax:
    def test_two_way_split(self):
        got = masked_softmax(np.array([0.2, 0.7]), np.array([True, True]))
        # direct evaluation: p0 = 1 / (1 + e^{0.5})
        p0 = 1.0 / (1.0 + math.exp(0.5))
        np.testing.assert_allclose(got, [p0, 1.0 - p0], atol=1e-12)
        np.testing.assert_allclose(got, [0.3775, 0.6225], atol=1e-4)

    def test_single_survivor(self):
        got = masked_softmax(np.array([0.5, 3.0]), np.array([True, False]))
        assert got.tolist() == [1.0, 0.0]

    def test_identity_mask_equals_plain_softmax(self, rng):
        logits = rng.standard_normal(9)
        got = masked_softmax(logits, np.ones(9, dtype=bool))
        e = np.exp(logits - logits.max())
        np.testing.assert_allclose(got, e / e.sum(), atol=1e-9)

    def test_masked_positions_exactly_zero(self, rng):
        logits = rng.standard_normal(8)
        keep = np.array([True, False] * 4)
        got = masked_softmax(logits, keep)
        assert (got[~keep] == 0.0).all()
        assert abs(got.sum() - 1.0) <= 1e-6

    def test_fully_masked_row_raises(self):
        with pytest.raises(ValueError, match="fully masked"):
            masked_softmax(np.array([1.0, 2.0]), np.array([False, False]))

    def test_huge_logits_are_stable(self):
        got = masked_softmax(np.array([1e4, 1e4 + 1.0]), np.array([True, True]))
        assert np.isfinite(got).all()
        assert abs(got.sum() - 1.0) <= 1e-9


class TestSparseAttention:
    def test_single_query(self, rng):
        inp = random_inputs(rng, 1, 4)
        out = sparse_attention(inp, full_causal(1))
        np.testing.assert_array_equal(out, inp.v)

    def test_identity_mask_returns_values(self, rng):
        inp = random_inputs(rng, 6, 4)
        out = sparse_attention(inp, BitMask.from_bool(np.eye(6, dtype=bool)))
        np.testing.assert_array_equal(out, inp.v)

    def test_matches_dense_oracle_under_full_causal(self):
        rng = np.random.default_rng(7)
        inp = random_inputs(rng, 8, 4)
        got = sparse_attention(inp, full_causal(8))
        want = dense_attention_oracle(
            inp.q, inp.k, inp.v, np.tri(8, 8, dtype=bool), inp.scale
        )
        assert np.abs(got - want).max() <= 1e-6

    def test_matches_dense_oracle_under_random_masks(self, rng):
        for _ in range(5):
            n, d = int(rng.integers(2, 12)), int(rng.integers(1, 6))
            mask = random_causal_mask(rng, n)
            keep = mask.to_bool()
            np.fill_diagonal(keep, True)
            mask = BitMask.from_bool(keep)
            inp = random_inputs(rng, n, d)
            got = sparse_attention(inp, mask)
            want = dense_attention_oracle(inp.q, inp.k, inp.v, keep, inp.scale)
            assert np.abs(got - want).max() <= 1e-6

    def test_zero_leak_is_bit_exact(self, rng):
        n, d = 8, 4
        mask = full_causal(n)
        mask.set(5, 2, False)  # row 5 no longer sees key 2
        inp = random_inputs(rng, n, d)
        base = sparse_attention(inp, mask)
        v2 = inp.v.copy()
        v2[2] += 1000.0
        bumped = sparse_attention(AttentionInputs(inp.q, inp.k, v2, inp.scale), mask)
        assert base[5].tobytes() == bumped[5].tobytes()
        assert np.abs(bumped[:3] - base[:3]).max() > 0  # rows that do see key 2 moved

    def test_probability_conservation(self, rng):
        # reconstruct weights by attending over one-hot values
        n = 7
        mask = random_causal_mask(rng, n)
        keep = mask.to_bool()
        np.fill_diagonal(keep, True)
        mask = BitMask.from_bool(keep)
        inp = AttentionInputs(
            q=rng.standard_normal((n, 3)),
            k=rng.standard_normal((n, 3)),
            v=np.eye(n),
        )
        weights = sparse_attention(inp, mask)
        np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-6)
        assert (weights[~keep] == 0.0).all()

    def test_shape_mismatch(self, rng):
        inp = random_inputs(rng, 4, 4)
        with pytest.raises(ValueError, match="mask"):
            sparse_attention(inp, full_causal(5))

    def test_fully_masked_row(self, rng):
        inp = random_inputs(rng, 3, 2)
        m = BitMask(3, 3)
        m.set(0, 0)
        m.set(2, 0)
        with pytest.raises(ValueError, match="fully masked"):
            sparse_attention(inp, m)

    def test_dense_reference_agrees_with_sparse(self, rng):
        inp = random_inputs(rng, 9, 5)
        mask = full_causal(9)
        got = dense_attention(inp, mask)
        want = sparse_attention(inp, mask)
        assert np.abs(got - want).max() <= 1e-9


class TestSelectMask:
    def test_boundary_equals_base_without_forcing(self, rng):
        base = random_causal_mask(rng, 6)
        assert select_mask(6, 6, base, [], self_attend=False) == base

    def test_boundary_with_forcing_adds_diagonal_only(self, rng):
        base = random_causal_mask(rng, 6)
        got = select_mask(6, 6, base, [], self_attend=True)
        want = base.to_bool()
        np.fill_diagonal(want, True)
        assert got == BitMask.from_bool(want)

    def test_shorter_sequence_takes_leading_submask(self, rng):
        base = random_causal_mask(rng, 8)
        got = select_mask(3, 8, base, [], self_attend=False)
        assert got == base.submask(3)

    def test_longer_sequence_delegates_to_extension(self, rng):
        base = random_causal_mask(rng, 6)
        matched = match_patterns(base, 0.6)
        got = select_mask(15, 6, base, matched, self_attend=False)
        assert got == build_extended(matched, base, 15, 6)

    def test_every_row_nonempty_after_forcing(self, rng):
        base = BitMask(5, 5)  # worst case: completely empty
        got = select_mask(9, 5, base, [], self_attend=True)
        assert (got.to_bool().sum(axis=1) >= 1).all()


class TestEfficiencyReport:
    def test_full_causal_4x4(self):
        r = efficiency_report(full_causal(4), d=8)
        assert (r.nnz, r.total) == (10, 10)
        assert r.sparsity == 0.0
        assert r.flops_sparse == 320
        assert r.flops_dense == 320

    def test_identity_mask(self):
        r = efficiency_report(BitMask.from_bool(np.eye(4, dtype=bool)), d=8)
        assert r.nnz == 4
        assert r.flops_sparse == 128
        assert r.s_avg == 1.0

    def test_extension_scenario_flops(self):
        # the worked extension example: popcount 12 at d=8 -> 4*12*8
        base_cells = pattern_cells("D", 0, 4) | pattern_cells("V", 1, 4)
        arr = np.zeros((4, 4), dtype=bool)
        for i, j in base_cells:
            arr[i, j] = True
        base = BitMask.from_bool(arr)
        matched = [
            PatternId(PatternKind.DIAGONAL, 0),
            PatternId(PatternKind.VERTICAL, 1),
            PatternId(PatternKind.VERTICAL, 3),
        ]
        ext = build_extended(matched, base, 6, 4)
        r = efficiency_report(ext, d=8)
        assert r.nnz == 12
        assert r.flops_sparse == 4 * 12 * 8 == 384

    def test_line_format(self):
        line = efficiency_report(full_causal(4), d=8).line()
        assert line == "10,10,0.000000,320,320,2.500000"

    @settings(max_examples=30)
    @given(seed=st.integers(0, 2**31), size=st.integers(1, 12), d=st.integers(1, 8))
    def test_monotone_cost(self, seed, size, d):
        rng = np.random.default_rng(seed)
        small = random_causal_mask(rng, size)
        grown = small.to_bool() | (rng.random((size, size)) < 0.3)
        grown &= np.tri(size, size, dtype=bool)
        big = BitMask.from_bool(grown)
        assert small.is_subset(big)
        assert efficiency_report(small, d).flops_sparse <= efficiency_report(big, d).flops_sparse
        assert efficiency_report(big, d).flops_sparse <= efficiency_report(big, d).flops_dense

    def test_requires_square(self):
        with pytest.raises(ValueError):
            efficiency_report(BitMask(2, 3), d=4)
