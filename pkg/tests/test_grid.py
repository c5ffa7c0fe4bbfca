import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthreg.errors import DomainError, InvalidDimension, InvalidShift
from depthreg.grid import Grid1, Grid3, SeedRng, gen_shift_seed, shift2d_g1, shift2d_g3


class TestSeedRng:
    def test_known_splitmix64_vectors(self):
        # Published reference outputs for SplitMix64 seeded with 0.
        r = SeedRng(0)
        assert r.next_u64() == 0xE220A8397B1DCDAF
        assert r.next_u64() == 0x6E789E6AA1B965F4
        assert r.next_u64() == 0x06C45D188009454F

    def test_same_seed_same_sequence(self):
        a, b = SeedRng(987654321), SeedRng(987654321)
        assert [a.next_u64() for _ in range(50)] == [b.next_u64() for _ in range(50)]

    def test_block_matches_sequential(self):
        a, b = SeedRng(42), SeedRng(42)
        seq = np.array([a.next_u64() for _ in range(1000)], dtype=np.uint64)
        blk = b.next_u64_block(1000)
        assert np.array_equal(seq, blk)
        assert a.state == b.state

    def test_split_streams_differ(self):
        r = SeedRng(7)
        c1, c2 = r.split(), r.split()
        assert c1.next_u64() != c2.next_u64()

    def test_uniforms_in_unit_interval(self):
        u = SeedRng(5).uniforms(10000)
        assert u.min() >= 0.0 and u.max() < 1.0


class TestGenShiftSeed:
    def test_n2_always_one(self):
        for seed in (0, 1, 42, 2**63):
            assert gen_shift_seed(SeedRng(seed), 2) == 1

    def test_golden_seed42_n8(self):
        # Frozen from one run of the pinned SplitMix64 generator.
        rng = SeedRng(42)
        assert gen_shift_seed(rng, 8) == 6
        rest = [gen_shift_seed(rng, 8) for _ in range(7)]
        assert rest == [6, 1, 3, 7, 5, 3, 7]

    def test_n1_rejected(self):
        with pytest.raises(InvalidDimension):
            gen_shift_seed(SeedRng(0), 1)

    def test_full_range_coverage(self):
        rng = SeedRng(7)
        seen = {gen_shift_seed(rng, 8) for _ in range(10000)}
        assert seen == {1, 2, 3, 4, 5, 6, 7}


class TestGrids:
    def test_grid3_rejects_nonfinite(self):
        bad = np.ones((2, 2, 1))
        bad[0, 0, 0] = np.nan
        with pytest.raises(DomainError):
            Grid3(bad)

    def test_grid3_immutable(self):
        g = Grid3(np.zeros((2, 2, 1)))
        with pytest.raises(ValueError):
            g.data[0, 0, 0] = 1.0

    def test_grid1_default_mask_all_valid(self):
        g = Grid1(np.ones((3, 4)))
        assert g.valid.all()

    def test_grid1_rejects_negative_valid_entry(self):
        with pytest.raises(DomainError):
            Grid1(np.full((2, 2), -1.0))

    def test_grid1_invalid_entries_unconstrained(self):
        vals = np.array([[1.0, -5.0], [2.0, 3.0]])
        valid = np.array([[True, False], [True, True]])
        g = Grid1(vals, valid)
        assert g.values[0, 1] == -5.0


class TestShift:
    def test_2x2_example(self):
        # [[a,b],[c,d]] rolled by (1,1) becomes [[d,c],[b,a]]
        m = Grid3(np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(2, 2, 1))
        out = shift2d_g3(m, 1, 1)
        assert out.data[:, :, 0].tolist() == [[4.0, 3.0], [2.0, 1.0]]

    def test_roll_convention_down_right(self):
        # content moves down by s_h and right by s_w
        m = Grid3(np.arange(12, dtype=float).reshape(3, 4, 1))
        out = shift2d_g3(m, 1, 0)
        assert out.data[1, 0, 0] == m.data[0, 0, 0]
        out = shift2d_g3(m, 0, 2)
        assert out.data[0, 2, 0] == m.data[0, 0, 0]

    def test_left2_up1_is_sh_hm1_sw_wm2(self):
        # a map shifted 2 left and 1 up equals a roll with
        # s_h = H-1, s_w = W-2 under the down/right convention
        h, w = 5, 7
        m = np.arange(h * w, dtype=float).reshape(h, w, 1)
        shifted = shift2d_g3(Grid3(m), h - 1, w - 2).data
        for i in range(h):
            for j in range(w):
                assert shifted[i, j, 0] == m[(i + 1) % h, (j + 2) % w, 0]

    def test_out_of_range_shift(self):
        m = Grid3(np.zeros((2, 3, 1)))
        for s_h, s_w in ((2, 0), (0, 3), (-1, 0), (0, -1)):
            with pytest.raises(InvalidShift):
                shift2d_g3(m, s_h, s_w)

    def test_g1_mask_moves_with_values(self):
        vals = np.ones((3, 3))
        valid = np.ones((3, 3), dtype=bool)
        valid[0, 0] = False
        out = shift2d_g1(Grid1(vals, valid), 1, 0)
        assert not out.valid[1, 0]
        assert out.valid.sum() == 8

    def test_constant_map_unchanged(self):
        g = Grid1(np.full((4, 5), 2.5))
        out = shift2d_g1(g, 3, 2)
        assert np.array_equal(out.values, g.values)

    @given(st.integers(0, 4), st.integers(0, 5), st.integers(0, 4), st.integers(0, 5),
           st.integers(0, 2**32))
    @settings(max_examples=50, deadline=None)
    def test_shift_composition_adds_modulo(self, a, b, c, d, seed):
        h, w = 5, 6
        rng = SeedRng(seed)
        m = Grid3(rng.normals(h * w * 2).reshape(h, w, 2))
        two = shift2d_g3(shift2d_g3(m, a, b), c, d)
        one = shift2d_g3(m, (a + c) % h, (b + d) % w)
        assert np.array_equal(two.data, one.data)

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 2**32))
    @settings(max_examples=30, deadline=None)
    def test_double_shift_identity(self, s_h, s_w, seed):
        h, w = 5, 6
        rng = SeedRng(seed)
        m = Grid3(rng.normals(h * w * 3).reshape(h, w, 3))
        back = shift2d_g3(shift2d_g3(m, s_h, s_w), (h - s_h) % h, (w - s_w) % w)
        assert np.array_equal(back.data, m.data)

    def test_shift_preserves_value_multiset(self):
        rng = SeedRng(9)
        m = Grid3(rng.normals(24).reshape(4, 3, 2))
        out = shift2d_g3(m, 2, 1)
        assert sorted(m.data.ravel()) == sorted(out.data.ravel())
