"""Masked storage: construction, round trips, tamper detection, distributions."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2

from pruw.errors import ConfigError, IntegrityError
from pruw.field import CounterNoise, allocate_eval_points
from pruw.storage import (
    ModelPlain,
    init_basic,
    init_random_sparse,
    init_topr,
    mask_value,
    reconstruct_plain,
    topr_subpacketization,
)


def small_basic(q=11, n=4, m=2, length=6, seed=5):
    fp = allocate_eval_points(n, 1, q)
    model = ModelPlain.random(m, length, q, random.Random(0))
    states = init_basic(model, fp, 2, 1, 1, seed)
    return fp, model, states


class TestInitBasic:
    def test_valid_shapes(self):
        fp, model, states = small_basic()
        assert len(states) == 4
        assert states[0].subpackets == 6

    def test_constraint_examples(self):
        fp = allocate_eval_points(4, 1, 127)
        model = ModelPlain.random(1, 4, 127, random.Random(0))
        init_basic(model, fp, 2, 1, 1, 0)  # N=4 optimal: ell=1
        with pytest.raises(ConfigError):
            init_basic(model, fp, 1, 1, 1, 0)  # below the privacy floor

    def test_ten_databases(self):
        fp = allocate_eval_points(10, 4, 127)
        model = ModelPlain.random(1, 8, 127, random.Random(0))
        states = init_basic(model, fp, 5, 1, 1, 0)
        assert states[0].layout.ell == 4

    def test_cells_match_formula(self):
        fp, model, states = small_basic()
        noise = CounterNoise(5)
        for st_ in states:
            alpha = fp.alpha(st_.db_index)
            for s in range(st_.subpackets):
                for m in range(2):
                    w = model.values[m][s]
                    mask = mask_value(noise, 11, "basic", s, 0, m, 2, alpha)
                    assert st_.cells[s][0][m] == (w + (fp.fs[0] - alpha) * mask) % 11

    def test_cross_database_noise_identity(self):
        # same counter stream feeds every database; only alpha varies
        fp, model, states = small_basic()
        q = 11
        for s in range(states[0].subpackets):
            for m in range(2):
                # solve the two-unknown system from two databases and check
                # the rest agree: cell = w + (f - alpha) * maskpoly(alpha)
                ys = [st_.cells[s][0][m] for st_ in states]
                from pruw.poly import lagrange_interpolate, poly_degree

                coeffs = lagrange_interpolate(fp.field, list(fp.alphas), ys)
                assert poly_degree(coeffs) <= 2


class TestRoundTrips:
    def test_basic_identity(self):
        _, model, states = small_basic()
        assert reconstruct_plain(states) == model

    def test_basic_padding(self):
        fp = allocate_eval_points(6, 2, 127)
        model = ModelPlain.random(2, 7, 127, random.Random(2))  # pads to 8
        states = init_basic(model, fp, 3, 1, 1, 9)
        assert states[0].padded_length == 8
        assert reconstruct_plain(states) == model

    def test_topr_cases(self):
        for case, ell in ((1, 2), (2, 3)):
            fp = allocate_eval_points(10, ell, 127)
            model = ModelPlain.random(2, 5 * ell, 127, random.Random(3))
            states = init_topr(model, fp, case, 4)
            assert states[0].layout.ell == ell
            assert reconstruct_plain(states) == model

    def test_random_sparse_cases(self):
        fp = allocate_eval_points(6, 8, 127)
        model = ModelPlain.random(2, 24, 127, random.Random(4))
        states = init_random_sparse(model, fp, 1, 6, 8, 11)
        assert reconstruct_plain(states) == model
        fp2 = allocate_eval_points(10, 6, 127)
        states2 = init_random_sparse(model, fp2, 2, 6, 4, 11)
        assert reconstruct_plain(states2) == model

    def test_tamper_detected(self):
        _, model, states = small_basic()
        states[2].cells[1][0][0] = (states[2].cells[1][0][0] + 1) % 11
        with pytest.raises(IntegrityError):
            reconstruct_plain(states)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=40, deadline=None)
    def test_basic_identity_random_shapes(self, seed):
        rng = random.Random(seed)
        n = rng.randint(4, 8)
        t1 = rng.randint((n + 1) // 2, n - 2)
        ell = n - t1 - 1
        fp = allocate_eval_points(n, ell, 127)
        model = ModelPlain.random(rng.randint(1, 3), rng.randint(1, 12), 127, rng)
        states = init_basic(model, fp, t1, 1, 1, seed)
        assert reconstruct_plain(states) == model


class TestTopRShape:
    def test_subpacketization_table(self):
        assert topr_subpacketization(10, 1) == 2
        assert topr_subpacketization(10, 2) == 3
        assert topr_subpacketization(6, 1) == 1
        assert topr_subpacketization(6, 2) == 1

    def test_rejects_non_integral(self):
        with pytest.raises(ConfigError):
            topr_subpacketization(5, 2)
        with pytest.raises(ConfigError):
            topr_subpacketization(8, 1)
        with pytest.raises(ConfigError):
            topr_subpacketization(4, 2)  # ell = 0

    def test_noise_degree_by_case(self):
        fp = allocate_eval_points(10, 3, 127)
        model = ModelPlain.random(1, 6, 127, random.Random(0))
        s1 = init_topr(model, allocate_eval_points(10, 2, 127), 1, 0)
        s2 = init_topr(model, fp, 2, 0)
        assert s1[0].layout.mask_degree == 4  # 2 * ell
        assert s2[0].layout.mask_degree == 4  # ell + 1


class TestRandomSparseInit:
    def test_case_order_enforced(self):
        fp = allocate_eval_points(6, 8, 127)
        model = ModelPlain.random(1, 24, 127, random.Random(0))
        with pytest.raises(ConfigError):
            init_random_sparse(model, fp, 1, 8, 6, 0)  # case 1 needs ell_w > ell_r
        with pytest.raises(ConfigError):
            init_random_sparse(model, fp, 2, 6, 8, 0)  # case 2 needs ell_r >= ell_w

    def test_tie_is_case_2(self):
        fp = allocate_eval_points(10, 4, 127)
        model = ModelPlain.random(1, 8, 127, random.Random(0))
        states = init_random_sparse(model, fp, 2, 4, 4, 0)
        assert states[0].layout.y == 4

    def test_noise_terms_by_parity(self):
        fp = allocate_eval_points(11, 6, 127)
        model = ModelPlain.random(1, 12, 127, random.Random(0))
        s1 = init_random_sparse(model, fp, 1, 4, 6, 0)
        s2 = init_random_sparse(model, fp, 2, 6, 4, 0)
        assert s1[0].layout.noise_terms == 5  # floor(11/2)
        assert s2[0].layout.noise_terms == 6  # ceil(11/2)


class TestCellDistributions:
    """Security surrogate: masked cells look uniform and model-independent."""

    def test_cell_chi2_uniform(self):
        q, n_samples = 7, 100_000
        fp = allocate_eval_points(4, 1, q)
        alpha = fp.alpha(1)
        counts = [0] * q
        w = 3
        for i in range(n_samples):
            noise = CounterNoise(i)
            mask = mask_value(noise, q, "basic", 0, 0, 0, 2, alpha)
            counts[(w + (fp.fs[0] - alpha) * mask) % q] += 1
        expected = n_samples / q
        stat = sum((c - expected) ** 2 / expected for c in counts)
        assert stat < chi2.ppf(0.99, df=q - 1)

    def test_cells_model_independent(self):
        # per-coordinate TVD between two planted models over fresh inits
        q, n_samples = 7, 100_000
        fp = allocate_eval_points(4, 1, q)
        alpha = fp.alpha(2)
        counts = {0: [0] * q, 5: [0] * q}
        for offset, w in enumerate(counts):
            for i in range(n_samples):
                mask = mask_value(CounterNoise(i + offset * n_samples), q, "basic", 0, 0, 0, 2, alpha)
                counts[w][(w + (fp.fs[0] - alpha) * mask) % q] += 1
        tvd = 0.5 * sum(abs(a - b) for a, b in zip(counts[0], counts[5])) / n_samples
        assert tvd < 0.02
