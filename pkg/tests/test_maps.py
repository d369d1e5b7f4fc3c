import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prune_planner import (
    DimTriple,
    FactorTriple,
    FullTensorMap,
    SeparableMap,
    canonicalize,
    cost,
    eval_full,
    eval_poly,
    eval_separable,
    frr,
    map_from_json_dict,
    map_to_json_dict,
    poly_derivative,
    predict_many,
    prr_estimate,
    separable_to_full,
)

ratios = st.floats(min_value=0.05, max_value=1.0, allow_nan=False)


def toy_map() -> SeparableMap:
    return SeparableMap(1, 1, (FactorTriple((0.5, 0.5), (0.0, 1.0), (1.0, 0.0)),))


class TestEvalPoly:
    def test_sum_of_coefficients_at_one(self):
        assert eval_poly((0.5, 0.5), 1.0) == 1.0

    def test_half(self):
        assert eval_poly((0.5, 0.5), 0.5) == 0.75

    def test_constant(self):
        assert eval_poly((1.0, 0.0, 0.0, 0.0), 0.37) == 1.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            eval_poly((), 1.0)


class TestPolyDerivative:
    def test_linear(self):
        assert poly_derivative((0.5, 0.5)) == (0.5,)

    def test_quadratic(self):
        assert poly_derivative((1.0, 0.0, 3.0)) == (0.0, 6.0)

    def test_constant_maps_to_zero(self):
        assert poly_derivative((7.0,)) == (0.0,)


class TestSeparableEval:
    def test_base_point(self):
        assert eval_separable(toy_map(), DimTriple(1, 1, 1)) == 1.0

    def test_mixed_point(self):
        # factors evaluate to 0.75, 0.8, 1.0
        assert eval_separable(toy_map(), DimTriple(0.5, 0.8, 0.3)) == pytest.approx(
            0.6, abs=1e-15
        )

    def test_rank_terms_sum(self):
        const = FactorTriple((0.25,), (1.0,), (1.0,))
        m = SeparableMap(2, 0, (const, const))
        assert eval_separable(m, DimTriple(0.3, 0.9, 0.7)) == 0.5

    def test_rank_one_is_product_of_factors(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            c = lambda: tuple(rng.normal(size=4))
            f = FactorTriple(c(), c(), c())
            m = SeparableMap(1, 3, (f,))
            p = DimTriple(*rng.uniform(0.05, 1.0, 3))
            expected = (
                eval_poly(f.d, p.d) * eval_poly(f.w, p.w) * eval_poly(f.r, p.r)
            )
            assert eval_separable(m, p) == pytest.approx(expected, rel=1e-14)


class TestFullEval:
    def test_constant_tensor(self):
        coeffs = np.zeros((3, 3, 3))
        coeffs[0, 0, 0] = 0.9
        m = FullTensorMap(2, coeffs)
        assert eval_full(m, DimTriple(0.4, 0.7, 0.2)) == 0.9

    def test_single_monomial(self):
        coeffs = np.zeros((2, 2, 2))
        coeffs[1, 1, 1] = 1.0
        m = FullTensorMap(1, coeffs)
        assert eval_full(m, DimTriple(0.5, 0.5, 0.5)) == 0.125

    def test_matches_separable_through_cp_assembly(self):
        rng = np.random.default_rng(11)
        for rank in (1, 2, 3):
            c = lambda: tuple(rng.normal(scale=0.5, size=4))
            m = SeparableMap(
                rank, 3, tuple(FactorTriple(c(), c(), c()) for _ in range(rank))
            )
            dense = separable_to_full(m)
            for _ in range(100):
                p = DimTriple(*rng.uniform(0.05, 1.0, 3))
                assert abs(eval_full(dense, p) - eval_separable(m, p)) <= 1e-12

    def test_predict_many_agrees_with_scalar(self):
        rng = np.random.default_rng(5)
        coeffs = rng.normal(size=(4, 4, 4))
        m = FullTensorMap(3, coeffs)
        pts = rng.uniform(0.1, 1.0, size=(20, 3))
        batch = predict_many(m, pts[:, 0], pts[:, 1], pts[:, 2])
        for i, p in enumerate(pts):
            assert batch[i] == pytest.approx(eval_full(m, DimTriple(*p)), rel=1e-13)


class TestCostModel:
    def test_base_model(self):
        assert cost(DimTriple(1, 1, 1)) == 1.0

    def test_linear_in_depth(self):
        assert cost(DimTriple(0.5, 1, 1)) == 0.5

    def test_published_optimum_arithmetic(self):
        # independent oracle: plain arithmetic on the ratio triple
        expected = 0.78 * 0.82**2 * 0.98**2
        assert cost(DimTriple(0.78, 0.82, 0.98)) == pytest.approx(expected, rel=1e-15)
        assert expected == pytest.approx(0.5037029, abs=1e-7)

    @given(ratios, ratios, ratios)
    @settings(max_examples=60, deadline=None)
    def test_bounded_with_equality_only_at_base(self, d, w, r):
        value = cost(DimTriple(d, w, r))
        assert 0 < value <= 1.0
        if (d, w, r) != (1.0, 1.0, 1.0):
            assert value < 1.0 or d * w * r == 1.0

    @given(ratios, ratios, ratios, st.floats(min_value=0.5, max_value=0.99))
    @settings(max_examples=60, deadline=None)
    def test_strictly_increasing_per_coordinate(self, d, w, r, shrink):
        p = DimTriple(d, w, r)
        for smaller in (
            DimTriple(d * shrink, w, r),
            DimTriple(d, w * shrink, r),
            DimTriple(d, w, r * shrink),
        ):
            assert cost(smaller) < cost(p)


class TestReductionRatios:
    def test_base_has_no_reduction(self):
        assert frr(DimTriple(1, 1, 1)) == 0.0
        assert prr_estimate(DimTriple(1, 1, 1)) == 0.0

    def test_frr_complements_cost(self):
        p = DimTriple(0.78, 0.82, 0.98)
        assert frr(p) == pytest.approx(1.0 - 0.78 * 0.82**2 * 0.98**2, rel=1e-15)
        assert frr(p) == pytest.approx(0.4962971, abs=1e-7)

    def test_prr_ignores_resolution(self):
        assert prr_estimate(DimTriple(0.5, 1, 1)) == 0.5
        assert prr_estimate(DimTriple(0.5, 1, 0.3)) == 0.5


class TestCanonicalScaling:
    def test_rescaling_leaves_predictions_unchanged(self):
        rng = np.random.default_rng(7)
        c = lambda: tuple(rng.normal(size=4))
        base = FactorTriple(c(), c(), c())
        m = SeparableMap(1, 3, (base,))
        alpha, beta = 2.7, 0.31
        rescaled = SeparableMap(
            1,
            3,
            (
                FactorTriple(
                    tuple(alpha * beta * x for x in base.d),
                    tuple(x / alpha for x in base.w),
                    tuple(x / beta for x in base.r),
                ),
            ),
        )
        for _ in range(30):
            p = DimTriple(*rng.uniform(0.05, 1.0, 3))
            assert eval_separable(rescaled, p) == pytest.approx(
                eval_separable(m, p), rel=1e-12
            )

    def test_canonicalize_normalizes_and_preserves_values(self):
        rng = np.random.default_rng(13)
        c = lambda: tuple(rng.normal(scale=3.0, size=3))
        m = SeparableMap(2, 2, (FactorTriple(c(), c(), c()), FactorTriple(c(), c(), c())))
        canon = canonicalize(m)
        for f in canon.factors:
            assert np.linalg.norm(f.w) == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.norm(f.r) == pytest.approx(1.0, abs=1e-12)
        for _ in range(20):
            p = DimTriple(*rng.uniform(0.05, 1.0, 3))
            assert eval_separable(canon, p) == pytest.approx(
                eval_separable(m, p), rel=1e-12
            )

    def test_canonicalize_is_idempotent(self):
        rng = np.random.default_rng(17)
        c = lambda: tuple(rng.normal(size=4))
        m = canonicalize(SeparableMap(1, 3, (FactorTriple(c(), c(), c()),)))
        again = canonicalize(m)
        for f1, f2 in zip(m.factors, again.factors):
            for v1, v2 in zip(f1, f2):
                assert max(abs(a - b) for a, b in zip(v1, v2)) <= 1e-14


class TestDomainTypes:
    @pytest.mark.parametrize("bad", [(0.0, 1, 1), (1, 1.2, 1), (1, 1, -0.1)])
    def test_dim_triple_bounds(self, bad):
        with pytest.raises(ValueError):
            DimTriple(*bad)

    def test_dim_triple_rejects_nan(self):
        with pytest.raises(ValueError):
            DimTriple(float("nan"), 1, 1)

    def test_separable_map_checks_lengths(self):
        with pytest.raises(ValueError):
            SeparableMap(1, 2, (FactorTriple((1.0, 0.0), (1.0, 0.0), (1.0, 0.0)),))

    def test_full_tensor_checks_shape_and_finiteness(self):
        with pytest.raises(ValueError):
            FullTensorMap(2, np.zeros((2, 2, 2)))
        bad = np.zeros((2, 2, 2))
        bad[0, 0, 0] = np.inf
        with pytest.raises(ValueError):
            FullTensorMap(1, bad)

    def test_full_tensor_is_immutable(self):
        m = FullTensorMap(1, np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            m.coefficients[0, 0, 0] = 1.0


class TestSerialization:
    def test_separable_round_trip_is_value_exact(self):
        rng = np.random.default_rng(23)
        c = lambda: tuple(rng.normal(size=5))
        m = SeparableMap(2, 4, (FactorTriple(c(), c(), c()), FactorTriple(c(), c(), c())))
        doc = json.loads(json.dumps(map_to_json_dict(m)))
        back = map_from_json_dict(doc)
        assert isinstance(back, SeparableMap)
        assert back.factors == m.factors
        assert (back.rank, back.degree) == (m.rank, m.degree)

    def test_full_round_trip_is_value_exact(self):
        rng = np.random.default_rng(29)
        m = FullTensorMap(3, rng.normal(size=(4, 4, 4)))
        doc = json.loads(json.dumps(map_to_json_dict(m)))
        back = map_from_json_dict(doc)
        assert isinstance(back, FullTensorMap)
        assert np.array_equal(back.coefficients, m.coefficients)

    def test_schema_fields(self):
        doc = map_to_json_dict(toy_map())
        assert doc["format"] == "map/v1"
        assert doc["kind"] == "separable"
        assert doc["degree"] == 1 and doc["rank"] == 1
        assert doc["factors"][0]["w"] == [0.0, 1.0]

    @pytest.mark.parametrize(
        "doc",
        [
            {"format": "map/v2", "kind": "separable"},
            {"format": "map/v1", "kind": "mystery"},
            [],
        ],
    )
    def test_rejects_unknown_documents(self, doc):
        with pytest.raises(ValueError):
            map_from_json_dict(doc)
