import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smsquiz import fuzzy
from smsquiz.fuzzy import (
    CrispInput,
    MembershipFunction,
    OutputShape,
    Rule,
    ZeroActivation,
    aggregate,
    default_config,
    default_system,
    defuzzify_centroid,
    fuzzify,
    infer_level,
    load_system,
    rule_strengths,
    surface_csv,
    surface_grid,
    system_from_config,
    trap,
    tri,
)

from oracles import mf_eval, riemann_centroid

SYSTEM = default_system()
EDU, AGE, STANDING = SYSTEM.inputs


def shape_with(heights):
    return OutputShape(SYSTEM.output, tuple(heights))


class TestMembershipFunctions:
    def test_triangle_evaluation(self):
        f = tri(6, 10, 13)
        assert f(6) == 0.0
        assert f(10) == 1.0
        assert f(13) == 0.0
        assert f(8) == pytest.approx(0.5)
        assert f(5.9) == 0.0 and f(13.1) == 0.0

    def test_shoulder_trapezoids(self):
        left = trap(10, 10, 12, 15)
        assert left(10) == 1.0 and left(12) == 1.0
        assert left(13.5) == pytest.approx(0.5)
        assert left(15) == 0.0
        right = trap(10, 14, 16, 16)
        assert right(10) == 0.0
        assert right(16) == 1.0

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            MembershipFunction("tri", (3.0, 2.0, 1.0))
        with pytest.raises(ValueError):
            MembershipFunction("bell", (0.0, 1.0))
        with pytest.raises(ValueError):
            MembershipFunction("trap", (0.0, 1.0, 2.0))

    def test_matches_interp_oracle_on_dense_grid(self):
        for var in (*SYSTEM.inputs, SYSTEM.output):
            lo, hi = var.universe
            for _, mf in var.terms:
                for i in range(201):
                    x = lo + (hi - lo) * i / 200
                    assert mf(x) == pytest.approx(mf_eval(mf, x), abs=1e-12)


class TestFuzzify:
    def test_age_apex_and_shoulder(self):
        assert fuzzify(AGE, 17) == (0.0, 1.0, 0.0)
        assert fuzzify(AGE, 10) == (1.0, 0.0, 0.0)

    def test_standing_interpolation(self):
        degrees = fuzzify(STANDING, 42.5)
        assert degrees == pytest.approx((0.375, 0.375, 0.0))
        for d, (_, mf) in zip(degrees, STANDING.terms):
            assert d == pytest.approx(mf_eval(mf, 42.5), abs=1e-12)

    def test_out_of_universe_clamps(self):
        assert fuzzify(AGE, 5) == fuzzify(AGE, 10)
        assert fuzzify(AGE, 99) == fuzzify(AGE, 30)

    @given(st.floats(min_value=-50, max_value=150, allow_nan=False))
    def test_degrees_bounded(self, x):
        for var in SYSTEM.inputs:
            for d in fuzzify(var, x):
                assert 0.0 <= d <= 1.0


class TestRuleBase:
    def test_full_grid(self):
        antecedents = [r.antecedent for r in SYSTEM.rules]
        assert len(antecedents) == 27
        assert len(set(antecedents)) == 27
        assert set(antecedents) == {
            (i, j, k) for i in range(3) for j in range(3) for k in range(3)
        }

    def test_corner_fires_single_rule(self):
        strengths = rule_strengths(SYSTEM, CrispInput(16, 30, 100))
        fired = [
            (r.antecedent, s) for r, s in zip(SYSTEM.rules, strengths) if s > 0
        ]
        assert fired == [((2, 2, 2), 1.0)]

    def test_opposite_corner(self):
        strengths = rule_strengths(SYSTEM, CrispInput(0, 10, 0))
        fired = [
            (r.antecedent, s) for r, s in zip(SYSTEM.rules, strengths) if s > 0
        ]
        assert fired == [((0, 0, 0), 1.0)]

    @given(
        st.floats(min_value=0, max_value=16),
        st.floats(min_value=10, max_value=30),
        st.floats(min_value=0, max_value=100),
    )
    def test_some_rule_always_fires(self, e, a, s):
        assert max(rule_strengths(SYSTEM, CrispInput(e, a, s))) > 0.0

    def test_rule_validation(self):
        cfg = default_config()
        cfg["rules"] = cfg["rules"][:-1]
        with pytest.raises(ValueError, match="full"):
            system_from_config(cfg)

        cfg = default_config()
        cfg["rules"][0] = dict(cfg["rules"][1])
        with pytest.raises(ValueError, match="duplicate"):
            system_from_config(cfg)

        cfg = default_config()
        cfg["output"]["terms"] = cfg["output"]["terms"][:5]
        with pytest.raises(ValueError):
            system_from_config(cfg)

    def test_coverage_gap_rejected(self):
        cfg = default_config()
        # carve a hole in the middle of the age partition
        cfg["inputs"][1]["terms"][1]["params"] = [15.5, 16, 16.5]
        with pytest.raises(ValueError, match="covers"):
            system_from_config(cfg)


class TestAggregate:
    def test_matches_max_min_definition(self):
        crisp = CrispInput(8, 17, 42.5)
        strengths = rule_strengths(SYSTEM, crisp)
        shape = aggregate(SYSTEM, strengths)
        for i in range(51):
            y = 5 * i / 50
            expected = max(
                min(s, mf_eval(SYSTEM.output.terms[r.consequent][1], y))
                for r, s in zip(SYSTEM.rules, strengths)
            )
            assert shape.value_at(y) == pytest.approx(expected, abs=1e-12)


class TestCentroid:
    def test_symmetric_triangle(self):
        shape = shape_with([0, 0, 0, 1.0, 0, 0])  # tri(2, 3, 4) at full height
        assert defuzzify_centroid(shape) == pytest.approx(3.0, abs=1e-12)

    def test_clipped_edge_ramp(self):
        # top output term reduces to mu(y) = y - 4 on [4, 5]
        shape = shape_with([0, 0, 0, 0, 0, 1.0])
        crisp = defuzzify_centroid(shape)
        assert crisp == pytest.approx(14 / 3, abs=1e-12)
        assert crisp == pytest.approx(riemann_centroid(shape), abs=1e-3)

    def test_zero_shape_raises(self):
        with pytest.raises(ZeroActivation):
            defuzzify_centroid(shape_with([0.0] * 6))

    @given(st.lists(st.floats(min_value=0, max_value=1), min_size=6, max_size=6))
    @settings(max_examples=60)
    def test_agrees_with_riemann_oracle(self, heights):
        if max(heights) == 0.0:
            return
        shape = shape_with(heights)
        assert defuzzify_centroid(shape) == pytest.approx(
            riemann_centroid(shape), abs=1e-3
        )


class TestInferLevel:
    def test_high_corner(self):
        level, crisp = infer_level(SYSTEM, CrispInput(16, 30, 100))
        assert level == 5
        assert abs(crisp - 14 / 3) < 1e-9

    def test_low_corner(self):
        level, crisp = infer_level(SYSTEM, CrispInput(0, 10, 0))
        assert level == 0
        assert abs(crisp - 1 / 3) < 1e-9

    def test_mid_band_apex_input(self):
        # education 8 straddles School/HighSchool, so two rules fire; the
        # blend still rounds to the (HighSchool, Teen, Average) consequent
        level, crisp = infer_level(SYSTEM, CrispInput(8, 17, 55))
        assert level == 3
        assert abs(crisp - 101 / 39) < 1e-9
        shape = aggregate(SYSTEM, rule_strengths(SYSTEM, CrispInput(8, 17, 55)))
        assert crisp == pytest.approx(riemann_centroid(shape), abs=1e-3)

    @given(
        st.floats(min_value=-10, max_value=30, allow_nan=False),
        st.floats(min_value=0, max_value=45, allow_nan=False),
        st.floats(min_value=-20, max_value=130, allow_nan=False),
    )
    @settings(max_examples=80)
    def test_range_and_clamping(self, e, a, s):
        level, crisp = infer_level(SYSTEM, CrispInput(e, a, s))
        assert 0 <= level <= 5
        assert 0.0 <= crisp <= 5.0
        clamped = CrispInput(
            EDU.clamp(e), AGE.clamp(a), STANDING.clamp(s)
        )
        assert infer_level(SYSTEM, clamped) == (level, crisp)

    def test_monotone_in_standing(self):
        prev = -1.0
        for i in range(51):
            crisp = infer_level(SYSTEM, CrispInput(8, 20, 100 * i / 50)).crisp
            assert crisp >= prev - 1e-9
            prev = crisp


class TestSurface:
    def test_grid_shape_and_determinism(self):
        rows = surface_grid(SYSTEM, "age_years", 20.0, resolution=3)
        assert len(rows) == 9
        assert rows == surface_grid(SYSTEM, "age_years", 20.0, resolution=3)
        # row-major: education outer, standing inner
        assert [r[0] for r in rows[:3]] == [0.0, 0.0, 0.0]
        assert [r[1] for r in rows[:3]] == [0.0, 50.0, 100.0]

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            surface_grid(SYSTEM, "age_years", 20.0, resolution=1)
        with pytest.raises(ValueError):
            surface_grid(SYSTEM, "not_a_variable", 1.0)

    def test_csv_header(self):
        text = surface_csv(SYSTEM, "education_years", 8.0, resolution=2)
        lines = text.strip().split("\n")
        assert lines[0] == "x1,x2,crisp"
        assert len(lines) == 5


class TestConfig:
    def test_default_roundtrip(self):
        assert system_from_config(default_config()) == SYSTEM

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "controller.json"
        path.write_text(json.dumps(default_config()), encoding="utf-8")
        assert load_system(path) == SYSTEM

    def test_consequents_span_all_levels(self):
        used = {r.consequent for r in SYSTEM.rules}
        assert used == set(range(6))

    def test_consequents_monotone_in_each_rank(self):
        table = {r.antecedent: r.consequent for r in SYSTEM.rules}
        for (i, j, k), out in table.items():
            for di, dj, dk in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                up = (i + di, j + dj, k + dk)
                if up in table:
                    assert table[up] >= out
