"""Mamdani fuzzy controller mapping learner features to a question difficulty.

Three crisp inputs (years of education, age in years, previous standing as a
percentage) are fuzzified over piecewise-linear membership functions, run
through a full-grid AND/min rule base, aggregated with max, and defuzzified
with an exact centroid over [0, 5].
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple


class ZeroActivation(Exception):
    """No rule fired: the aggregated output membership is identically zero."""


@dataclass(frozen=True)
class MembershipFunction:
    """Triangular or trapezoidal membership function.

    Internally both are the trapezoid (a, b, c, d) with b == c for triangles;
    the function is 0 outside [a, d], 1 on [b, c] and linear in between.
    """

    shape: str
    params: tuple[float, ...]

    def __post_init__(self):
        n = {"tri": 3, "trap": 4}.get(self.shape)
        if n is None:
            raise ValueError(f"unknown membership shape {self.shape!r}")
        if len(self.params) != n:
            raise ValueError(f"{self.shape} takes {n} parameters, got {self.params}")
        if list(self.params) != sorted(self.params):
            raise ValueError(f"{self.shape} parameters must be non-decreasing: {self.params}")
        if self.shape == "tri":
            a, b, c = self.params
            abcd = (a, b, b, c)
        else:
            abcd = self.params
        object.__setattr__(self, "_abcd", abcd)

    def __call__(self, x: float) -> float:
        a, b, c, d = self._abcd
        if x < a or x > d:
            return 0.0
        if x < b:
            return (x - a) / (b - a)
        if x <= c:
            return 1.0
        return (d - x) / (d - c)

    def corners(self) -> tuple[float, ...]:
        return self.params

    def clip_crossings(self, alpha: float) -> list[float]:
        """x positions where the function crosses a horizontal clip level."""
        a, b, c, d = self._abcd
        xs = []
        if 0.0 < alpha < 1.0:
            if b > a:
                xs.append(a + alpha * (b - a))
            if d > c:
                xs.append(d - alpha * (d - c))
        return xs


def tri(a: float, b: float, c: float) -> MembershipFunction:
    return MembershipFunction("tri", (a, b, c))


def trap(a: float, b: float, c: float, d: float) -> MembershipFunction:
    return MembershipFunction("trap", (a, b, c, d))


def _linear_atoms(
    funcs: list[tuple[float, MembershipFunction]], lo: float, hi: float
) -> list[float]:
    """Grid points between which every clipped function is a single,
    non-crossing linear piece. Exactness of the centroid integral and of the
    coverage minimum both rest on this subdivision."""
    xs = [lo, hi]
    for alpha, f in funcs:
        for x in f.params:
            if lo < x < hi:
                xs.append(x)
        if 0.0 < alpha < 1.0:
            a, b, c, d = f._abcd
            if b > a:
                x = a + alpha * (b - a)
                if lo < x < hi:
                    xs.append(x)
            if d > c:
                x = d - alpha * (d - c)
                if lo < x < hi:
                    xs.append(x)
    xs.sort()
    base = [xs[0]]
    last = xs[0]
    for x in xs[1:]:
        if x > last:
            base.append(x)
            last = x
    if len(funcs) < 2:
        return base
    vals = []
    for alpha, f in funcs:
        row = []
        for x in base:
            v = f(x)
            row.append(alpha if v > alpha else v)
        vals.append(row)
    extra = []
    spans = len(base) - 1
    for i in range(len(vals) - 1):
        vi = vals[i]
        for j in range(i + 1, len(vals)):
            vj = vals[j]
            for idx in range(spans):
                d0 = vi[idx] - vj[idx]
                d1 = vi[idx + 1] - vj[idx + 1]
                if d0 * d1 < 0:
                    p = base[idx]
                    extra.append(p + (base[idx + 1] - p) * d0 / (d0 - d1))
    if extra:
        base.extend(extra)
        base.sort()
    return base


@dataclass(frozen=True)
class LinguisticVariable:
    """Named variable over a closed universe with an ordered list of terms."""

    name: str
    universe: tuple[float, float]
    terms: tuple[tuple[str, MembershipFunction], ...]

    def __post_init__(self):
        lo, hi = self.universe
        if not lo < hi:
            raise ValueError(f"{self.name}: empty universe {self.universe}")
        if not self.terms:
            raise ValueError(f"{self.name}: no terms")
        labels = [label for label, _ in self.terms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"{self.name}: duplicate term labels")
        gap = self._coverage_gap()
        if gap is not None:
            raise ValueError(f"{self.name}: no term covers x={gap}")
        object.__setattr__(self, "_mfs", tuple(mf for _, mf in self.terms))

    def _coverage_gap(self) -> float | None:
        lo, hi = self.universe
        funcs = [(1.0, mf) for _, mf in self.terms]
        for x in _linear_atoms(funcs, lo, hi):
            if max(mf(x) for _, mf in self.terms) <= 0.0:
                return x
        return None

    def clamp(self, x: float) -> float:
        lo, hi = self.universe
        return min(hi, max(lo, x))

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.terms)

    def index_of(self, label: str) -> int:
        for i, (name, _) in enumerate(self.terms):
            if name == label:
                return i
        raise ValueError(f"{self.name}: unknown term {label!r}")


@dataclass(frozen=True)
class Rule:
    """One AND-combined rule: a term index per input, one output term index."""

    antecedent: tuple[int, int, int]
    consequent: int


@dataclass(frozen=True)
class CrispInput:
    education_years: float
    age_years: float
    standing_pct: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.education_years, self.age_years, self.standing_pct)


@dataclass(frozen=True)
class FuzzySystem:
    inputs: tuple[LinguisticVariable, ...]
    output: LinguisticVariable
    rules: tuple[Rule, ...]

    def __post_init__(self):
        if len(self.inputs) != 3:
            raise ValueError(f"expected 3 input variables, got {len(self.inputs)}")
        if len(self.output.terms) != 6:
            raise ValueError(f"output must have 6 terms, got {len(self.output.terms)}")
        shape = tuple(len(var.terms) for var in self.inputs)
        want = set(itertools.product(*(range(n) for n in shape)))
        got = [r.antecedent for r in self.rules]
        if len(got) != len(set(got)):
            raise ValueError("duplicate rule antecedents")
        if set(got) != want:
            raise ValueError(
                f"rule base must cover the full {'x'.join(map(str, shape))} antecedent grid"
            )
        for r in self.rules:
            if not 0 <= r.consequent < len(self.output.terms):
                raise ValueError(f"rule consequent {r.consequent} out of range")
        object.__setattr__(self, "_antecedents", tuple(r.antecedent for r in self.rules))
        object.__setattr__(self, "_consequents", tuple(r.consequent for r in self.rules))

    def input_named(self, name: str) -> LinguisticVariable:
        for var in self.inputs:
            if var.name == name:
                return var
        raise ValueError(f"unknown input variable {name!r}")


def fuzzify(var: LinguisticVariable, x: float) -> tuple[float, ...]:
    """Membership degree of x (clamped into the universe) for every term."""
    lo, hi = var.universe
    cx = lo if x < lo else hi if x > hi else x
    return tuple(mf(cx) for mf in var._mfs)


def rule_strengths(system: FuzzySystem, crisp: CrispInput) -> tuple[float, ...]:
    """Firing strength per rule: min of the three antecedent degrees."""
    d0, d1, d2 = (
        fuzzify(var, x) for var, x in zip(system.inputs, crisp.as_tuple())
    )
    out = []
    for i, j, k in system._antecedents:
        s = d0[i]
        if s > 0.0:
            t = d1[j]
            if t < s:
                s = t
            if s > 0.0:
                t = d2[k]
                if t < s:
                    s = t
        out.append(s)
    return tuple(out)


@dataclass(frozen=True)
class OutputShape:
    """Aggregated output membership: per-term clip heights over one variable.

    value_at evaluates max over terms of min(height, term(y)), which equals
    the max over rules of min(strength, consequent) because rules sharing a
    consequent collapse under max.
    """

    variable: LinguisticVariable
    heights: tuple[float, ...]

    def value_at(self, y: float) -> float:
        return max(
            min(alpha, mf(y)) for alpha, (_, mf) in zip(self.heights, self.variable.terms)
        )

    def atom_xs(self) -> list[float]:
        lo, hi = self.variable.universe
        funcs = [
            (alpha, mf)
            for alpha, (_, mf) in zip(self.heights, self.variable.terms)
            if alpha > 0.0
        ]
        if not funcs:
            return [lo, hi]
        return _linear_atoms(funcs, lo, hi)


def aggregate(system: FuzzySystem, strengths: tuple[float, ...]) -> OutputShape:
    """Min-implication / max-aggregation of all fired rules."""
    heights = [0.0] * len(system.output.terms)
    for cons, s in zip(system._consequents, strengths):
        if s > heights[cons]:
            heights[cons] = s
    return OutputShape(system.output, tuple(heights))


def _branch_line(alpha: float, mf: MembershipFunction, x: float) -> tuple[float, float]:
    """(slope, intercept) of the clipped function's linear branch at x."""
    value = mf(x)
    if value >= alpha:
        return 0.0, alpha
    a, b, c, d = mf._abcd
    if x < a or x > d:
        return 0.0, 0.0
    if x < b:
        return 1.0 / (b - a), -a / (b - a)
    if x <= c:
        return 0.0, 1.0
    return -1.0 / (d - c), d / (d - c)


def defuzzify_centroid(shape: OutputShape) -> float:
    """Exact centroid of the piecewise-linear aggregate over its universe.

    Between consecutive atoms the envelope is one clipped term's linear
    branch; the branch is identified at the midpoint and integrated in closed
    form, which stays exact even when a clip crossing is not representable as
    a distinct float."""
    active = [
        (alpha, mf)
        for alpha, (_, mf) in zip(shape.heights, shape.variable.terms)
        if alpha > 0.0
    ]
    if not active:
        raise ZeroActivation("aggregated membership is identically zero")
    lo, hi = shape.variable.universe
    xs = _linear_atoms(active, lo, hi)
    exact = max(alpha for alpha, _ in active) < 1e-12

    area = 0.0
    moment = 0.0
    area_f = moment_f = Fraction(0)
    x0 = xs[0]
    for x1 in xs[1:]:
        mid = (x0 + x1) / 2.0
        best = -1.0
        line = (0.0, 0.0)
        for alpha, mf in active:
            v = mf(mid)
            if v > alpha:
                v = alpha
            if v > best:
                best = v
                line = _branch_line(alpha, mf, mid)
        slope, intercept = line
        if exact:
            # near-zero heights underflow float products; integrate exactly
            fx0, fx1 = Fraction(x0), Fraction(x1)
            fs, fi = Fraction(slope), Fraction(intercept)
            area_f += fs * (fx1 * fx1 - fx0 * fx0) / 2 + fi * (fx1 - fx0)
            moment_f += (
                fs * (fx1 ** 3 - fx0 ** 3) / 3 + fi * (fx1 * fx1 - fx0 * fx0) / 2
            )
        else:
            area += slope * (x1 * x1 - x0 * x0) / 2.0 + intercept * (x1 - x0)
            moment += (
                slope * (x1 * x1 * x1 - x0 * x0 * x0) / 3.0
                + intercept * (x1 * x1 - x0 * x0) / 2.0
            )
        x0 = x1
    if exact:
        if area_f <= 0:
            raise ZeroActivation("aggregated membership is identically zero")
        return float(moment_f / area_f)
    if area <= 0.0:
        raise ZeroActivation("aggregated membership is identically zero")
    return moment / area


class InferenceResult(NamedTuple):
    level: int
    crisp: float


def infer_level(system: FuzzySystem, crisp: CrispInput) -> InferenceResult:
    """Crisp controller output and its round-half-up integer level."""
    shape = aggregate(system, rule_strengths(system, crisp))
    value = defuzzify_centroid(shape)
    level = int(math.floor(value + 0.5))
    level = max(0, min(len(system.output.terms) - 1, level))
    return InferenceResult(level, value)


def surface_grid(
    system: FuzzySystem, fixed_name: str, fixed_value: float, resolution: int = 21
) -> list[tuple[float, float, float]]:
    """Sweep the two non-fixed inputs over their universes, row-major."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    fixed = system.input_named(fixed_name)
    free = [var for var in system.inputs if var.name != fixed_name]

    def axis(var: LinguisticVariable) -> list[float]:
        lo, hi = var.universe
        step = (hi - lo) / (resolution - 1)
        return [lo + i * step for i in range(resolution)]

    rows = []
    for x1 in axis(free[0]):
        for x2 in axis(free[1]):
            values = {fixed.name: fixed_value, free[0].name: x1, free[1].name: x2}
            crisp = CrispInput(*(values[var.name] for var in system.inputs))
            rows.append((x1, x2, infer_level(system, crisp).crisp))
    return rows


def surface_csv(
    system: FuzzySystem, fixed_name: str, fixed_value: float, resolution: int = 21
) -> str:
    lines = ["x1,x2,crisp"]
    for x1, x2, crisp in surface_grid(system, fixed_name, fixed_value, resolution):
        lines.append(f"{x1:g},{x2:g},{crisp:.6f}")
    return "\n".join(lines) + "\n"


# Normative controller definition. Input partitions follow the standard
# school/teen/performance clusters; output levels are unit triangles on [0, 5].
# Consequents rank each antecedent term 0..2 and sum the ranks, with top
# standing worth one extra level, capped at 5.

def _default_rules() -> list[dict]:
    edu = ["School", "HighSchool", "University"]
    age = ["Child", "Teen", "MidAge"]
    standing = ["Poor", "Average", "Good"]
    rules = []
    for (e, el), (a, al), (s, sl) in itertools.product(
        enumerate(edu), enumerate(age), enumerate(standing)
    ):
        level = min(5, e + a + s + (1 if s == 2 else 0))
        rules.append({"if": [el, al, sl], "then": f"Level{level}"})
    return rules


def default_config() -> dict:
    return {
        "inputs": [
            {
                "name": "education_years",
                "universe": [0, 16],
                "terms": [
                    {"label": "School", "shape": "trap", "params": [0, 0, 6, 9]},
                    {"label": "HighSchool", "shape": "tri", "params": [6, 10, 13]},
                    {"label": "University", "shape": "trap", "params": [10, 14, 16, 16]},
                ],
            },
            {
                "name": "age_years",
                "universe": [10, 30],
                "terms": [
                    {"label": "Child", "shape": "trap", "params": [10, 10, 12, 15]},
                    {"label": "Teen", "shape": "tri", "params": [13, 17, 21]},
                    {"label": "MidAge", "shape": "trap", "params": [19, 24, 30, 30]},
                ],
            },
            {
                "name": "standing_pct",
                "universe": [0, 100],
                "terms": [
                    {"label": "Poor", "shape": "trap", "params": [0, 0, 30, 50]},
                    {"label": "Average", "shape": "tri", "params": [35, 55, 75]},
                    {"label": "Good", "shape": "trap", "params": [60, 80, 100, 100]},
                ],
            },
        ],
        "output": {
            "name": "difficulty",
            "universe": [0, 5],
            "terms": [
                {"label": f"Level{k}", "shape": "tri", "params": [k - 1, k, k + 1]}
                for k in range(6)
            ],
        },
        "rules": _default_rules(),
    }


def _variable_from_config(spec: dict) -> LinguisticVariable:
    terms = tuple(
        (t["label"], MembershipFunction(t["shape"], tuple(float(p) for p in t["params"])))
        for t in spec["terms"]
    )
    lo, hi = spec["universe"]
    return LinguisticVariable(spec["name"], (float(lo), float(hi)), terms)


def system_from_config(config: dict) -> FuzzySystem:
    inputs = tuple(_variable_from_config(v) for v in config["inputs"])
    output = _variable_from_config(config["output"])
    rules = []
    for r in config["rules"]:
        antecedent = tuple(
            var.index_of(label) for var, label in zip(inputs, r["if"])
        )
        rules.append(Rule(antecedent, output.index_of(r["then"])))
    return FuzzySystem(inputs, output, tuple(rules))


def load_system(path: str | Path) -> FuzzySystem:
    """Load a controller from a JSON file shaped like default_config()."""
    with open(path, "r", encoding="utf-8") as f:
        return system_from_config(json.load(f))


def default_system() -> FuzzySystem:
    return system_from_config(default_config())
