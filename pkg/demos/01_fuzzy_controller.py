# Walk through the difficulty controller on its own: fuzzification, rule
# firing, and crisp output, then a small slice of the control surface.

from smsquiz.fuzzy import (
    CrispInput,
    aggregate,
    default_system,
    fuzzify,
    infer_level,
    rule_strengths,
    surface_csv,
)

system = default_system()

print("=== linguistic variables ===")
for var in (*system.inputs, system.output):
    terms = ", ".join(f"{label} {mf.shape}{mf.params}" for label, mf in var.terms)
    print(f"{var.name} on {var.universe}: {terms}")

print()
print("=== one learner, step by step ===")
learner = CrispInput(education_years=8, age_years=17, standing_pct=55)
print(f"crisp inputs: {learner}")
for var, x in zip(system.inputs, learner.as_tuple()):
    degrees = fuzzify(var, x)
    readable = ", ".join(
        f"{label}={degree:.3f}" for (label, _), degree in zip(var.terms, degrees)
    )
    print(f"  {var.name}({x}) -> {readable}")

strengths = rule_strengths(system, learner)
fired = [
    (rule, s) for rule, s in zip(system.rules, strengths) if s > 0
]
print(f"fired rules ({len(fired)} of {len(system.rules)}):")
for rule, s in fired:
    labels = [
        var.terms[idx][0] for var, idx in zip(system.inputs, rule.antecedent)
    ]
    out_label = system.output.terms[rule.consequent][0]
    print(f"  IF {' AND '.join(labels)} THEN {out_label}  (strength {s:.3f})")

level, crisp = infer_level(system, learner)
print(f"centroid of the aggregate: {crisp:.4f} -> difficulty level {level}")

print()
print("=== corners of the input space ===")
for e, a, s in [(16, 30, 100), (0, 10, 0), (16, 30, 0), (0, 10, 100)]:
    level, crisp = infer_level(system, CrispInput(e, a, s))
    print(f"edu={e:>2} age={a} standing={s:>3} -> crisp {crisp:.4f}, level {level}")

print()
print("=== surface slice (age fixed at 20, 5x5) ===")
print(surface_csv(system, "age_years", 20.0, resolution=5))
print("the CLI writes bigger grids: smsquiz export-surface --fix age_years=20")
