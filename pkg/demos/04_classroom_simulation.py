# Run a small simulated classroom end to end and read the analytics back:
# per-learner summaries, per-level statistics, and learning curves split
# into before/after halves to show improvement.

from smsquiz.harness import SimLearnerProfile, Simulator

profiles = [
    SimLearnerProfile("07700900011", "ATIF", 32, 8, (0.9, 0.8, 0.7, 0.6, 0.5, 0.4), 40, 1),
    SimLearnerProfile("07700900012", "RAYAZ", 35, 5, (0.8, 0.6, 0.5, 0.4, 0.3, 0.2), 40, 1),
    SimLearnerProfile("07700900013", "MUBEEN", 29, 7, (1.0, 0.9, 0.8, 0.7, 0.6, 0.5), 40, 1),
    SimLearnerProfile("07700900014", "SADIQ", 25, 8, (0.7, 0.7, 0.7, 0.7, 0.7, 0.7), 40, 2),
]

sim = Simulator("banks/demo.bank", seed=42)
summaries = sim.run(profiles)

print("=== per-learner summaries (blocks are correct/asked) ===")
for summary in summaries:
    print(summary.format())

print("\n=== per-level statistics ===")
for stat in sim.store.player_level.values():
    pct = 100.0 * stat.total_correct / stat.total_asked
    print(f"{stat.player_id:<7} topic={stat.topic_id} level={stat.level} "
          f"asked={stat.total_asked:>2} correct={stat.total_correct:>2} ({pct:.0f}%)")

print("\n=== learning curves (percent correct per 10-answer window) ===")
for profile in profiles:
    curve = sim.store.learning_curve(profile.phone, profile.name, profile.topic_id, 10)
    series = " ".join(f"{pct:5.1f}" for _, pct in curve)
    half = len(curve) // 2
    before = sum(p for _, p in curve[:half]) / max(1, half)
    after = sum(p for _, p in curve[half:]) / max(1, len(curve) - half)
    print(f"{profile.name:<7} {series}   first-half avg {before:5.1f} -> "
          f"second-half avg {after:5.1f}")

print("\nnote: percent correct can stay flat while the level climbs; the "
      "difficulty of what is being answered is the real outcome")
print("\nsame thing via the CLI: smsquiz simulate banks/learners.json "
      "--bank banks/demo.bank --state-dir /tmp/classroom")
