"""Acceptance gate: one test per release criterion, each at its stated
tolerance, printing a PASS line on success."""

import itertools
import random
import time
from pathlib import Path

import pytest

from smsquiz import fuzzy
from smsquiz.fuzzy import CrispInput, aggregate, default_system, infer_level, rule_strengths
from smsquiz.gateway import Gateway, SimClock
from smsquiz.harness import SimLearnerProfile, Simulator, replay, simulate
from smsquiz.session import Engine, InboundSms, SessionConfig
from smsquiz.tables import Store, load_store

REPO = Path(__file__).resolve().parent.parent
BANK = REPO / "banks" / "demo.bank"
TRANSCRIPTS = REPO / "transcripts"

SYSTEM = default_system()


def report(name):
    print(f"ACCEPTANCE {name}: PASS")


def test_rule_base_is_full_grid():
    antecedents = [r.antecedent for r in SYSTEM.rules]
    assert len(antecedents) == 27
    assert len(set(antecedents)) == 27, "antecedents must be pairwise distinct"
    assert set(antecedents) == set(itertools.product(range(3), range(3), range(3)))
    report("rule base 3x3x3 grid (27 distinct rules)")


def test_centroid_analytic_vs_riemann_oracle():
    from oracles import riemann_centroid

    rng = random.Random(20260810)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        crisp = CrispInput(
            rng.uniform(0, 16), rng.uniform(10, 30), rng.uniform(0, 100)
        )
        shape = aggregate(SYSTEM, rule_strengths(SYSTEM, crisp))
        analytic = fuzzy.defuzzify_centroid(shape)
        sampled = riemann_centroid(shape, samples=10001)
        worst = max(worst, abs(analytic - sampled))
        assert abs(analytic - sampled) <= 1e-3
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"oracle comparison took {elapsed:.2f}s"
    report(
        f"centroid oracle 1000 inputs (worst |diff| {worst:.2e}, {elapsed:.2f}s)"
    )


def test_corner_cases_exact():
    level, crisp = infer_level(SYSTEM, CrispInput(16, 30, 100))
    assert level == 5
    assert abs(crisp - 14 / 3) <= 1e-9
    level, crisp = infer_level(SYSTEM, CrispInput(0, 10, 0))
    assert level == 0
    assert abs(crisp - 1 / 3) <= 1e-9
    report("corner cases crisp=14/3 -> level 5 and crisp=1/3 -> level 0")


def test_monotonicity_sweeps():
    mids = {"education_years": 8.0, "age_years": 20.0, "standing_pct": 50.0}
    violations = 0
    for axis in mids:
        var = SYSTEM.input_named(axis)
        lo, hi = var.universe
        previous = None
        for i in range(101):
            values = dict(mids)
            values[axis] = lo + (hi - lo) * i / 100
            crisp = infer_level(
                SYSTEM,
                CrispInput(
                    values["education_years"],
                    values["age_years"],
                    values["standing_pct"],
                ),
            ).crisp
            if previous is not None and crisp < previous - 1e-9:
                violations += 1
            previous = crisp
    assert violations == 0
    report("monotone crisp output over 101-point sweeps of each input")


def test_coverage_grid_never_zero_activation():
    started = time.perf_counter()
    edu_axis = [16 * i / 100 for i in range(101)]
    age_axis = [10 + 20 * j / 100 for j in range(101)]
    standing_axis = [100 * k / 100 for k in range(101)]
    count = 0
    for e in edu_axis:
        for a in age_axis:
            for s in standing_axis:
                infer_level(SYSTEM, CrispInput(e, a, s))
                count += 1
    elapsed = time.perf_counter() - started
    assert count == 101 ** 3
    assert elapsed < 60.0, f"grid sweep took {elapsed:.1f}s"
    report(f"coverage 101^3 sweep with zero ZeroActivation ({elapsed:.1f}s)")


def test_protocol_conformance_corpus():
    transcripts = sorted(TRANSCRIPTS.glob("*.txt"))
    assert len(transcripts) >= 12, "conformance corpus must hold >= 12 transcripts"
    for path in transcripts:
        replay(path, BANK, seed=0)
    report(f"protocol conformance: {len(transcripts)} transcripts byte-exact")


def _mixed_profiles():
    return [
        SimLearnerProfile("07700900081", "ACE", 30, 16, (1.0,) * 6, 30, 1),
        SimLearnerProfile("07700900082", "MED", 20, 8, (0.6,) * 6, 25, 1),
        SimLearnerProfile("07700900083", "LOW", 10, 0, (0.0,) * 6, 30, 2),
    ]


def test_conservation_stats_equal_history():
    sim = Simulator(BANK, seed=17)
    sim.run(_mixed_profiles())
    store = sim.store
    counted: dict[tuple, tuple[int, int]] = {}
    for row in store.game_history:
        key = (row.phone_no, row.player_id, row.topic_id, row.level)
        asked, correct = counted.get(key, (0, 0))
        counted[key] = (asked + 1, correct + (1 if row.correct else 0))
    assert set(counted) == set(store.player_level)
    for key, (asked, correct) in counted.items():
        stat = store.player_level[key]
        assert stat.total_asked == asked, key
        assert stat.total_correct == correct, key
    report(
        f"conservation: {len(store.game_history)} history rows match "
        f"{len(store.player_level)} stat rows exactly"
    )


def test_adaptation_behavior_extremes():
    profiles = [
        SimLearnerProfile("07700900084", "TOP", 30, 16, (1.0,) * 6, 30, 1),
        SimLearnerProfile("07700900085", "FLOOR", 10, 0, (0.0,) * 6, 30, 1),
    ]
    first = simulate(profiles, BANK, seed=23)
    top, floor = first
    assert top.final_level == 5
    assert 5 in top.levels[: 3 + 1], f"level 5 not reached within 3 blocks: {top.levels}"
    assert set(floor.levels) == {0}
    second = simulate(profiles, BANK, seed=23)
    assert [s.format() for s in first] == [s.format() for s in second]
    report("adaptation: p=1.0 hits level 5 within 3 blocks, p=0.0 stays at 0")


def test_gateway_rate_and_ordering():
    clock = SimClock()
    store = Store()
    gateway = Gateway(store, drain_rate=1.0, clock=clock)
    for i in range(10):
        store.push_message("07700900086", f"M{i}")
    deliveries = []
    while store.outbox:
        clock.advance(1.0)
        deliveries.extend((clock(), m) for m in gateway.drain())
    times = [t for t, _ in deliveries]
    assert times == [float(i) for i in range(1, 11)], "one message per second"
    assert times[-1] == 10.0, "10 messages take exactly 10 simulated seconds"
    texts = [m.text for _, m in deliveries]
    assert texts == [f"M{i}" for i in range(10)], "strict FIFO"
    seqs = [m.seq for _, m in deliveries]
    assert seqs == list(range(1, 11)), "gap-free seq"

    # interleaved replies to three phones keep per-recipient order end to end
    clock2 = SimClock()
    store2 = load_store(None, BANK)
    engine = Engine(store2, SessionConfig(rng_seed=2))
    gateway2 = Gateway(store2, drain_rate=1.0, clock=clock2)
    phones = ["07700900087", "07700900088", "07700900089"]
    expected: dict[str, list[str]] = {p: [] for p in phones}
    script = ["START", "NEW PLAYER1", "1", "2", "EXIT"]
    for step_text in script:
        for phone in phones:
            clock2.advance(1.0)
            for reply in engine.handle_message(
                InboundSms(phone, step_text, clock2())
            ):
                expected[reply.phone_no].append(reply.text)
    while store2.outbox:
        clock2.advance(1.0)
        gateway2.drain()
    for phone in phones:
        delivered = [m.text for m in gateway2.poll_outbound(phone)]
        assert delivered == expected[phone], f"order broken for {phone}"
        assert [m.seq for m in gateway2.poll_outbound(phone)] == list(
            range(1, len(delivered) + 1)
        )
    report("gateway: exact 1 msg/s schedule, FIFO, dense seq, 3-phone interleave")


def test_persistence_roundtrip_after_simulated_session(tmp_path):
    state = tmp_path / "state"
    profiles = [
        SimLearnerProfile("07700900091", "P1", 25, 12, (0.8,) * 6, 70, 1),
        SimLearnerProfile("07700900092", "P2", 15, 4, (0.4,) * 6, 70, 1),
        SimLearnerProfile("07700900093", "P3", 28, 14, (0.9,) * 6, 60, 2),
    ]
    sim = Simulator(BANK, seed=31, state_dir=state)
    sim.run(profiles)
    store = sim.store
    inbound_messages = sum(p.n_questions + 4 for p in profiles)
    assert inbound_messages >= 200, "session must span at least 200 messages"
    # leave something in every table, including a live session and outbox
    engine = Engine(store, SessionConfig(rng_seed=1))
    engine.handle_message(InboundSms("07700900094", "START", 9999.0))
    store.save()

    loaded = load_store(state, BANK)
    assert loaded.players == store.players
    assert loaded.player_level == store.player_level
    assert loaded.game_history == store.game_history
    assert loaded.active == store.active
    assert list(loaded.outbox) == list(store.outbox)
    assert loaded.topics == store.topics
    assert loaded.questions == store.questions
    assert loaded.top_level_stats == store.top_level_stats
    report(
        f"persistence round-trip across all tables after a "
        f"{inbound_messages}-message session"
    )
