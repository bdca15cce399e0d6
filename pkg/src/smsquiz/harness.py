"""Conformance and simulation drivers: scripted transcript replay against an
in-process engine, and seeded simulated learners for end-to-end statistics.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from .fuzzy import FuzzySystem
from .gateway import Gateway, SimClock
from .session import Engine, InboundSms, SessionConfig
from .tables import ParseError, Store, load_store


class Mismatch(Exception):
    def __init__(self, step: "TranscriptStep", message: str):
        super().__init__(f"step at line {step.line_no}: {message}")
        self.step = step


@dataclass(frozen=True)
class TranscriptStep:
    line_no: int
    direction: str  # "send" | "expect" | "advance"
    phone: str = ""
    text: str = ""
    seconds: float = 0.0


def parse_transcript(path: str | Path) -> list[TranscriptStep]:
    """Line format: '> phone|text' sends, '< phone|regex' expects the next
    delivered message for that phone, '@ seconds' advances the simulated
    clock and runs a timeout sweep. '#' starts a comment."""
    steps = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tag, _, rest = line.partition(" ")
            rest = rest.strip()
            if tag == "@":
                try:
                    steps.append(
                        TranscriptStep(line_no, "advance", seconds=float(rest))
                    )
                except ValueError:
                    raise ParseError(line_no, f"bad advance amount {rest!r}") from None
                continue
            if tag not in (">", "<"):
                raise ParseError(line_no, f"unknown directive {tag!r}")
            phone, sep, text = rest.partition("|")
            if not sep or not phone.strip():
                raise ParseError(line_no, "expected 'phone|text'")
            direction = "send" if tag == ">" else "expect"
            steps.append(TranscriptStep(line_no, direction, phone.strip(), text))
    return steps


class TranscriptRunner:
    """Replays steps against a fresh in-memory engine with a simulated clock;
    every send advances the clock one second and delivery is immediate."""

    def __init__(self, bank: str | Path, seed: int = 0, system: FuzzySystem | None = None):
        self.store = load_store(None, bank)
        self.clock = SimClock()
        self.engine = Engine(self.store, SessionConfig(rng_seed=seed), system)
        self.gateway = Gateway(self.store, drain_rate=1.0, clock=self.clock)
        self._cursors: dict[str, int] = {}

    def run(self, steps: list[TranscriptStep]) -> None:
        for step in steps:
            if step.direction == "send":
                self.clock.advance(1.0)
                self.gateway.submit_inbound({"from": step.phone, "text": step.text})
                self._pump()
            elif step.direction == "advance":
                self.clock.advance(step.seconds)
                self.engine.timeout_sweep(self.clock())
                self.gateway.drain_all()
            else:
                self._expect(step)
        leftovers = {
            phone: [m.text for m in box[self._cursors.get(phone, 0):]]
            for phone, box in self.gateway.delivered.items()
            if len(box) > self._cursors.get(phone, 0)
        }
        if leftovers:
            raise Mismatch(steps[-1], f"unconsumed replies: {leftovers}")

    def _pump(self) -> None:
        while (msg := self.gateway.take_inbound()) is not None:
            self.engine.handle_message(
                InboundSms(msg.from_phone, msg.text, msg.ts / 1000.0)
            )
        self.gateway.drain_all()

    def _expect(self, step: TranscriptStep) -> None:
        cursor = self._cursors.get(step.phone, 0)
        box = self.gateway.delivered.get(step.phone, [])
        if cursor >= len(box):
            raise Mismatch(step, f"no reply to {step.phone}; expected {step.text!r}")
        actual = box[cursor].text
        self._cursors[step.phone] = cursor + 1
        if not re.fullmatch(step.text, actual):
            raise Mismatch(step, f"expected {step.text!r}, got {actual!r}")


def replay(transcript: str | Path, bank: str | Path, seed: int = 0) -> None:
    """Run a transcript to completion; raises Mismatch on the first failure."""
    TranscriptRunner(bank, seed=seed).run(parse_transcript(transcript))


# --- simulated learners -----------------------------------------------------

@dataclass(frozen=True)
class SimLearnerProfile:
    phone: str
    name: str
    age_years: float
    education_years: float
    p_correct: tuple[float, ...]  # success probability per level 0..5
    n_questions: int
    topic_id: int = 1

    def __post_init__(self):
        if len(self.p_correct) != 6:
            raise ValueError("p_correct needs one probability per level 0..5")
        if any(not 0.0 <= p <= 1.0 for p in self.p_correct):
            raise ValueError("p_correct values must lie in [0, 1]")
        if self.n_questions < 1:
            raise ValueError("n_questions must be positive")


def load_profiles(path: str | Path) -> list[SimLearnerProfile]:
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, list):
        raise ValueError("profile file must hold a JSON array")
    return [
        SimLearnerProfile(
            phone=entry["phone"],
            name=entry["name"],
            age_years=float(entry["age_years"]),
            education_years=float(entry["education_years"]),
            p_correct=tuple(float(p) for p in entry["p_correct"]),
            n_questions=int(entry["n_questions"]),
            topic_id=int(entry.get("topic_id", 1)),
        )
        for entry in raw
    ]


@dataclass
class SimSummary:
    name: str
    phone: str
    asked: int
    correct: int
    levels: list[int]  # level entering play, then after each full block
    blocks: list[tuple[int, int]]  # (asked, correct) per flushed block

    @property
    def final_level(self) -> int:
        return self.levels[-1]

    def format(self) -> str:
        blocks = ",".join(f"{c}/{a}" for a, c in self.blocks) or "-"
        levels = ",".join(str(lvl) for lvl in self.levels)
        return (
            f"{self.name} {self.phone} asked={self.asked} correct={self.correct} "
            f"blocks={blocks} levels={levels} final={self.final_level}"
        )


class Simulator:
    """Drives profile-defined learners through the full wire path with a
    simulated clock that ticks one second per message."""

    def __init__(
        self,
        bank: str | Path,
        seed: int = 0,
        state_dir: str | Path | None = None,
        config: SessionConfig | None = None,
        system: FuzzySystem | None = None,
    ):
        self.seed = seed
        self.store = load_store(state_dir, bank)
        self.clock = SimClock()
        cfg = config or SessionConfig(rng_seed=seed)
        self.engine = Engine(self.store, cfg, system)
        self.gateway = Gateway(self.store, drain_rate=1.0, clock=self.clock)

    def _send(self, phone: str, text: str) -> None:
        self.clock.advance(1.0)
        self.gateway.submit_inbound({"from": phone, "text": text})
        while (msg := self.gateway.take_inbound()) is not None:
            self.engine.handle_message(
                InboundSms(msg.from_phone, msg.text, msg.ts / 1000.0)
            )
        self.gateway.drain_all()

    def run_learner(self, profile: SimLearnerProfile, index: int = 0) -> SimSummary:
        rng = random.Random(f"{self.seed}:{index}:{profile.name}")
        phone = profile.phone
        threshold = self.engine.config.adaptation_threshold

        self._send(phone, "START")
        self._send(
            phone,
            f"NEW {profile.name} {profile.age_years:g} {profile.education_years:g}",
        )
        self._send(phone, str(profile.topic_id))

        row = self.store.get_active(phone)
        assert row is not None and row.pending is not None
        levels = [row.level]
        blocks: list[tuple[int, int]] = []
        asked = correct = 0
        block_correct = 0
        for i in range(profile.n_questions):
            pending = row.pending
            assert pending is not None
            question = self.store.questions[pending.question_id]
            answer_right = rng.random() < profile.p_correct[row.level]
            if answer_right:
                choice = pending.correct_index
            else:
                choice = pending.correct_index % len(question.choices) + 1
            self._send(phone, str(choice))
            asked += 1
            if answer_right:
                correct += 1
                block_correct += 1
            if (i + 1) % threshold == 0:
                blocks.append((threshold, block_correct))
                block_correct = 0
                levels.append(row.level)
        if profile.n_questions % threshold:
            blocks.append((profile.n_questions % threshold, block_correct))
        self._send(phone, "EXIT")
        return SimSummary(profile.name, phone, asked, correct, levels, blocks)

    def run(self, profiles: list[SimLearnerProfile]) -> list[SimSummary]:
        return [self.run_learner(p, i) for i, p in enumerate(profiles)]


def simulate(
    profiles: str | Path | list[SimLearnerProfile],
    bank: str | Path,
    seed: int = 0,
    state_dir: str | Path | None = None,
) -> list[SimSummary]:
    if isinstance(profiles, (str, Path)):
        profiles = load_profiles(profiles)
    sim = Simulator(bank, seed=seed, state_dir=state_dir)
    summaries = sim.run(profiles)
    if sim.store.state_dir is not None:
        sim.store.save()
    return summaries
