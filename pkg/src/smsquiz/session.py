"""Per-phone session protocol: registration and login, topic choice, the
multiple-choice ask/answer/help loop, block-based difficulty adaptation, and
idle timeouts. Every reply goes through the store's outbound message buffer.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from . import fuzzy
from .tables import (
    ActivePlayerRow,
    GameHistoryRow,
    PendingQuestion,
    Player,
    Question,
    SessionState,
    Store,
    date_of,
)

KEYWORDS = ("START", "NEW", "EXIT")
NAME_RE = re.compile(r"[A-Z0-9]{1,16}\Z")

START_NOTICE = "SEND START TO BEGIN"
SESSION_ENDED = "SESSION ENDED. SEND START TO PLAY"


class NoQuestions(Exception):
    """The requested topic has no questions at any level."""


def normalize(text: str) -> str:
    """Uppercase, trim, and collapse interior whitespace runs."""
    return " ".join(text.split()).upper()


@dataclass(frozen=True)
class InboundSms:
    phone_no: str
    text: str
    received_at: float

    def __post_init__(self):
        if not self.phone_no:
            raise ValueError("phone_no must be non-empty")


@dataclass(frozen=True)
class Reply:
    phone_no: str
    text: str


@dataclass(frozen=True)
class SessionConfig:
    max_players_per_phone: int = 10
    adaptation_threshold: int = 10
    idle_timeout_seconds: float = 600.0
    sweep_interval_seconds: float = 60.0
    rng_seed: int | None = None

    def __post_init__(self):
        for name in (
            "max_players_per_phone",
            "adaptation_threshold",
            "idle_timeout_seconds",
            "sweep_interval_seconds",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def player_list_text(names: list[str], can_register: bool) -> str:
    text = f"PLAYERS: {', '.join(names) if names else 'NONE'}. SEND NAME TO LOGIN"
    if can_register:
        text += " OR NEW <NAME> TO REGISTER"
    return text


def topic_list_text(store: Store) -> str:
    items = " ".join(f"{t.topic_id}:{t.name}" for t in store.topics.values())
    return f"TOPICS: {items} SEND NUMBER"


def question_text(q: Question) -> str:
    choices = " ".join(f"{i}:{c}" for i, c in enumerate(q.choices, 1))
    return f"Q{q.question_id} L{q.level + 1}: {q.text} {choices} SEND NUMBER, # FOR HELP"


def capacity_text(limit: int) -> str:
    return f"PHONE FULL ({limit} PLAYERS)"


def help_text(pending: PendingQuestion) -> str:
    return f"HELP: {pending.help}"


def grading_prefix(correct: bool, correct_index: int) -> str:
    return "CORRECT! " if correct else f"WRONG. ANS {correct_index}. "


class Engine:
    """Serial protocol engine: one inbound event is handled to completion
    before the next; all persistence goes through the store."""

    def __init__(
        self,
        store: Store,
        config: SessionConfig | None = None,
        system: fuzzy.FuzzySystem | None = None,
    ):
        self.store = store
        self.config = config or SessionConfig()
        self.system = system or fuzzy.default_system()
        self.rng = random.Random(self.config.rng_seed)

    # - public operations -

    def handle_message(self, sms: InboundSms) -> list[Reply]:
        text = normalize(sms.text)
        phone = sms.phone_no
        now = sms.received_at
        row = self.store.get_active(phone)

        if row is None:
            if text == "START":
                return self._start(phone, now)
            return [self._reply(phone, START_NOTICE)]

        row.last_activity = now
        if text == "START":
            return self._start(phone, now)
        if text == "EXIT":
            self._finish(row, now)
            return [self._reply(phone, SESSION_ENDED)]
        if text == "NEW" or text.startswith("NEW "):
            return self._register(row, text, now)

        if row.state is SessionState.AWAIT_LOGIN:
            return self._login(row, text, now)
        if row.state is SessionState.AWAIT_TOPIC:
            return self._choose_topic(row, text, now)
        return self._answer(row, text, now)

    def adapt(self, phone_no: str, player_id: str, topic_id: int) -> int:
        """Recompute the difficulty level from the player's full history,
        clamped to levels that actually hold questions (ties go down)."""
        player = self.store.get_player(phone_no, player_id)
        standing = self.store.standing_pct(phone_no, player_id, topic_id)
        target = fuzzy.infer_level(
            self.system,
            fuzzy.CrispInput(player.education_years, player.age_years, standing),
        ).level
        levels = self.store.levels_with_questions(topic_id)
        if not levels:
            raise NoQuestions(f"topic {topic_id} has no questions")
        return min(levels, key=lambda lvl: (abs(lvl - target), lvl))

    def pick_question(
        self, topic_id: int, level: int, exclude: int | None = None
    ) -> Question:
        """Uniform choice at the level, avoiding an immediate repeat when the
        level has at least two questions."""
        ids = self.store.questions_by_level.get((topic_id, level), [])
        if not ids:
            raise NoQuestions(f"no questions for topic {topic_id} level {level}")
        pool = [i for i in ids if i != exclude] if len(ids) >= 2 else ids
        return self.store.questions[self.rng.choice(pool)]

    def timeout_sweep(self, now: float) -> int:
        """Flush and drop sessions idle for longer than the configured
        timeout; returns the number evicted."""
        idle = [
            row
            for row in self.store.active.values()
            if now - row.last_activity > self.config.idle_timeout_seconds
        ]
        for row in idle:
            self._finish(row, now)
            self._reply(row.phone_no, SESSION_ENDED)
        return len(idle)

    # - transitions -

    def _reply(self, phone_no: str, text: str) -> Reply:
        self.store.push_message(phone_no, text)
        return Reply(phone_no, text)

    def _player_list_reply(self, phone: str) -> Reply:
        names = [p.player_id for p in self.store.players_for_phone(phone)]
        can_register = len(names) < self.config.max_players_per_phone
        return self._reply(phone, player_list_text(names, can_register))

    def _start(self, phone: str, now: float) -> list[Reply]:
        row = self.store.get_active(phone)
        if row is not None:
            self._finish(row, now)
        self.store.set_active(ActivePlayerRow(phone_no=phone, last_activity=now))
        return [self._player_list_reply(phone)]

    def _register(self, row: ActivePlayerRow, text: str, now: float) -> list[Reply]:
        phone = row.phone_no
        if row.state is not SessionState.AWAIT_LOGIN:
            # keyword backs up the current player before anything else
            self._finish(row, now)
            row = ActivePlayerRow(phone_no=phone, last_activity=now)
            self.store.set_active(row)

        parsed = self._parse_new(text)
        if parsed is None:
            return [self._player_list_reply(phone)]
        name, age, edu = parsed
        players = self.store.players_for_phone(phone)
        if len(players) >= self.config.max_players_per_phone:
            return [self._reply(phone, capacity_text(self.config.max_players_per_phone))]
        if any(p.player_id == name for p in players):
            return [self._player_list_reply(phone)]
        player = Player(phone_no=phone, player_id=name, reg_date=date_of(now))
        if age is not None:
            player.age_years = age
        if edu is not None:
            player.education_years = edu
        self.store.upsert_player(player)
        return self._log_in(row, name)

    def _parse_new(self, text: str) -> tuple[str, float | None, float | None] | None:
        tokens = text.split(" ")
        if len(tokens) not in (2, 4):
            return None
        name = tokens[1]
        if not NAME_RE.match(name) or name in KEYWORDS:
            return None
        if len(tokens) == 2:
            return name, None, None
        try:
            return name, float(tokens[2]), float(tokens[3])
        except ValueError:
            return None

    def _login(self, row: ActivePlayerRow, text: str, now: float) -> list[Reply]:
        phone = row.phone_no
        if any(p.player_id == text for p in self.store.players_for_phone(phone)):
            return self._log_in(row, text)
        return [self._player_list_reply(phone)]

    def _log_in(self, row: ActivePlayerRow, name: str) -> list[Reply]:
        row.player_id = name
        row.state = SessionState.AWAIT_TOPIC
        return [self._reply(row.phone_no, topic_list_text(self.store))]

    def _choose_topic(self, row: ActivePlayerRow, text: str, now: float) -> list[Reply]:
        topic_id = int(text) if text.isdigit() else None
        if (
            topic_id is None
            or topic_id not in self.store.topics
            or not self.store.levels_with_questions(topic_id)
        ):
            return [self._reply(row.phone_no, topic_list_text(self.store))]
        row.topic_id = topic_id
        assert row.player_id is not None
        has_history = any(
            (ph, pid, tid) == (row.phone_no, row.player_id, topic_id)
            and stat.total_asked > 0
            for (ph, pid, tid, _), stat in self.store.player_level.items()
        )
        if has_history:
            row.level = self.adapt(row.phone_no, row.player_id, topic_id)
        else:
            # first game on this topic: begin at the lowest populated level
            row.level = self.store.levels_with_questions(topic_id)[0]
        row.state = SessionState.IN_GAME
        row.block_asked = 0
        row.block_correct = 0
        return [self._ask(row, now)]

    def _ask(self, row: ActivePlayerRow, now: float, prefix: str = "") -> Reply:
        assert row.topic_id is not None
        q = self.pick_question(row.topic_id, row.level, exclude=row.last_question_id)
        row.pending = PendingQuestion(q.question_id, q.correct_index, q.help, now)
        row.last_question_id = q.question_id
        return self._reply(row.phone_no, prefix + question_text(q))

    def _answer(self, row: ActivePlayerRow, text: str, now: float) -> list[Reply]:
        pending = row.pending
        assert pending is not None and row.topic_id is not None and row.player_id is not None
        if text == "#":
            return [self._reply(row.phone_no, help_text(pending))]
        if not text.isdigit():
            # re-prompt with the pending question, unchanged
            q = self.store.questions[pending.question_id]
            return [self._reply(row.phone_no, question_text(q))]

        correct = int(text) == pending.correct_index
        row.block_asked += 1
        if correct:
            row.block_correct += 1
        self.store.append_history(
            GameHistoryRow(
                phone_no=row.phone_no,
                player_id=row.player_id,
                topic_id=row.topic_id,
                level=row.level,
                question_id=pending.question_id,
                asked_at=pending.asked_at,
                answer_seconds=now - pending.asked_at,
                correct=correct,
            )
        )
        prefix = grading_prefix(correct, pending.correct_index)
        if row.block_asked >= self.config.adaptation_threshold:
            self._flush_block(row)
            row.level = self.adapt(row.phone_no, row.player_id, row.topic_id)
        return [self._ask(row, now, prefix=prefix)]

    def _flush_block(self, row: ActivePlayerRow) -> None:
        if row.block_asked == 0:
            return
        assert row.player_id is not None and row.topic_id is not None
        self.store.add_to_stat(
            row.phone_no,
            row.player_id,
            row.topic_id,
            row.level,
            row.block_asked,
            row.block_correct,
        )
        row.block_asked = 0
        row.block_correct = 0

    def _finish(self, row: ActivePlayerRow, now: float) -> None:
        """Archive the in-progress block and drop the active row."""
        if row.player_id is not None:
            if row.topic_id is not None:
                self._flush_block(row)
            player = self.store.players.get((row.phone_no, row.player_id))
            if player is not None:
                player.last_game_played = date_of(now)
        row.state = SessionState.ENDED
        self.store.delete_active(row.phone_no)
