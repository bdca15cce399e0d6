"""Data model and persistence: topics, questions, players, play history,
per-level statistics, active sessions, and the outbound message buffer.

Questions, topics and per-level question counts are memory-resident and come
from a read-only bank file; the mutable tables live in a state directory as
line-delimited record files with a versioned header line.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

MAX_SMS_LEN = 480  # three concatenated 160-char segments
MAX_PLAYERS_PER_PHONE = 10
FORMAT_VERSION = "v1"

_BANK_FIELDS = 6


class ParseError(Exception):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class NotFound(KeyError):
    pass


class SessionState(str, Enum):
    AWAIT_LOGIN = "AwaitLogin"
    AWAIT_TOPIC = "AwaitTopic"
    IN_GAME = "InGame"
    ENDED = "Ended"


@dataclass(frozen=True)
class Topic:
    topic_id: int
    name: str

    def __post_init__(self):
        if self.topic_id <= 0:
            raise ValueError("topic_id must be positive")
        if not self.name:
            raise ValueError("topic name must be non-empty")


@dataclass(frozen=True)
class Question:
    question_id: int
    topic_id: int
    level: int
    text: str
    choices: tuple[str, ...]
    correct_index: int  # 1-based
    help: str

    def __post_init__(self):
        if not 0 <= self.level <= 5:
            raise ValueError(f"level {self.level} outside 0..5")
        if not 2 <= len(self.choices) <= 9:
            raise ValueError(f"{len(self.choices)} choices outside 2..9")
        if not 1 <= self.correct_index <= len(self.choices):
            raise ValueError(
                f"correct_index {self.correct_index} outside 1..{len(self.choices)}"
            )


@dataclass
class Player:
    phone_no: str
    player_id: str
    reg_date: str
    last_game_played: str | None = None
    age_years: float = 12.0
    education_years: float = 6.0


@dataclass
class PlayerLevelStat:
    phone_no: str
    player_id: str
    topic_id: int
    level: int
    total_asked: int = 0
    total_correct: int = 0

    def __post_init__(self):
        if not 0 <= self.total_correct <= self.total_asked:
            raise ValueError("total_correct outside 0..total_asked")


@dataclass(frozen=True)
class GameHistoryRow:
    phone_no: str
    player_id: str
    topic_id: int
    level: int
    question_id: int
    asked_at: float
    answer_seconds: float
    correct: bool

    def __post_init__(self):
        if self.answer_seconds < 0:
            raise ValueError("answer_seconds must be non-negative")


@dataclass
class PendingQuestion:
    question_id: int
    correct_index: int
    help: str
    asked_at: float


@dataclass
class ActivePlayerRow:
    phone_no: str
    player_id: str | None = None
    state: SessionState = SessionState.AWAIT_LOGIN
    topic_id: int | None = None
    level: int = 0
    pending: PendingQuestion | None = None
    block_asked: int = 0
    block_correct: int = 0
    last_activity: float = 0.0
    last_question_id: int | None = None


@dataclass(frozen=True)
class BufferedMessage:
    phone_no: str
    text: str

    def __post_init__(self):
        if len(self.text) > MAX_SMS_LEN:
            raise ValueError(f"message exceeds {MAX_SMS_LEN} characters")


def date_of(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).date().isoformat()


# --- record codec -----------------------------------------------------------
# One record per line; fields joined with '|'. Backslash escapes the
# separator, itself, and newlines so any text round-trips.

def encode_field(value: str) -> str:
    return (
        value.replace("\\", "\\\\")
        .replace("|", "\\|")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def encode_record(values: list[str]) -> str:
    return "|".join(encode_field(v) for v in values)


def split_escaped(text: str, sep: str) -> list[str]:
    """Split on unescaped separators, leaving escape sequences intact."""
    parts = [""]
    escaped = False
    for ch in text:
        if escaped:
            parts[-1] += ch
            escaped = False
        elif ch == "\\":
            parts[-1] += ch
            escaped = True
        elif ch == sep:
            parts.append("")
        else:
            parts[-1] += ch
    return parts


def unescape_field(text: str) -> str:
    out = []
    escaped = False
    for ch in text:
        if escaped:
            out.append({"n": "\n", "r": "\r"}.get(ch, ch))
            escaped = False
        elif ch == "\\":
            escaped = True
        else:
            out.append(ch)
    if escaped:
        out.append("\\")
    return "".join(out)


def decode_record(line: str) -> list[str]:
    return [unescape_field(p) for p in split_escaped(line, "|")]


# --- question bank ----------------------------------------------------------

def parse_bank(path: str | Path) -> tuple[dict[int, Topic], dict[int, Question]]:
    """Parse the bank file: one question per line, '#' comments ignored.

    Fields: topic_name | level | text | choice;choice;... | correct_index | help
    Topics are numbered by first appearance, questions by file order.
    """
    topics: dict[int, Topic] = {}
    topic_ids: dict[str, int] = {}
    questions: dict[int, Question] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            raw_parts = split_escaped(line, "|")
            if len(raw_parts) != _BANK_FIELDS:
                raise ParseError(
                    line_no, f"expected {_BANK_FIELDS} fields, got {len(raw_parts)}"
                )
            parts = [unescape_field(p).strip() for p in raw_parts]
            topic_name, level_s, text, _, correct_s, help_text = parts
            if not topic_name:
                raise ParseError(line_no, "empty topic name")
            try:
                level = int(level_s)
                correct = int(correct_s)
            except ValueError as exc:
                raise ParseError(line_no, f"bad integer field: {exc}") from None
            choices = tuple(
                unescape_field(c).strip() for c in split_escaped(raw_parts[3], ";")
            )
            if topic_name not in topic_ids:
                tid = len(topic_ids) + 1
                topic_ids[topic_name] = tid
                topics[tid] = Topic(tid, topic_name)
            try:
                q = Question(
                    question_id=len(questions) + 1,
                    topic_id=topic_ids[topic_name],
                    level=level,
                    text=text,
                    choices=choices,
                    correct_index=correct,
                    help=help_text,
                )
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
            questions[q.question_id] = q
    return topics, questions


# --- store ------------------------------------------------------------------

PLAYERS_FILE = "players.tbl"
PLAYER_LEVEL_FILE = "player_level.tbl"
GAME_HISTORY_FILE = "game_history.tbl"
ACTIVE_FILE = "active.tbl"
OUTBOX_FILE = "outbox.tbl"


@dataclass
class Store:
    """All eight tables, with optional file backing for the mutable five."""

    state_dir: Path | None = None
    topics: dict[int, Topic] = field(default_factory=dict)
    questions: dict[int, Question] = field(default_factory=dict)
    top_level_stats: dict[tuple[int, int], int] = field(default_factory=dict)
    players: dict[tuple[str, str], Player] = field(default_factory=dict)
    player_level: dict[tuple[str, str, int, int], PlayerLevelStat] = field(
        default_factory=dict
    )
    game_history: list[GameHistoryRow] = field(default_factory=list)
    active: dict[str, ActivePlayerRow] = field(default_factory=dict)
    outbox: deque[BufferedMessage] = field(default_factory=deque)
    questions_by_level: dict[tuple[int, int], list[int]] = field(default_factory=dict)

    # - bank / derived tables -

    def load_bank(self, path: str | Path) -> None:
        self.topics, self.questions = parse_bank(path)
        self.recount_levels()

    def recount_levels(self) -> None:
        self.top_level_stats = {}
        self.questions_by_level = {}
        for q in self.questions.values():
            key = (q.topic_id, q.level)
            self.top_level_stats[key] = self.top_level_stats.get(key, 0) + 1
            self.questions_by_level.setdefault(key, []).append(q.question_id)

    def question_count(self, topic_id: int, level: int) -> int:
        return self.top_level_stats.get((topic_id, level), 0)

    def levels_with_questions(self, topic_id: int) -> list[int]:
        return sorted(
            level for (tid, level), n in self.top_level_stats.items()
            if tid == topic_id and n > 0
        )

    # - players -

    def upsert_player(self, player: Player) -> None:
        key = (player.phone_no, player.player_id)
        if key not in self.players:
            count = len(self.players_for_phone(player.phone_no))
            if count >= MAX_PLAYERS_PER_PHONE:
                raise ValueError(
                    f"phone {player.phone_no} already has {count} players"
                )
        self.players[key] = player

    def get_player(self, phone_no: str, player_id: str) -> Player:
        try:
            return self.players[(phone_no, player_id)]
        except KeyError:
            raise NotFound(f"player {player_id} on {phone_no}") from None

    def delete_player(self, phone_no: str, player_id: str) -> None:
        if self.players.pop((phone_no, player_id), None) is None:
            raise NotFound(f"player {player_id} on {phone_no}")

    def players_for_phone(self, phone_no: str) -> list[Player]:
        return [p for (ph, _), p in self.players.items() if ph == phone_no]

    # - per-level stats -

    def get_stat(
        self, phone_no: str, player_id: str, topic_id: int, level: int
    ) -> PlayerLevelStat:
        try:
            return self.player_level[(phone_no, player_id, topic_id, level)]
        except KeyError:
            raise NotFound(f"no stats for {player_id}/{topic_id}/{level}") from None

    def add_to_stat(
        self,
        phone_no: str,
        player_id: str,
        topic_id: int,
        level: int,
        asked: int,
        correct: int,
    ) -> PlayerLevelStat:
        key = (phone_no, player_id, topic_id, level)
        stat = self.player_level.get(key)
        if stat is None:
            stat = PlayerLevelStat(phone_no, player_id, topic_id, level)
            self.player_level[key] = stat
        stat.total_asked += asked
        stat.total_correct += correct
        return stat

    def standing_pct(self, phone_no: str, player_id: str, topic_id: int) -> float:
        """Pooled percent correct across all levels; 50.0 with no history."""
        asked = correct = 0
        for (ph, pid, tid, _), stat in self.player_level.items():
            if (ph, pid, tid) == (phone_no, player_id, topic_id):
                asked += stat.total_asked
                correct += stat.total_correct
        if asked == 0:
            return 50.0
        return 100.0 * correct / asked

    # - history -

    def append_history(self, row: GameHistoryRow) -> None:
        self.game_history.append(row)
        if self.state_dir is not None:
            with open(self.state_dir / GAME_HISTORY_FILE, "a", encoding="utf-8") as f:
                if f.tell() == 0:
                    f.write(f"#game_history {FORMAT_VERSION}\n")
                f.write(encode_record(_history_fields(row)) + "\n")

    def history_for(
        self, phone_no: str, player_id: str, topic_id: int
    ) -> list[GameHistoryRow]:
        return [
            r
            for r in self.game_history
            if (r.phone_no, r.player_id, r.topic_id) == (phone_no, player_id, topic_id)
        ]

    def learning_curve(
        self, phone_no: str, player_id: str, topic_id: int, window: int
    ) -> list[tuple[int, float]]:
        """Percent correct per consecutive window of answers, oldest first;
        a trailing partial window is included."""
        if window < 1:
            raise ValueError("window must be at least 1")
        rows = self.history_for(phone_no, player_id, topic_id)
        series = []
        for start in range(0, len(rows), window):
            chunk = rows[start : start + window]
            pct = 100.0 * sum(1 for r in chunk if r.correct) / len(chunk)
            series.append((start // window, pct))
        return series

    # - active sessions -

    def get_active(self, phone_no: str) -> ActivePlayerRow | None:
        return self.active.get(phone_no)

    def set_active(self, row: ActivePlayerRow) -> None:
        self.active[row.phone_no] = row

    def delete_active(self, phone_no: str) -> None:
        if self.active.pop(phone_no, None) is None:
            raise NotFound(f"no active session for {phone_no}")

    # - message buffer -

    def push_message(self, phone_no: str, text: str) -> BufferedMessage:
        msg = BufferedMessage(phone_no, text)
        self.outbox.append(msg)
        return msg

    def pop_message(self) -> BufferedMessage | None:
        return self.outbox.popleft() if self.outbox else None

    # - persistence -

    def save(self) -> None:
        """Checkpoint every mutable table; history is already on disk."""
        if self.state_dir is None:
            raise ValueError("store has no state directory")
        _write_table(
            self.state_dir / PLAYERS_FILE,
            "players",
            [_player_fields(p) for p in self.players.values()],
        )
        _write_table(
            self.state_dir / PLAYER_LEVEL_FILE,
            "player_level",
            [_stat_fields(s) for s in self.player_level.values()],
        )
        _write_table(
            self.state_dir / ACTIVE_FILE,
            "active",
            [_active_fields(r) for r in self.active.values()],
        )
        _write_table(
            self.state_dir / OUTBOX_FILE,
            "outbox",
            [[m.phone_no, m.text] for m in self.outbox],
        )
        history = self.state_dir / GAME_HISTORY_FILE
        if not history.exists():
            _write_table(history, "game_history", [])


def load_store(state_dir: str | Path | None, question_bank: str | Path) -> Store:
    """Bring the bank into memory, recount per-level totals, and read any
    persisted tables from the state directory (created if missing)."""
    store = Store(state_dir=Path(state_dir) if state_dir is not None else None)
    store.load_bank(question_bank)
    if store.state_dir is None:
        return store
    os.makedirs(store.state_dir, exist_ok=True)

    for values in _read_table(store.state_dir / PLAYERS_FILE, "players"):
        player = _player_from(values)
        store.players[(player.phone_no, player.player_id)] = player
    for values in _read_table(store.state_dir / PLAYER_LEVEL_FILE, "player_level"):
        stat = _stat_from(values)
        store.player_level[
            (stat.phone_no, stat.player_id, stat.topic_id, stat.level)
        ] = stat
    for values in _read_table(store.state_dir / GAME_HISTORY_FILE, "game_history"):
        store.game_history.append(_history_from(values))
    for values in _read_table(store.state_dir / ACTIVE_FILE, "active"):
        row = _active_from(values)
        store.active[row.phone_no] = row
    for values in _read_table(store.state_dir / OUTBOX_FILE, "outbox"):
        store.outbox.append(BufferedMessage(values[0], values[1]))
    return store


def _write_table(path: Path, name: str, rows: list[list[str]]) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(f"#{name} {FORMAT_VERSION}\n")
        for row in rows:
            f.write(encode_record(row) + "\n")
    os.replace(tmp, path)


def _read_table(path: Path, name: str):
    if not path.exists():
        return
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != f"#{name} {FORMAT_VERSION}":
            raise ParseError(1, f"bad header in {path.name}: {header!r}")
        for line_no, raw in enumerate(f, 2):
            line = raw.rstrip("\n")
            if not line:
                continue
            try:
                yield decode_record(line)
            except Exception as exc:
                raise ParseError(line_no, f"{path.name}: {exc}") from None


def _opt(value: str) -> str | None:
    return value if value else None


def _player_fields(p: Player) -> list[str]:
    return [
        p.phone_no,
        p.player_id,
        p.reg_date,
        p.last_game_played or "",
        repr(p.age_years),
        repr(p.education_years),
    ]


def _player_from(v: list[str]) -> Player:
    return Player(v[0], v[1], v[2], _opt(v[3]), float(v[4]), float(v[5]))


def _stat_fields(s: PlayerLevelStat) -> list[str]:
    return [
        s.phone_no,
        s.player_id,
        str(s.topic_id),
        str(s.level),
        str(s.total_asked),
        str(s.total_correct),
    ]


def _stat_from(v: list[str]) -> PlayerLevelStat:
    return PlayerLevelStat(v[0], v[1], int(v[2]), int(v[3]), int(v[4]), int(v[5]))


def _history_fields(r: GameHistoryRow) -> list[str]:
    return [
        r.phone_no,
        r.player_id,
        str(r.topic_id),
        str(r.level),
        str(r.question_id),
        repr(r.asked_at),
        repr(r.answer_seconds),
        "1" if r.correct else "0",
    ]


def _history_from(v: list[str]) -> GameHistoryRow:
    return GameHistoryRow(
        v[0], v[1], int(v[2]), int(v[3]), int(v[4]), float(v[5]), float(v[6]), v[7] == "1"
    )


def _active_fields(r: ActivePlayerRow) -> list[str]:
    pending = r.pending
    return [
        r.phone_no,
        r.player_id or "",
        r.state.value,
        "" if r.topic_id is None else str(r.topic_id),
        str(r.level),
        "" if pending is None else str(pending.question_id),
        "" if pending is None else str(pending.correct_index),
        "" if pending is None else pending.help,
        "" if pending is None else repr(pending.asked_at),
        str(r.block_asked),
        str(r.block_correct),
        repr(r.last_activity),
        "" if r.last_question_id is None else str(r.last_question_id),
    ]


def _active_from(v: list[str]) -> ActivePlayerRow:
    state = SessionState(v[2])
    pending = None
    if state is SessionState.IN_GAME:
        pending = PendingQuestion(int(v[5]), int(v[6]), v[7], float(v[8]))
    return ActivePlayerRow(
        phone_no=v[0],
        player_id=_opt(v[1]),
        state=state,
        topic_id=None if not v[3] else int(v[3]),
        level=int(v[4]),
        pending=pending,
        block_asked=int(v[9]),
        block_correct=int(v[10]),
        last_activity=float(v[11]),
        last_question_id=None if not v[12] else int(v[12]),
    )
