"""Event vocabulary and the canonical on-disk trace format.

A trace is a header (initial screen state, initially running apps) followed
by one timestamped event per line. Timestamps have whole-second resolution;
ordering between same-second events is carried by line position.
"""

from __future__ import annotations

import calendar
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

TIMESTAMP_PATTERN = "MM.dd.yyyy HH:mm:ss"

Timestamp = int  # non-negative seconds since the Unix epoch (UTC)


class TraceParseError(ValueError):
    """Malformed trace text, with the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.reason = message


def format_timestamp(ts: Timestamp) -> str:
    """Render epoch seconds as `MM.dd.yyyy HH:mm:ss` (UTC)."""
    if ts < 0:
        raise ValueError(f"timestamp must be non-negative, got {ts}")
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return (
        f"{dt.month:02d}.{dt.day:02d}.{dt.year:04d} "
        f"{dt.hour:02d}:{dt.minute:02d}:{dt.second:02d}"
    )


def parse_timestamp(text: str) -> Timestamp:
    """Parse `MM.dd.yyyy HH:mm:ss` into epoch seconds (UTC)."""
    try:
        dt = datetime.strptime(text, "%m.%d.%Y %H:%M:%S")
    except ValueError as exc:
        raise ValueError(f"bad timestamp {text!r}: expected {TIMESTAMP_PATTERN}") from exc
    ts = calendar.timegm(dt.timetuple())
    if ts < 0:
        raise ValueError(f"timestamp {text!r} precedes the epoch")
    return ts


class EventKind(Enum):
    SCREEN_ON = "ScreenOn"
    SCREEN_OFF = "ScreenOff"
    OUT_SMS = "OutSms"
    IN_SMS = "InSms"
    OUT_CALL_START = "OutCallStart"
    OUT_CALL_END = "OutCallEnd"
    IN_CALL_START = "InCallStart"
    IN_CALL_END = "InCallEnd"
    APP_START = "AppStart"
    APP_STOP = "AppStop"


# Screen transitions are device-global; everything else names one app.
APPLESS_KINDS = frozenset({EventKind.SCREEN_ON, EventKind.SCREEN_OFF})

_KIND_BY_NAME = {k.value: k for k in EventKind}


def _check_app_name(name: str) -> str:
    if not name:
        raise ValueError("app name must be non-empty")
    if "\n" in name or "\r" in name:
        raise ValueError("app name must not contain newlines")
    return name


@dataclass(frozen=True)
class DeviceEvent:
    at: Timestamp
    kind: EventKind
    app: Optional[str] = None

    def __post_init__(self):
        if self.at < 0:
            raise ValueError("event timestamp must be non-negative")
        if self.kind in APPLESS_KINDS:
            if self.app is not None:
                raise ValueError(f"{self.kind.value} carries no app attribution")
        else:
            if self.app is None:
                raise ValueError(f"{self.kind.value} requires an app")
            _check_app_name(self.app)


@dataclass(frozen=True)
class EventTrace:
    events: tuple[DeviceEvent, ...]
    initial_screen: bool = False
    initial_apps: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "initial_apps", frozenset(self.initial_apps))


@dataclass(frozen=True)
class Violation:
    index: int  # offending event index
    rule: str
    message: str

    def __str__(self):
        return f"event {self.index}: [{self.rule}] {self.message}"


_CALL_PAIRS = {
    EventKind.OUT_CALL_START: ("out", +1),
    EventKind.OUT_CALL_END: ("out", -1),
    EventKind.IN_CALL_START: ("in", +1),
    EventKind.IN_CALL_END: ("in", -1),
}


def validate_trace(trace: EventTrace) -> list[Violation]:
    """Check ordering, screen-transition sanity and call nesting.

    Violations are data, not exceptions; an empty list means the trace is
    well-formed.
    """
    violations: list[Violation] = []
    screen = trace.initial_screen
    open_calls: dict[tuple[str, str], int] = {}
    prev_at = None
    for i, ev in enumerate(trace.events):
        if prev_at is not None and ev.at < prev_at:
            violations.append(
                Violation(i, "ordering", f"timestamp {ev.at} precedes predecessor {prev_at}")
            )
        prev_at = ev.at
        if ev.kind is EventKind.SCREEN_ON:
            if screen:
                violations.append(Violation(i, "screen", "ScreenOn while screen already on"))
            screen = True
        elif ev.kind is EventKind.SCREEN_OFF:
            if not screen:
                violations.append(Violation(i, "screen", "ScreenOff while screen already off"))
            screen = False
        elif ev.kind in _CALL_PAIRS:
            direction, delta = _CALL_PAIRS[ev.kind]
            key = (ev.app, direction)
            depth = open_calls.get(key, 0) + delta
            if depth < 0:
                violations.append(
                    Violation(i, "call-nesting", f"{ev.kind.value} for {ev.app!r} with no open call")
                )
                depth = 0
            open_calls[key] = depth
    return violations


def write_trace(trace: EventTrace) -> str:
    """Serialize to the canonical line format (see read_trace)."""
    lines = [f"#screen={'on' if trace.initial_screen else 'off'}"]
    lines.append("#apps=" + ",".join(sorted(trace.initial_apps)))
    for ev in trace.events:
        lines.append(f"{format_timestamp(ev.at)}|{ev.kind.value}|{ev.app or ''}")
    return "\n".join(lines) + "\n"


def read_trace(text: str) -> EventTrace:
    """Parse the canonical trace format.

    Grammar: `#screen=<on|off>` and `#apps=<comma-separated>` headers, then
    one `<MM.dd.yyyy HH:mm:ss>|<EventKind>|<app-or-empty>` event per line.
    Other `#` lines are comments.
    """
    initial_screen = False
    initial_apps: frozenset[str] = frozenset()
    events: list[DeviceEvent] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("#screen="):
                value = line[len("#screen="):]
                if value not in ("on", "off"):
                    raise TraceParseError(line_no, f"expected on|off after #screen=, got {value!r}")
                initial_screen = value == "on"
            elif line.startswith("#apps="):
                value = line[len("#apps="):]
                initial_apps = frozenset(a for a in value.split(",") if a)
            continue
        parts = line.split("|")
        if len(parts) != 3:
            raise TraceParseError(line_no, "expected 3 '|'-separated fields: timestamp|kind|app")
        ts_text, kind_text, app_text = parts
        try:
            ts = parse_timestamp(ts_text)
        except ValueError as exc:
            raise TraceParseError(line_no, str(exc)) from exc
        kind = _KIND_BY_NAME.get(kind_text)
        if kind is None:
            raise TraceParseError(
                line_no, f"unknown event kind {kind_text!r}; expected one of {sorted(_KIND_BY_NAME)}"
            )
        app = app_text or None
        try:
            events.append(DeviceEvent(ts, kind, app))
        except ValueError as exc:
            raise TraceParseError(line_no, str(exc)) from exc
    return EventTrace(tuple(events), initial_screen, initial_apps)


def read_trace_file(path) -> EventTrace:
    with open(path, "r", encoding="utf-8") as fh:
        return read_trace(fh.read())


def write_trace_file(trace: EventTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_trace(trace))
