"""Deterministic trace generation: benign usage plus injected misbehavior.

All randomness flows through a self-contained xorshift64* generator and
geometric gap draws, using integer arithmetic only, so a (scenario, seed)
pair produces the same bytes on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .events import DeviceEvent, EventKind, EventTrace


class ScenarioError(ValueError):
    """Invalid scenario configuration; message names the field."""


_MASK64 = (1 << 64) - 1
_XORSHIFT_MULT = 2685821657736338717  # Vigna's xorshift64* constant
_SEED_MIX = 0x9E3779B97F4A7C15  # golden-ratio increment, keeps state nonzero


class Xorshift64Star:
    """xorshift64* PRNG: shifts 12/25/27, multiplier 2685821657736338717."""

    def __init__(self, seed: int):
        self._state = (seed ^ _SEED_MIX) & _MASK64 or _SEED_MIX

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _XORSHIFT_MULT) & _MASK64

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def geometric(self, mean: int) -> int:
        """Integer gap with mean `mean` (support >= 1): trials to first success
        of a Bernoulli(1/mean)."""
        if mean <= 0:
            raise ValueError("mean must be positive")
        if mean == 1:
            return 1
        count = 1
        while self.randbelow(mean) != 0:
            count += 1
        return count


@dataclass(frozen=True)
class Injection:
    app: str
    behavior: str  # sms_while_idle | call_while_idle | sms_during_call
    period: int = 60
    start_offset: int = 0

    BEHAVIORS = ("sms_while_idle", "call_while_idle", "sms_during_call")

    def __post_init__(self):
        if self.behavior not in self.BEHAVIORS:
            raise ScenarioError(f"injection behavior must be one of {self.BEHAVIORS}, got {self.behavior!r}")
        if self.period <= 0:
            raise ScenarioError("injection period must be positive")
        if self.start_offset < 0:
            raise ScenarioError("injection start_offset must be non-negative")


@dataclass(frozen=True)
class Scenario:
    duration: int
    seed: int = 0
    apps: tuple[str, ...] = ()
    # mean inter-event gaps (seconds) for benign activity during sessions
    out_sms_gap: int = 600
    in_sms_gap: int = 900
    out_call_gap: int = 1800
    in_call_gap: int = 2400
    call_duration_mean: int = 60
    # alternating screen session means (seconds)
    screen_on_mean: int = 120
    screen_off_mean: int = 600
    initial_screen: bool = True
    start_time: int = 0
    injections: tuple[Injection, ...] = ()
    # optional deterministic screen timeline: (state, duration) pairs that
    # replace the stochastic session model, repeating the last state to the end
    screen_script: tuple[tuple[bool, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "apps", tuple(self.apps))
        object.__setattr__(self, "injections", tuple(self.injections))
        object.__setattr__(self, "screen_script", tuple(self.screen_script))
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")
        for name in ("out_sms_gap", "in_sms_gap", "out_call_gap", "in_call_gap",
                     "call_duration_mean", "screen_on_mean", "screen_off_mean"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")
        if not (0 <= self.seed <= _MASK64):
            raise ScenarioError("seed must fit in 64 bits")
        for state, dur in self.screen_script:
            if dur <= 0:
                raise ScenarioError("screen_script durations must be positive")


def _screen_spans(scenario: Scenario, rng: Xorshift64Star) -> list[tuple[int, int, bool]]:
    """Absolute (start, end, state) spans covering the whole duration."""
    spans: list[tuple[int, int, bool]] = []
    t = scenario.start_time
    end = scenario.start_time + scenario.duration
    if scenario.screen_script:
        state = scenario.screen_script[0][0]
        for st, dur in scenario.screen_script:
            if t >= end:
                break
            state = st
            spans.append((t, min(t + dur, end), state))
            t = min(t + dur, end)
        if t < end:
            spans.append((t, end, state))
        return spans
    state = scenario.initial_screen
    while t < end:
        mean = scenario.screen_on_mean if state else scenario.screen_off_mean
        dur = rng.geometric(mean)
        spans.append((t, min(t + dur, end), state))
        t = min(t + dur, end)
        state = not state
    return spans


def _gap_times(rng: Xorshift64Star, mean: int, start: int, end: int) -> list[int]:
    """Event times in [start, end) with geometric gaps of the given mean."""
    times = []
    t = start + rng.geometric(mean)
    while t < end:
        times.append(t)
        t += rng.geometric(mean)
    return times


def generate(scenario: Scenario) -> EventTrace:
    """Generate a validated trace; a pure function of the scenario.

    Benign outgoing activity is emitted only during screen-on spans;
    incoming SMS/calls may arrive at any time. Idle-typed injections emit
    only during screen-off spans, one event per period.
    """
    rng = Xorshift64Star(scenario.seed)
    spans = _screen_spans(scenario, rng)
    start = scenario.start_time
    end = scenario.start_time + scenario.duration

    def screen_at(t: int) -> bool:
        for s, e, state in spans:
            if s <= t < e:
                return state
        return spans[-1][2] if spans else scenario.initial_screen

    # (time, order-rank, payload); rank keeps call starts ahead of their ends
    staged: list[tuple[int, int, int, DeviceEvent]] = []
    seq = 0

    def stage(at: int, kind: EventKind, app: Optional[str], rank: int = 0):
        nonlocal seq
        staged.append((at, rank, seq, DeviceEvent(at, kind, app)))
        seq += 1

    # screen transitions between spans
    initial_screen = spans[0][2] if spans else scenario.initial_screen
    for (_, _, prev_state), (s, _, state) in zip(spans, spans[1:]):
        if state != prev_state:
            stage(s, EventKind.SCREEN_ON if state else EventKind.SCREEN_OFF, None, rank=-1)

    # Benign activity, one independent stream per app. A well-behaved user
    # never texts during a call (in either direction) and hangs up before
    # the screen goes dark, so benign vectors never match a labeling rule.
    for app in scenario.apps:
        out_calls: list[tuple[int, int]] = []
        in_calls: list[tuple[int, int]] = []
        for s, e, state in spans:
            if state:  # user-initiated calls need an active user, end with the session
                for t in _gap_times(rng, scenario.out_call_gap, s, e):
                    dur = rng.geometric(scenario.call_duration_mean)
                    out_calls.append((t, min(t + dur, e)))
        for t in _gap_times(rng, scenario.in_call_gap, start, end):
            dur = rng.geometric(scenario.call_duration_mean)
            in_calls.append((t, min(t + dur, end)))

        def covered(t: int, intervals: list[tuple[int, int]]) -> bool:
            return any(s <= t <= e for s, e in intervals)

        for t0, t1 in out_calls:
            stage(t0, EventKind.OUT_CALL_START, app)
            stage(t1, EventKind.OUT_CALL_END, app, rank=1)
        for t0, t1 in in_calls:
            stage(t0, EventKind.IN_CALL_START, app)
            stage(t1, EventKind.IN_CALL_END, app, rank=1)
        for s, e, state in spans:
            if state:
                for t in _gap_times(rng, scenario.out_sms_gap, s, e):
                    if not covered(t, in_calls):
                        stage(t, EventKind.OUT_SMS, app)
        for t in _gap_times(rng, scenario.in_sms_gap, start, end):
            if not covered(t, out_calls):
                stage(t, EventKind.IN_SMS, app)

    # injected misbehavior
    for inj in scenario.injections:
        t = start + inj.start_offset
        if inj.behavior == "sms_while_idle":
            while t < end:
                if not screen_at(t):
                    stage(t, EventKind.OUT_SMS, inj.app)
                t += inj.period
        elif inj.behavior == "call_while_idle":
            while t < end:
                if not screen_at(t):
                    stage(t, EventKind.OUT_CALL_START, inj.app)
                    stage(min(t + 1, end), EventKind.OUT_CALL_END, inj.app, rank=1)
                t += inj.period
        else:  # sms_during_call: an SMS sent inside a fabricated incoming call
            at = min(t, end - 1)
            stage(at, EventKind.IN_CALL_START, inj.app)
            stage(at, EventKind.OUT_SMS, inj.app, rank=1)
            stage(min(at + inj.period, end), EventKind.IN_CALL_END, inj.app, rank=2)

    staged.sort(key=lambda item: (item[0], item[1], item[2]))
    events = tuple(ev for _, _, _, ev in staged)
    return EventTrace(events, initial_screen, frozenset(scenario.apps))
