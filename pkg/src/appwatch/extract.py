"""Folds an event trace into per-app behavioral feature vectors.

Each vector records, for one app in one window, whether any outgoing call,
incoming call, outgoing SMS or incoming SMS occurred, plus the device
screen state at emission time. Presence is binary: one occurrence marks
the window the same as many.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from . import arff
from .events import (
    EventKind,
    EventTrace,
    Timestamp,
    format_timestamp,
    validate_trace,
)

NORMAL = "Normal"
MALICIOUS = "Malicious"
CLASS_VALUES = (NORMAL, MALICIOUS)

# Attribute order is fixed across CSV, ARFF and the classifier.
BIT_ATTRIBUTES = ("OutCall", "InCall", "OutSMS", "InSMS", "Screen")
ALL_ATTRIBUTES = ("Time", "AppName") + BIT_ATTRIBUTES + ("Class",)

DEFAULT_TICK = 60


class TraceValidationError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class FeatureBits:
    out_call: int = 0
    in_call: int = 0
    out_sms: int = 0
    in_sms: int = 0
    screen: int = 0

    def __post_init__(self):
        for name in ("out_call", "in_call", "out_sms", "in_sms", "screen"):
            v = getattr(self, name)
            if v not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {v!r}")

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.out_call, self.in_call, self.out_sms, self.in_sms, self.screen)


@dataclass(frozen=True)
class FeatureInstance:
    time: Timestamp
    app: str
    bits: FeatureBits
    label: Optional[str] = None  # None = Unknown ('?' in ARFF)

    def __post_init__(self):
        if self.label not in (None, NORMAL, MALICIOUS):
            raise ValueError(f"bad class label {self.label!r}")


_EVENT_BIT = {
    EventKind.OUT_SMS: "out_sms",
    EventKind.IN_SMS: "in_sms",
    EventKind.OUT_CALL_START: "out_call",
    EventKind.IN_CALL_START: "in_call",
}


def extract(trace: EventTrace, tick: int = DEFAULT_TICK) -> list[FeatureInstance]:
    """Replay a trace into feature instances.

    Emission points:
      * at trace start and at every tick boundary, one snapshot per running
        app with the bits pending in that app's window (then cleared);
      * immediately after every SMS or call-start event, one instance for
        the acting app (its window is flushed into that instance).

    The screen bit is the device state at emission time; while a call is
    open for an app, every instance for that app carries that call bit.
    """
    if tick <= 0:
        raise ValueError(f"tick must be positive, got {tick}")
    violations = validate_trace(trace)
    if violations:
        raise TraceValidationError(violations)

    screen = trace.initial_screen
    running: list[str] = sorted(trace.initial_apps)
    open_calls: dict[tuple[str, str], int] = {}
    windows: dict[str, set[str]] = {}
    out: list[FeatureInstance] = []

    def emit(app: str, at: Timestamp) -> None:
        pending = windows.pop(app, set())
        bits = FeatureBits(
            out_call=1 if "out_call" in pending or open_calls.get((app, "out"), 0) else 0,
            in_call=1 if "in_call" in pending or open_calls.get((app, "in"), 0) else 0,
            out_sms=1 if "out_sms" in pending else 0,
            in_sms=1 if "in_sms" in pending else 0,
            screen=1 if screen else 0,
        )
        out.append(FeatureInstance(at, app, bits))

    def snapshot(at: Timestamp) -> None:
        for app in running:
            emit(app, at)

    start = trace.events[0].at if trace.events else 0
    end = trace.events[-1].at if trace.events else start
    snapshot(start)

    next_tick = start + tick
    for ev in trace.events:
        while next_tick <= ev.at:
            snapshot(next_tick)
            next_tick += tick
        if ev.kind is EventKind.SCREEN_ON:
            screen = True
        elif ev.kind is EventKind.SCREEN_OFF:
            screen = False
        elif ev.kind is EventKind.APP_START:
            if ev.app not in running:
                running.append(ev.app)
        elif ev.kind is EventKind.APP_STOP:
            if ev.app in running:
                running.remove(ev.app)
        elif ev.kind in _EVENT_BIT:
            windows.setdefault(ev.app, set()).add(_EVENT_BIT[ev.kind])
            if ev.kind is EventKind.OUT_CALL_START:
                open_calls[(ev.app, "out")] = open_calls.get((ev.app, "out"), 0) + 1
            elif ev.kind is EventKind.IN_CALL_START:
                open_calls[(ev.app, "in")] = open_calls.get((ev.app, "in"), 0) + 1
            emit(ev.app, ev.at)
        elif ev.kind is EventKind.OUT_CALL_END:
            open_calls[(ev.app, "out")] = max(0, open_calls.get((ev.app, "out"), 0) - 1)
        elif ev.kind is EventKind.IN_CALL_END:
            open_calls[(ev.app, "in")] = max(0, open_calls.get((ev.app, "in"), 0) - 1)
    while next_tick <= end:
        snapshot(next_tick)
        next_tick += tick
    return out


def _csv_field(value: str) -> str:
    if " " in value or "," in value:
        return f"'{value}'"
    return value


def to_csv(instances: list[FeatureInstance]) -> str:
    """8-column CSV mirroring the ARFF attribute order."""
    lines = [",".join(ALL_ATTRIBUTES)]
    for inst in instances:
        fields = [
            _csv_field(format_timestamp(inst.time)),
            _csv_field(inst.app),
            *[str(b) for b in inst.bits.as_tuple()],
            inst.label if inst.label is not None else "?",
        ]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def to_arff(instances: list[FeatureInstance], relation: str = "AppFeatureVectors") -> arff.ArffDocument:
    """Build the canonical 8-attribute document from feature instances.

    The AppName domain lists apps in first appearance order. With no
    instances a single placeholder app keeps the nominal domain non-empty.
    """
    apps: list[str] = []
    for inst in instances:
        if inst.app not in apps:
            apps.append(inst.app)
    if not apps:
        apps = ["none"]
    bit_type = arff.Nominal(("0", "1"))
    attributes = [
        arff.AttributeDecl("Time", arff.Date("MM.dd.yyyy HH:mm:ss")),
        arff.AttributeDecl("AppName", arff.Nominal(tuple(apps))),
        *[arff.AttributeDecl(name, bit_type) for name in BIT_ATTRIBUTES],
        arff.AttributeDecl("Class", arff.Nominal(CLASS_VALUES)),
    ]
    rows = [
        (inst.time, inst.app, *[str(b) for b in inst.bits.as_tuple()], inst.label)
        for inst in instances
    ]
    return arff.ArffDocument(relation, attributes, rows)


def check_schema(doc: arff.ArffDocument) -> None:
    """Verify a document matches the pipeline schema.

    Attribute names, order and types must match; the AppName nominal
    domain is free. Raises SchemaMismatchError naming the first difference.
    """
    expected = to_arff([])
    for i, want in enumerate(expected.attributes):
        if i >= len(doc.attributes):
            raise SchemaMismatchError(f"missing attribute {want.name!r}")
        got = doc.attributes[i]
        if got.name != want.name:
            raise SchemaMismatchError(f"attribute {got.name!r} where {want.name!r} expected")
        if want.name == "AppName":
            if not isinstance(got.type, arff.Nominal):
                raise SchemaMismatchError("AppName must be nominal")
            continue
        if got.type != want.type:
            raise SchemaMismatchError(f"attribute {got.name!r} has type {got.type}, expected {want.type}")
    if len(doc.attributes) > len(expected.attributes):
        extra = doc.attributes[len(expected.attributes)]
        raise SchemaMismatchError(f"unexpected extra attribute {extra.name!r}")


class SchemaMismatchError(ValueError):
    pass


def instances_from_document(doc: arff.ArffDocument) -> list[FeatureInstance]:
    """Convert schema-conformant rows back into FeatureInstances."""
    check_schema(doc)
    instances = []
    for i, row in enumerate(doc.rows):
        time, app, oc, ic, os_, is_, scr, label = row
        if app is None:
            raise arff.ArffError(f"row {i}: missing AppName")
        if any(b is None for b in (oc, ic, os_, is_, scr)):
            raise arff.ArffError(f"row {i}: missing feature bit")
        bits = FeatureBits(*(int(b) for b in (oc, ic, os_, is_, scr)))
        instances.append(FeatureInstance(int(time or 0), app, bits, label))
    return instances


def inject_manual_vectors(
    instances: list[FeatureInstance],
    extra: list[FeatureInstance],
) -> list[FeatureInstance]:
    """Append hand-crafted rows to a dataset, preserving order."""
    return list(instances) + list(extra)


def manual_vector(
    bits: tuple[int, int, int, int, int],
    app: str = "manual",
    time: Timestamp = 0,
    label: Optional[str] = None,
) -> FeatureInstance:
    """Convenience builder for a hand-crafted row from its five bits."""
    return FeatureInstance(time, app, FeatureBits(*bits), label)


def relabel(instance: FeatureInstance, label: Optional[str]) -> FeatureInstance:
    return replace(instance, label=label)
