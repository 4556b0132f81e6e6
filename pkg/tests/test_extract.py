import pytest

from appwatch import arff
from appwatch.events import DeviceEvent, EventKind, EventTrace, parse_timestamp
from appwatch.extract import (
    ALL_ATTRIBUTES,
    TraceValidationError,
    extract,
    instances_from_document,
    to_arff,
    to_csv,
)
from appwatch.simulate import Scenario, generate

T0 = parse_timestamp("10.03.2015 08:40:38")


def test_single_outgoing_sms_while_screen_off():
    trace = EventTrace(
        (DeviceEvent(T0, EventKind.OUT_SMS, "com.bbm.BbmService"),),
        initial_screen=False,
    )
    instances = extract(trace)
    assert len(instances) == 1
    inst = instances[0]
    assert inst.bits.as_tuple() == (0, 0, 1, 0, 0)
    assert inst.label is None


def test_initial_app_snapshot():
    trace = EventTrace((), initial_screen=True, initial_apps=frozenset({"launcher"}))
    instances = extract(trace, tick=60)
    assert len(instances) == 1
    assert instances[0].app == "launcher"
    assert instances[0].bits.as_tuple() == (0, 0, 0, 0, 1)


def test_sms_during_own_incoming_call():
    trace = EventTrace((
        DeviceEvent(T0, EventKind.IN_CALL_START, "com.bbm"),
        DeviceEvent(T0 + 5, EventKind.OUT_SMS, "com.bbm"),
        DeviceEvent(T0 + 20, EventKind.IN_CALL_END, "com.bbm"),
    ), initial_screen=True)
    instances = extract(trace)
    sms_instances = [i for i in instances if i.bits.out_sms]
    assert len(sms_instances) == 1
    assert sms_instances[0].bits.in_call == 1


def test_tick_snapshots_per_running_app():
    # ticks anchor at the first event's timestamp
    trace = EventTrace((
        DeviceEvent(T0, EventKind.IN_SMS, "c"),
        DeviceEvent(T0 + 130, EventKind.SCREEN_OFF, None),
    ), initial_screen=True, initial_apps=frozenset({"a", "b"}))
    instances = extract(trace, tick=60)
    snapshots = [i for i in instances if i.app in ("a", "b")]
    # snapshots at T0, T0+60, T0+120 for both running apps
    assert len(snapshots) == 6
    assert all(i.bits.as_tuple() == (0, 0, 0, 0, 1) for i in snapshots)
    assert sorted({i.time for i in snapshots}) == [T0, T0 + 60, T0 + 120]
    # "c" is not running, so it only gets its event-driven instance
    assert [i.bits.in_sms for i in instances if i.app == "c"] == [1]


def test_open_call_bit_carries_across_snapshots():
    trace = EventTrace((
        DeviceEvent(T0, EventKind.OUT_CALL_START, "a"),
        DeviceEvent(T0 + 150, EventKind.OUT_CALL_END, "a"),
        DeviceEvent(T0 + 200, EventKind.IN_SMS, "a"),
    ), initial_screen=True, initial_apps=frozenset({"a"}))
    instances = extract(trace, tick=60)
    by_time = {i.time: i for i in instances if i.app == "a"}
    assert by_time[T0 + 60].bits.out_call == 1  # snapshot during open call
    assert by_time[T0 + 120].bits.out_call == 1
    assert by_time[T0 + 180].bits.out_call == 0  # call closed by now
    # the in-SMS instance is event-driven, not merged with the call
    sms = [i for i in instances if i.bits.in_sms]
    assert len(sms) == 1 and sms[0].bits.out_call == 0


def test_app_start_stop_affect_snapshots():
    trace = EventTrace((
        DeviceEvent(T0, EventKind.IN_SMS, "other"),
        DeviceEvent(T0 + 10, EventKind.APP_START, "late"),
        DeviceEvent(T0 + 70, EventKind.APP_STOP, "late"),
        DeviceEvent(T0 + 130, EventKind.IN_SMS, "other"),
    ), initial_screen=True)
    instances = extract(trace, tick=60)
    late_snapshots = [i for i in instances if i.app == "late"]
    assert [i.time for i in late_snapshots] == [T0 + 60]


def test_invalid_trace_raises_with_violations():
    trace = EventTrace((DeviceEvent(T0, EventKind.IN_CALL_END, "a"),))
    with pytest.raises(TraceValidationError) as exc:
        extract(trace)
    assert exc.value.violations


def test_bad_tick_rejected():
    with pytest.raises(ValueError):
        extract(EventTrace(()), tick=0)


@pytest.mark.parametrize("seed", range(4))
def test_sms_conservation(seed):
    scenario = Scenario(
        duration=2400, seed=seed, apps=("a", "b"),
        out_sms_gap=60, in_sms_gap=80, out_call_gap=200, in_call_gap=240,
    )
    trace = generate(scenario)
    instances = extract(trace, tick=60)
    out_events = sum(1 for e in trace.events if e.kind is EventKind.OUT_SMS)
    in_events = sum(1 for e in trace.events if e.kind is EventKind.IN_SMS)
    assert sum(i.bits.out_sms for i in instances) == out_events
    assert sum(i.bits.in_sms for i in instances) == in_events


def test_extraction_deterministic():
    trace = generate(Scenario(duration=1200, seed=9, apps=("a",), out_sms_gap=60))
    assert extract(trace) == extract(trace)


def test_csv_header_and_arity():
    trace = EventTrace(
        (DeviceEvent(T0, EventKind.OUT_SMS, "com.bbm"),), initial_screen=True
    )
    text = to_csv(extract(trace))
    lines = text.strip().splitlines()
    assert lines[0] == ",".join(ALL_ATTRIBUTES)
    assert len(lines) == 2
    assert len(lines[1].split(",")) == 8
    assert lines[1].startswith("'10.03.2015 08:40:38'")  # space forces quoting
    assert lines[1].endswith(",?")


def test_arff_schema():
    trace = EventTrace(
        (DeviceEvent(T0, EventKind.OUT_SMS, "com.bbm"),), initial_screen=True
    )
    doc = to_arff(extract(trace))
    assert [a.name for a in doc.attributes] == list(ALL_ATTRIBUTES)
    assert doc.attributes[0].type == arff.Date("MM.dd.yyyy HH:mm:ss")
    assert doc.attributes[2].type == arff.Nominal(("0", "1"))
    assert doc.attributes[7].type == arff.Nominal(("Normal", "Malicious"))
    text = arff.serialize(doc)
    assert "@attribute Class {Normal,Malicious}" in text
    assert text.strip().endswith(",?")


def test_arff_appname_first_appearance_order():
    trace = EventTrace((
        DeviceEvent(T0, EventKind.OUT_SMS, "zzz"),
        DeviceEvent(T0 + 1, EventKind.OUT_SMS, "aaa"),
        DeviceEvent(T0 + 2, EventKind.OUT_SMS, "zzz"),
    ), initial_screen=True)
    doc = to_arff(extract(trace, tick=600))
    appname = doc.attributes[1]
    assert appname.type.values == ("zzz", "aaa")


def test_arff_empty_instances():
    doc = to_arff([])
    assert len(doc.attributes) == 8
    assert doc.rows == []
    text = arff.serialize(doc)
    assert text.strip().endswith("@data")


def test_instances_roundtrip_via_arff():
    trace = generate(Scenario(duration=900, seed=4, apps=("a",), out_sms_gap=60))
    instances = extract(trace)
    doc = to_arff(instances)
    assert instances_from_document(arff.parse(arff.serialize(doc))) == instances
