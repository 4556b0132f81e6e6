"""Pipeline driver: simulate, gen-model, extract, classify, evaluate.

Configuration is a `key = value` file with `[section]` headers. Detection
reports go to one or more sinks: stdout, file:<path>, or an http(s) URL.

Exit codes: 0 success, 2 configuration, 3 parse, 4 schema/validation,
5 report-sink failure (classification output is still written).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time as _time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from . import arff, evaluation, extract, figures, knn, model, simulate
from .events import format_timestamp, read_trace_file, write_trace_file

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_SCHEMA = 4
EXIT_SINK = 5


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


# --- config ------------------------------------------------------------------

@dataclass
class PipelineConfig:
    tick: int = extract.DEFAULT_TICK
    classifier: knn.ClassifierConfig = knn.ClassifierConfig()
    rules_file: str | None = None
    sinks: tuple[str, ...] = ("stdout",)


def _read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise CliError(f"config not found: {path}")
    except configparser.Error as exc:
        raise CliError(f"bad config {path}: {exc}")
    return parser


def _get_int(section, key: str, default: int) -> int:
    try:
        return section.getint(key, default)
    except ValueError:
        raise CliError(f"config field {key!r} must be an integer")


def load_pipeline_config(path=None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    parser = _read_ini(path)
    cfg = PipelineConfig()
    if parser.has_section("pipeline"):
        sec = parser["pipeline"]
        tick = _get_int(sec, "tick", cfg.tick)
        if tick <= 0:
            raise CliError("config field 'tick' must be positive")
        try:
            classifier = knn.ClassifierConfig(
                k=_get_int(sec, "k", 1),
                include_identifiers=sec.getboolean("include_identifiers", False),
            )
        except knn.TrainingError as exc:
            raise CliError(str(exc))
        cfg = PipelineConfig(
            tick=tick,
            classifier=classifier,
            rules_file=sec.get("rules_file", None),
            sinks=cfg.sinks,
        )
    if parser.has_section("report"):
        raw = parser["report"].get("sinks", "stdout")
        sinks = tuple(s.strip() for s in raw.split(",") if s.strip())
        if not sinks:
            raise CliError("config field 'sinks' must name at least one sink")
        cfg.sinks = sinks
    return cfg


def load_scenario(path, seed_override=None) -> simulate.Scenario:
    parser = _read_ini(path)
    if not parser.has_section("scenario"):
        raise CliError(f"scenario file {path} has no [scenario] section")
    sec = parser["scenario"]
    try:
        duration = sec.getint("duration")
    except (ValueError, TypeError):
        raise CliError("scenario field 'duration' must be an integer")
    if duration is None:
        raise CliError("scenario field 'duration' is required")
    apps = tuple(a.strip() for a in sec.get("apps", "").split(",") if a.strip())
    script = []
    for part in sec.get("screen_script", "").split(","):
        part = part.strip()
        if not part:
            continue
        state_text, _, dur_text = part.partition(":")
        if state_text not in ("on", "off") or not dur_text.isdigit():
            raise CliError(f"scenario field 'screen_script': bad span {part!r}, expected on:SECONDS")
        script.append((state_text == "on", int(dur_text)))
    injections = []
    for name in parser.sections():
        if not name.startswith("injection"):
            continue
        isec = parser[name]
        app = isec.get("app")
        if not app:
            raise CliError(f"injection section [{name}] needs an 'app' field")
        try:
            injections.append(simulate.Injection(
                app=app,
                behavior=isec.get("behavior", "sms_while_idle"),
                period=_get_int(isec, "period", 60),
                start_offset=_get_int(isec, "start_offset", 0),
            ))
        except simulate.ScenarioError as exc:
            raise CliError(f"injection section [{name}]: {exc}")
    defaults = simulate.Scenario(duration=1)
    try:
        return simulate.Scenario(
            duration=duration,
            seed=seed_override if seed_override is not None else _get_int(sec, "seed", 0),
            apps=apps,
            out_sms_gap=_get_int(sec, "out_sms_gap", defaults.out_sms_gap),
            in_sms_gap=_get_int(sec, "in_sms_gap", defaults.in_sms_gap),
            out_call_gap=_get_int(sec, "out_call_gap", defaults.out_call_gap),
            in_call_gap=_get_int(sec, "in_call_gap", defaults.in_call_gap),
            call_duration_mean=_get_int(sec, "call_duration_mean", defaults.call_duration_mean),
            screen_on_mean=_get_int(sec, "screen_on_mean", defaults.screen_on_mean),
            screen_off_mean=_get_int(sec, "screen_off_mean", defaults.screen_off_mean),
            initial_screen=sec.get("initial_screen", "on") == "on",
            start_time=_get_int(sec, "start_time", 0),
            injections=tuple(injections),
            screen_script=tuple(script),
        )
    except simulate.ScenarioError as exc:
        raise CliError(str(exc))


# --- detection reports ---------------------------------------------------------

def build_detection_report(instances, predictions, generated_at=None) -> dict:
    per_instance = []
    flagged = []
    malicious = 0
    for inst, pred in zip(instances, predictions):
        if pred.label == extract.MALICIOUS:
            malicious += 1
            if inst.app not in flagged:
                flagged.append(inst.app)
        per_instance.append({
            "time": format_timestamp(inst.time),
            "app": inst.app,
            "bits": list(inst.bits.as_tuple()),
            "class": pred.label,
            "nearest_neighbor": pred.neighbor_indices[0],
        })
    return {
        "generated_at": format_timestamp(int(generated_at if generated_at is not None else _time.time())),
        "instances": per_instance,
        "flagged_apps": flagged,
        "summary": {
            "total": len(per_instance),
            "malicious": malicious,
            "normal": len(per_instance) - malicious,
        },
    }


def dispatch_report(report: dict, sinks, out=None) -> list[str]:
    """Send the report to every sink; returns failure messages."""
    if out is None:
        out = sys.stdout
    payload = json.dumps(report, indent=2)
    failures = []
    for sink in sinks:
        if sink == "stdout":
            for row in report["instances"]:
                if row["class"] == extract.MALICIOUS:
                    print(f"MALICIOUS: {row['app']} at {row['time']}", file=out)
            s = report["summary"]
            print(f"{s['total']} instances, {s['malicious']} malicious, "
                  f"{len(report['flagged_apps'])} flagged apps", file=out)
        elif sink.startswith("file:"):
            try:
                Path(sink[len("file:"):]).write_text(payload + "\n", encoding="utf-8")
            except OSError as exc:
                failures.append(f"sink {sink}: {exc}")
        elif sink.startswith("http://") or sink.startswith("https://"):
            req = urllib.request.Request(
                sink, data=payload.encode("utf-8"),
                headers={"Content-Type": "application/json"}, method="POST",
            )
            try:
                with urllib.request.urlopen(req, timeout=10) as resp:
                    if not 200 <= resp.status < 300:
                        failures.append(f"sink {sink}: HTTP {resp.status}")
            except (urllib.error.URLError, OSError) as exc:
                failures.append(f"sink {sink}: {exc}")
        else:
            failures.append(f"unknown sink {sink!r}")
    return failures


# --- subcommands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    if not Path(args.scenario).exists():
        raise CliError(f"scenario not found: {args.scenario}")
    scenario = load_scenario(args.scenario, seed_override=args.seed)
    trace = simulate.generate(scenario)
    write_trace_file(trace, args.out)
    print(f"wrote {len(trace.events)} events to {args.out}")
    return EXIT_OK


def cmd_gen_model(args) -> int:
    if args.rules:
        try:
            rules = model.load_rules(args.rules)
        except FileNotFoundError:
            raise CliError(f"rules file not found: {args.rules}")
        except model.RuleParseError as exc:
            raise CliError(f"bad rules file {args.rules}: {exc}", EXIT_PARSE)
    else:
        rules = model.default_rules()
    normality = model.enumerate_model(rules)
    doc = model.to_training_arff(normality)
    arff.write_file(doc, args.out)
    print(f"wrote {len(doc.rows)} training rows ({normality.normal_count} Normal, "
          f"{normality.malicious_count} Malicious) to {args.out}")
    return EXIT_OK


def cmd_extract(args) -> int:
    try:
        trace = read_trace_file(args.trace)
    except FileNotFoundError:
        raise CliError(f"trace not found: {args.trace}")
    except Exception as exc:
        raise CliError(f"bad trace {args.trace}: {exc}", EXIT_PARSE)
    try:
        instances = extract.extract(trace, tick=args.tick)
    except extract.TraceValidationError as exc:
        raise CliError(f"invalid trace: {exc}", EXIT_SCHEMA)
    if args.csv_out:
        Path(args.csv_out).write_text(extract.to_csv(instances), encoding="utf-8")
    arff.write_file(extract.to_arff(instances), args.out)
    print(f"wrote {len(instances)} instances to {args.out}")
    return EXIT_OK


def _load_arff(path, what: str) -> arff.ArffDocument:
    try:
        return arff.read_file(path)
    except FileNotFoundError:
        raise CliError(f"{what} not found: {path}")
    except arff.ArffParseError as exc:
        raise CliError(f"bad {what} {path}: {exc}", EXIT_PARSE)


def cmd_classify(args, config: PipelineConfig) -> int:
    train_doc = _load_arff(args.train, "training file")
    test_doc = _load_arff(args.test, "test file")
    try:
        clf = knn.train_from_document(train_doc, config.classifier)
        labeled, predictions = knn.classify_document(clf, test_doc)
        instances = extract.instances_from_document(test_doc)
    except (extract.SchemaMismatchError, arff.ArffError) as exc:
        raise CliError(f"schema mismatch: {exc}", EXIT_SCHEMA)
    except knn.TrainingError as exc:
        raise CliError(str(exc))
    arff.write_file(labeled, args.out)
    report = build_detection_report(instances, predictions)
    failures = dispatch_report(report, config.sinks)
    for failure in failures:
        print(failure, file=sys.stderr)
    return EXIT_SINK if failures else EXIT_OK


def cmd_evaluate(args, config: PipelineConfig) -> int:
    train_doc = _load_arff(args.train, "training file")
    try:
        rows = extract.instances_from_document(train_doc)
    except (extract.SchemaMismatchError, arff.ArffError) as exc:
        raise CliError(f"schema mismatch: {exc}", EXIT_SCHEMA)
    try:
        result = evaluation.cross_validate(rows, config.classifier, args.folds, args.seed or 0)
    except (evaluation.EvaluationError, knn.TrainingError) as exc:
        raise CliError(str(exc))
    text = evaluation.render_report(
        result.report, title=f"Stratified {args.folds}-fold cross-validation"
    )
    print(text, end="")
    if args.text_out:
        Path(args.text_out).write_text(text, encoding="utf-8")
    if args.json_out:
        payload = evaluation.report_as_dict(result.report)
        payload["folds"] = args.folds
        payload["seed"] = args.seed or 0
        Path(args.json_out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if args.figures_dir:
        fig_dir = Path(args.figures_dir)
        fig_dir.mkdir(parents=True, exist_ok=True)
        labels = [r.label for r in rows]
        try:
            points = evaluation.roc_points(result.scores, labels)
            figures.plot_roc(points, fig_dir / "roc.png", auc=result.report.auc)
        except evaluation.EvaluationError:
            pass  # single-class data has no ROC
        figures.plot_confusion(result.report.matrix, fig_dir / "confusion.png")
        print(f"figures written to {fig_dir}")
    return EXIT_OK


# --- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config file")
    common.add_argument("--seed", type=int, help="override the configured seed")

    parser = argparse.ArgumentParser(
        prog="appwatch",
        description="Device-activity simulation, feature extraction, "
                    "nearest-neighbor anomaly detection and evaluation.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a device activity trace")
    p.add_argument("--scenario", required=True, help="scenario config file")
    p.add_argument("--out", required=True, help="output trace path")

    p = sub.add_parser("gen-model", parents=[common], help="emit the labeled training set")
    p.add_argument("--rules", help="rule file (default: built-in rules)")
    p.add_argument("--out", required=True, help="output ARFF path")

    p = sub.add_parser("extract", parents=[common], help="fold a trace into feature vectors")
    p.add_argument("--trace", required=True, help="input trace path")
    p.add_argument("--out", required=True, help="output ARFF path")
    p.add_argument("--tick", type=int, default=extract.DEFAULT_TICK, help="snapshot interval (s)")
    p.add_argument("--csv-out", help="also write the vectors as CSV")

    p = sub.add_parser("classify", parents=[common], help="label a test file against a training set")
    p.add_argument("--train", required=True, help="training ARFF")
    p.add_argument("--test", required=True, help="unlabeled test ARFF")
    p.add_argument("--out", required=True, help="labeled output ARFF")

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate a training set")
    p.add_argument("--train", required=True, help="training ARFF")
    p.add_argument("--folds", type=int, default=10, help="fold count (default 10)")
    p.add_argument("--text-out", help="write the text report here")
    p.add_argument("--json-out", help="write the structured report here")
    p.add_argument("--figures-dir", help="write ROC and confusion-matrix figures here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_pipeline_config(args.config)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "gen-model":
            return cmd_gen_model(args)
        if args.command == "extract":
            return cmd_extract(args)
        if args.command == "classify":
            return cmd_classify(args, config)
        if args.command == "evaluate":
            return cmd_evaluate(args, config)
        raise CliError(f"unknown command {args.command!r}")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
