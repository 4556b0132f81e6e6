"""Rule-labeled exhaustive enumeration of the five feature bits.

The training set is not collected: it is the full truth table of the five
binary features, each combination labeled Malicious when any rule fires
and Normal otherwise. Rules are conjunctions of bit literals and can be
loaded from a text file, so alternative labelings need no code changes.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import arff
from .extract import (
    BIT_ATTRIBUTES,
    MALICIOUS,
    NORMAL,
    FeatureBits,
    FeatureInstance,
    to_arff,
)

_FIELD_OF_ATTR = {
    "OutCall": "out_call",
    "InCall": "in_call",
    "OutSMS": "out_sms",
    "InSMS": "in_sms",
    "Screen": "screen",
}


class RuleParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class LabelRule:
    """Conjunction of bit literals; a match labels the instance Malicious."""

    name: str
    literals: tuple[tuple[str, int], ...]  # (attribute name, required bit)

    def __post_init__(self):
        for attr, bit in self.literals:
            if attr not in _FIELD_OF_ATTR:
                raise ValueError(f"rule {self.name!r}: unknown feature {attr!r}")
            if bit not in (0, 1):
                raise ValueError(f"rule {self.name!r}: bit must be 0 or 1")

    def matches(self, bits: FeatureBits) -> bool:
        return all(getattr(bits, _FIELD_OF_ATTR[attr]) == bit for attr, bit in self.literals)


@dataclass(frozen=True)
class NormalityModel:
    rules: tuple[LabelRule, ...]
    instances: tuple[tuple[FeatureBits, str], ...]  # all 2^5 combinations, labeled

    @property
    def normal_count(self) -> int:
        return sum(1 for _, label in self.instances if label == NORMAL)

    @property
    def malicious_count(self) -> int:
        return sum(1 for _, label in self.instances if label == MALICIOUS)


def default_rules() -> list[LabelRule]:
    """User-initiated traffic while idle, and SMS/call overlap."""
    return [
        LabelRule("sms-while-idle", (("OutSMS", 1), ("Screen", 0))),
        LabelRule("call-while-idle", (("OutCall", 1), ("Screen", 0))),
        LabelRule("sms-during-incoming-call", (("OutSMS", 1), ("InCall", 1))),
        LabelRule("call-during-incoming-sms", (("OutCall", 1), ("InSMS", 1))),
    ]


def all_bit_patterns() -> list[FeatureBits]:
    """All 32 bit combinations as a binary counter.

    Field order OutCall, InCall, OutSMS, InSMS, Screen, most significant
    first: pattern i has OutCall = bit 4 of i ... Screen = bit 0.
    """
    return [
        FeatureBits(
            out_call=(i >> 4) & 1,
            in_call=(i >> 3) & 1,
            out_sms=(i >> 2) & 1,
            in_sms=(i >> 1) & 1,
            screen=i & 1,
        )
        for i in range(32)
    ]


def enumerate_model(rules: list[LabelRule]) -> NormalityModel:
    """Label every bit pattern: Malicious iff some rule fires."""
    instances = tuple(
        (bits, MALICIOUS if any(r.matches(bits) for r in rules) else NORMAL)
        for bits in all_bit_patterns()
    )
    return NormalityModel(tuple(rules), instances)


def to_training_arff(
    model: NormalityModel,
    placeholder_app: str = "model",
    base_time: int = 0,
    relation: str = "NormalityModel",
) -> arff.ArffDocument:
    """Render the model as a labeled training document.

    Time and AppName carry no signal; Time is base_time plus the row index
    so rows stay distinct and parseable.
    """
    instances = [
        FeatureInstance(base_time + i, placeholder_app, bits, label)
        for i, (bits, label) in enumerate(model.instances)
    ]
    return to_arff(instances, relation)


def parse_rules(text: str) -> list[LabelRule]:
    """Rule file: one `name: Attr=bit & Attr=bit` line per rule.

    Attribute names are exactly OutCall, InCall, OutSMS, InSMS, Screen.
    Blank lines and `#` comments are skipped.
    """
    rules: list[LabelRule] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise RuleParseError(line_no, "expected 'name: Attr=bit & ...'")
        name, _, cond = line.partition(":")
        name = name.strip()
        if not name:
            raise RuleParseError(line_no, "rule name must be non-empty")
        literals = []
        for part in cond.split("&"):
            part = part.strip()
            if "=" not in part:
                raise RuleParseError(line_no, f"bad literal {part!r}; expected Attr=0 or Attr=1")
            attr, _, bit_text = part.partition("=")
            attr = attr.strip()
            bit_text = bit_text.strip()
            if attr not in BIT_ATTRIBUTES:
                raise RuleParseError(line_no, f"unknown feature {attr!r}; expected one of {BIT_ATTRIBUTES}")
            if bit_text not in ("0", "1"):
                raise RuleParseError(line_no, f"bit must be 0 or 1, got {bit_text!r}")
            literals.append((attr, int(bit_text)))
        if not literals:
            raise RuleParseError(line_no, "rule has no literals")
        rules.append(LabelRule(name, tuple(literals)))
    return rules


def load_rules(path) -> list[LabelRule]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rules(fh.read())
