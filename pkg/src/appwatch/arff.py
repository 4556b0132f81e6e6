"""Parser and serializer for the ARFF subset used by the pipeline.

Supported attribute types: nominal, date (with an explicit pattern),
numeric and string. `?` denotes a missing value. Single quotes protect
tokens containing spaces or commas; a literal quote is doubled.

Internally, date values are epoch seconds (int), numeric values are
floats, nominal/string values are str, and missing is None.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Union


class ArffError(ValueError):
    pass


class ArffParseError(ArffError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.reason = message


@dataclass(frozen=True)
class Nominal:
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(set(self.values)) != len(self.values):
            raise ArffError("nominal value list contains duplicates")


@dataclass(frozen=True)
class Date:
    pattern: str = "MM.dd.yyyy HH:mm:ss"


@dataclass(frozen=True)
class Numeric:
    pass


@dataclass(frozen=True)
class String:
    pass


AttrType = Union[Nominal, Date, Numeric, String]
Value = Union[str, int, float, None]


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    type: AttrType


@dataclass
class ArffDocument:
    relation: str
    attributes: list[AttributeDecl]
    rows: list[tuple[Value, ...]] = field(default_factory=list)

    def attribute_index(self, name: str) -> int:
        for i, attr in enumerate(self.attributes):
            if attr.name == name:
                return i
        raise KeyError(name)


# --- date pattern handling -------------------------------------------------

_PATTERN_TOKENS = {
    "yyyy": ("year", 4),
    "MM": ("month", 2),
    "dd": ("day", 2),
    "HH": ("hour", 2),
    "mm": ("minute", 2),
    "ss": ("second", 2),
}
_TOKEN_RE = re.compile("|".join(sorted(_PATTERN_TOKENS, key=len, reverse=True)))


def _compile_pattern(pattern: str) -> tuple[re.Pattern, list[str]]:
    fields: list[str] = []
    regex_parts: list[str] = []
    pos = 0
    for m in _TOKEN_RE.finditer(pattern):
        literal = pattern[pos:m.start()]
        if any(c.isalnum() for c in literal):
            raise ArffError(f"unsupported token in date pattern {pattern!r}")
        regex_parts.append(re.escape(literal))
        name, width = _PATTERN_TOKENS[m.group()]
        if name in fields:
            raise ArffError(f"date pattern {pattern!r} repeats {m.group()}")
        fields.append(name)
        regex_parts.append(f"(\\d{{{width}}})")
        pos = m.end()
    tail = pattern[pos:]
    if any(c.isalnum() for c in tail):
        raise ArffError(f"unsupported token in date pattern {pattern!r}")
    regex_parts.append(re.escape(tail))
    return re.compile("^" + "".join(regex_parts) + "$"), fields


def parse_date(text: str, pattern: str = "MM.dd.yyyy HH:mm:ss") -> int:
    """Parse a date string against the pattern; returns epoch seconds (UTC)."""
    regex, fields = _compile_pattern(pattern)
    m = regex.match(text)
    if m is None:
        raise ArffError(f"date {text!r} does not match pattern {pattern!r}")
    parts = {"year": 1970, "month": 1, "day": 1, "hour": 0, "minute": 0, "second": 0}
    for name, token in zip(fields, m.groups()):
        parts[name] = int(token)
    try:
        dt = datetime(parts["year"], parts["month"], parts["day"],
                      parts["hour"], parts["minute"], parts["second"])
    except ValueError as exc:
        raise ArffError(f"invalid calendar date {text!r}: {exc}") from exc
    return calendar.timegm(dt.timetuple())


def format_date(ts: int, pattern: str = "MM.dd.yyyy HH:mm:ss") -> str:
    """Inverse of parse_date on the representable range."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    values = {
        "yyyy": f"{dt.year:04d}",
        "MM": f"{dt.month:02d}",
        "dd": f"{dt.day:02d}",
        "HH": f"{dt.hour:02d}",
        "mm": f"{dt.minute:02d}",
        "ss": f"{dt.second:02d}",
    }
    _compile_pattern(pattern)  # reject bad patterns eagerly
    return _TOKEN_RE.sub(lambda m: values[m.group()], pattern)


# --- lexing ----------------------------------------------------------------

def _split_fields(line: str, line_no: int) -> list[str]:
    """Split a comma-separated row, honouring single quotes ('' = escaped quote)."""
    fields: list[str] = []
    buf: list[str] = []
    i = 0
    in_quote = False
    quoted = False
    n = len(line)
    while i < n:
        c = line[i]
        if in_quote:
            if c == "'":
                if i + 1 < n and line[i + 1] == "'":
                    buf.append("'")
                    i += 2
                    continue
                in_quote = False
            else:
                buf.append(c)
        elif c == "'":
            in_quote = True
            quoted = True
        elif c == ",":
            fields.append(_finish_field(buf, quoted))
            buf = []
            quoted = False
        else:
            buf.append(c)
        i += 1
    if in_quote:
        raise ArffParseError(line_no, "unterminated quote")
    fields.append(_finish_field(buf, quoted))
    return fields


def _finish_field(buf: list[str], quoted: bool) -> str:
    text = "".join(buf)
    return text if quoted else text.strip()


def _quote(value: str) -> str:
    if value == "" or any(c in value for c in " ,'?{}%"):
        return "'" + value.replace("'", "''") + "'"
    return value


# --- parsing ---------------------------------------------------------------

_ATTR_RE = re.compile(r"@attribute\s+(.*)$", re.IGNORECASE)
_REL_RE = re.compile(r"@relation\s+(.*)$", re.IGNORECASE)


def _read_name(text: str, line_no: int) -> tuple[str, str]:
    """Pull one (possibly quoted) token off the front; returns (token, rest)."""
    text = text.lstrip()
    if text.startswith("'"):
        i = 1
        buf: list[str] = []
        while i < len(text):
            if text[i] == "'":
                if i + 1 < len(text) and text[i + 1] == "'":
                    buf.append("'")
                    i += 2
                    continue
                return "".join(buf), text[i + 1:]
            buf.append(text[i])
            i += 1
        raise ArffParseError(line_no, "unterminated quote in declaration")
    parts = text.split(None, 1)
    if not parts:
        raise ArffParseError(line_no, "missing token in declaration")
    return parts[0], parts[1] if len(parts) > 1 else ""


def _parse_attr_type(text: str, line_no: int) -> AttrType:
    text = text.strip()
    if text.startswith("{"):
        if not text.endswith("}"):
            raise ArffParseError(line_no, "unterminated nominal value list")
        inner = text[1:-1]
        values = _split_fields(inner, line_no)
        values = [v for v in values]
        if values == [""]:
            raise ArffParseError(line_no, "empty nominal value list")
        try:
            return Nominal(tuple(values))
        except ArffError as exc:
            raise ArffParseError(line_no, str(exc)) from exc
    lowered = text.lower()
    if lowered in ("numeric", "real", "integer"):
        return Numeric()
    if lowered == "string":
        return String()
    if lowered.startswith("date"):
        rest = text[4:].strip()
        if not rest:
            raise ArffParseError(line_no, "date attribute requires a pattern")
        pattern, trailing = _read_name(rest, line_no)
        if trailing.strip():
            raise ArffParseError(line_no, f"unexpected text after date pattern: {trailing!r}")
        return Date(pattern)
    raise ArffParseError(line_no, f"unknown attribute type {text!r}")


def _parse_value(token: str, attr: AttributeDecl, row_no: int, line_no: int) -> Value:
    if token == "?":
        return None
    if isinstance(attr.type, Nominal):
        if token not in attr.type.values:
            raise ArffParseError(
                line_no,
                f"row {row_no}: value {token!r} not in declared values of "
                f"{attr.name!r} {list(attr.type.values)}",
            )
        return token
    if isinstance(attr.type, Date):
        try:
            return parse_date(token, attr.type.pattern)
        except ArffError as exc:
            raise ArffParseError(line_no, f"row {row_no}: {exc}") from exc
    if isinstance(attr.type, Numeric):
        try:
            return float(token)
        except ValueError as exc:
            raise ArffParseError(line_no, f"row {row_no}: bad numeric value {token!r}") from exc
    return token  # String


def parse(text: str) -> ArffDocument:
    """Parse ARFF text into a document; raises ArffParseError with line info."""
    relation: Optional[str] = None
    attributes: list[AttributeDecl] = []
    rows: list[tuple[Value, ...]] = []
    in_data = False
    row_no = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            lowered = line.lower()
            if lowered.startswith("@relation"):
                m = _REL_RE.match(line)
                if m is None:
                    raise ArffParseError(line_no, "malformed @relation")
                relation, _ = _read_name(m.group(1), line_no)
            elif lowered.startswith("@attribute"):
                m = _ATTR_RE.match(line)
                if m is None:
                    raise ArffParseError(line_no, "malformed @attribute")
                name, rest = _read_name(m.group(1), line_no)
                attributes.append(AttributeDecl(name, _parse_attr_type(rest, line_no)))
            elif lowered.startswith("@data"):
                if relation is None:
                    raise ArffParseError(line_no, "@data before @relation")
                if not attributes:
                    raise ArffParseError(line_no, "@data with no attributes declared")
                in_data = True
            else:
                raise ArffParseError(line_no, f"unexpected header line {line!r}")
            continue
        row_no += 1
        tokens = _split_fields(line, line_no)
        if len(tokens) != len(attributes):
            raise ArffParseError(
                line_no,
                f"row {row_no}: expected {len(attributes)} values, got {len(tokens)}",
            )
        rows.append(tuple(
            _parse_value(tok, attr, row_no, line_no)
            for tok, attr in zip(tokens, attributes)
        ))
    if relation is None:
        raise ArffParseError(1, "missing @relation")
    if not in_data:
        raise ArffParseError(1, "missing @data")
    return ArffDocument(relation, attributes, rows)


# --- serialization ---------------------------------------------------------

def _format_type(t: AttrType) -> str:
    if isinstance(t, Nominal):
        return "{" + ",".join(_quote(v) for v in t.values) + "}"
    if isinstance(t, Date):
        return f"date {_quote(t.pattern)}"
    if isinstance(t, Numeric):
        return "numeric"
    return "string"


def _format_value(value: Value, attr: AttributeDecl) -> str:
    if value is None:
        return "?"
    if isinstance(attr.type, Date):
        return _quote(format_date(value, attr.type.pattern))
    if isinstance(attr.type, Numeric):
        f = float(value)
        return str(int(f)) if f.is_integer() else repr(f)
    return _quote(value)


def serialize(doc: ArffDocument) -> str:
    """Canonical form: lowercase keywords, quoting only where needed."""
    lines = [f"@relation {_quote(doc.relation)}"]
    for attr in doc.attributes:
        lines.append(f"@attribute {_quote(attr.name)} {_format_type(attr.type)}")
    lines.append("@data")
    for i, row in enumerate(doc.rows):
        if len(row) != len(doc.attributes):
            raise ArffError(f"row {i}: {len(row)} values for {len(doc.attributes)} attributes")
        lines.append(",".join(_format_value(v, a) for v, a in zip(row, doc.attributes)))
    return "\n".join(lines) + "\n"


def string_to_nominal(doc: ArffDocument, attr_index: int) -> ArffDocument:
    """Convert a string attribute to nominal, values in first-appearance order."""
    attr = doc.attributes[attr_index]
    if not isinstance(attr.type, String):
        raise ArffError(f"attribute {attr.name!r} is not a string attribute")
    seen: list[str] = []
    for row in doc.rows:
        v = row[attr_index]
        if v is not None and v not in seen:
            seen.append(v)
    attrs = list(doc.attributes)
    attrs[attr_index] = AttributeDecl(attr.name, Nominal(tuple(seen)))
    return ArffDocument(doc.relation, attrs, list(doc.rows))


def read_file(path) -> ArffDocument:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def write_file(doc: ArffDocument, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(doc))
