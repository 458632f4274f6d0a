"""Reading and writing ``.qdn.json`` network definitions and result tables.

A document looks like::

    {
      "version": 1,
      "register_ranks": [3, 3],
      "initial": [0],
      "stages": [
        {"passthrough": "strict",
         "rules": [{"from": [0],
                    "to": [{"re": 0.6, "im": 0.0, "monomial": [1]},
                           {"re": 0.0, "im": 0.8, "monomial": [2]}]}]}
      ],
      "queries": "all"
    }

Parsing checks structure only (types, index ranges, rank chaining).
Whether the stages conserve probability is left to
:func:`qdn.stages.validate_program`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

from .errors import NetDefRangeError, NetDefSyntaxError, NetDefVersionError
from .register import MAX_RANK, ProbabilityTable
from .stages import PASSTHROUGH_MODES, STRICT, NetworkProgram, RewriteRule, StageMap

VERSION = 1
FORMATS = ("json", "csv")
CSV_COLUMNS = ("monomial", "basis_index", "amp_re", "amp_im", "probability")


@dataclass(frozen=True)
class TargetDoc:
    re: float
    im: float
    monomial: tuple


@dataclass(frozen=True)
class RuleDoc:
    source: tuple  # serialized as "from"
    to: tuple


@dataclass(frozen=True)
class StageDoc:
    rules: tuple
    passthrough: str = STRICT


@dataclass(frozen=True)
class NetDefDocument:
    version: int
    register_ranks: tuple
    initial: tuple
    stages: tuple
    queries: object = None  # None, "all", or tuple of monomials


# -- parsing -------------------------------------------------------------------


def _line_col(text, pos):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return f"line {line}, column {col}"


def _int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetDefSyntaxError(f"expected an integer, got {value!r}", where)
    return value


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NetDefSyntaxError(f"expected a number, got {value!r}", where)
    value = float(value)
    if not math.isfinite(value):
        raise NetDefSyntaxError("non-finite number", where)
    return value


def _list(value, where):
    if not isinstance(value, list):
        raise NetDefSyntaxError(f"expected a list, got {type(value).__name__}", where)
    return value


def _object(value, where, required, optional=()):
    if not isinstance(value, dict):
        raise NetDefSyntaxError(f"expected an object, got {type(value).__name__}", where)
    missing = [k for k in required if k not in value]
    if missing:
        raise NetDefSyntaxError(f"missing field {missing[0]!r}", where)
    unknown = sorted(set(value) - set(required) - set(optional))
    if unknown:
        raise NetDefSyntaxError(f"unknown field {unknown[0]!r}", where)
    return value


def _monomial(value, rank, where, rank_what):
    items = _list(value, where)
    out = []
    for i, k in enumerate(items):
        k = _int(k, f"{where}[{i}]")
        if not 0 <= k < rank:
            raise NetDefRangeError(f"qubit index {k} outside {rank_what} rank {rank}", f"{where}[{i}]")
        if out and k <= out[-1]:
            raise NetDefSyntaxError("monomial indices must be strictly ascending", f"{where}[{i}]")
        out.append(k)
    return tuple(out)


def parse_netdef(text) -> NetDefDocument:
    """Parse a document from ``str`` or UTF-8 ``bytes``."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NetDefSyntaxError(f"input is not UTF-8 ({exc.reason})", f"byte {exc.start}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetDefSyntaxError(exc.msg, _line_col(text, exc.pos)) from None

    raw = _object(raw, "document", ("version", "register_ranks", "initial", "stages"), ("queries",))
    version = _int(raw["version"], "version")
    if version != VERSION:
        raise NetDefVersionError(f"unsupported version {version}, expected {VERSION}", "version")

    ranks = []
    for i, r in enumerate(_list(raw["register_ranks"], "register_ranks")):
        r = _int(r, f"register_ranks[{i}]")
        if not 1 <= r <= MAX_RANK:
            raise NetDefRangeError(f"rank {r} outside [1, {MAX_RANK}]", f"register_ranks[{i}]")
        ranks.append(r)
    if not ranks:
        raise NetDefSyntaxError("at least one register rank is required", "register_ranks")

    initial = _monomial(raw["initial"], ranks[0], "initial", "initial register")

    raw_stages = _list(raw["stages"], "stages")
    if len(raw_stages) != len(ranks) - 1:
        raise NetDefRangeError(
            f"{len(raw_stages)} stages need {len(raw_stages) + 1} register ranks, got {len(ranks)}",
            "register_ranks",
        )
    stages = []
    for n, raw_stage in enumerate(raw_stages):
        where = f"stages[{n}]"
        raw_stage = _object(raw_stage, where, ("rules",), ("passthrough",))
        mode = raw_stage.get("passthrough", STRICT)
        if mode not in PASSTHROUGH_MODES:
            raise NetDefSyntaxError(f"passthrough must be one of {PASSTHROUGH_MODES}", f"{where}.passthrough")
        rules = []
        seen = set()
        for i, raw_rule in enumerate(_list(raw_stage["rules"], f"{where}.rules")):
            rw = f"{where}.rules[{i}]"
            raw_rule = _object(raw_rule, rw, ("from", "to"))
            source = _monomial(raw_rule["from"], ranks[n], f"{rw}.from", "input")
            if len(source) != 1:
                raise NetDefSyntaxError("rule source must be exactly one generator", f"{rw}.from")
            if source in seen:
                raise NetDefSyntaxError(f"generator {source[0]} has two rules", f"{rw}.from")
            seen.add(source)
            targets = []
            for t, raw_target in enumerate(_list(raw_rule["to"], f"{rw}.to")):
                tw = f"{rw}.to[{t}]"
                raw_target = _object(raw_target, tw, ("re", "im", "monomial"))
                targets.append(
                    TargetDoc(
                        _number(raw_target["re"], f"{tw}.re"),
                        _number(raw_target["im"], f"{tw}.im"),
                        _monomial(raw_target["monomial"], ranks[n + 1], f"{tw}.monomial", "output"),
                    )
                )
            if not targets:
                raise NetDefSyntaxError("rule has no targets", f"{rw}.to")
            if len({tg.monomial for tg in targets}) != len(targets):
                raise NetDefSyntaxError("rule repeats a target monomial", f"{rw}.to")
            rules.append(RuleDoc(source, tuple(targets)))
        stages.append(StageDoc(tuple(rules), mode))

    queries = raw.get("queries")
    if queries is not None and queries != "all":
        queries = tuple(
            _monomial(q, ranks[-1], f"queries[{i}]", "final register")
            for i, q in enumerate(_list(queries, "queries"))
        )
    return NetDefDocument(version, tuple(ranks), initial, tuple(stages), queries)


# -- serialization ---------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".eEn"):
        s += ".0"
    return s


def _ints(xs):
    return "[" + ", ".join(str(int(x)) for x in xs) + "]"


def serialize_netdef(doc: NetDefDocument) -> str:
    """Canonical JSON text; floats carry 17 significant digits."""
    lines = ["{", f'  "version": {doc.version},', f'  "register_ranks": {_ints(doc.register_ranks)},']
    lines.append(f'  "initial": {_ints(doc.initial)},')
    if not doc.stages:
        lines.append('  "stages": []' + ("," if doc.queries is not None else ""))
    else:
        lines.append('  "stages": [')
        for n, stage in enumerate(doc.stages):
            lines.append("    {")
            lines.append(f'      "passthrough": {json.dumps(stage.passthrough)},')
            if not stage.rules:
                lines.append('      "rules": []')
            else:
                lines.append('      "rules": [')
                for i, rule in enumerate(stage.rules):
                    lines.append(f'        {{"from": {_ints(rule.source)}, "to": [')
                    for t, tg in enumerate(rule.to):
                        sep = "," if t < len(rule.to) - 1 else ""
                        lines.append(
                            f'          {{"re": {_fmt_float(tg.re)}, "im": {_fmt_float(tg.im)}, '
                            f'"monomial": {_ints(tg.monomial)}}}{sep}'
                        )
                    lines.append("        ]}" + ("," if i < len(stage.rules) - 1 else ""))
                lines.append("      ]")
            lines.append("    }" + ("," if n < len(doc.stages) - 1 else ""))
        lines.append("  ]" + ("," if doc.queries is not None else ""))
    if doc.queries == "all":
        lines.append('  "queries": "all"')
    elif doc.queries is not None:
        lines.append('  "queries": [' + ", ".join(_ints(q) for q in doc.queries) + "]")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- conversion to and from programs -----------------------------------------------


def compile_netdef(doc: NetDefDocument) -> NetworkProgram:
    ranks = doc.register_ranks
    stages = []
    for n, stage in enumerate(doc.stages):
        rules = {
            rule.source[0]: RewriteRule(
                rule.source[0], tuple((complex(t.re, t.im), t.monomial) for t in rule.to)
            )
            for rule in stage.rules
        }
        stages.append(StageMap(ranks[n], ranks[n + 1], rules, stage.passthrough))
    return NetworkProgram(doc.initial, tuple(stages), ranks[0])


def to_document(program: NetworkProgram, queries=None) -> NetDefDocument:
    stages = []
    for stage in program.stages:
        rules = tuple(
            RuleDoc(
                (k,),
                tuple(TargetDoc(float(c.real), float(c.imag), tuple(m)) for c, m in rule.targets),
            )
            for k, rule in stage.rules.items()
        )
        stages.append(StageDoc(rules, stage.passthrough))
    return NetDefDocument(VERSION, tuple(program.ranks), program.initial, tuple(stages), queries)


# -- results -------------------------------------------------------------------------


def emit_results(table: ProbabilityTable, fmt: str = "json") -> bytes:
    """Deterministic rendering of a results table, rows sorted by basis index."""
    entries = sorted(table.entries, key=lambda e: e.basis_index)
    if fmt == "json":
        rows = [
            "    {"
            f'"monomial": {_ints(e.monomial)}, "basis_index": {e.basis_index}, '
            f'"amp_re": {_fmt_float(e.amplitude.real)}, "amp_im": {_fmt_float(e.amplitude.imag)}, '
            f'"probability": {_fmt_float(e.probability)}'
            "}"
            for e in entries
        ]
        body = ",\n".join(rows)
        text = f'{{\n  "register_rank": {table.rank},\n  "outcomes": [\n{body}\n  ]\n}}\n'
        if not rows:
            text = f'{{\n  "register_rank": {table.rank},\n  "outcomes": []\n}}\n'
        return text.encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for e in entries:
            writer.writerow(
                [
                    " ".join(str(k) for k in e.monomial),
                    e.basis_index,
                    _fmt_float(e.amplitude.real),
                    _fmt_float(e.amplitude.imag),
                    _fmt_float(e.probability),
                ]
            )
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown results format {fmt!r}; choose from {FORMATS}")
