"""Minimal VCD (value change dump) support: parse the subset emitted by
zero-delay register-level simulations, count per-clock-edge toggles for named
signal groups, and turn those toggle counts into a trace pool.

Supported: $timescale, $scope/$upscope, $var (scalar and vector), $comment,
$date, $version, $enddefinitions, $dumpvars/$dumpall/$dumpon/$dumpoff,
'#' timestamps, scalar values 0/1/x/z and binary vectors ('b...').  Real
values and unknown directives are skipped with a warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fnmatch import fnmatchcase

import numpy as np

from .power import (
    _STREAM_ASSIGNMENT,
    _STREAM_NOISE,
    PowerModelParams,
    TracePool,
    derive_stream,
    trace_power,
)
from .tuning import TuningScenario, sample_assignment


class VcdError(ValueError):
    """Malformed or unsupported VCD input."""


@dataclass
class VcdVar:
    name: str  # hierarchical (scope-qualified) name
    width: int


@dataclass
class VcdDocument:
    timescale: tuple[int, str]
    id_to_signal: dict[str, VcdVar]
    change_events: list[tuple[int, str, str]]  # (timestamp, id, new per-bit value)


_SKIPPED_VALUE_PREFIXES = ("r", "R", "s", "S")  # real / string values


def parse_vcd(text: str | bytes) -> VcdDocument:
    """Parse a header-complete VCD document."""
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    lines = text.splitlines()
    pos = 0

    def err(lineno: int, msg: str) -> VcdError:
        return VcdError(f"line {lineno + 1}: {msg}")

    # Header: collect tokens per directive until the matching $end.
    timescale: tuple[int, str] = (1, "ns")
    id_to_signal: dict[str, VcdVar] = {}
    scope_stack: list[str] = []
    header_done = False
    while pos < len(lines) and not header_done:
        tokens = lines[pos].split()
        lineno = pos
        pos += 1
        if not tokens:
            continue
        if not tokens[0].startswith("$"):
            raise err(lineno, f"expected a directive in the header, got {tokens[0]!r}")
        directive = tokens[0]
        body = tokens[1:]
        while "$end" not in body:
            if pos >= len(lines):
                raise err(lineno, f"{directive} not terminated by $end")
            body.extend(lines[pos].split())
            pos += 1
        body = body[: body.index("$end")]

        if directive == "$timescale":
            joined = "".join(body)
            mag = "".join(ch for ch in joined if ch.isdigit())
            unit = joined[len(mag):]
            if not mag or unit not in ("s", "ms", "us", "ns", "ps", "fs"):
                raise err(lineno, f"bad $timescale {' '.join(body)!r}")
            timescale = (int(mag), unit)
        elif directive == "$scope":
            if len(body) < 2:
                raise err(lineno, "bad $scope")
            scope_stack.append(body[1])
        elif directive == "$upscope":
            if scope_stack:
                scope_stack.pop()
        elif directive == "$var":
            if len(body) < 4:
                raise err(lineno, f"bad $var: {' '.join(body)!r}")
            try:
                width = int(body[1])
            except ValueError:
                raise err(lineno, f"bad $var width {body[1]!r}") from None
            code = body[2]
            ref = body[3]  # trailing bit-range tokens ([7:0]) are dropped
            name = ".".join(scope_stack + [ref]) if scope_stack else ref
            id_to_signal[code] = VcdVar(name=name, width=width)
        elif directive == "$enddefinitions":
            header_done = True
        elif directive in ("$comment", "$date", "$version"):
            pass
        else:
            warnings.warn(f"skipping unsupported VCD directive {directive}")
    if not header_done:
        raise VcdError("missing $enddefinitions; header incomplete")

    # Value-change section.
    events: list[tuple[int, str, str]] = []
    current_time = 0
    seen_time = False
    for lineno in range(pos, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        if line.startswith("$"):
            # $dumpvars / $dumpall / ... and their closing $end markers.
            continue
        if line.startswith("#"):
            try:
                t = int(line[1:])
            except ValueError:
                raise err(lineno, f"bad timestamp {line!r}") from None
            if seen_time and t < current_time:
                raise err(lineno, f"timestamp {t} decreases (last was {current_time})")
            current_time = t
            seen_time = True
            continue
        if line[0] in "01xXzZ":
            code = line[1:].split()[0] if len(line) > 1 else ""
            if not code:
                raise err(lineno, f"scalar value without identifier: {line!r}")
            _require_known(code, id_to_signal, lineno)
            events.append((current_time, code, line[0].lower()))
        elif line[0] in ("b", "B"):
            parts = line.split()
            if len(parts) != 2:
                raise err(lineno, f"truncated vector value: {line!r}")
            value, code = parts[0][1:].lower(), parts[1]
            if not value or any(ch not in "01xz" for ch in value):
                raise err(lineno, f"bad vector value {parts[0]!r}")
            _require_known(code, id_to_signal, lineno)
            width = id_to_signal[code].width
            events.append((current_time, code, _extend(value, width)))
        elif line[0] in _SKIPPED_VALUE_PREFIXES:
            warnings.warn(f"skipping unsupported value change {line!r}")
        else:
            raise err(lineno, f"unrecognized value change {line!r}")
    return VcdDocument(
        timescale=timescale, id_to_signal=id_to_signal, change_events=events
    )


def _require_known(code: str, id_to_signal: dict, lineno: int) -> None:
    if code not in id_to_signal:
        raise VcdError(f"line {lineno + 1}: undeclared identifier code {code!r}")


def _extend(value: str, width: int) -> str:
    """Left-extend a vector value to its declared width (IEEE rules: pad with
    0, or with x/z when the leftmost bit is x/z)."""
    if len(value) >= width:
        return value[-width:]
    pad = value[0] if value[0] in "xz" else "0"
    return pad * (width - len(value)) + value


def serialize_vcd(doc: VcdDocument) -> str:
    """Emit the supported subset back out; parse(serialize(doc)) reproduces
    the same signals and event list."""
    out = [f"$timescale {doc.timescale[0]}{doc.timescale[1]} $end"]
    for code, var in doc.id_to_signal.items():
        out.append(f"$var wire {var.width} {code} {var.name} $end")
    out.append("$enddefinitions $end")
    last_time: int | None = None
    for t, code, value in doc.change_events:
        if t != last_time:
            out.append(f"#{t}")
            last_time = t
        if len(value) == 1 and doc.id_to_signal[code].width == 1:
            out.append(f"{value}{code}")
        else:
            out.append(f"b{value} {code}")
    return "\n".join(out) + "\n"


@dataclass
class ToggleProfile:
    per_cycle: list[tuple[int, dict[str, int]]]  # (cycle index, group -> toggles)
    group_patterns: dict[str, list[str]]

    def counts(self, group: str) -> list[int]:
        return [c[group] for _, c in self.per_cycle]


def _match_group(doc: VcdDocument, patterns: list[str]) -> set[str]:
    return {
        code
        for code, var in doc.id_to_signal.items()
        if any(fnmatchcase(var.name, p) for p in patterns)
    }


def extract_toggles(
    doc: VcdDocument,
    clock_signal: str,
    groups: dict[str, list[str]],
) -> ToggleProfile:
    """Count 0<->1 bit transitions per group at each rising clock edge.

    Zero-delay convention: every change sharing the rising-edge timestamp
    belongs to that cycle.  Multiple changes of one signal at one timestamp
    count as the net old-to-new transition, so same-timestamp record order is
    irrelevant.  Transitions involving x/z are ignored.
    """
    clock_ids = [c for c, v in doc.id_to_signal.items() if v.name == clock_signal]
    if not clock_ids:
        available = sorted(v.name for v in doc.id_to_signal.values())
        raise VcdError(f"clock signal {clock_signal!r} not found; available: {available}")
    clock_id = clock_ids[0]

    group_ids: dict[str, set[str]] = {}
    for group, patterns in groups.items():
        ids = _match_group(doc, patterns) - {clock_id}
        if not ids:
            available = sorted(v.name for v in doc.id_to_signal.values())
            raise VcdError(
                f"group {group!r} patterns {patterns} match no signals; available: {available}"
            )
        group_ids[group] = ids

    values = {code: "x" * var.width for code, var in doc.id_to_signal.items()}
    per_cycle: list[tuple[int, dict[str, int]]] = []
    cycle = 0
    i = 0
    events = doc.change_events
    while i < len(events):
        t = events[i][0]
        batch: dict[str, str] = {}
        while i < len(events) and events[i][0] == t:
            batch[events[i][1]] = events[i][2]  # net change: last value wins
            i += 1
        rising = (
            clock_id in batch
            and values[clock_id] == "0"
            and batch[clock_id] == "1"
        )
        if rising:
            counts = {}
            for group, ids in group_ids.items():
                total = 0
                for code in ids & set(batch):
                    total += _bit_toggles(values[code], batch[code])
                counts[group] = total
            per_cycle.append((cycle, counts))
            cycle += 1
        values.update(batch)
    return ToggleProfile(per_cycle=per_cycle, group_patterns=dict(groups))


def _bit_toggles(old: str, new: str) -> int:
    if len(old) != len(new):
        width = max(len(old), len(new))
        old, new = _extend(old, width), _extend(new, width)
    return sum(
        1 for a, b in zip(old, new) if a in "01" and b in "01" and a != b
    )


def total_toggles(doc: VcdDocument, patterns: list[str]) -> int:
    """Naive full-replay oracle: total bit transitions of matched signals over
    the whole document, regardless of clock alignment."""
    ids = _match_group(doc, patterns)
    values = {code: "x" * doc.id_to_signal[code].width for code in ids}
    total = 0
    i = 0
    events = doc.change_events
    while i < len(events):
        t = events[i][0]
        batch = {}
        while i < len(events) and events[i][0] == t:
            if events[i][1] in ids:
                batch[events[i][1]] = events[i][2]
            i += 1
        for code, new in batch.items():
            total += _bit_toggles(values[code], new)
            values[code] = new
    return total


def _pseudo_hd(total: int) -> np.ndarray:
    """Spread a group toggle count over the 16 state bytes, filling bytes in
    order; matches trace_power's first-k-bits attribution."""
    if not 0 <= total <= 128:
        raise VcdError(f"toggle count {total} outside 0..128 for a 128-bit group")
    hd = np.zeros(16, dtype=np.uint8)
    full, rem = divmod(total, 8)
    hd[:full] = 8
    if full < 16:
        hd[full] = rem
    return hd


def toggles_to_pool(
    profile: ToggleProfile,
    ciphertexts: np.ndarray,
    scenario: TuningScenario,
    params: PowerModelParams,
    seed: int,
    cycle_stride: int = 1,
    cycle_offset: int = 0,
    text_group: str = "text",
) -> TracePool:
    """Convert per-cycle toggle counts into a trace pool via the standard
    power formula, one designated cycle per encryption.

    Assignment and noise streams are derived exactly as in synthesize_pool,
    so an HD-equivalent profile reproduces its power values."""
    if text_group not in profile.group_patterns:
        raise VcdError(f"profile has no group {text_group!r}")
    cts = np.ascontiguousarray(ciphertexts, dtype=np.uint8)
    if cts.ndim != 2 or cts.shape[1] != 16:
        raise VcdError("ciphertexts must have shape (N, 16)")
    selected = profile.per_cycle[cycle_offset::cycle_stride]
    if len(selected) != len(cts):
        raise VcdError(
            f"cycle selection yields {len(selected)} encryptions but "
            f"{len(cts)} ciphertexts were provided (stride/offset mismatch?)"
        )
    powers = np.empty(len(cts), dtype=np.float64)
    for i, (_, counts) in enumerate(selected):
        hd = _pseudo_hd(counts[text_group])
        assign = sample_assignment(scenario, derive_stream(seed, i, _STREAM_ASSIGNMENT))
        powers[i] = trace_power(hd, assign, params, derive_stream(seed, i, _STREAM_NOISE))
    return TracePool(
        ciphertexts=cts,
        powers=powers,
        scenario_label=scenario.label,
        master_seed=seed,
        params=params,
    )
