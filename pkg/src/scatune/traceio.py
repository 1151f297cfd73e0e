"""Binary trace-file format (.xvlt).

Little-endian throughout:

    magic            4 bytes  "XVLT"
    version          u16      (currently 1)
    n_traces         u64
    samples_per_trace u16     (always 1 here)
    scenario_hash    32 bytes  sha256 of the scenario label
    master_seed      u64
    params_len       u32
    params block     params_len bytes of JSON (power params + scenario label)
    payload          n_traces * 16 ciphertext bytes,
                     then n_traces little-endian float64 power samples
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .power import PowerModelParams, TracePool

MAGIC = b"XVLT"
VERSION = 1
_HEADER_FMT = "<4sHQH32sQI"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)


class TraceFormatError(ValueError):
    """Corrupt, truncated or foreign trace file."""


def scenario_hash(label: str) -> bytes:
    return hashlib.sha256(label.encode("utf-8")).digest()


def header_size(pool: TracePool) -> int:
    return _HEADER_SIZE + len(_params_block(pool))


def _params_block(pool: TracePool) -> bytes:
    block = {
        "scenario_label": pool.scenario_label,
        "params": pool.params.to_dict(),
    }
    return json.dumps(block, sort_keys=True).encode("utf-8")


def write_pool(pool: TracePool, path: str | Path) -> None:
    params_block = _params_block(pool)
    header = struct.pack(
        _HEADER_FMT,
        MAGIC,
        VERSION,
        len(pool),
        1,
        scenario_hash(pool.scenario_label),
        int(pool.master_seed) & 0xFFFFFFFFFFFFFFFF,
        len(params_block),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(params_block)
        fh.write(pool.ciphertexts.tobytes())
        fh.write(pool.powers.astype("<f8").tobytes())


def read_pool(path: str | Path) -> TracePool:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER_SIZE:
        raise TraceFormatError(f"file too short for a trace header: {len(raw)} bytes")
    magic, version, n_traces, samples, _shash, master_seed, params_len = struct.unpack(
        _HEADER_FMT, raw[:_HEADER_SIZE]
    )
    if magic != MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}; not a trace file")
    if version != VERSION:
        raise TraceFormatError(f"unsupported trace-file version {version}")
    if samples != 1:
        raise TraceFormatError(f"unsupported samples_per_trace {samples}")
    if n_traces < 1:
        raise TraceFormatError("trace file declares an empty payload")
    offset = _HEADER_SIZE
    if len(raw) < offset + params_len:
        raise TraceFormatError("truncated params block")
    try:
        block = json.loads(raw[offset: offset + params_len].decode("utf-8"))
        label = block["scenario_label"]
        params = PowerModelParams.from_dict(block["params"])
    except (ValueError, KeyError, TypeError) as exc:
        raise TraceFormatError(f"corrupt params block: {exc}") from exc
    offset += params_len
    expected = n_traces * 16 + n_traces * 8
    if len(raw) - offset < expected:
        raise TraceFormatError(
            f"truncated payload: need {expected} bytes, have {len(raw) - offset}"
        )
    cts = np.frombuffer(raw, dtype=np.uint8, count=n_traces * 16, offset=offset)
    offset += n_traces * 16
    powers = np.frombuffer(raw, dtype="<f8", count=n_traces, offset=offset)
    return TracePool(
        ciphertexts=cts.reshape(n_traces, 16).copy(),
        powers=powers.astype(np.float64),
        scenario_label=label,
        master_seed=master_seed,
        params=params,
    )
