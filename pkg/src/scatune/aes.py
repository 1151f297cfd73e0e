"""AES-128 (ECB, encryption only) exposing per-round register states.

The state is kept as 16 flat bytes in standard column-major order, i.e.
byte i sits at row i % 4, column i // 4.  This is exactly the order in
which plaintext/ciphertext bytes enter and leave the cipher, so no extra
transposition is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass

SBOX = bytes((
    0x63, 0x7C, 0x77, 0x7B, 0xF2, 0x6B, 0x6F, 0xC5, 0x30, 0x01, 0x67, 0x2B, 0xFE, 0xD7, 0xAB, 0x76,
    0xCA, 0x82, 0xC9, 0x7D, 0xFA, 0x59, 0x47, 0xF0, 0xAD, 0xD4, 0xA2, 0xAF, 0x9C, 0xA4, 0x72, 0xC0,
    0xB7, 0xFD, 0x93, 0x26, 0x36, 0x3F, 0xF7, 0xCC, 0x34, 0xA5, 0xE5, 0xF1, 0x71, 0xD8, 0x31, 0x15,
    0x04, 0xC7, 0x23, 0xC3, 0x18, 0x96, 0x05, 0x9A, 0x07, 0x12, 0x80, 0xE2, 0xEB, 0x27, 0xB2, 0x75,
    0x09, 0x83, 0x2C, 0x1A, 0x1B, 0x6E, 0x5A, 0xA0, 0x52, 0x3B, 0xD6, 0xB3, 0x29, 0xE3, 0x2F, 0x84,
    0x53, 0xD1, 0x00, 0xED, 0x20, 0xFC, 0xB1, 0x5B, 0x6A, 0xCB, 0xBE, 0x39, 0x4A, 0x4C, 0x58, 0xCF,
    0xD0, 0xEF, 0xAA, 0xFB, 0x43, 0x4D, 0x33, 0x85, 0x45, 0xF9, 0x02, 0x7F, 0x50, 0x3C, 0x9F, 0xA8,
    0x51, 0xA3, 0x40, 0x8F, 0x92, 0x9D, 0x38, 0xF5, 0xBC, 0xB6, 0xDA, 0x21, 0x10, 0xFF, 0xF3, 0xD2,
    0xCD, 0x0C, 0x13, 0xEC, 0x5F, 0x97, 0x44, 0x17, 0xC4, 0xA7, 0x7E, 0x3D, 0x64, 0x5D, 0x19, 0x73,
    0x60, 0x81, 0x4F, 0xDC, 0x22, 0x2A, 0x90, 0x88, 0x46, 0xEE, 0xB8, 0x14, 0xDE, 0x5E, 0x0B, 0xDB,
    0xE0, 0x32, 0x3A, 0x0A, 0x49, 0x06, 0x24, 0x5C, 0xC2, 0xD3, 0xAC, 0x62, 0x91, 0x95, 0xE4, 0x79,
    0xE7, 0xC8, 0x37, 0x6D, 0x8D, 0xD5, 0x4E, 0xA9, 0x6C, 0x56, 0xF4, 0xEA, 0x65, 0x7A, 0xAE, 0x08,
    0xBA, 0x78, 0x25, 0x2E, 0x1C, 0xA6, 0xB4, 0xC6, 0xE8, 0xDD, 0x74, 0x1F, 0x4B, 0xBD, 0x8B, 0x8A,
    0x70, 0x3E, 0xB5, 0x66, 0x48, 0x03, 0xF6, 0x0E, 0x61, 0x35, 0x57, 0xB9, 0x86, 0xC1, 0x1D, 0x9E,
    0xE1, 0xF8, 0x98, 0x11, 0x69, 0xD9, 0x8E, 0x94, 0x9B, 0x1E, 0x87, 0xE9, 0xCE, 0x55, 0x28, 0xDF,
    0x8C, 0xA1, 0x89, 0x0D, 0xBF, 0xE6, 0x42, 0x68, 0x41, 0x99, 0x2D, 0x0F, 0xB0, 0x54, 0xBB, 0x16,
))

INV_SBOX = bytes(SBOX.index(i) for i in range(256))

RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)

# ShiftRows as a permutation of flat byte indices: shifted[i] = state[SHIFT_ROWS[i]].
SHIFT_ROWS = tuple((i % 4) + 4 * ((i // 4 + i % 4) % 4) for i in range(16))
INV_SHIFT_ROWS = tuple((i % 4) + 4 * ((i // 4 - i % 4) % 4) for i in range(16))


@dataclass(frozen=True)
class RoundTrace:
    """The 11 register states of one encryption: initial AddRoundKey output
    through the final ciphertext."""

    states: tuple[bytes, ...]

    def __post_init__(self) -> None:
        if len(self.states) != 11:
            raise ValueError(f"expected 11 round states, got {len(self.states)}")

    @property
    def ciphertext(self) -> bytes:
        return self.states[10]


def _check_block(data: bytes, what: str) -> bytes:
    data = bytes(data)
    if len(data) != 16:
        raise ValueError(f"{what} must be exactly 16 bytes, got {len(data)}")
    return data


def _xtime(a: int) -> int:
    a <<= 1
    if a & 0x100:
        a ^= 0x11B
    return a & 0xFF


def _sub_bytes(s: bytes) -> bytes:
    return bytes(SBOX[b] for b in s)


def _shift_rows(s: bytes) -> bytes:
    return bytes(s[SHIFT_ROWS[i]] for i in range(16))


def _mix_columns(s: bytes) -> bytes:
    out = bytearray(16)
    for c in range(0, 16, 4):
        a0, a1, a2, a3 = s[c], s[c + 1], s[c + 2], s[c + 3]
        out[c] = _xtime(a0) ^ _xtime(a1) ^ a1 ^ a2 ^ a3
        out[c + 1] = a0 ^ _xtime(a1) ^ _xtime(a2) ^ a2 ^ a3
        out[c + 2] = a0 ^ a1 ^ _xtime(a2) ^ _xtime(a3) ^ a3
        out[c + 3] = _xtime(a0) ^ a0 ^ a1 ^ a2 ^ _xtime(a3)
    return bytes(out)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def expand_key(key: bytes) -> tuple[bytes, ...]:
    """AES-128 key schedule: the 11 round keys, each 16 bytes."""
    key = _check_block(key, "key")
    words = [key[4 * i: 4 * i + 4] for i in range(4)]
    for i in range(4, 44):
        temp = words[i - 1]
        if i % 4 == 0:
            temp = temp[1:] + temp[:1]
            temp = bytes(SBOX[b] for b in temp)
            temp = bytes((temp[0] ^ RCON[i // 4 - 1],)) + temp[1:]
        words.append(_xor(words[i - 4], temp))
    return tuple(b"".join(words[4 * r: 4 * r + 4]) for r in range(11))


def last_round_key(key: bytes) -> bytes:
    """The round-10 subkey, the target recovered by last-round CPA."""
    return expand_key(key)[10]


def invert_key_schedule(round10_key: bytes) -> bytes:
    """Recover the master key from the round-10 subkey."""
    k10 = _check_block(round10_key, "round-10 key")
    words: list[bytes | None] = [None] * 44
    for i in range(4):
        words[40 + i] = k10[4 * i: 4 * i + 4]
    for i in range(43, 3, -1):
        temp = words[i - 1]
        assert temp is not None and words[i] is not None
        if i % 4 == 0:
            temp = temp[1:] + temp[:1]
            temp = bytes(SBOX[b] for b in temp)
            temp = bytes((temp[0] ^ RCON[i // 4 - 1],)) + temp[1:]
        words[i - 4] = _xor(words[i], temp)  # type: ignore[arg-type]
    return b"".join(words[i] for i in range(4))  # type: ignore[misc]


def encrypt_block(key: bytes, plaintext: bytes) -> RoundTrace:
    """Encrypt one block, recording the register state after each round's
    AddRoundKey.  states[0] is plaintext ^ K0; states[10] is the ciphertext."""
    plaintext = _check_block(plaintext, "plaintext")
    round_keys = expand_key(key)
    state = _xor(plaintext, round_keys[0])
    states = [state]
    for r in range(1, 10):
        state = _sub_bytes(state)
        state = _shift_rows(state)
        state = _mix_columns(state)
        state = _xor(state, round_keys[r])
        states.append(state)
    state = _sub_bytes(state)
    state = _shift_rows(state)
    state = _xor(state, round_keys[10])
    states.append(state)
    return RoundTrace(states=tuple(states))


def forward_last_round_byte(state_byte: int, key_byte: int) -> int:
    """SubBytes + AddRoundKey on a single byte (ShiftRows only moves bytes)."""
    return SBOX[state_byte] ^ key_byte


def invert_last_round_byte(cipher_byte: int, key_guess: int, byte_index: int) -> int:
    """Undo the last round for one ciphertext byte under a key guess.

    Returns the pre-final-round state byte.  ``byte_index`` is the ciphertext
    position; the returned value lives in register ``SHIFT_ROWS[byte_index]``
    (the pre-ShiftRows position), which is where the HD hypothesis must be
    formed.  Use :func:`register_position` for that mapping.
    """
    if not 0 <= byte_index < 16:
        raise ValueError(f"byte_index must be in 0..15, got {byte_index}")
    return INV_SBOX[(cipher_byte ^ key_guess) & 0xFF]


def register_position(byte_index: int) -> int:
    """Register holding the state byte recovered from ciphertext position
    ``byte_index`` by :func:`invert_last_round_byte`."""
    if not 0 <= byte_index < 16:
        raise ValueError(f"byte_index must be in 0..15, got {byte_index}")
    return SHIFT_ROWS[byte_index]
