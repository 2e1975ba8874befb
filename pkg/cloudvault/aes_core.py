"""
AES block cipher (128-bit block, 128/192/256-bit keys).
✓ Column-major 4x4 state as a numpy uint8 array
✓ SubBytes / ShiftRows / MixColumns / AddRoundKey and their inverses
✓ Word-oriented key expansion with RotWord, SubWord and Rcon
✓ Single-block and batched encrypt/decrypt sharing the same transforms
✓ Table-driven word path (encrypt_words) for chained single blocks

Every transform accepts arrays whose last two axes are the 4x4 state, so a
stack of n states (shape (n, 4, 4)) runs through a round in one numpy call.
A lone block pays numpy's per-call overhead in every transform, so CBC
encryption and CMAC go through encrypt_words instead.
"""

from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import BlockSizeError, KeySizeError
from .gf256 import build_sbox, mul_table, xtime

BLOCK_SIZE = 16

AesState = np.ndarray


class KeySize(Enum):
    AES128 = (16, 10)
    AES192 = (24, 12)
    AES256 = (32, 14)

    @property
    def key_bytes(self) -> int:
        return self.value[0]

    @property
    def num_rounds(self) -> int:
        return self.value[1]

    @classmethod
    def for_key(cls, key: bytes) -> "KeySize":
        for size in cls:
            if size.key_bytes == len(key):
                return size
        raise KeySizeError(f"AES key must be 16, 24 or 32 bytes, got {len(key)}")


# ---------- state mapping -------------------------------------------------- #
def bytes_to_state(block: bytes) -> AesState:
    """byte i of the block lands in cell[i % 4][i // 4]"""
    if len(block) != BLOCK_SIZE:
        raise BlockSizeError(f"AES block must be {BLOCK_SIZE} bytes, got {len(block)}")
    return np.frombuffer(bytes(block), dtype=np.uint8).reshape(4, 4).T.copy()


def state_to_bytes(s: AesState) -> bytes:
    return np.ascontiguousarray(np.swapaxes(s, -1, -2)).tobytes()


def blocks_to_states(data: bytes) -> AesState:
    if len(data) % BLOCK_SIZE:
        raise BlockSizeError(f"data length {len(data)} is not a multiple of {BLOCK_SIZE}")
    return np.frombuffer(bytes(data), dtype=np.uint8).reshape(-1, 4, 4).transpose(0, 2, 1).copy()


states_to_blocks = state_to_bytes


# ---------- round transforms ----------------------------------------------- #
_SBOX = build_sbox()

_ROWS = np.arange(4).reshape(4, 1)
_SHIFT_LEFT = (np.arange(4).reshape(1, 4) + _ROWS) % 4
_SHIFT_RIGHT = (np.arange(4).reshape(1, 4) - _ROWS) % 4
# _ROW_ROTATIONS[k][r] == (r + k) % 4
_ROW_ROTATIONS = [(np.arange(4) + k) % 4 for k in range(4)]

_MIX = (2, 3, 1, 1)
_INV_MIX = (0x0E, 0x0B, 0x0D, 0x09)


def sub_bytes(s: AesState) -> AesState:
    return _SBOX.forward[s]


def inv_sub_bytes(s: AesState) -> AesState:
    return _SBOX.inverse[s]


def shift_rows(s: AesState) -> AesState:
    return s[..., _ROWS, _SHIFT_LEFT]


def inv_shift_rows(s: AesState) -> AesState:
    return s[..., _ROWS, _SHIFT_RIGHT]


def _mix(s: AesState, coefficients: Sequence[int]) -> AesState:
    out = np.zeros_like(s)
    for k, c in enumerate(coefficients):
        rotated = s[..., _ROW_ROTATIONS[k], :]
        out ^= rotated if c == 1 else mul_table(c)[rotated]
    return out


def mix_columns(s: AesState) -> AesState:
    return _mix(s, _MIX)


def inv_mix_columns(s: AesState) -> AesState:
    return _mix(s, _INV_MIX)


def add_round_key(s: AesState, rk: Union[bytes, AesState]) -> AesState:
    if isinstance(rk, (bytes, bytearray)):
        rk = bytes_to_state(rk)
    return s ^ rk


# ---------- key schedule --------------------------------------------------- #
def round_constants(count: int) -> List[int]:
    """Rcon[1..count]; Rcon[i] = x^(i-1) in GF(2^8)."""
    rcon, value = [], 0x01
    for _ in range(count):
        rcon.append(value)
        value = xtime(value)
    return rcon


class KeySchedule:
    def __init__(self, round_keys: Sequence[bytes], key_size: KeySize):
        if len(round_keys) != key_size.num_rounds + 1:
            raise KeySizeError(
                f"{key_size.name} needs {key_size.num_rounds + 1} round keys, got {len(round_keys)}"
            )
        self.round_keys: Tuple[bytes, ...] = tuple(round_keys)
        self.key_size = key_size
        states = np.stack([bytes_to_state(rk) for rk in self.round_keys])
        states.setflags(write=False)
        self.states = states
        # big-endian column words, 4 per round key
        self.words: Tuple[int, ...] = tuple(
            int.from_bytes(rk[i:i + 4], "big") for rk in self.round_keys for i in range(0, BLOCK_SIZE, 4)
        )

    @property
    def num_rounds(self) -> int:
        return self.key_size.num_rounds

    def __len__(self) -> int:
        return len(self.round_keys)


def expand_key(key: bytes, size: Optional[KeySize] = None) -> KeySchedule:
    key = bytes(key)
    if size is None:
        size = KeySize.for_key(key)
    elif len(key) != size.key_bytes:
        raise KeySizeError(f"{size.name} expects a {size.key_bytes}-byte key, got {len(key)}")

    nk = size.key_bytes // 4
    total_words = 4 * (size.num_rounds + 1)
    rcon = round_constants(total_words // nk)
    sbox = _SBOX.forward

    words = [list(key[4 * i:4 * i + 4]) for i in range(nk)]
    for i in range(nk, total_words):
        temp = list(words[i - 1])
        if i % nk == 0:
            temp = temp[1:] + temp[:1]
            temp = [int(sbox[b]) for b in temp]
            temp[0] ^= rcon[i // nk - 1]
        elif nk > 6 and i % nk == 4:
            temp = [int(sbox[b]) for b in temp]
        words.append([a ^ b for a, b in zip(words[i - nk], temp)])

    round_keys = [
        bytes(sum(words[4 * r:4 * r + 4], []))
        for r in range(size.num_rounds + 1)
    ]
    return KeySchedule(round_keys, size)


# ---------- cipher --------------------------------------------------------- #
def encrypt_states(s: AesState, ks: KeySchedule) -> AesState:
    rk = ks.states
    s = add_round_key(s, rk[0])
    for rnd in range(1, ks.num_rounds):
        s = add_round_key(mix_columns(shift_rows(sub_bytes(s))), rk[rnd])
    # final round without MixColumns
    return add_round_key(shift_rows(sub_bytes(s)), rk[ks.num_rounds])


def decrypt_states(s: AesState, ks: KeySchedule) -> AesState:
    rk = ks.states
    s = add_round_key(s, rk[ks.num_rounds])
    for rnd in range(ks.num_rounds - 1, 0, -1):
        s = inv_mix_columns(add_round_key(inv_sub_bytes(inv_shift_rows(s)), rk[rnd]))
    return add_round_key(inv_sub_bytes(inv_shift_rows(s)), rk[0])


def encrypt_block(block: bytes, ks: KeySchedule) -> bytes:
    return state_to_bytes(encrypt_states(bytes_to_state(block), ks))


def decrypt_block(block: bytes, ks: KeySchedule) -> bytes:
    return state_to_bytes(decrypt_states(bytes_to_state(block), ks))


def encrypt_blocks(data: bytes, ks: KeySchedule) -> bytes:
    if not data:
        return b""
    return states_to_blocks(encrypt_states(blocks_to_states(data), ks))


def decrypt_blocks(data: bytes, ks: KeySchedule) -> bytes:
    if not data:
        return b""
    return states_to_blocks(decrypt_states(blocks_to_states(data), ks))


# ---------- word-oriented single-block path -------------------------------- #
def _build_t_tables() -> Tuple[Tuple[int, ...], ...]:
    """Te0..Te3: SubBytes, ShiftRows and MixColumns folded into 32-bit column words."""
    sbox = _SBOX.forward.tolist()
    m2, m3 = mul_table(2).tolist(), mul_table(3).tolist()
    te0 = [(m2[s] << 24) | (s << 16) | (s << 8) | m3[s] for s in sbox]
    tables = [te0]
    for k in range(1, 4):
        shift = 8 * k
        tables.append([((w >> shift) | (w << (32 - shift))) & 0xFFFFFFFF for w in te0])
    return tuple(tuple(t) for t in tables)


_TE = _build_t_tables()
_SBOX_WORDS = tuple(
    tuple(s << shift for s in _SBOX.forward.tolist()) for shift in (24, 16, 8, 0)
)


def encrypt_words(s0: int, s1: int, s2: int, s3: int, ks: KeySchedule) -> Tuple[int, int, int, int]:
    """Encrypt one block given as four big-endian column words.

    Same cipher as encrypt_block without numpy, for chained modes (CBC encryption,
    CMAC) where blocks cannot be batched.
    """
    te0, te1, te2, te3 = _TE
    rk = ks.words
    s0 ^= rk[0]
    s1 ^= rk[1]
    s2 ^= rk[2]
    s3 ^= rk[3]
    k = 4
    for _ in range(ks.num_rounds - 1):
        t0 = te0[s0 >> 24] ^ te1[(s1 >> 16) & 255] ^ te2[(s2 >> 8) & 255] ^ te3[s3 & 255] ^ rk[k]
        t1 = te0[s1 >> 24] ^ te1[(s2 >> 16) & 255] ^ te2[(s3 >> 8) & 255] ^ te3[s0 & 255] ^ rk[k + 1]
        t2 = te0[s2 >> 24] ^ te1[(s3 >> 16) & 255] ^ te2[(s0 >> 8) & 255] ^ te3[s1 & 255] ^ rk[k + 2]
        t3 = te0[s3 >> 24] ^ te1[(s0 >> 16) & 255] ^ te2[(s1 >> 8) & 255] ^ te3[s2 & 255] ^ rk[k + 3]
        s0, s1, s2, s3 = t0, t1, t2, t3
        k += 4
    b0, b1, b2, b3 = _SBOX_WORDS
    return (
        b0[s0 >> 24] ^ b1[(s1 >> 16) & 255] ^ b2[(s2 >> 8) & 255] ^ b3[s3 & 255] ^ rk[k],
        b0[s1 >> 24] ^ b1[(s2 >> 16) & 255] ^ b2[(s3 >> 8) & 255] ^ b3[s0 & 255] ^ rk[k + 1],
        b0[s2 >> 24] ^ b1[(s3 >> 16) & 255] ^ b2[(s0 >> 8) & 255] ^ b3[s1 & 255] ^ rk[k + 2],
        b0[s3 >> 24] ^ b1[(s0 >> 16) & 255] ^ b2[(s1 >> 8) & 255] ^ b3[s2 & 255] ^ rk[k + 3],
    )
