"""
Multi-block modes and message authentication on top of the AES core.
✓ PKCS#7 padding with full validation on removal
✓ ECB / CBC / CTR encrypt & decrypt (ECB, CTR and CBC-decrypt batched, CBC-encrypt on column words)
✓ AES-CMAC tags with subkeys from 128-bit doubling

ECB maps equal plaintext blocks to equal ciphertext blocks, which is why the
envelope layer always uses CBC with a fresh IV.
"""

import hmac
import struct
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .aes_core import (
    BLOCK_SIZE,
    KeySchedule,
    blocks_to_states,
    decrypt_blocks,
    decrypt_states,
    encrypt_blocks,
    encrypt_words,
    expand_key,
    states_to_blocks,
)
from .errors import FormatError, PaddingError, ParameterError

_MASK128 = (1 << 128) - 1
_CMAC_RB = 0x87
_WORDS = struct.Struct(">4I")


class CipherMode(str, Enum):
    ECB = "ECB"
    CBC = "CBC"
    CTR = "CTR"

    @property
    def needs_iv(self) -> bool:
        return self is not CipherMode.ECB


def _xor(a: bytes, b: bytes) -> bytes:
    return (np.frombuffer(a, dtype=np.uint8) ^ np.frombuffer(b, dtype=np.uint8)).tobytes()


# ---------- padding -------------------------------------------------------- #
def pad_pkcs7(msg: bytes) -> bytes:
    n = BLOCK_SIZE - len(msg) % BLOCK_SIZE
    return bytes(msg) + bytes([n]) * n


def unpad_pkcs7(data: bytes) -> bytes:
    if not data or len(data) % BLOCK_SIZE:
        raise PaddingError("padded data must be a positive multiple of the block size")
    n = data[-1]
    if not 1 <= n <= BLOCK_SIZE or data[-n:] != bytes([n]) * n:
        raise PaddingError("malformed PKCS#7 padding")
    return data[:-n]


# ---------- modes ---------------------------------------------------------- #
def _check_iv(mode: CipherMode, iv: Optional[bytes]) -> None:
    if not mode.needs_iv:
        return
    if iv is None:
        raise ParameterError(f"{mode.value} mode requires an IV")
    if len(iv) != BLOCK_SIZE:
        raise ParameterError(f"IV must be {BLOCK_SIZE} bytes, got {len(iv)}")


def ctr_keystream(ks: KeySchedule, counter: int, nblocks: int) -> bytes:
    """E(counter), E(counter+1), ... with the counter as a 128-bit big-endian integer."""
    counters = b"".join(
        ((counter + i) & _MASK128).to_bytes(BLOCK_SIZE, "big") for i in range(nblocks)
    )
    return encrypt_blocks(counters, ks)


def _ctr(data: bytes, ks: KeySchedule, iv: bytes) -> bytes:
    if not data:
        return b""
    nblocks = -(-len(data) // BLOCK_SIZE)
    stream = ctr_keystream(ks, int.from_bytes(iv, "big"), nblocks)
    return _xor(data, stream[:len(data)])


def _cbc_encrypt(padded: bytes, ks: KeySchedule, iv: bytes) -> bytes:
    c0, c1, c2, c3 = _WORDS.unpack(iv)
    out = bytearray(len(padded))
    for offset, (p0, p1, p2, p3) in zip(range(0, len(padded), BLOCK_SIZE), _WORDS.iter_unpack(padded)):
        c0, c1, c2, c3 = encrypt_words(p0 ^ c0, p1 ^ c1, p2 ^ c2, p3 ^ c3, ks)
        _WORDS.pack_into(out, offset, c0, c1, c2, c3)
    return bytes(out)


def _cbc_decrypt(ct: bytes, ks: KeySchedule, iv: bytes) -> bytes:
    states = blocks_to_states(ct)
    chain = np.concatenate([blocks_to_states(iv), states[:-1]])
    return states_to_blocks(decrypt_states(states, ks) ^ chain)


def mode_encrypt(msg: bytes, key: bytes, mode: CipherMode, iv: Optional[bytes] = None) -> bytes:
    mode = CipherMode(mode)
    _check_iv(mode, iv)
    ks = expand_key(key)
    if mode is CipherMode.CTR:
        return _ctr(bytes(msg), ks, iv)
    padded = pad_pkcs7(msg)
    if mode is CipherMode.ECB:
        return encrypt_blocks(padded, ks)
    return _cbc_encrypt(padded, ks, iv)


def mode_decrypt(ct: bytes, key: bytes, mode: CipherMode, iv: Optional[bytes] = None) -> bytes:
    mode = CipherMode(mode)
    _check_iv(mode, iv)
    ks = expand_key(key)
    if mode is CipherMode.CTR:
        return _ctr(bytes(ct), ks, iv)
    if not ct or len(ct) % BLOCK_SIZE:
        raise FormatError(f"{mode.value} ciphertext length {len(ct)} is not a positive block multiple")
    if mode is CipherMode.ECB:
        return unpad_pkcs7(decrypt_blocks(ct, ks))
    return unpad_pkcs7(_cbc_decrypt(bytes(ct), ks, iv))


# ---------- CMAC ----------------------------------------------------------- #
def _double(block: bytes) -> bytes:
    value = int.from_bytes(block, "big") << 1
    if value >> 128:
        value = (value & _MASK128) ^ _CMAC_RB
    return value.to_bytes(BLOCK_SIZE, "big")


def cmac_subkeys(ks: KeySchedule) -> Tuple[bytes, bytes]:
    k1 = _double(_WORDS.pack(*encrypt_words(0, 0, 0, 0, ks)))
    return k1, _double(k1)


def cmac_tag(msg: bytes, key: bytes) -> bytes:
    ks = expand_key(key)
    k1, k2 = cmac_subkeys(ks)

    msg = bytes(msg)
    full, rest = divmod(len(msg), BLOCK_SIZE)
    if msg and rest == 0:
        head, last = msg[:-BLOCK_SIZE], _xor(msg[-BLOCK_SIZE:], k1)
    else:
        tail = msg[full * BLOCK_SIZE:] + b"\x80"
        tail += bytes(BLOCK_SIZE - len(tail))
        head, last = msg[:full * BLOCK_SIZE], _xor(tail, k2)

    x0 = x1 = x2 = x3 = 0
    for m0, m1, m2, m3 in _WORDS.iter_unpack(head + last):
        x0, x1, x2, x3 = encrypt_words(m0 ^ x0, m1 ^ x1, m2 ^ x2, m3 ^ x3, ks)
    return _WORDS.pack(x0, x1, x2, x3)


def cmac_verify(msg: bytes, key: bytes, tag: bytes) -> bool:
    return hmac.compare_digest(cmac_tag(msg, key), bytes(tag))
