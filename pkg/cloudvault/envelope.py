"""
Hybrid ciphertext envelope (".cvlt" files and CSP objects).
✓ header ‖ RSA-wrapped CEK‖MK ‖ AES-CBC ciphertext ‖ AES-CMAC tag
✓ Fresh CEK, MK and IV from the DRBG for every seal
✓ Opening routes by key fingerprint across every account and generation
✓ Padding, unwrap and tag failures surface as one IntegrityError

Layout (all integers big-endian):
    magic "CVLT" | version u8 | suite u8 | fingerprint 8 | wrapped_len u16 | iv 16 | ct_len u64
    wrapped_keys[wrapped_len] | ciphertext[ct_len] | tag 16
"""

import struct
from enum import IntEnum
from typing import NamedTuple, Optional

from .aes_core import BLOCK_SIZE
from .block_modes import CipherMode, cmac_tag, cmac_verify, mode_decrypt, mode_encrypt
from .errors import (
    CapacityError,
    FormatError,
    IntegrityError,
    KeyNotFoundError,
    PaddingError,
    UnwrapError,
)
from .rng import DrbgState
from .rsa import WRAP_OVERHEAD, unwrap_key, wrap_key
from .schemas import Keyring, RsaPrivateKey, RsaPublicKey

MAGIC = b"CVLT"
VERSION = 0x01
MAC_KEY_BYTES = 16
TAG_BYTES = 16
FINGERPRINT_BYTES = 8

_HEADER = struct.Struct(">4sBB8sH16sQ")
HEADER_BYTES = _HEADER.size  # 40


class Suite(IntEnum):
    AES256_CBC_CMAC128 = 0x01
    AES128_CBC_CMAC128 = 0x02
    AES192_CBC_CMAC128 = 0x03

    @property
    def cek_bytes(self) -> int:
        return {0x01: 32, 0x02: 16, 0x03: 24}[self.value]

    @property
    def wrapped_payload_bytes(self) -> int:
        return self.cek_bytes + MAC_KEY_BYTES


DEFAULT_SUITE = Suite.AES256_CBC_CMAC128


class EnvelopeHeader(NamedTuple):
    suite: Suite
    key_fingerprint: bytes
    wrapped_len: int
    iv: bytes
    ct_len: int
    magic: bytes = MAGIC
    version: int = VERSION

    def pack(self) -> bytes:
        return _HEADER.pack(
            self.magic, self.version, int(self.suite), self.key_fingerprint,
            self.wrapped_len, self.iv, self.ct_len,
        )


class SealedObject(NamedTuple):
    header: EnvelopeHeader
    wrapped_keys: bytes
    ciphertext: bytes
    tag: bytes

    @property
    def authenticated_bytes(self) -> bytes:
        return self.header.pack() + self.wrapped_keys + self.ciphertext

    def to_bytes(self) -> bytes:
        return self.authenticated_bytes + self.tag


def fingerprint(pub: RsaPublicKey) -> bytes:
    """First 8 bytes of CMAC(zero key, n ‖ 0x00 ‖ e) over minimal big-endian encodings."""
    n = pub.n.to_bytes((pub.n.bit_length() + 7) // 8, "big")
    e = pub.e.to_bytes((pub.e.bit_length() + 7) // 8, "big")
    return cmac_tag(n + b"\x00" + e, bytes(BLOCK_SIZE))[:FINGERPRINT_BYTES]


def parse(blob: bytes) -> SealedObject:
    blob = bytes(blob)
    if len(blob) < HEADER_BYTES:
        raise FormatError("truncated envelope header")
    magic, version, suite, fp, wrapped_len, iv, ct_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError("not a CVLT envelope")
    if version != VERSION:
        raise FormatError(f"unsupported envelope version {version}")
    try:
        suite = Suite(suite)
    except ValueError:
        raise FormatError(f"unsupported cipher suite 0x{suite:02x}") from None
    if ct_len == 0 or ct_len % BLOCK_SIZE:
        raise FormatError("ciphertext length is not a positive block multiple")
    if len(blob) != HEADER_BYTES + wrapped_len + ct_len + TAG_BYTES:
        raise FormatError("envelope length does not match its header")

    header = EnvelopeHeader(suite=suite, key_fingerprint=fp, wrapped_len=wrapped_len, iv=iv, ct_len=ct_len)
    body = blob[HEADER_BYTES:]
    return SealedObject(
        header=header,
        wrapped_keys=body[:wrapped_len],
        ciphertext=body[wrapped_len:wrapped_len + ct_len],
        tag=body[wrapped_len + ct_len:],
    )


def seal(plaintext: bytes, pub: RsaPublicKey, rng: DrbgState, suite: Suite = DEFAULT_SUITE) -> bytes:
    suite = Suite(suite)
    if pub.modulus_bytes < suite.wrapped_payload_bytes + WRAP_OVERHEAD:
        raise CapacityError(f"a {pub.bits}-bit key is too small to wrap the content keys")

    cek = rng.generate(suite.cek_bytes)
    mk = rng.generate(MAC_KEY_BYTES)
    iv = rng.generate(BLOCK_SIZE)
    ciphertext = mode_encrypt(plaintext, cek, CipherMode.CBC, iv)
    wrapped = wrap_key(cek + mk, pub, rng)

    header = EnvelopeHeader(
        suite=suite,
        key_fingerprint=fingerprint(pub),
        wrapped_len=len(wrapped),
        iv=iv,
        ct_len=len(ciphertext),
    )
    sealed = SealedObject(header=header, wrapped_keys=wrapped, ciphertext=ciphertext, tag=b"")
    tag = cmac_tag(sealed.authenticated_bytes, mk)
    return sealed._replace(tag=tag).to_bytes()


def _locate_key(sealed: SealedObject, keyring: Keyring) -> RsaPrivateKey:
    from .keyring import find_private_by_fingerprint

    priv = find_private_by_fingerprint(keyring, sealed.header.key_fingerprint)
    if priv is None:
        raise KeyNotFoundError(
            f"no key with fingerprint {sealed.header.key_fingerprint.hex()} in the keyring; "
            "objects sealed to a lost key cannot be recovered"
        )
    if sealed.header.wrapped_len != priv.modulus_bytes:
        raise FormatError("wrapped key length does not match the addressed key")
    return priv


def _authenticate(sealed: SealedObject, priv: RsaPrivateKey) -> Optional[bytes]:
    """Unwrap CEK‖MK and check the tag; returns the CEK, or None when anything is off."""
    try:
        keys = unwrap_key(sealed.wrapped_keys, priv)
    except UnwrapError:
        return None
    suite = sealed.header.suite
    if len(keys) != suite.wrapped_payload_bytes:
        return None
    cek, mk = keys[:suite.cek_bytes], keys[suite.cek_bytes:]
    if not cmac_verify(sealed.authenticated_bytes, mk, sealed.tag):
        return None
    return cek


def open(blob: bytes, keyring: Keyring) -> bytes:
    sealed = parse(blob)
    priv = _locate_key(sealed, keyring)
    cek = _authenticate(sealed, priv)
    if cek is None:
        raise IntegrityError()
    try:
        return mode_decrypt(sealed.ciphertext, cek, CipherMode.CBC, sealed.header.iv)
    except PaddingError:
        raise IntegrityError() from None


def verify_only(blob: bytes, keyring: Keyring) -> bool:
    """Tag check without decrypting.

    Raises what open raises (FormatError, KeyNotFoundError) except that a failed
    unwrap or tag check returns False instead of an IntegrityError.
    """
    sealed = parse(blob)
    priv = _locate_key(sealed, keyring)
    return _authenticate(sealed, priv) is not None
