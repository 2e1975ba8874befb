"""
RSA over Python integers, used only to protect per-object AES keys.
✓ Square-and-multiply modular exponentiation
✓ Trial division + Miller-Rabin primality, bases drawn from the DRBG
✓ Key generation with e = 65537 and d = e^-1 mod lcm(p-1, q-1)
✓ PKCS#1 v1.5 type-2 key wrapping and strict unwrapping
✓ Line-oriented key text (n=/e=/d=/p=/q= lowercase hex)

Educational grade: no CRT, no blinding, no signatures.
"""

import logging
import math
import re
from typing import Dict, Iterable, List, Optional, Tuple

from pydantic import ValidationError

from .errors import CapacityError, FormatError, KeygenError, ParameterError, UnwrapError
from .rng import DrbgState
from .schemas import RsaPrivateKey, RsaPublicKey

logger = logging.getLogger(__name__)

PUBLIC_EXPONENT = 65537
MILLER_RABIN_ROUNDS = 40
SUPPORTED_BITS = (512, 1024, 2048, 3072)
TEST_ONLY_BITS = (512,)
WRAP_OVERHEAD = 11


def _small_primes(limit: int) -> List[int]:
    sieve = bytearray([1]) * limit
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(range(i * i, limit, i)))
    return [i for i, flag in enumerate(sieve) if flag]


_TRIAL_LIMIT = 2000
SMALL_PRIMES = _small_primes(_TRIAL_LIMIT)


# ---------- arithmetic ----------------------------------------------------- #
def mod_pow(base: int, exp: int, m: int) -> int:
    if m < 2:
        raise ParameterError("modulus must be at least 2")
    if exp < 0:
        raise ParameterError("exponent must be non-negative")
    result, base = 1, base % m
    while exp:
        if exp & 1:
            result = result * base % m
        base = base * base % m
        exp >>= 1
    return result


def _egcd(a: int, b: int) -> Tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def mod_inverse(a: int, m: int) -> int:
    g, x, _ = _egcd(a % m, m)
    if g != 1:
        raise ParameterError("value has no inverse modulo m")
    return x % m


# ---------- primality ------------------------------------------------------ #
def is_probable_prime(n: int, rounds: int = MILLER_RABIN_ROUNDS, rng: Optional[DrbgState] = None) -> bool:
    if rounds < 1:
        raise ParameterError("Miller-Rabin needs at least one round")
    if n < 2:
        return False
    for p in SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    if n < _TRIAL_LIMIT * _TRIAL_LIMIT:
        return True
    if rng is None:
        raise ParameterError("a DRBG is required to test large candidates")

    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = rng.randbelow(n - 3) + 2
        x = mod_pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: DrbgState, budget: List[int]) -> int:
    top_two = 0b11 << (bits - 2)
    while True:
        if budget[0] <= 0:
            raise KeygenError("prime search exceeded its attempt budget")
        budget[0] -= 1
        candidate = rng.randbits(bits) | top_two | 1
        # e must be invertible modulo p-1
        if (candidate - 1) % PUBLIC_EXPONENT == 0:
            continue
        if is_probable_prime(candidate, MILLER_RABIN_ROUNDS, rng):
            return candidate


# ---------- key generation ------------------------------------------------- #
def keygen(
    bits: int,
    rng: DrbgState,
    test_mode: bool = False,
    max_attempts: Optional[int] = None,
) -> Tuple[RsaPublicKey, RsaPrivateKey]:
    if bits not in SUPPORTED_BITS:
        raise ParameterError(f"RSA modulus must be one of {SUPPORTED_BITS} bits, got {bits}")
    if bits in TEST_ONLY_BITS and not test_mode:
        raise ParameterError(f"{bits}-bit RSA keys are only allowed in test mode")

    budget = [max_attempts if max_attempts is not None else 1 << 62]
    half = bits // 2
    while True:
        p = _random_prime(half, rng, budget)
        q = _random_prime(half, rng, budget)
        if p == q:
            continue
        n = p * q
        lam = math.lcm(p - 1, q - 1)
        if math.gcd(PUBLIC_EXPONENT, lam) != 1 or n.bit_length() != bits:
            continue
        d = mod_inverse(PUBLIC_EXPONENT, lam)
        break

    public = RsaPublicKey(n=n, e=PUBLIC_EXPONENT)
    private = RsaPrivateKey(n=n, e=PUBLIC_EXPONENT, d=d, p=p, q=q)
    logger.info("🔑 Generated %d-bit RSA keypair", bits)
    return public, private


# ---------- key wrapping --------------------------------------------------- #
def _nonzero_bytes(n: int, rng: DrbgState) -> bytes:
    out = bytearray()
    while len(out) < n:
        out.extend(b for b in rng.generate(n - len(out) + 8) if b)
    return bytes(out[:n])


def wrap_key(payload: bytes, pub: RsaPublicKey, rng: DrbgState) -> bytes:
    k = pub.modulus_bytes
    if len(payload) > k - WRAP_OVERHEAD:
        raise CapacityError(
            f"payload of {len(payload)} bytes exceeds the {k - WRAP_OVERHEAD}-byte capacity of a {pub.bits}-bit key"
        )
    padding = _nonzero_bytes(k - 3 - len(payload), rng)
    encoded = b"\x00\x02" + padding + b"\x00" + bytes(payload)
    c = mod_pow(int.from_bytes(encoded, "big"), pub.e, pub.n)
    return c.to_bytes(k, "big")


def unwrap_key(blob: bytes, priv: RsaPrivateKey) -> bytes:
    k = priv.modulus_bytes
    if len(blob) != k:
        raise UnwrapError("wrapped key length does not match the modulus")
    c = int.from_bytes(blob, "big")
    if c >= priv.n:
        raise UnwrapError("wrapped key is out of range")
    encoded = mod_pow(c, priv.d, priv.n).to_bytes(k, "big")
    separator = encoded.find(b"\x00", 2)
    if encoded[:2] != b"\x00\x02" or separator < 10:
        raise UnwrapError("malformed key wrapping frame")
    return encoded[separator + 1:]


# ---------- text serialization --------------------------------------------- #
_HEX = re.compile(r"^(0|[1-9a-f][0-9a-f]*)$")
PUBLIC_FIELDS = ("n", "e")
PRIVATE_FIELDS = ("n", "e", "d", "p", "q")


def key_fields(key) -> Dict[str, str]:
    names = PRIVATE_FIELDS if isinstance(key, RsaPrivateKey) else PUBLIC_FIELDS
    return {name: format(getattr(key, name), "x") for name in names}


def parse_hex(value: str) -> int:
    if not _HEX.match(value):
        raise FormatError(f"not canonical lowercase hex: {value[:16]!r}")
    return int(value, 16)


def dump_key(key) -> str:
    return "".join(f"{name}={value}\n" for name, value in key_fields(key).items())


def _read_fields(lines: Iterable[str]) -> Dict[str, int]:
    fields: Dict[str, int] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep or name not in PRIVATE_FIELDS:
            raise FormatError(f"line {lineno}: unexpected entry {name!r}")
        if name in fields:
            raise FormatError(f"line {lineno}: duplicate field {name!r}")
        fields[name] = parse_hex(value)
    return fields


def load_public_key(text: str) -> RsaPublicKey:
    fields = _read_fields(text.splitlines())
    try:
        return RsaPublicKey(n=fields["n"], e=fields["e"])
    except (KeyError, ValidationError) as e:
        raise FormatError(f"invalid public key: {e}") from e


def load_private_key(text: str) -> RsaPrivateKey:
    fields = _read_fields(text.splitlines())
    try:
        return RsaPrivateKey(**{name: fields[name] for name in PRIVATE_FIELDS})
    except (KeyError, ValidationError) as e:
        raise FormatError(f"invalid private key: {e}") from e
