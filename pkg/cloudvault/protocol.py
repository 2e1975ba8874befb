"""
Length-prefixed CSP wire frames.

request:  u32 remainder | u8 opcode | u16 name_len | name | u64 payload_len | payload
response: u32 remainder | u8 status | u64 payload_len | payload
"""

import struct
from enum import IntEnum
from typing import NamedTuple

from .errors import ObjectNameError
from .storage import validate_object_name

MAX_FRAME = 64 * 1024 * 1024
PREFIX = struct.Struct(">I")
_U8 = struct.Struct(">B")
_U16 = struct.Struct(">H")
_U64 = struct.Struct(">Q")


class Opcode(IntEnum):
    PUT = 0x01
    GET = 0x02
    LIST = 0x03
    DELETE = 0x04


class Status(IntEnum):
    OK = 0x00
    NOT_FOUND = 0x01
    BAD_REQUEST = 0x02
    SERVER_ERROR = 0x03


class FrameError(ValueError):
    """A frame that violates the wire layout; answered with BAD_REQUEST."""


class Request(NamedTuple):
    opcode: Opcode
    name: str = ""
    payload: bytes = b""

    def encode(self) -> bytes:
        name = self.name.encode("utf-8")
        body = (
            _U8.pack(self.opcode) + _U16.pack(len(name)) + name
            + _U64.pack(len(self.payload)) + self.payload
        )
        return _frame(body)


class Response(NamedTuple):
    status: Status
    payload: bytes = b""

    def encode(self) -> bytes:
        return _frame(_U8.pack(self.status) + _U64.pack(len(self.payload)) + self.payload)


def _frame(body: bytes) -> bytes:
    if PREFIX.size + len(body) > MAX_FRAME:
        raise FrameError(f"frame of {PREFIX.size + len(body)} bytes exceeds {MAX_FRAME}")
    return PREFIX.pack(len(body)) + body


def remainder_allowed(remainder: int) -> bool:
    return PREFIX.size + remainder <= MAX_FRAME


def decode_request(body: bytes) -> Request:
    """Decode everything after the u32 prefix."""
    if len(body) < _U8.size + _U16.size + _U64.size:
        raise FrameError("request frame too short")
    try:
        opcode = Opcode(body[0])
    except ValueError:
        raise FrameError(f"unknown opcode 0x{body[0]:02x}") from None
    (name_len,) = _U16.unpack_from(body, 1)
    offset = 3 + name_len
    if len(body) < offset + _U64.size:
        raise FrameError("name length overruns the frame")
    raw_name = body[3:offset]
    (payload_len,) = _U64.unpack_from(body, offset)
    payload = body[offset + _U64.size:]
    if len(payload) != payload_len:
        raise FrameError("payload length does not match the frame length")

    if opcode is Opcode.LIST:
        if raw_name or payload:
            raise FrameError("LIST carries neither name nor payload")
        return Request(opcode)
    try:
        name = raw_name.decode("utf-8")
        validate_object_name(name)
    except (UnicodeDecodeError, ObjectNameError) as e:
        raise FrameError(f"invalid object name: {e}") from e
    if opcode is not Opcode.PUT and payload:
        raise FrameError(f"{opcode.name} carries no payload")
    return Request(opcode, name, payload)


def decode_response(body: bytes) -> Response:
    if len(body) < _U8.size + _U64.size:
        raise FrameError("response frame too short")
    try:
        status = Status(body[0])
    except ValueError:
        raise FrameError(f"unknown status 0x{body[0]:02x}") from None
    (payload_len,) = _U64.unpack_from(body, 1)
    payload = body[1 + _U64.size:]
    if len(payload) != payload_len:
        raise FrameError("payload length does not match the frame length")
    return Response(status, payload)
