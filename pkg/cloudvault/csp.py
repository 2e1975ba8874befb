"""
The cloud service provider: a ciphertext-only object store over TCP.
✓ anyio TCP listener, frames processed sequentially per connection
✓ Concurrent connections; backend calls run in worker threads
✓ Synchronous client helpers, one request/response exchange per call

There is no authentication here. Confidentiality and integrity come from the
client-side envelope, never from trusting the provider.
"""

import logging
import sys
from typing import List, Optional

import anyio
import anyio.to_thread
import uvicorn
from anyio.abc import SocketAttribute, SocketStream
from anyio.streams.buffered import BufferedByteReceiveStream

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

from .config import parse_address
from .errors import (
    BadRequestError,
    NetworkError,
    ObjectNotFoundError,
    ParameterError,
    ServerError,
    StartupError,
)
from .main import create_app
from .protocol import (
    PREFIX,
    FrameError,
    Opcode,
    Request,
    Response,
    Status,
    decode_request,
    decode_response,
    remainder_allowed,
)
from .storage import Backend, validate_object_name

logger = logging.getLogger(__name__)

_STREAM_CLOSED = (anyio.EndOfStream, anyio.IncompleteRead, anyio.BrokenResourceError, anyio.ClosedResourceError)


# ---------- server --------------------------------------------------------- #
class CspServer:
    def __init__(self, backend: Backend):
        self.backend = backend

    async def run(self, host: str, port: int, *, task_status=anyio.TASK_STATUS_IGNORED) -> None:
        try:
            listener = await anyio.create_tcp_listener(local_host=host, local_port=port)
        except OSError as e:
            raise StartupError(f"cannot bind {host}:{port}: {e}") from e
        async with listener:
            bound = listener.extra(SocketAttribute.local_address)
            logger.info("☁️ CSP listening on %s:%s (%s backend)", bound[0], bound[1], self.backend.kind)
            task_status.started(bound)
            await listener.serve(self.handle_connection)

    async def handle_connection(self, stream: SocketStream) -> None:
        async with stream:
            buffered = BufferedByteReceiveStream(stream)
            while True:
                try:
                    prefix = await buffered.receive_exactly(PREFIX.size)
                except _STREAM_CLOSED:
                    return
                (remainder,) = PREFIX.unpack(prefix)
                if not remainder_allowed(remainder):
                    logger.warning("Rejected oversized frame (%d bytes)", remainder)
                    await self._reply(stream, Response(Status.BAD_REQUEST))
                    return
                try:
                    body = await buffered.receive_exactly(remainder)
                    request = decode_request(body)
                except _STREAM_CLOSED:
                    return
                except FrameError as e:
                    logger.warning("Rejected malformed frame: %s", e)
                    await self._reply(stream, Response(Status.BAD_REQUEST))
                    return
                if not await self._reply(stream, await self.dispatch(request)):
                    return

    async def _reply(self, stream: SocketStream, response: Response) -> bool:
        try:
            await stream.send(response.encode())
            return True
        except _STREAM_CLOSED:
            return False

    async def dispatch(self, request: Request) -> Response:
        backend = self.backend
        try:
            if request.opcode is Opcode.PUT:
                await anyio.to_thread.run_sync(backend.put, request.name, request.payload)
                return Response(Status.OK)
            if request.opcode is Opcode.GET:
                return Response(Status.OK, await anyio.to_thread.run_sync(backend.get, request.name))
            if request.opcode is Opcode.DELETE:
                await anyio.to_thread.run_sync(backend.delete, request.name)
                return Response(Status.OK)
            names = await anyio.to_thread.run_sync(backend.list)
            return Response(Status.OK, "\n".join(names).encode("utf-8"))
        except ObjectNotFoundError:
            return Response(Status.NOT_FOUND)
        except Exception as e:
            logger.error("❌ %s %r failed: %s", request.opcode.name, request.name, e)
            return Response(Status.SERVER_ERROR)


async def _serve_all(addr: str, backend: Backend, http_addr: Optional[str]) -> None:
    host, port = parse_address(addr)
    if not http_addr:
        await CspServer(backend).run(host, port)
        return
    async with anyio.create_task_group() as tg:
        await tg.start(CspServer(backend).run, host, port)
        http_host, http_port = parse_address(http_addr)
        config = uvicorn.Config(create_app(backend), host=http_host, port=http_port, log_level="warning")
        logger.info("🩺 Status API on http://%s:%s/api/v1/system/health", http_host, http_port)
        tg.start_soon(uvicorn.Server(config).serve)


def serve(addr: str, backend: Backend, http_addr: Optional[str] = None) -> None:
    """Run the CSP (and optionally its HTTP status surface) until interrupted."""
    try:
        anyio.run(_serve_all, addr, backend, http_addr)
    except BaseExceptionGroup as group:
        startup, _ = group.split(StartupError)
        if startup is None:
            raise
        while isinstance(startup, BaseExceptionGroup):
            startup = startup.exceptions[0]
        raise startup from None


# ---------- client --------------------------------------------------------- #
class CspClient:
    def __init__(self, addr: str):
        self.addr = addr
        self.host, self.port = parse_address(addr)

    async def exchange(self, frame: bytes) -> Response:
        try:
            async with await anyio.connect_tcp(self.host, self.port) as stream:
                await stream.send(frame)
                buffered = BufferedByteReceiveStream(stream)
                (remainder,) = PREFIX.unpack(await buffered.receive_exactly(PREFIX.size))
                if not remainder_allowed(remainder):
                    raise NetworkError("server sent an oversized frame")
                return decode_response(await buffered.receive_exactly(remainder))
        except FrameError as e:
            raise NetworkError(f"malformed response from {self.addr}: {e}") from e
        except (OSError, *_STREAM_CLOSED) as e:
            raise NetworkError(f"cannot reach CSP at {self.addr}: {e}") from e

    def call(self, request: Request) -> bytes:
        what = f"{request.opcode.name} {request.name!r}" if request.name else request.opcode.name
        try:
            frame = request.encode()
        except FrameError as e:
            raise ParameterError(f"{what}: {e}") from e
        response = anyio.run(self.exchange, frame)
        if response.status is Status.OK:
            return response.payload
        if response.status is Status.NOT_FOUND:
            raise ObjectNotFoundError(f"{what}: object not found")
        if response.status is Status.BAD_REQUEST:
            raise BadRequestError(f"{what}: rejected as a bad request")
        raise ServerError(f"{what}: server error")

    def put(self, name: str, data: bytes) -> None:
        validate_object_name(name)
        self.call(Request(Opcode.PUT, name, bytes(data)))

    def get(self, name: str) -> bytes:
        validate_object_name(name)
        return self.call(Request(Opcode.GET, name))

    def list(self) -> List[str]:
        payload = self.call(Request(Opcode.LIST))
        return payload.decode("utf-8").split("\n") if payload else []

    def delete(self, name: str) -> None:
        validate_object_name(name)
        self.call(Request(Opcode.DELETE, name))


def client_put(addr: str, name: str, data: bytes) -> None:
    CspClient(addr).put(name, data)


def client_get(addr: str, name: str) -> bytes:
    return CspClient(addr).get(name)


def client_list(addr: str) -> List[str]:
    return CspClient(addr).list()


def client_delete(addr: str, name: str) -> None:
    CspClient(addr).delete(name)
