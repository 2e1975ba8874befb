import logging
import socket

import pytest
from anyio.from_thread import start_blocking_portal

from cloudvault import keyring as keyring_ops
from cloudvault.config import get_settings
from cloudvault.csp import CspServer
from cloudvault.rng import DrbgState, expand_seed
from cloudvault.rsa import keygen
from cloudvault.schemas import Keyring
from cloudvault.storage import DirectoryBackend, MemoryBackend


def seeded(label: str) -> DrbgState:
    return DrbgState(expand_seed(b"cloudvault-tests", label.encode()))


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for var in ("CVLT_KEYRING", "CVLT_SERVER", "CVLT_MAX_ACCOUNTS", "CVLT_TEST_MODE", "CVLT_LOG_LEVEL"):
        monkeypatch.delenv(var, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
    log = logging.getLogger("cloudvault")
    for handler in list(log.handlers):
        log.removeHandler(handler)


@pytest.fixture
def rng() -> DrbgState:
    return seeded("function")


@pytest.fixture(scope="session")
def rsa512():
    return keygen(512, seeded("rsa512"), test_mode=True)


@pytest.fixture(scope="session")
def rsa1024():
    return keygen(1024, seeded("rsa1024"))


@pytest.fixture(scope="session")
def rsa2048():
    return keygen(2048, seeded("rsa2048"))


@pytest.fixture(scope="session")
def keyring512() -> Keyring:
    """Two accounts with 512-bit keys."""
    kr = Keyring()
    for name in ("alice", "bob"):
        kr = keyring_ops.create_account(kr, name, 512, seeded(f"kr-{name}"), test_mode=True, created=0)
    return kr


@pytest.fixture
def rng_factory():
    return seeded


# ---------- loopback CSP --------------------------------------------------- #
class RunningCsp:
    def __init__(self, addr, backend):
        self.addr = addr
        self.backend = backend

    def raw_exchange(self, data: bytes) -> bytes:
        """Send raw bytes, half-close, and collect the answer until the server closes."""
        host, port = self.addr.rsplit(":", 1)
        with socket.create_connection((host, int(port)), timeout=5) as sock:
            sock.sendall(data)
            sock.shutdown(socket.SHUT_WR)
            chunks = []
            while chunk := sock.recv(65536):
                chunks.append(chunk)
            return b"".join(chunks)


def _start_csp(backend):
    with start_blocking_portal() as portal:
        future, bound = portal.start_task(CspServer(backend).run, "127.0.0.1", 0)
        try:
            yield RunningCsp(f"127.0.0.1:{bound[1]}", backend)
        finally:
            future.cancel()


@pytest.fixture
def server():
    yield from _start_csp(MemoryBackend())


@pytest.fixture
def dir_server(tmp_path):
    yield from _start_csp(DirectoryBackend(tmp_path / "csp"))
