"""
Ciphertext object stores for the CSP.
✓ ObjectName validation shared by client and server
✓ In-memory backend (lock-protected dict)
✓ Directory backend: one file per object named by the hex of the name bytes,
  written temp-then-rename so a put is atomic per object

Backends never look inside payloads.
"""

import logging
import os
import tempfile
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Tuple, Union

from .errors import ObjectNameError, ObjectNotFoundError, StorageError

logger = logging.getLogger(__name__)

MAX_NAME_BYTES = 1024
_FORBIDDEN_NAME_BYTES = (0x00, 0x0A)
HEX_SEGMENT = 200
DIR_SUFFIX = ".d"


def validate_object_name(name: str) -> bytes:
    encoded = name.encode("utf-8")
    if not 1 <= len(encoded) <= MAX_NAME_BYTES:
        raise ObjectNameError(f"object name must be 1-{MAX_NAME_BYTES} UTF-8 bytes, got {len(encoded)}")
    if any(b in encoded for b in _FORBIDDEN_NAME_BYTES):
        raise ObjectNameError("object name must not contain NUL or newline")
    return encoded


class Backend(ABC):
    kind = "abstract"

    @abstractmethod
    def put(self, name: str, data: bytes) -> None:
        ...

    @abstractmethod
    def get(self, name: str) -> bytes:
        ...

    @abstractmethod
    def list(self) -> List[str]:
        ...

    @abstractmethod
    def delete(self, name: str) -> None:
        ...

    def size(self, name: str) -> int:
        return len(self.get(name))

    def stats(self) -> List[Tuple[str, int]]:
        """(name, size) for every object, in list() order."""
        out = []
        for name in self.list():
            try:
                out.append((name, self.size(name)))
            except ObjectNotFoundError:
                continue
        return out


class MemoryBackend(Backend):
    kind = "mem"

    def __init__(self):
        self._objects: Dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, name: str, data: bytes) -> None:
        validate_object_name(name)
        with self._lock:
            self._objects[name] = bytes(data)

    def get(self, name: str) -> bytes:
        with self._lock:
            try:
                return self._objects[name]
            except KeyError:
                raise ObjectNotFoundError(f"no object named {name!r}") from None

    def list(self) -> List[str]:
        with self._lock:
            return sorted(self._objects)

    def delete(self, name: str) -> None:
        with self._lock:
            if self._objects.pop(name, None) is None:
                raise ObjectNotFoundError(f"no object named {name!r}")


class DirectoryBackend(Backend):
    kind = "dir"

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"cannot create storage root {self.root}: {e}") from e
        self._lock = threading.Lock()

    def path_for(self, name: str) -> Path:
        hexname = validate_object_name(name).hex()
        segments = [hexname[i:i + HEX_SEGMENT] for i in range(0, len(hexname), HEX_SEGMENT)]
        # directory segments carry a suffix so they never collide with object files
        return self.root.joinpath(*(s + DIR_SUFFIX for s in segments[:-1]), segments[-1])

    def put(self, name: str, data: bytes) -> None:
        target = self.path_for(name)
        try:
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".put-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                    fh.flush()
                    os.fsync(fh.fileno())
                # delete prunes empty segment directories under the same lock
                with self._lock:
                    target.parent.mkdir(parents=True, exist_ok=True)
                    os.replace(tmp, target)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        except OSError as e:
            raise StorageError(f"cannot store {name!r}: {e}") from e
        logger.debug("Stored %d bytes as %s", len(data), target.name[:16])

    def get(self, name: str) -> bytes:
        path = self.path_for(name)
        try:
            return path.read_bytes()
        except (FileNotFoundError, IsADirectoryError, NotADirectoryError):
            raise ObjectNotFoundError(f"no object named {name!r}") from None
        except OSError as e:
            raise StorageError(f"cannot read {name!r}: {e}") from e

    def size(self, name: str) -> int:
        path = self.path_for(name)
        try:
            if path.is_file():
                return path.stat().st_size
        except FileNotFoundError:
            pass
        except OSError as e:
            raise StorageError(f"cannot stat {name!r}: {e}") from e
        raise ObjectNotFoundError(f"no object named {name!r}")

    def _decode(self, path: Path) -> Union[str, None]:
        parts = path.relative_to(self.root).parts
        if not all(p.endswith(DIR_SUFFIX) for p in parts[:-1]):
            return None
        hexname = "".join(p[:-len(DIR_SUFFIX)] for p in parts[:-1]) + parts[-1]
        try:
            return bytes.fromhex(hexname).decode("utf-8")
        except ValueError:
            return None

    def list(self) -> List[str]:
        with self._lock:
            names = []
            for path in self.root.rglob("*"):
                if not path.is_file() or path.name.startswith("."):
                    continue
                name = self._decode(path)
                if name is not None:
                    names.append(name)
            return sorted(names)

    def delete(self, name: str) -> None:
        path = self.path_for(name)
        with self._lock:
            try:
                path.unlink()
            except (FileNotFoundError, IsADirectoryError, NotADirectoryError):
                raise ObjectNotFoundError(f"no object named {name!r}") from None
            except OSError as e:
                raise StorageError(f"cannot delete {name!r}: {e}") from e
            # drop now-empty segment directories of long names
            for parent in path.parents:
                if parent == self.root:
                    break
                try:
                    parent.rmdir()
                except OSError:
                    break


def make_backend(kind: str, root: Union[str, Path, None] = None) -> Backend:
    if kind == "mem":
        return MemoryBackend()
    if kind == "dir":
        if root is None:
            raise StorageError("the directory backend needs a root path")
        return DirectoryBackend(root)
    raise StorageError(f"unknown backend {kind!r}")
