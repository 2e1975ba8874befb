import logging
import time
from typing import List

from fastapi import FastAPI

from .schemas import HealthReport, ObjectInfo
from .storage import Backend

logger = logging.getLogger(__name__)


def create_app(backend: Backend) -> FastAPI:
    """Read-only status surface for a running CSP. Never returns payloads.

    Handlers are plain functions so backend scans run in the threadpool, off the
    event loop the TCP listener shares.
    """
    app = FastAPI(title="CloudVault CSP status")

    @app.get("/api/v1/system/health", response_model=HealthReport)
    def system_health():
        try:
            stats = backend.stats()
            return HealthReport(
                status="operational",
                backend=backend.kind,
                objects=len(stats),
                stored_bytes=sum(size for _, size in stats),
                timestamp=time.time(),
            )
        except Exception as e:
            logger.error("❌ Health check failed: %s", e)
            return HealthReport(status="degraded", backend=backend.kind, objects=0, stored_bytes=0, timestamp=time.time())

    @app.get("/api/v1/objects", response_model=List[ObjectInfo])
    def list_objects():
        return [ObjectInfo(name=name, size=size) for name, size in backend.stats()]

    return app
