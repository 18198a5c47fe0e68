"""In-process HTTP routing: one synchronous httpx client reaching several ASGI apps by host name."""

from __future__ import annotations

from typing import Any, Mapping

import anyio
import httpx


class RoutingTransport(httpx.BaseTransport):
    """Dispatches each request to the ASGI app registered for its host.

    Every request runs in a short-lived event loop, so callers must not be
    inside a running loop on the same thread.
    """

    def __init__(self, apps: Mapping[str, Any]):
        self._transports = {host: httpx.ASGITransport(app=app) for host, app in apps.items()}

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        transport = self._transports.get(request.url.host)
        if transport is None:
            raise httpx.ConnectError(f"no in-process app for host {request.url.host!r}", request=request)
        content = request.read()

        async def send() -> tuple[int, list[tuple[bytes, bytes]], bytes]:
            inner = httpx.Request(request.method, request.url, headers=request.headers, content=content)
            resp = await transport.handle_async_request(inner)
            body = await resp.aread()
            return resp.status_code, resp.headers.raw, body

        status, headers, body = anyio.run(send)
        return httpx.Response(status, headers=headers, content=body, request=request)


def in_process_client(apps: Mapping[str, Any]) -> httpx.Client:
    return httpx.Client(transport=RoutingTransport(apps))
