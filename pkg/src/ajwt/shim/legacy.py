"""Plain bearer-token client used as the pre-intent baseline."""

from __future__ import annotations

import time
from typing import Any, Callable, Optional

import httpx

from ajwt.core.canonical import canonical_json
from ajwt.core.tokens import decode_unverified


class LegacyClient:
    """Fetches a ``client_credentials`` access token and sends it as a bearer header."""

    def __init__(
        self,
        http: httpx.Client,
        idp_url: str,
        client_id: str,
        client_secret: str,
        clock: Callable[[], float] = time.time,
    ):
        self.http = http
        self.idp_url = idp_url.rstrip("/")
        self.client_id = client_id
        self.client_secret = client_secret
        self.clock = clock
        self._token: Optional[tuple[str, int]] = None

    def access_token(self, scope: Optional[str] = None) -> str:
        if scope is None and self._token is not None and self._token[1] - self.clock() > 5:
            return self._token[0]
        body = {"grant_type": "client_credentials", "client_id": self.client_id, "client_secret": self.client_secret}
        if scope is not None:
            body["scope"] = scope
        resp = self.http.post(f"{self.idp_url}/token", json=body)
        resp.raise_for_status()
        token = resp.json()["access_token"]
        if scope is None:
            self._token = (token, int(decode_unverified(token)[1]["exp"]))
        return token

    def call(self, method: str, url: str, json_body: Any = None, token: Optional[str] = None) -> httpx.Response:
        headers = {"Authorization": f"Bearer {token or self.access_token()}"}
        body = b""
        if json_body is not None:
            body = canonical_json(json_body)
            headers["Content-Type"] = "application/json"
        return self.http.request(method, url, headers=headers, content=body)
