"""Client for the remote Loogle search service.

Network access is an explicit opt-in; the default configuration keeps
every remote call disabled so runs stay hermetic.  The HTTP fetcher is
injectable, which lets tests replay recorded responses offline.
"""

from __future__ import annotations

import json
import urllib.parse
from typing import Callable

from .types import BridgeError, CapabilityDisabled, DeclMatch

DEFAULT_ENDPOINT = "https://loogle.lean-lang.org/json"

Fetcher = Callable[[str, float], str]


def _http_fetch(url: str, timeout: float) -> str:
    import requests

    resp = requests.get(url, timeout=timeout)
    resp.raise_for_status()
    return resp.text


def parse_loogle_response(payload: str) -> list[DeclMatch]:
    """Parse the service's JSON body into declaration matches."""
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise BridgeError(f"malformed loogle response: {exc}") from exc
    if isinstance(data, dict) and data.get("error"):
        raise BridgeError(f"loogle error: {data['error']}")
    hits = data.get("hits", []) if isinstance(data, dict) else []
    matches = []
    for hit in hits:
        name = hit.get("name", "")
        if not name:
            continue
        matches.append(DeclMatch(
            name=name,
            signature=hit.get("type", ""),
            source="loogle",
        ))
    return matches


def loogle_search(
    query: str,
    network_enabled: bool,
    endpoint: str = DEFAULT_ENDPOINT,
    timeout: float = 20.0,
    fetcher: Fetcher = _http_fetch,
) -> list[DeclMatch]:
    """Search the remote service; zero hits is an empty list, not an error."""
    if not query.strip():
        raise ValueError("query must be non-empty")
    if not network_enabled:
        raise CapabilityDisabled(
            "network access is disabled; enable it explicitly to use remote search"
        )
    url = f"{endpoint}?q={urllib.parse.quote(query)}"
    try:
        payload = fetcher(url, timeout)
    except Exception as exc:
        raise BridgeError(f"loogle request failed: {exc}") from exc
    return parse_loogle_response(payload)
