"""Synchronous blocking client for the reward service.

Endpoints:

    POST /v1/reward   {"items": [{"case_id", "response_text"}], "mode": ...}
    GET  /v1/health   {"status": "ok", "cases": N}

Connection failures and 5xx responses are retried with exponential backoff
(the service is idempotent, so retries are safe); other non-2xx statuses are
surfaced immediately with the response body. Batches preserve item order and
never drop items. The base URL can come from the constructor or the
CIKIT_URL environment variable.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Sequence

import requests

URL_ENV_VAR = "CIKIT_URL"


class RewardClientError(Exception):
    """Base class for client errors."""


class ConnectionFailed(RewardClientError):
    """The service stayed unreachable (or kept failing) through all retries."""

    def __init__(self, url: str, attempts: int, last_error: Exception):
        self.url = url
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(f"{url} unreachable after {attempts} attempts: {last_error}")


class ServiceResponseError(RewardClientError):
    """The service answered with a non-2xx status."""

    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"service returned HTTP {status}: {body[:200]}")


@dataclass(frozen=True)
class RewardClientConfig:
    base_url: str
    timeout: float = 10.0
    retries: int = 2
    backoff: float = 0.25  # first retry delay; doubles per attempt
    mode: str = "lenient"

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.mode not in ("strict", "lenient"):
            raise ValueError("mode must be 'strict' or 'lenient'")
        object.__setattr__(self, "base_url", self.base_url.rstrip("/"))


@dataclass(frozen=True)
class RewardRecord:
    """One reward item, mirroring the wire schema."""

    case_id: str
    reward: float
    format_ok: bool
    parsed_choice: str | None
    errors: tuple[str, ...]


@dataclass(frozen=True)
class HealthStatus:
    status: str
    cases: int


class RewardClient:
    """One instance per worker; instances share no state."""

    def __init__(self, base_url: str | None = None, *, config: RewardClientConfig | None = None,
                 **kwargs):
        if config is None:
            if base_url is None:
                base_url = os.environ.get(URL_ENV_VAR)
            if not base_url:
                raise ValueError(f"no base_url given and {URL_ENV_VAR} is not set")
            config = RewardClientConfig(base_url=base_url, **kwargs)
        elif base_url is not None or kwargs:
            raise ValueError("pass either config or keyword settings, not both")
        self.config = config
        self._session = requests.Session()

    # -- wire plumbing --------------------------------------------------------

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = f"{self.config.base_url}{path}"
        attempts = self.config.retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(self.config.backoff * (2 ** (attempt - 1)))
            try:
                response = self._session.request(
                    method, url, json=payload, timeout=self.config.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = ServiceResponseError(response.status_code, response.text)
                continue
            if not response.ok:
                raise ServiceResponseError(response.status_code, response.text)
            return response.json()
        assert last_error is not None
        raise ConnectionFailed(url, attempts, last_error)

    # -- API -------------------------------------------------------------------

    def reward_batch(self, pairs: Sequence[tuple[str, str]]) -> list[RewardRecord]:
        """Rewards for (case_id, response_text) pairs, order-preserving.

        An empty input returns [] without touching the network. Per-item
        failures (unknown case ids, unparseable responses) come back as
        records with reward 0.0 and error strings, never dropped.
        """
        if not pairs:
            return []
        payload = {
            "items": [
                {"case_id": case_id, "response_text": response_text}
                for case_id, response_text in pairs
            ],
            "mode": self.config.mode,
        }
        body = self._request("POST", "/v1/reward", payload)
        records = [
            RewardRecord(
                case_id=item["case_id"],
                reward=float(item["reward"]),
                format_ok=bool(item["format_ok"]),
                parsed_choice=item.get("parsed_choice"),
                errors=tuple(item.get("errors", ())),
            )
            for item in body["items"]
        ]
        if len(records) != len(pairs):
            raise RewardClientError(
                f"service returned {len(records)} items for {len(pairs)} inputs"
            )
        return records

    def health(self) -> HealthStatus:
        body = self._request("GET", "/v1/health")
        return HealthStatus(status=body["status"], cases=int(body["cases"]))

    def close(self) -> None:
        self._session.close()

    def __enter__(self) -> "RewardClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
