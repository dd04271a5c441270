"""Client SDK for the cikit reward service.

One call fetches batch rewards for (case_id, response_text) pairs; the
client speaks the service's JSON wire schema exactly and never imports the
server library.
"""

from .client import (
    ConnectionFailed,
    HealthStatus,
    RewardClient,
    RewardClientConfig,
    RewardClientError,
    RewardRecord,
    ServiceResponseError,
)

__version__ = "0.1.0"

__all__ = [
    "ConnectionFailed",
    "HealthStatus",
    "RewardClient",
    "RewardClientConfig",
    "RewardClientError",
    "RewardRecord",
    "ServiceResponseError",
]
