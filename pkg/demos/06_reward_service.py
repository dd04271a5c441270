"""The reward service over HTTP: health, case lookup, batch rewards.

Starts the service on an ephemeral port, queries it with stdlib urllib, and
shuts it down. External training loops talk to these same three endpoints.
Run: python3 demos/06_reward_service.py
"""

import json
import urllib.request
from pathlib import Path

from cikit import ingest_cases
from cikit.service import serve

DATA = Path(__file__).parent.parent / "data"


def get(url: str) -> dict:
    with urllib.request.urlopen(url, timeout=10) as response:
        return json.load(response)


def post(url: str, payload: dict) -> dict:
    request = urllib.request.Request(
        url, data=json.dumps(payload).encode(), headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(request, timeout=10) as response:
        return json.load(response)


store = ingest_cases(DATA / "cases_demo.json").store

with serve(store, "127.0.0.1:0") as service:  # port 0 picks a free port
    print("service url:", service.url)

    print("\nGET /v1/health")
    print(" ", get(f"{service.url}/v1/health"))

    print("\nGET /v1/cases/hipaa-research-004   (gold hidden by default)")
    body = get(f"{service.url}/v1/cases/hipaa-research-004")
    print("  keys:", sorted(body))

    print("\nPOST /v1/reward")
    reply = post(f"{service.url}/v1/reward", {
        "mode": "lenient",
        "items": [
            {"case_id": "gdpr-real-estate-001", "response_text": "Choice: A. Prohibited"},
            {"case_id": "hipaa-research-004", "response_text": "Choice: A"},
            {"case_id": "no-such-case", "response_text": "Choice: A"},
        ],
    })
    for item in reply["items"]:
        print(f"  {item['case_id']:22s} reward={item['reward']} "
              f"choice={item['parsed_choice']} errors={item['errors']}")
    print("  summary:", reply["summary"])

print("\nservice stopped")
