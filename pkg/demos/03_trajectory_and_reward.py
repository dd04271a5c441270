"""Reasoning trajectories and the rule-based reward.

A response is three delimited blocks (thought, CI parameters, solution); the
verifier extracts the final "Choice: <letter>" commitment and pays 1.0 iff
it matches the gold verdict. Run: python3 demos/03_trajectory_and_reward.py
"""

from pathlib import Path

from cikit import ingest_cases, parse, serialize
from cikit.verifier import batch_reward, build_compliance_question, verify

DATA = Path(__file__).parent.parent / "data"

store = ingest_cases(DATA / "cases_demo.json").store
case = store.get("gdpr-real-estate-001")

question = build_compliance_question(case)
print("--- rendered compliance question ---")
print(question.prompt)

response = (
    "<|begin_of_thought|>\n"
    "No controllership agreement, no legal basis, and an ignored erasure request:\n"
    "each of these independently breaches the regulation.\n"
    "<|end_of_thought|>\n"
    "<CI>\n"
    "sender: ['Real Estate Company']\n"
    "recipient: ['Other Entities']\n"
    "subject: ['Individuals']\n"
    "<\\CI>\n"
    "<|begin_of_solution|>\nChoice: A. Prohibited\n<|end_of_solution|>"
)

trajectory = parse(response)
print("\n--- parsed trajectory ---")
print("thought:", trajectory.thought.splitlines()[0], "...")
print("ci_block:", trajectory.ci_block)
print("round-trips:", parse(serialize(trajectory)) == trajectory)

report = verify(response, question, strict_ci=True, annotation=case.annotation)
print("\n--- verification (strict) ---")
print("format_ok:", report.format_ok, "| choice:", report.choice.letter,
      "| ci_consistent:", report.ci_consistent, "| reward:", report.reward)

# lenient mode needs only an extractable choice; unparseable text earns 0.0
cases = [case, case, store.get("hipaa-research-004"), store.get("hipaa-research-004")]
responses = [response, "Choice: B", "Choice: B", "word salad, no commitment"]
rewards, summary = batch_reward(cases, responses)
print("\n--- batch rewards ---")
print("rewards:", rewards)
print("mean:", summary.mean_reward, "| format failures:", summary.format_failures)
