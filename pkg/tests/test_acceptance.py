"""Acceptance suite: one test per release criterion, at the stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion. Every expected value here is either hand-computed, produced by an
independent brute-force oracle (tests/oracles.py), or a verbatim fixture.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
import requests

from cikit.cases import LegalCase, split
from cikit.ci import (
    ComplianceVerdict,
    Context,
    Domain,
    Effect,
    FlowTuple,
    InformationFlow,
    InformationType,
    Matcher,
    MatchKind,
    Role,
    TransmissionPrinciple,
    evaluate_flow,
    verdict_to_choice,
)
from cikit.mcq import McqCategory, TrigramHashEmbedding, generate, rank_distractors
from cikit.metrics import (
    LabeledPrediction,
    TermPrediction,
    accuracy,
    balanced_accuracy,
    macro_f1,
    normalized_log_distance,
)
from cikit.ppo import (
    PolicyParams,
    PpoConfig,
    clipped_surrogate,
    gae_advantages,
    policy_gradient,
    train,
)
from cikit.service import serve
from cikit.trajectory import ReasoningTrajectory, parse, serialize
from cikit.verifier import build_compliance_question, reward

from .conftest import FULL_SCALE_COUNTS
from .generators import random_context, random_flow
from .oracles import brute_force_cosine_top3, brute_force_evaluate, brute_force_gae
from .test_ppo import (
    finite_difference_policy_grad,
    make_random_batch,
    noise_store,
    separable_store,
)


def ok(name: str) -> None:
    print(f"PASS: {name}")


# -- 1. compliance-calculus oracle -------------------------------------------

def test_compliance_calculus_oracle():
    rng = random.Random(20240817)
    start = time.monotonic()
    agree = 0
    for _ in range(1000):
        context = random_context(rng, max_principles=5)
        flow = random_flow(rng, context, max_tuples=5)
        assert evaluate_flow(flow, context) is brute_force_evaluate(flow, context)
        agree += 1
    elapsed = time.monotonic() - start
    assert agree == 1000
    assert elapsed < 5.0, f"oracle sweep took {elapsed:.2f}s"
    ok(f"compliance-calculus oracle: 1000/1000 agreement in {elapsed:.2f}s")


# -- 2. permit-formula edge cases ---------------------------------------------

def test_permit_formula_edge_cases():
    hospital = Role("hospital", attributes=frozenset({"covered-entity"}))
    patient = Role("patient")
    researcher = Role("researcher")
    record = InformationType("record")
    permit = TransmissionPrinciple(
        id="permit-with-consent",
        effect=Effect.PERMIT,
        sender_matcher=Matcher(MatchKind.ID, "hospital"),
        conditions=frozenset({"consent"}),
    )
    context = Context("ctx", Domain.HIPAA, [hospital, patient, researcher], [record], [permit])
    transfer = FlowTuple(sender=hospital, subject=patient, recipient=researcher, info=record)

    # empty flow is vacuously permitted
    assert evaluate_flow(InformationFlow(), context) is ComplianceVerdict.PERMITTED

    # scope matched but the permitting set is empty (conditions unmet) -> prohibited
    flow = InformationFlow(((transfer, frozenset()),))
    assert evaluate_flow(flow, context) is ComplianceVerdict.PROHIBITED

    # scope miss -> not applicable
    off_scope = TransmissionPrinciple(
        id="permit-researchers-only",
        effect=Effect.PERMIT,
        sender_matcher=Matcher(MatchKind.ID, "researcher"),
    )
    miss_context = Context("ctx2", Domain.HIPAA, [hospital, patient, researcher], [record], [off_scope])
    assert evaluate_flow(flow, miss_context) is ComplianceVerdict.NOT_APPLICABLE

    # a literally empty principle list touches no tuple: scope miss by the rules
    empty_context = Context("ctx3", Domain.HIPAA, [hospital, patient, researcher], [record], [])
    assert evaluate_flow(flow, empty_context) is ComplianceVerdict.NOT_APPLICABLE
    ok("permit-formula edge cases: empty flow / no-permit scope / scope miss")


# -- 3. trajectory round-trip --------------------------------------------------

_THOUGHT_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 \n.,:;!?()[]'\"-"
    "éüßñçøπΩλ法律合规性隐私データ보호"
)
_VALUE_ALPHABET = _THOUGHT_ALPHABET.replace("\n", "") + "\\"


def _random_trajectory(rng: random.Random) -> ReasoningTrajectory:
    def text(alphabet: str, lo: int, hi: int) -> str:
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))

    thought = text(_THOUGHT_ALPHABET, 0, 200).strip()
    solution = text(_THOUGHT_ALPHABET, 0, 120).strip()
    keys = rng.sample(["sender", "recipient", "subject", "information_type", "purpose",
                       "k1", "k2", "extra"], rng.randint(0, 5))
    ci_block = {
        key: [text(_VALUE_ALPHABET, 0, 30) for _ in range(rng.randint(1, 3))]
        for key in keys
    }
    return ReasoningTrajectory(thought=thought, ci_block=ci_block, solution=solution)


def test_trajectory_round_trip(real_estate_response, real_estate_mcq_response):
    rng = random.Random(99)
    failures = 0
    for _ in range(1000):
        original = _random_trajectory(rng)
        if parse(serialize(original)) != original:
            failures += 1
    assert failures == 0

    for verbatim in (real_estate_response, real_estate_mcq_response):
        first = parse(verbatim)
        assert isinstance(first, ReasoningTrajectory), first
        assert parse(serialize(first)) == first
    ok("trajectory round-trip: 1000 generated + 2 verbatim fixtures, zero failures")


# -- 4. reward fidelity ---------------------------------------------------------

def test_reward_fidelity(real_estate_case, real_estate_response):
    rng = random.Random(1234)
    verdicts = list(ComplianceVerdict)
    items = []
    for i in range(50):
        gold = verdicts[i % 3]
        case = LegalCase(id=f"fid-{i}", domain=Domain.GDPR, narrative=f"event {i}", gold=gold)
        style = i % 5
        if style == 0:
            letter = verdict_to_choice(gold)                      # correct, bare
        elif style == 1:
            letter = rng.choice([l for l in "ABC" if l != verdict_to_choice(gold)])
        elif style == 2:
            letter = verdict_to_choice(gold)                      # correct, full layout
        elif style == 3:
            letter = None                                         # garbage
        else:
            letter = "D"                                          # outside option set
        if letter is None:
            response = "no commitment anywhere"
        elif style == 2:
            response = (
                "<|begin_of_thought|>\nt\n<|end_of_thought|>\n<CI>\nsender: ['X']\n</CI>\n"
                f"<|begin_of_solution|>\nChoice: {letter}\n<|end_of_solution|>"
            )
        else:
            response = f"Choice: {letter}"
        expected = 1.0 if letter == verdict_to_choice(gold) else 0.0
        items.append((case, response, expected))

    for case, response, expected in items:
        got = reward(case, response)
        assert got in (0.0, 1.0)
        assert got == expected, (case.id, response, expected, got)

    assert reward(real_estate_case, real_estate_response) == 1.0
    ok("reward fidelity: 50-item fixture binary and exact; verbatim response scores 1.0")


# -- 5. question-template bit-exactness ----------------------------------------

def test_question_template_bit_exact(real_estate_case, real_estate_question_text):
    question = build_compliance_question(real_estate_case)
    assert question.prompt == real_estate_question_text
    assert "Choice: [A. Prohibited | B. Permitted | C. Not related ]" in question.prompt
    ok("question template: byte-for-byte match with the worked-example block")


# -- 6. data statistics ----------------------------------------------------------

def test_data_statistics(full_scale_store):
    stats = full_scale_store.stats()
    assert stats.grand_total == 6348
    expected_cells = {
        (Domain.HIPAA, ComplianceVerdict.PERMITTED): 86,
        (Domain.HIPAA, ComplianceVerdict.PROHIBITED): 19,
        (Domain.HIPAA, ComplianceVerdict.NOT_APPLICABLE): 106,
        (Domain.GDPR, ComplianceVerdict.PERMITTED): 675,
        (Domain.GDPR, ComplianceVerdict.PROHIBITED): 2462,
        (Domain.GDPR, ComplianceVerdict.NOT_APPLICABLE): 0,
        (Domain.AI_ACT, ComplianceVerdict.PERMITTED): 1029,
        (Domain.AI_ACT, ComplianceVerdict.PROHIBITED): 971,
        (Domain.AI_ACT, ComplianceVerdict.NOT_APPLICABLE): 1000,
    }
    for key, count in expected_cells.items():
        assert stats.cell(*key) == count
    assert stats.column_total(Domain.HIPAA) == 211
    assert stats.column_total(Domain.GDPR) == 3137
    assert stats.column_total(Domain.AI_ACT) == 3000
    # row totals are computed from the cells (86+675+1029, 19+2462+971, 106+0+1000);
    # they sum to the grand total with the column totals
    assert stats.row_total(ComplianceVerdict.PERMITTED) == 1790
    assert stats.row_total(ComplianceVerdict.PROHIBITED) == 3452
    assert stats.row_total(ComplianceVerdict.NOT_APPLICABLE) == 1106
    assert sum(stats.row_total(v) for v in ComplianceVerdict) == 6348
    ok("data statistics: full-scale grid exact (totals 6,348; HIPAA 211; GDPR 3,137; AI ACT 3,000)")


# -- 7. split contract -------------------------------------------------------------

def test_split_contract(full_scale_store):
    assignment = split(full_scale_store, 0.8, seed=42)
    all_ids = set(full_scale_store.ids())
    assert assignment.train_ids | assignment.test_ids == all_ids
    assert not (assignment.train_ids & assignment.test_ids)

    per_cell_train: dict[tuple, int] = {}
    for case in full_scale_store:
        if case.id in assignment.train_ids:
            key = (case.domain, case.gold)
            per_cell_train[key] = per_cell_train.get(key, 0) + 1
    for key, total in FULL_SCALE_COUNTS.items():
        if total:
            assert abs(per_cell_train.get(key, 0) - 0.8 * total) < 1

    again = split(full_scale_store, 0.8, seed=42)
    assert again == assignment
    ok("split contract: 8:2 partition, stratified within 1 per cell, seed-reproducible")


# -- 8. metric oracles ---------------------------------------------------------------

def test_metric_oracles():
    tol = 1e-12
    # hand-computed confusion fixtures
    preds = [LabeledPrediction(g, p) for g, p in [
        ("a", "a"), ("a", "a"), ("b", "b"), ("b", "a"), ("c", "a"),
    ]]
    assert abs(accuracy(preds) - 3 / 5) < tol
    assert abs(balanced_accuracy(preds) - 0.5) < tol

    mirrored = [LabeledPrediction(g, p) for g, p in [
        ("x", "x"), ("x", "x"), ("x", "y"),
        ("y", "y"), ("y", "y"), ("y", "x"),
    ]]
    assert abs(macro_f1(mirrored) - 2 / 3) < tol

    # balanced classes: balanced accuracy equals accuracy
    rng = random.Random(314)
    classes = ["a", "b", "c"]
    for _ in range(100):
        per_class = rng.randint(1, 10)
        sample = [
            LabeledPrediction(cls, rng.choice(classes))
            for cls in classes
            for _ in range(per_class)
        ]
        assert abs(balanced_accuracy(sample) - accuracy(sample)) < tol

    # normalized log distance
    assert normalized_log_distance([TermPrediction(7, 7)], 300) == 1.0
    assert normalized_log_distance([TermPrediction(300, 0)], 300) == 0.0
    expected = 1.0 - (math.log(4) - math.log(2)) / math.log(301)
    got = normalized_log_distance([TermPrediction(gold_months=1, pred_months=3)], 300)
    assert abs(got - expected) < 1e-6
    ok("metric oracles: hand-computed fixtures, 100 balanced fixtures, log-distance cases")


# -- 9. PPO math ----------------------------------------------------------------------

def test_ppo_math():
    # forced clip examples, exact
    assert clipped_surrogate([1.5], [1.0], 0.2) == pytest.approx(1.2, abs=0)
    assert clipped_surrogate([1.5], [-1.0], 0.2) == pytest.approx(-1.5, abs=0)
    assert clipped_surrogate([1.0], [0.37], 0.2) == pytest.approx(0.37, abs=0)

    # GAE vs the brute-force weighted-sum oracle
    rng = np.random.default_rng(2718)
    for _ in range(100):
        t_len = int(rng.integers(1, 9))
        rewards = rng.normal(size=t_len)
        values = rng.normal(size=t_len)
        dones = rng.random(t_len) < 0.3
        gamma = float(rng.uniform(0.8, 1.0))
        lam = float(rng.uniform(0.0, 1.0))
        advantages, _ = gae_advantages(rewards, values, list(dones), gamma, lam)
        oracle = brute_force_gae(list(rewards), list(values), list(dones), gamma, lam)
        np.testing.assert_allclose(advantages, oracle, atol=1e-10)

    # analytic gradients vs central finite differences
    config = PpoConfig()
    grad_rng = np.random.default_rng(777)
    for _ in range(20):
        batch = make_random_batch(grad_rng)
        policy = PolicyParams(grad_rng.normal(scale=0.7, size=(3, batch.states.shape[1])))
        advantages, _ = gae_advantages(batch.rewards, batch.values, batch.dones,
                                       config.gamma, config.lam)
        analytic = policy_gradient(policy, batch, advantages, config)
        numeric = finite_difference_policy_grad(policy, batch, advantages, config)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6)
        significant = np.abs(numeric) > 1e-3
        if significant.any():
            rel = np.abs(analytic - numeric)[significant] / np.abs(numeric)[significant]
            assert float(rel.max()) <= 1e-4
    ok("PPO math: clip examples exact, GAE within 1e-10 x100, gradients within 1e-4 x20")


# -- 10. PPO convergence ------------------------------------------------------------------

def test_ppo_convergence():
    start = time.monotonic()
    result = train(separable_store(), config=PpoConfig(seed=0, iterations=500))
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"training took {elapsed:.1f}s"
    rewards = [s.mean_reward for s in result.curve]
    first = next((i for i, r in enumerate(rewards) if r >= 0.95), None)
    assert first is not None and first < 500, "never reached mean reward 0.95"

    noise_result = train(noise_store(), config=PpoConfig(seed=0, iterations=500))
    tail = [s.mean_reward for s in noise_result.curve[-100:]]
    converged = sum(tail) / len(tail)
    assert abs(converged - 1 / 3) <= 0.05, f"noise-store reward {converged:.3f}"
    ok(f"PPO convergence: separable first >=0.95 at iter {first} ({elapsed:.1f}s); "
       f"noise store at {converged:.3f}")


# -- 11. MCQ fidelity -------------------------------------------------------------------------

def test_mcq_fidelity(real_estate_case):
    provider = TrigramHashEmbedding()
    pool = [
        "Real estate agent", "concrete contractor", "Manager of a real estate co-ownership",
        "Hospital", "Insurance Provider", "Government Agency", "School District",
    ]
    item = generate(real_estate_case, McqCategory.SENDER, pool, provider, seed=0)
    assert set(item.options) == {
        "Real Estate Company", "Real estate agent", "concrete contractor",
        "Manager of a real estate co-ownership",
    }
    assert item.options[item.answer_index] == "Real Estate Company"

    rng = random.Random(808)
    alphabet = "abcdefghijklmnopqrstuvwxyz "
    checked = 0
    while checked < 200:
        correct = "".join(rng.choice(alphabet) for _ in range(rng.randint(3, 18))).strip()
        candidates = list({
            "".join(rng.choice(alphabet) for _ in range(rng.randint(3, 18))).strip()
            for _ in range(rng.randint(5, 14))
        })
        usable = [c for c in candidates if c and " ".join(c.split()) != " ".join(correct.split())]
        if not correct or len(usable) < 3:
            continue
        got = rank_distractors(correct, usable, provider)
        assert got == brute_force_cosine_top3(correct, usable, provider)
        checked += 1
    ok("MCQ fidelity: worked-example option set reproduced; 200 pools match cosine oracle")


# -- 12. service contract -----------------------------------------------------------------------

def test_service_contract(demo_store):
    ids = list(demo_store.ids())
    items = []
    for i in range(100):
        if i % 25 == 24:
            items.append({"case_id": f"unknown-{i}", "response_text": "Choice: A"})
        else:
            items.append({"case_id": ids[i % len(ids)], "response_text": f"Choice: {'ABC'[i % 3]}"})
    payload = {"items": items, "mode": "lenient"}

    with serve(demo_store, "127.0.0.1:0") as service:
        def call(_):
            response = requests.post(f"{service.url}/v1/reward", json=payload, timeout=30)
            response.raise_for_status()
            return response.json()

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(call, range(8)))

    baseline = results[0]
    assert all(r == baseline for r in results[1:])
    assert [it["case_id"] for it in baseline["items"]] == [it["case_id"] for it in items]
    for i, item in enumerate(baseline["items"]):
        if i % 25 == 24:
            assert item["errors"] == ["unknown case"] and item["reward"] == 0.0
        else:
            assert item["errors"] != ["unknown case"]
    ok("service contract: 8 x 100-item batches identical and ordered; unknown ids isolated")
