"""Desk-scale PPO against the compliance reward.

Builds a linearly-separable synthetic case store (the domain one-hot
determines the gold verdict) and trains the linear-softmax policy with GAE
advantages, the clipped surrogate, and a KL penalty. The learning curve
tracks mean reward, approx-KL, and objective per iteration.
Run: python3 demos/05_train_ppo.py
"""

import numpy as np

from cikit.cases import CaseStore, LegalCase
from cikit.ci import ComplianceVerdict, Domain
from cikit.ppo import PpoConfig, policy_logprobs, train

GOLD_BY_DOMAIN = {
    Domain.GDPR: ComplianceVerdict.PROHIBITED,
    Domain.HIPAA: ComplianceVerdict.PERMITTED,
    Domain.AI_ACT: ComplianceVerdict.NOT_APPLICABLE,
}

store = CaseStore([
    LegalCase(id=f"{domain.value.lower()}-{i:02d}", domain=domain,
              narrative=f"synthetic case {i}", gold=verdict)
    for domain, verdict in GOLD_BY_DOMAIN.items()
    for i in range(20)
])

config = PpoConfig(seed=0, iterations=300)
print(f"training: {len(store)} cases, {config.iterations} iterations, "
      f"batch {config.batch_size}, lr {config.lr_actor}/{config.lr_critic}")

result = train(store, config=config)

print("\niteration  mean_reward  approx_kl   objective")
for stats in result.curve[:: max(1, config.iterations // 10)]:
    print(f"{stats.iteration:9d}  {stats.mean_reward:11.3f}  {stats.approx_kl:9.5f}  {stats.objective:10.5f}")
final = result.curve[-1]
print(f"{final.iteration:9d}  {final.mean_reward:11.3f}  {final.approx_kl:9.5f}  {final.objective:10.5f}")

# inspect what the policy learned: action probabilities per domain
print("\nlearned P(choice | domain):   A      B      C")
for domain in GOLD_BY_DOMAIN:
    case = next(c for c in store if c.domain is domain)
    x = result.featurizer.featurize(case)
    probs = np.exp(policy_logprobs(result.policy, x[None, :]))[0]
    gold = GOLD_BY_DOMAIN[domain]
    print(f"  {domain.display:7s} (gold {gold.value[:4]})  "
          + "  ".join(f"{p:.3f}" for p in probs))
