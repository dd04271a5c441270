"""Regulation hierarchy and case database: ingest, search, stats, split.

Run: python3 demos/02_regulations_and_cases.py
"""

import json
from pathlib import Path

from cikit import ingest_cases, ingest_regulations, split
from cikit.cases import TripleStore

DATA = Path(__file__).parent.parent / "data"

# regulations load one law per document into a path-addressable tree
document = json.loads((DATA / "regulations_gdpr.json").read_text())
store, report = ingest_regulations(document)
print("node counts per level:", dict(report.counts))

node = store.get(("GDPR", "Chapter III", "Article 17"))
print("\nGDPR / Chapter III / Article 17:", node.title)
print(" ", node.text[:90], "...")

print("\nsearch 'erasure':")
for path, snippet in store.search("erasure"):
    print("  ", " / ".join(path), "->", snippet[:60])

# the case database: narratives + CI annotations + gold verdicts
result = ingest_cases(DATA / "cases_demo.json")
print(f"\nloaded {len(result.store)} cases, {len(result.skipped)} skipped")
print(result.stats.render_grid())

# stratified split: train gets floor(ratio * cell) of every (domain, verdict)
# cell, remainder to test. On this tiny demo set most cells hold a single
# case, and floor(0.8 * 1) = 0, so nearly everything lands in test; at real
# scale the split is the expected 8:2.
assignment = split(result.store, ratio=0.8, seed=0)
print(f"\n8:2 split -> {len(assignment.train_ids)} train / {len(assignment.test_ids)} test")
print("test ids:", sorted(assignment.test_ids))

# the sender-subject-recipient knowledge graph
triples = TripleStore.load_tsv(DATA / "triples_demo.tsv")
print(f"\n{len(triples)} triples; senders to 'Researchers':")
for t in triples.query(recipient="Researchers"):
    print("  ", t.sender, "->", t.subject, "->", t.recipient, sorted(t.attributes))
