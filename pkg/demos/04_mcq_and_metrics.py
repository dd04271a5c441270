"""MCQ generation with semantically-near distractors, grading, and metrics.

Run: python3 demos/04_mcq_and_metrics.py
"""

from pathlib import Path

from cikit import ingest_cases
from cikit.cases import TripleStore
from cikit.mcq import McqCategory, TrigramHashEmbedding, generate, grade, render_mcq_prompt
from cikit.metrics import (
    LabeledPrediction,
    TermPrediction,
    accuracy,
    balanced_accuracy,
    macro_f1,
    normalized_log_distance,
)

DATA = Path(__file__).parent.parent / "data"

store = ingest_cases(DATA / "cases_demo.json").store
case = store.get("hipaa-research-004")

# candidate pools come from the knowledge graph's role labels
triples = TripleStore.load_tsv(DATA / "triples_demo.tsv")
pool = list(triples.role_labels("sender"))
print("candidate pool:", pool)

provider = TrigramHashEmbedding()  # deterministic char-trigram fallback embedder
item = generate(case, McqCategory.SENDER, pool, provider, seed=7)
print("\n--- rendered MCQ ---")
print(render_mcq_prompt(item))
print("\nanswer:", item.answer_letter)

# grade an answer sheet (unanswered items count wrong)
items = [item]
for category in (McqCategory.RECIPIENT, McqCategory.SUBJECT):
    items.append(generate(case, category, list(triples.role_labels()), provider, seed=7))
answers = {items[0].id: items[0].answer_letter, items[1].id: "A", items[2].id: items[2].answer_letter}
report = grade(items, answers)
print("\naccuracy:", round(report.accuracy, 3))
for category, score in report.per_category.items():
    if score.total:
        print(f"  {category.value.lower():10s} {score.correct}/{score.total}")

# the four evaluation metrics
preds = [LabeledPrediction(g, p) for g, p in
         [("A", "A"), ("A", "B"), ("B", "B"), ("C", "C"), ("C", "A"), ("C", "C")]]
print("\naccuracy          :", round(accuracy(preds), 4))
print("balanced accuracy :", round(balanced_accuracy(preds), 4))
print("macro F1          :", round(macro_f1(preds), 4))
terms = [TermPrediction(gold_months=12, pred_months=18), TermPrediction(60, 60)]
print("norm. log distance:", round(normalized_log_distance(terms, cap_months=300), 4))
