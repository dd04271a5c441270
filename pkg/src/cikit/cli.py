"""Command-line entry point.

One subcommand per library capability:

    ingest-regulations  load a regulation tree, report node counts per level
    ingest-cases        load a case file, report the stats grid and skips
    stats               domain-by-verdict statistics grid for a case file
    split               stratified train/test split
    ask                 render the compliance question for one case
    verify              verify a response file against one case
    reward              batch rewards for a predictions file
    gen-mcq             generate a contextual-understanding MCQ
    eval                accuracy / balanced accuracy / macro-F1 / norm. log distance
    train-ppo           train the toy PPO policy, emit the learning curve
    serve               run the reward HTTP service

Exit codes: 0 success, 1 usage error, 2 data/schema error. Machine-readable
output goes to stdout (or --out), diagnostics to stderr.

Predictions files are one record per line: case_id, a tab, then the response
text with backslash escapes for tab/newline/backslash.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import cases as case_db
from . import mcq as mcq_gen
from . import metrics as eval_metrics
from . import ppo as rl
from . import regulations as reg
from . import service as reward_service
from . import verifier
from .errors import CikitError

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract wants 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _emit_json(payload, out: str | None) -> None:
    _write_output(json.dumps(payload, indent=2, ensure_ascii=False), out)


def _grid_tsv(stats: case_db.StatsTable) -> str:
    rows = stats.to_json()
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    header = ["Category", "HIPAA", "GDPR", "AI ACT", "Total"]
    writer.writerow(header)
    for name, cells in rows.items():
        writer.writerow([name] + [cells[c] for c in header[1:]])
    return buf.getvalue()


def unescape_prediction(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            mapped = {"t": "\t", "n": "\n", "\\": "\\"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def escape_prediction(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def read_predictions(path: str) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            case_id, sep, payload = line.partition("\t")
            if not sep:
                raise CikitError(f"{path}:{line_no}: expected 'case_id<TAB>response'")
            pairs.append((case_id, unescape_prediction(payload)))
    return pairs


def _load_json_file(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise CikitError(f"invalid JSON in {path}: {exc}") from exc


def _load_store(path: str) -> case_db.CaseStore:
    result = case_db.ingest_cases(path)
    for label, reason in result.skipped:
        print(f"skipped record {label}: {reason}", file=sys.stderr)
    return result.store


# -- subcommand handlers -----------------------------------------------------

def _cmd_ingest_regulations(args) -> int:
    document = _load_json_file(args.file)
    if args.law and isinstance(document, dict):
        declared = document.get("law", "")
        if declared and declared.lower().replace(" ", "_") != args.law.lower().replace("-", "_"):
            raise CikitError(f"--law {args.law} does not match document law {declared!r}")
    _, report = reg.ingest_regulations(document)
    if args.format == "tsv":
        lines = [f"{level}\t{count}" for level, count in sorted(report.counts.items())]
        _write_output("\n".join(lines) + "\n", args.out)
    else:
        _emit_json({"counts": dict(report.counts), "total": report.total}, args.out)
    return 0


def _cmd_ingest_cases(args) -> int:
    result = case_db.ingest_cases(args.file)
    for label, reason in result.skipped:
        print(f"skipped record {label}: {reason}", file=sys.stderr)
    payload = {
        "cases": len(result.store),
        "skipped": len(result.skipped),
        "stats": result.stats.to_json(),
    }
    if args.format == "tsv":
        _write_output(_grid_tsv(result.stats), args.out)
    else:
        _emit_json(payload, args.out)
    return 0


def _cmd_stats(args) -> int:
    result = case_db.ingest_cases(args.cases)
    if args.format == "text":
        _write_output(result.stats.render_grid() + "\n", args.out)
    elif args.format == "tsv":
        _write_output(_grid_tsv(result.stats), args.out)
    else:
        _emit_json(result.stats.to_json(), args.out)
    return 0


def _cmd_split(args) -> int:
    store = _load_store(args.cases)
    assignment = case_db.split(store, args.ratio, args.seed)
    if args.format == "tsv":
        lines = [f"{cid}\ttrain" for cid in sorted(assignment.train_ids)]
        lines += [f"{cid}\ttest" for cid in sorted(assignment.test_ids)]
        _write_output("\n".join(lines) + "\n", args.out)
    else:
        _emit_json(assignment.to_json(), args.out)
    return 0


def _cmd_ask(args) -> int:
    store = _load_store(args.cases)
    case = store.get(args.case_id)
    question = verifier.build_compliance_question(case)
    _write_output(question.prompt, args.out)
    return 0


def _cmd_verify(args) -> int:
    store = _load_store(args.cases)
    case = store.get(args.case_id)
    response_text = Path(args.response_file).read_text(encoding="utf-8")
    question = verifier.build_compliance_question(case)
    report = verifier.verify(response_text, question, strict_ci=args.strict,
                             annotation=case.annotation)
    _emit_json({
        "case_id": case.id,
        "format_ok": report.format_ok,
        "errors": report.error_strings(),
        "choice": report.choice.letter if report.choice else None,
        "ci_extracted": report.ci_extracted,
        "ci_consistent": report.ci_consistent,
        "correct": report.correct,
        "reward": report.reward,
    }, args.out)
    return 0


def _cmd_reward(args) -> int:
    store = _load_store(args.cases)
    pairs = read_predictions(args.pred)
    items = []
    total = 0.0
    failures = 0
    for case_id, response_text in pairs:
        if case_id not in store:
            items.append({"case_id": case_id, "reward": 0.0, "errors": ["unknown case"]})
            failures += 1
            continue
        case = store.get(case_id)
        question = verifier.build_compliance_question(case)
        report = verifier.verify(response_text, question, strict_ci=args.strict,
                                 annotation=case.annotation)
        items.append({
            "case_id": case_id,
            "reward": report.reward,
            "format_ok": report.format_ok,
            "parsed_choice": report.choice.letter if report.choice else None,
            "errors": report.error_strings(),
        })
        total += report.reward
        if not report.format_ok:
            failures += 1
    summary = {
        "mean_reward": (total / len(items)) if items else None,
        "format_failures": failures,
    }
    _emit_json({"items": items, "summary": summary}, args.out)
    return 0


def _cmd_gen_mcq(args) -> int:
    store = _load_store(args.cases)
    case = store.get(args.case_id)
    pool = [line.strip() for line in Path(args.pool_file).read_text(encoding="utf-8").splitlines()
            if line.strip()]
    category = mcq_gen.McqCategory(args.category.upper())
    provider = mcq_gen.TrigramHashEmbedding()
    item = mcq_gen.generate(case, category, pool, provider, args.seed)
    payload = item.to_json()
    if args.render:
        payload["prompt"] = mcq_gen.render_mcq_prompt(item)
    _emit_json(payload, args.out)
    return 0


def _read_label_file(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def _cmd_eval(args) -> int:
    gold = _read_label_file(args.gold)
    pred = _read_label_file(args.pred)
    if len(gold) != len(pred):
        raise CikitError(f"gold has {len(gold)} labels but pred has {len(pred)}")
    if args.metric == "nld":
        pairs = [eval_metrics.TermPrediction(float(g), float(p)) for g, p in zip(gold, pred)]
        value = eval_metrics.normalized_log_distance(pairs, args.cap)
    else:
        pairs = [eval_metrics.LabeledPrediction(g, p) for g, p in zip(gold, pred)]
        fn = {
            "acc": eval_metrics.accuracy,
            "bacc": eval_metrics.balanced_accuracy,
            "f1": eval_metrics.macro_f1,
        }[args.metric]
        value = fn(pairs)
    _emit_json({"metric": args.metric, "value": value, "samples": len(pairs)}, args.out)
    return 0


def _cmd_train_ppo(args) -> int:
    store = _load_store(args.cases)
    config = rl.PpoConfig.from_json(_load_json_file(args.config)) if args.config else rl.PpoConfig()
    result = rl.train(store, config=config)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "mean_reward", "approx_kl", "objective"])
    for row in result.curve_rows():
        writer.writerow([row["iteration"], f"{row['mean_reward']:.6f}",
                         f"{row['approx_kl']:.8f}", f"{row['objective']:.8f}"])
    _write_output(buf.getvalue(), args.out)
    final = result.curve[-1]
    print(f"final iteration {final.iteration}: mean_reward={final.mean_reward:.4f}", file=sys.stderr)
    return 0


def _cmd_serve(args) -> int:
    store = _load_store(args.cases)
    service = reward_service.serve(store, args.bind, expose_gold=args.expose_gold)
    print(f"serving {len(store)} cases on {service.url}", file=sys.stderr, flush=True)
    try:
        service.thread.join()
    except KeyboardInterrupt:
        print("shutting down", file=sys.stderr)
        service.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cikit", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(handler=handler)
        p.add_argument("--out", help="write output to a file instead of stdout")
        return p

    p = add("ingest-regulations", _cmd_ingest_regulations, help="load a regulation tree")
    p.add_argument("--law", help="expected law (gdpr, hipaa, ai_act); checked against the document")
    p.add_argument("--file", required=True)
    p.add_argument("--format", choices=["json", "tsv"], default="json")

    p = add("ingest-cases", _cmd_ingest_cases, help="load a case file")
    p.add_argument("--file", required=True)
    p.add_argument("--format", choices=["json", "tsv"], default="json")

    p = add("stats", _cmd_stats, help="statistics grid for a case file")
    p.add_argument("--cases", required=True)
    p.add_argument("--format", choices=["json", "tsv", "text"], default="text")

    p = add("split", _cmd_split, help="stratified train/test split")
    p.add_argument("--cases", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "tsv"], default="json")

    p = add("ask", _cmd_ask, help="render the compliance question for a case")
    p.add_argument("--cases", required=True)
    p.add_argument("--case-id", required=True)

    p = add("verify", _cmd_verify, help="verify a response against a case")
    p.add_argument("--cases", required=True)
    p.add_argument("--case-id", required=True)
    p.add_argument("--response-file", required=True)
    p.add_argument("--strict", action="store_true", help="require the full trajectory layout")

    p = add("reward", _cmd_reward, help="batch rewards for a predictions file")
    p.add_argument("--cases", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--strict", action="store_true")

    p = add("gen-mcq", _cmd_gen_mcq, help="generate one MCQ")
    p.add_argument("--cases", required=True)
    p.add_argument("--case-id", required=True)
    p.add_argument("--category", required=True,
                   choices=["sender", "recipient", "subject", "attribute"])
    p.add_argument("--pool-file", required=True, help="candidate labels, one per line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--render", action="store_true", help="include the rendered prompt")

    p = add("eval", _cmd_eval, help="compute an evaluation metric")
    p.add_argument("--metric", required=True, choices=["acc", "bacc", "f1", "nld"])
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--cap", type=float, default=300.0, help="months cap for nld")

    p = add("train-ppo", _cmd_train_ppo, help="train the toy PPO policy")
    p.add_argument("--config", help="JSON config file (PpoConfig fields)")
    p.add_argument("--cases", required=True)

    p = add("serve", _cmd_serve, help="run the reward HTTP service")
    p.add_argument("--cases", required=True)
    p.add_argument("--bind", default=None, help="host:port (CIKIT_BIND env var overrides)")
    p.add_argument("--expose-gold", action="store_true")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (CikitError, KeyError, ValueError, OSError) as exc:
        print(f"cikit: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
