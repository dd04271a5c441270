"""CLI tests: exit codes, output formats, parity with library calls."""

from __future__ import annotations

import csv
import io
import json

import pytest

from cikit import cases as case_db
from cikit.cli import escape_prediction, main, read_predictions, unescape_prediction

from .conftest import DATA, FIXTURES


@pytest.fixture()
def demo_cases_path() -> str:
    return str(DATA / "cases_demo.json")


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_missing_required_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["eval", "--metric", "acc", "--gold", "g.txt"])  # --pred missing
        assert exc.value.code == 1

    def test_unknown_flag_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["stats", "--cases", "x.json", "--bogus"])
        assert exc.value.code == 1

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_file_is_data_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "stats", "--cases", str(tmp_path / "absent.json"))
        assert code == 2
        assert "error" in err

    def test_schema_error_is_data_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"nope": []}))
        code, _, _ = run(capsys, "stats", "--cases", str(bad))
        assert code == 2

    def test_success_is_zero(self, capsys, demo_cases_path):
        code, out, _ = run(capsys, "stats", "--cases", demo_cases_path)
        assert code == 0
        assert "Total" in out


class TestStats:
    def test_text_grid(self, capsys, demo_cases_path):
        code, out, _ = run(capsys, "stats", "--cases", demo_cases_path, "--format", "text")
        assert code == 0
        assert out.splitlines()[0].startswith("Category")

    def test_json_matches_library(self, capsys, demo_cases_path):
        code, out, _ = run(capsys, "stats", "--cases", demo_cases_path, "--format", "json")
        assert code == 0
        expected = case_db.ingest_cases(demo_cases_path).stats.to_json()
        assert json.loads(out) == expected

    def test_tsv_grid(self, capsys, demo_cases_path):
        code, out, _ = run(capsys, "stats", "--cases", demo_cases_path, "--format", "tsv")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out), delimiter="\t"))
        assert rows[0] == ["Category", "HIPAA", "GDPR", "AI ACT", "Total"]
        assert rows[-1][-1] == "10"

    def test_full_scale_grid_through_cli(self, capsys, tmp_path):
        from .conftest import make_full_scale_document

        path = tmp_path / "full.json"
        path.write_text(json.dumps(make_full_scale_document()))
        code, out, _ = run(capsys, "stats", "--cases", str(path), "--format", "json")
        assert code == 0
        grid = json.loads(out)
        assert grid["Total"]["Total"] == 6348
        assert grid["Total"]["HIPAA"] == 211
        assert grid["PROHIBITED"]["GDPR"] == 2462
        code, out, _ = run(capsys, "stats", "--cases", str(path), "--format", "text")
        assert code == 0 and "6,348" in out


class TestIngest:
    def test_ingest_regulations_counts(self, capsys):
        code, out, _ = run(capsys, "ingest-regulations", "--law", "gdpr",
                           "--file", str(DATA / "regulations_gdpr.json"))
        assert code == 0
        counts = json.loads(out)["counts"]
        assert counts["LAW"] == 1 and counts["ARTICLE"] == 3

    def test_law_mismatch_is_data_error(self, capsys):
        code, _, err = run(capsys, "ingest-regulations", "--law", "hipaa",
                           "--file", str(DATA / "regulations_gdpr.json"))
        assert code == 2

    def test_ingest_cases_reports_skips(self, capsys, tmp_path):
        doc = {"cases": [
            {"id": "a", "domain": "GDPR", "narrative": "x", "gold": "PERMITTED"},
            {"id": "b", "domain": "GDPR", "narrative": "x"},
        ]}
        path = tmp_path / "cases.json"
        path.write_text(json.dumps(doc))
        code, out, err = run(capsys, "ingest-cases", "--file", str(path))
        assert code == 0
        payload = json.loads(out)
        assert payload["cases"] == 1 and payload["skipped"] == 1
        assert "missing gold verdict" in err


class TestSplit:
    def test_split_matches_library(self, capsys, demo_cases_path):
        code, out, _ = run(capsys, "split", "--cases", demo_cases_path,
                           "--ratio", "0.8", "--seed", "11")
        assert code == 0
        store = case_db.ingest_cases(demo_cases_path).store
        expected = case_db.split(store, 0.8, 11).to_json()
        assert json.loads(out) == expected


class TestAskVerifyReward:
    def test_ask_renders_question(self, capsys, demo_cases_path, real_estate_question_text):
        code, out, _ = run(capsys, "ask", "--cases", demo_cases_path,
                           "--case-id", "gdpr-real-estate-001")
        assert code == 0
        assert out.rstrip("\n") == real_estate_question_text

    def test_verify_response_file(self, capsys, demo_cases_path):
        code, out, _ = run(capsys, "verify", "--cases", demo_cases_path,
                           "--case-id", "gdpr-real-estate-001",
                           "--response-file", str(FIXTURES / "real_estate_response.txt"))
        assert code == 0
        payload = json.loads(out)
        assert payload["reward"] == 1.0 and payload["choice"] == "A"

    def test_reward_summary(self, capsys, demo_cases_path, tmp_path):
        pred = tmp_path / "pred.tsv"
        lines = [
            "gdpr-real-estate-001\tChoice: A",
            "gdpr-newsletter-002\tChoice: B",
            "hipaa-research-004\tChoice: B",
            "hipaa-billing-005\tChoice: B",  # wrong: gold PROHIBITED
        ]
        pred.write_text("\n".join(lines) + "\n")
        code, out, _ = run(capsys, "reward", "--cases", demo_cases_path, "--pred", str(pred))
        assert code == 0
        payload = json.loads(out)
        assert [item["reward"] for item in payload["items"]] == [1.0, 1.0, 1.0, 0.0]
        assert payload["summary"]["mean_reward"] == 0.75

    def test_prediction_escaping_round_trip(self, tmp_path):
        text = "line one\nline two\twith tab\\backslash"
        path = tmp_path / "p.tsv"
        path.write_text(f"case-1\t{escape_prediction(text)}\n")
        assert read_predictions(str(path)) == [("case-1", text)]
        assert unescape_prediction(escape_prediction(text)) == text


class TestGenMcq:
    def test_gen_mcq_deterministic(self, capsys, demo_cases_path, tmp_path):
        pool = tmp_path / "pool.txt"
        pool.write_text("Real estate agent\nconcrete contractor\n"
                        "Manager of a real estate co-ownership\nHospital\n")
        argv = ["gen-mcq", "--cases", demo_cases_path, "--case-id", "gdpr-real-estate-001",
                "--category", "sender", "--pool-file", str(pool), "--seed", "4"]
        code_a, out_a, _ = run(capsys, *argv)
        code_b, out_b, _ = run(capsys, *argv)
        assert code_a == code_b == 0
        assert out_a == out_b
        item = json.loads(out_a)
        assert set(item["options"]) == {
            "Real Estate Company", "Real estate agent", "concrete contractor",
            "Manager of a real estate co-ownership",
        }


class TestEval:
    def test_accuracy(self, capsys, tmp_path):
        (tmp_path / "gold.txt").write_text("a\nb\nc\na\n")
        (tmp_path / "pred.txt").write_text("a\nb\nx\na\n")
        code, out, _ = run(capsys, "eval", "--metric", "acc",
                           "--gold", str(tmp_path / "gold.txt"),
                           "--pred", str(tmp_path / "pred.txt"))
        assert code == 0
        assert json.loads(out)["value"] == 0.75

    def test_nld(self, capsys, tmp_path):
        (tmp_path / "gold.txt").write_text("1\n")
        (tmp_path / "pred.txt").write_text("3\n")
        code, out, _ = run(capsys, "eval", "--metric", "nld", "--cap", "300",
                           "--gold", str(tmp_path / "gold.txt"),
                           "--pred", str(tmp_path / "pred.txt"))
        assert code == 0
        assert abs(json.loads(out)["value"] - 0.878556) < 1e-4

    def test_length_mismatch_is_data_error(self, capsys, tmp_path):
        (tmp_path / "gold.txt").write_text("a\nb\n")
        (tmp_path / "pred.txt").write_text("a\n")
        code, _, _ = run(capsys, "eval", "--metric", "acc",
                         "--gold", str(tmp_path / "gold.txt"),
                         "--pred", str(tmp_path / "pred.txt"))
        assert code == 2


class TestTrainPpo:
    def test_curve_csv_written(self, capsys, tmp_path):
        doc = {"cases": [
            {"id": f"c{i}", "domain": "GDPR", "narrative": "n", "gold": "PROHIBITED"}
            for i in range(6)
        ]}
        cases_path = tmp_path / "cases.json"
        cases_path.write_text(json.dumps(doc))
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"iterations": 4, "batch_size": 8, "seed": 1,
                                           "lambda": 0.9}))
        out_path = tmp_path / "curve.csv"
        code, _, err = run(capsys, "train-ppo", "--cases", str(cases_path),
                           "--config", str(config_path), "--out", str(out_path))
        assert code == 0
        rows = list(csv.reader(out_path.open()))
        assert rows[0] == ["iteration", "mean_reward", "approx_kl", "objective"]
        assert len(rows) == 5
        assert "final iteration 3" in err


class TestOutFlag:
    def test_out_writes_file_instead_of_stdout(self, capsys, demo_cases_path, tmp_path):
        target = tmp_path / "stats.json"
        code, out, _ = run(capsys, "stats", "--cases", demo_cases_path,
                           "--format", "json", "--out", str(target))
        assert code == 0
        assert out == ""
        assert json.loads(target.read_text())["Total"]["Total"] == 10
