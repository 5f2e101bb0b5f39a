from __future__ import annotations

import json
from pathlib import Path

import pytest

from sofix.cli import main
from tests.conftest import FIXTURE_EXPECTED_COUNTS, fixture_dump, write_jsonl


def read_pairs_file(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


@pytest.fixture
def extracted(tmp_path, stub_env):
    posts, blocks = fixture_dump(tmp_path)
    out = tmp_path / "pairs.jsonl"
    code = main(
        [
            "extract",
            "--posts", str(posts),
            "--blocks", str(blocks),
            "--tag-pattern", "python",
            "--out", str(out),
        ]
    )
    assert code == 0
    return tmp_path, out


class TestExtract:
    def test_fixture_pairs_and_counts(self, extracted, capsys):
        _, out = extracted
        pairs = read_pairs_file(out)
        assert len(pairs) == 3
        assert [p["pair_id"] for p in pairs] == ["1:0:2", "2:0:3", "3:0:2"]
        manifest = json.loads((out.parent / "pairs.jsonl.manifest.json").read_text())
        assert manifest["filter_counts"] == FIXTURE_EXPECTED_COUNTS
        assert manifest["interpreter_version"] == "stub-3.10"
        assert manifest["skips"] == {"unresolved_parent": 1, "rejected_chains": 1}
        assert "pairs.jsonl" in manifest["outputs"]

    def test_counts_table_printed(self, tmp_path, stub_env, capsys):
        posts, blocks = fixture_dump(tmp_path)
        out = tmp_path / "pairs.jsonl"
        main(["extract", "--posts", str(posts), "--blocks", str(blocks),
              "--tag-pattern", "python", "--out", str(out)])
        stdout = capsys.readouterr().out
        assert "All code snippets" in stdout
        assert "22" in stdout
        assert "Prior version AST error" in stdout

    def test_byte_identical_across_runs(self, tmp_path, stub_env):
        posts, blocks = fixture_dump(tmp_path)
        outputs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            assert main(["extract", "--posts", str(posts), "--blocks", str(blocks),
                         "--tag-pattern", "python", "--out", str(out)]) == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_normalized_contents_stored(self, extracted):
        _, out = extracted
        first = read_pairs_file(out)[0]
        assert first["failing_content"] == "x = <ERR>\n"
        assert first["fixed_content"] == "x = 1\n"
        assert first["parse_error"]["kind"] == "SyntaxError"

    def test_missing_posts_file_exit_1(self, tmp_path, stub_env):
        code = main(["extract", "--posts", str(tmp_path / "nope.jsonl"),
                     "--blocks", str(tmp_path / "nope2.jsonl"),
                     "--tag-pattern", "python", "--out", str(tmp_path / "o.jsonl")])
        assert code == 1

    def test_empty_blocks_exit_0_zero_counts(self, tmp_path, stub_env):
        posts = write_jsonl(tmp_path / "posts.jsonl", [
            {"post_id": 1, "post_type": "question", "parent_question_id": None, "tags": ["python"]}
        ])
        blocks = tmp_path / "blocks.jsonl"
        blocks.write_text("")
        out = tmp_path / "pairs.jsonl"
        assert main(["extract", "--posts", str(posts), "--blocks", str(blocks),
                     "--tag-pattern", "python", "--out", str(out)]) == 0
        assert out.read_text() == ""
        manifest = json.loads((out.parent / "pairs.jsonl.manifest.json").read_text())
        assert all(v == 0 for v in manifest["filter_counts"].values())

    def test_oracle_unavailable_exit_2(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SOFIX_WORKER_CMD", "/no/such/worker-binary")
        posts, blocks = fixture_dump(tmp_path)
        code = main(["extract", "--posts", str(posts), "--blocks", str(blocks),
                     "--tag-pattern", "python", "--out", str(tmp_path / "o.jsonl")])
        assert code == 2

    def test_parallel_workers_same_output(self, tmp_path, stub_env):
        posts, blocks = fixture_dump(tmp_path)
        serial = tmp_path / "serial.jsonl"
        parallel = tmp_path / "parallel.jsonl"
        assert main(["extract", "--posts", str(posts), "--blocks", str(blocks),
                     "--tag-pattern", "python", "--out", str(serial)]) == 0
        assert main(["extract", "--posts", str(posts), "--blocks", str(blocks),
                     "--tag-pattern", "python", "--out", str(parallel),
                     "--workers", "4"]) == 0
        assert serial.read_bytes() == parallel.read_bytes()


class TestValidate:
    def validated(self, extracted, extra_pairs=None):
        tmp_path, out = extracted
        if extra_pairs:
            with out.open("a") as fh:
                for record in extra_pairs:
                    fh.write(json.dumps(record) + "\n")
        validated = tmp_path / "validated.jsonl"
        code = main(["validate", "--pairs", str(out), "--out", str(validated),
                     "--timeout-secs", "1"])
        return code, validated

    def test_fills_runtime_outcomes(self, extracted):
        code, validated = self.validated(extracted)
        assert code == 0
        pairs = read_pairs_file(validated)
        assert len(pairs) == 3
        assert all(p["runtime_outcome"]["status"] == "no_error" for p in pairs)

    def test_exception_and_timeout_categories(self, extracted):
        tmp_path, out = extracted
        base = read_pairs_file(out)[0]
        raiser = dict(base, pair_id="9:0:2", post_id=9, fixed_content="f() <RAISE:NameError>")
        hanger = dict(base, pair_id="9:1:2", post_id=9, local_id=1, fixed_content="loop() <HANG>")
        code, validated = self.validated((tmp_path, out), [raiser, hanger])
        assert code == 0
        by_id = {p["pair_id"]: p for p in read_pairs_file(validated)}
        assert by_id["9:0:2"]["runtime_outcome"]["exc_type"] == "NameError"
        assert by_id["9:1:2"]["runtime_outcome"]["status"] == "timeout"
        assert by_id["9:1:2"]["runtime_outcome"]["duration_ms"] >= 1000

    def test_revalidation_idempotent(self, extracted):
        tmp_path, _ = extracted
        code, validated = self.validated(extracted)
        revalidated = tmp_path / "revalidated.jsonl"
        assert main(["validate", "--pairs", str(validated), "--out", str(revalidated),
                     "--timeout-secs", "1"]) == 0
        assert revalidated.read_bytes() == validated.read_bytes()


class TestStatsAndCompare:
    def test_stats_parse_csv(self, extracted, capsys):
        tmp_path, out = extracted
        csv_path = tmp_path / "parse.csv"
        assert main(["stats", "--pairs", str(out), "--which", "parse",
                     "--out", str(csv_path)]) == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "label,count,fraction"
        assert lines[1] == "SyntaxError: invalid syntax,3,1.000000"
        assert "| SyntaxError: invalid syntax | 3 | 100.00 |" in capsys.readouterr().out

    def test_stats_runtime_csv(self, extracted):
        tmp_path, out = extracted
        validated = tmp_path / "validated.jsonl"
        main(["validate", "--pairs", str(out), "--out", str(validated), "--timeout-secs", "1"])
        csv_path = tmp_path / "runtime.csv"
        assert main(["stats", "--pairs", str(validated), "--which", "runtime",
                     "--out", str(csv_path)]) == 0
        assert "No Error,3,1.000000" in csv_path.read_text()

    def test_compare_builtin_mit(self, tmp_path, capsys):
        csv_path = tmp_path / "runtime.csv"
        csv_path.write_text(
            "label,count,fraction\n"
            "NameError,24270,0.385500\n"
            "No Error,21332,0.338800\n"
            "ModuleNotFoundError,9927,0.157700\n"
            "EOFError,2223,0.035300\n"
            "FileNotFoundError,2156,0.034200\n"
            "SyntaxError,1013,0.016100\n"
            "TypeError,567,0.009000\n"
            "TclError,348,0.005500\n"
            "Execution Timeout,251,0.004000\n"
            "AttributeError,244,0.003900\n"
            "ImportError,116,0.001800\n"
            "other,518,0.008200\n"
        )
        out_json = tmp_path / "result.json"
        assert main(["compare", "--stats", str(csv_path), "--dist", "builtin:mit",
                     "--out", str(out_json)]) == 0
        result = json.loads(out_json.read_text())
        assert result["p_value"] < 0.01
        assert result["df"] == 5
        assert result["n"] == 62965
        assert "p = " in capsys.readouterr().out

    def test_compare_statistical_error_exit_3(self, tmp_path):
        csv_path = tmp_path / "runtime.csv"
        csv_path.write_text("label,count,fraction\nNameError,5,1.0\n")
        mapping = tmp_path / "mapping.json"
        mapping.write_text('{"map": {"NameError": "NotACategory"}, "default": "other"}')
        code = main(["compare", "--stats", str(csv_path), "--dist", "builtin:mit",
                     "--mapping", str(mapping)])
        assert code == 3

    def test_compare_single_category_reference_exit_3(self, tmp_path):
        csv_path = tmp_path / "runtime.csv"
        csv_path.write_text("label,count,fraction\nother,5,1.0\n")
        ref = tmp_path / "ref.json"
        ref.write_text('{"name": "tiny", "categories": [{"label": "other", "p": 1.0}]}')
        assert main(["compare", "--stats", str(csv_path), "--dist", str(ref)]) == 3


class TestMutateCommand:
    def test_mutate_emits_report_and_manifest(self, extracted):
        tmp_path, out = extracted
        csv_path = tmp_path / "mutants.csv"
        assert main(["mutate", "--pairs", str(out), "--kind", "delete",
                     "--trials", "50", "--seed", "11", "--out", str(csv_path)]) == 0
        assert csv_path.read_text().startswith("label,count,fraction")
        manifest = json.loads((tmp_path / "mutants.csv.manifest.json").read_text())
        assert manifest == {
            "kind": "delete", "seed": 11, "trials": 50,
            "snippet_count": 3, "interpreter": "stub-3.10",
        }

    def test_mutate_deterministic(self, extracted):
        tmp_path, out = extracted
        first = tmp_path / "m1.csv"
        second = tmp_path / "m2.csv"
        for path in (first, second):
            assert main(["mutate", "--pairs", str(out), "--kind", "replace",
                         "--trials", "40", "--seed", "5", "--out", str(path)]) == 0
        assert first.read_bytes() == second.read_bytes()


class TestAudit:
    def test_audit_deterministic_bytes(self, extracted):
        tmp_path, out = extracted
        first = tmp_path / "audit1.txt"
        second = tmp_path / "audit2.txt"
        for path in (first, second):
            assert main(["audit", "--pairs", str(out), "--sample", "2",
                         "--seed", "7", "--out", str(path)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert "--- failing" in first.read_text()

    def test_audit_oversample_exit_1(self, extracted):
        tmp_path, out = extracted
        code = main(["audit", "--pairs", str(out), "--sample", "100",
                     "--seed", "7", "--out", str(tmp_path / "audit.txt")])
        assert code == 1
