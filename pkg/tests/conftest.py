from __future__ import annotations

import json
import shlex
import sys
from pathlib import Path

import pytest

STUB_WORKER = Path(__file__).parent / "stub_worker.py"


def stub_worker_cmd() -> list[str]:
    return [sys.executable, str(STUB_WORKER)]


@pytest.fixture
def stub_cmd() -> list[str]:
    return stub_worker_cmd()


@pytest.fixture
def stub_env(monkeypatch) -> None:
    monkeypatch.setenv("SOFIX_WORKER_CMD", shlex.join(stub_worker_cmd()))


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def fixture_dump(tmp_path: Path) -> tuple[Path, Path]:
    """Hand-built dump: 12 code-block version chains plus a text block.

    Chain inventory (post, local): err->ok pairs at (1,0), (3,0) and the
    err->err->ok at (2,0); ok->ok at (1,1); single versions, reversed
    fixes, never-fixed chains; non-contiguous ordinals at (2,2); one
    non-matching tag chain at (4,0); one unresolved-parent chain at (5,0).

    Hand-counted funnel: 22 code blocks, 20 tag-matched, 10 parseable,
    6 with a prior version, 3 with a failing prior version -> 3 pairs.
    """
    posts = [
        {"post_id": 1, "post_type": "question", "parent_question_id": None, "tags": ["python"]},
        {"post_id": 2, "post_type": "question", "parent_question_id": None, "tags": ["python-3.x", "pandas"]},
        {"post_id": 3, "post_type": "answer", "parent_question_id": 1, "tags": []},
        {"post_id": 4, "post_type": "question", "parent_question_id": None, "tags": ["json"]},
        {"post_id": 5, "post_type": "answer", "parent_question_id": 999, "tags": []},
    ]
    ts = "2019-01-01T00:00:00Z"
    raw = [
        # (post_id, local_id, ordinal, block_type, content)
        (1, 0, 1, "code", "    x = <ERR>\n"),
        (1, 0, 2, "code", "    x = 1\n"),
        (1, 1, 1, "code", "y = 2\n"),
        (1, 1, 2, "code", "y = 3\n"),
        (2, 0, 1, "code", "def f(:<ERR>\n"),
        (2, 0, 2, "code", "def f(:  <ERR> still\n"),
        (2, 0, 3, "code", "def f():\n    return 1\n"),
        (2, 1, 1, "code", "a, b = 1, 2\n"),
        (3, 0, 1, "code", "print x <ERR>\n"),
        (3, 0, 2, "code", "print(x)\n"),
        (3, 1, 1, "code", "z = [1]\n"),
        (3, 1, 2, "code", "z = [1<ERR>\n"),
        (2, 2, 1, "code", "q = 0\n"),
        (2, 2, 3, "code", "q = 1\n"),
        (1, 2, 1, "code", "lonely <ERR>\n"),
        (2, 3, 1, "code", "import os\n"),
        (2, 3, 2, "code", "import os, sys\n"),
        (2, 3, 3, "code", "import sys\n"),
        (1, 3, 1, "code", "never <ERR>\n"),
        (1, 3, 2, "code", "never fixed <ERR>\n"),
        (4, 0, 1, "code", "{\"k\": 1}\n"),
        (5, 0, 1, "code", "orphan = 1\n"),
        (1, 9, 1, "text", "This is prose, not code.\n"),
    ]
    blocks = [
        {
            "block_id": i + 100,
            "post_id": post_id,
            "local_id": local_id,
            "version_ordinal": ordinal,
            "block_type": block_type,
            "content": content,
            "created_at": ts,
        }
        for i, (post_id, local_id, ordinal, block_type, content) in enumerate(raw)
    ]
    posts_path = write_jsonl(tmp_path / "posts.jsonl", posts)
    blocks_path = write_jsonl(tmp_path / "blocks.jsonl", blocks)
    return posts_path, blocks_path


FIXTURE_EXPECTED_COUNTS = {
    "total_code_blocks": 22,
    "tag_matched": 20,
    "ast_parseable": 10,
    "prior_version_exists": 6,
    "prior_version_parse_error": 3,
}
