"""Read post metadata and code-block version histories from a two-file dump.

Input format (both UTF-8, one JSON object per line, unknown fields ignored):

    posts.jsonl   {"post_id": int, "post_type": "question"|"answer",
                   "parent_question_id": int|null, "tags": [str, ...]}
    blocks.jsonl  {"block_id": int, "post_id": int, "local_id": int,
                   "version_ordinal": int, "block_type": "text"|"code",
                   "content": str, "created_at": RFC3339 str}

Answers carry no tags of their own; their tags resolve through the parent
question. Blocks whose post cannot be resolved are skipped and counted,
not fatal: dumps are commonly truncated slices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .errors import IngestError, UnresolvedParentError

POST_TYPES = ("question", "answer")
BLOCK_TYPES = ("text", "code")


@dataclass(frozen=True)
class PostRecord:
    post_id: int
    post_type: str
    parent_question_id: int | None
    tags: list[str]

    def __post_init__(self):
        if self.post_type not in POST_TYPES:
            raise IngestError(f"post {self.post_id}: bad post_type {self.post_type!r}")
        if self.post_type == "answer" and self.parent_question_id is None:
            raise IngestError(f"post {self.post_id}: answer without parent_question_id")
        if self.post_type == "question" and self.parent_question_id is not None:
            raise IngestError(f"post {self.post_id}: question with parent_question_id")


@dataclass(frozen=True)
class BlockVersionRecord:
    block_id: int
    post_id: int
    local_id: int
    version_ordinal: int
    block_type: str
    content: str
    created_at: str

    def __post_init__(self):
        if self.block_type not in BLOCK_TYPES:
            raise IngestError(f"block {self.block_id}: bad block_type {self.block_type!r}")
        if self.version_ordinal < 1:
            raise IngestError(f"block {self.block_id}: version_ordinal must be >= 1")


@dataclass
class FilterCounts:
    """Funnel counters; monotone non-increasing in field order."""

    total_code_blocks: int = 0
    tag_matched: int = 0
    ast_parseable: int = 0
    prior_version_exists: int = 0
    prior_version_parse_error: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "total_code_blocks": self.total_code_blocks,
            "tag_matched": self.tag_matched,
            "ast_parseable": self.ast_parseable,
            "prior_version_exists": self.prior_version_exists,
            "prior_version_parse_error": self.prior_version_parse_error,
        }

    def render_table(self, pattern: str) -> str:
        rows = [
            ("All code snippets", self.total_code_blocks),
            (f"Block matched {pattern!r} tag", self.tag_matched),
            ("Content AST parseable", self.ast_parseable),
            ("Prior version exists", self.prior_version_exists),
            ("Prior version AST error", self.prior_version_parse_error),
        ]
        width = max(len(label) for label, _ in rows)
        lines = [f"{'Filter Metric'.ljust(width)}  Entity Block Count"]
        for label, count in rows:
            lines.append(f"{label.ljust(width)}  {count}")
        return "\n".join(lines)


@dataclass
class SkipCounters:
    """Non-fatal records dropped along the way, for the run manifest."""

    unresolved_parent: int = 0
    rejected_chains: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "unresolved_parent": self.unresolved_parent,
            "rejected_chains": self.rejected_chains,
        }


def _parse_line(line: str, lineno: int, source: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{source}, line {lineno}: malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise IngestError(f"{source}, line {lineno}: expected an object")
    return obj


def _require(obj: dict, key: str, types, lineno: int, source: str):
    if key not in obj:
        raise IngestError(f"{source}, line {lineno}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise IngestError(f"{source}, line {lineno}: field {key!r} has wrong type")
    return value


def load_posts(stream: IO[str], source: str = "posts") -> dict[int, PostRecord]:
    """Load the full posts map; duplicate post_id is an error."""
    posts: dict[int, PostRecord] = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        obj = _parse_line(line, lineno, source)
        post_id = _require(obj, "post_id", int, lineno, source)
        post_type = _require(obj, "post_type", str, lineno, source)
        parent = obj.get("parent_question_id")
        if parent is not None and (not isinstance(parent, int) or isinstance(parent, bool)):
            raise IngestError(f"{source}, line {lineno}: field 'parent_question_id' has wrong type")
        tags = obj.get("tags", [])
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise IngestError(f"{source}, line {lineno}: field 'tags' must be a list of strings")
        try:
            record = PostRecord(post_id, post_type, parent, [t.lower() for t in tags])
        except IngestError as exc:
            raise IngestError(f"{source}, line {lineno}: {exc}") from None
        if post_id in posts:
            raise IngestError(f"{source}, line {lineno}: duplicate post_id {post_id}")
        posts[post_id] = record
    return posts


def dump_posts(posts: dict[int, PostRecord], stream: IO[str]) -> None:
    """Serialize a posts map back to the line format (sorted by post_id)."""
    for post_id in sorted(posts):
        post = posts[post_id]
        stream.write(
            json.dumps(
                {
                    "post_id": post.post_id,
                    "post_type": post.post_type,
                    "parent_question_id": post.parent_question_id,
                    "tags": post.tags,
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def load_blocks(stream: IO[str], source: str = "blocks") -> Iterator[BlockVersionRecord]:
    """Stream block version records; malformed lines abort with the line number."""
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        obj = _parse_line(line, lineno, source)
        try:
            yield BlockVersionRecord(
                block_id=_require(obj, "block_id", int, lineno, source),
                post_id=_require(obj, "post_id", int, lineno, source),
                local_id=_require(obj, "local_id", int, lineno, source),
                version_ordinal=_require(obj, "version_ordinal", int, lineno, source),
                block_type=_require(obj, "block_type", str, lineno, source),
                content=_require(obj, "content", str, lineno, source),
                created_at=_require(obj, "created_at", str, lineno, source),
            )
        except IngestError as exc:
            raise IngestError(f"{source}, line {lineno}: {exc}") from None


def resolve_tags(post: PostRecord, posts: dict[int, PostRecord]) -> list[str]:
    """Questions return their own tags; answers return the parent question's."""
    if post.post_type == "question":
        return post.tags
    parent = posts.get(post.parent_question_id)
    if parent is None:
        raise UnresolvedParentError(
            f"answer {post.post_id} references missing question {post.parent_question_id}"
        )
    return parent.tags


def tag_matches(tags: Iterable[str], pattern: str) -> bool:
    """True iff any tag contains the pattern as a case-insensitive substring.

    The pattern "python" matches tags "python", "python-3.x", "python-2.7".
    """
    needle = pattern.lower()
    return any(needle in tag.lower() for tag in tags)


def select_candidate_blocks(
    posts: dict[int, PostRecord],
    blocks: Iterable[BlockVersionRecord],
    pattern: str,
    counts: FilterCounts,
    skips: SkipCounters | None = None,
) -> Iterator[tuple[BlockVersionRecord, list[str]]]:
    """Yield code blocks whose resolved tags match the pattern.

    Text blocks are never counted: the funnel starts at code blocks.
    Blocks of unknown posts, and answers with missing parents, are skipped
    and counted in `skips`.
    """
    tag_cache: dict[int, list[str] | None] = {}
    for record in blocks:
        if record.block_type != "code":
            continue
        counts.total_code_blocks += 1
        if record.post_id not in tag_cache:
            post = posts.get(record.post_id)
            if post is None:
                tag_cache[record.post_id] = None
            else:
                try:
                    tag_cache[record.post_id] = resolve_tags(post, posts)
                except UnresolvedParentError:
                    tag_cache[record.post_id] = None
        tags = tag_cache[record.post_id]
        if tags is None:
            if skips is not None:
                skips.unresolved_parent += 1
            continue
        if tag_matches(tags, pattern):
            counts.tag_matched += 1
            yield record, tags
