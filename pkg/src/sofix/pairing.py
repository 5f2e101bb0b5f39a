"""Walk block version chains and emit (parse-error, fix) pairs.

A pair is a version that fails AST parsing followed immediately by one
that parses: the human edit between them is the fix. Only the immediate
predecessor counts, so a chain err->err->ok yields exactly one pair and
err->ok->err->ok yields two.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Iterator

from .errors import ContractError, IngestError
from .ingest import BlockVersionRecord, FilterCounts
from .normalize import normalize_snippet
from .oracle import ParseOutcome, RuntimeOutcome

ParseOracle = Callable[[str], ParseOutcome]


@dataclass(frozen=True)
class VersionChain:
    post_id: int
    local_id: int
    versions: tuple[BlockVersionRecord, ...]


@dataclass
class ErrorFixPair:
    pair_id: str
    post_id: int
    local_id: int
    tags: list[str]
    failing_version_ordinal: int
    fixed_version_ordinal: int
    failing_content: str
    fixed_content: str
    parse_error: ParseOutcome
    runtime_outcome: RuntimeOutcome | None = None

    def __post_init__(self):
        if self.fixed_version_ordinal != self.failing_version_ordinal + 1:
            raise ContractError(
                f"pair {self.pair_id}: fix must immediately follow the failing version"
            )
        if self.parse_error.status != "error":
            raise ContractError(f"pair {self.pair_id}: parse_error must be an error outcome")
        if self.failing_content == self.fixed_content:
            raise ContractError(f"pair {self.pair_id}: failing and fixed content are identical")

    def sort_key(self) -> tuple[int, int, int]:
        return (self.post_id, self.local_id, self.fixed_version_ordinal)

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "post_id": self.post_id,
            "local_id": self.local_id,
            "tags": self.tags,
            "failing_version_ordinal": self.failing_version_ordinal,
            "fixed_version_ordinal": self.fixed_version_ordinal,
            "failing_content": self.failing_content,
            "fixed_content": self.fixed_content,
            "parse_error": self.parse_error.to_pair_json(),
            "runtime_outcome": (
                None if self.runtime_outcome is None else self.runtime_outcome.to_pair_json()
            ),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ErrorFixPair":
        runtime = obj.get("runtime_outcome")
        return cls(
            pair_id=obj["pair_id"],
            post_id=obj["post_id"],
            local_id=obj["local_id"],
            tags=list(obj["tags"]),
            failing_version_ordinal=obj["failing_version_ordinal"],
            fixed_version_ordinal=obj["fixed_version_ordinal"],
            failing_content=obj["failing_content"],
            fixed_content=obj["fixed_content"],
            parse_error=ParseOutcome.from_pair_json(obj["parse_error"]),
            runtime_outcome=None if runtime is None else RuntimeOutcome.from_pair_json(runtime),
        )


def build_chains(records: Iterable[BlockVersionRecord]) -> tuple[list[VersionChain], int]:
    """Group records into per-(post_id, local_id) chains sorted by ordinal.

    Chains whose ordinals are not a contiguous 1..n run (gaps, duplicates,
    or a missing first version) are rejected; the second return value
    counts them.
    """
    groups: dict[tuple[int, int], list[BlockVersionRecord]] = {}
    for record in records:
        groups.setdefault((record.post_id, record.local_id), []).append(record)
    chains = []
    rejected = 0
    for key in sorted(groups):
        versions = sorted(groups[key], key=lambda r: r.version_ordinal)
        if [v.version_ordinal for v in versions] != list(range(1, len(versions) + 1)):
            rejected += 1
            continue
        chains.append(VersionChain(post_id=key[0], local_id=key[1], versions=tuple(versions)))
    return chains, rejected


def extract_pairs(
    chain: VersionChain,
    tags: list[str],
    oracle: ParseOracle,
    counts: FilterCounts,
) -> list[ErrorFixPair]:
    """Classify each normalized version and emit every err->ok adjacency.

    Updates the parseable / prior-version / prior-error funnel counters.
    The oracle sees normalized content, and pairs store normalized content.
    """
    normalized = [normalize_snippet(v.content).content for v in chain.versions]
    cache: dict[str, ParseOutcome] = {}
    outcomes = []
    for text in normalized:
        if text not in cache:
            cache[text] = oracle(text)
        outcomes.append(cache[text])
    counts.ast_parseable += sum(1 for outcome in outcomes if outcome.ok)
    pairs = []
    for idx in range(1, len(outcomes)):
        if not outcomes[idx].ok:
            continue
        counts.prior_version_exists += 1
        if outcomes[idx - 1].ok:
            continue
        counts.prior_version_parse_error += 1
        fixed = chain.versions[idx]
        pairs.append(
            ErrorFixPair(
                pair_id=f"{chain.post_id}:{chain.local_id}:{fixed.version_ordinal}",
                post_id=chain.post_id,
                local_id=chain.local_id,
                tags=list(tags),
                failing_version_ordinal=chain.versions[idx - 1].version_ordinal,
                fixed_version_ordinal=fixed.version_ordinal,
                failing_content=normalized[idx - 1],
                fixed_content=normalized[idx],
                parse_error=outcomes[idx - 1],
            )
        )
    return pairs


def write_pairs(pairs: Iterable[ErrorFixPair], stream: IO[str]) -> None:
    for pair in pairs:
        stream.write(json.dumps(pair.to_json(), ensure_ascii=False) + "\n")


def read_pairs(stream: IO[str], source: str = "pairs") -> Iterator[ErrorFixPair]:
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            yield ErrorFixPair.from_json(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise IngestError(f"{source}, line {lineno}: malformed pair record: {exc}") from None
