"""Synthesize syntax errors by mutating one token of valid source code.

Deletions, insertions, and replacements act on significant tokens: those
whose lexeme occupies non-whitespace source text. Structure tokens
(newlines, indentation runs, zero-width dedents) are kept verbatim and
re-rendered through an indentation-state machine, because mutating a
lexeme that re-tokenization treats as mere whitespace either cannot
change the source or silently changes the token count of an otherwise
valid mutant. Indentation errors still arise naturally, e.g. deleting
the ":" that opens a suite or inserting a token at a line start.

Rendering joins significant tokens with single spaces, keeps line breaks,
and re-emits the current indentation prefix at each line start, so block
structure survives for unmutated lines.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .analytics import DistributionReport, build_report
from .errors import ContractError, NoCandidateError, OracleUnavailableError
from .oracle import Token

MUTATION_KINDS = ("delete", "insert", "replace")

_LINE_BREAK_TYPES = ("NEWLINE", "NL")


def _is_significant(token: Token) -> bool:
    return bool(token.text) and not token.text.isspace()


def significant_indices(tokens: Sequence[Token]) -> list[int]:
    """Positions of tokens that are actual source text, not line structure."""
    return [i for i, token in enumerate(tokens) if _is_significant(token)]


def count_source_tokens(tokens: Iterable[Token]) -> int:
    """Tokens with a non-empty lexeme (zero-width markers excluded)."""
    return sum(1 for token in tokens if token.text)


@dataclass(frozen=True)
class MutationSpec:
    kind: str
    seed: int
    trials: int
    vocabulary: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in MUTATION_KINDS:
            raise ContractError(f"unknown mutation kind {self.kind!r}")
        if self.trials < 0:
            raise ContractError("trials must be non-negative")
        if self.kind != "delete" and not self.vocabulary:
            raise ContractError(f"{self.kind} mutations need a non-empty vocabulary")


def build_vocabulary(token_streams: Iterable[Iterable[Token]]) -> tuple[str, ...]:
    """All distinct significant lexemes observed across the snippet set, sorted."""
    seen = {
        token.text
        for stream in token_streams
        for token in stream
        if _is_significant(token)
    }
    return tuple(sorted(seen))


def render_tokens(tokens: Sequence[Token]) -> str:
    """Re-render a token stream as source text.

    Indentation tokens push the prefix they carry, dedents pop it, and
    every line start re-emits the current prefix; significant tokens are
    joined with single spaces within a line.
    """
    parts: list[str] = []
    indents = [""]
    at_line_start = True
    last_char = ""
    for token in tokens:
        if token.type == "INDENT":
            indents.append(token.text)
            parts.append(token.text)
            at_line_start = False
            if token.text:
                last_char = token.text[-1]
            continue
        if token.type == "DEDENT":
            if len(indents) > 1:
                indents.pop()
            continue
        if token.type in _LINE_BREAK_TYPES:
            parts.append(token.text)  # may be "" for a synthesized newline
            at_line_start = True
            last_char = "\n" if token.text else last_char
            continue
        if at_line_start:
            if indents[-1]:
                parts.append(indents[-1])
                last_char = indents[-1][-1]
            at_line_start = False
        elif last_char and not last_char.isspace():
            parts.append(" ")
        parts.append(token.text)
        if token.text:
            last_char = token.text[-1]
    return "".join(parts)


def mutate(tokens: Sequence[Token], kind: str, rng: random.Random,
           vocabulary: Sequence[str] = ()) -> str:
    """Apply one uniformly random token mutation and re-render the source."""
    stream = list(tokens)
    targets = significant_indices(stream)
    if not targets:
        raise ContractError("cannot mutate a stream with no significant tokens")
    if kind == "delete":
        del stream[targets[rng.randrange(len(targets))]]
    elif kind == "insert":
        if not vocabulary:
            raise ContractError("insert mutations need a non-empty vocabulary")
        lexeme = vocabulary[rng.randrange(len(vocabulary))]
        stream.insert(rng.randrange(len(stream) + 1), Token(type="VOCAB", text=lexeme))
    elif kind == "replace":
        index = targets[rng.randrange(len(targets))]
        candidates = [v for v in vocabulary if v != stream[index].text]
        if not candidates:
            raise NoCandidateError(f"no vocabulary entry differs from {stream[index].text!r}")
        stream[index] = Token(type="VOCAB", text=candidates[rng.randrange(len(candidates))])
    else:
        raise ContractError(f"unknown mutation kind {kind!r}")
    return render_tokens(stream)


def generate_error_distribution(valid_snippets: Sequence[str], spec: MutationSpec,
                                oracle) -> DistributionReport:
    """Mutate random snippets `spec.trials` times and tally parse outcomes.

    Every input snippet must already pass the parse check. Categories are
    parse-error kinds plus "still-valid" for mutants that parse. Each trial
    draws from its own seed-derived random stream, so results do not depend
    on execution order.
    """
    streams = [oracle.tokenize(code) for code in valid_snippets]
    pool = [tokens for tokens in streams if significant_indices(tokens)]
    if not pool and spec.trials > 0:
        raise ContractError("no snippet has a mutable token")
    counter: dict[str, int] = {}
    for trial in range(spec.trials):
        rng = random.Random(f"{spec.seed}:{trial}")
        tokens = pool[rng.randrange(len(pool))]
        mutant = mutate(tokens, spec.kind, rng, spec.vocabulary)
        try:
            outcome = oracle.check_parse(mutant)
        except OracleUnavailableError as exc:
            exc.partial_report = build_report(counter)
            raise
        label = "still-valid" if outcome.ok else (outcome.kind or "unknown")
        counter[label] = counter.get(label, 0) + 1
    return build_report(counter)
