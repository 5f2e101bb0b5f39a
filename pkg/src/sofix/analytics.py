"""Distribution tables and statistical tests over extracted pairs.

Covers the parse-error and runtime-outcome taxonomies, Pearson chi-squared
goodness-of-fit against reference error distributions, exact binomial
confidence intervals for audit sampling, and the re-bucketing needed to
compare corpus categories with a reference's categories.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, Mapping, Sequence

from .errors import InputError, StatisticalInputError
from .special import inverse_regularized_beta, regularized_gamma_q


@dataclass(frozen=True)
class Category:
    label: str
    count: int
    fraction: float


@dataclass(frozen=True)
class DistributionReport:
    """Category frequency table, sorted by count descending.

    `excluded` counts records that were present but not classifiable
    (e.g. pairs never run through the interpreter); they are outside
    `total` and the fractions.
    """

    categories: tuple[Category, ...]
    total: int
    excluded: int = 0


@dataclass(frozen=True)
class ReferenceDistribution:
    name: str
    categories: tuple[tuple[str, float], ...]
    source: str

    def __post_init__(self):
        labels = [label for label, _ in self.categories]
        if len(set(labels)) != len(labels):
            raise StatisticalInputError(f"reference {self.name!r}: duplicate labels")
        for label, p in self.categories:
            if not 0.0 < p <= 1.0:
                raise StatisticalInputError(
                    f"reference {self.name!r}: probability for {label!r} outside (0, 1]"
                )
        if abs(sum(p for _, p in self.categories) - 1.0) > 1e-6:
            raise StatisticalInputError(f"reference {self.name!r}: probabilities do not sum to 1")

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.categories]

    @property
    def probabilities(self) -> list[float]:
        return [p for _, p in self.categories]


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    n: int

    def as_dict(self) -> dict:
        return {"statistic": self.statistic, "df": self.df, "p_value": self.p_value, "n": self.n}


@dataclass(frozen=True)
class BinomialInterval:
    k: int
    n: int
    confidence: float
    lo: float
    hi: float


# Published student error distributions used as comparison baselines.
BUILTIN_REFERENCES = {
    "mit": ReferenceDistribution(
        name="mit",
        categories=(
            ("TypeError", 0.28),
            ("AttributeError", 0.22),
            ("NameError", 0.19),
            ("SyntaxError", 0.12),
            ("IndexError", 0.06),
            ("other", 0.13),
        ),
        source="Python errors from an MIT introductory course online tutor (Kelley et al., 2018)",
    ),
    "cscircles": ReferenceDistribution(
        name="cscircles",
        categories=(
            ("SyntaxError", 0.4814),
            ("NameError", 0.1511),
            ("EOFError", 0.1182),
            ("IndentationError", 0.0323),
            ("other", 0.217),
        ),
        source="Python errors from CS Circles interactive lessons (Pritchard, 2015)",
    ),
}


def _sorted_counts(counter: Mapping[str, int]) -> list[tuple[str, int]]:
    # Count descending, then label ascending: deterministic regardless of
    # insertion order.
    return sorted(counter.items(), key=lambda item: (-item[1], item[0]))


def build_report(counter: Mapping[str, int], excluded: int = 0) -> DistributionReport:
    total = sum(counter.values())
    categories = tuple(
        Category(label, count, count / total if total else 0.0)
        for label, count in _sorted_counts(counter)
    )
    return DistributionReport(categories=categories, total=total, excluded=excluded)


def tally_parse_errors(pairs: Iterable, message_cutoff: int = 40) -> DistributionReport:
    """Frequency table of (kind, message) parse-error categories.

    Categories beyond the `message_cutoff` most frequent are collapsed
    into an "other" bucket, mirroring the long tail of distinct messages.
    """
    counter: dict[str, int] = {}
    for pair in pairs:
        outcome = pair.parse_error
        if outcome.message is None:
            label = outcome.kind
        else:
            label = f"{outcome.kind}: {outcome.message}"
        counter[label] = counter.get(label, 0) + 1
    ranked = _sorted_counts(counter)
    if len(ranked) > message_cutoff:
        kept = dict(ranked[:message_cutoff])
        kept["other"] = kept.get("other", 0) + sum(count for _, count in ranked[message_cutoff:])
        counter = kept
    return build_report(counter)


def tally_runtime(pairs: Iterable) -> DistributionReport:
    """Frequency table of runtime outcomes for corrected snippets.

    Exceptions are keyed by class name; clean runs and killed runs get the
    "No Error" and "Execution Timeout" pseudo-categories. Pairs that were
    never executed are counted as excluded.
    """
    counter: dict[str, int] = {}
    excluded = 0
    for pair in pairs:
        outcome = pair.runtime_outcome
        if outcome is None:
            excluded += 1
            continue
        if outcome.status == "no_error":
            label = "No Error"
        elif outcome.status == "timeout":
            label = "Execution Timeout"
        else:
            label = outcome.exc_type
        counter[label] = counter.get(label, 0) + 1
    return build_report(counter, excluded=excluded)


def chi_square_upper_tail(x: float, df: int) -> float:
    """P(X >= x) for a chi-squared variable with `df` degrees of freedom."""
    if x < 0:
        raise StatisticalInputError("chi-squared statistic must be non-negative")
    if df < 1:
        raise StatisticalInputError("degrees of freedom must be >= 1")
    return regularized_gamma_q(df / 2.0, x / 2.0)


def chi_square_gof(observed: Sequence[int], expected: Sequence[float]) -> ChiSquareResult:
    """Pearson goodness-of-fit test of observed counts against given probabilities."""
    if len(observed) != len(expected):
        raise StatisticalInputError(
            f"category arity mismatch: {len(observed)} observed vs {len(expected)} expected"
        )
    if len(observed) < 2:
        raise StatisticalInputError("need at least 2 categories")
    if any(p <= 0 for p in expected):
        raise StatisticalInputError("expected probabilities must be positive")
    if any(count < 0 for count in observed):
        raise StatisticalInputError("observed counts must be non-negative")
    p_sum = sum(expected)
    if abs(p_sum - 1.0) > 1e-6:
        raise StatisticalInputError("expected probabilities must sum to 1")
    n = sum(observed)
    if n <= 0:
        raise StatisticalInputError("total observed count must be positive")
    statistic = 0.0
    for count, p in zip(observed, expected):
        exp_count = n * (p / p_sum)
        statistic += (count - exp_count) ** 2 / exp_count
    df = len(observed) - 1
    return ChiSquareResult(
        statistic=statistic, df=df, p_value=chi_square_upper_tail(statistic, df), n=n
    )


def clopper_pearson(k: int, n: int, confidence: float) -> BinomialInterval:
    """Exact two-sided binomial confidence interval."""
    if n < 1 or not 0 <= k <= n:
        raise StatisticalInputError(f"invalid successes/trials: k={k}, n={n}")
    if not 0.0 < confidence < 1.0:
        raise StatisticalInputError("confidence must be in (0, 1)")
    alpha = 1.0 - confidence
    lo = 0.0 if k == 0 else inverse_regularized_beta(alpha / 2.0, k, n - k + 1)
    hi = 1.0 if k == n else inverse_regularized_beta(1.0 - alpha / 2.0, k + 1, n - k)
    return BinomialInterval(k=k, n=n, confidence=confidence, lo=lo, hi=hi)


def sample_for_audit(pairs: Sequence, count: int, seed: int) -> list:
    """Uniform sample without replacement; deterministic for a fixed seed."""
    if count > len(pairs):
        raise InputError(f"sample size {count} exceeds population {len(pairs)}")
    rng = random.Random(seed)
    return rng.sample(list(pairs), count)


def format_audit(pairs: Iterable) -> str:
    """Human-reviewable rendering: both versions of each sampled pair together."""
    blocks = []
    for pair in pairs:
        error = pair.parse_error
        loc = ""
        if error.line is not None:
            loc = f" (line {error.line}" + (f", col {error.col})" if error.col is not None else ")")
        blocks.append(
            "\n".join(
                [
                    f"== pair {pair.pair_id}  post={pair.post_id} block={pair.local_id} "
                    f"v{pair.failing_version_ordinal} -> v{pair.fixed_version_ordinal}",
                    f"tags: {', '.join(pair.tags)}",
                    f"parse error: {error.kind}: {error.message or ''}{loc}",
                    f"--- failing (v{pair.failing_version_ordinal})",
                    pair.failing_content,
                    f"--- fixed (v{pair.fixed_version_ordinal})",
                    pair.fixed_content,
                    "",
                ]
            )
        )
    return "\n".join(blocks)


def map_categories(
    report: DistributionReport,
    mapping: Mapping[str, str],
    default: str,
    reference: ReferenceDistribution,
) -> list[int]:
    """Re-bucket report counts onto the reference's categories.

    Resolution per label: explicit mapping entry, else identity when the
    label exists in the reference, else the default bucket. The total is
    preserved. Returns counts aligned with `reference.categories`.
    """
    labels = reference.labels
    if default not in labels:
        raise StatisticalInputError(f"default bucket {default!r} is not a reference category")
    for source, target in mapping.items():
        if target not in labels:
            raise StatisticalInputError(
                f"mapping target {target!r} (for {source!r}) is not a reference category"
            )
    counts = {label: 0 for label in labels}
    for category in report.categories:
        target = mapping.get(category.label)
        if target is None:
            target = category.label if category.label in counts else default
        counts[target] += category.count
    return [counts[label] for label in labels]


def load_reference(spec: str) -> ReferenceDistribution:
    """Resolve "builtin:<name>" or a JSON file path to a reference distribution."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in BUILTIN_REFERENCES:
            raise InputError(
                f"unknown builtin reference {name!r}; have {sorted(BUILTIN_REFERENCES)}"
            )
        return BUILTIN_REFERENCES[name]
    try:
        with open(spec, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read reference distribution: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed reference distribution {spec}: {exc}") from None
    try:
        return ReferenceDistribution(
            name=obj["name"],
            categories=tuple((c["label"], float(c["p"])) for c in obj["categories"]),
            source=obj.get("source", spec),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed reference distribution {spec}: {exc}") from None


def load_mapping(path: str) -> tuple[dict[str, str], str]:
    """Read a {"map": {...}, "default": "..."} category mapping file."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read mapping file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed mapping file {path}: {exc}") from None
    mapping = obj.get("map", {})
    default = obj.get("default", "other")
    if not isinstance(mapping, dict) or not isinstance(default, str):
        raise InputError(f"malformed mapping file {path}")
    return {str(k): str(v) for k, v in mapping.items()}, default


def shipped_mapping(reference_name: str) -> tuple[dict[str, str], str]:
    """The editable default mapping shipped for a builtin reference."""
    resource = resources.files("sofix.data").joinpath(f"mapping_{reference_name}.json")
    try:
        obj = json.loads(resource.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"no shipped mapping for reference {reference_name!r}") from None
    return {str(k): str(v) for k, v in obj["map"].items()}, str(obj["default"])


def write_report_csv(report: DistributionReport, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["label", "count", "fraction"])
    for category in report.categories:
        writer.writerow([category.label, category.count, f"{category.fraction:.6f}"])


def read_report_counts(stream: IO[str]) -> DistributionReport:
    """Load a stats CSV back into a report (fractions recomputed from counts)."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or header[:2] != ["label", "count"]:
        raise InputError("stats CSV must start with a label,count,... header")
    counter: dict[str, int] = {}
    for row in reader:
        if not row:
            continue
        try:
            counter[row[0]] = counter.get(row[0], 0) + int(row[1])
        except (IndexError, ValueError):
            raise InputError(f"bad stats CSV row: {row!r}") from None
    return build_report(counter)


def render_report_markdown(report: DistributionReport, title: str) -> str:
    lines = [
        f"### {title}",
        "",
        "| Label | Count | % |",
        "| --- | ---: | ---: |",
    ]
    for category in report.categories:
        lines.append(f"| {category.label} | {category.count} | {category.fraction * 100:.2f} |")
    lines.append(f"| **Total** | {report.total} | 100.00 |" if report.total else "| **Total** | 0 | - |")
    if report.excluded:
        lines.append("")
        lines.append(f"Not executed (excluded from fractions): {report.excluded}")
    return "\n".join(lines)
