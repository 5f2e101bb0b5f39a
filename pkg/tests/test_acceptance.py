"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Tolerances are fixed here, not configurable.
"""

from __future__ import annotations

import contextlib
import json
import math
import random
import time

import pytest

from sofix.analytics import (
    BUILTIN_REFERENCES,
    build_report,
    chi_square_gof,
    chi_square_upper_tail,
    clopper_pearson,
    map_categories,
    shipped_mapping,
)
from sofix.cli import main
from sofix.mutation import MutationSpec, count_source_tokens, generate_error_distribution, mutate
from sofix.normalize import normalize_snippet
from tests.conftest import FIXTURE_EXPECTED_COUNTS, fixture_dump
from tests.test_mutation import ORACLE, SNIPPETS, brute_force_deletions, vocabulary
from tests.test_normalize import check_relative_indentation, random_snippet


@contextlib.contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] criterion {number}: {description}")
        raise
    print(f"[PASS] criterion {number}: {description}")


# Corrected-code runtime outcome counts at full corpus scale, used as the
# observed side of the distribution comparisons.
RUNTIME_COUNTS = {
    "NameError": 24270,
    "No Error": 21332,
    "ModuleNotFoundError": 9927,
    "EOFError": 2223,
    "FileNotFoundError": 2156,
    "SyntaxError": 1013,
    "TypeError": 567,
    "TclError": 348,
    "Execution Timeout": 251,
    "AttributeError": 244,
    "ImportError": 116,
    "other": 518,
}


def test_criterion_1_chi_squared_engine():
    with criterion(1, "chi-squared engine matches closed-form oracles"):
        started = time.perf_counter()
        result = chi_square_gof([60, 25, 15], [0.5, 0.3, 0.2])
        assert result.statistic == pytest.approx(4.083333, abs=1e-6)
        assert result.df == 2
        # df=2 oracle: upper tail is exactly exp(-x/2).
        assert result.p_value == pytest.approx(math.exp(-result.statistic / 2), abs=1e-6)
        assert result.p_value == pytest.approx(0.129812, abs=1e-6)
        # Published critical-value table: chi2(df=1) at 6.635 has p ~= 0.01.
        assert chi_square_upper_tail(6.635, 1) == pytest.approx(0.01004, abs=1e-4)
        assert time.perf_counter() - started < 1.0


def test_criterion_2_conclusion_reproduction():
    with criterion(2, "full-scale runtime counts reject both reference distributions"):
        started = time.perf_counter()
        report = build_report(RUNTIME_COUNTS)
        assert report.total == 62965
        for name in ("mit", "cscircles"):
            reference = BUILTIN_REFERENCES[name]
            mapping, default = shipped_mapping(name)
            observed = map_categories(report, mapping, default, reference)
            assert sum(observed) == 62965
            result = chi_square_gof(observed, reference.probabilities)
            assert result.p_value < 0.01, name
        assert time.perf_counter() - started < 1.0


def test_criterion_3_pipeline_fixture(tmp_path, stub_env):
    with criterion(3, "12-chain fixture dump yields exact counts and 3 pairs, twice"):
        started = time.perf_counter()
        posts, blocks = fixture_dump(tmp_path)
        outputs = []
        for name in ("run1.jsonl", "run2.jsonl"):
            out = tmp_path / name
            code = main(["extract", "--posts", str(posts), "--blocks", str(blocks),
                         "--tag-pattern", "python", "--out", str(out)])
            assert code == 0
            manifest = json.loads((tmp_path / f"{name}.manifest.json").read_text())
            assert manifest["filter_counts"] == FIXTURE_EXPECTED_COUNTS
            outputs.append(out.read_bytes())
        assert len(outputs[0].splitlines()) == 3
        assert outputs[0] == outputs[1]
        assert time.perf_counter() - started < 5.0


def test_criterion_4_normalization_properties():
    with criterion(4, "normalization idempotent and indentation-preserving on 1000 fixtures"):
        started = time.perf_counter()
        rng = random.Random(40_000)
        for _ in range(1000):
            src = random_snippet(rng)
            result = normalize_snippet(src)
            assert normalize_snippet(result.content).content == result.content
            check_relative_indentation(src, result.content, result.removed_prefix)
        assert time.perf_counter() - started < 5.0


def test_criterion_5_clopper_pearson():
    with criterion(5, "exact binomial intervals match closed form and tables"):
        zero = clopper_pearson(0, 100, 0.95)
        assert zero.lo == 0.0
        assert zero.hi == pytest.approx(1 - 0.025 ** (1 / 100), abs=1e-10)
        assert zero.hi == pytest.approx(0.03622, abs=1e-4)
        two = clopper_pearson(2, 100, 0.95)
        assert two.lo == pytest.approx(0.00243, abs=1e-4)
        assert two.hi == pytest.approx(0.07038, abs=1e-4)


def test_criterion_6_mutation_laws():
    with criterion(6, "deletion enumeration matches sampling; token-count laws over 10k trials"):
        brute = brute_force_deletions("x = 1")
        assert brute == {"SyntaxError": 3}
        spec = MutationSpec(kind="delete", seed=606, trials=120)
        report = generate_error_distribution(["x = 1"], spec, ORACLE)
        assert {c.label: c.fraction for c in report.categories} == {
            label: count / 3 for label, count in brute.items()
        }

        vocab = vocabulary()
        deltas = {"delete": -1, "insert": 1, "replace": 0}
        tokenized = [ORACLE.tokenize(snippet) for snippet in SNIPPETS]
        checked = 0
        for trial in range(10_000):
            kind = ("delete", "insert", "replace")[trial % 3]
            rng = random.Random(f"acceptance:{trial}")
            tokens = tokenized[trial % len(tokenized)]
            mutant = mutate(tokens, kind, rng, vocab)
            if not ORACLE.check_parse(mutant).ok:
                continue
            before = count_source_tokens(tokens)
            after = count_source_tokens(ORACLE.tokenize(mutant))
            assert after == before + deltas[kind], (kind, mutant)
            checked += 1
        assert checked > 500
