"""End-to-end runs behind the CLI subcommands, plus run manifests.

Every corpus-producing run writes a `<output>.manifest.json` sidecar
recording the tool version, the worker interpreter version (when a worker
was consulted), input digests, the seed, and the filter counters, so any
output file can be traced back to the run that produced it.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Sequence

from . import __version__
from .analytics import (
    DistributionReport,
    ChiSquareResult,
    chi_square_gof,
    format_audit,
    load_mapping,
    load_reference,
    map_categories,
    read_report_counts,
    sample_for_audit,
    shipped_mapping,
    tally_parse_errors,
    tally_runtime,
    write_report_csv,
)
from .errors import InputError
from .ingest import FilterCounts, SkipCounters, load_blocks, load_posts, select_candidate_blocks
from .mutation import MutationSpec, build_vocabulary, generate_error_distribution
from .oracle import DEFAULT_TIMEOUT_S, OracleClient
from .pairing import ErrorFixPair, build_chains, extract_pairs, read_pairs, write_pairs


def file_digest(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _open_text(path: str):
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from None


def _manifest(
    *,
    interpreter_version: str | None,
    inputs: Sequence[str],
    outputs: Sequence[str],
    seed: int | None = None,
    **extra,
) -> dict:
    return {
        "tool_version": __version__,
        "interpreter_version": interpreter_version,
        "input_digests": {os.path.basename(p): file_digest(p) for p in inputs},
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        **extra,
        "outputs": {os.path.basename(p): file_digest(p) for p in outputs},
    }


def write_manifest(out_path: str, manifest: dict) -> str:
    path = out_path + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def run_extract(
    posts_path: str,
    blocks_path: str,
    pattern: str,
    out_path: str,
    worker_cmd: Sequence[str] | str | None = None,
    workers: int = 1,
) -> tuple[FilterCounts, int]:
    """Extract error/fix pairs; returns the filter counters and pair count."""
    counts = FilterCounts()
    skips = SkipCounters()
    with _open_text(posts_path) as fh:
        posts = load_posts(fh, source=os.path.basename(posts_path))
    tags_by_post: dict[int, list[str]] = {}
    records = []
    with _open_text(blocks_path) as fh:
        blocks = load_blocks(fh, source=os.path.basename(blocks_path))
        for record, tags in select_candidate_blocks(posts, blocks, pattern, counts, skips):
            records.append(record)
            tags_by_post.setdefault(record.post_id, tags)
    chains, rejected = build_chains(records)
    skips.rejected_chains = rejected

    pairs: list[ErrorFixPair] = []
    interpreter = None
    if chains:
        with OracleClient(worker_cmd, pool_size=workers) as client:
            interpreter = client.worker_version()

            def work(chain):
                local = FilterCounts()
                found = extract_pairs(chain, tags_by_post[chain.post_id], client.check_parse, local)
                return found, local

            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(work, chains))
            else:
                results = [work(chain) for chain in chains]
        for found, local in results:
            pairs.extend(found)
            counts.ast_parseable += local.ast_parseable
            counts.prior_version_exists += local.prior_version_exists
            counts.prior_version_parse_error += local.prior_version_parse_error
    pairs.sort(key=ErrorFixPair.sort_key)

    with open(out_path, "w", encoding="utf-8") as fh:
        write_pairs(pairs, fh)
    write_manifest(
        out_path,
        _manifest(
            interpreter_version=interpreter,
            inputs=[posts_path, blocks_path],
            outputs=[out_path],
            tag_pattern=pattern,
            filter_counts=counts.as_dict(),
            skips=skips.as_dict(),
        ),
    )
    return counts, len(pairs)


def run_validate(
    pairs_path: str,
    out_path: str,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    workers: int = 1,
    worker_cmd: Sequence[str] | str | None = None,
) -> int:
    """Fill runtime_outcome for every pair by executing the fixed content."""
    with _open_text(pairs_path) as fh:
        pairs = list(read_pairs(fh, source=os.path.basename(pairs_path)))
    interpreter = None
    if pairs:
        with OracleClient(worker_cmd, pool_size=workers) as client:
            interpreter = client.worker_version()

            def work(pair):
                pair.runtime_outcome = client.run_snippet(pair.fixed_content, timeout_s)

            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    list(pool.map(work, pairs))
            else:
                for pair in pairs:
                    work(pair)
    pairs.sort(key=ErrorFixPair.sort_key)
    with open(out_path, "w", encoding="utf-8") as fh:
        write_pairs(pairs, fh)
    write_manifest(
        out_path,
        _manifest(
            interpreter_version=interpreter,
            inputs=[pairs_path],
            outputs=[out_path],
            timeout_s=timeout_s,
        ),
    )
    return len(pairs)


def run_stats(pairs_path: str, which: str, out_csv: str, message_cutoff: int = 40) -> DistributionReport:
    with _open_text(pairs_path) as fh:
        pairs = list(read_pairs(fh, source=os.path.basename(pairs_path)))
    if which == "parse":
        report = tally_parse_errors(pairs, message_cutoff=message_cutoff)
    elif which == "runtime":
        report = tally_runtime(pairs)
    else:
        raise InputError(f"unknown stats table {which!r} (expected 'parse' or 'runtime')")
    with open(out_csv, "w", encoding="utf-8") as fh:
        write_report_csv(report, fh)
    return report


def run_compare(
    stats_csv: str,
    dist_spec: str,
    mapping_path: str | None,
    out_json: str | None,
) -> ChiSquareResult:
    reference = load_reference(dist_spec)
    if mapping_path is not None:
        mapping, default = load_mapping(mapping_path)
    elif dist_spec.startswith("builtin:"):
        mapping, default = shipped_mapping(reference.name)
    else:
        mapping, default = {}, "other"
    with _open_text(stats_csv) as fh:
        report = read_report_counts(fh)
    observed = map_categories(report, mapping, default, reference)
    result = chi_square_gof(observed, reference.probabilities)
    if out_json is not None:
        with open(out_json, "w", encoding="utf-8") as fh:
            json.dump(result.as_dict(), fh, indent=2)
            fh.write("\n")
    return result


def run_mutate(
    pairs_path: str,
    kind: str,
    trials: int,
    seed: int,
    out_csv: str,
    worker_cmd: Sequence[str] | str | None = None,
) -> tuple[DistributionReport, dict]:
    """Mutation baseline over the corpus's corrected snippets."""
    with _open_text(pairs_path) as fh:
        pairs = list(read_pairs(fh, source=os.path.basename(pairs_path)))
    snippets = sorted({pair.fixed_content for pair in pairs})
    with OracleClient(worker_cmd) as client:
        interpreter = client.worker_version()
        # The corpus was extracted under some worker version; re-filter so the
        # mutation pool is valid under *this* worker.
        valid = [code for code in snippets if client.check_parse(code).ok]
        if not valid:
            raise InputError("no parse-passing snippets to mutate")
        vocabulary = build_vocabulary(client.tokenize(code) for code in valid)
        spec = MutationSpec(kind=kind, seed=seed, trials=trials, vocabulary=vocabulary)
        report = generate_error_distribution(valid, spec, client)
    with open(out_csv, "w", encoding="utf-8") as fh:
        write_report_csv(report, fh)
    manifest = {
        "kind": kind,
        "seed": seed,
        "trials": trials,
        "snippet_count": len(valid),
        "interpreter": interpreter,
    }
    write_manifest(out_csv, manifest)
    return report, manifest


def run_audit(pairs_path: str, count: int, seed: int, out_path: str) -> int:
    with _open_text(pairs_path) as fh:
        pairs = list(read_pairs(fh, source=os.path.basename(pairs_path)))
    sample = sample_for_audit(pairs, count, seed)
    header = (
        f"# audit sample of {count} pairs (seed {seed})\n"
        f"# source: {os.path.basename(pairs_path)} sha256={file_digest(pairs_path)}\n\n"
    )
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.write(format_audit(sample))
    return len(sample)
