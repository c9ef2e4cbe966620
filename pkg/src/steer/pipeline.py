"""Batch annotation over whole corpora: parse, segment, render, count.

The corpus file is split into byte ranges aligned to record boundaries and
the ranges are annotated independently (episodes are self-contained lines),
then reassembled in file order. Output is therefore byte-identical for any
worker count, and per-record failures surface as diagnostics instead of
killing the run.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import default_anchor_set
from .instructions import InstructionParseError, parse_instruction
from .segmenter import Diagnostic, SegmenterConfig, segment_episode
from .trajectory import (
    RecordError,
    SkillKind,
    parse_episode_line,
    parse_segment_line,
    segment_to_line,
)


@dataclass
class CorpusReport:
    """Totals and diagnostics for one annotation (or stats) run."""

    episodes_in: int = 0
    episodes_segmented: int = 0
    segments_out: int = 0
    per_kind: dict[str, int] = field(default_factory=dict)
    per_class: dict[str, int] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    wall_time: float = 0.0

    def merge(self, other: "CorpusReport") -> None:
        self.episodes_in += other.episodes_in
        self.episodes_segmented += other.episodes_segmented
        self.segments_out += other.segments_out
        for k, v in other.per_kind.items():
            self.per_kind[k] = self.per_kind.get(k, 0) + v
        for k, v in other.per_class.items():
            self.per_class[k] = self.per_class.get(k, 0) + v
        self.diagnostics.extend(other.diagnostics)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["diagnostics"] = [diag.as_record() for diag in self.diagnostics]
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def _chunk_offsets(path: str, n_chunks: int) -> list[tuple[int, int]]:
    """Byte ranges covering the file, each starting right after a newline."""
    size = os.path.getsize(path)
    if size == 0:
        return []
    n_chunks = max(1, n_chunks)
    bounds = [0]
    with open(path, "rb") as f:
        for i in range(1, n_chunks):
            candidate = size * i // n_chunks
            if candidate <= bounds[-1]:
                continue
            f.seek(candidate)
            f.readline()  # skip to the end of the current record
            pos = f.tell()
            if pos > bounds[-1] and pos < size:
                bounds.append(pos)
    bounds.append(size)
    return list(zip(bounds[:-1], bounds[1:]))


def _annotate_chunk(args: tuple[str, int, int, SegmenterConfig]) -> dict:
    """Annotate one byte range; returns output bytes plus a partial report."""
    path, start, end, config = args
    anchors = default_anchor_set()
    with open(path, "rb") as f:
        f.seek(start)
        blob = f.read(end - start)
    out: list[str] = []
    report = CorpusReport()
    n_lines = blob.count(b"\n")
    if blob and not blob.endswith(b"\n"):
        n_lines += 1
    for rel_no, raw in enumerate(blob.split(b"\n"), start=1):
        if not raw.strip():
            continue
        report.episodes_in += 1
        try:
            episode = parse_episode_line(raw.decode("utf-8"), rel_no)
        except RecordError as e:
            report.diagnostics.append(
                Diagnostic("", "malformed_record", f"chunk line {e.line_number}: {e.reason}")
            )
            continue
        except UnicodeDecodeError as e:
            report.diagnostics.append(
                Diagnostic("", "malformed_record", f"chunk line {rel_no}: {e}")
            )
            continue
        try:
            parsed = parse_instruction(episode.instruction)
        except InstructionParseError as e:
            report.diagnostics.append(Diagnostic(episode.episode_id, e.code, str(e)))
            continue
        result = segment_episode(episode, parsed, config, anchors)
        report.diagnostics.extend(result.diagnostics)
        if result.segments:
            report.episodes_segmented += 1
        for seg in result.segments:
            out.append(segment_to_line(seg))
            out.append("\n")
            report.segments_out += 1
            kind = seg.kind.value
            report.per_kind[kind] = report.per_kind.get(kind, 0) + 1
            if seg.kind is SkillKind.GRASP and seg.modifier:
                report.per_class[seg.modifier] = report.per_class.get(seg.modifier, 0) + 1
    return {"out": "".join(out).encode("utf-8"), "report": report, "lines": n_lines}


def annotate_corpus(
    input_path: str,
    output_path: str,
    config: SegmenterConfig = SegmenterConfig(),
    workers: int = 1,
    report_path: str | None = None,
) -> CorpusReport:
    """Annotate every episode in a corpus file, preserving input order.

    ``workers`` > 1 fans byte ranges out to a process pool; the output file
    is byte-identical regardless. Unreadable input raises; individual bad
    records become diagnostics.
    """
    t0 = time.perf_counter()
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n_chunks = workers if workers == 1 else workers * 3
    chunks = _chunk_offsets(input_path, n_chunks)
    tasks = [(input_path, start, end, config) for start, end in chunks]

    report = CorpusReport()
    with open(output_path, "wb") as sink:
        if workers == 1:
            results = map(_annotate_chunk, tasks)
            _drain(results, sink, report)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_annotate_chunk, tasks)
                _drain(results, sink, report)
    report.wall_time = time.perf_counter() - t0
    if report_path is not None:
        with open(report_path, "w") as f:
            f.write(report.to_json())
    return report


def _drain(results, sink, report: CorpusReport) -> None:
    line_offset = 0
    for res in results:
        sink.write(res["out"])
        partial: CorpusReport = res["report"]
        # Workers only know chunk-relative line numbers; rebase them here.
        remapped = []
        for diag in partial.diagnostics:
            if diag.code == "malformed_record" and diag.detail.startswith("chunk line "):
                no, _, rest = diag.detail[len("chunk line "):].partition(":")
                diag = Diagnostic(diag.episode_id, diag.code, f"line {line_offset + int(no)}:{rest}")
            remapped.append(diag)
        partial.diagnostics = remapped
        report.merge(partial)
        line_offset += res["lines"]


def corpus_stats(segments_path: str) -> CorpusReport:
    """Recompute annotation totals from a segment file.

    For a clean run this reproduces the counts reported by
    :func:`annotate_corpus`; malformed records are tallied as diagnostics.
    """
    t0 = time.perf_counter()
    report = CorpusReport()
    seen_ids: set[str] = set()
    with open(segments_path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                seg = parse_segment_line(line, line_no)
            except RecordError as e:
                report.diagnostics.append(Diagnostic("", "malformed_record", str(e)))
                continue
            seen_ids.add(seg.episode_id)
            report.segments_out += 1
            kind = seg.kind.value
            report.per_kind[kind] = report.per_kind.get(kind, 0) + 1
            if seg.kind is SkillKind.GRASP and seg.modifier:
                report.per_class[seg.modifier] = report.per_class.get(seg.modifier, 0) + 1
    report.episodes_in = len(seen_ids)
    report.episodes_segmented = len(seen_ids)
    report.wall_time = time.perf_counter() - t0
    return report


# -- dataset mixing -------------------------------------------------------------


@dataclass(frozen=True)
class MixSource:
    path: str
    weight: float


@dataclass(frozen=True)
class MixManifest:
    """Normalized sampling weights over relabeled corpora.

    The manifest is configuration for a downstream trainer: ``mode`` says
    whether relabeled segments augment or replace the original instructions.
    """

    sources: tuple[MixSource, ...]
    mode: str = "augment"  # or "replace"

    def weights(self) -> list[float]:
        return [s.weight for s in self.sources]

    def sample(self, n: int, seed: int = 0) -> list[str]:
        """Deterministically draw source paths in proportion to their weights."""
        rng = np.random.default_rng(seed)
        paths = [s.path for s in self.sources]
        idx = rng.choice(len(paths), size=n, p=self.weights())
        return [paths[i] for i in idx]

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "sources": [{"path": s.path, "weight": s.weight} for s in self.sources],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MixManifest":
        d = json.loads(text)
        return cls(
            sources=tuple(MixSource(s["path"], s["weight"]) for s in d["sources"]),
            mode=d.get("mode", "augment"),
        )


def build_mix(sources: list[tuple[str, float]], mode: str = "augment") -> MixManifest:
    """Normalize (path, weight) pairs into a manifest whose weights sum to 1."""
    if not sources:
        raise ValueError("need at least one source")
    if any(w < 0 for _, w in sources):
        raise ValueError("weights must be nonnegative")
    total = sum(w for _, w in sources)
    if total <= 0:
        raise ValueError("weights must not all be zero")
    if mode not in ("augment", "replace"):
        raise ValueError(f"unknown mix mode: {mode!r}")
    return MixManifest(
        sources=tuple(MixSource(path, w / total) for path, w in sources),
        mode=mode,
    )
