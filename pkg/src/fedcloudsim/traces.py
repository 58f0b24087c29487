"""Utilization-trace ingestion, workload-mix construction and synthesis.

Every trace is normalized to 288 integer CPU percentages, one per 300 s
slot (a single day). Real traces come from line-oriented host files or
delimiter-separated cluster usage dumps; synthetic traces back the
property tests and the desk-scale experiments.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass

from .model import ConfigurationError, VM_MIPS_CLASSES

log = logging.getLogger(__name__)

SAMPLES_PER_TRACE = 288
SLOT_SECONDS = 300

SOURCE_GOOGLE = "google-v1"
SOURCE_PLANETLAB = "planetlab"
SOURCE_SYNTHETIC = "synthetic"

MIX_CLASSES = ("light", "medium", "heavy")


class TraceError(ValueError):
    """Malformed trace input; message carries the offending location."""


@dataclass(frozen=True)
class UtilizationTrace:
    samples: tuple
    source: str
    name: str = ""

    def __post_init__(self):
        if len(self.samples) != SAMPLES_PER_TRACE:
            raise TraceError(
                f"trace {self.name!r}: expected {SAMPLES_PER_TRACE} samples, "
                f"got {len(self.samples)}"
            )
        for i, v in enumerate(self.samples):
            if not isinstance(v, int) or not 0 <= v <= 100:
                raise TraceError(f"trace {self.name!r}: sample {i} = {v!r} outside [0, 100]")

    @property
    def mean(self) -> float:
        return sum(self.samples) / len(self.samples)


@dataclass
class WorkloadMix:
    mix_class: str
    traces: list[UtilizationTrace]
    vm_sizes: list[int]

    MIX_SIZE = 56


def parse_planetlab(path) -> UtilizationTrace:
    """One integer CPU percentage per line; 288 kept, extras truncated."""
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                value = int(line)
            except ValueError:
                raise TraceError(f"{path}: line {lineno}: not an integer: {line!r}") from None
            if not 0 <= value <= 100:
                raise TraceError(f"{path}: line {lineno}: {value} outside [0, 100]")
            samples.append(value)
            if len(samples) == SAMPLES_PER_TRACE:
                break
    if len(samples) < SAMPLES_PER_TRACE:
        raise TraceError(
            f"{path}: expected {SAMPLES_PER_TRACE} samples, got {len(samples)}"
        )
    name = str(path).rsplit("/", 1)[-1]
    return UtilizationTrace(tuple(samples), SOURCE_PLANETLAB, name)


DEFAULT_GOOGLE_COLUMNS = {"time": 0, "job": 1, "cpu": 2}


def parse_google_v1(path, column_map=None, delimiter=None) -> list[UtilizationTrace]:
    """Cluster usage dump: records of (time, job id, normalized CPU usage).

    The column mapping is configurable; normalized usage in [0, 1] is
    scaled to percent and resampled per job onto the 288-slot grid by
    averaging within each slot. Slots with no record read as zero.
    """
    columns = dict(DEFAULT_GOOGLE_COLUMNS)
    if column_map:
        columns.update(column_map)
    needed = max(columns.values()) + 1
    jobs: dict[str, dict[int, list[float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(delimiter) if delimiter else line.split()
            if len(parts) < needed:
                raise TraceError(
                    f"{path}: line {lineno}: {len(parts)} columns, need {needed}"
                )
            try:
                t = float(parts[columns["time"]])
                usage = float(parts[columns["cpu"]])
            except ValueError:
                raise TraceError(f"{path}: line {lineno}: malformed record") from None
            job = parts[columns["job"]]
            slot = int(t // SLOT_SECONDS)
            if not 0 <= slot < SAMPLES_PER_TRACE:
                continue
            jobs.setdefault(job, {}).setdefault(slot, []).append(usage)
    traces = []
    for job in sorted(jobs):
        slots = jobs[job]
        if not slots:
            log.warning("%s: job %s has no usable records, skipped", path, job)
            continue
        samples = []
        for i in range(SAMPLES_PER_TRACE):
            if i in slots:
                pct = 100.0 * sum(slots[i]) / len(slots[i])
                samples.append(max(0, min(100, round(pct))))
            else:
                samples.append(0)
        traces.append(UtilizationTrace(tuple(samples), SOURCE_GOOGLE, f"{job}"))
    return traces


def write_trace(trace: UtilizationTrace, path):
    """Normalized cache format: 288 integers, newline separated."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(str(v) for v in trace.samples))
        fh.write("\n")


def read_trace(path, source=SOURCE_SYNTHETIC) -> UtilizationTrace:
    parsed = parse_planetlab(path)
    return UtilizationTrace(parsed.samples, source, parsed.name)


def assign_vm_sizes(traces) -> list[int]:
    """Quartile-by-mean mapping: hotter traces get bigger VM classes."""
    n = len(traces)
    ranked = sorted(range(n), key=lambda i: (traces[i].mean, traces[i].name))
    sizes = [0] * n
    for rank, idx in enumerate(ranked):
        sizes[idx] = VM_MIPS_CLASSES[rank * 4 // n]
    return sizes


def build_mix(traces, mix_class: str) -> WorkloadMix:
    """Select the 56-trace mix for one workload class.

    light: the 56 coolest traces by mean utilization. heavy: the 56
    hottest. medium: alternating merge of hot cluster-dump traces and
    cool host traces (falls back to hot/cool halves of the pool when
    sources are not distinguished).
    """
    if mix_class not in MIX_CLASSES:
        raise ConfigurationError(f"unknown workload class {mix_class!r}")
    k = WorkloadMix.MIX_SIZE
    if len(traces) < k:
        raise ConfigurationError(
            f"workload mix needs at least {k} candidate traces, got {len(traces)}"
        )
    ascending = sorted(traces, key=lambda t: (t.mean, t.name))
    if mix_class == "light":
        chosen = ascending[:k]
    elif mix_class == "heavy":
        chosen = ascending[-k:][::-1]
    else:
        google = [t for t in ascending if t.source == SOURCE_GOOGLE]
        plab = [t for t in ascending if t.source == SOURCE_PLANETLAB]
        if google and plab:
            hot = google[::-1]
            cool = plab
        else:
            hot = ascending[::-1]
            cool = ascending
        chosen = []
        hi, ci = 0, 0
        while len(chosen) < k:
            if len(chosen) % 2 == 0 and hi < len(hot):
                candidate = hot[hi]
                hi += 1
            elif ci < len(cool):
                candidate = cool[ci]
                ci += 1
            elif hi < len(hot):
                candidate = hot[hi]
                hi += 1
            else:
                raise ConfigurationError("medium mix ran out of candidates")
            if candidate not in chosen:
                chosen.append(candidate)
    return WorkloadMix(mix_class, chosen, assign_vm_sizes(chosen))


PROFILE_KINDS = ("constant", "uniform", "bursty")


def generate_synthetic(seed: int, count: int, profile) -> list[UtilizationTrace]:
    """Deterministic traces for a seed: constant, uniform or bursty shapes."""
    kind, *args = profile
    if kind == "constant":
        (value,) = args
        if not 0 <= value <= 100:
            raise ConfigurationError(f"constant level {value} outside [0, 100]")
    elif kind == "uniform":
        lo, hi = args
        if not (0 <= lo <= hi <= 100):
            raise ConfigurationError(f"uniform bounds ({lo}, {hi}) invalid")
    elif kind == "bursty":
        base, peak, period = args
        if not (0 <= base <= peak <= 100):
            raise ConfigurationError(f"bursty levels ({base}, {peak}) invalid")
        if period < 2:
            raise ConfigurationError("bursty period must be >= 2 slots")
    else:
        raise ConfigurationError(f"unknown profile kind {kind!r}")

    rng = random.Random(seed)
    traces = []
    for idx in range(count):
        if kind == "constant":
            samples = (args[0],) * SAMPLES_PER_TRACE
        elif kind == "uniform":
            lo, hi = args
            samples = tuple(rng.randint(lo, hi) for _ in range(SAMPLES_PER_TRACE))
        else:
            base, peak, period = args
            phase = rng.randrange(period)
            half = math.ceil(period / 2)
            samples = tuple(
                peak if (i + phase) % period < half else base
                for i in range(SAMPLES_PER_TRACE)
            )
        traces.append(UtilizationTrace(samples, SOURCE_SYNTHETIC, f"syn-{idx:04d}"))
    return traces
