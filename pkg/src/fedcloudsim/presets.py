"""Experiment configuration and the named presets.

``paper-light`` / ``paper-medium`` / ``paper-heavy`` encode the
replication datacenter: 300 hosts in two categories split across three
providers (100 each), four single-core VM classes and 56 traces per run.
``desk-small`` is an 8-host, 12-VM setup small enough for exhaustive
oracles.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict

from .model import (
    ALLOCATOR_NAMES,
    ConfigurationError,
    CspSpec,
    FEDERATION_MODELS,
    FederationConfig,
    PmSpec,
    VmRequest,
)
from . import traces as trace_io

PM_RAM_MB = 4096
CATEGORY_SLOW = PmSpec(pe_mips=1860, ram_mb=PM_RAM_MB, power_category=0)
CATEGORY_FAST = PmSpec(pe_mips=2600, ram_mb=PM_RAM_MB, power_category=1)

DEFAULT_PROFILES = {
    "light": ("uniform", 5, 25),
    "medium": ("uniform", 30, 60),
    "heavy": ("bursty", 60, 100, 8),
}


@dataclass
class ExperimentConfig:
    """A full sweep: (model x allocator x workload class) cells."""

    name: str = "custom"
    models: list = field(default_factory=lambda: list(FEDERATION_MODELS))
    allocators: list = field(default_factory=lambda: list(ALLOCATOR_NAMES))
    workload_classes: list = field(default_factory=lambda: ["light"])
    csps: list = field(default_factory=list)
    trace_dir: str | None = None
    trace_format: str = "planetlab"
    google_columns: dict | None = None
    synthetic_profiles: dict = field(default_factory=lambda: dict(DEFAULT_PROFILES))
    pool_size: int = 120
    vm_count: int = 56
    vm_ram_mb: int = 256
    seed: int = 1
    repetitions: int = 11
    output_dir: str = "runs/out"
    workers: int = 1
    interval_s: int = 300
    horizon_s: int = 86400
    overload_threshold: float = 0.8
    saturation_fraction: float = 0.95
    gava: dict = field(default_factory=lambda: {
        "population": 50,
        "generations": 200,
        "target_utilization": 0.65,
        "mutation_rate": 0.01,
    })

    def validate(self):
        if not self.models:
            raise ConfigurationError("models: at least one federation model")
        for m in self.models:
            if m not in FEDERATION_MODELS:
                raise ConfigurationError(f"models: unknown model {m!r}")
        if not self.allocators:
            raise ConfigurationError("allocators: at least one scheme")
        for a in self.allocators:
            if a not in ALLOCATOR_NAMES:
                raise ConfigurationError(f"allocators: unknown scheme {a!r}")
        if not self.workload_classes:
            raise ConfigurationError("workload_classes: at least one class")
        for w in self.workload_classes:
            if w not in trace_io.MIX_CLASSES:
                raise ConfigurationError(f"workload_classes: unknown class {w!r}")
        if self.vm_count < 1:
            raise ConfigurationError("vm_count: must be positive")
        if self.vm_ram_mb < 0:
            raise ConfigurationError("vm_ram_mb: must be non-negative")
        if self.workers < 1:
            raise ConfigurationError("workers: must be positive")
        if self.trace_dir is None:
            for w in self.workload_classes:
                if w not in self.synthetic_profiles:
                    raise ConfigurationError(
                        f"synthetic_profiles: no profile for class {w!r}"
                    )
        if self.gava.get("population", 2) < 2:
            raise ConfigurationError("gava.population: must be >= 2")
        if self.gava.get("generations", 1) < 1:
            raise ConfigurationError("gava.generations: must be >= 1")
        # delegate the federation-level checks
        self.federation_config(self.models[0], self.allocators[0]).validate()

    def cells(self):
        return [
            (model, allocator, workload)
            for workload in self.workload_classes
            for model in self.models
            for allocator in self.allocators
        ]

    def federation_config(self, model: str, allocator: str) -> FederationConfig:
        return FederationConfig(
            model=model,
            csps=self.csps,
            allocator=allocator,
            rng_seed=self.seed,
            scheduling_interval_s=self.interval_s,
            horizon_s=self.horizon_s,
            overload_threshold=self.overload_threshold,
            saturation_fraction=self.saturation_fraction,
            timing_repetitions=self.repetitions,
            allocator_params=dict(self.gava),
        )

    def trace_pool(self, workload_class: str):
        if self.trace_dir is not None:
            return _load_trace_dir(self.trace_dir, self.trace_format,
                                   self.google_columns)
        profile = tuple(self.synthetic_profiles[workload_class])
        count = max(self.pool_size, self.vm_count)
        class_offset = {"light": 0, "medium": 1, "heavy": 2}[workload_class]
        return trace_io.generate_synthetic(self.seed * 10 + class_offset,
                                           count, profile)

    def build_workload(self, workload_class: str) -> list[VmRequest]:
        """Deterministic VM batch for one class: traces, sizes, owners."""
        pool = self.trace_pool(workload_class)
        if self.vm_count == trace_io.WorkloadMix.MIX_SIZE:
            mix = trace_io.build_mix(pool, workload_class)
            chosen, sizes = mix.traces, mix.vm_sizes
        else:
            if len(pool) < self.vm_count:
                raise ConfigurationError(
                    f"trace pool has {len(pool)} traces, need {self.vm_count}"
                )
            chosen = sorted(pool, key=lambda t: (t.mean, t.name))[:self.vm_count]
            sizes = trace_io.assign_vm_sizes(chosen)
        csp_ids = [csp.csp_id for csp in self.csps]
        return [
            VmRequest(
                vm_id=f"vm{i:03d}",
                owner_csp=csp_ids[i % len(csp_ids)],
                mips_demand=sizes[i],
                ram_mb=self.vm_ram_mb,
                trace=chosen[i],
            )
            for i in range(len(chosen))
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["csps"] = [
            {"csp_id": csp.csp_id,
             "pms": [asdict(spec) for spec in csp.pms]}
            for csp in self.csps
        ]
        return d


def config_from_dict(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from a parsed document, overlaying ``base`` if given.

    CSP host lists accept a ``count`` key to expand repeated specs.
    Unknown keys are rejected so typos fail fast.
    """
    cfg = base if base is not None else ExperimentConfig()
    known = set(cfg.__dataclass_fields__)
    for key, value in data.items():
        if key not in known:
            raise ConfigurationError(f"unknown config key {key!r}")
        if key == "csps":
            cfg.csps = _parse_csps(value)
        elif key == "synthetic_profiles":
            cfg.synthetic_profiles = {
                cls: tuple(profile) for cls, profile in value.items()
            }
        elif key == "gava":
            merged = dict(cfg.gava)
            merged.update(value)
            cfg.gava = merged
        else:
            setattr(cfg, key, value)
    return cfg


def _parse_csps(entries) -> list[CspSpec]:
    csps = []
    for entry in entries:
        try:
            csp_id = entry["csp_id"]
            pm_entries = entry["pms"]
        except (KeyError, TypeError):
            raise ConfigurationError(
                "csps: each entry needs csp_id and pms") from None
        pms = []
        for spec in pm_entries:
            spec = dict(spec)
            count = spec.pop("count", 1)
            try:
                parsed = PmSpec(**spec)
            except TypeError as exc:
                raise ConfigurationError(f"csps: bad pm spec: {exc}") from None
            pms.extend(PmSpec(**asdict(parsed)) for _ in range(count))
        csps.append(CspSpec(csp_id, pms))
    return csps


def _load_trace_dir(trace_dir, trace_format, google_columns):
    names = sorted(os.listdir(trace_dir))
    if not names:
        raise ConfigurationError(f"trace directory {trace_dir} is empty")
    pool = []
    for name in names:
        path = os.path.join(trace_dir, name)
        if not os.path.isfile(path):
            continue
        if trace_format == "planetlab":
            pool.append(trace_io.parse_planetlab(path))
        elif trace_format == "google-v1":
            pool.extend(trace_io.parse_google_v1(path, google_columns))
        else:
            raise ConfigurationError(f"unknown trace format {trace_format!r}")
    return pool


def _paper_csps() -> list[CspSpec]:
    """Three providers, 100 hosts each, both categories evenly split."""
    csps = []
    for csp_id in ("csp1", "csp2", "csp3"):
        pms = [PmSpec(**asdict(CATEGORY_FAST)) for _ in range(50)]
        pms += [PmSpec(**asdict(CATEGORY_SLOW)) for _ in range(50)]
        csps.append(CspSpec(csp_id, pms))
    return csps


def _desk_csps() -> list[CspSpec]:
    csps = []
    for csp_id in ("csp1", "csp2"):
        pms = [PmSpec(**asdict(CATEGORY_FAST)) for _ in range(2)]
        pms += [PmSpec(**asdict(CATEGORY_SLOW)) for _ in range(2)]
        csps.append(CspSpec(csp_id, pms))
    return csps


def presets() -> dict[str, ExperimentConfig]:
    """The shipped experiment configurations, keyed by name."""
    paper = dict(
        csps=_paper_csps(),
        vm_count=56,
        pool_size=120,
        seed=1,
    )
    return {
        "paper-light": ExperimentConfig(
            name="paper-light", workload_classes=["light"], **paper),
        "paper-medium": ExperimentConfig(
            name="paper-medium", workload_classes=["medium"], **paper),
        "paper-heavy": ExperimentConfig(
            name="paper-heavy", workload_classes=["heavy"], **paper),
        "desk-small": ExperimentConfig(
            name="desk-small",
            csps=_desk_csps(),
            workload_classes=["light"],
            synthetic_profiles={"light": ("uniform", 10, 60)},
            vm_count=12,
            pool_size=12,
            seed=7,
            repetitions=3,
            gava={"population": 10, "generations": 40,
                  "target_utilization": 0.65, "mutation_rate": 0.01},
        ),
    }


def preset(name: str) -> ExperimentConfig:
    try:
        return presets()[name]
    except KeyError:
        known = ", ".join(sorted(presets()))
        raise ConfigurationError(f"unknown preset {name!r} (known: {known})") from None
