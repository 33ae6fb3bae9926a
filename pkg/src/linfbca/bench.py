"""Monte Carlo experiment campaigns.

A campaign is described by an ExperimentConfig, runs one work cell per
(trial, SNR, correlation) combination, scores every configured method on
identical mixed-and-noised data, and aggregates the per-cell metric
records into means and standard deviations. All randomness derives from
the master seed through stable hashes, so adding methods or SNR levels
never perturbs the generated data, and a repeated run is bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import CampaignError, ContractViolationError
from .fileio import load_pgm
from .linalg import make_rng, random_gaussian_matrix, random_orthogonal
from .metrics import MetricRecord, global_matrix, isi, match_sources, psnr, symbol_error_rate
from .separation import DEFAULT_MAX_ITER, DEFAULT_MU0, METHODS, separate
from .sources import (
    Constellation,
    PAM4_SYMBOLS,
    SourceEnsemble,
    add_awgn,
    gen_copula_t,
    gen_pam4,
    inject_extremes,
    mix,
)

__all__ = [
    "AggregateCell",
    "CellFailure",
    "CellMetadata",
    "CellTiming",
    "ExperimentConfig",
    "ExperimentReport",
    "SCENARIOS",
    "WORKERS_ENV_VAR",
    "config_from_dict",
    "config_to_dict",
    "derive_seed",
    "make_cell_data",
    "metric_items",
    "read_report_json",
    "run_campaign",
    "write_report_csv",
    "write_report_json",
]

SCENARIOS = ("pam4", "images", "copula")

WORKERS_ENV_VAR = "LINFBCA_WORKERS"

UNIFORM_PAM4 = (0.25, 0.25, 0.25, 0.25)

MAX_FAILED_FRACTION = 0.10


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one campaign.

    ``snr_db_list`` entries may be None for the noiseless case.
    ``rho_list`` applies to the copula scenario only,
    ``symbol_probabilities`` and ``inject_extremes`` to pam4 (the copula
    scenario also honors ``inject_extremes``), and ``image_paths`` to the
    images scenario.
    """

    scenario: str
    n_sources: int
    n_samples: int
    snr_db_list: tuple
    methods: tuple
    n_trials: int
    master_seed: int
    rho_list: tuple | None = None
    symbol_probabilities: tuple | None = None
    dof: int = 4
    inject_extremes: bool = True
    image_paths: tuple | None = None
    max_iter: int = DEFAULT_MAX_ITER
    mu0: float = DEFAULT_MU0
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(self.snr_db_list))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.rho_list is not None:
            object.__setattr__(self, "rho_list", tuple(float(r) for r in self.rho_list))
        if self.symbol_probabilities is not None:
            object.__setattr__(
                self,
                "symbol_probabilities",
                tuple(float(p) for p in self.symbol_probabilities),
            )
        if self.image_paths is not None:
            object.__setattr__(self, "image_paths", tuple(str(p) for p in self.image_paths))

        if self.scenario not in SCENARIOS:
            raise ContractViolationError(
                f"unknown scenario {self.scenario!r}, expected one of {SCENARIOS}"
            )
        if self.n_sources < 2:
            raise ContractViolationError("n_sources must be >= 2")
        if self.n_samples < 2:
            raise ContractViolationError("n_samples must be >= 2")
        if not self.snr_db_list:
            raise ContractViolationError("snr_db_list must be nonempty")
        for snr in self.snr_db_list:
            if snr is not None and not isinstance(snr, (int, float)):
                raise ContractViolationError(f"bad SNR entry {snr!r}")
        if not self.methods:
            raise ContractViolationError("methods must be nonempty")
        for m in self.methods:
            if m not in METHODS:
                raise ContractViolationError(f"unknown method {m!r}")
        if len(set(self.methods)) != len(self.methods):
            raise ContractViolationError("duplicate methods")
        if self.n_trials < 1:
            raise ContractViolationError("n_trials must be >= 1")
        if self.max_iter < 1:
            raise ContractViolationError("max_iter must be >= 1")
        if not (0.0 < self.mu0 < np.pi):
            raise ContractViolationError("mu0 must lie in (0, pi)")

        if self.scenario == "copula":
            if not self.rho_list:
                raise ContractViolationError("copula scenario requires rho_list")
            for r in self.rho_list:
                if not (0.0 <= r < 1.0):
                    raise ContractViolationError(f"rho {r!r} outside [0, 1)")
            if self.dof < 1:
                raise ContractViolationError("dof must be >= 1")
        elif self.rho_list is not None:
            raise ContractViolationError(
                f"rho_list does not apply to the {self.scenario} scenario"
            )

        if self.scenario == "pam4":
            if self.symbol_probabilities is not None and len(self.symbol_probabilities) != len(
                PAM4_SYMBOLS
            ):
                raise ContractViolationError(
                    f"symbol_probabilities must have {len(PAM4_SYMBOLS)} entries"
                )
        elif self.symbol_probabilities is not None:
            raise ContractViolationError(
                f"symbol_probabilities does not apply to the {self.scenario} scenario"
            )

        if self.scenario == "images":
            if not self.image_paths:
                raise ContractViolationError("images scenario requires image_paths")
            if len(self.image_paths) != self.n_sources:
                raise ContractViolationError(
                    "image_paths must list exactly one file per source"
                )
        elif self.image_paths is not None:
            raise ContractViolationError(
                f"image_paths does not apply to the {self.scenario} scenario"
            )

    def rho_values(self) -> tuple:
        return self.rho_list if self.rho_list is not None else (None,)


_CONFIG_KEYS = None


def _config_keys():
    global _CONFIG_KEYS
    if _CONFIG_KEYS is None:
        _CONFIG_KEYS = tuple(f.name for f in fields(ExperimentConfig))
    return _CONFIG_KEYS


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a config from parsed JSON, rejecting unknown keys."""
    if not isinstance(d, dict):
        raise ContractViolationError("config must be a JSON object")
    unknown = sorted(set(d) - set(_config_keys()))
    if unknown:
        raise ContractViolationError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**d)


def config_to_dict(config: ExperimentConfig) -> dict:
    out = {}
    for f in fields(ExperimentConfig):
        v = getattr(config, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit sub-seed from the master seed and a label path."""
    text = ":".join([str(int(master_seed))] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def make_cell_data(config: ExperimentConfig, trial: int, snr_db, rho):
    """Sources, mixing matrix, and noisy mixtures for one work cell.

    A pure function of (config, trial, snr_db, rho): both methods in a
    trial consume the same output, and the data seed involves neither the
    method list nor the SNR and correlation grids. Within a trial, every
    correlation level therefore sees the same latent draws and the same
    mixing matrix, and every SNR level the same noise shape, so sweeps
    are paired comparisons. Noise uses its own sub-seed keyed by the SNR
    so adding levels leaves other cells untouched.
    """
    data_rng = make_rng(derive_seed(config.master_seed, config.scenario, trial, "data"))
    n = config.n_sources
    if config.scenario == "pam4":
        probs = config.symbol_probabilities or UNIFORM_PAM4
        ensemble = gen_pam4(n, config.n_samples, probs, config.inject_extremes, data_rng)
        h = random_gaussian_matrix(n, n, data_rng)
    elif config.scenario == "images":
        rows = [load_pgm(p) for p in config.image_paths]
        lengths = {r.shape[1] for r in rows}
        if len(lengths) != 1:
            raise ContractViolationError("images must all have the same pixel count")
        if lengths != {config.n_samples}:
            raise ContractViolationError(
                f"images hold {lengths.pop()} pixels, config says n_samples="
                f"{config.n_samples}"
            )
        ensemble = SourceEnsemble(
            s=np.vstack(rows),
            amplitude=1.0,
            kind="external",
            params={"paths": list(config.image_paths)},
        )
        h = random_gaussian_matrix(n, n, data_rng)
    else:
        # The copula consumes a rho-independent number of draws, so the
        # latent normals and the mixing matrix are shared across the
        # correlation sweep.
        ensemble = gen_copula_t(n, config.n_samples, rho, config.dof, data_rng)
        if config.inject_extremes:
            ensemble = inject_extremes(ensemble)
        h = random_orthogonal(n, data_rng)

    x = mix(h, ensemble)
    noise_rng = make_rng(
        derive_seed(config.master_seed, config.scenario, trial, f"snr={snr_db}", "noise")
    )
    x = add_awgn(x, snr_db, noise_rng)
    return ensemble, h, x


@dataclass(frozen=True)
class CellTiming:
    trial: int
    snr_db: float | None
    rho: float | None
    seconds: float


@dataclass(frozen=True)
class CellFailure:
    trial: int
    snr_db: float | None
    rho: float | None
    error: str


@dataclass(frozen=True)
class CellMetadata:
    trial: int
    snr_db: float | None
    rho: float | None
    realized_correlation: float


@dataclass(frozen=True)
class AggregateCell:
    method: str
    snr_db: float | None
    rho: float | None
    metric_name: str
    mean: float
    std: float
    n: int


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    """Campaign results: records, aggregates, timings, and failures."""

    config: ExperimentConfig
    records: tuple
    aggregates: tuple
    wall_clock: tuple
    failures: tuple = ()
    cell_metadata: tuple = ()


def _score_cell(config: ExperimentConfig, trial: int, snr_db, rho):
    ensemble, h, x = make_cell_data(config, trial, snr_db, rho)
    orthogonal_path = config.scenario == "copula"
    records = []
    for method in config.methods:
        whitening, outcome = separate(
            x,
            method,
            assume_orthogonal_mixing=orthogonal_path,
            max_iter=config.max_iter,
            mu0=config.mu0,
        )
        g = global_matrix(outcome.w, whitening.b if whitening else None, h)
        if config.scenario == "pam4":
            constellation = Constellation(
                PAM4_SYMBOLS, config.symbol_probabilities or UNIFORM_PAM4
            )
            value = symbol_error_rate(outcome.y, ensemble, match_sources(g), constellation)
            records.append(
                MetricRecord(
                    method=method,
                    n_sources=config.n_sources,
                    snr_db=snr_db,
                    trial=trial,
                    rho=rho,
                    ser_percent=value,
                )
            )
        elif config.scenario == "images":
            values = tuple(
                psnr(ensemble.s[i], outcome.y) for i in range(config.n_sources)
            )
            records.append(
                MetricRecord(
                    method=method,
                    n_sources=config.n_sources,
                    snr_db=snr_db,
                    trial=trial,
                    rho=rho,
                    psnr_db=values,
                )
            )
        else:
            records.append(
                MetricRecord(
                    method=method,
                    n_sources=config.n_sources,
                    snr_db=snr_db,
                    trial=trial,
                    rho=rho,
                    isi_db=isi(g),
                )
            )
    metadata = None
    realized = ensemble.params.get("realized_correlation")
    if realized is not None:
        metadata = CellMetadata(
            trial=trial, snr_db=snr_db, rho=rho, realized_correlation=realized
        )
    return records, metadata


def _run_cell(args):
    config, trial, snr_db, rho = args
    start = time.perf_counter()
    try:
        records, metadata = _score_cell(config, trial, snr_db, rho)
        error = None
    except Exception as exc:  # the campaign survives individual bad trials
        records, metadata = [], None
        error = f"{type(exc).__name__}: {exc}"
    seconds = time.perf_counter() - start
    return trial, snr_db, rho, records, metadata, error, seconds


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_campaign(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Run every (trial, SNR, rho) cell of the campaign and aggregate.

    Cells are independent work units; with more than one worker they run
    in a process pool, and results are collected in submission order so
    the report does not depend on scheduling. More than 10% failed cells
    aborts with CampaignError.
    """
    cells = [
        (config, trial, snr, rho)
        for trial in range(config.n_trials)
        for snr in config.snr_db_list
        for rho in config.rho_values()
    ]
    n_workers = min(_worker_count(workers), len(cells))
    if n_workers > 1:
        try:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                results = list(pool.map(_run_cell, cells))
        except (OSError, PermissionError):
            results = [_run_cell(c) for c in cells]
    else:
        results = [_run_cell(c) for c in cells]

    records = []
    timings = []
    failures = []
    metadata = []
    for trial, snr, rho, cell_records, cell_meta, error, seconds in results:
        timings.append(CellTiming(trial=trial, snr_db=snr, rho=rho, seconds=seconds))
        if error is not None:
            failures.append(CellFailure(trial=trial, snr_db=snr, rho=rho, error=error))
            continue
        records.extend(cell_records)
        if cell_meta is not None:
            metadata.append(cell_meta)

    if len(failures) > MAX_FAILED_FRACTION * len(cells):
        raise CampaignError(
            f"{len(failures)} of {len(cells)} cells failed; first error: "
            f"{failures[0].error}"
        )

    return ExperimentReport(
        config=config,
        records=tuple(records),
        aggregates=tuple(_aggregate(config, records)),
        wall_clock=tuple(timings),
        failures=tuple(failures),
        cell_metadata=tuple(metadata),
    )


def metric_items(record: MetricRecord):
    """(metric_name, value) pairs carried by a record, in a fixed order."""
    if record.ser_percent is not None:
        return [("ser_percent", record.ser_percent)]
    if record.isi_db is not None:
        return [("isi_db", record.isi_db)]
    return [
        (f"psnr_db_src{i + 1}", v) for i, v in enumerate(record.psnr_db)
    ]


def _aggregate(config: ExperimentConfig, records) -> list:
    groups: dict = {}
    order = []
    for rec in records:
        for name, value in metric_items(rec):
            key = (rec.method, rec.snr_db, rec.rho, name)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(float(value))
    cells = []
    for key in sorted(
        order,
        key=lambda k: (
            config.methods.index(k[0]),
            _snr_rank(config.snr_db_list, k[1]),
            _rho_rank(config.rho_values(), k[2]),
            k[3],
        ),
    ):
        vals = groups[key]
        mean = sum(vals) / len(vals)
        std = (sum((v - mean) ** 2 for v in vals) / len(vals)) ** 0.5
        cells.append(
            AggregateCell(
                method=key[0],
                snr_db=key[1],
                rho=key[2],
                metric_name=key[3],
                mean=mean,
                std=std,
                n=len(vals),
            )
        )
    return cells


def _snr_rank(snr_list, snr):
    return snr_list.index(snr)


def _rho_rank(rho_list, rho):
    return rho_list.index(rho)


CSV_HEADER = "scenario,method,n_sources,snr_db,rho,trial,metric_name,value"


def _csv_opt(value) -> str:
    return "" if value is None else repr(float(value))


def write_report_csv(report: ExperimentReport, path) -> None:
    """Write the per-record metric values as CSV, one metric per row.

    Output is byte-deterministic for a given report: fixed column order,
    record order, and shortest round-trip float formatting.
    """
    lines = [CSV_HEADER]
    scenario = report.config.scenario
    for rec in report.records:
        for name, value in metric_items(rec):
            lines.append(
                f"{scenario},{rec.method},{rec.n_sources},{_csv_opt(rec.snr_db)},"
                f"{_csv_opt(rec.rho)},{rec.trial},{name},{repr(float(value))}"
            )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _record_to_dict(rec: MetricRecord) -> dict:
    return {
        "method": rec.method,
        "n_sources": rec.n_sources,
        "snr_db": rec.snr_db,
        "trial": rec.trial,
        "rho": rec.rho,
        "ser_percent": rec.ser_percent,
        "psnr_db": list(rec.psnr_db) if rec.psnr_db is not None else None,
        "isi_db": rec.isi_db,
    }


def _record_from_dict(d: dict) -> MetricRecord:
    psnr_db = d.get("psnr_db")
    return MetricRecord(
        method=d["method"],
        n_sources=d["n_sources"],
        snr_db=d["snr_db"],
        trial=d["trial"],
        rho=d.get("rho"),
        ser_percent=d.get("ser_percent"),
        psnr_db=tuple(psnr_db) if psnr_db is not None else None,
        isi_db=d.get("isi_db"),
    )


def write_report_json(report: ExperimentReport, path) -> None:
    """Serialize the full report (config echo included) as JSON."""
    payload = {
        "config": config_to_dict(report.config),
        "records": [_record_to_dict(r) for r in report.records],
        "aggregates": [asdict(a) for a in report.aggregates],
        "wall_clock": [asdict(t) for t in report.wall_clock],
        "failures": [asdict(f) for f in report.failures],
        "cell_metadata": [asdict(m) for m in report.cell_metadata],
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report_json(path) -> ExperimentReport:
    """Reconstruct a report written by write_report_json."""
    with open(path, "r") as fh:
        payload = json.load(fh)
    return ExperimentReport(
        config=config_from_dict(payload["config"]),
        records=tuple(_record_from_dict(r) for r in payload["records"]),
        aggregates=tuple(AggregateCell(**a) for a in payload["aggregates"]),
        wall_clock=tuple(CellTiming(**t) for t in payload["wall_clock"]),
        failures=tuple(CellFailure(**f) for f in payload["failures"]),
        cell_metadata=tuple(CellMetadata(**m) for m in payload["cell_metadata"]),
    )
