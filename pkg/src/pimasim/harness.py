"""Campaign orchestration: configs, deterministic seeding, CSV emission.

A campaign sweeps one load axis for a set of protocols in one traffic
scenario and writes a results table (plus burst-time tail curves for the
bursty scenario).  Every point runs on its own counter-based random stream
derived from the master seed, so outputs are bit-reproducible across
platforms and protocols can run in any order.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .enumeration import NoiseModel, decision_regions, poisson_prior
from .metrics import MetricsLedger, eccdf
from .protocols import (Cra2Simulator, PimaSimulator, ProtocolConfig,
                        SalohaIidSimulator, SalohaStabilizedSimulator,
                        TdmaSimulator, run_cra2_burst, run_pima_burst)

SCENARIOS = ("iid", "correlated", "bursty")

_PROTOCOL_IDS = {"pima": 1, "tdma": 2, "saloha": 3, "cra2": 4}


def rate_per_user_usd(load_pkt_per_slot: float, n_users: int, slot_usd: float) -> float:
    """Per-user Poisson rate in packets per usd for a network load axis value.

    The load axis is normalized per slot: each user generates on average
    load/(N*T_s) packets during one slot of T_s symbols, hence the extra
    1/T_s when expressing the rate per symbol duration.
    """
    return load_pkt_per_slot / (n_users * slot_usd * slot_usd)


def derive_seed(master: int, protocol: str, sweep_index: int, replicate: int = 0) -> int:
    """Stable 128-bit sub-seed; distinct inputs give independent streams."""
    name, _, tag = protocol.partition(":")
    pid = _PROTOCOL_IDS.get(name, 0)
    tag_num = int(tag) if tag.isdigit() else sum(tag.encode())
    ss = np.random.SeedSequence((int(master), pid, tag_num, sweep_index, replicate))
    hi, lo = ss.generate_state(2, np.uint64)
    return (int(hi) << 64) | int(lo)


def make_rng(seed: int) -> np.random.Generator:
    """Philox keeps streams reproducible across platforms and versions."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class ProtocolEntry:
    name: str  # pima | tdma | saloha | cra2
    preamble_pool: int | None = None

    @property
    def label(self) -> str:
        if self.name == "cra2":
            return f"cra2:{self.preamble_pool}"
        return self.name


@dataclass
class CampaignConfig:
    scenario: str
    protocols: list
    sweep: list
    frames_per_point: int = 100_000
    bursts_per_point: int = 1000
    n_users: int = 50
    slot_usd: float = 10.0
    snr_db: float = 10.0
    warmup_fraction: float = 0.1
    seed: int = 20_240_915
    out_dir: str = "runs"
    pima_prior: str | None = None  # default chosen per scenario
    eccdf_loads: list = field(default_factory=list)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if not self.sweep:
            raise ValueError("sweep must contain at least one load value")
        if self.frames_per_point < 1 or self.bursts_per_point < 1:
            raise ValueError("horizon must be at least one frame/burst")
        self.protocols = [p if isinstance(p, ProtocolEntry) else ProtocolEntry(**p)
                          for p in self.protocols]
        for p in self.protocols:
            if p.name not in _PROTOCOL_IDS:
                raise ValueError(f"unknown protocol {p.name!r}")
            if p.name == "cra2" and not p.preamble_pool:
                raise ValueError("cra2 requires a preamble_pool")
            if self.scenario == "bursty" and p.name in ("saloha", "tdma"):
                raise ValueError(
                    f"{p.name} is not defined for bursty traffic: simultaneous "
                    "single-shot generations either always collide (saloha) or "
                    "need a slot per member of an unbounded population (tdma)")

    @classmethod
    def from_json(cls, path) -> "CampaignConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(**raw)


def _default_prior(scenario: str) -> str:
    # single-packet traffic runs with the rate-agnostic pattern prior;
    # queued traffic tracks activations accrued over the previous frame
    return "pattern" if scenario == "iid" else "adaptive"


def _protocol_cfg(entry: ProtocolEntry, cfg: CampaignConfig) -> ProtocolConfig:
    return ProtocolConfig(
        variant=entry.name,
        scenario=cfg.scenario,
        n_users=cfg.n_users,
        slot_usd=cfg.slot_usd,
        snr_db=cfg.snr_db,
        preamble_pool=entry.preamble_pool or cfg.n_users,
        prior=cfg.pima_prior or _default_prior(cfg.scenario),
        prior_window_usd=cfg.n_users * cfg.slot_usd,
    )


def run_point(entry: ProtocolEntry, load: float, cfg: CampaignConfig,
              sweep_index: int) -> MetricsLedger:
    """Simulate one (protocol, load) cell and return its ledger."""
    rng = make_rng(derive_seed(cfg.seed, entry.label, sweep_index))
    ledger = MetricsLedger()
    pcfg = _protocol_cfg(entry, cfg)

    if cfg.scenario == "bursty":
        noise = NoiseModel(cfg.snr_db)
        if entry.name == "pima":
            regions = decision_regions(poisson_prior(load), noise)
            for _ in range(cfg.bursts_per_point):
                d = run_pima_burst(load, rng, noise, regions,
                                   slot_usd=cfg.slot_usd)
                if d is not None:
                    ledger.record_burst(d)
        else:
            for _ in range(cfg.bursts_per_point):
                d = run_cra2_burst(load, pcfg.preamble_pool, rng,
                                   pcfg.miss_probability, cfg.slot_usd)
                if d is not None:
                    ledger.record_burst(d)
        return ledger

    rate = rate_per_user_usd(load, cfg.n_users, cfg.slot_usd)
    warmup = (int(cfg.frames_per_point * cfg.warmup_fraction)
              if cfg.scenario == "correlated" else 0)

    if entry.name == "pima":
        sim = PimaSimulator(pcfg, rate, rng, ledger)
        if warmup:
            sim.ledger = MetricsLedger()
            sim.run_frames(warmup)
            sim.ledger = ledger
        sim.run_frames(cfg.frames_per_point - warmup)
    elif entry.name == "tdma":
        sim = TdmaSimulator(pcfg, rate, rng, ledger)
        sim.run(cfg.frames_per_point, warmup_frames=warmup)
    elif entry.name == "saloha":
        if cfg.scenario == "iid":
            sim = SalohaIidSimulator(pcfg, rate, rng, ledger)
            sim.run(cfg.frames_per_point)
        else:
            sim = SalohaStabilizedSimulator(pcfg, rate, rng, ledger)
            if warmup:
                sim.ledger = MetricsLedger()
                sim.run(warmup)
                sim.ledger = ledger
            sim.run(cfg.frames_per_point - warmup)
    else:
        sim = Cra2Simulator(pcfg, rate, rng, ledger)
        if warmup:
            sim.ledger = MetricsLedger()
            sim.run_frames(warmup)
            sim.ledger = ledger
        sim.run_frames(cfg.frames_per_point - warmup)
    return ledger


RESULT_COLUMNS = ["protocol", "scenario", "load", "eta_bar", "d_bar_usd",
                  "p_drop", "mean_burst_usd", "n_frames", "n_generated",
                  "n_delivered", "n_dropped", "seed"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def run_campaign(cfg: CampaignConfig, only_protocol: str | None = None,
                 progress=None) -> tuple[list, list]:
    """Run every (protocol, load) cell; returns (result rows, eccdf rows)."""
    rows, tail_rows = [], []
    for entry in cfg.protocols:
        if only_protocol and entry.name != only_protocol:
            continue
        for j, load in enumerate(cfg.sweep):
            if progress:
                progress(f"{entry.label} @ load {load:g}")
            ledger = run_point(entry, load, cfg, j)
            summary = ledger.finalize()
            rows.append({
                "protocol": entry.label, "scenario": cfg.scenario, "load": load,
                "eta_bar": summary["eta_bar"], "d_bar_usd": summary["d_bar_usd"],
                "p_drop": summary["p_drop"],
                "mean_burst_usd": summary.get("mean_burst_usd"),
                "n_frames": summary["n_frames"],
                "n_generated": summary["n_generated"],
                "n_delivered": summary["n_delivered"],
                "n_dropped": summary["n_dropped"],
                "seed": derive_seed(cfg.seed, entry.label, j),
            })
            if ledger.burst_times and (not cfg.eccdf_loads or load in cfg.eccdf_loads):
                for value, tail in eccdf(ledger.burst_times):
                    tail_rows.append({"protocol": entry.label, "load": load,
                                      "burst_usd": value, "tail_prob": tail})
    return rows, tail_rows


def write_results_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in RESULT_COLUMNS])


def write_eccdf_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["protocol", "load", "burst_usd", "tail_prob"])
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in ("protocol", "load",
                                                    "burst_usd", "tail_prob")])
