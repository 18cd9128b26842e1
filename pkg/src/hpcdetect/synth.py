"""Reproducible synthetic HPC traces with benign and attack-like signatures.

Count model: for each 1 ms interval a phase is chosen by a sticky Markov chain
whose stationary distribution is the profile's phase mix. Branch instructions,
LLC and L1D misses are negative-binomial with the phase mean and
``var = mean + dispersion * mean**2``; branch misses are Binomial(branch
instructions, phase miss ratio), so misses never exceed branches.

The signature factors in the default roster (LLC intensity >= 5x, branch-miss
ratio >= 3x the benign values) are desk-scale stand-ins, not measurements.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import BI, BM, L1D, LLC, N_EVENTS, Label, Run, Source, TraceSet
from .errors import InvariantViolation, RejectedDegenerate

DEFAULT_DISPERSION = 0.3
PHASE_PERSISTENCE = 0.98


@dataclass(frozen=True)
class EventRate:
    mean: float
    dispersion: float = DEFAULT_DISPERSION

    def __post_init__(self):
        if not (self.mean >= 0 and math.isfinite(self.mean)):
            raise InvariantViolation(f"rate mean must be finite and >= 0, got {self.mean}")
        if self.dispersion < 0:
            raise InvariantViolation(f"dispersion must be >= 0, got {self.dispersion}")


@dataclass(frozen=True)
class Phase:
    weight: float
    rates: tuple[EventRate, EventRate, EventRate, EventRate]

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(self.rates))
        if not 0.0 <= self.weight <= 1.0:
            raise InvariantViolation(f"phase weight {self.weight} outside [0, 1]")
        if len(self.rates) != N_EVENTS:
            raise InvariantViolation("a phase needs one rate per event")
        if self.rates[BM].mean > self.rates[BI].mean:
            raise InvariantViolation("branch-miss rate exceeds branch-instruction rate")

    @property
    def miss_ratio(self) -> float:
        bi = self.rates[BI].mean
        return self.rates[BM].mean / bi if bi > 0 else 0.0


@dataclass(frozen=True)
class WorkloadProfile:
    """Per-application count model.

    ``input_jitter`` is the per-event log-normal sigma of a per-run rate
    multiplier, modelling input-dependent behaviour across executions.
    """

    app_id: str
    label: Label
    phase_mix: tuple[Phase, ...]
    input_jitter: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "phase_mix", tuple(self.phase_mix))
        object.__setattr__(self, "label", Label.parse(self.label))
        jit = self.input_jitter
        if isinstance(jit, (int, float)):
            jit = (float(jit),) * N_EVENTS
        object.__setattr__(self, "input_jitter", tuple(float(j) for j in jit))
        if not self.phase_mix:
            raise InvariantViolation(f"{self.app_id}: no phases")
        total = sum(p.weight for p in self.phase_mix)
        if abs(total - 1.0) > 1e-9:
            raise InvariantViolation(f"{self.app_id}: phase weights sum to {total}")
        if len(self.input_jitter) != N_EVENTS or min(self.input_jitter) < 0:
            raise InvariantViolation(f"{self.app_id}: bad input_jitter")

    def _mix_mean(self, ev: int) -> float:
        return sum(p.weight * p.rates[ev].mean for p in self.phase_mix)

    @property
    def branch_miss_ratio(self) -> float:
        """Expected branch-misses / branch-instructions over the phase mix."""
        bi = self._mix_mean(BI)
        return self._mix_mean(BM) / bi if bi > 0 else 0.0

    @property
    def llc_intensity(self) -> float:
        """Expected LLC load misses per millisecond."""
        return self._mix_mean(LLC)

    @property
    def mean_rates(self) -> np.ndarray:
        return np.array([self._mix_mean(e) for e in range(N_EVENTS)])


@dataclass(frozen=True)
class SboInjection:
    """Stack-buffer-overflow payload: ``stealth_epsilon`` times the per-ms event
    rates in ``signature`` are added to every interval of an attacked run."""

    stealth_epsilon: float = 0.01
    signature: tuple[float, float, float, float] = (150_000.0, 30_000.0, 4_000.0, 60_000.0)

    def __post_init__(self):
        object.__setattr__(self, "signature", tuple(float(s) for s in self.signature))
        if not 0.0 < self.stealth_epsilon < 1.0:
            raise RejectedDegenerate(
                f"stealth_epsilon must be in (0, 1), got {self.stealth_epsilon}")
        if len(self.signature) != N_EVENTS or min(self.signature) < 0:
            raise InvariantViolation("signature needs 4 non-negative rates")
        if self.signature[BM] > self.signature[BI]:
            raise InvariantViolation("signature branch misses exceed branches")


def _profile(app_id, label, bi, ratio, llc, l1d, jitter=0.0, dispersion=DEFAULT_DISPERSION,
             second=(0.3, 0.7, 1.3, 1.2)):
    """Two-phase profile: a main phase and a secondary phase with scaled rates."""
    w2, f_bi, f_llc, f_l1d = second

    def rates(b, c, d):
        return (EventRate(b, dispersion), EventRate(b * ratio, dispersion),
                EventRate(c, dispersion), EventRate(d, dispersion))

    phases = (Phase(1.0 - w2, rates(bi, llc, l1d)),
              Phase(w2, rates(bi * f_bi, llc * f_llc, l1d * f_l1d)))
    return WorkloadProfile(app_id, label, phases, jitter)


# (app_id, branch-instructions/ms, miss ratio, llc misses/ms, l1d misses/ms)
_BENIGN = (
    ("matrix_mult", 120_000, 0.002, 300, 15_000),
    ("stress", 300_000, 0.004, 30, 2_000),
    ("bitcount", 250_000, 0.012, 5, 300),
    ("stream", 40_000, 0.001, 800, 9_000),
    ("bzip2", 180_000, 0.030, 120, 4_000),
    ("ffmpeg", 200_000, 0.020, 250, 6_000),
    ("dhrystone", 350_000, 0.005, 2, 500),
)
_MALIGN = (
    ("spectre_v1", 150_000, 0.120, 400, 3_000),
    ("spectre_v2", 90_000, 0.180, 600, 2_500),
    ("spectre_v4", 110_000, 0.100, 500, 3_500),
    ("meltdown", 60_000, 0.020, 9_000, 12_000),
    ("zombieload", 80_000, 0.015, 6_000, 25_000),
    ("fallout", 70_000, 0.010, 5_000, 18_000),
    ("crosstalk", 50_000, 0.025, 7_000, 10_000),
)
_SBO_BENCHMARKS = (
    # app_id, bi, ratio, llc, l1d, per-event input jitter
    ("aes", 90_000, 0.004, 8, 2_500, (0.05, 0.05, 0.10, 0.05)),
    ("rsa", 120_000, 0.020, 150, 3_000, (0.08, 0.10, 0.15, 0.08)),
    ("sha", 70_000, 0.003, 4, 1_200, (0.05, 0.05, 0.10, 0.05)),
    ("dijkstra", 60_000, 0.015, 60, 4_000, (0.08, 0.10, 0.15, 0.08)),
)
DEFAULT_SBO_BENCHMARKS = tuple(b[0] for b in _SBO_BENCHMARKS)


def make_default_roster() -> list[WorkloadProfile]:
    """Seven benign programs and seven attack profiles (three Spectre-like with
    elevated miss ratios, four cache-channel attacks with elevated LLC misses)."""
    roster = [_profile(a, Label.BENIGN, *rest) for a, *rest in _BENIGN]
    roster += [_profile(a, Label.MALIGN, *rest) for a, *rest in _MALIGN]
    return roster


def make_sbo_benchmarks() -> dict[str, WorkloadProfile]:
    return {a: _profile(a, Label.BENIGN, bi, r, llc, l1d, jitter)
            for a, bi, r, llc, l1d, jitter in _SBO_BENCHMARKS}


def sub_seed(seed: int, key: str) -> int:
    """Stable per-run seed, independent of generation order."""
    digest = hashlib.sha256(f"{int(seed)}:{key}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _neg_binomial(rng, mean, dispersion):
    mean = np.asarray(mean, dtype=np.float64)
    if dispersion <= 0:
        return rng.poisson(mean)
    r = 1.0 / dispersion
    return rng.negative_binomial(r, r / (r + mean))


def _phase_sequence(rng, weights, n):
    weights = np.asarray(weights, dtype=np.float64)
    weights = weights / weights.sum()
    start = rng.choice(len(weights), p=weights)
    switch = rng.random(n) >= PHASE_PERSISTENCE
    fresh = rng.choice(len(weights), size=n, p=weights)
    switch[0] = True
    fresh[0] = start
    last = np.maximum.accumulate(np.where(switch, np.arange(n), 0))
    return fresh[last]


def generate_run(profile: WorkloadProfile, n_samples: int, seed: int, run_id: str,
                 injection: Optional[SboInjection] = None,
                 label: Optional[Label] = None) -> Run:
    """Generate one run. The host counts depend only on (seed, run_id), so the
    same run with and without ``injection`` differ exactly by the injected counts."""
    if n_samples < 1:
        raise InvariantViolation("n_samples must be >= 1")
    rng = np.random.default_rng(sub_seed(seed, run_id))
    jitter = np.array(profile.input_jitter)
    factor = np.exp(rng.normal(0.0, 1.0, N_EVENTS) * jitter - 0.5 * jitter ** 2)

    phases = profile.phase_mix
    seq = _phase_sequence(rng, [p.weight for p in phases], n_samples)
    counts = np.zeros((n_samples, N_EVENTS), dtype=np.int64)
    for ev in (BI, LLC, L1D):
        means = np.array([p.rates[ev].mean for p in phases])[seq] * factor[ev]
        disp = np.array([p.rates[ev].dispersion for p in phases])
        out = np.empty(n_samples, dtype=np.int64)
        for k in range(len(phases)):
            mask = seq == k
            if mask.any():
                out[mask] = _neg_binomial(rng, means[mask], disp[k])
        counts[:, ev] = out
    ratio = np.array([p.miss_ratio for p in phases])[seq] * factor[BM]
    counts[:, BM] = rng.binomial(counts[:, BI], np.clip(ratio, 0.0, 1.0))

    if injection is not None:
        irng = np.random.default_rng(sub_seed(seed, run_id + "#inject"))
        sig = np.array(injection.signature) * injection.stealth_epsilon
        extra = np.zeros_like(counts)
        extra[:, BI] = irng.poisson(sig[BI], n_samples)
        p_miss = injection.signature[BM] / injection.signature[BI] if sig[BI] > 0 else 0.0
        extra[:, BM] = irng.binomial(extra[:, BI], p_miss)
        extra[:, LLC] = irng.poisson(sig[LLC], n_samples)
        extra[:, L1D] = irng.poisson(sig[L1D], n_samples)
        counts += extra

    t = np.arange(1, n_samples + 1, dtype=np.float64)
    return Run(run_id, profile.app_id, label if label is not None else profile.label, t, counts)


def generate_traces(roster: Sequence[WorkloadProfile], samples_per_app: int,
                    seed: int) -> TraceSet:
    """One run of ``samples_per_app`` 1 ms samples per profile."""
    if samples_per_app < 1:
        raise InvariantViolation("samples_per_app must be >= 1")
    runs = tuple(generate_run(p, samples_per_app, seed, f"{p.app_id}/0") for p in roster)
    return TraceSet(runs, Source("synthetic", int(seed)))


def generate_sbo_corpus(benchmarks: Sequence[str], runs_train: int, runs_test: int,
                        inj: SboInjection, seed: int,
                        profiles: Optional[dict[str, WorkloadProfile]] = None,
                        run_length: tuple[int, int] = (20, 60)) -> tuple[TraceSet, TraceSet]:
    """Benign-only training runs and a half-attacked test set per benchmark.

    Each run's length is drawn uniformly from ``run_length`` (inclusive) and its
    rates are jittered per the profile's ``input_jitter``.
    """
    if runs_train < 2 or runs_test < 2:
        raise InvariantViolation("runs_train and runs_test must be >= 2")
    if not isinstance(inj, SboInjection):
        raise InvariantViolation("inj must be an SboInjection")
    profiles = profiles if profiles is not None else make_sbo_benchmarks()
    lo, hi = run_length
    if not 1 <= lo <= hi:
        raise InvariantViolation(f"bad run_length {run_length}")

    def length(run_id):
        return int(np.random.default_rng(sub_seed(seed, run_id + "#len")).integers(lo, hi + 1))

    train_runs, test_runs = [], []
    for name in benchmarks:
        prof = profiles[name]
        for i in range(runs_train):
            rid = f"{name}/train/{i:05d}"
            train_runs.append(generate_run(prof, length(rid), seed, rid, label=Label.BENIGN))
        order = np.random.default_rng(sub_seed(seed, f"{name}/attack-assignment")).permutation(runs_test)
        attacked = np.zeros(runs_test, dtype=bool)
        attacked[order[: runs_test // 2]] = True
        for i in range(runs_test):
            rid = f"{name}/test/{i:05d}"
            if attacked[i]:
                run = generate_run(prof, length(rid), seed, rid, injection=inj, label=Label.MALIGN)
            else:
                run = generate_run(prof, length(rid), seed, rid, label=Label.BENIGN)
            test_runs.append(run)
    src = Source("synthetic", int(seed))
    return TraceSet(tuple(train_runs), src), TraceSet(tuple(test_runs), src)


# -- JSON config ----------------------------------------------------------------

def profile_to_dict(p: WorkloadProfile) -> dict:
    return {
        "app_id": p.app_id,
        "label": p.label.value,
        "input_jitter": list(p.input_jitter),
        "phases": [{"weight": ph.weight,
                    "rates": [{"mean": r.mean, "dispersion": r.dispersion} for r in ph.rates]}
                   for ph in p.phase_mix],
    }


def profile_from_dict(d: dict) -> WorkloadProfile:
    phases = tuple(Phase(float(ph["weight"]),
                         tuple(EventRate(float(r["mean"]), float(r.get("dispersion", DEFAULT_DISPERSION)))
                               for r in ph["rates"]))
                   for ph in d["phases"])
    return WorkloadProfile(d["app_id"], Label.parse(d["label"]), phases,
                           tuple(d.get("input_jitter", (0.0,) * N_EVENTS)))


@dataclass
class SynthConfig:
    """Roster plus optional SBO benchmarks/injection, as stored in a JSON config."""

    roster: list[WorkloadProfile] = field(default_factory=make_default_roster)
    sbo_profiles: dict[str, WorkloadProfile] = field(default_factory=make_sbo_benchmarks)
    injection: SboInjection = field(default_factory=SboInjection)

    def to_json(self) -> str:
        return json.dumps({
            "roster": [profile_to_dict(p) for p in self.roster],
            "sbo_benchmarks": [profile_to_dict(p) for p in self.sbo_profiles.values()],
            "injection": {"stealth_epsilon": self.injection.stealth_epsilon,
                          "signature": list(self.injection.signature)},
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SynthConfig":
        d = json.loads(text)
        cfg = cls()
        if "roster" in d:
            cfg.roster = [profile_from_dict(p) for p in d["roster"]]
        if "sbo_benchmarks" in d:
            cfg.sbo_profiles = {p["app_id"]: profile_from_dict(p) for p in d["sbo_benchmarks"]}
        if "injection" in d:
            inj = d["injection"]
            cfg.injection = SboInjection(float(inj.get("stealth_epsilon", 0.01)),
                                         tuple(inj.get("signature", SboInjection().signature)))
        return cfg
