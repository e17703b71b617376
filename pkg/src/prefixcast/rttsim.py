"""Transit RTT comparison and dynamic route-selection simulation.

A probe log holds RTT samples indexed by (probing round, prefix,
transit).  Per round, each transit's quality is the mean over probed
prefixes of its RTT divided by the best RTT any transit achieved for
that prefix in the same round -- 1.0 means best-everywhere.  On top of
the physical transits, a virtual "dynamic" transit is simulated: per
prefix it uses whichever transit had the smallest RTT in the previous
round, which quantifies the gain available to a route decision engine.

No live probing happens here; logs are ingested from CSV or generated
synthetically with a seeded model.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .trace import Prefix

__all__ = [
    "ProbeSample",
    "ProbeLog",
    "ProbeScheduleSpec",
    "RegimeSwitch",
    "RttModel",
    "NpSummary",
    "NpSeries",
    "DynamicRouteResult",
    "DYNAMIC_LABEL",
    "normalized_performance",
    "np_series",
    "pick_last_round_best",
    "simulate_dynamic_selection",
    "generate_probe_log",
    "np_summary",
    "rank_transits",
    "save_probe_log",
    "load_probe_log",
]

PROBE_CSV_HEADER = ("tick", "prefix", "transit", "rtt_ms")

# Label of the simulated last-round-best virtual transit in outputs.
DYNAMIC_LABEL = "dynamic"


@dataclass(frozen=True)
class ProbeSample:
    """One probe result; ``rtt`` is None when the probe got no answer."""

    tick: int
    prefix: Prefix
    transit: str
    rtt: float | None

    def __post_init__(self) -> None:
        if self.rtt is not None and not self.rtt > 0:
            raise ValueError(f"rtt must be > 0 ms, got {self.rtt}")


class ProbeLog:
    """Immutable RTT sample store indexed by (tick, prefix, transit).

    The probed prefix set, transit set, and round schedule are the unions
    seen across all samples, including lost ones.  At most one sample may
    exist per (tick, prefix, transit).
    """

    __slots__ = ("transits", "prefixes", "ticks", "tick_times", "_rtt", "_lost", "_tick_pos")

    def __init__(
        self,
        samples: Iterable[ProbeSample],
        tick_times: Sequence[float] | None = None,
    ):
        rtts: dict[tuple[int, Prefix, str], float] = {}
        lost: set[tuple[int, Prefix, str]] = set()
        transits: set[str] = set()
        prefixes: set[Prefix] = set()
        ticks: set[int] = set()
        for s in samples:
            key = (s.tick, s.prefix, s.transit)
            if key in rtts or key in lost:
                raise ValueError(f"duplicate sample for {key}")
            if s.rtt is None:
                lost.add(key)
            else:
                rtts[key] = float(s.rtt)
            transits.add(s.transit)
            prefixes.add(s.prefix)
            ticks.add(s.tick)
        if not ticks:
            raise ValueError("empty probe log")

        self.transits = tuple(sorted(transits))
        self.prefixes = tuple(sorted(prefixes, key=lambda p: p.text))
        self.ticks = tuple(sorted(ticks))
        if tick_times is not None and len(tick_times) != len(self.ticks):
            raise ValueError("tick_times length does not match tick count")
        self.tick_times = tuple(tick_times) if tick_times is not None else None
        self._rtt = rtts
        self._lost = frozenset(lost)
        self._tick_pos = {t: i for i, t in enumerate(self.ticks)}

    def rtt(self, tick: int, prefix: Prefix, transit: str) -> float | None:
        return self._rtt.get((tick, prefix, transit))

    def samples_at(self, tick: int, prefix: Prefix) -> dict[str, float]:
        """Present samples for one (tick, prefix), keyed by transit."""
        out = {}
        for transit in self.transits:
            value = self._rtt.get((tick, prefix, transit))
            if value is not None:
                out[transit] = value
        return out

    def previous_tick(self, tick: int) -> int | None:
        """The probing round before ``tick``, or None at the first round."""
        pos = self._tick_pos.get(tick)
        if pos is None:
            raise ValueError(f"tick {tick} not in log")
        return self.ticks[pos - 1] if pos > 0 else None

    def samples(self) -> Iterable[ProbeSample]:
        """All samples (including losses) in deterministic order."""
        for tick in self.ticks:
            for prefix in self.prefixes:
                for transit in self.transits:
                    key = (tick, prefix, transit)
                    if key in self._rtt:
                        yield ProbeSample(tick, prefix, transit, self._rtt[key])
                    elif key in self._lost:
                        yield ProbeSample(tick, prefix, transit, None)


def _np_at(log: ProbeLog, transit: str, tick: int) -> tuple[float | None, int]:
    total = 0.0
    included = 0
    for prefix in log.prefixes:
        own = log.rtt(tick, prefix, transit)
        if own is None:
            continue
        best = min(log.samples_at(tick, prefix).values())
        total += own / best
        included += 1
    if included == 0:
        return None, 0
    return total / included, included


def normalized_performance(log: ProbeLog, transit: str, tick: int) -> float | None:
    """Normalized RTT of one transit at one probing round.

    Mean over probed prefixes of the transit's RTT divided by the best
    RTT among all transits for the same prefix at the same round; >= 1,
    with 1 meaning the transit was best for every included prefix.
    Prefixes with no sample for this transit at this round are excluded.
    Returns None when no prefix could be included (a gap).
    """
    if transit not in log.transits:
        raise ValueError(f"unknown transit {transit!r}")
    value, _ = _np_at(log, transit, tick)
    return value


@dataclass(frozen=True)
class NpSeries:
    """Per-round normalized RTT of one transit; None entries are gaps."""

    transit: str
    ticks: tuple[int, ...]
    values: tuple[float | None, ...]
    included: tuple[int, ...]

    def clean(self) -> list[float]:
        return [v for v in self.values if v is not None]


def np_series(log: ProbeLog, transit: str) -> NpSeries:
    """Normalized RTT series of one transit over all probing rounds."""
    if transit not in log.transits:
        raise ValueError(f"unknown transit {transit!r}")
    values = []
    included = []
    for tick in log.ticks:
        value, count = _np_at(log, transit, tick)
        values.append(value)
        included.append(count)
    return NpSeries(
        transit=transit, ticks=log.ticks, values=tuple(values), included=tuple(included)
    )


def pick_last_round_best(
    log: ProbeLog, prefix: Prefix, tick: int, rng: np.random.Generator
) -> str:
    """Transit with the smallest RTT for ``prefix`` in the previous round.

    Ties break by transit label ascending.  When the previous round has
    no sample for the prefix (or ``tick`` is the first round), a
    uniformly random transit is drawn from ``rng``.
    """
    prev = log.previous_tick(tick)
    if prev is not None:
        last = log.samples_at(prev, prefix)
        if last:
            return min(last.items(), key=lambda kv: (kv[1], kv[0]))[0]
    return log.transits[int(rng.integers(len(log.transits)))]


@dataclass(frozen=True)
class DynamicRouteResult:
    """Normalized RTT series of the simulated last-round-best transit."""

    ticks: tuple[int, ...]
    values: tuple[float | None, ...]
    included: tuple[int, ...]
    excluded_missing: tuple[int, ...]  # chosen transit had no current sample
    seed: int

    def clean(self) -> list[float]:
        return [v for v in self.values if v is not None]


def simulate_dynamic_selection(log: ProbeLog, seed: int = 0) -> DynamicRouteResult:
    """Simulate a per-prefix dynamic route selection over the log.

    At every round after the first, each prefix is routed via the transit
    that measured the smallest RTT in the previous round (random when no
    previous data exists).  The virtual transit's RTT for the prefix is
    the chosen transit's actual sample at the current round; its
    normalized RTT is computed against the physical transits' per-prefix
    best, so physical values are unchanged by the simulation.  Prefixes
    whose chosen transit has no current sample are excluded and counted.
    """
    if len(log.ticks) < 2:
        raise ValueError("dynamic selection needs at least 2 probing rounds")
    rng = np.random.default_rng(seed)
    ticks = []
    values: list[float | None] = []
    included_counts = []
    missing_counts = []
    for tick in log.ticks[1:]:
        total = 0.0
        included = 0
        missing = 0
        for prefix in log.prefixes:
            choice = pick_last_round_best(log, prefix, tick, rng)
            own = log.rtt(tick, prefix, choice)
            if own is None:
                missing += 1
                continue
            best = min(log.samples_at(tick, prefix).values())
            total += own / best
            included += 1
        ticks.append(tick)
        values.append(total / included if included else None)
        included_counts.append(included)
        missing_counts.append(missing)
    return DynamicRouteResult(
        ticks=tuple(ticks),
        values=tuple(values),
        included=tuple(included_counts),
        excluded_missing=tuple(missing_counts),
        seed=seed,
    )


@dataclass(frozen=True)
class ProbeScheduleSpec:
    """Probing round schedule: mean interval with uniform jitter.

    Rounds start at time 0 and stop before ``duration`` seconds; with
    jitter j each inter-round gap is uniform on
    ``[mean*(1-j), mean*(1+j)]``.
    """

    mean_interval: float = 240.0
    jitter: float = 0.30
    duration: float = 86400.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mean_interval <= 0:
            raise ValueError("mean_interval must be > 0")
        if not 0 <= self.jitter < 1:
            raise ValueError("jitter must be in [0, 1)")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")


@dataclass(frozen=True)
class RegimeSwitch:
    """RTT degradation episode: multiply one transit's RTT on rounds
    ``start_tick <= t < end_tick`` (optionally only for some prefixes)."""

    transit: str
    start_tick: int
    end_tick: int
    multiplier: float
    prefixes: tuple[Prefix, ...] | None = None

    def __post_init__(self) -> None:
        if self.multiplier <= 0:
            raise ValueError("multiplier must be > 0")
        if self.end_tick <= self.start_tick:
            raise ValueError("end_tick must be > start_tick")

    def applies(self, tick: int, prefix: Prefix, transit: str) -> bool:
        if transit != self.transit or not self.start_tick <= tick < self.end_tick:
            return False
        return self.prefixes is None or prefix in self.prefixes


@dataclass(frozen=True)
class RttModel:
    """Synthetic RTT model per (prefix, transit) pair.

    ``base_rtt`` maps every probed (prefix, transit) pair to its baseline
    RTT in ms.  Gaussian noise (std ``noise_std``) is added per probe and
    the result clamped at ``min_rtt``.  ``loss_prob`` is either a global
    float or a per-pair mapping; lost probes appear in the log without an
    RTT value.
    """

    base_rtt: Mapping[tuple[Prefix, str], float]
    noise_std: float = 0.0
    loss_prob: float | Mapping[tuple[Prefix, str], float] = 0.0
    regime_switches: tuple[RegimeSwitch, ...] = ()
    min_rtt: float = 0.1

    def __post_init__(self) -> None:
        if not self.base_rtt:
            raise ValueError("base_rtt must not be empty")
        for pair, value in self.base_rtt.items():
            if value <= 0:
                raise ValueError(f"base RTT for {pair} must be > 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.min_rtt <= 0:
            raise ValueError("min_rtt must be > 0")

    def loss_for(self, pair: tuple[Prefix, str]) -> float:
        if isinstance(self.loss_prob, (int, float)):
            p = float(self.loss_prob)
        else:
            p = float(self.loss_prob.get(pair, 0.0))
        if not 0 <= p <= 1:
            raise ValueError(f"loss probability {p} outside [0, 1]")
        return p


def generate_probe_log(schedule: ProbeScheduleSpec, model: RttModel) -> ProbeLog:
    """Generate a seed-deterministic synthetic probe log.

    The schedule fixes the probing rounds; every known (prefix, transit)
    pair is probed each round, subject to the model's loss probability.
    """
    rng = np.random.default_rng(schedule.seed)
    lo = schedule.mean_interval * (1.0 - schedule.jitter)
    hi = schedule.mean_interval * (1.0 + schedule.jitter)

    times = [0.0]
    while True:
        gap = rng.uniform(lo, hi) if schedule.jitter > 0 else schedule.mean_interval
        nxt = times[-1] + gap
        if nxt >= schedule.duration:
            break
        times.append(nxt)

    pairs = sorted(model.base_rtt, key=lambda pt: (pt[0].text, pt[1]))
    samples = []
    for tick in range(len(times)):
        for prefix, transit in pairs:
            if model.loss_for((prefix, transit)) > rng.uniform():
                samples.append(ProbeSample(tick, prefix, transit, None))
                continue
            value = model.base_rtt[(prefix, transit)]
            for switch in model.regime_switches:
                if switch.applies(tick, prefix, transit):
                    value *= switch.multiplier
            if model.noise_std > 0:
                value += rng.normal(0.0, model.noise_std)
            samples.append(ProbeSample(tick, prefix, transit, max(value, model.min_rtt)))
    return ProbeLog(samples, tick_times=times)


@dataclass(frozen=True)
class NpSummary:
    """Boxplot summary with 5th/95th percentile whiskers and mean marker."""

    minimum: float
    p5: float
    p25: float
    median: float
    mean: float
    p75: float
    p95: float
    maximum: float

    def as_dict(self) -> dict:
        return {
            "min": self.minimum,
            "p5": self.p5,
            "p25": self.p25,
            "median": self.median,
            "mean": self.mean,
            "p75": self.p75,
            "p95": self.p95,
            "max": self.maximum,
        }


def np_summary(values: Sequence[float]) -> NpSummary:
    """Summarize a normalized-RTT series (gaps must be filtered out)."""
    arr = np.asarray([v for v in values], dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty series")
    return NpSummary(
        minimum=float(arr.min()),
        p5=float(np.percentile(arr, 5)),
        p25=float(np.percentile(arr, 25)),
        median=float(np.median(arr)),
        mean=float(arr.mean()),
        p75=float(np.percentile(arr, 75)),
        p95=float(np.percentile(arr, 95)),
        maximum=float(arr.max()),
    )


def rank_transits(
    log: ProbeLog, include_dynamic: bool = True, seed: int = 0
) -> list[tuple[str, NpSummary]]:
    """Summaries per transit, ordered by mean normalized RTT ascending.

    With ``include_dynamic`` the simulated last-round-best transit is
    ranked alongside the physical ones under the ``dynamic`` label.
    """
    entries = []
    for transit in log.transits:
        series = np_series(log, transit).clean()
        if series:
            entries.append((transit, np_summary(series)))
    if include_dynamic and len(log.ticks) >= 2:
        series = simulate_dynamic_selection(log, seed=seed).clean()
        if series:
            entries.append((DYNAMIC_LABEL, np_summary(series)))
    entries.sort(key=lambda item: (item[1].mean, item[0]))
    return entries


def save_probe_log(log: ProbeLog, path: str | Path) -> None:
    """Write a probe log as `tick,prefix,transit,rtt_ms` CSV (empty = loss)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROBE_CSV_HEADER)
        for s in log.samples():
            writer.writerow(
                [s.tick, s.prefix.text, s.transit, "" if s.rtt is None else repr(s.rtt)]
            )


def load_probe_log(path: str | Path) -> ProbeLog:
    """Read a probe log written by ``save_probe_log`` (or any external
    prober emitting the same format)."""
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(c.strip().lower() for c in header) != PROBE_CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(PROBE_CSV_HEADER)!r}, got {header!r}"
            )
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}: bad probe row {row!r}")
            rtt = None if row[3].strip() == "" else float(row[3])
            samples.append(
                ProbeSample(int(row[0]), Prefix.parse(row[1]), row[2].strip(), rtt)
            )
    return ProbeLog(samples)
