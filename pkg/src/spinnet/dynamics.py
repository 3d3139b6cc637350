"""Timed protocols: free evolution punctuated by instantaneous local phases.

A protocol is a time-ordered event list over one static network: exactly one
excitation injection at t = 0, then any number of phase injections, each an
ideal zero-width diagonal unitary. Between events the state evolves under
the network Hamiltonian through a single spectral decomposition. When an
event and a recording time coincide, the event is applied first, so states
engineered "at t" are what gets observed at t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, TextIO

import numpy as np

from .linalg import InvariantViolation, eigh, evolve, frozen_array
from .network import CouplingGraph

NORM_ATOL = 1e-10

INJECT = "inject"
PHASE = "phase"


@dataclass(frozen=True)
class PureState:
    """Complex amplitudes over the single-excitation basis, unit norm.

    Site labels are 1-based in every accessor; ``amplitudes[k]`` belongs to
    site k+1.
    """

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = frozen_array(np.asarray(self.amplitudes, dtype=complex))
        object.__setattr__(self, "amplitudes", amp)
        if amp.ndim != 1 or amp.size == 0:
            raise ValueError("amplitudes must be a non-empty vector")
        if not np.all(np.isfinite(amp.view(float))):
            raise ValueError("amplitudes must be finite")
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > NORM_ATOL:
            raise InvariantViolation(f"state norm {norm!r} deviates from 1 beyond {NORM_ATOL}")

    @classmethod
    def basis(cls, n_sites: int, site: int) -> "PureState":
        """The excitation localised at ``site`` (1-based)."""
        _check_site(site, n_sites)
        amp = np.zeros(n_sites, dtype=complex)
        amp[site - 1] = 1.0
        return cls(amp)

    @classmethod
    def from_terms(cls, n_sites: int, terms: dict[int, complex]) -> "PureState":
        """Build a state from {site: amplitude}; must already be normalised."""
        amp = np.zeros(n_sites, dtype=complex)
        for site, value in terms.items():
            _check_site(site, n_sites)
            amp[site - 1] = value
        return cls(amp)

    @property
    def n_sites(self) -> int:
        return int(self.amplitudes.shape[0])

    def amplitude(self, site: int) -> complex:
        _check_site(site, self.n_sites)
        return complex(self.amplitudes[site - 1])

    def population(self, site: int) -> float:
        return abs(self.amplitude(site)) ** 2

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other> (phase-sensitive)."""
        if other.n_sites != self.n_sites:
            raise ValueError("states live on different site counts")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _check_site(site: int, n_sites: int) -> None:
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} out of range 1..{n_sites}")


@dataclass(frozen=True)
class ScheduleEvent:
    """One timed action: inject the excitation, or kick a site's phase."""

    time: float
    action: str
    site: int
    angle: float = 0.0

    def __post_init__(self) -> None:
        if self.action not in (INJECT, PHASE):
            raise ValueError(f"unknown action {self.action!r}")
        if self.time < 0:
            raise ValueError("event times must be non-negative")
        if not math.isfinite(self.angle):
            raise ValueError("phase angle must be finite")


def inject(site: int, time: float = 0.0) -> ScheduleEvent:
    return ScheduleEvent(time, INJECT, site)


def phase_kick(site: int, angle: float, time: float) -> ScheduleEvent:
    return ScheduleEvent(time, PHASE, site, angle)


@dataclass(frozen=True)
class Protocol:
    """Time-ordered events plus the run duration and recording grid."""

    events: tuple[ScheduleEvent, ...]
    duration: float
    sample_times: tuple[float, ...] = ()

    def __init__(
        self,
        events: Iterable[ScheduleEvent],
        duration: float,
        sample_times: Iterable[float] = (),
    ):
        object.__setattr__(self, "events", tuple(events))
        object.__setattr__(self, "duration", float(duration))
        object.__setattr__(self, "sample_times", tuple(float(t) for t in sample_times))
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        times = [e.time for e in self.events]
        if any(t2 < t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("events must be sorted by time")
        if any(t > self.duration for t in times):
            raise ValueError("event times must not exceed the duration")
        if any(t < 0 or t > self.duration for t in self.sample_times):
            raise ValueError("sample times must lie within [0, duration]")

    def with_samples(self, sample_times: Iterable[float]) -> "Protocol":
        return Protocol(self.events, self.duration, sample_times)


def uniform_samples(duration: float, count: int = 400) -> tuple[float, ...]:
    """Uniform recording grid over [0, duration], endpoints included."""
    return tuple(np.linspace(0.0, duration, count))


def apply_phase(state: PureState, site: int, angle: float) -> PureState:
    """Multiply one site's amplitude by e^{i angle}; norm is untouched."""
    _check_site(site, state.n_sites)
    amp = np.array(state.amplitudes)
    amp[site - 1] *= complex(math.cos(angle), math.sin(angle))
    return PureState(amp)


@dataclass(frozen=True)
class Trajectory:
    """Recorded states at the protocol's sample times."""

    times: np.ndarray
    states: tuple[PureState, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", frozen_array(np.asarray(self.times, dtype=float)))
        if len(self.states) != self.times.shape[0]:
            raise ValueError("one recorded state per sample time")

    @property
    def n_sites(self) -> int:
        return self.states[0].n_sites if self.states else 0

    def populations(self) -> np.ndarray:
        """Per-site |amplitude|^2, one row per sample time."""
        return np.array([s.populations() for s in self.states])

    def state_at(self, t: float, atol: float = 1e-9) -> PureState:
        hits = np.nonzero(np.abs(self.times - t) <= atol)[0]
        if hits.size == 0:
            raise KeyError(f"no recorded state at t = {t}")
        return self.states[int(hits[0])]

    def write_csv(self, out: TextIO, amplitudes: bool = False) -> None:
        """Populations per site (`t,site_1,...,site_N`); with ``amplitudes``
        the real/imaginary parts are dumped instead (`t,re_1,im_1,...`)."""
        n = self.n_sites
        if amplitudes:
            header = ",".join(f"re_{i},im_{i}" for i in range(1, n + 1))
            out.write(f"t,{header}\n")
            for t, state in zip(self.times, self.states):
                row = ",".join(
                    f"{a.real:.12g},{a.imag:.12g}" for a in state.amplitudes
                )
                out.write(f"{t:.12g},{row}\n")
        else:
            header = ",".join(f"site_{i}" for i in range(1, n + 1))
            out.write(f"t,{header}\n")
            for t, pops in zip(self.times, self.populations()):
                row = ",".join(f"{p:.12g}" for p in pops)
                out.write(f"{t:.12g},{row}\n")


def run_schedule(graph: CouplingGraph, protocol: Protocol) -> Trajectory:
    """Execute a protocol on a network and record the sampled states.

    The graph is decomposed once; every evolution segment reuses the
    decomposition. Rejected protocols: no injection, injection after t = 0,
    more than one injection (the dynamics stay in the single-excitation
    sector), events out of order, or sites out of range.
    """
    injections = [e for e in protocol.events if e.action == INJECT]
    if len(injections) != 1:
        raise ValueError(f"exactly one injection required, got {len(injections)}")
    if injections[0].time != 0.0 or protocol.events[0].action != INJECT:
        raise ValueError("the injection must be the first event, at t = 0")
    for event in protocol.events:
        _check_site(event.site, graph.n_sites)

    decomp = eigh(graph.to_matrix())
    sample_order = np.argsort(protocol.sample_times, kind="stable")
    sorted_samples = [(protocol.sample_times[k], int(k)) for k in sample_order]

    recorded: list[PureState | None] = [None] * len(sorted_samples)
    amp = np.zeros(graph.n_sites, dtype=complex)
    amp[injections[0].site - 1] = 1.0

    t_now = 0.0
    next_event = 1  # injection handled above
    next_sample = 0
    while next_sample < len(sorted_samples) or next_event < len(protocol.events):
        t_event = protocol.events[next_event].time if next_event < len(protocol.events) else math.inf
        t_sample = sorted_samples[next_sample][0] if next_sample < len(sorted_samples) else math.inf
        t_stop = min(t_event, t_sample)
        if t_stop > t_now:
            amp = evolve(decomp, amp, t_stop - t_now)
            t_now = t_stop
        # events fire before anything is recorded at the same instant
        while next_event < len(protocol.events) and protocol.events[next_event].time == t_stop:
            event = protocol.events[next_event]
            amp = np.array(amp)
            amp[event.site - 1] *= complex(math.cos(event.angle), math.sin(event.angle))
            next_event += 1
        while next_sample < len(sorted_samples) and sorted_samples[next_sample][0] == t_stop:
            _, original_index = sorted_samples[next_sample]
            norm = float(np.linalg.norm(amp))
            if abs(norm - 1.0) > NORM_ATOL:
                raise InvariantViolation(
                    f"norm drifted to {norm!r} at t = {t_stop}"
                )
            recorded[original_index] = PureState(amp)
            next_sample += 1

    return Trajectory(np.asarray(protocol.sample_times, dtype=float), tuple(recorded))


def state_at(graph: CouplingGraph, protocol: Protocol, t: float) -> PureState:
    """The state at one instant, skipping any other recording."""
    run = run_schedule(graph, replace_samples(protocol, (t,)))
    return run.states[0]


def replace_samples(protocol: Protocol, sample_times: Sequence[float]) -> Protocol:
    duration = max(protocol.duration, max(sample_times, default=0.0))
    return Protocol(protocol.events, duration, sample_times)
