"""Canned network protocols with their analytic target states.

Each constructor returns the network, the timed schedule, the exact state
the clean dynamics must reach (global phase included), and the figure of
merit used when the protocol runs under disorder.

Mirror-phase bookkeeping: a PST chain of length n maps site i to site
n+1-i at its mirror time while multiplying the state by (-i)^(n-1).
Walking a protocol through the fused network amounts to applying the block
unitary, mirroring the uncoupled chains, and applying it back; all expected
states below come from that algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .disorder import DisorderSpec, SeededRng, sample_disorder
from .dynamics import PureState, Protocol, inject, phase_kick
from .linalg import eigh, evolve
from .network import ChainSpec, CouplingGraph, NetworkSpec, network_graph, retune_jmax

SQRT2 = math.sqrt(2.0)

# phase flip angle and the three-way-split angle arccos(-1/3)
FLIP = math.pi
W_STATE_ANGLE = math.acos(-1.0 / 3.0)

MIRROR_TIME_RTOL = 1e-9


def phase_power(k: int) -> complex:
    """(-i)**k, exact."""
    return (1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j)[k % 4]


def phi_factor(n: int) -> complex:
    """Phase of the half-way junction superposition on an even 2-chain network."""
    return phase_power(n // 2 - 1)


def gamma_factor(n: int) -> complex:
    """Phase of the routed end state after a flip at the junction."""
    return phase_power(n - 2)


def delta_factor(n: int) -> complex:
    """Phase of the end-to-end superposition from the quarter-turn protocol."""
    return phase_power(2 * (n // 2 - 1))


def alpha_factor(n_chain: int) -> complex:
    """Single-chain mirror phase (-i)^(n-1)."""
    return phase_power(n_chain - 1)


@dataclass(frozen=True)
class FigureOfMerit:
    """What to measure, and when, for a protocol run."""

    kind: str  # "fidelity" | "eof"
    time: float
    target: PureState | None = None
    pair: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.kind == "fidelity" and self.target is None:
            raise ValueError("fidelity merit needs a target state")
        if self.kind == "eof" and self.pair is None:
            raise ValueError("eof merit needs a site pair")
        if self.kind not in ("fidelity", "eof"):
            raise ValueError(f"unknown merit kind {self.kind!r}")


@dataclass(frozen=True)
class ProtocolResult:
    """A ready-to-run protocol: network, schedule, expectations, merit."""

    name: str
    network: NetworkSpec
    protocol: Protocol
    checkpoints: tuple[tuple[float, PureState], ...]
    merit: FigureOfMerit

    def graph(self) -> CouplingGraph:
        return network_graph(self.network)

    @property
    def expected_time(self) -> float:
        return self.checkpoints[-1][0]

    @property
    def expected_state(self) -> PureState:
        return self.checkpoints[-1][1]


def _two_chain_spec(n_total: int) -> NetworkSpec:
    if n_total % 2 != 0 or n_total < 4:
        raise ValueError(f"need an even total of at least 4 sites, got {n_total}")
    half = ChainSpec(n_total // 2)
    return NetworkSpec([half, half])


def two_chain_phase_protocol(n_total: int, angle: float) -> tuple[NetworkSpec, Protocol]:
    """Inject at site 1, kick site N/2+1 by ``angle`` at the mirror time."""
    spec = _two_chain_spec(n_total)
    t_m = spec.chains[0].mirror_time
    events = [inject(1)]
    if angle != 0.0:
        events.append(phase_kick(n_total // 2 + 1, angle, t_m))
    return spec, Protocol(events, 2 * t_m)


def mirror_superposition_state(n_total: int) -> PureState:
    """The junction superposition reached at t_m from site 1 (no kick)."""
    phase = phi_factor(n_total)
    return PureState.from_terms(
        n_total,
        {n_total // 2: phase / SQRT2, n_total // 2 + 1: phase / SQRT2},
    )


def router_two_chain(n_total: int) -> ProtocolResult:
    """Send the excitation from site 1 to site N on two fused equal chains."""
    spec, protocol = two_chain_phase_protocol(n_total, FLIP)
    expected = PureState.from_terms(n_total, {n_total: gamma_factor(n_total)})
    t_end = protocol.duration
    return ProtocolResult(
        name="router",
        network=spec,
        protocol=protocol,
        checkpoints=((t_end, expected),),
        merit=FigureOfMerit("fidelity", t_end, target=expected),
    )


def entangle_phase_two_chain(n_total: int) -> ProtocolResult:
    """Split the excitation between the two ends with a quarter-turn kick."""
    spec, protocol = two_chain_phase_protocol(n_total, math.pi / 2.0)
    d = delta_factor(n_total)
    expected = PureState.from_terms(
        n_total,
        {1: d * (1.0 + 1.0j) / 2.0, n_total: d * (1.0 - 1.0j) / 2.0},
    )
    t_end = protocol.duration
    return ProtocolResult(
        name="ent-phase",
        network=spec,
        protocol=protocol,
        checkpoints=((t_end, expected),),
        merit=FigureOfMerit("eof", t_end, pair=(1, n_total)),
    )


def entangle_center_two_chain(n_total: int) -> ProtocolResult:
    """End-to-end entanglement from a central injection, no kick at all."""
    spec = _two_chain_spec(n_total)
    t_m = spec.chains[0].mirror_time
    protocol = Protocol([inject(n_total // 2)], 2 * t_m)
    phase = phi_factor(n_total)
    entangled = PureState.from_terms(
        n_total, {1: phase / SQRT2, n_total: phase / SQRT2}
    )
    revived = PureState.from_terms(n_total, {n_total // 2: delta_factor(n_total)})
    return ProtocolResult(
        name="ent-center",
        network=spec,
        protocol=protocol,
        checkpoints=((t_m, entangled), (2 * t_m, revived)),
        merit=FigureOfMerit("eof", t_m, pair=(1, n_total)),
    )


def unequal_router(n_a: int, n_b: int) -> ProtocolResult:
    """Route across two chains of different lengths; no retuning needed."""
    spec = NetworkSpec([ChainSpec(n_a), ChainSpec(n_b)])
    t_a, t_b = spec.mirror_times
    n_total = n_a + n_b
    protocol = Protocol(
        [inject(1), phase_kick(n_a + 1, FLIP, t_a)],
        t_a + t_b,
    )
    expected = PureState.from_terms(n_total, {n_total: gamma_factor(n_total)})
    t_end = protocol.duration
    return ProtocolResult(
        name="unequal-router",
        network=spec,
        protocol=protocol,
        checkpoints=((t_end, expected),),
        merit=FigureOfMerit("fidelity", t_end, target=expected),
    )


def unequal_entangle(n_a: int, n_b: int, network: NetworkSpec | None = None) -> ProtocolResult:
    """End-to-end entanglement on unequal chains from a central injection.

    The chains must share one mirror time, which is arranged by slowing the
    shorter chain down (its peak coupling shrinks; growing the longer
    chain's coupling may not be physical). A custom ``network`` is accepted
    but rejected unless its mirror times already agree.
    """
    if network is None:
        spec = NetworkSpec([ChainSpec(n_a), ChainSpec(n_b)])
        target, reference = (1, 2) if n_a <= n_b else (2, 1)
        spec = retune_jmax(spec, target, reference)
    else:
        spec = network
        if tuple(c.length for c in spec.chains) != (n_a, n_b):
            raise ValueError(f"network chain lengths {spec.chains} do not match ({n_a}, {n_b})")
    t_a, t_b = spec.mirror_times
    if abs(t_a - t_b) > MIRROR_TIME_RTOL * max(t_a, t_b):
        raise ValueError(
            "chain mirror times differ "
            f"({t_a!r} vs {t_b!r}); retune one chain's j_max so they match"
        )
    n_total = n_a + n_b
    protocol = Protocol([inject(n_a)], t_a)
    expected = PureState.from_terms(
        n_total,
        {1: alpha_factor(n_a) / SQRT2, n_total: alpha_factor(n_b) / SQRT2},
    )
    return ProtocolResult(
        name="unequal-ent",
        network=spec,
        protocol=protocol,
        checkpoints=((t_a, expected),),
        merit=FigureOfMerit("eof", t_a, pair=(1, n_total)),
    )


def _equal_chain_network(n_chains: int, chain_len: int) -> NetworkSpec:
    return NetworkSpec([ChainSpec(chain_len)] * n_chains)


def w_state(chain_len: int) -> ProtocolResult:
    """Share the excitation equally over three sites on a 3-chain network.

    Kicking the lower junction site by arccos(-1/3) at t_m splits the
    population 1/3 : 1/3 : 1/3 between site 1 and the two sites of the far
    junction at 2 t_m.
    """
    if chain_len not in (3, 4):
        raise ValueError(f"supported chain lengths are 3 and 4, got {chain_len}")
    spec = _equal_chain_network(3, chain_len)
    t_m = spec.chains[0].mirror_time
    kick_site = chain_len + 1
    far_a, far_b = 2 * chain_len, 2 * chain_len + 1
    protocol = Protocol(
        [inject(1), phase_kick(kick_site, W_STATE_ANGLE, t_m)],
        2 * t_m,
    )
    sign = phase_power(2 * (chain_len - 1))  # +1 for odd chains, -1 for even
    z = complex(math.cos(W_STATE_ANGLE), math.sin(W_STATE_ANGLE))
    expected = PureState.from_terms(
        spec.n_sites,
        {
            1: sign * (1.0 + z) / 2.0,
            far_a: sign * (1.0 - z) / (2.0 * SQRT2),
            far_b: sign * (1.0 - z) / (2.0 * SQRT2),
        },
    )
    t_end = protocol.duration
    return ProtocolResult(
        name="w-state",
        network=spec,
        protocol=protocol,
        checkpoints=((t_end, expected),),
        merit=FigureOfMerit("fidelity", t_end, target=expected),
    )


def mws_9(with_flips: bool = False) -> ProtocolResult:
    """Four-site equal-share entanglement on three 3-site chains.

    Injecting at the central site 5 spreads the excitation over sites
    3, 4, 6, 7 after half a mirror time. Optionally, simultaneous flips at
    sites 4 and 7 then steer it into an end-to-end pair state at 3 t_m / 2.
    """
    spec = _equal_chain_network(3, 3)
    t_m = spec.chains[0].mirror_time
    n = spec.n_sites
    mws = PureState.from_terms(
        n, {3: -0.5j, 4: 0.5j, 6: -0.5j, 7: -0.5j}
    )
    if not with_flips:
        protocol = Protocol([inject(5)], t_m)
        revived = PureState.from_terms(n, {5: -1.0})
        return ProtocolResult(
            name="mws",
            network=spec,
            protocol=protocol,
            checkpoints=((t_m / 2.0, mws), (t_m, revived)),
            merit=FigureOfMerit("fidelity", t_m / 2.0, target=mws),
        )
    protocol = Protocol(
        [
            inject(5),
            phase_kick(4, FLIP, t_m / 2.0),
            phase_kick(7, FLIP, t_m / 2.0),
        ],
        1.5 * t_m,
    )
    paired = PureState.from_terms(n, {1: 1.0j / SQRT2, 9: 1.0j / SQRT2})
    return ProtocolResult(
        name="mws",
        network=spec,
        protocol=protocol,
        checkpoints=((1.5 * t_m, paired),),
        merit=FigureOfMerit("eof", 1.5 * t_m, pair=(1, 9)),
    )


def _retuned_three_by_four(j_max_b: float) -> tuple[NetworkSpec, float]:
    spec = NetworkSpec([ChainSpec(4), ChainSpec(4, j_max_b), ChainSpec(4)])
    t_a = spec.chains[0].mirror_time
    t_b = spec.chains[1].mirror_time
    if abs(t_b - 2.0 * t_a) > MIRROR_TIME_RTOL * t_b:
        raise ValueError(
            "the middle chain must run at half speed (t_m,B = 2 t_m,A); "
            f"got t_m,B = {t_b!r} with t_m,A = {t_a!r} - set j_max_b = 1/2"
        )
    return spec, t_a


def mws_12(j_max_b: float = 0.5) -> ProtocolResult:
    """Four-site equal-share entanglement on three 4-site chains.

    No site couples directly to both junctions here, so the trick is to run
    the middle chain at half speed: the two halves of the injected amplitude
    then meet the far junction in step, and the state cycles through two
    equal-share patterns, a one-site revival at 4 t_m,A, and back at
    8 t_m,A.
    """
    spec, t_a = _retuned_three_by_four(j_max_b)
    n = spec.n_sites
    protocol = Protocol([inject(5)], 8.0 * t_a)
    mws_plus = PureState.from_terms(
        n, {4: -0.5, 5: -0.5, 8: -0.5j, 9: -0.5j}
    )
    mws_minus = PureState.from_terms(
        n, {4: -0.5, 5: -0.5, 8: 0.5j, 9: 0.5j}
    )
    return ProtocolResult(
        name="mws",
        network=spec,
        protocol=protocol,
        checkpoints=(
            (2.0 * t_a, mws_plus),
            (4.0 * t_a, PureState.basis(n, 4)),
            (6.0 * t_a, mws_minus),
            (8.0 * t_a, PureState.basis(n, 5)),
        ),
        merit=FigureOfMerit("fidelity", 2.0 * t_a, target=mws_plus),
    )


def max_entangle_12(j_max_b: float = 0.5) -> ProtocolResult:
    """End-to-end pair state on the half-speed-middle 12-site network."""
    spec, t_a = _retuned_three_by_four(j_max_b)
    n = spec.n_sites
    protocol = Protocol(
        [inject(5), phase_kick(9, FLIP, 2.0 * t_a)],
        3.0 * t_a,
    )
    expected = PureState.from_terms(n, {1: -1.0j / SQRT2, 12: 1.0 / SQRT2})
    return ProtocolResult(
        name="max-ent",
        network=spec,
        protocol=protocol,
        checkpoints=((3.0 * t_a, expected),),
        merit=FigureOfMerit("eof", 3.0 * t_a, pair=(1, 12)),
    )


def m_chain_router(n_chains: int) -> ProtocolResult:
    """Route hop by hop across M fused 3-site chains.

    One flip per junction, applied each time the excitation reaches it,
    keeps the excitation moving forward; it arrives at the far end after M
    mirror times.
    """
    if n_chains < 2:
        raise ValueError(f"need at least two chains, got {n_chains}")
    spec = _equal_chain_network(n_chains, 3)
    t_m = spec.chains[0].mirror_time
    events = [inject(1)]
    for k in range(1, n_chains):
        events.append(phase_kick(3 * k + 1, FLIP, k * t_m))
    protocol = Protocol(events, n_chains * t_m)
    sign = 1.0 if n_chains % 2 == 0 else -1.0
    expected = PureState.from_terms(spec.n_sites, {spec.n_sites: sign})
    t_end = protocol.duration
    return ProtocolResult(
        name="router",
        network=spec,
        protocol=protocol,
        checkpoints=((t_end, expected),),
        merit=FigureOfMerit("fidelity", t_end, target=expected),
    )


def mws_transfer_15() -> ProtocolResult:
    """Relocate the four-site equal-share state across a 5-chain network.

    Inject at site 8, wait half a mirror time (the share spreads over sites
    6, 7, 9, 10), flip sites 7 and 10 together, and one mirror time later
    the share sits on sites 3, 4, 12, 13.
    """
    spec = _equal_chain_network(5, 3)
    t_m = spec.chains[0].mirror_time
    n = spec.n_sites
    protocol = Protocol(
        [
            inject(8),
            phase_kick(7, FLIP, t_m / 2.0),
            phase_kick(10, FLIP, t_m / 2.0),
        ],
        1.5 * t_m,
    )
    expected = PureState.from_terms(
        n, {3: 0.5j, 4: -0.5j, 12: 0.5j, 13: 0.5j}
    )
    return ProtocolResult(
        name="mws-transfer",
        network=spec,
        protocol=protocol,
        checkpoints=((1.5 * t_m, expected),),
        merit=FigureOfMerit("fidelity", 1.5 * t_m, target=expected),
    )


# --- phase sensing -------------------------------------------------------

def phase_probe_estimates(
    graph: CouplingGraph, n_total: int, thetas_deg: list[float] | tuple[float, ...]
) -> list[float]:
    """Estimate each unknown kick angle, decomposing the device once.

    Per angle, run A reads P1 = (1 + cos theta)/2 at 2 t_m; run B adds a
    known quarter turn to the unknown phase and reads P1' = (1 - sin
    theta)/2. atan2(1 - 2 P1', 2 P1 - 1) then recovers the full circle; on
    a clean network the estimate is exact.
    """
    t_m = ChainSpec(n_total // 2).mirror_time
    kick_index = n_total // 2  # 0-based index of site N/2 + 1
    decomp = eigh(graph.to_matrix())
    start = PureState.basis(graph.n_sites, 1).amplitudes
    halfway = evolve(decomp, start, t_m)

    def probe(angle: float) -> float:
        kicked = halfway.copy()
        kicked[kick_index] *= complex(math.cos(angle), math.sin(angle))
        return float(abs(evolve(decomp, kicked, t_m)[0]) ** 2)

    estimates = []
    for theta_deg in thetas_deg:
        theta = math.radians(theta_deg)
        p_direct = probe(theta)
        p_quadrature = probe(theta + math.pi / 2.0)
        est = math.degrees(math.atan2(1.0 - 2.0 * p_quadrature, 2.0 * p_direct - 1.0))
        estimates.append(est % 360.0)
    return estimates


def phase_sense_realization(graph: CouplingGraph, n_total: int, theta_deg: float) -> float:
    """Two-probe phase retrieval on one device; angle in [0, 360) degrees."""
    return phase_probe_estimates(graph, n_total, [theta_deg])[0]


def phase_sense_estimate(n_total: int, theta_deg: float) -> float:
    """Clean-network phase retrieval; returns the angle in [0, 360) degrees."""
    spec = _two_chain_spec(n_total)
    return phase_sense_realization(network_graph(spec), n_total, theta_deg)


def unwrap_to_branch(estimate_deg: float, reference_deg: float) -> float:
    """Move an angle onto the branch within 180 degrees of the reference."""
    return reference_deg + ((estimate_deg - reference_deg + 180.0) % 360.0 - 180.0)


def phase_scan_setting(
    n_total: int,
    thetas_deg: tuple[float, ...],
    disorder_spec: DisorderSpec,
    realizations: int,
    master_seed: int,
    stream_base: int = 0,
) -> list[tuple[float, float, float]]:
    """(mean, std, std of mean) of the estimate per scanned angle.

    One disorder realization is one device: it is decomposed once and
    probed at every angle. Estimates are unwrapped onto the branch around
    the true angle before averaging, so means near 0/360 do not smear
    across the seam.
    """
    from .observables import ensemble_average

    graph = network_graph(_two_chain_spec(n_total))
    per_angle: list[list[float]] = [[] for _ in thetas_deg]
    for k in range(realizations):
        g = sample_disorder(graph, disorder_spec, SeededRng(master_seed, stream_base + k))
        estimates = phase_probe_estimates(g, n_total, thetas_deg)
        for slot, (theta, est) in zip(per_angle, zip(thetas_deg, estimates)):
            slot.append(unwrap_to_branch(est, theta))
        if disorder_spec.kind == "none" or disorder_spec.strength == 0.0:
            for slot in per_angle:  # every clean realization is identical
                slot.extend(slot * (realizations - 1))
            break
    stats = []
    for values in per_angle:
        mean, std, sem = ensemble_average(values)
        stats.append((mean % 360.0, std, sem))
    return stats


# --- name-based dispatch (CLI surface) ------------------------------------

def build_protocol(name: str, params: dict) -> ProtocolResult:
    """Build a protocol from its CLI name and validated parameters."""
    p = dict(params)
    try:
        if name == "router":
            if "m" in p:
                return m_chain_router(p.pop("m"))
            return router_two_chain(p.pop("n"))
        if name == "ent-phase":
            return entangle_phase_two_chain(p.pop("n"))
        if name == "ent-center":
            return entangle_center_two_chain(p.pop("n"))
        if name == "unequal-router":
            return unequal_router(p.pop("n_a"), p.pop("n_b"))
        if name == "unequal-ent":
            return unequal_entangle(p.pop("n_a"), p.pop("n_b"))
        if name == "w-state":
            return w_state(p.pop("chain_length"))
        if name == "mws":
            chain_length = p.pop("chain_length", 3)
            if chain_length == 3:
                return mws_9(with_flips=p.pop("with_flips", False))
            if chain_length == 4:
                return mws_12(j_max_b=p.pop("j_max_b", 0.5))
            raise ValueError(f"mws supports chain lengths 3 and 4, got {chain_length}")
        if name == "max-ent":
            return max_entangle_12(j_max_b=p.pop("j_max_b", 0.5))
        if name == "mws-transfer":
            return mws_transfer_15()
    except KeyError as exc:
        raise ValueError(f"protocol {name!r} is missing parameter {exc.args[0]!r}")
    raise ValueError(f"unknown protocol {name!r}")
