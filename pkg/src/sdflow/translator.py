"""Mapping a flat block model onto a synchronous dataflow graph.

Every leaf block becomes one actor with the same id, kind, params and
period.  Every connection becomes one channel; fanout is handled by
replicating the producing out-port so each channel owns a unique pair
of port slots (replicated slots share an `origin` and receive identical
tokens per firing).  Port rates are 1 except at RateTransition actors,
where the period ratio of the neighbouring blocks appears as a token
rate; the fast-to-slow direction additionally preloads its input channel
with ratio-1 zero tokens so the first slow firing does not have to wait
a full slow period.

Conditional subsystems dissolved during flattening come back as one
EnableSource actor each: it taps the original control signal and
broadcasts its truth value over a boolean rate-1 channel to every member
actor, which gains one extra event in-port per enclosing subsystem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import kinds
from .errors import NonHarmonicError, NormalizationError
from .normalizer import NormalizedModel
from .sdf_core import Actor, Channel, Port, Sdfg


@dataclass
class TranslationReport:
    """Counts and per-channel facts about one translation run."""

    actors: int = 0
    channels: int = 0
    event_channels: int = 0    # EnableSource -> member taps
    control_channels: int = 0  # control signal -> EnableSource
    replicated_ports: int = 0  # extra slots added beyond one per consumer
    dropped_ports: int = 0     # out-ports nobody consumes
    rate_transitions: list[dict] = field(default_factory=list)
    channel_rates: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "actors": self.actors,
            "channels": self.channels,
            "event_channels": self.event_channels,
            "control_channels": self.control_channels,
            "replicated_ports": self.replicated_ports,
            "dropped_ports": self.dropped_ports,
            "rate_transitions": list(self.rate_transitions),
            "channel_rates": list(self.channel_rates),
        }

    def summary(self) -> str:
        lines = [f"actors: {self.actors}",
                 f"channels: {self.channels} "
                 f"({self.event_channels} event, {self.control_channels} control)",
                 f"replicated ports: {self.replicated_ports}, "
                 f"dropped ports: {self.dropped_ports}"]
        for rt in self.rate_transitions:
            lines.append(f"rate transition {rt['id']}: {rt['direction']}, "
                         f"ratio {rt['ratio']}, delay {rt['delay']}")
        return "\n".join(lines)


def rate_transition_rates(src_period: Fraction, dst_period: Fraction):
    """(rate_in, rate_out, delay) for a RateTransition between the given
    neighbour periods.  Slow-to-fast duplicates the token, fast-to-slow
    consumes a block of tokens and preloads the difference."""
    if src_period == dst_period:
        return 1, 1, 0
    ratio = dst_period / src_period if dst_period > src_period else src_period / dst_period
    if ratio.denominator != 1:
        raise NonHarmonicError(
            f"periods {src_period} and {dst_period} do not divide one another")
    r = int(ratio)
    if dst_period > src_period:
        return r, 1, r - 1
    return 1, r, 0


def translate(n: NormalizedModel) -> tuple[Sdfg, TranslationReport]:
    m = n.model
    leaves = list(m.root.children)
    by_id = {b.id: b for b in leaves}
    conns = list(m.root.connections)

    groups = []
    for t in m.triggers:
        members = [mid for mid in t.members if mid in by_id]
        if members:
            groups.append((t, members))

    # Consumer entries per producing (block id, out port): data connections
    # in wiring order, then one control tap per conditional subsystem.
    consumers: dict[tuple[str, int], list] = {}
    for i, c in enumerate(conns):
        consumers.setdefault(c.src, []).append(("conn", i))
    for gi, (t, _) in enumerate(groups):
        if t.control[0] not in by_id:
            raise NormalizationError(
                f"{t.path}: control signal source {t.control[0]!r} is not a leaf block")
        consumers.setdefault(t.control, []).append(("event", gi))

    report = TranslationReport()
    g = Sdfg(m.name)
    slot_for: dict[tuple, int] = {}
    for b in leaves:
        in_ports = [Port(s.dtype, s.width, origin=i) for i, s in enumerate(b.in_ports)]
        out_ports: list[Port] = []
        for o, s in enumerate(b.out_ports):
            taps = consumers.get((b.id, o), [])
            if not taps:
                report.dropped_ports += 1
                continue
            report.replicated_ports += len(taps) - 1
            for entry in taps:
                slot_for[entry] = len(out_ports)
                out_ports.append(Port(s.dtype, s.width, origin=o))
        g.actors.append(Actor(b.id, b.kind, dict(b.params), b.period,
                              in_ports, out_ports,
                              impl=b if b.is_subsystem() else None))

    # Token rates at RateTransition actors, from the neighbouring periods.
    in_rate: dict[str, int] = {}
    out_rate: dict[str, int] = {}
    preload: dict[str, int] = {}
    driver_of = {c.dst: c for c in conns}
    for b in leaves:
        if b.kind != "RateTransition":
            continue
        drv = driver_of.get((b.id, 0))
        p_src = by_id[drv.src[0]].period if drv else b.period
        tap = next((e for e in consumers.get((b.id, 0), []) if e[0] == "conn"), None)
        p_dst = by_id[conns[tap[1]].dst[0]].period if tap else p_src
        ri, ro, d = rate_transition_rates(p_src, p_dst)
        if ri > 1:
            in_rate[b.id] = ri
            preload[b.id] = d
        if ro > 1:
            out_rate[b.id] = ro
        report.rate_transitions.append({
            "id": b.id,
            "direction": ("fast_to_slow" if ri > 1 else
                          "slow_to_fast" if ro > 1 else "unit"),
            "ratio": max(ri, ro),
            "delay": d,
        })

    for i, c in enumerate(conns):
        d = preload.get(c.dst[0], 0) if c.dst[1] == 0 else 0
        vals = [kinds.zero_token(c.spec.dtype, c.spec.width) for _ in range(d)]
        g.channels.append(Channel(
            f"ch_{i}", (c.src[0], slot_for[("conn", i)]), (c.dst[0], c.dst[1]),
            rate_src=out_rate.get(c.src[0], 1),
            rate_dst=in_rate.get(c.dst[0], 1) if c.dst[1] == 0 else 1,
            delay=d, initial_values=vals,
            dtype=c.spec.dtype, width=c.spec.width))

    ci = len(conns)
    for gi, (t, members) in enumerate(groups):
        ctrl = by_id[t.control[0]]
        spec = ctrl.out_ports[t.control[1]]
        if spec.width != 1:
            raise NormalizationError(f"{t.path}: control signal must be scalar")
        es = Actor(f"{t.path}/enable", "EnableSource", {"mode": t.mode},
                   by_id[members[0]].period,
                   in_ports=[Port(spec.dtype, spec.width)], out_ports=[])
        g.actors.append(es)
        g.channels.append(Channel(f"ch_{ci}", (ctrl.id, slot_for[("event", gi)]),
                                  (es.id, 0), 1, 1, 0, [], spec.dtype, spec.width))
        report.control_channels += 1
        ci += 1
        for k, mid in enumerate(members):
            ma = g.actor(mid)
            slot = len(ma.in_ports)
            ma.in_ports.append(Port("bool", 1, origin=slot, event=True))
            es.out_ports.append(Port("bool", 1))
            g.channels.append(Channel(f"ch_{ci}", (es.id, k), (mid, slot),
                                      1, 1, 0, [], "bool", 1))
            report.event_channels += 1
            ci += 1

    report.actors = len(g.actors)
    report.channels = len(g.channels)
    report.channel_rates = [{"id": c.id, "src": list(c.src), "dst": list(c.dst),
                             "rate_src": c.rate_src, "rate_dst": c.rate_dst,
                             "delay": c.delay} for c in g.channels]
    g.check_wellformed()
    return g, report
