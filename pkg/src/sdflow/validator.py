"""Translatability checks.

check_requirements(m, depth) reports, never raises: each finding is a
Violation carrying a rule tag, a location path and a human-readable
message.  The rule tags are a fixed vocabulary:

  FixedStep             a period is not an integer multiple of base_step
  HarmonicRates         connected periods do not divide one another, a
                        surviving subsystem is internally multirate, or a
                        conditional subsystem mixes member rates
  E1_Hierarchy          a subsystem that stays atomic at this depth
                        contains a tag/store block whose peer is outside
  E2_VariableSize       a control block does not pin its output size
                        (Switch width mismatch, non-scalar control port)
  E3_1_DanglingRouting  unmatched Goto/From or data-store accessors
  E3_2_BusPairing       BusCreator/BusSelector not directly paired
  E3_2_BusOutput        a BusSelector output consumed as a bus
  UnsupportedBlock      kind outside the closed vocabulary

Several rules are judged on the model as it will look after flattening
to the requested depth, since splicing boundary ports is what creates
the adjacent block pairs that translation sees.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import kinds
from .errors import NormalizationError
from .model_ir import Block, BlockModel, iter_blocks, model_height
from .normalizer import flatten

RULES = ("FixedStep", "HarmonicRates", "E1_Hierarchy", "E2_VariableSize",
         "E3_1_DanglingRouting", "E3_2_BusPairing", "E3_2_BusOutput",
         "UnsupportedBlock")


@dataclass(frozen=True)
class Violation:
    rule: str
    location: str
    message: str

    def to_json(self) -> dict:
        return {"rule": self.rule, "location": self.location, "message": self.message}

    def __str__(self) -> str:
        return f"{self.rule} at {self.location}: {self.message}"


def _divides(a: Fraction, b: Fraction) -> bool:
    r = b / a if b >= a else a / b
    return r.denominator == 1


def check_requirements(m: BlockModel, depth: int | None = None) -> list[Violation]:
    depth = model_height(m) if depth is None else min(depth, model_height(m))
    out: list[Violation] = []

    _check_vocabulary(m, out)
    _check_fixed_step(m, out)
    _check_dangling_routing(m, out)
    _check_control_blocks(m, out)

    try:
        flat = flatten(m, depth)
    except NormalizationError as e:
        out.append(Violation("E3_1_DanglingRouting", m.root.id,
                             f"wiring could not be resolved: {e}"))
        flat = None

    if flat is not None:
        _check_harmonic_flat(flat, out)
        _check_bus_scope(flat, "", out)
        _check_triggers(flat, out)
        for leaf in flat.root.children:
            if leaf.is_subsystem():
                _check_atomic(leaf, m, out)

    uniq = sorted(set(out), key=lambda v: (v.location, v.rule, v.message))
    return uniq


# ---------------------------------------------------------------------------


def _check_vocabulary(m: BlockModel, out: list[Violation]):
    for path, b, _ in iter_blocks(m.root):
        if b.kind not in kinds.VOCABULARY:
            out.append(Violation("UnsupportedBlock", path,
                                 f"kind {b.kind!r} is outside the supported vocabulary"))


def _check_fixed_step(m: BlockModel, out: list[Violation]):
    for path, b, _ in iter_blocks(m.root):
        if (b.period / m.base_step).denominator != 1:
            out.append(Violation("FixedStep", path,
                                 f"period {b.period} is not an integer multiple of the "
                                 f"base step {m.base_step}"))


def _check_dangling_routing(m: BlockModel, out: list[Violation]):
    gotos: dict[str, list[str]] = {}
    froms: dict[str, list[str]] = {}
    writes: dict[str, list[str]] = {}
    reads: dict[str, list[str]] = {}
    mems: dict[str, list[str]] = {}
    for path, b, _ in iter_blocks(m.root):
        if b.kind == "Goto":
            gotos.setdefault(b.params["tag"], []).append(path)
        elif b.kind == "From":
            froms.setdefault(b.params["tag"], []).append(path)
        elif b.kind == "DataStoreWrite":
            writes.setdefault(b.params["store"], []).append(path)
        elif b.kind == "DataStoreRead":
            reads.setdefault(b.params["store"], []).append(path)
        elif b.kind == "DataStoreMemory":
            mems.setdefault(b.params["store"], []).append(path)

    for tag, where in gotos.items():
        if len(where) > 1:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"tag {tag!r} has {len(where)} Goto writers"))
        if tag not in froms:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"Goto tag {tag!r} has no From reader"))
    for tag, where in froms.items():
        if tag not in gotos:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"From tag {tag!r} has no Goto writer"))

    for store, where in writes.items():
        if store not in mems:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"DataStoreWrite {store!r} has no DataStoreMemory"))
        if store not in reads:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"DataStoreWrite {store!r} has no DataStoreRead"))
        if len(where) > 1:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"store {store!r} has {len(where)} writers"))
    for store, where in reads.items():
        if store not in mems:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"DataStoreRead {store!r} has no DataStoreMemory"))
    for store, where in mems.items():
        if len(where) > 1:
            for p in where:
                out.append(Violation("E3_1_DanglingRouting", p,
                                     f"store {store!r} has {len(where)} memories"))


def _check_control_blocks(m: BlockModel, out: list[Violation]):
    for path, b, _ in iter_blocks(m.root):
        if b.kind == "Switch":
            if not (b.in_ports[0] == b.in_ports[2] == b.out_ports[0]):
                out.append(Violation("E2_VariableSize", path,
                                     "Switch data inputs and output must share one spec "
                                     f"(got {b.in_ports[0]}, {b.in_ports[2]} -> {b.out_ports[0]})"))
            if b.in_ports[1].width != 1:
                out.append(Violation("E2_VariableSize", path,
                                     "Switch control input must be scalar"))
        elif b.is_subsystem() and b.mode() != "normal":
            cp = b.params["control_port"]
            if b.in_ports[cp].width != 1:
                out.append(Violation("E2_VariableSize", path,
                                     f"{b.mode()} subsystem control port must be scalar"))


def _check_harmonic_flat(flat: BlockModel, out: list[Violation]):
    by_id = {c.id: c for c in flat.root.children}
    for conn in flat.root.connections:
        src, dst = by_id[conn.src[0]], by_id[conn.dst[0]]
        if not _divides(src.period, dst.period):
            out.append(Violation("HarmonicRates", f"{conn.src[0]} -> {conn.dst[0]}",
                                 f"periods {src.period} and {dst.period} do not divide "
                                 "one another"))


def _check_triggers(flat: BlockModel, out: list[Violation]):
    by_id = {c.id: c for c in flat.root.children}
    for t in flat.triggers:
        periods = {by_id[mid].period for mid in t.members if mid in by_id}
        if len(periods) > 1:
            out.append(Violation("HarmonicRates", t.path,
                                 f"{t.mode} subsystem members span several periods "
                                 f"({', '.join(str(p) for p in sorted(periods))})"))
            continue
        if t.control[0] in by_id and periods:
            cper = by_id[t.control[0]].period
            if cper != next(iter(periods)):
                out.append(Violation("HarmonicRates", t.path,
                                     f"control signal period {cper} differs from the "
                                     f"member period {next(iter(periods))}"))


def _check_bus_scope(flat: BlockModel, where: str, out: list[Violation]):
    """Pairing rules on a flat scope: creators feed selectors directly."""
    by_id = {c.id: c for c in flat.root.children}
    for conn in flat.root.connections:
        src, dst = by_id[conn.src[0]], by_id[conn.dst[0]]
        loc = f"{where}{conn.src[0]} -> {where}{conn.dst[0]}"
        if src.kind == "BusSelector" and dst.kind == "BusSelector":
            out.append(Violation("E3_2_BusOutput", loc,
                                 "BusSelector output consumed as a bus"))
            continue
        if src.kind == "BusCreator" and dst.kind != "BusSelector":
            out.append(Violation("E3_2_BusPairing", loc,
                                 f"BusCreator must feed a BusSelector, found {dst.kind}"))
        if dst.kind == "BusSelector" and conn.dst[1] == 0 and src.kind != "BusCreator":
            out.append(Violation("E3_2_BusPairing", loc,
                                 f"BusSelector must be fed by a BusCreator, found {src.kind}"))
        if src.kind == "BusCreator" and dst.kind == "BusSelector":
            sel = dst
            indices = sel.params.get("indices", list(range(len(sel.out_ports))))
            for j, e in enumerate(indices):
                if e >= len(src.in_ports):
                    out.append(Violation("E3_2_BusPairing", loc,
                                         f"selector output {j} asks for bus element {e}, "
                                         f"bus has {len(src.in_ports)}"))
                elif src.in_ports[e] != sel.out_ports[j]:
                    out.append(Violation("E3_2_BusPairing", loc,
                                         f"bus element {e} is {src.in_ports[e]} but selector "
                                         f"output {j} is {sel.out_ports[j]}"))


def _check_atomic(leaf: Block, m: BlockModel, out: list[Violation]):
    """Checks on a subsystem that survives flattening as an opaque leaf."""
    path = leaf.id  # flat ids are the original qualified paths

    for ipath, b, _ in iter_blocks(leaf, prefix=f"{path}/"):
        if b.period != leaf.period:
            out.append(Violation("HarmonicRates", ipath,
                                 f"block inside the opaque subsystem {path!r} runs at "
                                 f"{b.period}, the subsystem at {leaf.period}"))

    inner_tags = {"Goto": set(), "From": set()}
    inner_stores: dict[str, set[str]] = {}
    for _, b, _ in iter_blocks(leaf):
        if b.kind in ("Goto", "From"):
            inner_tags[b.kind].add(b.params["tag"])
        elif b.kind in ("DataStoreWrite", "DataStoreRead", "DataStoreMemory"):
            inner_stores.setdefault(b.params["store"], set()).add(b.kind)

    outer_tags = {"Goto": set(), "From": set()}
    outer_stores: dict[str, set[str]] = {}
    for opath, b, _ in iter_blocks(m.root):
        if opath == path or opath.startswith(f"{path}/"):
            continue
        if b.kind in ("Goto", "From"):
            outer_tags[b.kind].add(b.params["tag"])
        elif b.kind in ("DataStoreWrite", "DataStoreRead", "DataStoreMemory"):
            outer_stores.setdefault(b.params["store"], set()).add(b.kind)

    for tag in inner_tags["Goto"] & outer_tags["From"]:
        out.append(Violation("E1_Hierarchy", path,
                             f"tag {tag!r} is written inside this opaque subsystem and "
                             "read outside it"))
    for tag in inner_tags["From"] & outer_tags["Goto"]:
        out.append(Violation("E1_Hierarchy", path,
                             f"tag {tag!r} is read inside this opaque subsystem and "
                             "written outside it"))
    for store in inner_stores:
        if store in outer_stores:
            out.append(Violation("E1_Hierarchy", path,
                                 f"store {store!r} is accessed both inside and outside "
                                 "this opaque subsystem"))

    # Bus pairs inside the opaque subsystem, judged on its own flat view.
    try:
        inner_root = Block(leaf.id, "Subsystem", {"mode": "normal"}, leaf.sample_time,
                           [], [], leaf.children, leaf.connections)
        inner_flat = flatten(BlockModel(m.name, m.base_step, m.data_stores, inner_root))
    except NormalizationError as e:
        out.append(Violation("E3_1_DanglingRouting", path,
                             f"wiring could not be resolved: {e}"))
        return
    _check_bus_scope(inner_flat, f"{path}/", out)
