"""Flattening, routing removal and rate transition insertion."""

from fractions import Fraction

import pytest

from sdflow import DepthWarning, NormalizationError, load_model, normalize
from sdflow.model_ir import TriggerGroup, model_height, save_model
from sdflow.normalizer import flatten, insert_rate_transitions, remove_routing

F1 = {"dtype": "f64", "width": 1}
I1 = {"dtype": "i32", "width": 1}


def blk(bid, kind, params=None, st=None, ins=(), outs=(), **rest):
    b = {"id": bid, "kind": kind, "params": params or {},
         "ports": {"in": list(ins), "out": list(outs)}}
    if st is not None:
        b["sample_time"] = {"num": st, "den": 1}
    b.update(rest)
    return b


def conn(src, dst, spec=F1):
    return {"src": list(src), "dst": list(dst),
            "dtype": spec["dtype"], "width": spec["width"]}


def model(children, connections, stores=()):
    return load_model({"name": "m", "base_step": {"num": 1, "den": 1},
                       "data_stores": list(stores),
                       "root": {"id": "root", "kind": "Subsystem",
                                "params": {"mode": "normal"},
                                "ports": {"in": [], "out": []},
                                "children": children,
                                "connections": connections}})


def ids(m):
    return [c.id for c in m.root.children]


def wires(m):
    return {(c.src, c.dst) for c in m.root.connections}


# ---------------------------------------------------------------------------
# flatten


def test_flatten_qualifies_and_splices(climate):
    f = flatten(climate)
    assert ids(f) == ["setpoint", "sensor", "err", "thresh", "need_heat",
                      "heater/k_gain", "heater/smooth", "heater/lim",
                      "duty", "heat_on"]
    # boundary ports are gone, wires jump straight across them
    assert (("err", 0), ("heater/k_gain", 0)) in wires(f)
    assert (("heater/lim", 0), ("duty", 0)) in wires(f)


def test_flatten_records_trigger_group(climate):
    f = flatten(climate)
    assert f.triggers == [TriggerGroup(
        path="heater", mode="enabled", control=("need_heat", 0),
        members=("heater/k_gain", "heater/smooth", "heater/lim"))]


def test_flatten_depth_zero_keeps_subsystem(climate):
    f = flatten(climate, depth=0)
    assert "heater" in ids(f)
    assert f.triggers == []
    sub = next(c for c in f.root.children if c.id == "heater")
    assert [c.id for c in sub.children] == ["cmd", "k_gain", "smooth",
                                            "lim", "duty_out"]


def test_flatten_depth_above_height_warns_and_clamps(climate):
    assert model_height(climate) == 1
    with pytest.warns(DepthWarning):
        f = flatten(climate, depth=5)
    assert ids(f) == ids(flatten(climate))


def test_flatten_is_idempotent(climate):
    once = flatten(climate)
    twice = flatten(once)
    assert ids(twice) == ids(once)
    assert wires(twice) == wires(once)
    assert twice.triggers == once.triggers


def test_flatten_never_mutates_input(climate):
    before = save_model(climate)
    flatten(climate)
    assert save_model(climate) == before


def test_nested_paths_compose():
    inner = blk("in2", "Subsystem", {"mode": "normal"}, st=1,
                ins=[F1], outs=[F1],
                children=[blk("i", "Inport", {"index": 0}, st=1, outs=[F1]),
                          blk("g", "Gain", {"gain": 3.0}, st=1, ins=[F1], outs=[F1]),
                          blk("o", "Outport", {"index": 0}, st=1, ins=[F1])],
                connections=[conn(("i", 0), ("g", 0)), conn(("g", 0), ("o", 0))])
    outer = blk("in1", "Subsystem", {"mode": "normal"}, st=1,
                ins=[F1], outs=[F1],
                children=[blk("i", "Inport", {"index": 0}, st=1, outs=[F1]),
                          inner,
                          blk("o", "Outport", {"index": 0}, st=1, ins=[F1])],
                connections=[conn(("i", 0), ("in2", 0)), conn(("in2", 0), ("o", 0))])
    m = model([blk("c", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               outer,
               blk("y", "Outport", {"index": 0}, ins=[F1])],
              [conn(("c", 0), ("in1", 0)), conn(("in1", 0), ("y", 0))])
    f = flatten(m)
    assert ids(f) == ["c", "in1/in2/g", "y"]
    assert wires(f) == {(("c", 0), ("in1/in2/g", 0)),
                        (("in1/in2/g", 0), ("y", 0))}
    # partial depth dissolves only the outer shell
    p = flatten(m, depth=1)
    assert ids(p) == ["c", "in1/in2", "y"]


# ---------------------------------------------------------------------------
# remove_routing


def test_tag_pair_dissolves():
    m = model([blk("c", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("gt", "Goto", {"tag": "t"}, ins=[F1]),
               blk("f", "From", {"tag": "t"}, outs=[F1]),
               blk("y", "Outport", {"index": 0}, ins=[F1])],
              [conn(("c", 0), ("gt", 0)), conn(("f", 0), ("y", 0))])
    r = remove_routing(m)
    assert ids(r) == ["c", "y"]
    assert wires(r) == {(("c", 0), ("y", 0))}


def test_bus_pair_dissolves_per_element():
    m = model([blk("a", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("b", "Constant", {"value": 2}, st=1, outs=[I1]),
               blk("bc", "BusCreator", {}, ins=[F1, I1], outs=[F1]),
               blk("bs", "BusSelector", {"indices": [1, 0]},
                   ins=[F1], outs=[I1, F1]),
               blk("y1", "Outport", {"index": 0}, ins=[I1]),
               blk("y2", "Outport", {"index": 1}, ins=[F1])],
              [conn(("a", 0), ("bc", 0)), conn(("b", 0), ("bc", 1), I1),
               conn(("bc", 0), ("bs", 0)),
               conn(("bs", 0), ("y1", 0), I1), conn(("bs", 1), ("y2", 0))])
    r = remove_routing(m)
    assert ids(r) == ["a", "b", "y1", "y2"]
    assert wires(r) == {(("b", 0), ("y1", 0)), (("a", 0), ("y2", 0))}


def test_store_becomes_register():
    m = model([blk("c", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("mem", "DataStoreMemory", {"store": "s", "initial": 0}, st=1),
               blk("w", "DataStoreWrite", {"store": "s"}, ins=[F1]),
               blk("r", "DataStoreRead", {"store": "s"}, outs=[F1]),
               blk("y", "Outport", {"index": 0}, ins=[F1])],
              [conn(("c", 0), ("w", 0)), conn(("r", 0), ("y", 0))],
              stores=["s"])
    r = remove_routing(m)
    assert ids(r) == ["c", "mem", "y"]
    mem = next(c for c in r.root.children if c.id == "mem")
    assert len(mem.in_ports) == 1 and len(mem.out_ports) == 1
    assert mem.params["initial"] == 0.0   # canonicalized to the access spec
    assert wires(r) == {(("c", 0), ("mem", 0)), (("mem", 0), ("y", 0))}


def test_duplicate_goto_writers_rejected():
    m = model([blk("c", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("g1", "Goto", {"tag": "t"}, ins=[F1]),
               blk("g2", "Goto", {"tag": "t"}, ins=[F1]),
               blk("f", "From", {"tag": "t"}, outs=[F1]),
               blk("y", "Outport", {"index": 0}, ins=[F1])],
              [conn(("c", 0), ("g1", 0)), conn(("c", 0), ("g2", 0)),
               conn(("f", 0), ("y", 0))])
    with pytest.raises(NormalizationError, match="2 Goto writers"):
        remove_routing(m)


def test_selector_without_creator_rejected():
    m = model([blk("c", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("bs", "BusSelector", {"indices": [0]}, ins=[F1], outs=[F1]),
               blk("y", "Outport", {"index": 0}, ins=[F1])],
              [conn(("c", 0), ("bs", 0)), conn(("bs", 0), ("y", 0))])
    with pytest.raises(NormalizationError, match="not fed by a BusCreator"):
        remove_routing(m)


def test_trigger_members_shrink_with_routing():
    # a tag pair inside a conditional scope disappears from the member list
    sub = blk("sub", "Subsystem", {"mode": "enabled", "control_port": 0},
              st=1, ins=[F1, F1], outs=[F1],
              children=[blk("i", "Inport", {"index": 1}, st=1, outs=[F1]),
                        blk("gt", "Goto", {"tag": "t"}, st=1, ins=[F1]),
                        blk("f", "From", {"tag": "t"}, st=1, outs=[F1]),
                        blk("g", "Gain", {"gain": 2.0}, st=1, ins=[F1], outs=[F1]),
                        blk("o", "Outport", {"index": 0}, st=1, ins=[F1])],
              connections=[conn(("i", 0), ("gt", 0)), conn(("f", 0), ("g", 0)),
                           conn(("g", 0), ("o", 0))])
    m = model([blk("en", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("c", "Constant", {"value": 3.0}, st=1, outs=[F1]),
               sub,
               blk("y", "Outport", {"index": 0}, ins=[F1])],
              [conn(("en", 0), ("sub", 0)), conn(("c", 0), ("sub", 1)),
               conn(("sub", 0), ("y", 0))])
    f = flatten(m)
    assert f.triggers[0].members == ("sub/gt", "sub/f", "sub/g")
    r = remove_routing(f)
    assert r.triggers[0].members == ("sub/g",)
    assert (("c", 0), ("sub/g", 0)) in wires(r)


# ---------------------------------------------------------------------------
# insert_rate_transitions


def test_rate_transition_inserted_on_multirate(multirate):
    n = insert_rate_transitions(remove_routing(flatten(multirate)))
    rts = [c for c in n.root.children if c.kind == "RateTransition"]
    assert [r.id for r in rts] == ["rt_0"]
    rt = rts[0]
    assert rt.params == {"src_period": [2, 1], "dst_period": [4, 1]}
    assert rt.period == Fraction(4)
    assert (("Product", 0), ("rt_0", 0)) in wires(n)
    assert (("rt_0", 0), ("UnitDelay", 0)) in wires(n)
    assert (("Product", 0), ("UnitDelay", 0)) not in wires(n)


def test_explicit_rate_transition_respected(multirate_rt):
    before = flatten(multirate_rt)
    n = insert_rate_transitions(remove_routing(before))
    assert ids(n) == ids(before)   # nothing added


def test_rt_ids_avoid_collisions():
    m = model([blk("c", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("rt_0", "Gain", {"gain": 1.0}, st=2, ins=[F1], outs=[F1]),
               blk("y", "Outport", {"index": 0}, st=2, ins=[F1])],
              [conn(("c", 0), ("rt_0", 0)), conn(("rt_0", 0), ("y", 0))])
    n = insert_rate_transitions(m)
    added = [c.id for c in n.root.children if c.kind == "RateTransition"]
    assert added == ["rt_1"]


def test_fanout_branches_get_their_own_transitions():
    m = model([blk("c", "Constant", {"value": 1.0}, st=1, outs=[F1]),
               blk("g1", "Gain", {"gain": 1.0}, st=2, ins=[F1], outs=[F1]),
               blk("g2", "Gain", {"gain": 2.0}, st=4, ins=[F1], outs=[F1]),
               blk("y1", "Outport", {"index": 0}, st=2, ins=[F1]),
               blk("y2", "Outport", {"index": 1}, st=4, ins=[F1])],
              [conn(("c", 0), ("g1", 0)), conn(("c", 0), ("g2", 0)),
               conn(("g1", 0), ("y1", 0)), conn(("g2", 0), ("y2", 0))])
    n = insert_rate_transitions(m)
    rts = [c for c in n.root.children if c.kind == "RateTransition"]
    assert len(rts) == 2
    assert {tuple(r.params["src_period"]) for r in rts} == {(1, 1)}
    assert {tuple(r.params["dst_period"]) for r in rts} == {(2, 1), (4, 1)}


# ---------------------------------------------------------------------------
# the pipeline


def test_normalize_provenance(multirate):
    n = normalize(multirate)
    assert n.depth == 0
    assert n.provenance["Product"] == "Product"
    assert n.provenance["rt_0"] == "Product:0 -> UnitDelay:0"


def test_normalize_depth_recorded(climate):
    assert normalize(climate).depth == 1
    assert normalize(climate, depth=0).depth == 0


def test_normalized_flat_model_round_trips(multirate):
    n = normalize(multirate)
    doc = save_model(n.model)
    again = save_model(load_model(doc))
    assert doc == again


def test_normalize_is_idempotent(multirate):
    once = normalize(multirate).model
    twice = normalize(once).model
    assert ids(twice) == ids(once)
    assert wires(twice) == wires(once)
