"""Model assembly, validation rules, and the simplification pass."""
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmkit import (
    LEGAL_FLOW_PAIRS,
    TRANSPORT_KINDS,
    Action,
    Flow,
    ModelBuilder,
    ModelError,
    SimplifyError,
    StaticModel,
    Thimac,
    Trigger,
    simplify,
    structurally_equal,
    validate,
)

from generators import random_document, random_legal_model

seeds = st.integers(min_value=0, max_value=10_000)


def two_thimac_builder() -> ModelBuilder:
    builder = ModelBuilder("pair")
    builder.add_thimac("a", id="a")
    builder.add_thimac("b", id="b")
    return builder


# ---------------------------------------------------------------------------
# builder


def test_builder_autogenerates_distinct_ids():
    builder = ModelBuilder("m")
    t1 = builder.add_thimac("one")
    t2 = builder.add_thimac("two")
    assert t1 != t2
    a1 = builder.add_action("create", t1)
    a2 = builder.add_action("process", t1)
    f = builder.add_flow(a1, a2)
    model = builder.build()
    assert {a1, a2} <= set(model.actions_by_id)
    assert model.flows[0].id == f


def test_builder_rejects_duplicate_id():
    builder = ModelBuilder("m")
    builder.add_thimac("one", id="t")
    with pytest.raises(ModelError, match="duplicate id"):
        builder.add_thimac("two", id="t")


def test_builder_rejects_unknown_owner():
    builder = ModelBuilder("m")
    with pytest.raises(ModelError, match="unknown thimac"):
        builder.add_action("create", "ghost")


def test_builder_rejects_dangling_flow():
    builder = two_thimac_builder()
    src = builder.add_action("create", "a")
    with pytest.raises(ModelError, match="unknown node"):
        builder.add_flow(src, "nowhere")


def test_builder_rejects_self_loops():
    builder = two_thimac_builder()
    node = builder.add_action("process", "a")
    with pytest.raises(ModelError, match="loop"):
        builder.add_flow(node, node)
    with pytest.raises(ModelError, match="loop"):
        builder.add_trigger(node, node)


def test_unknown_action_kind_is_refused():
    with pytest.raises(ModelError, match="unknown action kind"):
        Action("a/x", "teleport", "a")


def test_node_kind_and_owner():
    builder = two_thimac_builder()
    act = builder.add_action("create", "a")
    store = builder.add_storage("b", "box")
    model = builder.build()
    assert model.node_kind(act) == "create"
    assert model.node_kind(store) == "storage"
    assert model.node_kind("missing") is None
    assert model.node_owner(act) == "a"
    assert model.node_owner(store) == "b"
    assert model.node_owner("missing") is None


def test_children_of_none_lists_roots():
    builder = ModelBuilder("m")
    builder.add_thimac("outer", id="outer")
    builder.add_thimac("inner", parent="outer", id="outer/inner")
    model = builder.build()
    assert [t.id for t in model.children_of(None)] == ["outer"]
    assert [t.id for t in model.children_of("outer")] == ["outer/inner"]


# ---------------------------------------------------------------------------
# validation


def kinds_of(diagnostics):
    return [(d.severity, d.rule) for d in diagnostics]


def test_empty_model_has_no_diagnostics():
    assert validate(StaticModel("empty")) == ()


def test_r1_process_to_process_inside_one_thimac():
    builder = two_thimac_builder()
    p1 = builder.add_action("process", "a")
    p2 = builder.add_action("process", "a")
    builder.add_flow(p1, p2)
    diagnostics = validate(builder.build())
    assert kinds_of(diagnostics).count(("error", "R1")) == 1


def test_r1_storage_flows_legal_both_directions():
    builder = two_thimac_builder()
    p = builder.add_action("process", "a")
    s = builder.add_storage("a", "box")
    builder.add_flow(p, s)
    builder.add_flow(s, p)
    assert [d for d in validate(builder.build()) if d.rule in ("R1", "R2")] == []


def test_r1_transfer_may_not_touch_storage():
    builder = two_thimac_builder()
    t = builder.add_action("transfer", "a")
    s = builder.add_storage("a", "box")
    builder.add_flow(t, s)
    diagnostics = validate(builder.build())
    assert ("error", "R1") in kinds_of(diagnostics)


def test_r2_cross_thimac_flow_must_be_transfer_to_transfer():
    builder = two_thimac_builder()
    p = builder.add_action("process", "a")
    q = builder.add_action("process", "b")
    builder.add_flow(p, q)
    diagnostics = validate(builder.build())
    assert kinds_of(diagnostics).count(("error", "R2")) == 1

    builder = two_thimac_builder()
    t1 = builder.add_action("transfer", "a")
    t2 = builder.add_action("transfer", "b")
    builder.add_flow(t1, t2)
    assert [d for d in validate(builder.build()) if d.rule == "R2"] == []


def test_r3_receive_without_transfer_input():
    builder = two_thimac_builder()
    builder.add_action("receive", "a", id="a/lonely")
    diagnostics = validate(builder.build())
    assert any(
        d.rule == "R3" and d.severity == "warning" and d.subject == "a/lonely"
        for d in diagnostics
    )


def test_r4_trigger_from_transfer_warns():
    builder = two_thimac_builder()
    t = builder.add_action("transfer", "a")
    p = builder.add_action("process", "a")
    builder.add_trigger(t, p)
    diagnostics = validate(builder.build())
    assert ("warning", "R4") in kinds_of(diagnostics)


def test_r5_containment_cycle():
    model = StaticModel(
        "cyclic",
        thimacs=(Thimac("x", "x", parent="y"), Thimac("y", "y", parent="x")),
    )
    diagnostics = validate(model)
    assert any(d.rule == "R5" and d.severity == "error" for d in diagnostics)


def test_r6_dangling_references():
    model = StaticModel(
        "broken",
        thimacs=(Thimac("t", "t"),),
        actions=(Action("t/a", "create", "t"), Action("t/b", "process", "ghost")),
        flows=(Flow("f1", "t/a", "gone"),),
    )
    diagnostics = validate(model)
    r6 = [d for d in diagnostics if d.rule == "R6"]
    assert {d.subject for d in r6} == {"t/b", "f1"}
    # the dangling flow is not also judged for legality
    assert not any(d.rule in ("R1", "R2") for d in diagnostics)


def test_r7_self_loop_in_directly_assembled_model():
    model = StaticModel(
        "loopy",
        thimacs=(Thimac("t", "t"),),
        actions=(Action("t/a", "process", "t"),),
        triggers=(Trigger("tr1", "t/a", "t/a"),),
    )
    diagnostics = validate(model)
    assert any(d.rule == "R7" and d.severity == "error" for d in diagnostics)


def test_r8_unreachable_action():
    builder = two_thimac_builder()
    builder.add_action("process", "a", id="a/orphan")
    diagnostics = validate(builder.build())
    assert any(d.rule == "R8" and d.subject == "a/orphan" for d in diagnostics)


def test_r8_create_is_reachable_by_itself():
    builder = two_thimac_builder()
    builder.add_action("create", "a")
    assert [d for d in validate(builder.build()) if d.rule == "R8"] == []


def test_r8_walks_through_storages_and_triggers():
    builder = two_thimac_builder()
    c = builder.add_action("create", "a")
    s = builder.add_storage("a", "box")
    p = builder.add_action("process", "a")
    p2 = builder.add_action("process", "a")
    builder.add_flow(c, s)
    builder.add_flow(s, p)
    builder.add_trigger(p, p2)
    assert [d for d in validate(builder.build()) if d.rule == "R8"] == []


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_validate_is_pure_and_subjects_exist(seed):
    model = random_document(Random(seed)).model
    first = validate(model)
    assert first == validate(model)
    known = (
        set(model.thimacs_by_id)
        | set(model.actions_by_id)
        | set(model.storages_by_id)
        | {f.id for f in model.flows}
        | {t.id for t in model.triggers}
    )
    assert all(d.subject in known for d in first)


# ---------------------------------------------------------------------------
# simplify


def chain_model() -> StaticModel:
    """create -> release -> transfer || transfer -> receive -> process."""
    builder = two_thimac_builder()
    builder.add_action("create", "a", id="a/c")
    builder.add_action("release", "a", id="a/rel")
    builder.add_action("transfer", "a", id="a/out")
    builder.add_action("transfer", "b", id="b/in")
    builder.add_action("receive", "b", id="b/rcv")
    builder.add_action("process", "b", id="b/p")
    builder.add_flow("a/c", "a/rel")
    builder.add_flow("a/rel", "a/out")
    builder.add_flow("a/out", "b/in")
    builder.add_flow("b/in", "b/rcv")
    builder.add_flow("b/rcv", "b/p")
    return builder.build()


def test_simplify_collapses_transport_chain():
    reduced = simplify(chain_model())
    assert [a.id for a in reduced.actions] == ["a/c", "b/p"]
    assert [(f.src, f.dst) for f in reduced.flows] == [("a/c", "b/p")]


def test_simplify_without_transports_is_identity():
    builder = two_thimac_builder()
    c = builder.add_action("create", "a")
    p = builder.add_action("process", "a")
    builder.add_flow(c, p)
    model = builder.build()
    assert simplify(model) is model


def test_simplify_rejects_error_models():
    builder = two_thimac_builder()
    p = builder.add_action("process", "a")
    q = builder.add_action("process", "b")
    builder.add_action("release", "a")  # give the pass something to remove
    builder.add_flow(p, q)  # R2
    model = builder.build()
    with pytest.raises(SimplifyError) as exc:
        simplify(model)
    assert any(d.rule == "R2" for d in exc.value.diagnostics)


def test_simplify_does_not_mutate_input():
    model = chain_model()
    before = (model.actions, model.flows, model.triggers)
    simplify(model)
    assert (model.actions, model.flows, model.triggers) == before


def test_simplify_reanchors_triggers_to_nearest_survivor():
    builder = two_thimac_builder()
    builder.add_action("process", "a", id="a/p")
    builder.add_action("release", "a", id="a/rel")
    builder.add_action("transfer", "a", id="a/out")
    builder.add_action("transfer", "b", id="b/in")
    builder.add_action("receive", "b", id="b/rcv")
    builder.add_action("process", "b", id="b/q")
    builder.add_flow("a/p", "a/rel")
    builder.add_flow("a/rel", "a/out")
    builder.add_flow("a/out", "b/in")
    builder.add_flow("b/in", "b/rcv")
    builder.add_flow("b/rcv", "b/q")
    builder.add_trigger("a/p", "a/rel", condition="go")
    reduced = simplify(builder.build())
    assert [(t.src, t.dst, t.condition) for t in reduced.triggers] == [
        ("a/p", "b/q", "go")
    ]


def test_simplify_drops_triggers_with_no_surviving_anchor():
    builder = two_thimac_builder()
    builder.add_action("create", "a", id="a/c")
    builder.add_action("release", "a", id="a/rel")
    builder.add_action("transfer", "a", id="a/out")
    builder.add_flow("a/c", "a/rel")
    builder.add_flow("a/rel", "a/out")
    builder.add_trigger("a/c", "a/out")  # chain dead-ends at the transfer
    reduced = simplify(builder.build())
    assert reduced.triggers == ()


def test_simplify_merges_parallel_synthesized_flows():
    # two transport paths between the same survivors yield one direct flow
    builder = two_thimac_builder()
    builder.add_action("process", "a", id="a/p")
    builder.add_action("process", "b", id="b/q")
    for branch in ("x", "y"):
        builder.add_action("release", "a", id=f"a/rel_{branch}")
        builder.add_action("transfer", "a", id=f"a/out_{branch}")
        builder.add_action("transfer", "b", id=f"b/in_{branch}")
        builder.add_action("receive", "b", id=f"b/rcv_{branch}")
        builder.add_flow("a/p", f"a/rel_{branch}")
        builder.add_flow(f"a/rel_{branch}", f"a/out_{branch}")
        builder.add_flow(f"a/out_{branch}", f"b/in_{branch}")
        builder.add_flow(f"b/in_{branch}", f"b/rcv_{branch}")
        builder.add_flow(f"b/rcv_{branch}", "b/q")
    reduced = simplify(builder.build())
    assert [(f.src, f.dst) for f in reduced.flows] == [("a/p", "b/q")]


def flow_reachable(model: StaticModel, start: str) -> set[str]:
    seen, stack = {start}, [start]
    while stack:
        node = stack.pop()
        for flow in model.flows_from.get(node, ()):
            if flow.dst not in seen:
                seen.add(flow.dst)
                stack.append(flow.dst)
    return seen


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_simplify_node_count_law_and_idempotence(seed):
    model = random_legal_model(Random(seed))
    reduced = simplify(model)
    transports = sum(1 for a in model.actions if a.kind in TRANSPORT_KINDS)
    assert len(reduced.actions) == len(model.actions) - transports
    assert not any(a.kind in TRANSPORT_KINDS for a in reduced.actions)
    assert structurally_equal(simplify(reduced), reduced)


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_simplify_preserves_reachability_between_survivors(seed):
    model = random_legal_model(Random(seed))
    reduced = simplify(model)
    survivors = [a.id for a in reduced.actions] + [s.id for s in reduced.storages]
    for a in survivors:
        before = flow_reachable(model, a)
        after = flow_reachable(reduced, a)
        for b in survivors:
            assert (b in before) == (b in after)


# ---------------------------------------------------------------------------
# structural equality


def test_structural_equality_ignores_edge_ids_and_order():
    builder = two_thimac_builder()
    c = builder.add_action("create", "a", id="a/c")
    p = builder.add_action("process", "a", id="a/p")
    builder.add_flow(c, p, id="first")
    one = builder.build()

    builder = two_thimac_builder()
    builder.add_action("process", "a", id="a/p")
    builder.add_action("create", "a", id="a/c")
    builder.add_flow("a/c", "a/p", id="second")
    two = builder.build()

    assert structurally_equal(one, two)


def test_structural_equality_sees_condition_changes():
    builder = two_thimac_builder()
    p = builder.add_action("process", "a", id="a/p")
    q = builder.add_action("process", "a", id="a/q")
    builder.add_trigger(p, q, condition="yes")
    one = builder.build()

    builder = two_thimac_builder()
    builder.add_action("process", "a", id="a/p")
    builder.add_action("process", "a", id="a/q")
    builder.add_trigger("a/p", "a/q", condition="no")
    two = builder.build()

    assert not structurally_equal(one, two)


def test_legality_table_is_the_single_authority():
    # every pair the table blesses validates; a pair it omits does not
    assert ("process", "release") in LEGAL_FLOW_PAIRS
    assert ("process", "process") not in LEGAL_FLOW_PAIRS
    assert ("transfer", "storage") not in LEGAL_FLOW_PAIRS
