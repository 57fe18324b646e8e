import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermatch.core import (
    HyperEdge,
    Instance,
    InstanceFormatError,
    IntegralMatching,
    FractionalAllocation,
    ReductionMapping,
    VertexArrivalInstance,
    fill_levels,
    lift_edge_decisions,
    pad_to_uniform,
    parse_instance,
    parse_vertex_instance,
    reduce_vertex_to_edge_arrival,
    serialize_instance,
    serialize_vertex_instance,
    validate_instance,
)


def edge(eid, verts, w=1.0):
    return HyperEdge(eid, frozenset(verts), w)


class TestValidation:
    def test_clean_instance_has_no_violations(self):
        inst = Instance(3, 6, (edge(0, [0, 1, 2]), edge(1, [3, 4, 5])))
        assert validate_instance(inst) == []

    def test_empty_instance_is_valid(self):
        assert validate_instance(Instance(3, 0, ())) == []

    def test_rank_too_small(self):
        codes = [v.code for v in validate_instance(Instance(1, 2, ()))]
        assert "rank" in codes

    def test_out_of_range_vertex(self):
        inst = Instance(2, 2, (edge(0, [0, 5]),))
        bad = validate_instance(inst)
        assert any(v.code == "vertex-range" and v.resource == 5 for v in bad)

    def test_edge_id_must_match_position(self):
        inst = Instance(2, 4, (edge(1, [0, 1]),))
        assert any(v.code == "edge-id" for v in validate_instance(inst))

    def test_weight_in_unweighted_instance(self):
        inst = Instance(2, 4, (edge(0, [0, 1], 2.5),), weighted=False)
        assert any(v.code == "weight" for v in validate_instance(inst))

    def test_oversized_edge(self):
        inst = Instance(2, 4, (edge(0, [0, 1, 2]),))
        assert any(v.code == "rank" for v in validate_instance(inst))

    def test_empty_edge_rejected_at_construction(self):
        with pytest.raises(ValueError):
            HyperEdge(0, frozenset())

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            HyperEdge(0, frozenset({1}), -0.5)


class TestPadding:
    def test_identity_on_uniform(self):
        inst = Instance(2, 4, (edge(0, [0, 1]), edge(1, [2, 3])))
        assert pad_to_uniform(inst) is inst

    def test_dummies_are_fresh_and_sequential(self):
        inst = Instance(3, 4, (edge(0, [0]), edge(1, [1, 2])))
        padded = pad_to_uniform(inst)
        assert padded.arrivals[0].vertices == frozenset({0, 4, 5})
        assert padded.arrivals[1].vertices == frozenset({1, 2, 6})
        assert padded.num_resources == 7
        assert validate_instance(padded) == []

    def test_each_dummy_in_exactly_one_edge(self):
        inst = Instance(4, 3, (edge(0, [0]), edge(1, [0]), edge(2, [1, 2])))
        padded = pad_to_uniform(inst)
        seen = {}
        for e in padded.arrivals:
            for v in e.vertices:
                if v >= 3:
                    assert v not in seen
                    seen[v] = e.id

    def test_weight_preserved(self):
        inst = Instance(3, 2, (edge(0, [0, 1], 4.0),), weighted=True)
        assert pad_to_uniform(inst).arrivals[0].weight == 4.0


def test_fill_levels_sums_incident_fractions():
    inst = Instance(2, 3, (edge(0, [0, 1]), edge(1, [1, 2])))
    x = fill_levels(inst, FractionalAllocation({0: 0.25, 1: 0.5}))
    assert x == {0: 0.25, 1: 0.75, 2: 0.5}


def test_fill_levels_rejects_unknown_edge():
    inst = Instance(2, 2, (edge(0, [0, 1]),))
    with pytest.raises(KeyError):
        fill_levels(inst, FractionalAllocation({3: 0.1}))


class TestReduction:
    def vinst(self):
        groups = (
            (edge(0, [0, 1]), edge(1, [1, 2])),
            (edge(2, [3]),),
        )
        return VertexArrivalInstance(2, 4, groups)

    def test_rank_increases_by_one(self):
        inst, _ = reduce_vertex_to_edge_arrival(self.vinst())
        assert inst.rank_k == 3

    def test_group_edges_share_fresh_resource(self):
        inst, mapping = reduce_vertex_to_edge_arrival(self.vinst())
        s0 = mapping.group_resources[0]
        assert s0 >= 4
        assert s0 in inst.arrivals[0].vertices
        assert s0 in inst.arrivals[1].vertices
        assert s0 not in inst.arrivals[2].vertices

    def test_lift_recovers_group_choice(self):
        _, mapping = reduce_vertex_to_edge_arrival(self.vinst())
        choice = lift_edge_decisions(mapping, IntegralMatching(frozenset({1, 2})))
        assert choice == {0: 1, 1: 0}

    def test_lift_faults_on_two_edges_per_group(self):
        _, mapping = reduce_vertex_to_edge_arrival(self.vinst())
        with pytest.raises(ValueError):
            lift_edge_decisions(mapping, IntegralMatching(frozenset({0, 1})))

    def test_mapping_json_round_trip(self):
        _, mapping = reduce_vertex_to_edge_arrival(self.vinst())
        back = ReductionMapping.from_json(mapping.to_json())
        assert dict(back.edge_to_group) == dict(mapping.edge_to_group)
        assert dict(back.group_resources) == dict(mapping.group_resources)


class TestInstanceFormat:
    def test_round_trip(self):
        inst = Instance(3, 5, (edge(0, [0, 1, 2], 2.0), edge(1, [2, 3, 4], 0.5)), True)
        assert parse_instance(serialize_instance(inst)) == inst

    def test_unit_weight_omitted_in_serialization(self):
        inst = Instance(2, 2, (edge(0, [0, 1]),))
        assert "weight" not in json.loads(serialize_instance(inst))["arrivals"][0]

    def test_missing_field_reports_name(self):
        with pytest.raises(InstanceFormatError, match="'k'"):
            parse_instance('{"weighted": false, "num_resources": 1, "arrivals": []}')

    def test_bad_json_reports_line(self):
        with pytest.raises(InstanceFormatError, match="line"):
            parse_instance("{\n  oops\n}")

    def test_duplicate_vertex_reports_arrival_index(self):
        text = json.dumps(
            {"k": 2, "weighted": False, "num_resources": 3,
             "arrivals": [{"vertices": [0, 1]}, {"vertices": [2, 2]}]}
        )
        with pytest.raises(InstanceFormatError, match=r"arrivals\[1\]"):
            parse_instance(text)

    def test_out_of_range_vertex_rejected(self):
        text = json.dumps(
            {"k": 2, "weighted": False, "num_resources": 2,
             "arrivals": [{"vertices": [0, 7]}]}
        )
        with pytest.raises(InstanceFormatError):
            parse_instance(text)

    def test_vertex_file_round_trip(self):
        v = VertexArrivalInstance(2, 3, ((edge(0, [0, 1]), edge(1, [2], 1.0)),))
        assert parse_vertex_instance(serialize_vertex_instance(v)) == v

    def test_empty_groups_file(self):
        v = parse_vertex_instance('{"k": 2, "groups": []}')
        assert v.groups == ()

    def test_duplicate_edge_in_group_rejected(self):
        text = json.dumps({"k": 2, "groups": [[{"vertices": [0, 1]}, {"vertices": [1, 0]}]]})
        with pytest.raises(InstanceFormatError, match="duplicate"):
            parse_vertex_instance(text)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.lists(st.integers(min_value=0, max_value=9), min_size=1, max_size=3, unique=True),
        max_size=8,
    ),
    st.randoms(use_true_random=False),
)
def test_serialization_round_trip_property(vertex_lists, rnd):
    arrivals = tuple(
        HyperEdge(i, frozenset(vs), round(rnd.uniform(0.1, 10.0), 3))
        for i, vs in enumerate(vertex_lists)
    )
    inst = Instance(3, 10, arrivals, weighted=True)
    assert parse_instance(serialize_instance(inst)) == inst
