import pytest

from pcp_bnp.graph import build_conflict_graph, color_selection
from pcp_bnp.instance import instance_from_starts


def tiny_graph():
    # vehicle 0: [0, 3), [6, 9); vehicle 1: [1, 4), [10, 13); vehicle 2: [20, 23)
    inst = instance_from_starts([[0, 6], [1, 10], [20]], piles=1)
    return inst, build_conflict_graph(inst)


def test_conflict_graph_edges():
    _, graph = tiny_graph()

    assert graph.edges() == [(0, 1), (0, 2), (2, 3)]
    assert graph.partitions() == {0: [0, 1], 1: [2, 3], 2: [4]}
    assert graph.completion(3) == 13
    assert graph.num_edges == 3


def test_is_independent():
    _, graph = tiny_graph()

    assert graph.is_independent([0, 3, 4])
    assert not graph.is_independent([0, 2])
    assert not graph.is_independent([0, 0])


def test_remove_vertex():
    _, graph = tiny_graph()
    graph.remove_vertex(1)

    assert not graph.alive(1)
    assert graph.alive_vertices() == [0, 2, 3, 4]
    assert not graph.is_independent([1])


def test_add_edge():
    _, graph = tiny_graph()
    graph.add_edge(1, 4)
    assert graph.has_edge(4, 1)

    with pytest.raises(ValueError):
        graph.add_edge(4, 4)

    graph.remove_vertex(3)
    with pytest.raises(ValueError):
        graph.add_edge(3, 4)


def test_copy_is_independent_of_original():
    _, graph = tiny_graph()
    other = graph.copy()
    other.remove_vertex(0)
    other.add_edge(1, 4)

    assert graph.alive(0)
    assert not graph.has_edge(1, 4)


def test_contract():
    _, graph = tiny_graph()
    graph.remove_vertex(0)
    graph.remove_vertex(2)

    z = graph.contract(1, 4)
    assert z == 5
    assert graph.members(z) == (1, 4)
    assert graph.completion(z) == 23
    assert graph.partition_of(z) == 0
    assert graph.resolve(1) == z
    assert graph.resolve(4) == z
    assert graph.partitions() == {0: [z], 1: [3]}


def test_contract_neighborhood_union():
    inst = instance_from_starts([[0], [10], [5], [9]], piles=2)
    graph = build_conflict_graph(inst)
    # 3 = [9, 12) overlaps 1 = [10, 13); 0 = [0, 3) and 2 = [5, 8) are free.
    assert graph.edges() == [(1, 3)]

    graph.add_edge(0, 3)
    z = graph.contract(0, 1)

    assert graph.neighbors(z) == {3}
    assert graph.edges() == [(3, z)]


def test_contract_merges_partitions():
    inst = instance_from_starts([[0, 20], [10]], piles=2)
    graph = build_conflict_graph(inst)

    z = graph.contract(0, 2)
    assert graph.partition_of(z) == 0
    assert graph.partition_of(1) == 0
    assert graph.has_edge(1, z)


def test_contract_adjacent_raises():
    _, graph = tiny_graph()
    with pytest.raises(ValueError):
        graph.contract(0, 2)


def test_nested_contraction_members():
    inst = instance_from_starts([[0], [4], [8]], piles=1)
    graph = build_conflict_graph(inst)

    z = graph.contract(0, 1)
    y = graph.contract(z, 2)

    assert graph.members(y) == (0, 1, 2)
    assert graph.resolve(0) == y
    assert graph.completion(y) == 11


def test_color_selection():
    inst = instance_from_starts([[0], [1], [2], [10]], piles=2)
    graph = build_conflict_graph(inst)

    assert color_selection(graph, [0, 1, 2], 2) is None
    assert color_selection(graph, [0, 1, 2], 3) is not None

    coloring = color_selection(graph, [0, 1, 3], 2)
    assert set(coloring) == {0, 1, 3}
    assert coloring[0] != coloring[1]
    assert all(0 <= c < 2 for c in coloring.values())


def test_color_selection_empty():
    _, graph = tiny_graph()
    assert color_selection(graph, [], 1) == {}
