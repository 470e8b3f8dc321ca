"""The conflict graph and its branching-time mutations.

Vertices are integers. Original vertices keep their instance id, super-vertices
created by `contract` get fresh ids counting up from `num_vertices`.
"""
import networkx as nx


class ConflictGraph:
    """Conflict graph with partitions, deletions and Zykov contractions.

    An edge joins two vertices whose intervals overlap or which belong to the
    same partition. Every partition therefore induces a clique.
    """

    def __init__(self, completion, partition_of, edges=(), num_vertices=None):
        self._graph = nx.Graph()
        for v in sorted(completion):
            self._graph.add_node(v, completion=completion[v],
                                 partition=partition_of[v])
        self._graph.add_edges_from(edges)

        self._members = {v: (v,) for v in completion}
        self.merged_into = {}
        self.num_vertices = (
            num_vertices if num_vertices is not None else len(completion)
        )

        assert nx.number_of_selfloops(self._graph) == 0

    def copy(self):
        other = ConflictGraph.__new__(ConflictGraph)
        other._graph = self._graph.copy()
        other._members = dict(self._members)
        other.merged_into = dict(self.merged_into)
        other.num_vertices = self.num_vertices
        return other

    def alive(self, v):
        return v in self._graph

    def alive_vertices(self):
        return sorted(self._graph.nodes)

    def completion(self, v):
        return self._graph.nodes[v]["completion"]

    def partition_of(self, v):
        return self._graph.nodes[v]["partition"]

    def partitions(self):
        """Alive vertices grouped by partition, both sorted."""
        groups = {}
        for v in self.alive_vertices():
            groups.setdefault(self.partition_of(v), []).append(v)

        return dict(sorted(groups.items()))

    def members(self, v):
        """The original vertices represented by `v`."""
        return self._members[v]

    def resolve(self, v):
        """Follow contractions from an id to the alive vertex representing it."""
        while v in self.merged_into:
            v = self.merged_into[v]
        return v

    def neighbors(self, v):
        return set(self._graph.adj[v])

    def has_edge(self, u, v):
        return self._graph.has_edge(u, v)

    def edges(self):
        return sorted((min(u, v), max(u, v)) for u, v in self._graph.edges)

    @property
    def num_edges(self):
        return self._graph.number_of_edges()

    def is_independent(self, vertices):
        vertices = list(vertices)
        for i, u in enumerate(vertices):
            if not self.alive(u):
                return False
            for v in vertices[i + 1:]:
                if u == v or self._graph.has_edge(u, v):
                    return False

        return True

    def remove_vertex(self, v):
        self._graph.remove_node(v)

    def add_edge(self, u, v):
        if u == v:
            raise ValueError(f"Self-loop at {u}.")
        if not (self.alive(u) and self.alive(v)):
            raise ValueError(f"Edge ({u}, {v}) references a removed vertex.")

        self._graph.add_edge(u, v)

    def contract(self, u, v):
        """Merge `u` and `v` into a new super-vertex `z` and return `z`.

        `N(z)` is the union of `N(u)` and `N(v)`, `z` completes at the later of
        the two completion times and the partitions of `u` and `v` merge into
        the lower partition index.
        """
        if u == v or self.has_edge(u, v):
            raise ValueError(f"Can't contract adjacent or equal vertices {u}, {v}.")

        p_u, p_v = self.partition_of(u), self.partition_of(v)
        p_z = min(p_u, p_v)

        z = self.num_vertices
        self.num_vertices += 1

        neighbors = (self.neighbors(u) | self.neighbors(v)) - {u, v}
        self._graph.add_node(
            z,
            completion=max(self.completion(u), self.completion(v)),
            partition=p_z,
        )
        self._graph.add_edges_from((z, w) for w in neighbors)

        self._members[z] = tuple(sorted(self._members[u] + self._members[v]))
        self.merged_into[u] = z
        self.merged_into[v] = z
        self._graph.remove_nodes_from([u, v])

        if p_u != p_v:
            self._merge_partitions(p_z, max(p_u, p_v))

        return z

    def _merge_partitions(self, target, source):
        moved = [w for w in self._graph.nodes
                 if self._graph.nodes[w]["partition"] == source]
        kept = [w for w in self._graph.nodes
                if self._graph.nodes[w]["partition"] == target]

        for w in moved:
            self._graph.nodes[w]["partition"] = target

        self._graph.add_edges_from((a, b) for a in moved for b in kept if a != b)


def build_conflict_graph(inst):
    """Conflict graph of `inst`: overlapping intervals or same vehicle."""
    vertices = inst.vertices
    edges = []
    for i, a in enumerate(vertices):
        for b in vertices[i + 1:]:
            if a.vehicle == b.vehicle or a.overlaps(b):
                edges.append((a.vertex_id, b.vertex_id))

    return ConflictGraph(
        completion={iv.vertex_id: iv.completion for iv in vertices},
        partition_of={iv.vertex_id: iv.vehicle for iv in vertices},
        edges=edges,
    )


def color_selection(graph, vertices, piles):
    """Assign `vertices` to at most `piles` piles without conflicts.

    Exact backtracking, most constrained vertex first. Returns a mapping
    `vertex -> pile` or `None` if no such assignment exists.
    """
    vertices = sorted(vertices)
    neighbors = {v: graph.neighbors(v) & set(vertices) for v in vertices}
    colors = {}

    def candidates(v):
        used = {colors[u] for u in neighbors[v] if u in colors}
        # Piles are interchangeable: never open more than one new pile.
        opened = max(colors.values(), default=-1) + 1
        return [c for c in range(min(opened + 1, piles)) if c not in used]

    def pick():
        uncolored = [v for v in vertices if v not in colors]
        return max(uncolored, key=lambda v: (
            len({colors[u] for u in neighbors[v] if u in colors}),
            len(neighbors[v]),
            -v,
        ))

    def backtrack():
        if len(colors) == len(vertices):
            return True

        v = pick()
        for c in candidates(v):
            colors[v] = c
            if backtrack():
                return True
            del colors[v]

        return False

    return dict(colors) if backtrack() else None
