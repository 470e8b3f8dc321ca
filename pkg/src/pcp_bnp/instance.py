"""Instances of the EV charging partition-coloring problem.

Each vehicle owns `k` candidate charging intervals of a common duration `d`
inside the horizon `[0, T]`. Exactly one interval per vehicle must be chosen
and the chosen intervals must fit on `C` charging piles. Intervals are
half-open, i.e. `[s, s + d)`, so back-to-back sessions on one pile are allowed.
"""
import re
import dataclasses
from typing import Tuple

import numpy as np

from pcp_bnp import logger
from .io import read_something, write_something


FILE_MAGIC = "pcp"
FILE_SUFFIX = ".pcp"


class InstanceFormatError(ValueError):
    """An instance file or a set of generator arguments is invalid."""


@dataclasses.dataclass(frozen=True)
class Interval:
    vertex_id: int
    vehicle: int
    start: int
    completion: int

    def overlaps(self, other):
        """Half-open overlap, touching intervals do not conflict."""
        return self.start < other.completion and other.start < self.completion


@dataclasses.dataclass(frozen=True)
class Instance:
    horizon: int
    duration: int
    piles: int
    vertices: Tuple[Interval, ...]
    partitions: Tuple[Tuple[int, ...], ...]
    seed: int

    def __post_init__(self):
        _check_instance(self)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_vehicles(self):
        return len(self.partitions)

    @property
    def k_per_vehicle(self):
        """Candidate intervals per vehicle; the largest if not uniform."""
        return max(len(p) for p in self.partitions)

    def completion(self, v):
        return self.vertices[v].completion

    def partition_of(self, v):
        return self.vertices[v].vehicle


def _check_instance(inst):
    if inst.piles < 1:
        raise InstanceFormatError(f"Need at least one pile, got {inst.piles}.")

    if not inst.horizon > inst.duration > 0:
        raise InstanceFormatError(
            f"Need horizon > duration > 0, got T={inst.horizon}, d={inst.duration}."
        )

    for k, interval in enumerate(inst.vertices):
        if interval.vertex_id != k:
            raise InstanceFormatError(
                f"Vertex ids must be consecutive, found {interval.vertex_id} at {k}."
            )

        if not 0 <= interval.start <= inst.horizon - inst.duration:
            raise InstanceFormatError(
                f"Start {interval.start} of vertex {k} outside "
                f"[0, {inst.horizon - inst.duration}]."
            )

        if interval.completion != interval.start + inst.duration:
            raise InstanceFormatError(
                f"Completion of vertex {k} must be start + {inst.duration}."
            )

        if not 0 <= interval.vehicle < len(inst.partitions):
            raise InstanceFormatError(
                f"Partition index {interval.vehicle} of vertex {k} out of range."
            )

    seen = set()
    for n, members in enumerate(inst.partitions):
        if not members:
            raise InstanceFormatError(f"Partition {n} is empty.")

        for v in members:
            if v in seen or not 0 <= v < len(inst.vertices):
                raise InstanceFormatError(f"Partition {n} lists invalid vertex {v}.")
            if inst.vertices[v].vehicle != n:
                raise InstanceFormatError(f"Vertex {v} listed in wrong partition {n}.")
            seen.add(v)

    if len(seen) != len(inst.vertices):
        raise InstanceFormatError("Partitions do not cover all vertices.")


def _partitions_from_vertices(vertices, num_vehicles):
    partitions = [[] for _ in range(num_vehicles)]
    for interval in vertices:
        partitions[interval.vehicle].append(interval.vertex_id)

    return tuple(tuple(p) for p in partitions)


def generate(num_vertices, k_per_vehicle, piles, seed, horizon=24, duration=3):
    """Generate a random instance.

    Vehicle `n` owns the vertices `n*k, ..., n*k + k - 1`. Start times are
    drawn as `PCG64(seed).integers(0, T - d + 1, size=num_vertices)`, hence
    the same arguments always produce the same instance.
    """
    if k_per_vehicle < 1 or num_vertices < 1:
        raise InstanceFormatError("Need at least one vertex per vehicle.")

    if num_vertices % k_per_vehicle != 0:
        raise InstanceFormatError(
            f"{num_vertices} vertices can't be split into vehicles with"
            f" {k_per_vehicle} intervals each."
        )

    if not horizon > duration > 0:
        raise InstanceFormatError(
            f"Need horizon > duration > 0, got T={horizon}, d={duration}."
        )

    rng = np.random.Generator(np.random.PCG64(seed))
    starts = rng.integers(0, horizon - duration + 1, size=num_vertices)

    num_vehicles = num_vertices // k_per_vehicle
    vertices = tuple(
        Interval(v, v // k_per_vehicle, int(s), int(s) + duration)
        for v, s in enumerate(starts)
    )

    return Instance(
        horizon=horizon,
        duration=duration,
        piles=piles,
        vertices=vertices,
        partitions=_partitions_from_vertices(vertices, num_vehicles),
        seed=seed,
    )


def instance_from_starts(starts, piles, duration=3, horizon=24, seed=0):
    """An instance with the given start times, `starts[n]` listing vehicle `n`."""
    vertices = []
    for vehicle, vehicle_starts in enumerate(starts):
        for s in vehicle_starts:
            vertices.append(Interval(len(vertices), vehicle, int(s), int(s) + duration))

    vertices = tuple(vertices)
    return Instance(
        horizon=horizon,
        duration=duration,
        piles=piles,
        vertices=vertices,
        partitions=_partitions_from_vertices(vertices, len(starts)),
        seed=seed,
    )


def instance_name(inst):
    """The canonical name `v{V}c{C}k{K}s{S}`, with `V` the vertex count."""
    return (f"v{inst.num_vertices}c{inst.piles}"
            f"k{inst.k_per_vehicle}s{inst.seed}")


_NAME_PATTERN = re.compile(r"^v(\d+)c(\d+)k(\d+)s(\d+)$")


def parse_instance_name(name):
    """Inverse of `instance_name`; returns `None` for foreign names."""
    match = _NAME_PATTERN.match(name)
    if match is None:
        return None

    keys = ["vertices", "piles", "k", "seed"]
    return dict(zip(keys, (int(g) for g in match.groups())))


def write_instance(inst, path):
    def dump(f):
        f.write(f"# {instance_name(inst)}: starts drawn as"
                f" numpy PCG64(seed).integers(0, T - d + 1)\n")
        f.write(f"# {FILE_MAGIC} <|V|> <N> <C> <T> <d> <seed>\n")
        f.write(f"{FILE_MAGIC} {inst.num_vertices} {inst.num_vehicles} {inst.piles}"
                f" {inst.horizon} {inst.duration} {inst.seed}\n")
        for interval in inst.vertices:
            f.write(f"v {interval.vertex_id} {interval.vehicle}"
                    f" {interval.start} {interval.completion}\n")

    write_something(path, dump)
    logger.debug(f"Wrote instance {instance_name(inst)} to '{path}'.")


def _parse_ints(tokens, lineno):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise InstanceFormatError(f"line {lineno}: expected integers, got {tokens}.")


def parse_instance(text):
    header = None
    rows = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue

        tokens = line.split()
        if header is None:
            if tokens[0] != FILE_MAGIC or len(tokens) != 7:
                raise InstanceFormatError(f"line {lineno}: malformed header '{line}'.")
            header = _parse_ints(tokens[1:], lineno)
            continue

        if tokens[0] != "v" or len(tokens) != 5:
            raise InstanceFormatError(f"line {lineno}: malformed vertex '{line}'.")

        vertex_id, vehicle, start, completion = _parse_ints(tokens[1:], lineno)
        if vertex_id in rows:
            raise InstanceFormatError(f"line {lineno}: duplicate vertex id {vertex_id}.")
        rows[vertex_id] = Interval(vertex_id, vehicle, start, completion)

    if header is None:
        raise InstanceFormatError("Missing header line.")

    num_vertices, num_vehicles, piles, horizon, duration, seed = header
    if sorted(rows) != list(range(num_vertices)):
        raise InstanceFormatError(
            f"Expected vertex ids 0..{num_vertices - 1}, got {len(rows)} vertices."
        )

    vertices = tuple(rows[v] for v in range(num_vertices))
    for interval in vertices:
        if not 0 <= interval.vehicle < num_vehicles:
            raise InstanceFormatError(
                f"Partition index {interval.vehicle} of vertex"
                f" {interval.vertex_id} out of range."
            )

    return Instance(
        horizon=horizon,
        duration=duration,
        piles=piles,
        vertices=vertices,
        partitions=_partitions_from_vertices(vertices, num_vehicles),
        seed=seed,
    )


def read_instance(path):
    return read_something(path, lambda f: parse_instance(f.read()))


def makespan(inst, selected):
    """The latest completion time among `selected`."""
    if not selected:
        raise ValueError("The makespan of an empty selection is undefined.")

    return max(inst.vertices[v].completion for v in selected)


def max_overlap(inst, selected):
    """The largest number of simultaneously running intervals of `selected`.

    Interval graphs are perfect, hence `selected` fits on `C` piles iff this
    is at most `C`.
    """
    events = []
    for v in selected:
        events.append((inst.vertices[v].start, 1))
        events.append((inst.vertices[v].completion, -1))

    # Ends sort before starts at equal times (half-open intervals).
    events.sort(key=lambda e: (e[0], e[1]))

    current, peak = 0, 0
    for _, delta in events:
        current += delta
        peak = max(peak, current)

    return peak
