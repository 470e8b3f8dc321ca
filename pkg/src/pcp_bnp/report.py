"""Run records, benchmark manifests and plot data.

Run records are appended to a CSV file whose first line is the schema tag
`schema=1`, followed by a header row and one row per solve.
"""
import os
import collections
import dataclasses
from typing import Optional

from pcp_bnp import logger
from .instance import parse_instance_name
from .io import append_csv_row, read_csv_rows, read_something, write_tsv


SCHEMA_VERSION = 1
SCHEMA_TAG = f"schema={SCHEMA_VERSION}"

GAP_SERIES_FILENAME = "gap_vs_vertices.tsv"
TIME_SERIES_FILENAME = "time_vs_vertices.tsv"


class ReportFormatError(ValueError):
    pass


@dataclasses.dataclass
class RunRecord:
    instance_name: str
    V: int
    E: int
    N: int
    obj: Optional[int]
    gap_percent: float
    t_total_s: float
    t_rmp_s: float
    t_pricing_s: float
    n_p: int
    n_c: int
    n_n: int
    backend: str
    seed: int
    status: str

    @classmethod
    def from_stats(cls, instance_name, inst, num_edges, stats, backend, seed):
        return cls(
            instance_name=instance_name,
            V=inst.num_vertices,
            E=num_edges,
            N=inst.num_vehicles,
            obj=stats.obj,
            gap_percent=stats.gap_percent,
            t_total_s=stats.t_total,
            t_rmp_s=stats.t_rmp,
            t_pricing_s=stats.t_pricing,
            n_p=stats.n_pricing_calls,
            n_c=stats.n_columns,
            n_n=stats.n_nodes,
            backend=backend,
            seed=seed,
            status=stats.status,
        )

    @classmethod
    def failed(cls, instance_name, backend, seed, status):
        """A record for a run that didn't produce statistics.

        Sizes are recovered from canonical instance names and are 0 otherwise.
        """
        size = parse_instance_name(instance_name)
        V = size["vertices"] if size else 0
        N = V // size["k"] if size and size["k"] else 0
        return cls(instance_name, V, 0, N, None, 100.0, 0.0, 0.0, 0.0, 0, 0, 0,
                   backend, seed, status)

    def as_row(self):
        row = dataclasses.asdict(self)
        row["obj"] = "" if self.obj is None else self.obj
        row["gap_percent"] = f"{self.gap_percent:.2f}"
        for key in ("t_total_s", "t_rmp_s", "t_pricing_s"):
            row[key] = f"{row[key]:.3f}"

        return row

    @classmethod
    def from_row(cls, row):
        """Parse a CSV row; raises `ValueError` if a field is malformed."""
        try:
            return cls(
                instance_name=row["instance_name"],
                V=int(row["V"]),
                E=int(row["E"]),
                N=int(row["N"]),
                obj=int(row["obj"]) if row["obj"] not in ("", None) else None,
                gap_percent=float(row["gap_percent"]),
                t_total_s=float(row["t_total_s"]),
                t_rmp_s=float(row["t_rmp_s"]),
                t_pricing_s=float(row["t_pricing_s"]),
                n_p=int(row["n_p"]),
                n_c=int(row["n_c"]),
                n_n=int(row["n_n"]),
                backend=row["backend"],
                seed=int(row["seed"]),
                status=row["status"],
            )
        except (KeyError, TypeError) as e:
            raise ValueError(f"Missing field {e} in row {row}.")


FIELDNAMES = [f.name for f in dataclasses.fields(RunRecord)]


def append_record(filename, record):
    append_csv_row(filename, SCHEMA_TAG, FIELDNAMES, record.as_row())


def read_records(filename):
    """Read all well-formed records; malformed rows are skipped with a warning."""
    preamble, rows = read_csv_rows(filename)
    if preamble != SCHEMA_TAG:
        raise ReportFormatError(
            f"'{filename}' has schema tag '{preamble}', expected '{SCHEMA_TAG}'."
        )

    records = []
    for lineno, row in enumerate(rows, start=3):
        try:
            records.append(RunRecord.from_row(row))
        except ValueError as e:
            logger.warning(f"{filename}:{lineno}: skipping malformed row ({e}).")

    return records


@dataclasses.dataclass(frozen=True)
class ManifestEntry:
    instance_path: str
    backend: str
    seed: int


def parse_manifest(text, basedir="."):
    """Parse `<instance-path> <backend> <seed>` lines; `#` starts a comment.

    Relative instance paths are resolved against `basedir`.
    """
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue

        tokens = line.split()
        if len(tokens) != 3:
            raise ValueError(
                f"manifest line {lineno}: expected '<instance> <backend> <seed>'."
            )

        path, backend, seed = tokens
        try:
            seed = int(seed)
        except ValueError:
            raise ValueError(f"manifest line {lineno}: invalid seed '{seed}'.")

        entries.append(ManifestEntry(os.path.join(basedir, path), backend, seed))

    return entries


def read_manifest(path):
    basedir = os.path.dirname(os.path.abspath(path))
    return read_something(path, lambda f: parse_manifest(f.read(), basedir))


def aggregate(records):
    """Mean gap and mean total time per `(V, backend)`, sorted by both."""
    groups = collections.defaultdict(list)
    for record in records:
        groups[record.V, record.backend].append(record)

    summary = []
    for (V, backend), group in sorted(groups.items()):
        summary.append({
            "V": V,
            "backend": backend,
            "runs": len(group),
            "mean_gap_percent": sum(r.gap_percent for r in group) / len(group),
            "mean_t_total_s": sum(r.t_total_s for r in group) / len(group),
        })

    return summary


def format_summary(summary):
    lines = [f"{'V':>5}  {'backend':<8}  {'runs':>4}  {'gap %':>7}  {'t_total s':>10}"]
    for item in summary:
        lines.append(
            f"{item['V']:>5}  {item['backend']:<8}  {item['runs']:>4}"
            f"  {item['mean_gap_percent']:>7.2f}  {item['mean_t_total_s']:>10.3f}"
        )

    return "\n".join(lines)


def write_series(records, out_dir):
    """Write gap-vs-V and time-vs-V series, one series per backend.

    Both files are in long format with the columns `backend`, `V` and
    `value`; seeds of the same size are averaged.
    """
    summary = aggregate(records)
    os.makedirs(out_dir, exist_ok=True)

    paths = {}
    for filename, key in ((GAP_SERIES_FILENAME, "mean_gap_percent"),
                          (TIME_SERIES_FILENAME, "mean_t_total_s")):
        rows = sorted(
            ((item["backend"], item["V"], f"{item[key]:.6g}") for item in summary),
            key=lambda r: (r[0], r[1])
        )
        path = os.path.join(out_dir, filename)
        write_tsv(path, ["backend", "V", "value"], rows)
        paths[key] = path

    return paths
