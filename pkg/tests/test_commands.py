import pytest

from pcp_bnp.commands import EXIT_INFEASIBLE, EXIT_USAGE, pcp_bnp
from pcp_bnp.instance import instance_from_starts, read_instance, write_instance
from pcp_bnp.report import GAP_SERIES_FILENAME, TIME_SERIES_FILENAME, read_records
from pcp_bnp.util import docopt_get_args

from .conftest import TINY_INSTANCE


def exit_code(args):
    with pytest.raises(SystemExit) as e:
        pcp_bnp(args)
    return e.value.code


def generate_args(out_dir, vertices=6, seeds="0-2"):
    return ["generate", f"--vertices={vertices}", "--k=2", "--piles=2",
            f"--seeds={seeds}", f"--out-dir={out_dir}"]


@pytest.mark.parametrize("args, key, value", [
    (["generate", "--vertices=6", "--k=2", "--piles=2", "--seeds=0",
      "--out-dir=instances"], "out_dir", "instances"),
    (["solve", "--instance=a.pcp", "--csv=runs.csv"], "csv", "runs.csv"),
    (["solve", "--instance=a.pcp", "--csv=runs.csv", "--set=qaia.steps=5"],
     "set", ["qaia.steps=5"]),
    (["bench", "--manifest=m.txt", "--csv=runs.csv", "--jobs=2"], "jobs", "2"),
    (["report", "--csv=runs.csv", "--out-dir=plots"], "out_dir", "plots"),
])
def test_usage_accepts_documented_flags(args, key, value):
    options = docopt_get_args(pcp_bnp, args)
    assert options[key] == value


def test_generate(tmp_path, capsys):
    pcp_bnp(generate_args(tmp_path))

    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["v6c2k2s0.pcp", "v6c2k2s1.pcp", "v6c2k2s2.pcp"]

    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == f"{tmp_path / 'v6c2k2s0.pcp'} exact 0"

    inst = read_instance(tmp_path / "v6c2k2s1.pcp")
    assert (inst.num_vertices, inst.num_vehicles, inst.piles) == (6, 3, 2)
    assert inst.seed == 1


def test_generate_refuses_to_overwrite(tmp_path):
    pcp_bnp(generate_args(tmp_path, seeds="0"))
    assert exit_code(generate_args(tmp_path, seeds="0")) == EXIT_USAGE

    pcp_bnp(generate_args(tmp_path, seeds="0") + ["--force"])


def test_generate_invalid_arguments(tmp_path):
    assert exit_code(generate_args(tmp_path, vertices=7)) == EXIT_USAGE
    assert exit_code(generate_args(tmp_path, seeds="3-1")) == EXIT_USAGE
    assert exit_code(["generate", "--vertices=6"]) == EXIT_USAGE


def test_solve(tmp_path, capsys):
    csv = tmp_path / "runs.csv"
    pcp_bnp(["solve", f"--instance={TINY_INSTANCE}", f"--csv={csv}"])

    out = capsys.readouterr().out
    assert "status        optimal" in out
    assert "obj           6" in out

    record, = read_records(csv)
    assert record.instance_name == "v6c2k2s0"
    assert (record.V, record.N, record.obj) == (6, 3, 6)
    assert record.backend == "exact"
    assert record.gap_percent == 0.0


def test_solve_writes_the_root_lp(tmp_path):
    lp_file = tmp_path / "root.lp"
    pcp_bnp(["solve", f"--instance={TINY_INSTANCE}", f"--dump-lp={lp_file}",
             "--pricing=bsb", "--set=qaia.steps=50", "--seed=3"])

    assert lp_file.exists()
    assert lp_file.stat().st_size > 0


def test_solve_usage_errors(tmp_path):
    missing = tmp_path / "missing.pcp"
    assert exit_code(["solve", f"--instance={missing}"]) == EXIT_USAGE

    garbage = tmp_path / "garbage.pcp"
    garbage.write_text("not an instance\n")
    assert exit_code(["solve", f"--instance={garbage}"]) == EXIT_USAGE

    args = ["solve", f"--instance={TINY_INSTANCE}"]
    assert exit_code(args + ["--pricing=annealer"]) == EXIT_USAGE
    assert exit_code(args + ["--set=qaia.colour=blue"]) == EXIT_USAGE
    assert exit_code(args + [f"--config={tmp_path / 'missing.cfg'}"]) == EXIT_USAGE


def test_solve_infeasible(tmp_path):
    path = tmp_path / "blocked.pcp"
    write_instance(instance_from_starts([[0, 1], [0, 2]], piles=1), path)

    assert exit_code(["solve", f"--instance={path}"]) == EXIT_INFEASIBLE


def test_bench_and_report(tmp_path, capsys):
    instances = tmp_path / "instances"
    pcp_bnp(generate_args(instances))

    manifest = tmp_path / "manifest.txt"
    manifest.write_text("".join(
        f"instances/v6c2k2s{seed}.pcp {backend} {seed}\n"
        for seed in range(3) for backend in ["exact", "bsb", "simcim"]
    ))

    csv = tmp_path / "runs.csv"
    pcp_bnp(["bench", f"--manifest={manifest}", f"--csv={csv}",
             "--set=qaia.steps=50", "--set=pricing.restarts=4"])

    records = read_records(csv)
    assert len(records) == 9
    assert sorted({r.backend for r in records}) == ["bsb", "exact", "simcim"]
    assert all(r.status in ("optimal", "infeasible") for r in records)

    by_instance = {}
    for r in records:
        by_instance.setdefault(r.instance_name, set()).add(r.obj)
    assert all(len(objs) == 1 for objs in by_instance.values())

    capsys.readouterr()
    plots = tmp_path / "plots"
    pcp_bnp(["report", f"--csv={csv}", f"--out-dir={plots}"])

    out = capsys.readouterr().out.splitlines()
    assert out[0].endswith(GAP_SERIES_FILENAME)
    assert out[1].endswith(TIME_SERIES_FILENAME)

    with open(plots / GAP_SERIES_FILENAME) as f:
        rows = f.read().splitlines()
    assert rows[0] == "backend\tV\tvalue"
    assert [row.split("\t")[:2] for row in rows[1:]] == [
        ["bsb", "6"], ["exact", "6"], ["simcim", "6"]
    ]


def test_bench_records_failures(tmp_path):
    manifest = tmp_path / "manifest.txt"
    manifest.write_text(f"{TINY_INSTANCE} exact 0\nmissing.pcp exact 0\n")

    csv = tmp_path / "runs.csv"
    pcp_bnp(["bench", f"--manifest={manifest}", f"--csv={csv}"])

    records = read_records(csv)
    assert [r.status for r in records] == ["optimal", "error"]


def test_bench_usage_errors(tmp_path):
    csv = tmp_path / "runs.csv"
    missing = tmp_path / "missing.txt"
    assert exit_code(["bench", f"--manifest={missing}", f"--csv={csv}"]) == EXIT_USAGE

    manifest = tmp_path / "manifest.txt"
    manifest.write_text(f"{TINY_INSTANCE} exact\n")
    assert exit_code(["bench", f"--manifest={manifest}", f"--csv={csv}"]) == EXIT_USAGE

    manifest.write_text(f"{TINY_INSTANCE} exact 0\n")
    assert exit_code(["bench", f"--manifest={manifest}", f"--csv={csv}",
                      "--jobs=0"]) == EXIT_USAGE


def test_report_requires_the_schema(tmp_path):
    csv = tmp_path / "runs.csv"
    csv.write_text("schema=0\n")
    assert exit_code(["report", f"--csv={csv}", f"--out-dir={tmp_path}"]) == EXIT_USAGE
