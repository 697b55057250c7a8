import json

import pytest

from carpetlab.cli import main
from carpetlab.io import atomic_write, dump_carpet, parse_carpet
from carpetlab.errors import CarpetFileError
from carpetlab import new_carpet, proptest


EXAMPLE = "# test carpet\n3 2\n0 0\n2 0\n1 1\n"
FULL = "3 2\n" + "".join(f"{x} {y}\n" for x in range(3) for y in range(2))


@pytest.fixture
def example_file(tmp_path):
    path = tmp_path / "example.txt"
    path.write_text(EXAMPLE)
    return str(path)


@pytest.fixture
def full_file(tmp_path):
    path = tmp_path / "full.txt"
    path.write_text(FULL)
    return str(path)


# -- carpet file format --


def test_parse_carpet_format():
    c = parse_carpet("  # comment\n 3   2 \n0 0 # digit\n2 0\n1 1\n\n")
    assert c == new_carpet(3, 2, {(0, 0), (2, 0), (1, 1)})
    back = parse_carpet(dump_carpet(c))
    assert back == c


def test_parse_carpet_errors():
    with pytest.raises(CarpetFileError):
        parse_carpet("")
    with pytest.raises(CarpetFileError):
        parse_carpet("banana\n")
    with pytest.raises(CarpetFileError):
        parse_carpet("3 2\n0\n")
    with pytest.raises(CarpetFileError):
        parse_carpet("3 2\nx y\n")


def test_atomic_write(tmp_path):
    target = tmp_path / "sub" / "file.txt"
    atomic_write(target, "hello\n")
    assert target.read_text() == "hello\n"
    assert not [p for p in (tmp_path / "sub").iterdir() if p.name.startswith(".")]


# -- analyze --


def test_analyze_example(example_file, capsys):
    assert main(["analyze", "--carpet", example_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["schema"] == "carpet-lab/1"
    assert abs(payload["dim_h"] - 1.34968) < 1e-4
    assert abs(payload["dim_star"] - 1.63093) < 1e-5
    assert abs(payload["slice_bound_h"] - 0.52213) < 1e-4
    assert payload["independent"] is True
    assert set(payload) == {
        "schema",
        "theta",
        "dim_h",
        "dim_bp",
        "dim_star",
        "independent",
        "ahlfors_regular",
        "slice_bound_h",
        "slice_bound_p",
        "prior_bound",
        "marstrand_h",
        "marstrand_p",
    }


def test_analyze_full_square(full_file, capsys):
    assert main(["analyze", "--carpet", full_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["dim_h"] == payload["dim_bp"] == payload["dim_star"] == 2.0
    assert payload["slice_bound_h"] == payload["slice_bound_p"] == payload["prior_bound"] == 1.0


def test_analyze_writes_report(example_file, tmp_path, capsys):
    out = tmp_path / "reports"
    assert main(["analyze", "--carpet", example_file, "--out", str(out)]) == 0
    on_disk = json.loads((out / "report.json").read_text())
    assert on_disk == json.loads(capsys.readouterr().out)


def test_analyze_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("nonsense\n")
    assert main(["analyze", "--carpet", str(bad)]) == 2
    invalid = tmp_path / "invalid.txt"
    invalid.write_text("3 2\n5 5\n")
    assert main(["analyze", "--carpet", str(invalid)]) == 3
    assert main(["analyze", "--carpet", str(tmp_path / "missing.txt")]) == 2
    capsys.readouterr()


# -- slice --


def test_slice_diagonal(full_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(
        [
            "slice",
            "--carpet",
            full_file,
            "--slope",
            "1.0",
            "--t",
            "0",
            "--depths",
            "4..12",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["slope"] - 1.0) < 0.05
    assert payload["bounds"]["theorem_p"] == 1.0
    counts = (out / "slice_counts.csv").read_text().strip().splitlines()
    assert counts[0] == "k,N_k"
    assert len(counts) == 10
    k, nk = counts[1].split(",")
    assert int(k) == 4 and 2**4 <= int(nk) <= 3 * 2**4


def test_slice_empty_line(example_file, capsys):
    assert main(["slice", "--carpet", example_file, "--slope", "2.5", "--t", "5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["slope"] == 0.0
    assert payload["empty"] is True


def test_slice_axis_parallel_exit(example_file, capsys):
    assert main(["slice", "--carpet", example_file, "--slope", "0", "--t", "0.3"]) == 4
    capsys.readouterr()


def test_slice_budget_exit(full_file, capsys):
    code = main(
        ["slice", "--carpet", full_file, "--slope", "1.0", "--depths", "4..12", "--budget", "50"]
    )
    assert code == 5
    capsys.readouterr()


# -- sweep --


def test_sweep_single_matches_slice(example_file, capsys):
    assert main(["slice", "--carpet", example_file, "--u0", "0.45", "--t", "0.25"]) == 0
    slice_payload = json.loads(capsys.readouterr().out)
    assert (
        main(["sweep", "--carpet", example_file, "--u0s", "0.45", "--ts", "0.25"]) == 0
    )
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    row = lines[1].split(",")
    assert abs(float(row[2]) - slice_payload["slope"]) < 1e-12


def test_sweep_grid(example_file, capsys):
    assert main(["sweep", "--carpet", example_file, "--grid", "10x10", "--depths", "4..10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("u0,t,slope,stderr")
    assert len(lines) == 101
    for row in lines[1:]:
        fields = row.split(",")
        assert fields[9] == ""  # no per-line errors on this grid
        assert float(fields[2]) >= 0.0


def test_sweep_axis_parallel_row_tagged(example_file, capsys):
    code = main(
        ["sweep", "--carpet", example_file, "--slopes", "1.5,0,2.5", "--ts", "0.1", "--depths", "4..9"]
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    tags = [row.split(",")[-1] for row in lines[1:]]
    assert tags == ["", "AxisParallelLine", ""]


def test_sweep_deterministic_across_threads(example_file, tmp_path, capsys, monkeypatch):
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("CARPETLAB_THREADS", threads)
        assert main(["sweep", "--carpet", example_file, "--grid", "4x2", "--depths", "4..9"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]


# -- scenery --


def test_scenery_full_square_diagonal(full_file, tmp_path, capsys):
    out = tmp_path / "sc"
    code = main(
        [
            "scenery",
            "--carpet",
            full_file,
            "--slope",
            "1.0",
            "--t",
            "0",
            "--steps",
            "200",
            "--depths",
            "4..10",
            "--block",
            "4",
            "--stride",
            "5",
            "--out",
            str(out),
        ]
    )
    assert code in (0, 6)
    payload = json.loads(capsys.readouterr().out.strip().splitlines()[0])
    assert payload["slack_packing"] >= -1e-9
    assert payload["slack_hausdorff"] >= -1e-9
    assert payload["packing_form"] <= 2.0 + 1e-9
    assert payload["triple"]["residual_tv"] < 0.2
    orbit_lines = (out / "orbit.jsonl").read_text().strip().splitlines()
    assert orbit_lines
    first = json.loads(orbit_lines[0])
    assert first["step"] == 0
    chain = json.loads((out / "chain.json").read_text())
    assert chain["exhausted_at"] == payload["exhausted_at"]


def test_scenery_residual_small_at_large_n(example_file, capsys):
    code = main(
        [
            "scenery",
            "--carpet",
            example_file,
            "--u0",
            "0.37",
            "--t",
            "0.21",
            "--steps",
            "10000",
            "--depths",
            "4..12",
            "--block",
            "4",
            "--stride",
            "1000",
        ]
    )
    assert code in (0, 6)
    payload = json.loads(capsys.readouterr().out.strip().splitlines()[0])
    assert payload["triple"]["residual_tv"] < 0.05


def test_scenery_point_line_zero_entropy(tmp_path, capsys):
    path = tmp_path / "point.txt"
    path.write_text("3 2\n0 0\n")
    out = tmp_path / "out"
    code = main(
        [
            "scenery",
            "--carpet",
            str(path),
            "--slope",
            "1.0",
            "--t",
            "0",
            "--steps",
            "30",
            "--depths",
            "2..6",
            "--block",
            "3",
            "--out",
            str(out),
        ]
    )
    assert code in (0, 6)
    capsys.readouterr()
    for line in (out / "orbit.jsonl").read_text().strip().splitlines():
        assert json.loads(line)["probe_entropy"] == 0.0


def test_scenery_empty_slice(example_file, capsys):
    code = main(
        ["scenery", "--carpet", example_file, "--slope", "2.5", "--t", "5", "--steps", "50"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["empty"] is True


# -- proptest --


def test_proptest_seed_invariance_of_hard_checks(rng):
    import numpy as np

    for seed in (3, 17):
        r = proptest.check_gibbs_chains(np.random.default_rng(seed), vectors_per_carpet=200)
        assert r.passed
        r = proptest.check_magnify_identity(np.random.default_rng(seed), starts=3, k_max=8)
        assert r.passed


def test_proptest_cli_smoke(capsys):
    assert main(["proptest", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert "PASS dimension_ordering" in out
    assert "FAIL" not in out
