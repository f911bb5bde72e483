import hashlib
import json

import numpy as np
import pytest

from sparselab import cli, storage
from sparselab.ensembles import (entry_distribution, matrix_from_entries,
                                 sample_matrix, sample_sparse_signal)
from sparselab.errors import ConfigError, NumericalError, SizeCapError


def run_cli(args, tmp_path, monkeypatch):
    monkeypatch.setenv("SPARSELAB_OUT", str(tmp_path))
    return cli.main(args)


# -- parsing ------------------------------------------------------------------


def test_parse_phase_diagram_example():
    config = cli.parse_config(
        "phase-diagram --n 256 --s 2,4,8,16 --m 10:10:200 --dist laplace "
        "--trials 100 --seed 7 --out d.csv".split())
    params = config.parameters
    assert config.command == "phase-diagram"
    assert params["n"] == 256
    assert params["s"] == [2, 4, 8, 16]
    assert params["m"] == list(range(10, 201, 10))
    assert params["dist"] == "laplace"
    assert params["trials"] == 100
    assert config.schema_version == 1


def test_parse_rejects_unknown_command_and_keys():
    with pytest.raises(ConfigError):
        cli.parse_config(["frobnicate", "--n", "3"])
    with pytest.raises(ConfigError):
        cli.parse_config(["net", "--n", "5", "--s", "1", "--epsilon", "0.5",
                          "--out", "x.csv", "--wibble", "2"])
    with pytest.raises(ConfigError):
        cli.parse_config(["net", "--n", "5"])  # missing required keys


def test_parse_type_and_range_errors():
    with pytest.raises(ConfigError):
        cli.parse_config(["net", "--n", "five", "--s", "1",
                          "--epsilon", "0.5", "--out", "x.csv"])
    with pytest.raises(ConfigError):
        cli.parse_config(["net", "--n", "5", "--s", "1",
                          "--epsilon", "1.5", "--out", "x.csv"])


def test_epsilon_range_exit_code(tmp_path, monkeypatch):
    code = run_cli(["net", "--n", "5", "--s", "1", "--epsilon", "1.5",
                    "--out", "net.csv"], tmp_path, monkeypatch)
    assert code == cli.EXIT_CONFIG


def test_exact_rub_row_cap_contradiction():
    with pytest.raises(SizeCapError):
        cli.parse_config(["rub", "--m", "20", "--n", "4", "--k", "2",
                          "--method", "exact_tiny", "--out", "r.csv"])


def test_config_file_with_flag_override(tmp_path):
    config_file = tmp_path / "run.conf"
    config_file.write_text(
        "# phase diagram settings\n"
        "n = 64\n"
        "s = 1,2\n"
        "m = 4:4:12\n"
        "trials = 5   # small\n"
        "out = from_file.csv\n")
    config = cli.parse_config(["phase-diagram", "--config", str(config_file),
                               "--trials", "9"])
    assert config.parameters["n"] == 64
    assert config.parameters["trials"] == 9       # flag wins
    assert config.parameters["out"] == "from_file.csv"


def test_config_file_unknown_key(tmp_path):
    config_file = tmp_path / "bad.conf"
    config_file.write_text("bogus = 3\n")
    with pytest.raises(ConfigError):
        cli.parse_config(["net", "--config", str(config_file)])


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert "gen-matrix" in capsys.readouterr().out


# -- execution ----------------------------------------------------------------


def test_gen_matrix_runs_byte_identical(tmp_path, monkeypatch):
    argv = ["gen-matrix", "--m", "4", "--n", "6", "--dist", "gaussian",
            "--seed", "9"]
    assert run_cli(argv + ["--out", "a.csv"], tmp_path, monkeypatch) == 0
    assert run_cli(argv + ["--out", "b.csv"], tmp_path, monkeypatch) == 0
    a = (tmp_path / "a.csv").read_bytes()
    b = (tmp_path / "b.csv").read_bytes()
    assert a == b
    assert a.decode().splitlines()[0] == "sparselab.matrix.v1"


def test_recover_end_to_end_identity(tmp_path, monkeypatch):
    matrix = matrix_from_entries(np.eye(5))
    signal = sample_sparse_signal(5, 2, "gaussian", 4)
    (tmp_path / "eye.csv").write_text(storage.matrix_to_csv(matrix))
    (tmp_path / "sig.csv").write_text(storage.signal_to_csv(signal))
    code = run_cli(["recover", "--matrix", str(tmp_path / "eye.csv"),
                    "--signal", str(tmp_path / "sig.csv"),
                    "--out", "rec.csv", "--solution-out", "sol.csv"],
                   tmp_path, monkeypatch)
    assert code == 0
    lines = (tmp_path / "rec.csv").read_text().splitlines()
    assert lines[0] == "sparselab.recovery.v1"
    row = dict(zip(lines[1].split(","), lines[2].split(",")))
    assert row["status"] == "optimal"
    assert row["exact_recovery"] == "True"
    solution = storage.load_signal(str(tmp_path / "sol.csv"))
    assert np.allclose(solution.dense(), signal.dense(), atol=1e-9)


def test_rub_and_nsp_commands(tmp_path, monkeypatch):
    code = run_cli(["rub", "--m", "5", "--n", "6", "--dist", "laplace",
                    "--k", "2", "--seed", "3", "--out", "rub.csv"],
                   tmp_path, monkeypatch)
    assert code == 0
    lines = (tmp_path / "rub.csv").read_text().splitlines()
    assert lines[0] == "sparselab.rub.v1"
    assert "exact_tiny" in lines[2]
    code = run_cli(["nsp", "--m", "3", "--n", "5", "--dist", "gaussian",
                    "--s", "1", "--out", "nsp.csv"], tmp_path, monkeypatch)
    assert code == 0
    assert (tmp_path / "nsp.csv").read_text().splitlines()[0] == "sparselab.nsp.v1"


def test_net_command_and_csv_roundtrip(tmp_path, monkeypatch):
    code = run_cli(["net", "--n", "8", "--s", "2", "--epsilon", "0.5",
                    "--probes", "500", "--out", "net.csv"],
                   tmp_path, monkeypatch)
    assert code == 0
    net = storage.net_from_csv((tmp_path / "net.csv").read_text())
    assert net.n == 8 and net.s == 2 and net.epsilon == 0.5
    assert net.size == sum(net.per_support_sizes.values())


def test_concentration_and_fit_pipeline(tmp_path, monkeypatch):
    code = run_cli(["concentration", "--n", "2", "--dist", "gaussian",
                    "--m-values", "20,80", "--trials", "200", "--seed", "2",
                    "--out", "conc.csv"], tmp_path, monkeypatch)
    assert code == 0
    lines = (tmp_path / "conc.csv").read_text().splitlines()
    assert lines[0] == "sparselab.concentration.v1"
    assert len(lines) == 4  # schema + header + one row per m

    code = run_cli(["phase-diagram", "--n", "16", "--s", "1,2", "--m", "2:2:16",
                    "--trials", "40", "--seed", "5", "--out", "ph.csv",
                    "--svg", "ph.svg"], tmp_path, monkeypatch)
    assert code == 0
    svg_text = (tmp_path / "ph.svg").read_text()
    assert svg_text.startswith("<svg") and "<rect" in svg_text
    code = run_cli(["fit", "--diagram", str(tmp_path / "ph.csv"),
                    "--out", "fit.csv"], tmp_path, monkeypatch)
    assert code == 0
    assert (tmp_path / "fit.csv").read_text().splitlines()[0] == "sparselab.fit.v1"


def test_fit_underdetermined_exit(tmp_path, monkeypatch):
    diagram_csv = tmp_path / "flat.csv"
    from sparselab.experiments import PhaseDiagram
    diagram = PhaseDiagram(n=8, s_grid=(1,), m_grid=(2, 4), trials_per_cell=1,
                           success=np.array([[0.0, 1.0]]),
                           dist=entry_distribution("laplace"),
                           value_law="gaussian", master_seed=0)
    diagram_csv.write_text(storage.phase_diagram_to_csv(diagram))
    code = run_cli(["fit", "--diagram", str(diagram_csv), "--out", "f.csv"],
                   tmp_path, monkeypatch)
    assert code == cli.EXIT_CONFIG
    assert not (tmp_path / "f.csv").exists()  # no partial output


def test_failed_command_leaves_no_output(tmp_path, monkeypatch):
    code = run_cli(["rub", "--m", "4", "--n", "12", "--k", "3",
                    "--budget", "10", "--out", "rub.csv"],
                   tmp_path, monkeypatch)
    assert code == cli.EXIT_SIZE  # C(12, 3) = 220 supports over budget 10
    assert not (tmp_path / "rub.csv").exists()


def test_exit_codes_for_error_classes(tmp_path, monkeypatch):
    params, runner, validate = cli.COMMANDS["gen-matrix"]

    def numerical_boom(_):
        raise NumericalError("boom")

    def assertion_boom(_):
        raise AssertionError("invariant violated")

    argv = ["gen-matrix", "--m", "2", "--n", "2", "--out", "x.csv"]
    monkeypatch.setitem(cli.COMMANDS, "gen-matrix", (params, numerical_boom, validate))
    assert run_cli(argv, tmp_path, monkeypatch) == cli.EXIT_NUMERICAL
    monkeypatch.setitem(cli.COMMANDS, "gen-matrix", (params, assertion_boom, validate))
    assert run_cli(argv, tmp_path, monkeypatch) == cli.EXIT_ASSERTION
    assert not (tmp_path / "x.csv").exists()


def test_runlog_digests_verify(tmp_path, monkeypatch):
    assert run_cli(["gen-matrix", "--m", "3", "--n", "3", "--seed", "1",
                    "--out", "m.csv"], tmp_path, monkeypatch) == 0
    assert run_cli(["gen-matrix", "--m", "3", "--n", "3", "--seed", "2",
                    "--out", "m2.bin", "--format", "bin"], tmp_path,
                   monkeypatch) == 0
    records = [json.loads(line) for line in
               (tmp_path / "runlog.jsonl").read_text().splitlines()]
    assert len(records) == 2
    for record in records:
        for path, digest in record["outputs"].items():
            actual = hashlib.sha256(open(path, "rb").read()).hexdigest()
            assert actual == digest


def test_binary_matrix_roundtrip(tmp_path, monkeypatch):
    dist = entry_distribution("custom_mixture")
    matrix = sample_matrix(4, 7, dist, 123)
    blob = storage.matrix_to_bytes(matrix)
    back = storage.matrix_from_bytes(blob)
    assert back.m == 4 and back.n == 7
    assert back.dist.kind == "custom_mixture"
    assert back.seed == 123
    assert np.array_equal(back.entries, matrix.entries)
    # CSV round trip is exact too (shortest round-trip decimals)
    again = storage.matrix_from_csv(storage.matrix_to_csv(matrix))
    assert np.array_equal(again.entries, matrix.entries)
