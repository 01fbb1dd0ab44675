import json
import subprocess
import sys

import numpy as np
import pytest

from causality_kit import cli, schemas
from causality_kit.choi import PartySpec, measure_prepare, trash_instrument
from causality_kit.correlations import ProbabilityTable, Scenario
from causality_kit.gallery import ocb_process, switch_process, switch_reduced_expected
from causality_kit.polytope import causal_bound, ocb_game
from causality_kit.procmat import ProcessMatrix, probability_table, validate


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def ocb_file(tmp_path):
    return write(tmp_path / "ocb.json", ocb_process().to_dict())


def test_validate(capsys, ocb_file):
    code, out, _ = run(capsys, "validate", ocb_file)
    report = json.loads(out)
    schemas.check(report, schemas.VALIDATION_REPORT)
    assert code == 0 and report == json.loads(cli.dump_json(validate(ocb_process()).to_dict()))


def test_validate_failure(capsys, tmp_path):
    w = ocb_process()
    bad = write(tmp_path / "bad.json", ProcessMatrix(w.parties, 2 * w.matrix).to_dict())
    code, out, _ = run(capsys, "validate", bad)
    assert code == 2 and not json.loads(out)["ok"]


def test_text_format(capsys, ocb_file):
    code, out, _ = run(capsys, "validate", ocb_file, "--format", "text")
    assert code == 0 and "ok: True" in out


def test_signaling(capsys, ocb_file):
    code, out, _ = run(capsys, "signaling", ocb_file, "--from", "A")
    assert code == 0
    assert json.loads(out)["no_signaling"] is False
    code, out, _ = run(capsys, "signaling", ocb_file)
    assert len(json.loads(out)["bipartitions"]) == 2


def test_probe_matches_library(capsys, tmp_path, ocb_file):
    a, b = ocb_process().parties
    z0 = np.diag([1.0, 0.0])
    inst_a = measure_prepare(a, [z0, np.eye(2) - z0], [z0, z0])
    inst_b = trash_instrument(b)
    path = write(tmp_path / "inst.json", {"instruments": [[inst_a.to_dict()], [inst_b.to_dict()]]})
    code, out, _ = run(capsys, "probe", ocb_file, path)
    schemas.check(json.loads(out), schemas.TABLE)
    expected = probability_table(ocb_process(), [[inst_a], [inst_b]]).p
    assert code == 0 and np.allclose(json.loads(out)["p"], expected, atol=1e-12)


def test_causal_bound_exact(capsys, tmp_path):
    g = write(tmp_path / "game.json", ocb_game().to_dict())
    code, out, _ = run(capsys, "causal-bound", g, "--exact")
    report = json.loads(out)
    schemas.check(report, schemas.BOUND_REPORT)
    assert code == 0 and report == causal_bound(ocb_game(), exact=True).to_dict() == {"bound": "3/4", "exact": True}


def test_causal_test_exit_codes(capsys, tmp_path):
    sc = Scenario(("A", "B"), (2, 2), (2, 2))
    causal = np.full(sc.shape, 0.25)
    two_way = np.zeros(sc.shape)
    for x in range(2):
        for y in range(2):
            two_way[x, y, y, x] = 1
    for table, expected in ((causal, 0), (two_way, 4)):
        path = write(tmp_path / "t.json", ProbabilityTable(sc, table).to_dict())
        code, out, _ = run(capsys, "causal-test", path)
        schemas.check(json.loads(out), schemas.FEASIBILITY_REPORT)
        assert code == expected


def test_sep_test(capsys, tmp_path, ocb_file):
    red = write(tmp_path / "red.json", switch_reduced_expected().to_dict())
    code, out, _ = run(capsys, "sep-test", red, "--witness")
    report = json.loads(out)
    schemas.check(report, schemas.FEASIBILITY_REPORT)
    assert code == 0 and set(report["witness"]) == {"A<B", "B<A"}
    code, out, _ = run(capsys, "sep-test", ocb_file, "--max-iterations", "300")
    assert code == 3 and json.loads(out)["status"] == "inconclusive"


def test_ecs_test_certified(capsys, tmp_path):
    path = write(tmp_path / "switch.json", switch_process().to_dict())
    code, out, _ = run(capsys, "ecs-test", path)
    assert code == 4 and json.loads(out)["status"] == "certified-infeasible"


def test_wrong_party_count(capsys, ocb_file):
    code, _, err = run(capsys, "ecs-test", ocb_file)
    assert code == 1 and "error" in json.loads(err)


def test_reproduce_and_emit(capsys, tmp_path):
    target = tmp_path / "switch.json"
    code, out, _ = run(capsys, "reproduce", "switch", "--emit-matrix", str(target))
    report = json.loads(out)
    schemas.check(report, schemas.PIPELINE_REPORT)
    assert code == 0 and report["verdict"] == "causal, not causally separable"
    assert report["emitted"] == [str(target), str(tmp_path / "switch-reduced.json")]
    back = ProcessMatrix.from_dict(json.loads(target.read_text()))
    assert np.max(np.abs(back.matrix - switch_process().matrix)) <= 1e-12


def test_reproduce_is_byte_identical(capsys):
    _, first, _ = run(capsys, "reproduce", "ocb", "--seed", "7")
    _, second, _ = run(capsys, "reproduce", "ocb", "--seed", "7")
    assert first == second


def test_env_seed(monkeypatch):
    monkeypatch.setenv("CAUSALITY_KIT_SEED", "99")
    args = cli.build_parser().parse_args(["reproduce", "ocb"])
    assert cli.config_from_args(args).seed == 99
    args = cli.build_parser().parse_args(["reproduce", "ocb", "--seed", "5"])
    assert cli.config_from_args(args).seed == 5


def test_bad_env_seed(capsys, monkeypatch, ocb_file):
    monkeypatch.setenv("CAUSALITY_KIT_SEED", "abc")
    code, _, _ = run(capsys, "validate", ocb_file)
    assert code == 1


def test_tolerance_override(monkeypatch):
    args = cli.build_parser().parse_args(["validate", "x.json", "--tol-psd=-1e-6"])
    assert cli.config_from_args(args).tolerances.psd == -1e-6


@pytest.mark.parametrize("argv", [[], ["bogus"], ["validate"], ["causal-bound", "g.json", "--nope"],
                                  ["suite", "--only", "x"]])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 64


def test_io_errors(capsys, tmp_path):
    assert run(capsys, "validate", str(tmp_path / "missing.json"))[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "validate", str(bad))[0] == 1
    wrong = write(tmp_path / "wrong.json", {"slots": []})
    code, _, err = run(capsys, "validate", wrong)
    assert code == 1 and "expected format" in json.loads(err)["error"]


def test_suite_subset(capsys):
    code, out, err = run(capsys, "suite", "--only", "4")
    report = json.loads(out)
    schemas.check(report, schemas.SUITE_REPORT)
    assert code == 0 and "[PASS] criterion 4" in err


def test_console_script(tmp_path):
    path = write(tmp_path / "ocb.json", ocb_process().to_dict())
    proc = subprocess.run([sys.executable, "-m", "causality_kit.cli", "validate", path],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["ok"]


def test_instrument_dimension_mismatch(capsys, tmp_path, ocb_file):
    inst = trash_instrument(PartySpec("A", 3, 2)).to_dict()
    path = write(tmp_path / "inst.json", {"instruments": [[inst], [inst]]})
    assert run(capsys, "probe", ocb_file, path)[0] == 1
