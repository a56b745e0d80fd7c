import csv
import io
import json
import subprocess
from pathlib import Path

import numpy as np
import pytest

from cidkernels import cli
from cidkernels.cli import fmt, main, parse_grid

SPECS = Path(__file__).resolve().parents[1] / "docs" / "specs"


def spec(name: str) -> str:
    return str(SPECS / f"{name}.json")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def rows(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO("".join(l + "\n" for l in text.splitlines() if not l.startswith("#")))))


def write_json(tmp_path, name, doc) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.mark.parametrize(
    "model,value",
    [("model-cauchy", 0.3183098861837907), ("model-holtsmark", 0.2873527514521645), ("model-nig", 0.5208038299916701)],
)
def test_density_examples(capsys, model, value):
    code, out, _ = run(capsys, "density", "--model", spec(model), "--x", "0")
    assert code == 0
    header, row = rows(out)
    assert header == ["x", "density", "method"]
    assert float(row[1]) == pytest.approx(value, abs=1e-12)
    assert row[2] == "closed-form"


def test_density_grid(capsys):
    code, out, _ = run(capsys, "density", "--model", spec("target-gaussian"), "--grid=-1:1:5")
    table = rows(out)
    assert code == 0 and len(table) == 6
    assert [float(r[0]) for r in table[1:]] == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_parse_grid_and_format():
    assert list(parse_grid("0:1:3")) == [0.0, 0.5, 1.0]
    assert float(fmt(0.1)) == 0.1
    assert fmt(1 / 3) == "0.33333333333333331"


def test_kernel_mean_header(capsys):
    code, out, _ = run(capsys, "kernel-mean", "--model", spec("model-cauchy"), "--kernel", spec("kernel-cauchy"), "--x", "0")
    assert code == 0
    first = out.splitlines()[0]
    assert first.startswith("# mean: ")
    desc = json.loads(first[len("# mean: "):])
    assert desc["family"] == "stable1d" and desc["sigma"] == 2.0
    assert float(rows(out)[1][1]) == pytest.approx(1 / (2 * 3.141592653589793), abs=1e-15)


def test_inner_and_mmd(capsys):
    code, out, _ = run(capsys, "inner", "--model", spec("model-cauchy"), "--model", spec("model-cauchy"),
                       "--kernel", spec("kernel-cauchy"))
    assert code == 0
    assert rows(out)[0] == ["value", "method", "est_error"]
    assert float(rows(out)[1][0]) == pytest.approx(1 / (3 * 3.141592653589793), abs=1e-15)
    code, out, _ = run(capsys, "mmd", "--model", spec("target-gaussian"), "--model", spec("target-gaussian"),
                       "--kernel", spec("kernel-gaussian"))
    assert code == 0 and abs(float(rows(out)[1][0])) <= 1e-10


def test_numeric_path_reports_error(capsys):
    code, out, _ = run(capsys, "inner", "--model", spec("target-gaussian"), "--model", spec("model-cauchy"),
                       "--kernel", spec("kernel-laplace"))
    value, method, err = rows(out)[1]
    assert code == 0 and method == "numeric-cf" and float(err) >= 0


def test_recover_round_trip(capsys):
    code, out, _ = run(capsys, "recover", "--target", spec("target-gaussian"), "--candidates", spec("candidates-gaussian"),
                       "--kernel", spec("kernel-gaussian"), "--ridge", "1e-10")
    assert code == 0
    table = rows(out)
    assert table[0] == ["candidate", "family", "weight"]
    assert float(table[2][2]) >= 0.999
    assert "converged=true" in out.splitlines()[-1]


def test_recover_from_samples(capsys, tmp_path):
    code, out, _ = run(capsys, "sample", "--model", spec("target-gaussian"), "--n", "2000", "--seed", "5")
    samples = tmp_path / "s.csv"
    samples.write_text(out)
    code, out, _ = run(capsys, "recover", "--samples", str(samples), "--candidates", spec("candidates-gaussian"),
                       "--kernel", spec("kernel-gaussian"))
    assert code == 0 and float(rows(out)[2][2]) >= 0.9


@pytest.mark.parametrize("kernel", ["kernel-laplace", "kernel-gaussian", "kernel-cauchy", "kernel-snig", "kernel-isotropic"])
def test_check_characteristic_pass(capsys, kernel):
    code, out, _ = run(capsys, "check-characteristic", "--kernel", spec(kernel), "--n-points", "257")
    assert code == 0


def test_sample_determinism(capsys):
    _, a, _ = run(capsys, "sample", "--model", spec("model-nig"), "--n", "20", "--seed", "3")
    _, b, _ = run(capsys, "sample", "--model", spec("model-nig"), "--n", "20", "--seed", "3")
    assert a == b and len(rows(a)) == 21


def test_byte_identical_output_files(capsys, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"o{i}.csv"
        main(["density", "--model", spec("model-holtsmark"), "--grid=-3:3:7", "--out", str(path)])
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_exit_codes(capsys, tmp_path):
    unknown = write_json(tmp_path, "u.json", {"v": 1, "family": "gaussain", "params": {}})
    code, _, err = run(capsys, "density", "--model", unknown, "--x", "0")
    assert code == 2 and "gaussain" in err
    extra = write_json(tmp_path, "e.json", {"v": 1, "family": "stable1d", "params": {"alpha": 1.0, "sigma": 1.0, "sgima": 2}})
    assert run(capsys, "density", "--model", extra, "--x", "0")[0] == 2
    version = write_json(tmp_path, "v.json", {"v": 2, "family": "stable1d", "params": {"alpha": 1.0, "sigma": 1.0}})
    assert run(capsys, "density", "--model", version, "--x", "0")[0] == 2
    near_one = write_json(tmp_path, "n.json", {"v": 1, "family": "stable1d", "params": {"alpha": 1.00001, "sigma": 1.0, "beta": 0.5}})
    assert run(capsys, "density", "--model", near_one, "--x", "0")[0] == 3
    code, _, err = run(capsys, "kernel-mean", "--model", spec("model-subgaussian"), "--kernel", spec("kernel-isotropic"),
                       "--x", "0,0")
    assert code == 4 and "subgaussian" in err
    gh1 = write_json(tmp_path, "g.json", {"v": 1, "family": "gh", "params": {"lambda": 1.0, "alpha": 1.0, "delta": 1.0}})
    assert run(capsys, "sample", "--model", gh1, "--n", "3")[0] == 4


def test_certificate_log_mode_survives_underflow(capsys):
    # exp(-theta^2 / 2) underflows long before theta = 1000; the log-CF stays finite
    assert run(capsys, "check-characteristic", "--kernel", spec("kernel-gaussian"), "--theta-max", "1000",
               "--n-points", "64")[0] == 0


class _BoxKernel:
    """Uniform density on [-1, 1]: CF sin(t) / t changes sign, so no JSON family produces it."""

    dim = 1

    def log_cf(self, theta):
        t = np.asarray(theta, dtype=float)
        return np.log(np.sinc(t / np.pi).astype(complex))

    def describe(self):
        return {"family": "box"}


def test_certificate_failure_exit(capsys, monkeypatch):
    monkeypatch.setattr(cli, "load_kernel", lambda path: _BoxKernel())
    code, out, _ = run(capsys, "check-characteristic", "--kernel", "unused.json", "--n-points", "257")
    assert code == 5 and "box" in out


def test_console_script():
    res = subprocess.run(["cidk", "density", "--model", spec("model-cauchy"), "--x", "0"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.31830988618379" in res.stdout
