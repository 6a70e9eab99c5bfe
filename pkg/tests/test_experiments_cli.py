import math

import numpy as np
import pytest

from fracsinc import cli
from fracsinc.experiments import ExperimentConfig, linear_fit, oroc
from fracsinc.fem import ShiftedSolveError


# {{{ rates


def test_oroc_examples():
    assert oroc([4.0e-4, 1.0e-4], [0.1, 0.05]) == pytest.approx([2.0])
    assert oroc([2.0e-3, 1.0e-3], [8.0, 16.0]) == pytest.approx([1.0])
    assert oroc([1.0e-3, 1.0e-3], [8.0, 16.0]) == pytest.approx([0.0])


def test_oroc_rejects_bad_input():
    with pytest.raises(ValueError):
        oroc([1.0, 0.5, 0.25], [1.0, 2.0, 1.5])
    with pytest.raises(ValueError):
        oroc([1.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        oroc([1.0, 0.5], [1.0])


def test_linear_fit():
    x = np.arange(5.0)
    slope, r2 = linear_fit(x, 3.0 - 2.0 * x)
    assert slope == pytest.approx(-2.0)
    assert r2 == pytest.approx(1.0)


def test_config_validation():
    for kwargs in (
        {"gamma": 1.5},
        {"beta": 0.0},
        {"d": 1.0},
        {"b": 10.0},
        {"problem": "nope"},
        {"contour_sign": 0},
        {"N": ()},
        {"levels": (0,)},
    ):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)


# }}}


# {{{ command line


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


@pytest.mark.parametrize(("args", "expected"), [
    (("--gamma", "0.5", "--re", "0"), "1.000000000000"),
    (("--gamma", "1", "--re", "1"), "2.718281828459"),
    (("--gamma", "0.5", "--re", "-1"), "0.427583576156"),
])
def test_ml_eval(capsys, args, expected):
    code, out = run(capsys, "ml-eval", *args)
    assert code == 0
    assert out.strip() == expected


def test_ml_eval_bad_gamma(capsys):
    code, _ = run(capsys, "ml-eval", "--gamma", "0", "--re", "1")
    assert code == 2


def table(out):
    lines = out.splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, body


def test_convergence_space_table(capsys, tmp_path):
    path = tmp_path / "space.csv"
    argv = ["convergence-space", "--levels", "3..5", "--out", str(path)]
    assert cli.main(argv) == 0
    first = path.read_bytes()
    assert cli.main(argv) == 0
    assert path.read_bytes() == first

    comments, body = table(first.decode())
    assert comments[0] == "# fracsinc convergence-space"
    assert comments[1].startswith("# config: problem=hom-1d gamma=0.5 beta=0.5")
    assert body[0] == cli.CSV_HEADER
    assert len(body) == 4
    first_row = body[1].split(",")
    assert first_row[3] == "" and first_row[4] == ""
    rates = [float(r.split(",")[3]) for r in body[2:]]
    assert all(0.5 < r < 2.5 for r in rates)
    # 15 significant digits
    assert len(first_row[1].replace(".", "").split("e")[0].lstrip("0")) <= 15


def test_sinc_decay_has_fit_note(capsys):
    code, out = run(capsys, "sinc-decay", "--N", "25,50")
    assert code == 0
    comments, body = table(out)
    assert any(c.startswith("# fit: slope") for c in comments)
    assert [float(r.split(",")[0]) for r in body[1:]] == [25.0, 50.0]


def test_config_file_and_flag_override(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# study\nproblem = hom-1d\ngamma=0.7\nbeta = 0.25\nlevels=3,4\n")
    code, out = run(capsys, "convergence-space", "--config", str(conf), "--beta", "0.75")
    assert code == 0
    comments, body = table(out)
    assert "gamma=0.7 " in comments[1]
    assert "beta=0.75 " in comments[1]
    assert "levels=3,4 " in comments[1]
    assert len(body) == 3


@pytest.mark.parametrize("text", [
    "gamma=2\n",
    "unknown=1\n",
    "gamma\n",
    "levels=a,b\n",
])
def test_bad_config_file(capsys, tmp_path, text):
    conf = tmp_path / "bad.conf"
    conf.write_text(text)
    code, _ = run(capsys, "convergence-space", "--config", str(conf))
    assert code == 2


def test_missing_config_file(capsys, tmp_path):
    code, _ = run(capsys, "convergence-space", "--config", str(tmp_path / "missing"))
    assert code == 2


def test_bad_flag_values(capsys):
    assert run(capsys, "convergence-space", "--gamma", "1.2")[0] == 2
    assert run(capsys, "convergence-space", "--problem", "nonhom-2d")[0] == 2
    assert run(capsys, "solve", "--problem", "hom-2d", "--levels", "3,4")[0] == 2


def test_solver_error_exit_code(capsys, monkeypatch, tmp_path):
    def fail(*args, **kwargs):
        raise ShiftedSolveError("singular", condition=math.inf)

    monkeypatch.setattr(cli, "convergence_space", fail)
    path = tmp_path / "out.csv"
    code, _ = run(capsys, "convergence-space", "--out", str(path))
    assert code == 3
    # nothing is written on failure
    assert not path.exists()


def test_solve_dump(capsys):
    code, out = run(capsys, "solve", "--problem", "hom-1d", "--levels", "3", "--N", "60")
    assert code == 0
    comments, body = table(out)
    assert body[0] == "x,value"
    assert len(body) == 1 + 7
    x, u = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]]).T
    assert x == pytest.approx(np.arange(1, 8) / 8.0)
    # symmetric, positive profile for v = 1
    assert u == pytest.approx(u[::-1], rel=1.0e-8)
    assert np.all(u > 0.0)


def test_solve_dump_2d(capsys):
    code, out = run(capsys, "solve", "--levels", "2", "--N", "40")
    assert code == 0
    _, body = table(out)
    assert body[0] == "x1,x2,value"
    assert len(body) == 1 + 9


# }}}
