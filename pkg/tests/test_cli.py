import csv
import json

import numpy as np
import pytest

from hsewald.cli import main


def run(*argv):
    return main(list(argv))


def test_gen_direct_ewald_roundtrip(tmp_path):
    sysfile = str(tmp_path / "sys.json")
    assert run("gen", "--kernel", "rotlet", "--geometry", "half",
               "-N", "80", "-L", "2.0", "--seed", "5",
               "--out", sysfile) == 0
    dvel = str(tmp_path / "direct.csv")
    assert run("direct", sysfile, "--out", dvel) == 0
    evel = str(tmp_path / "ewald.csv")
    assert run("ewald", sysfile, "--xi", "4.0", "--rc", "1.0",
               "--M", "30", "--out", evel,
               "--cache-dir", str(tmp_path)) == 0
    d = np.loadtxt(dvel, delimiter=",", skiprows=1)
    e = np.loadtxt(evel, delimiter=",", skiprows=1)
    assert d.shape == (80, 7)
    err = np.sqrt(np.mean(np.sum((d[:, 4:] - e[:, 4:]) ** 2, 1))
                  / np.mean(np.sum(d[:, 4:] ** 2, 1)))
    assert err < 1e-5
    with open(dvel + ".json") as fh:
        summary = json.load(fh)
    assert summary["N"] == 80 and summary["geometry"] == "half"
    with open(dvel) as fh:
        header = next(csv.reader(fh))
    assert header == ["index", "x", "y", "z", "u1", "u2", "u3"]


def test_ewald_real_only(tmp_path):
    sysfile = str(tmp_path / "sys.json")
    run("gen", "--kernel", "stokeslet", "--geometry", "free",
        "-N", "40", "-L", "2.0", "--out", sysfile)
    out = str(tmp_path / "real.csv")
    assert run("ewald", sysfile, "--xi", "3.0", "--rc", "0.8",
               "--M", "20", "--real-only", "--out", out) == 0
    with open(out + ".json") as fh:
        assert json.load(fh)["component"] == "real"


def test_params_json(tmp_path, capsys):
    assert run("params", "--kernel", "stokeslet", "--geometry", "half",
               "-N", "200", "-L", "3.0", "--eps", "1e-6",
               "--xi", "4.0") == 0
    info = json.loads(capsys.readouterr().out)
    for key in ("rc", "M", "eta", "L_tilde", "M_tilde", "k_inf"):
        assert key in info
    assert info["M"] % 2 == 0 and info["rc"] > 0


def test_precompute_build_and_inspect(tmp_path, capsys):
    prefix = str(tmp_path / "gt")
    assert run("precompute", "--kernel", "rotlet", "--geometry", "free",
               "-L", "2.0", "--M", "16", "--P", "8", "--xi", "3.0",
               "--out-prefix", prefix) == 0
    capsys.readouterr()
    assert run("precompute", "--inspect", prefix + "_harmonic.segt") == 0
    info = json.loads(capsys.readouterr().out)
    assert info["kind"] == "harmonic" and len(info["dims"]) == 3


def test_bench_sweep_real_outputs(tmp_path):
    out = str(tmp_path / "sweep.csv")
    assert run("bench", "sweep-real", "--kernel", "rotlet",
               "--geometry", "free", "-N", "150", "-L", "2.0",
               "--xi", "3.0", "--rc-num", "3", "--out", out) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 3
    assert all(float(r["e_delta_u"]) >= 0 for r in rows)
    manifest = json.load(open(out + ".json"))
    assert manifest["records"] == 3


def test_unknown_kernel_rejected(capsys):
    with pytest.raises(SystemExit):
        run("gen", "--kernel", "sourcelet", "--out", "x.json")
