import filecmp
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from casiga import benchmarks as bm
from casiga.cli import RunConfig, main, run
from casiga.io import (load_patch, patch_from_dict, patch_to_dict, read_table, read_vtk_structured,
                       save_patch)


def test_patch_roundtrip(tmp_path):
    patch = bm.plate_patch(4)
    save_patch(patch, tmp_path / "p.json")
    back = load_patch(tmp_path / "p.json")
    assert back.knot_vectors == patch.knot_vectors
    assert np.array_equal(back.control_points, patch.control_points)
    assert np.array_equal(back.weights, patch.weights)


def test_patch_dict_validates():
    data = patch_to_dict(bm.cook_patch(2))
    data["weights"][0] = -1.0
    with pytest.raises(ValueError):
        patch_from_dict(data)


@settings(max_examples=30, deadline=None)
@given(benchmark=st.sampled_from(["cook", "plate_hole", "block3d"]),
       technology=st.sampled_from(["cs", "cas1", "cas2"]), quad=st.sampled_from([2, 3]),
       samples=st.integers(2, 12), fields=st.sampled_from(["none", "last", "all"]),
       output=st.text(st.characters(whitelist_categories=("L", "N")), min_size=1, max_size=12))
def test_config_text_roundtrip(benchmark, technology, quad, samples, fields, output):
    levels = 1 if benchmark == "block3d" else 5
    cfg = RunConfig(benchmark, technology, quad, levels, output, samples, fields)
    assert RunConfig.from_text(cfg.to_text()) == cfg


@pytest.mark.parametrize("kwargs", [
    dict(benchmark="bridge"), dict(benchmark="cook", technology="das"),
    dict(benchmark="cook", quad=4), dict(benchmark="cook", levels=-1),
    dict(benchmark="block3d", levels=3), dict(benchmark="cook", samples=1),
    dict(benchmark="cook", fields="some"),
])
def test_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


def test_config_defaults_and_aliases():
    assert RunConfig("plate").benchmark == "plate_hole"
    assert RunConfig("plate").levels == 8
    assert RunConfig("block").levels == 1
    with pytest.raises(ValueError):
        RunConfig.from_text("benchmark = cook\ncolour = red\n")


def test_invalid_technology_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "--benchmark", "cook", "--technology", "bbar"])
    assert err.value.code != 0
    assert "invalid choice" in capsys.readouterr().err


def test_missing_benchmark_exits_nonzero():
    with pytest.raises(SystemExit) as err:
        main(["run", "--levels", "2"])
    assert err.value.code != 0


def test_run_writes_table_and_fields(tmp_path):
    out = tmp_path / "res"
    status = main(["run", "--benchmark", "plate", "--technology", "cas1", "--quad", "2",
                   "--levels", "3", "--out", str(out), "--fields", "all"])
    assert status == 0
    rows = read_table(out / "plate_hole_cas1_q2.csv")
    assert [r["level"] for r in rows] == [1, 2, 3]
    assert [r["elements_per_direction"] for r in rows] == [2, 4, 8]
    e_u = [r["e_u"] for r in rows]
    assert np.all(np.diff(e_u) < 0)
    assert np.isnan(rows[0]["rate_u"]) and rows[1]["rate_u"] > 0
    vtk = read_vtk_structured(out / "plate_hole_cas1_q2_level3.vtk")
    assert vtk["dimensions"] == (17, 17, 1)
    r = np.hypot(vtk["points"][:, 0], vtk["points"][:, 1])
    assert_allclose(r[[0, 16]], [1.0, 4.0], rtol=1e-8)
    s = vtk["stress"]
    scale = np.abs(s).max()  # values are written with 9 significant digits
    assert_allclose(s[:, 2, 2], bm.PLATE_MATERIAL.nu * (s[:, 0, 0] + s[:, 1, 1]), rtol=0,
                    atol=1e-8 * scale)
    assert_allclose(vtk["hydrostatic_stress"], np.trace(s, axis1=1, axis2=2) / 3, rtol=0,
                    atol=1e-8 * scale)
    assert sorted(os.listdir(out)) == ["plate_hole_cas1_q2.csv"] + [
        "plate_hole_cas1_q2_level%d.vtk" % k for k in (1, 2, 3)]


def test_run_outputs_byte_identical(tmp_path):
    cfg_text = "benchmark = cook\ntechnology = cas2\nlevels = 3\nsamples = 4\n"
    (tmp_path / "run.cfg").write_text(cfg_text)
    for name in ("a", "b"):
        assert main(["run", "--config", str(tmp_path / "run.cfg"),
                     "--out", str(tmp_path / name)]) == 0
    files = sorted(os.listdir(tmp_path / "a"))
    assert files == ["cook_cas2_q3.csv", "cook_cas2_q3_level3.vtk"]
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", files, shallow=False)
    assert match == files


def test_cook_cli_table_approaches_reference_from_below(tmp_path):
    assert run(RunConfig("cook", "cs", 3, 4, str(tmp_path), fields="none")) == 0
    qoi = [r["qoi"] for r in read_table(tmp_path / "cook_cs_q3.csv")]
    assert np.all(np.diff(qoi) > 0) and qoi[-1] < bm.COOK_REFERENCE


def test_patch_subcommand(tmp_path):
    assert main(["patch", "--benchmark", "cook", "--elements", "4",
                 "--out", str(tmp_path / "c.json")]) == 0
    assert load_patch(tmp_path / "c.json").elements_per_direction == (4, 4)
    with pytest.raises(SystemExit):
        main(["patch", "--benchmark", "cook", "--elements", "3", "--out", str(tmp_path / "x")])


def test_numerical_failure_returns_nonzero(tmp_path, monkeypatch):
    from casiga.solver import SolverError

    def broken(*args, **kwargs):
        raise SolverError("nonpositive pivot")

    monkeypatch.setattr(bm, "solve_problem", broken)
    assert run(RunConfig("cook", levels=1, output=str(tmp_path))) == 1
