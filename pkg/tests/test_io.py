import json

import numpy as np
import pytest
from conftest import smooth_rect_state, smooth_torus_state

from vortexflow import io, moment
from vortexflow.newton import SolveReport


@pytest.mark.parametrize("state", [smooth_rect_state(8, tau=1.3),
                                   smooth_torus_state(8, degree=-2, lx=3.0)])
def test_state_round_trip_bit_exact(tmp_path, state):
    state.u[2, 3] = complex(np.nextafter(1.0, 2.0), -5e-324)
    path = io.save_state(tmp_path / "s.json", state)
    back = io.load_state(path)
    assert back.grid.spec == state.grid.spec
    assert back.tau == state.tau and back.degree == state.degree
    for a, b in ((back.ax, state.ax), (back.ay, state.ay), (back.u, state.u)):
        assert a.tobytes() == b.tobytes()


def test_state_file_layout(tmp_path):
    s = smooth_rect_state(4)
    doc = json.loads(io.save_state(tmp_path / "s.json", s).read_text())
    assert doc["format_version"] == 1
    assert set(doc) == {"format_version", "grid", "tau", "degree", "ax", "ay", "u_re", "u_im"}
    assert len(doc["u_re"]) == s.grid.node_count


@pytest.mark.parametrize("mutate, match", [
    (lambda d: d.update(format_version=2), "format_version"),
    (lambda d: d.pop("ay"), "lacks ay"),
    (lambda d: d["u_im"].pop(), "entries"),
    (lambda d: d["grid"].update(nx=-1), "grid"),
    (lambda d: d.update(tau=-1.0), "tau"),
])
def test_state_file_errors(tmp_path, mutate, match):
    doc = io.state_to_dict(smooth_rect_state(4))
    mutate(doc)
    with pytest.raises(io.StateFileError, match=match):
        io.state_from_dict(doc)


def test_state_file_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(io.StateFileError, match="invalid JSON"):
        io.load_state(p)
    with pytest.raises(io.StateFileError):
        io.state_from_dict([1, 2])


def test_trace_header_frozen(tmp_path):
    assert io.TRACE_COLUMNS == ("step", "t", "functional", "energy", "dbar_l2", "f_l2", "f_max",
                                "flux", "min_abs_u", "energy_identity_residual")
    s = smooth_rect_state(8)
    rows = [moment.diagnostics(s)] * 2
    p = io.write_trace(tmp_path / "t.csv", [0, 5], [0.0, 0.1], rows)
    assert p.read_text().splitlines()[0] == ",".join(io.TRACE_COLUMNS)
    back = io.read_trace(p)
    assert list(back["step"]) == [0, 5]
    assert back["f_l2"][1] == rows[1].f_l2
    bad = tmp_path / "bad.csv"
    bad.write_text("step,t\n0,0\n")
    with pytest.raises(ValueError):
        io.read_trace(bad)


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "sub" / "a.txt", "one")
    io.atomic_write(tmp_path / "sub" / "a.txt", "two")
    assert (tmp_path / "sub" / "a.txt").read_text() == "two"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.txt"]


def test_oracle_trace(tmp_path):
    xs = np.array([[1 + 2j, 0.5], [0.9 + 1j, 0.4]])
    p = io.write_oracle_trace(tmp_path / "o.csv", [0.0, 0.1], xs, [0.25, 0.125])
    lines = p.read_text().splitlines()
    assert lines[0] == "t,re_0,im_0,re_1,im_1,phi_sq"
    assert lines[1] == "0.0,1.0,2.0,0.5,0.0,0.5"


def test_plot_script_reads_csv(tmp_path):
    pytest.importorskip("matplotlib")
    s = smooth_rect_state(8)
    io.write_trace(tmp_path / "run_trace.csv", [0, 1], [0.0, 0.1], [moment.diagnostics(s)] * 2)
    script = io.write_plot_script(tmp_path / "run_plot.py", "run_trace.csv")
    compile(script.read_text(), str(script), "exec")
    import runpy
    import sys
    argv = sys.argv
    try:
        sys.argv = [str(script), str(tmp_path / "out.png")]
        runpy.run_path(str(script), run_name="__main__")
    finally:
        sys.argv = argv
    assert (tmp_path / "out.png").stat().st_size > 0


def test_report_dict_is_json_clean():
    rep = SolveReport(np.zeros(3), 2, np.float64(1e-12), [0.1], "converged", [1.0, 1e-12],
                      {"bound_ok": np.bool_(True), "c_est": np.float64(0.05)})
    doc = io.report_to_dict(rep)
    assert json.loads(json.dumps(doc))["extra"]["bound_ok"] is True
    assert "solution" not in doc
