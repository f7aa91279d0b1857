import pandas
import pytest

from src.tasks.plotdata import FIGURES, PlotData, emit_plot_data


def sweep_csv(path, rows=3):
    df = pandas.DataFrame({
        "mod_freq_meV": [80.0 + i for i in range(rows)],
        "gap_nm": 10.0,
        "delta_eps": 0.4,
        "temperature_K": 300.0,
        "phi_q": [1e-3 * (i + 1) for i in range(rows)],
        "phi_t": -2e-4,
        "upsilon": 1e-4,
        "phi_q_order1": 1e-3,
        "phi_q_order2": 1e-5,
        "phi_q_order3": 1e-7,
        "dominance": 5.0,
    })
    df.to_csv(path, index=False)
    return str(path)


def read_dat(path):
    return pandas.read_csv(path, sep="\t")


def test_flux_sweep_projection(tmp_path):
    csv = sweep_csv(tmp_path / "flux_sweep.csv")
    out = emit_plot_data(csv, "fig1d")
    assert out == str(tmp_path / "fig1d.dat")
    data = read_dat(out)
    assert list(data.columns) == FIGURES["fig1d"][1]
    assert data["omega_meV"].tolist() == [80.0, 81.0, 82.0]
    assert data["phi_q"].tolist() == pytest.approx([1e-3, 2e-3, 3e-3])


def test_output_is_deterministic(tmp_path):
    csv = sweep_csv(tmp_path / "flux_sweep.csv")
    a = emit_plot_data(csv, "fig3d", out=str(tmp_path / "a.dat"))
    b = emit_plot_data(csv, "fig3d", out=str(tmp_path / "b.dat"))
    with open(a, "rb") as fa, open(b, "rb") as fb:
        assert fa.read() == fb.read()
    # an existing default target is not overwritten
    first = emit_plot_data(csv, "fig3d")
    second = emit_plot_data(csv, "fig3d")
    assert first != second


def test_several_inputs_are_numbered(tmp_path):
    inputs = [sweep_csv(tmp_path / ("flux_sweep_%d.csv" % i), rows=2) for i in range(3)]
    data = read_dat(emit_plot_data(inputs, "fig2b"))
    assert data.columns[0] == "series"
    assert data["series"].tolist() == [0, 0, 1, 1, 2, 2]


def test_spectrum_projection_negates(tmp_path):
    path = tmp_path / "spectrum_000.csv"
    pandas.DataFrame({"omega_meV": [30.0, 40.0], "F_body1_l-1": [2.0, 3.0]}).to_csv(path, index=False)
    data = read_dat(emit_plot_data(str(path), "fig1e"))
    assert data["minus_F_body1_l-1"].tolist() == [-2.0, -3.0]


def test_indicator_projection_adds_contour(tmp_path):
    path = tmp_path / "indicator_grid.csv"
    rows = []
    for z, values in ((1.0, (-1.0, 1.0)), (2.0, (-1.0, -0.5))):
        for T, v in zip((0.0, 100.0), values):
            rows.append({"z_nm": z, "T_K": T, "indicator_normalized": v})
    pandas.DataFrame(rows).to_csv(path, index=False)
    data = read_dat(emit_plot_data(str(path), "fig3a"))
    assert data["kind"].tolist() == ["grid"] * 4 + ["contour"]
    contour = data[data["kind"] == "contour"].iloc[0]
    assert (contour["z_nm"], contour["T_K"]) == (1.0, 50.0)


def test_errors(tmp_path):
    csv = sweep_csv(tmp_path / "flux_sweep.csv")
    with pytest.raises(ValueError, match="unknown figure"):
        emit_plot_data(csv, "fig1x")
    with pytest.raises(ValueError):
        emit_plot_data([], "fig1d")
    pandas.DataFrame({"mod_freq_meV": [80.0]}).to_csv(tmp_path / "thin.csv", index=False)
    with pytest.raises(ValueError, match="missing"):
        emit_plot_data(str(tmp_path / "thin.csv"), "fig3e")
    empty = tmp_path / "empty.csv"
    empty.write_text("omega_meV,phi_q\n")
    with pytest.raises(ValueError, match="empty"):
        emit_plot_data(str(empty), "fig1d")


def test_task_collects_source_files(tmp_path):
    class Source:
        files = [sweep_csv(tmp_path / "flux_sweep.csv"), str(tmp_path / "spectrum_000.csv")]

    task = PlotData("fig1d", sources=[Source()])
    task.setup(str(tmp_path), show_progress=False)
    list(task.run())
    task.save()
    assert len(task.files) == 1
    assert task.files[0].endswith("fig1d.dat")
    assert read_dat(task.files[0]).shape == (3, 4)
