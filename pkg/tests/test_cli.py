import csv
import io
import json
import struct

import numpy as np
import pytest

from deconwave.cli import MAGIC, main, read_matrix, write_matrix


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


SMALL = ["--M", 32, "--N", 128, "--reps", 3]


def test_rates_examples(capsys):
    code, out, _ = run(["rates", "--s1", 3, "--s2", 1, "--nu", 1, "--p", 2], capsys)
    assert code == 0
    fields = dict(item.split("=") for item in out.split())
    assert fields["branch"] == "1"
    assert float(fields["d"]) == pytest.approx(2 / 3, abs=1e-15)
    assert float(fields["d1"]) == 1
    code, out, _ = run(["rates", "--s1", 1, "--s2", 1, "--nu", 1, "--p", 2], capsys)
    assert "branch=2" in out and float(out.split("d=")[1].split()[0]) == pytest.approx(0.4)


def test_rates_invalid_p(capsys):
    code, _, err = run(["rates", "--s1", 1, "--s2", 1, "--nu", 1, "--p", 0.5], capsys)
    assert code == 2 and "p" in err


def test_benchmark_zero_reps(capsys):
    code, _, err = run(["benchmark", "--reps", 0], capsys)
    assert code == 2 and "n_rep" in err


def test_benchmark_row_and_embedded_config(capsys, tmp_path):
    out = tmp_path / "bench.csv"
    code, _, _ = run(["benchmark", *SMALL, "--snr1", 10, 30, "--out", out], capsys)
    assert code == 0
    text = out.read_text()
    config_line = next(l for l in text.splitlines() if l.startswith("# config: "))
    cfg = json.loads(config_line[len("# config: "):])
    assert cfg["n_rep"] == 3 and cfg["M"] == [32]
    rows = table(text)
    assert len(rows) == 2
    assert list(rows[0]) == ["f_t", "f_u", "M", "N", "snr1_db", "snr2_db", "J", "Jprime",
                             "mean_mise", "sd_mise", "n_rep", "seed", "wall_time_s"]
    assert rows[0]["f_t"] == "HeaviSine" and rows[1]["snr1_db"] == "30"
    assert float(rows[1]["mean_mise"]) <= float(rows[0]["mean_mise"])


def test_benchmark_byte_identical_apart_from_wall_time(capsys, tmp_path):
    outs = []
    path = tmp_path / "bench.csv"
    for _ in range(2):
        code, _, _ = run(["benchmark", *SMALL, "--seed", 7, "--out", path], capsys)
        assert code == 0
        outs.append(path.read_text())

    def strip(text):
        return [l if l.startswith("#") else l.rsplit(",", 1)[0] for l in text.splitlines()]

    assert strip(outs[0]) == strip(outs[1])


def test_jobs_do_not_change_results(capsys, tmp_path):
    res = []
    for jobs in (1, 2):
        path = tmp_path / f"j{jobs}.csv"
        assert run(["benchmark", *SMALL, "--jobs", jobs, "--out", path], capsys)[0] == 0
        res.append([r["mean_mise"] for r in table(path.read_text())])
    assert res[0] == res[1]


def test_table1_cell_flag(capsys):
    code, out, _ = run(["benchmark", "--table1-cell", "heavisine", "quadratic", 128, 512,
                        "--snr1", 10, "--seed", 7, "--reps", 20], capsys)
    assert code == 0
    row = table(out)[0]
    assert (row["f_t"], row["f_u"], row["M"], row["N"], row["seed"]) == (
        "HeaviSine", "Quadratic", "128", "512", "7")
    assert 0.0085 / 2.5 < float(row["mean_mise"]) < 0.0085 * 2.5


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("DECONWAVE_SEED", "42")
    code, out, _ = run(["benchmark", *SMALL], capsys)
    assert code == 0 and table(out)[0]["seed"] == "42"
    code, out, _ = run(["benchmark", *SMALL, "--seed", 5], capsys)
    assert table(out)[0]["seed"] == "5"


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("M: 32\nN: 128\nn_rep: 2\nsnr1_db: [10, 20]\nseed: 3\n")
    code, out, _ = run(["benchmark", "--config", cfg], capsys)
    assert code == 0
    rows = table(out)
    assert [r["snr1_db"] for r in rows] == ["10", "20"] and rows[0]["seed"] == "3"
    code, out, _ = run(["benchmark", "--config", cfg, "--seed", 9, "--snr1", 30], capsys)
    rows = table(out)
    assert len(rows) == 1 and rows[0]["seed"] == "9" and rows[0]["n_rep"] == "2"


@pytest.mark.parametrize("content,key", [("bogus: 1\n", "bogus"), ("kappa: abc\n", "kappa"),
                                         ("M: 100\n", "M"), ("f_t: Quadratic\n", "f_t"),
                                         ("rho: 0.9\n", "rho")])
def test_bad_config_names_key(capsys, tmp_path, content, key):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(content)
    code, _, err = run(["benchmark", "--config", cfg], capsys)
    assert code == 2 and key in err


def test_per_rep_and_plot_outputs(capsys, tmp_path):
    reps, plot = tmp_path / "reps.csv", tmp_path / "plot.csv"
    code, out, _ = run(["benchmark", *SMALL, "--snr1", 10, 20, "--per-rep-out", reps,
                        "--emit-plot-data", plot], capsys)
    assert code == 0
    rep_rows = table(reps.read_text())
    assert len(rep_rows) == 6 and {r["rep"] for r in rep_rows} == {"0", "1", "2"}
    plot_rows = table(plot.read_text())
    assert list(plot_rows[0]) == ["x", "y", "series"] and len(plot_rows) == 2
    bench = table(out)
    assert float(plot_rows[0]["y"]) == float(bench[0]["mean_mise"])


def test_search_j(capsys, tmp_path):
    out = tmp_path / "curve.csv"
    code, _, _ = run(["search-j", *SMALL, "--out", out], capsys)
    assert code == 0
    rows = table(out.read_text())
    assert [int(r["J"]) for r in rows] == [3, 4, 5, 6]
    assert sum(int(r["best"]) for r in rows) == 1


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_simulate_then_estimate_roundtrip(capsys, tmp_path, fmt):
    d = tmp_path / "sim"
    code, out, _ = run(["simulate", "--out-dir", d, "--M", 32, "--N", 128, "--snr1", 30,
                        "--format", fmt], capsys)
    assert code == 0
    sig = json.loads(out)
    ext = "." + fmt
    y, f_true = read_matrix(d / f"y{ext}"), read_matrix(d / f"f_true{ext}")
    assert y.shape == f_true.shape == (32, 128)
    resolved = json.loads((d / "config.json").read_text())
    assert resolved["sigma1"] == sig["sigma1"]
    fhat_path, diag_path = d / f"fhat{ext}", d / "diag.json"
    code, _, _ = run(["estimate", "--y", d / f"y{ext}", "--gdelta", d / f"gdelta{ext}",
                      "--out", fhat_path, "--diagnostics", diag_path,
                      "--sigma1", sig["sigma1"], "--sigma2", sig["sigma2"]], capsys)
    assert code == 0
    diag = json.loads(diag_path.read_text())["diagnostics"]
    assert {"J", "Jp", "lambdas", "survivors", "truncated_count"} <= set(diag)
    # the file round trip reproduces the in-memory pipeline on the same draw
    from deconwave.blind_deconv import EstimatorConfig, estimate
    from deconwave.experiment import generate_observation, make_kernel, make_test_function
    f = make_test_function("HeaviSine", "Quadratic", 32, 128)
    y_spec, g_spec = generate_observation(f, make_kernel(32, 128), sig["sigma1"], sig["sigma2"], 0)
    ref, ref_diag = estimate(y_spec, g_spec, EstimatorConfig(sigma1=sig["sigma1"],
                                                             sigma2=sig["sigma2"]))
    np.testing.assert_allclose(read_matrix(fhat_path), ref.values, atol=1e-12)
    assert diag["J"] == ref_diag.J
    np.testing.assert_allclose(f_true, f.values, atol=1e-15)


def test_estimate_noiseless_matches_truth_projection(capsys, tmp_path):
    from deconwave.experiment import make_kernel, make_test_function
    from deconwave.signal_core import dft_rows, idft_rows, RowSpectrum
    M, N = 32, 128
    f, g = make_test_function("HeaviSine", "Quadratic", M, N), make_kernel(M, N)
    y = idft_rows(RowSpectrum(dft_rows(f).coeffs * dft_rows(g).coeffs)).values
    write_matrix(tmp_path / "y.bin", y)
    write_matrix(tmp_path / "g.bin", g.values)
    code, _, _ = run(["estimate", "--y", tmp_path / "y.bin", "--gdelta", tmp_path / "g.bin",
                      "--out", tmp_path / "f.bin", "--diagnostics", tmp_path / "d.json"], capsys)
    assert code == 0
    err = np.mean((read_matrix(tmp_path / "f.bin") - f.values) ** 2)
    assert err < 5e-3


def test_estimate_zero_inputs(capsys, tmp_path):
    z = np.zeros((16, 32))
    write_matrix(tmp_path / "z.csv", z)
    g = np.full((16, 32), 0.5)
    write_matrix(tmp_path / "g.csv", g)
    code, _, _ = run(["estimate", "--y", tmp_path / "z.csv", "--gdelta", tmp_path / "g.csv",
                      "--out", tmp_path / "o.csv", "--sigma1", 0.1], capsys)
    assert code == 0
    assert np.all(read_matrix(tmp_path / "o.csv") == 0)


def test_estimate_dead_kernel_warns(capsys, tmp_path):
    rng = np.random.default_rng(0)
    write_matrix(tmp_path / "y.csv", rng.standard_normal((16, 32)))
    write_matrix(tmp_path / "g.csv", np.zeros((16, 32)))
    code, _, err = run(["estimate", "--y", tmp_path / "y.csv", "--gdelta", tmp_path / "g.csv",
                        "--out", tmp_path / "o.csv", "--sigma1", 0.1, "--sigma2", 0.1], capsys)
    assert code == 0 and "fully truncated kernel" in err
    assert np.all(read_matrix(tmp_path / "o.csv") == 0)


def test_estimate_dimension_mismatch(capsys, tmp_path):
    write_matrix(tmp_path / "a.csv", np.zeros((16, 32)))
    write_matrix(tmp_path / "b.csv", np.zeros((16, 64)))
    code, _, err = run(["estimate", "--y", tmp_path / "a.csv", "--gdelta", tmp_path / "b.csv",
                        "--out", tmp_path / "o.csv"], capsys)
    assert code == 2 and "mismatch" in err


@pytest.mark.parametrize("payload", [b"not,a,number\n1,2,3\n", b"FDC1" + struct.pack("<QQ", 4, 4)])
def test_estimate_malformed_input(capsys, tmp_path, payload):
    suffix = ".bin" if payload.startswith(MAGIC) else ".csv"
    bad = tmp_path / f"bad{suffix}"
    bad.write_bytes(payload)
    write_matrix(tmp_path / "g.csv", np.ones((16, 32)))
    code, _, _ = run(["estimate", "--y", bad, "--gdelta", tmp_path / "g.csv",
                      "--out", tmp_path / "o.csv"], capsys)
    assert code == 2


def test_estimate_non_power_of_two(capsys, tmp_path):
    write_matrix(tmp_path / "a.csv", np.zeros((12, 32)))
    code, _, _ = run(["estimate", "--y", tmp_path / "a.csv", "--gdelta", tmp_path / "a.csv",
                      "--out", tmp_path / "o.csv"], capsys)
    assert code == 2


def test_binary_matrix_layout(tmp_path):
    a = np.arange(6, dtype=float).reshape(2, 3) / 7
    write_matrix(tmp_path / "m.bin", a)
    raw = (tmp_path / "m.bin").read_bytes()
    assert raw[:4] == b"FDC1"
    assert struct.unpack("<QQ", raw[4:20]) == (2, 3)
    assert np.array_equal(np.frombuffer(raw[20:], "<f8").reshape(2, 3), a)
    assert np.array_equal(read_matrix(tmp_path / "m.bin"), a)


def test_csv_full_precision(tmp_path):
    a = np.array([[1 / 3, np.pi], [np.e, -1e-300]])
    write_matrix(tmp_path / "m.csv", a, ["note"])
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), a)


def test_usage_error_exit_code(capsys):
    code, _, _ = run(["benchmark", "--no-such-flag"], capsys)
    assert code == 2
    code, _, _ = run([], capsys)
    assert code == 2
