import re

import numpy as np
import pytest

from msabench import checkpoint, dataset
from msabench.errors import ValidationError
from msabench.harness import cli
from msabench.harness.config import parse_config
from msabench.harness.output import CSV_HEADER, format_csv, median_final_errors, read_csv, render_svg
from msabench.harness.runner import all_traces, choose_sigma, derive_seed, run_experiment, run_single
from msabench.metrics import ErrorTrace

SMALL = """
n = 5
T = 300
m = 1
runs = 2
algorithms = mssm, cal, dka, oja, mssm-offline
eta0 = 0.01
offline_max_iters = 5000
"""


@pytest.fixture(scope="module")
def small_results():
    cfg = parse_config(SMALL)
    return cfg, run_experiment(cfg)


def test_derive_seed_distinct_and_stable():
    seeds = {derive_seed(0, r, k) for r in range(5) for k in range(5)}
    assert len(seeds) == 25
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)


def test_choose_sigma_policies():
    X = dataset.generate(dataset.SpectrumSpec.linear(4, 1.0), 400, 0).X
    warm = X[:, :40]
    C = dataset.empirical_covariance(warm)
    lam1 = np.linalg.eigvalsh(C)[-1]
    assert choose_sigma("12.5", X, 6.0) == 12.5
    assert choose_sigma("twice-top", X, 6.0) == pytest.approx(2 * lam1, rel=1e-5)
    assert choose_sigma("auto", X, 6.0) == pytest.approx(np.trace(C) + 6 * lam1, rel=1e-5)


class TestRunExperiment:
    def test_shapes(self, small_results):
        cfg, results = small_results
        assert [r.run for r in results] == [0, 1]
        traces = all_traces(results)
        assert [(t.algorithm, t.run) for t in traces] == sorted(
            (a, r) for a in cfg.algorithms for r in range(2)
        )
        assert len({r.fingerprint for r in results}) == 1
        assert all(r.duration > 0 for r in results)

    def test_traces_on_grid(self, small_results):
        _, results = small_results
        for tr in all_traces(results):
            ts = [t for t, _ in tr.points]
            assert ts == sorted(set(ts))
            if tr.algorithm != "mssm-offline" and tr.diverged_at is None:
                assert ts[-1] == 300

    def test_oja_flagged(self, small_results):
        _, results = small_results
        oja = [t for t in all_traces(results) if t.algorithm == "oja"]
        # constant-ish rate on anisotropic data: divergence is recorded, siblings continue
        assert all(t.flag.startswith("diverged:") or t.flag == "completed" for t in oja)
        others = [t for t in all_traces(results) if t.algorithm in ("mssm", "dka")]
        assert all(t.flag == "completed" for t in others)

    def test_checkpoints_load(self, small_results):
        _, results = small_results
        for res in results:
            st = checkpoint.loads(res.checkpoints["mssm"])
            assert st.sigma == res.sigmas["mssm"]
            assert checkpoint.loads(res.checkpoints["dka"]).kind == "dka"

    def test_offline_converges(self, small_results):
        _, results = small_results
        offline = [t for t in all_traces(results) if t.algorithm == "mssm-offline"]
        assert all(t.final_error < 1e-6 for t in offline)

    def test_per_run_data_differs_shared_does_not(self):
        cfg = parse_config("n = 3\nT = 50\nruns = 2\nalgorithms = dka\n")
        a, b = run_single(cfg, 0), run_single(cfg, 1)
        assert not np.array_equal(a.dataset.X, b.dataset.X)
        shared = parse_config("n = 3\nT = 50\nruns = 2\nalgorithms = dka\ndata_seed = shared\ninit_seed = shared\n")
        a, b = run_single(shared, 0), run_single(shared, 1)
        np.testing.assert_array_equal(a.dataset.X, b.dataset.X)
        assert a.traces[0].points == b.traces[0].points

    def test_parallel_matches_serial(self):
        cfg = parse_config("n = 4\nT = 200\nruns = 3\nalgorithms = mssm, dka\neta0 = 0.01\n")
        serial = format_csv(all_traces(run_experiment(cfg, workers=1)))
        parallel = format_csv(all_traces(run_experiment(cfg, workers=3)))
        assert serial == parallel

    def test_divergence_does_not_abort_siblings(self):
        cfg = parse_config("n = 5\nT = 400\nalgorithms = oja, dka\neta0 = 0.05\nt_half = inf\nspectrum = explicit\n"
                           "values = 5, 4, 3, 2, 1\n")
        res = run_single(cfg, 0)
        oja, dka = res.traces
        assert oja.diverged_at is not None
        assert dka.points[-1][0] == 400 or dka.diverged_at is not None


class TestCsv:
    def test_format(self, small_results):
        cfg, results = small_results
        sig = [(a, r.run, s) for r in results for a, s in r.sigmas.items()]
        text = format_csv(all_traces(results), results[0].fingerprint, sig)
        lines = text.split("\n")
        assert "\r" not in text and text.endswith("\n")
        assert lines[0] == f"# fingerprint={results[0].fingerprint}"
        assert lines[1] == "# rng=numpy.PCG64"
        assert any(re.fullmatch(r"# sigma=[0-9.e+-]+ algorithm=mssm run=0", ln) for ln in lines)
        header = lines.index(CSV_HEADER)
        rows = [ln.split(",") for ln in lines[header + 1:] if ln]
        keys = [(r[0], int(r[1]), int(r[2])) for r in rows]
        assert keys == sorted(keys)
        for r in rows:
            assert float(repr(float(r[3]))) == float(r[3])
            assert r[4] == "completed" or r[4].startswith("diverged:")

    def test_read_back(self, tmp_path, small_results):
        _, results = small_results
        traces = all_traces(results)
        path = tmp_path / "r.csv"
        path.write_text(format_csv(traces), encoding="utf-8")
        back, meta = read_csv(path)
        assert [(t.algorithm, t.run, t.points, t.flag) for t in back] == [
            (t.algorithm, t.run, t.points, t.flag) for t in traces if t.points
        ]
        assert "rng=numpy.PCG64" in meta["comments"]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n")
        with pytest.raises(ValidationError):
            read_csv(path)

    def test_median(self):
        traces = []
        for r, e in enumerate([0.1, 0.3, 0.2]):
            tr = ErrorTrace("cal", r)
            tr.record(1, e)
            traces.append(tr)
        assert median_final_errors(traces) == {"cal": 0.2}


class TestSvg:
    def test_single_trace_single_polyline(self):
        tr = ErrorTrace("mssm", 0)
        for t, e in [(1, 1.0), (10, 0.1), (100, 0.01)]:
            tr.record(t, e)
        svg = render_svg([tr])
        assert svg.count("<polyline") == 1
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    def test_polyline_per_run_and_legend(self):
        traces = []
        for alg in ("cal", "mssm"):
            for r in range(5):
                tr = ErrorTrace(alg, r)
                for t in (1, 10, 100):
                    tr.record(t, 1.0 / (t + r))
                traces.append(tr)
        svg = render_svg(traces)
        assert svg.count("<polyline") == 10
        assert svg.count('data-algorithm="mssm"') == 5
        assert ">mssm</text>" in svg and ">cal</text>" in svg

    def test_deterministic(self):
        tr = ErrorTrace("dka", 1)
        tr.record(1, 0.5)
        tr.record(2, 0.0)
        assert render_svg([tr]) == render_svg([tr])

    def test_empty(self):
        with pytest.raises(ValidationError):
            render_svg([])


class TestCli:
    def write_cfg(self, tmp_path, text=SMALL):
        path = tmp_path / "exp.cfg"
        path.write_text(text + f"output = {tmp_path / 'out'}\n", encoding="utf-8")
        return path

    def test_run_twice_byte_identical(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, "n = 4\nT = 150\nruns = 2\nalgorithms = mssm, dka, oja\nsave_datasets = true\n")
        assert cli.main(["run", str(cfg)]) == 0
        first = (tmp_path / "out" / "results.csv").read_bytes()
        assert cli.main(["run", str(cfg), "--workers", "2"]) == 0
        assert (tmp_path / "out" / "results.csv").read_bytes() == first
        out = tmp_path / "out"
        assert (out / "results.svg").exists() and (out / "config.txt").exists()
        assert (out / "checkpoints" / "mssm-run1.txt").exists()
        assert "median final error" in capsys.readouterr().out
        # saved dataset feeds the oracle subcommand
        assert cli.main(["oracle", str(out / "datasets" / "run0.msa"), "--m", "2"]) == 0
        assert "minor eigenvalues" in capsys.readouterr().out

    def test_plot(self, tmp_path):
        cfg = self.write_cfg(tmp_path, "n = 3\nT = 60\nalgorithms = dka\n")
        cli.main(["run", str(cfg)])
        svg = tmp_path / "p.svg"
        assert cli.main(["plot", str(tmp_path / "out" / "results.csv"), str(svg)]) == 0
        assert svg.read_text().count("<polyline") == 1

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("n = 5\nm = 9\n")
        assert cli.main(["run", str(path)]) == 2
        assert "'m'" in capsys.readouterr().err

    def test_verify_default_passes(self, capsys):
        assert cli.main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "seed = 0" in out and "FAIL" not in out

    def test_verify_edge_case(self, capsys):
        assert cli.main(["verify", "--n", "12", "--t", "13"]) == 0

    def test_verify_malformed_flag(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["verify", "--seed", "abc"])
        assert info.value.code == 2

    def test_verify_n_without_t(self):
        with pytest.raises(SystemExit):
            cli.main(["verify", "--n", "4"])

    def test_oracle_missing_file(self, tmp_path, capsys):
        assert cli.main(["oracle", str(tmp_path / "none.msa"), "--m", "1"]) == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            cli.main(["frobnicate"])


def test_constant_rate_oja_flagged_diverged():
    cfg = parse_config("n = 5\nT = 2000\nalgorithms = oja\neta0 = 0.01\nt_half = inf\n")
    trace = run_experiment(cfg)[0].traces[0]
    assert trace.flag.startswith("diverged:")


def test_benchmark_shaped_five_runs_five_polylines():
    cfg = parse_config("n = 50\nT = 10000\nslope = 0.1\nm = 4\nruns = 5\nalgorithms = mssm, dka\neta0 = 0.001\n")
    svg = render_svg(all_traces(run_experiment(cfg)))
    assert svg.count('data-algorithm="mssm"') == 5
    assert svg.count('data-algorithm="dka"') == 5


@pytest.mark.xfail(strict=True, reason="one replayed 2000-sample dataset leaves a finite-sample bias above 0.05")
def test_desk_scale_mssm_example():
    cfg = parse_config("n = 10\nT = 2000\nm = 1\nruns = 1\nalgorithms = mssm\n")
    assert run_experiment(cfg)[0].traces[0].final_error < 0.05
