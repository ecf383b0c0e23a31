import io
import subprocess
import sys

import pytest

from patdist.cli import (EXIT_INPUT, EXIT_METHOD, EXIT_OK, ChainStats, InputError, JobSpec, format_sci, main,
                         run, select_method)


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    old = sys.stderr
    sys.stderr = err
    try:
        code = main(list(argv), out)
    finally:
        sys.stderr = old
    return code, out.getvalue(), err.getvalue()


def job(**kw):
    base = dict(pattern="ADAD", alphabet=tuple("ABCD"), length=2000, n_min=10, n_max=10, uniform=True)
    base.update(kw)
    return JobSpec(**base)


def test_select_full_boundary():
    # (l - m)(n + 1) nnz <= 200000 -> full
    stats = ChainStats(R=5, nnz=20, m=0)
    assert select_method(job(length=1000, n_max=9), stats) == "full"
    assert select_method(job(length=1001, n_max=9), stats) == "lifting"


def test_select_lifting_partial():
    assert select_method(job(length=10**6), ChainStats(64, 256, 0)) == "lifting"
    assert select_method(job(length=10**6), ChainStats(65, 260, 0)) == "partial"
    assert select_method(job(length=10**6, n_min=0, n_max=50), ChainStats(256, 1024, 0)) == "lifting"
    assert select_method(job(length=10**6, n_max=49), ChainStats(256, 1024, 0)) == "partial"
    assert select_method(job(length=10**6), ChainStats(5000, 20000, 0, fraction_cached=True)) == "lifting"
    assert select_method(job(method="partial"), ChainStats(5, 20, 0)) == "partial"


@pytest.mark.parametrize("kw", [dict(uniform=False), dict(n_min=3, n_max=2), dict(method="magic"),
                                dict(precision=10), dict(eta=2.0), dict(order=2)])
def test_job_validation(kw):
    with pytest.raises(InputError):
        job(**kw).validate()


def test_format_sci():
    assert format_sci(0) == "0"
    assert format_sci(0.0912559) == "9.12559e-02"
    from gmpy2 import mpq
    assert format_sci(mpq(1, 3) / mpq(10) ** 5000) == "3.33333e-5001"
    assert format_sci(-1234567) == "-1.23457e+06"


@pytest.mark.parametrize("method", ["full", "partial", "lifting", "fiduccia"])
def test_run_methods_agree(method):
    rep = run(job(method=method))
    assert rep["method"] == method
    assert format_sci(rep["probabilities"][10]) == "9.12559e-02"


def test_run_table_and_csv():
    code, out, _ = call("--pattern", "ADAD", "--alphabet", "ABCD", "--uniform", "--length", "2000", "--n", "10")
    assert code == EXIT_OK
    assert "9.12559e-02" in out and "# method:" in out
    code, out, _ = call("run", "--pattern", "ADAD", "--alphabet", "ABCD", "--uniform", "--length", "20",
                        "--n-max", "2", "--format", "csv")
    assert out.splitlines()[0] == "n,probability"
    assert len(out.splitlines()) == 4


def test_run_exact_full_precision():
    code, out, _ = call("--pattern", "AB", "--alphabet", "AB", "--uniform", "--length", "2", "--n", "1",
                        "--exact", "--full-precision", "--format", "kv")
    assert code == EXIT_OK
    assert "P[1]=1/4" in out


def test_fraction_cache(tmp_path):
    cache = tmp_path / "g.frac"
    args = ["--pattern", "ADAD", "--alphabet", "ABCD", "--uniform", "--length", "20000", "--n", "10",
            "--method", "lifting", "--fraction-cache", str(cache), "--format", "kv"]
    code, first, _ = call(*args)
    assert code == EXIT_OK and cache.exists()
    assert "4.37982e-21" in first and "fraction_degrees=2/4" in first
    code, second, _ = call(*args)
    assert "time_t2_fraction" not in second
    code, _, err = call("--pattern", "ADDA", "--alphabet", "ABCD", "--uniform", "--length", "50", "--n", "1",
                        "--method", "lifting", "--fraction-cache", str(cache))
    assert code == EXIT_INPUT and "another pattern" in err


def test_fit_and_model_roundtrip(tmp_path):
    fa = tmp_path / "s.fa"
    fa.write_text(">x\n" + "ACGTTGCAACGGTACCATGA" * 20 + "\n")
    code, text, _ = call("fit", "--fit", str(fa), "--order", "1")
    assert code == EXIT_OK and text.startswith("# patdist markov model")
    mfile = tmp_path / "m.txt"
    mfile.write_text(text)
    code, a, _ = call("--pattern", "CG", "--model", str(mfile), "--length", "300", "--n-max", "3",
                      "--method", "full", "--format", "csv")
    code2, b, _ = call("--pattern", "CG", "--fit", str(fa), "--order", "1", "--length", "300", "--n-max", "3",
                       "--method", "full", "--format", "csv")
    assert code == code2 == EXIT_OK and a == b


def test_automaton_dot(capsys):
    code, out, err = call("automaton", "--pattern", "AB.AA.AB", "--alphabet", "AB")
    assert code == EXIT_OK
    assert out.startswith("digraph") and "states=12 finals=1" in err


def test_oracle_exhaustive():
    code, out, _ = call("oracle", "--pattern", "AB", "--alphabet", "AB", "--uniform", "--length", "2",
                        "--exhaustive", "--format", "kv")
    assert code == EXIT_OK
    assert "P[0]=3/4" in out and "P[1]=1/4" in out


@pytest.mark.parametrize("argv", [
    ["--pattern", "AD(", "--alphabet", "ABCD", "--uniform", "--length", "9", "--n", "1"],
    ["--pattern", "AX", "--alphabet", "ABCD", "--uniform", "--length", "9", "--n", "1"],
    ["--pattern", "AD", "--alphabet", "ABCD", "--length", "9", "--n", "1"],
    ["--pattern", "AD", "--alphabet", "ABCD", "--uniform", "--length", "9"],
    ["--pattern", "AD", "--alphabet", "ABCD", "--model", "/nonexistent", "--length", "9", "--n", "1"],
    ["oracle", "--pattern", "AD", "--alphabet", "ABCD", "--uniform", "--length", "30", "--exhaustive"],
])
def test_input_errors(argv):
    code, _, err = call(*argv)
    assert code == EXIT_INPUT and "input error" in err


def test_method_error():
    # P is nilpotent when every letter completes an occurrence
    code, _, err = call("--pattern", "(A|B)", "--alphabet", "AB", "--uniform", "--length", "500", "--n", "3",
                        "--method", "partial")
    assert code == EXIT_METHOD


def test_argparse_error_exit_code():
    with pytest.raises(SystemExit) as e:
        main(["run", "--length", "x"])
    assert e.value.code == EXIT_INPUT


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "patdist", "--pattern", "ADAD", "--alphabet", "ABCD", "--uniform",
                          "--length", "2000", "--n", "10", "--format", "csv"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[1] == "10,9.12559e-02"
