"""Smoke test for the debate_py extension module.

Build first:  cargo build --release -p debate-py
then run:     python3 python/smoke_test.py
"""

import os
import shutil
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
TARGET = os.path.join(HERE, "..", "target")


def locate():
    for profile in ("release", "debug"):
        lib = os.path.join(TARGET, profile, "libdebate_py.so")
        if os.path.exists(lib):
            return lib
    sys.exit("libdebate_py.so not found; run `cargo build --release -p debate-py`")


def main():
    tmp = tempfile.mkdtemp()
    shutil.copy(locate(), os.path.join(tmp, "debate_py.so"))
    sys.path.insert(0, tmp)
    import debate_py as d

    assert "parity3" in d.stock_machines()
    assert "majority3" in d.stock_programs()

    p = d.Params()
    assert (p.c_d, p.chernoff_coeff) == (150, 192)
    assert d.Params("scaled").c_d == 10
    assert p.d("1") == 150

    cfg = d.Config("protocol = bisection\nmachine = stock:first_bit\ninput = 10\n", seed=4)
    out = d.run_debate(cfg)
    assert out.verdict and out.forfeit is None, out
    assert out.counters["verifier_oracle_queries"] <= 1
    again = d.Outcome.from_record(out.record())
    assert again.record() == out.record()
    garbled = d.run_debate(cfg, b="Garbage")
    assert garbled.verdict, garbled.trace()

    stoch = d.Config(
        "protocol = stochastic\nmachine = stock:single_query\noracle = const 9/10\ninput = 1\ntrials = 40\n",
        seed=2,
        mode="scaled",
    )
    e = d.estimate(stoch)
    assert e.trials == 40 and 0.0 <= e.ci[0] <= e.estimate <= e.ci[1] <= 1.0, e
    assert d.estimate(stoch).successes == e.successes

    rep = d.run_command("experiment", stoch)
    assert not rep.failed and "experiment.csv" in rep.files

    assert d.verifier_abort_check("1/2", "1/2", 10)
    assert not d.verifier_abort_check("0", "1", 10)
    lo, hi = d.wilson_interval(0, 10)
    assert lo == 0.0 and 0.0 < hi < 1.0

    debates, bad, _ = d.check_exhaustive("catalogue", seed=1)
    assert debates > 0 and bad == 0
    _, bad, examples = d.check_exhaustive("catalogue", seed=1, broken_verifier=True)
    assert bad > 0 and examples

    try:
        d.Config("seed = 1\nprotocol = sideways\n")
    except ValueError as err:
        assert "line 2" in str(err)
    else:
        raise AssertionError("bad config accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
