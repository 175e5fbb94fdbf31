"""Smoke test for the `korteweg` extension module.

Build and install first:  pip install ./crates/python --no-build-isolation
Then:                     python python/smoke_test.py
"""

import cmath
import math
import pathlib
import sys
import tempfile

import korteweg

RUN = """\
[params]
epsilon = 0.2
mu = 0.5
kappa = 1.0
[grid]
side = 25.132741228718345
n = 32
[solver]
dt = 0.01
horizon = 0.1
snapshot_stride = 5
[data]
seed = 3
amplitude = 0.5
j_lo = -1
j_hi = 0
"""


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return bool(cond)


def main():
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        cfg = tmp / "run.cfg"
        cfg.write_text(RUN)
        out = tmp / "out"

        text = korteweg.normalize_config(RUN)
        ok &= check(korteweg.normalize_config(text) == text, "normalised config is a fixed point")

        sim = korteweg.simulate(str(cfg), str(out))
        ok &= check(sim["passed"], "simulate completed")
        snaps = sorted(pathlib.Path(sim["dir"]).glob("snap_*_a.snap"))
        ok &= check(len(snaps) == 3, "three snapshots of a")
        n, side, rank, t = korteweg.snapshot_info(str(snaps[-1]))
        ok &= check(n == 32 and rank == "scalar" and abs(t - 0.1) < 1e-12, "snapshot header")
        val = korteweg.snapshot_norm(str(snaps[0]), "fourier_besov s=0 p=2 sigma=1")
        ok &= check(math.isfinite(val) and val > 0, "snapshot norm is positive")

        nr = korteweg.norms([str(p) for p in snaps], ["fourier_besov s=0 p=2 sigma=1 r=inf"], str(out))
        ok &= check(nr["passed"] and len(nr["summary"]) == 2, "norms over a time series")

        ok &= check(korteweg.verify_linear(str(cfg), str(out))["passed"], "verify_linear passes")
        ok &= check(korteweg.verify_lp(str(cfg), str(out))["passed"], "verify_lp passes")

        bad = tmp / "bad.cfg"
        bad.write_text("epsilon = -1\n")
        try:
            korteweg.simulate(str(bad), str(out))
            ok &= check(False, "negative epsilon rejected")
        except ValueError as e:
            ok &= check("epsilon" in str(e), "negative epsilon rejected")

    # a divergence-free mode with a = 0 decays like exp(-mu |xi|^2 t)
    xi, mu, t = (0.6, 0.8), 0.3, 2.0
    a, v1, v2 = korteweg.propagate_mode(xi, (0j, -0.8 + 0j, 0.6 + 0j), t, 0.1, mu, 0.0, 1.0)
    want = math.exp(-mu * t)
    ok &= check(abs(a) < 1e-15 and cmath.isclose(v1, -0.8 * want) and cmath.isclose(v2, 0.6 * want), "heat decay of the transverse mode")

    print("smoke test", "passed" if ok else "FAILED")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
