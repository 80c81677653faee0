"""Smoke test for the Python bindings.

Build and install first:

    pip install --no-build-isolation -e crates/python
    python python/smoke_test.py
"""

import math
import pathlib
import sys

import numpy as np

import spinadapt

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []

    h6 = spinadapt.Hamiltonian.from_fcidump(str(DATA / "h6_sto6g.fcidump"))
    counts = [(r[1], r[3]) for r in h6.pool_stats()]
    results.append(check("pool census", counts == [(1551, 924), (870, 400), (420, 200), (312, 92)], str(counts)))

    g = spinadapt.Generator("ppqr:1,3,5")
    freqs = sorted({round(abs(x), 9) for x in g.eigenvalues()} - {0.0})
    results.append(check("spectrum", freqs == [round(1 / math.sqrt(2), 9), 1.0], str(freqs)))
    results.append(check("aperiodic", g.periodicity(n_spatial=6)[0] == "not-periodic"))

    verdict, period = spinadapt.Generator("so-single:0,5").periodicity()
    results.append(check("single period", verdict == "periodic" and abs(period - 2 * math.pi) < 1e-9, str(period)))

    g4 = spinadapt.Generator("ppqr:0,1,3")
    u = np.array(g4.expm(0.8))
    defect = np.linalg.norm(u.conj().T @ u - np.eye(len(u)))
    results.append(check("unitary", defect < 1e-12, f"{defect:.1e}"))

    err = spinadapt.closed_form_error("sm_s10", [0, 1, 2, 3], [0.1 * k for k in range(20)])
    results.append(check("closed form", err < 1e-9, f"{err:.1e}"))

    thetas = [1e-2, 2e-2]
    slope = [
        math.log(e[1] / e[0]) / math.log(2)
        for e in (g4.trotter_error(thetas, order, precise=True) for order in (1, 2))
    ]
    results.append(check("trotter order", abs(slope[0] - 2) < 0.05 and abs(slope[1] - 3) < 0.05, str(slope)))

    viol = g4.spin_violation([2 * math.sqrt(2) * math.pi], 1)[0]
    results.append(check("spin restored", viol < 1e-8, f"{viol:.1e}"))

    jw = dict(spinadapt.Generator("single:0,1").jordan_wigner())
    results.append(check("jordan-wigner", len(jw) > 0 and all(abs(c.real) < 1e-15 or abs(c.imag) < 1e-15 for c in jw.values())))

    h2 = spinadapt.Hamiltonian.from_fcidump(str(DATA / "h2_sto6g.fcidump"))
    run = h2.adapt()
    last = run["trajectory"][-1]
    results.append(check("h2 adapt", last["error"] < 1e-10 and abs(run["fci_energy"] + 1.1459398102958875) < 1e-9, str(last)))

    try:
        spinadapt.Generator("ppqr:1,1,1")
        results.append(check("rejects degenerate", False))
    except ValueError:
        results.append(check("rejects degenerate", True))

    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
