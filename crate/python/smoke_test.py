#!/usr/bin/env python3
"""Smoke test for the nonrev_py extension module.

Build the extension first:

    cargo build -p nonrev-py --release   # or debug

The script locates the compiled cdylib under target/, exposes it as an
importable module, and exercises the main entry points.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libnonrev_py.so",
        REPO / "target" / "debug" / "libnonrev_py.so",
        REPO / "target" / "release" / "libnonrev_py.dylib",
        REPO / "target" / "debug" / "libnonrev_py.dylib",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("extension not built; run: cargo build -p nonrev-py")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    staging = Path(tempfile.mkdtemp(prefix="nonrev_py_"))
    suffix = ".so" if newest.suffix == ".so" else ".so"  # CPython loads .so on mac too
    shutil.copy2(newest, staging / f"nonrev_py{suffix}")
    sys.path.insert(0, str(staging))
    import nonrev_py

    return nonrev_py


def approx(a, b, tol):
    return abs(a - b) <= tol


def main():
    nr = load_module()
    checks = 0

    def check(name, ok):
        nonlocal checks
        checks += 1
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}")
        if not ok:
            sys.exit(1)

    # validation
    nr.validate_spd([[1.0, 0.0], [0.0, 0.1]])
    try:
        nr.validate_spd([[1.0, 0.0], [0.0, -0.1]])
        check("validate_spd rejects indefinite input", False)
    except ValueError:
        check("validate_spd rejects indefinite input", True)

    # 3D example: optimal gap Tr(S)/3 = 0.37
    pair = nr.optimal_pair([[1.0, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.01]])
    check("3D rate is 0.37", approx(pair.rate, 0.37, 1e-12))
    check("3D min Re sits at the rate", approx(pair.min_re(), 0.37, 1e-9))
    check("Lyapunov residual tiny", pair.lyapunov_residual() < 1e-12)
    check("default ladder is N+k", pair.ladder() == [4.0, 5.0, 6.0])
    pf = pair.prefactors()
    check("kappa(Q) = 3/2", approx(pf["kappa_q"], 1.5, 1e-12))

    # balanced basis for diag(1, 0.1): Hadamard directions at 0.55
    vectors, rayleighs, target = nr.balanced_basis([[1.0, 0.0], [0.0, 0.1]])
    check("2D balance target 0.55", approx(target, 0.55, 1e-12))
    check(
        "2D rayleigh quotients balanced",
        all(approx(r, 0.55, 1e-10) for r in rayleighs),
    )
    check(
        "2D basis is the Hadamard frame",
        all(approx(abs(v), 1 / math.sqrt(2), 1e-10) for row in vectors for v in row),
    )

    # 2D closed forms
    r = nr.two_dim_report(0.1, math.sqrt(4.05))
    check("a_crit^2 = 2.025", approx(r["a_crit_squared"], 2.025, 1e-12))
    expected = math.sqrt(2) * 1.1 / math.sqrt(0.1)
    check("P-norm product at twice critical", approx(r["p_norm_product"], expected, 1e-9))

    # eigensolver against the 2D formula
    eigs = nr.eig([[1.0, 0.7115], [-7.115, 0.1]])
    check("2D spectrum on Re = 0.55", all(approx(re, 0.55, 1e-10) for re, _ in eigs))

    # Laplacian gap
    lap = nr.make_laplacian(100)
    gap = min(re for re, _ in nr.eig(lap))
    check("Laplacian-100 gap ~ 9.67e-4", abs(gap - 9.674e-4) / 9.674e-4 < 0.01)

    # decay curve endpoints
    times, norms = nr.decay_norms([[1.0, 0.0], [0.0, 1.0]], 1.0, 5)
    check("decay starts at 1", norms[0] == 1.0)
    check("decay of identity is e^{-t}", approx(norms[-1], math.exp(-1.0), 1e-12))

    # L2 distance: 1D closed form e - 1
    d = nr.l2_distance([[1.0]], [1.0], [[1.0]])
    check("1D L2 distance squared = e - 1", approx(d * d, math.e - 1.0, 1e-10))
    check("divergent state returns None", nr.l2_distance([[1.0]], [0.0], [[3.0]]) is None)

    # Hermite-Galerkin spectrum check
    mismatch, coercivity = nr.hermite_check([[1.0, 0.0], [0.0, 0.1]], 6)
    check("hermite block spectra match", mismatch < 1e-8)
    check("coercivity PSD on excited blocks", coercivity > -1e-9)

    # seeded SDE reproducibility
    t1, v1, s1 = nr.simulate_double_well(10.0, 10.0, 1e-3, 400, 500, 7, 100)
    t2, v2, s2 = nr.simulate_double_well(10.0, 10.0, 1e-3, 400, 500, 7, 100)
    check("double-well run is reproducible", v1 == v2 and s1 == s2)
    eq = nr.equilibrium_double_well(10.0)
    check("double-well equilibrium is finite and O(1)", 0.5 < eq < 2.0)

    print(f"all {checks} checks passed")


if __name__ == "__main__":
    main()
