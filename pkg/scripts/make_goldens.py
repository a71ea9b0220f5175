#!/usr/bin/env python3
"""Regenerate the golden fixtures with the dense-LU Newton oracle.

Run from the repository root:

    python3 scripts/make_goldens.py

Goldens are deterministic (no randomness is involved), so regeneration is
bit-identical across runs on the same platform.
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from qpflow.fixtures import FIXTURE_NAMES, case_bytes
from qpflow.grid import build_quadratic_forms, parse_case, residual
from qpflow.newton import NewtonConfig, dense_lu_solve, newton_raphson

OUT_DIR = pathlib.Path(__file__).resolve().parents[1] / "src" / "qpflow" / "cases" / "goldens"

PROVENANCE = {
    "case3": "hand-built 3-bus triangle (slack, PV, PQ) covering every row kind",
    "case5": "hand-built 5-bus meshed grid (slack, PV, 3x PQ)",
    "case14": (
        "IEEE 14-bus data, transcribed with transformer taps treated as plain "
        "branches and the bus-9 shunt dropped (both outside the model scope)"
    ),
}


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name in FIXTURE_NAMES:
        case = parse_case(case_bytes(name))
        problem = build_quadratic_forms(case)
        u, trace = newton_raphson(problem, NewtonConfig(), linear_solver=dense_lu_solve)
        if not trace.converged:
            raise SystemExit(f"{name}: oracle Newton did not converge")
        final = residual(problem, u)
        golden = {
            "solution": u.tolist(),
            "iterations": trace.iterations,
            "residual_norm": float(np.max(np.abs(final))),
            "trace": {
                "residuals": trace.residuals,
                "kappas": trace.kappas,
                "sparsities": trace.sparsities,
                "step_norms": trace.step_norms,
            },
            "provenance": PROVENANCE[name],
            "oracle": "dense-LU Newton from flat start, tol 1e-8, max 20 iterations",
        }
        path = OUT_DIR / f"{name}.json"
        path.write_text(json.dumps(golden, sort_keys=True, indent=2) + "\n")
        print(f"{name}: {trace.iterations} iterations, residual {golden['residual_norm']:.3e} -> {path}")


if __name__ == "__main__":
    main()
