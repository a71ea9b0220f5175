"""Command-line surface: solve, lcu, resources, qram, diagnostics.

All outputs are machine-readable JSON or CSV; identical command lines with
identical seeds produce byte-identical files.  Exit codes: 0 success,
1 input error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .fixtures import harvest_jacobian_dilations
from .grid import CaseError, build_quadratic_forms, jacobian, parse_case, residual
from .hhl import HHLConfig, ShadowReadout, qpf_hhl
from .lcu import hermitian_dilation, lcu_statistics, pauli_decompose, truncate
from .newton import NewtonConfig, SingularJacobianError, newton_raphson
from .resources import (
    LOG_BASE_NOTE,
    DepthQuery,
    QramBudget,
    hhl_depth,
    qram_epsilon_for_infidelity,
    qram_epsilon_hardware,
    qram_infidelity,
    sweep,
)
from .variational import Ansatz, OptimizerConfig, qpf_vqls, vqpf_from_power_flow, vqpf_solve_with_record

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_CONVERGENCE = 2


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("QPF_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise CaseError(f"QPF_SEED must be an integer, got {env!r}") from exc
    return 0


def _load_config(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    with open(args.config, "rb") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise CaseError("config file must hold a JSON object")
    return cfg


def _option(args, cfg: dict, name: str, default):
    """Flags override config-file values, which override defaults."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg:
        return cfg[name]
    return default


def _write_output(args, payload: bytes) -> None:
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode()


def _read_case(path: str):
    with open(path, "rb") as fh:
        return parse_case(fh.read())


def _trace_record(trace) -> dict:
    rec = {
        "residuals": trace.residuals,
        "kappas": trace.kappas,
        "sparsities": trace.sparsities,
        "step_norms": trace.step_norms,
    }
    rec.update(
        {k: v for k, v in trace.extras.items() if k not in ("inner_loss_curves", "inner_records")}
    )
    return rec


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(args)
    case = _read_case(args.case)
    problem = build_quadratic_forms(case)
    method = _option(args, cfg, "method", "newton")
    max_iter = int(_option(args, cfg, "max_iter", 20))
    tol = float(_option(args, cfg, "tol", 1e-8))
    newton_cfg = NewtonConfig(k_max=max_iter, eps0=tol)

    downloader = "exact"
    if _option(args, cfg, "downloader", "exact") == "shadows":
        downloader = ShadowReadout(samples=int(_option(args, cfg, "shots", 100_000)), seed=seed)

    if method == "newton":
        u, trace = newton_raphson(problem, newton_cfg)
        metrics = {}
    elif method == "hhl":
        hhl_cfg = HHLConfig(
            clock_bits=int(_option(args, cfg, "clock_bits", 6)),
            trotter_m=int(_option(args, cfg, "trotter_m", 10)),
        )
        u, trace = qpf_hhl(problem, newton_cfg, hhl_cfg, downloader)
        metrics = {"clock_bits": hhl_cfg.clock_bits, "trotter_m": hhl_cfg.trotter_m}
    elif method == "vqls":
        opt = OptimizerConfig(
            eta=float(_option(args, cfg, "eta", 1.0)),
            max_steps=int(_option(args, cfg, "max_steps", 400)),
            tol=float(_option(args, cfg, "inner_tol", 2e-4)),
            seed=seed,
        )
        layers = int(_option(args, cfg, "layers", 4))
        u, trace = qpf_vqls(problem, newton_cfg, layers, opt, downloader)
        metrics = {"layers": layers, "eta": opt.eta}
        if args.loss_curve:
            # the single-instance loss trajectory: the first inner solve
            with open(args.loss_curve, "wb") as fh:
                fh.write(trace.extras["inner_records"][0].loss_csv())
    elif method == "vqpf":
        opt = OptimizerConfig(
            eta=float(_option(args, cfg, "eta", 0.01)),
            max_steps=int(_option(args, cfg, "max_steps", 5000)),
            tol=float(_option(args, cfg, "inner_tol", 1e-12)),
            seed=seed,
        )
        layers = int(_option(args, cfg, "layers", 2))
        vp = vqpf_from_power_flow(problem)
        a0 = Ansatz.flat_start(vp.n, layers, seed=seed)
        ansatz, u, scale, record = vqpf_solve_with_record(vp, a0, opt)
        if args.loss_curve:
            with open(args.loss_curve, "wb") as fh:
                fh.write(record.loss_csv())
        f = residual(problem, u)
        norm = float(np.max(np.abs(f)))
        payload = {
            "method": method,
            "seed": seed,
            "converged": bool(norm < tol),
            "residual_norm": norm,
            "solution": u.tolist(),
            "scale_c": scale,
            "layers": layers,
        }
        _write_output(args, _json_bytes(payload))
        return EXIT_OK if norm < tol else EXIT_NO_CONVERGENCE
    else:
        raise CaseError(f"unknown method {method!r}")

    payload = {
        "method": method,
        "seed": seed,
        "converged": trace.converged,
        "iterations": trace.iterations,
        "residual_norm": trace.residuals[-1] if trace.residuals else 0.0,
        "solution": u.tolist(),
        "trace": _trace_record(trace),
    }
    payload.update(metrics)
    _write_output(args, _json_bytes(payload))
    return EXIT_OK if trace.converged else EXIT_NO_CONVERGENCE


def cmd_lcu(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(args)
    drop_tol = float(_option(args, cfg, "drop_tol", 1e-12))

    if args.matrix:
        with open(args.matrix) as fh:
            mat = np.array(json.load(fh), dtype=float)
        mats = [hermitian_dilation(mat, np.zeros(mat.shape[0]))[0]] if args.dilate else [mat]
    elif args.case:
        case = _read_case(args.case)
        if args.stats:
            count = int(_option(args, cfg, "count", 102))
            mats = harvest_jacobian_dilations(case, count=count, seed=seed)
        else:
            problem = build_quadratic_forms(case)
            from .grid import flat_start
            from .newton import lu_solve

            u = flat_start(problem.n_bus)
            for _ in range(args.iterate):
                f = residual(problem, u)
                u = u + lu_solve(jacobian(problem, u), -f)
            f = residual(problem, u)
            j = jacobian(problem, u).toarray()
            mats = [hermitian_dilation(j, -f)[0]]
    else:
        raise CaseError("need a case file or an explicit matrix")

    if args.stats:
        stats = lcu_statistics(mats, drop_tol=drop_tol)
        _write_output(args, _json_bytes(stats))
        return EXIT_OK

    dec = pauli_decompose(mats[0], drop_tol=drop_tol)
    if args.truncate:
        dec = truncate(dec, args.truncate)
    payload = {
        "n": dec.n,
        "term_count": len(dec),
        "terms": [[p.letters, c] for p, c in sorted(dec.terms, key=lambda t: (-abs(t[1]), t[0].letters))],
    }
    _write_output(args, _json_bytes(payload))
    return EXIT_OK


def cmd_resources(args) -> int:
    cfg = _load_config(args)
    if args.sweep:
        with open(args.sweep) as fh:
            grid = json.load(fh)
        payload = sweep(
            grid["n"],
            grid["l"],
            grid.get("trotter_m", [10]),
            grid.get("clock_bits", [None]),
        )
        _write_output(args, payload)
        return EXIT_OK
    query = DepthQuery(
        n=int(_option(args, cfg, "n", 2)),
        l=int(_option(args, cfg, "l", 1)),
        trotter_m=int(_option(args, cfg, "trotter_m", 10)),
        clock_bits=args.clock_bits,
    )
    _write_output(args, _json_bytes(hhl_depth(query)))
    return EXIT_OK


def cmd_qram(args) -> int:
    chosen = [x is not None for x in (args.epsilon, args.target_infidelity, args.kappa_gamma)]
    if sum(chosen) != 1:
        raise CaseError("pass exactly one of --epsilon, --target-infidelity, --kappa-gamma")
    payload: dict = {"note": LOG_BASE_NOTE}
    if args.epsilon is not None:
        if args.n_data is None:
            raise CaseError("--epsilon needs --n-data")
        payload.update(
            n_data=args.n_data,
            epsilon=args.epsilon,
            infidelity=qram_infidelity(args.epsilon, args.n_data),
        )
    elif args.target_infidelity is not None:
        if args.n_data is None:
            raise CaseError("--target-infidelity needs --n-data")
        payload.update(
            n_data=args.n_data,
            target_infidelity=args.target_infidelity,
            epsilon=qram_epsilon_for_infidelity(args.target_infidelity, args.n_data),
        )
    else:
        budget = QramBudget(
            data_size=args.n_data or 2,
            kappa_gamma=args.kappa_gamma,
            g_d=args.g_d,
            nu=args.nu,
            c_d=args.c_d,
        )
        payload.update(
            kappa_gamma=args.kappa_gamma,
            g_d=args.g_d,
            nu=args.nu,
            c_d=args.c_d,
            epsilon=qram_epsilon_hardware(budget),
        )
    _write_output(args, _json_bytes(payload))
    return EXIT_OK


def cmd_diagnostics(args) -> int:
    case = _read_case(args.case)
    problem = build_quadratic_forms(case)
    u, trace = newton_raphson(problem)
    from .newton import diagnostics_csv

    _write_output(args, diagnostics_csv(trace))
    return EXIT_OK if trace.converged else EXIT_NO_CONVERGENCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run a power-flow solve")
    solve.add_argument("case")
    solve.add_argument("--method", choices=("newton", "hhl", "vqls", "vqpf"))
    solve.add_argument("--max-iter", dest="max_iter", type=int)
    solve.add_argument("--tol", type=float)
    solve.add_argument("--clock-bits", dest="clock_bits", type=int)
    solve.add_argument("--trotter-m", dest="trotter_m", type=int)
    solve.add_argument("--layers", type=int)
    solve.add_argument("--eta", type=float)
    solve.add_argument("--max-steps", dest="max_steps", type=int)
    solve.add_argument("--downloader", choices=("exact", "shadows"))
    solve.add_argument("--shots", type=int)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--config")
    solve.add_argument("--out")
    solve.add_argument("--loss-curve", dest="loss_curve", help="write the variational loss curve CSV here")
    solve.set_defaults(func=cmd_solve)

    lcu = sub.add_parser("lcu", help="Pauli-decompose power-flow matrices")
    lcu.add_argument("case", nargs="?")
    lcu.add_argument("--matrix", help="JSON file holding a dense matrix")
    lcu.add_argument("--dilate", action="store_true", help="dilate the matrix before decomposing")
    lcu.add_argument("--iterate", type=int, default=0, help="Newton iterate whose Jacobian to decompose")
    lcu.add_argument("--truncate", type=int)
    lcu.add_argument("--stats", action="store_true", help="ensemble statistics over harvested Jacobians")
    lcu.add_argument("--count", type=int)
    lcu.add_argument("--seed", type=int)
    lcu.add_argument("--config")
    lcu.add_argument("--out")
    lcu.set_defaults(func=cmd_lcu)

    res = sub.add_parser("resources", help="gate-depth estimates")
    res.add_argument("--n", type=int)
    res.add_argument("--l", type=int)
    res.add_argument("--trotter-m", dest="trotter_m", type=int)
    res.add_argument("--clock-bits", dest="clock_bits", type=int)
    res.add_argument("--sweep", help="JSON file with n/l/trotter_m/clock_bits ranges")
    res.add_argument("--config")
    res.add_argument("--out")
    res.set_defaults(func=cmd_resources)

    qram = sub.add_parser("qram", help="QRAM error budgets")
    qram.add_argument("--n-data", dest="n_data", type=int)
    qram.add_argument("--epsilon", type=float)
    qram.add_argument("--target-infidelity", dest="target_infidelity", type=float)
    qram.add_argument("--kappa-gamma", dest="kappa_gamma", type=float)
    qram.add_argument("--g-d", dest="g_d", type=float, default=2 * np.pi * 1e3)
    qram.add_argument("--nu", type=float, default=2 * np.pi * 1e7)
    qram.add_argument("--c-d", dest="c_d", type=float, default=4.5)
    qram.add_argument("--out")
    qram.set_defaults(func=cmd_qram)

    diag = sub.add_parser("diagnostics", help="per-iteration sparsity and condition number")
    diag.add_argument("case")
    diag.add_argument("--out")
    diag.set_defaults(func=cmd_diagnostics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CaseError, FileNotFoundError, json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except SingularJacobianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
