"""Command-line interface.

Subcommands: moments, mixing, blocks, simulate, verify.  Each writes a JSON
report (and CSV curve tables) into --out; --json prints the report to stdout
instead of the human summary.

Exit codes: 0 pass, 1 internal error, 2 input error, 3 hypothesis not met,
4 construction failure.  Reports never contain timestamps or worker counts,
so a fixed seed reproduces them byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .blocks import (
    VarianceStarvedError,
    build_blocks,
    compute_q,
    plan_partition,
    q_of_amplitude,
    select_amplitude,
    select_separation,
    verify_partition,
)
from .chain import ChainConfigError, build_chain
from .mixing import condition_h_profile, mixing_report
from .moments import engine_for
from .simulate import (
    clt_diagnostic,
    gaussian_surrogate,
    rate_scaling_diagnostic,
    sample_paths,
    variance_matching_diagnostic,
)
from .util import direction_grid, fmt_float
from .verify import run_verification

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_HYPOTHESIS = 3
EXIT_CONSTRUCTION = 4


class InputError(Exception):
    """Bad file, bad JSON, or a parameter outside its precondition."""


# -- serialization -----------------------------------------------------------


def _scrub(x):
    """JSON-ready: python scalars only, non-finite floats become null."""
    if isinstance(x, dict):
        return {str(k): _scrub(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_scrub(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, np.ndarray):
        return _scrub(x.tolist())
    return x


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_scrub(doc), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_cell(r[h]) for h in header) + "\n")


def _report(command: str, chain_name: str, config: dict,
            seeds: dict | None = None, exactness: dict | None = None) -> dict:
    return {
        "tool": "asipkit",
        "version": __version__,
        "command": command,
        "chain": chain_name,
        "config": config,
        "seeds": seeds or {},
        "exactness": exactness or {},
    }


def _emit(args, doc: dict, human_lines: list) -> None:
    if args.json:
        json.dump(_scrub(doc), sys.stdout, sort_keys=True, indent=2, allow_nan=False)
        sys.stdout.write("\n")
    else:
        for line in human_lines:
            print(line)


# -- input handling ----------------------------------------------------------


def _load_chain(path: str):
    if path is None:
        raise InputError("--chain is required")
    if not os.path.isfile(path):
        raise InputError(f"chain file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"chain file {path} is not valid JSON: {exc}") from exc
    try:
        return build_chain(doc)
    except ChainConfigError as exc:
        raise InputError(f"chain file {path}: {exc}") from exc


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InputError(message)


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _validate_common(args) -> None:
    if getattr(args, "horizon", None) is not None:
        _require(args.horizon >= 1, f"--horizon must be >= 1, got {args.horizon}")
    if getattr(args, "paths", None) is not None:
        _require(args.paths >= 1, f"--paths must be >= 1, got {args.paths}")
    if getattr(args, "seed", None) is not None:
        _require(0 <= args.seed < 2**64, f"--seed must be a u64, got {args.seed}")
    if getattr(args, "p", None) is not None:
        _require(args.p > 2.0, f"--p must exceed 2, got {args.p}")
    if getattr(args, "cp", None) is not None:
        _require(args.cp > 0.0, f"--cp must be positive, got {args.cp}")
    if getattr(args, "delta", None) is not None:
        _require(0.0 < args.delta <= 0.5, f"--delta must lie in (0, 0.5], got {args.delta}")
    if getattr(args, "amplitude", None) is not None:
        _require(args.amplitude > 0.0, f"--amplitude must be positive, got {args.amplitude}")
    if getattr(args, "separation", None) is not None:
        _require(args.separation >= 1, f"--separation must be >= 1, got {args.separation}")
    if getattr(args, "directions", None) is not None:
        _require(args.directions >= 1, f"--directions must be >= 1, got {args.directions}")


# -- subcommands -------------------------------------------------------------


def cmd_moments(args) -> int:
    chain = _load_chain(args.chain)
    horizon = args.horizon if args.horizon is not None else 100
    eng = engine_for(chain)
    vc = eng.v_curve(horizon)
    d = chain.d
    if d == 1:
        sc = vc[:, 0, 0]
        ratios = np.ones(horizon)
    else:
        eigs = np.linalg.eigvalsh(vc)
        sc = eigs[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(eigs[:, 0] > 0, eigs[:, -1] / eigs[:, 0], np.inf)
    cols = [(i, j) for i in range(d) for j in range(i, d)]
    rows = []
    for n in range(1, horizon + 1):
        row = {"n": n}
        for i, j in cols:
            row[f"v_{i}{j}"] = float(vc[n - 1, i, j])
        row["s_n"] = float(sc[n - 1])
        row["eigen_ratio"] = float(ratios[n - 1])
        rows.append(row)
    doc = _report(
        "moments", chain.name,
        {"chain_path": args.chain, "horizon": horizon, "d": d},
        exactness={"moments": "exact"},
    )
    doc["table"] = rows
    out = _out_dir(args)
    jpath = os.path.join(out, "moments_report.json")
    cpath = os.path.join(out, "moments_table.csv")
    _write_json(jpath, doc)
    _write_csv(cpath, ["n"] + [f"v_{i}{j}" for i, j in cols] + ["s_n", "eigen_ratio"], rows)
    _emit(args, doc, [
        f"exact moments for {chain.name}: horizon {horizon}, d={d}",
        f"s_{horizon} = {fmt_float(sc[-1])}",
        f"wrote {jpath}",
        f"wrote {cpath}",
    ])
    return EXIT_OK


def cmd_mixing(args) -> int:
    chain = _load_chain(args.chain)
    rep = mixing_report(chain)
    prof = condition_h_profile(chain)
    h_ks = [int(k) for k, _ in prof.gaps]
    h_gaps = [float(g) for _, g in prof.gaps]
    doc = _report(
        "mixing", chain.name,
        {"chain_path": args.chain, "k_max": len(rep.ks), "j_probe": list(rep.j_probe)},
        exactness={"coefficients": "exact", "envelope": "least-squares fit, sup-corrected"},
    )
    doc["mixing"] = {
        "k": list(rep.ks),
        "alpha": list(rep.alpha),
        "phi": list(rep.phi),
        "pi": list(rep.pi),
        "rho": list(rep.rho),
        "delta_pi": rep.delta_pi,
        "rho_sup": rep.rho_sup,
        "envelope": {
            "c": rep.envelope.c,
            "delta": rep.envelope.delta,
            "degenerate": rep.envelope.degenerate,
        },
        "n0": rep.n0,
    }
    doc["condition_h"] = {
        "k": h_ks,
        "gaps": h_gaps,
        "eps0": prof.eps0,
        "c_prime": prof.c_prime,
        "big_c": prof.big_c,
        "all_zero": prof.all_zero,
    }
    out = _out_dir(args)
    jpath = os.path.join(out, "mixing_report.json")
    _write_json(jpath, doc)
    curve = [
        {"k": k, "alpha": a, "phi": p, "envelope": rep.envelope.value(k)}
        for k, a, p in zip(rep.ks, rep.alpha, rep.phi)
    ]
    c1 = os.path.join(out, "mixing_curve.csv")
    _write_csv(c1, ["k", "alpha", "phi", "envelope"], curve)
    c2 = os.path.join(out, "condition_h.csv")
    _write_csv(c2, ["k", "gap"], [{"k": k, "gap": g} for k, g in zip(h_ks, h_gaps)])
    lines = [
        f"mixing report for {chain.name}: alpha(1)={fmt_float(rep.alpha[0])} "
        f"phi(1)={fmt_float(rep.phi[0])} delta_pi={fmt_float(rep.delta_pi)} n0={rep.n0}",
        f"wrote {jpath}",
        f"wrote {c1}",
        f"wrote {c2}",
    ]
    if rep.n0 is None:
        print("warning: n0 not found in scanned range (phi stays >= 1/2)", file=sys.stderr)
        _emit(args, doc, lines)
        return EXIT_HYPOTHESIS
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_blocks(args) -> int:
    chain = _load_chain(args.chain)
    p = args.p if args.p is not None else 4.0
    cp = args.cp if args.cp is not None else 8.0
    try:
        if args.amplitude is None and args.separation is None:
            part, plan = plan_partition(chain, p=p, c_p=cp, horizon=args.horizon)
            plan_doc = plan.to_doc()
        else:
            plan_doc = None
            envelope = None
            if args.amplitude is None or args.separation is None:
                envelope = mixing_report(chain).envelope
            r_cert = a_cert = False
            q0 = qa = None
            if args.separation is None:
                r, _ = select_separation(envelope, p, c_p=cp)
                r_cert = True
            else:
                r = args.separation
            if args.amplitude is None:
                q0, _ = compute_q(1.0, r, p, chain.L, envelope, c_p=cp)
                amplitude, _cert = select_amplitude(q0)
                qa = q_of_amplitude(amplitude, q0)
                a_cert = r_cert
            else:
                amplitude = args.amplitude
                if envelope is not None:
                    q0, qa = compute_q(amplitude, r, p, chain.L, envelope, c_p=cp)
            horizon = args.horizon if args.horizon is not None else 2048
            part = build_blocks(
                chain, amplitude, r, horizon, p=p, q0=q0, q_at_a=qa,
                r_certified=r_cert, a_certified=a_cert,
            )
    except VarianceStarvedError as exc:
        print(f"block construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except ChainConfigError as exc:
        print(f"block construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION

    dirs = None
    if args.directions is not None:
        dirs = direction_grid(chain.d, args.directions)
    ver = verify_partition(chain, part, directions=dirs)
    doc = _report(
        "blocks", chain.name,
        {
            "chain_path": args.chain, "p": p, "cp": cp,
            "amplitude_override": args.amplitude, "separation_override": args.separation,
            "horizon": args.horizon, "directions": args.directions,
        },
        exactness={"variances": "exact", "selection": "certified" if plan_doc else "as-given"},
    )
    doc["plan"] = plan_doc
    doc["partition"] = part.to_doc()
    doc["verification"] = ver.to_doc()
    out = _out_dir(args)
    jpath = os.path.join(out, "blocks_report.json")
    _write_json(jpath, doc)
    rows = [
        {"j": j + 1, "a": a, "b": b, "i_end": b + part.r,
         "norm": float(part.norms[j]), "theta_var": float(tv)}
        for j, ((a, b), tv) in enumerate(zip(part.blocks, part.theta_var()))
    ]
    cpath = os.path.join(out, "blocks_table.csv")
    _write_csv(cpath, ["j", "a", "b", "i_end", "norm", "theta_var"], rows)
    hard_ok = ver.structural_ok and ver.norms_ok and (
        ver.sandwich_pass or not ver.sandwich_gated
    ) and (ver.ratio_pass is not False or not ver.ratio_hypotheses)
    _emit(args, doc, [
        f"partition for {chain.name}: r={part.r} A={fmt_float(part.amplitude)} "
        f"blocks={part.count} cover=[1, {part.cover_end}]",
        f"verification: structural={ver.structural_ok} norms={ver.norms_ok} "
        f"sandwich=[{fmt_float(ver.sandwich_min)}, {fmt_float(ver.sandwich_max)}] "
        f"ratio_dev={fmt_float(ver.ratio_max_dev)}",
        f"wrote {jpath}",
        f"wrote {cpath}",
    ])
    if not hard_ok:
        print("warning: partition verification failed a claimed bound", file=sys.stderr)
        return EXIT_HYPOTHESIS
    return EXIT_OK


def _checkpoints(eng, horizon: int) -> tuple[list, int | None]:
    pts = np.unique(np.round(np.geomspace(1, horizon, 12)).astype(int))
    sc = eng.s_curve(horizon)
    hits = np.nonzero(sc >= 200.0)[0]
    first200 = int(hits[0]) + 1 if hits.size else None
    if first200 is not None:
        pts = np.union1d(pts, [first200])
    return [int(x) for x in pts], first200


def cmd_simulate(args) -> int:
    chain = _load_chain(args.chain)
    horizon = args.horizon if args.horizon is not None else 2048
    paths = args.paths if args.paths is not None else 10_000
    seed = args.seed if args.seed is not None else 42
    delta = args.delta if args.delta is not None else 0.1
    p = args.p if args.p is not None else 4.0
    cp = args.cp if args.cp is not None else 8.0
    eng = engine_for(chain)
    checkpoints, first200 = _checkpoints(eng, horizon)

    part = None
    part_note = None
    if args.amplitude is not None or args.separation is not None:
        # Explicit overrides build an uncertified partition; failure here is
        # a construction error, not something to paper over with a note.
        r = args.separation if args.separation is not None else 1
        amp = args.amplitude if args.amplitude is not None else 1.0
        part = build_blocks(chain, amp, r, horizon, p=p)
    else:
        try:
            cand, _plan = plan_partition(chain, p=p, c_p=cp, horizon=horizon)
            if cand.cover_end > horizon:
                part_note = (
                    f"planned cover end {cand.cover_end} exceeds horizon {horizon}; "
                    f"rerun with --horizon >= {cand.cover_end} or pass --amplitude"
                )
            else:
                part = cand
        except (VarianceStarvedError, ChainConfigError) as exc:
            part_note = f"no partition at this horizon: {exc}"

    batch = sample_paths(chain, horizon, paths, seed, checkpoints, partition=part)
    dirs = None
    if chain.d > 1:
        dirs = direction_grid(chain.d, args.directions if args.directions is not None else 4)
    ks = clt_diagnostic(batch, chain, directions=dirs)

    vm = rate = None
    surrogate_seed = None
    if part is not None and part.count >= 1:
        vm = variance_matching_diagnostic(chain, part, delta=delta, directions=dirs)
        surrogate_seed = seed + 1
        sur = gaussian_surrogate(part, paths, surrogate_seed)
        kvals = [int(x) for x in np.unique(
            np.round(np.geomspace(1, part.count, min(12, part.count))).astype(int)
        )]
        rate = rate_scaling_diagnostic(
            batch, chain, part, delta=delta, surrogate=sur, k_values=kvals,
        )

    doc = _report(
        "simulate", chain.name,
        {
            "chain_path": args.chain, "horizon": horizon, "paths": paths,
            "delta": delta, "p": p, "cp": cp,
            "amplitude_override": args.amplitude,
            "separation_override": args.separation,
            "directions": args.directions, "checkpoints": checkpoints,
            "first_checkpoint_s_ge_200": first200,
        },
        seeds={"paths": seed, "surrogate": surrogate_seed},
        exactness={
            "ks": "monte-carlo", "variance_matching": "exact",
            "rate_w1": "monte-carlo vs surrogate samples",
        },
    )
    ks_rows = [
        {"n": pt.n, "direction_id": pt.direction,
         "ks": None if pt.skipped else pt.ks,
         "stderr": None if pt.skipped else pt.stderr}
        for pt in ks.points
    ]
    doc["ks"] = {"max_ks": ks.max_ks, "points": ks_rows}
    doc["variance_matching"] = None if vm is None else {
        "c_max": vm.c_max, "delta": vm.delta, "points": vm.to_rows(),
    }
    doc["rate"] = None if rate is None else {
        "delta": rate.delta, "bounded": rate.bounded,
        "proxy_note": rate.proxy_note, "points": rate.to_rows(),
    }
    doc["partition"] = None if part is None else part.to_doc()
    doc["partition_note"] = part_note

    out = _out_dir(args)
    jpath = os.path.join(out, "simulate_report.json")
    _write_json(jpath, doc)
    kpath = os.path.join(out, "ks_curve.csv")
    _write_csv(kpath, ["n", "direction_id", "ks", "stderr"], ks_rows)
    written = [jpath, kpath]
    if vm is not None:
        vpath = os.path.join(out, "variance_matching.csv")
        _write_csv(vpath, ["k", "n", "gap", "normalizer", "ratio", "direction_id"], vm.to_rows())
        written.append(vpath)
    if rate is not None:
        rpath = os.path.join(out, "rate_curve.csv")
        _write_csv(
            rpath, ["k", "n", "w1", "stderr", "normalizer", "ratio", "sigma"], rate.to_rows()
        )
        written.append(rpath)
    head = [
        f"simulated {paths} paths of {chain.name} to horizon {horizon} (seed {seed})",
        f"ks max over checkpoints: "
        + ("all skipped" if ks.max_ks is None else fmt_float(ks.max_ks)),
    ]
    _emit(args, doc, head + [f"wrote {w}" for w in written])
    return EXIT_OK


def cmd_verify(args) -> int:
    fault = "kernel-row" if args.inject_fault else None

    def progress(name, checks):
        bad = [c for c in checks if not c.passed]
        status = "ok" if not bad else f"FAIL ({bad[0].check})"
        print(f"[verify] {name}: {status}", file=sys.stderr)

    rep = run_verification(fault=fault, progress=progress)
    doc = _report(
        "verify", "battery",
        {"fault": fault, "n_chains": len({c.chain for c in rep.checks})},
        exactness={"suite": "exact invariants only"},
    )
    doc.update(rep.to_doc())
    out = _out_dir(args)
    jpath = os.path.join(out, "verify_report.json")
    _write_json(jpath, doc)
    lines = []
    if rep.all_passed:
        lines.append(f"all {len(rep.checks)} checks passed on {doc['config']['n_chains']} chains")
    else:
        ff = rep.first_failure
        lines.append(f"{rep.n_failed} of {len(rep.checks)} checks failed")
        lines.append(f"first failure: {ff.chain} {ff.check}: {ff.detail}")
    lines.append(f"wrote {jpath}")
    _emit(args, doc, lines)
    return EXIT_OK if rep.all_passed else EXIT_HYPOTHESIS


# -- entry point --------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="asipkit",
        description="Exact moments, mixing coefficients, block partitions, and "
        "simulation diagnostics for non-stationary finite-state chains.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, chain: bool = True):
        if chain:
            sp.add_argument("--chain", help="path to a chain-spec JSON document")
        sp.add_argument("--out", help="output directory (default: .)")
        sp.add_argument("--json", action="store_true", help="print the JSON report to stdout")

    sp = sub.add_parser("moments", help="exact V_n / s_n / eigen-ratio tables")
    common(sp)
    sp.add_argument("--horizon", type=int, help="largest n (default 100)")
    sp.set_defaults(fn=cmd_moments)

    sp = sub.add_parser("mixing", help="mixing coefficients, envelope, frequency-gap profile")
    common(sp)
    sp.set_defaults(fn=cmd_mixing)

    sp = sub.add_parser("blocks", help="build and verify a variance-balanced partition")
    common(sp)
    sp.add_argument("--p", type=float, help="moment order for the covariance bound (default 4)")
    sp.add_argument("--cp", type=float, help="moment constant c_p (default 8)")
    sp.add_argument("--amplitude", type=float, help="block variance target A (default: certified)")
    sp.add_argument("--separation", type=int, help="gap length r (default: certified)")
    sp.add_argument("--horizon", type=int, help="cover horizon (default: auto)")
    sp.add_argument("--directions", type=int, help="verification direction-grid size")
    sp.set_defaults(fn=cmd_blocks)

    sp = sub.add_parser("simulate", help="seeded path sampling with CLT/variance diagnostics")
    common(sp)
    sp.add_argument("--horizon", type=int, help="path length (default 2048)")
    sp.add_argument("--paths", type=int, help="number of paths (default 10000)")
    sp.add_argument("--seed", type=int, help="base seed (default 42)")
    sp.add_argument("--delta", type=float, help="normalizer exponent offset (default 0.1)")
    sp.add_argument("--p", type=float, help="moment order for partition planning (default 4)")
    sp.add_argument("--cp", type=float, help="moment constant c_p (default 8)")
    sp.add_argument("--amplitude", type=float, help="block variance target A (default: planned)")
    sp.add_argument("--separation", type=int, help="gap length r (default: planned)")
    sp.add_argument("--directions", type=int, help="direction-grid size for d > 1 (default 4)")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("verify", help="run the hard-invariant suite on the built-in battery")
    common(sp, chain=False)
    sp.add_argument(
        "--inject-fault", action="store_true",
        help="corrupt one kernel row to demonstrate failure reporting",
    )
    sp.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        _validate_common(args)
        return args.fn(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VarianceStarvedError as exc:
        print(f"construction failure: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except ChainConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
