"""Command line interface: ``delaydiff {simulate,analyze,transport,reproduce,sweep}``.

Exit codes: 0 success, 1 usage or configuration error, 2 failed check.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core import ConfigError, DelayDiffError, Scenario, Signal, SystemMatrix

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


def _load_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc


def _emit(payload, out: str | None = None) -> None:
    text = json.dumps(_clean(payload), indent=2)
    if out:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _parse_times(raw: str) -> list[float]:
    try:
        ts = [float(x) for x in raw.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--times expects comma-separated numbers, got {raw!r}") from exc
    if not ts or any(t < 0 for t in ts):
        raise UsageError("--times needs at least one nonnegative time")
    return ts


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _norm_table(scn: Scenario, traj):
    from .kernel import largest_delay_batch
    from .solver import window_norm

    ts = traj.times
    tables = {}
    for req in scn.norms:
        if req.window == "h":
            widths = largest_delay_batch(scn.delay, ts, scn.horizon)
        else:
            widths = np.full(ts.shape, float(req.window))
        rows = []
        for t, w in zip(ts, widths):
            if t - w < scn.initial.support[0] - 1e-12 or not np.isfinite(w):
                continue
            rows.append([float(t), float(w), window_norm(traj, float(t), req.p, float(w))])
        p = "inf" if math.isinf(req.p) else f"{req.p:g}"
        tables[f"norm_p{p}_w{req.window}"] = rows
    return tables


def cmd_simulate(args) -> int:
    from .solver import solve_stepping, solve_trajectory

    scn = Scenario.from_dict(_load_json(args.config))
    traj = solve_stepping(scn) if args.method == "stepping" else solve_trajectory(scn)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    norms = _norm_table(scn, traj)
    summary = {"method": traj.method, "residual": traj.residual_report, "notes": traj.notes,
               "points": int(traj.times.size)}
    if args.format == "csv":
        traj.to_csv(out / "trajectory.csv")
        for name, rows in norms.items():
            _write_csv(out / f"{name}.csv", ["t", "window", "norm"], rows)
        _emit(summary, str(out / "summary.json"))
    else:
        _emit({**summary, "trajectory": traj.to_dict(), "norms": norms},
              str(out / "trajectory.json"))
    print(f"wrote {traj.times.size} samples to {out} (residual {traj.residual_report:.3g})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    from .audit import audit_hypotheses
    from .stability import CertificateRefused, certify_exponential, certify_exponential_Lp

    scn = Scenario.from_dict(_load_json(args.config))
    p = args.p
    if p is None:
        finite = [n.p for n in scn.norms if not math.isinf(n.p)]
        p = finite[0] if finite else None
    report = audit_hypotheses(scn.delay, scn.matrix, scn.horizon, p)
    certs = {}
    kinds = [("pointwise-exp", lambda: certify_exponential(scn, args.epsilon)),
             ("sup-window-exp", lambda: certify_exponential(scn, args.epsilon, "sup-window-exp"))]
    if p is not None:
        kinds.append(("Lp-exp", lambda: certify_exponential_Lp(scn, p, args.epsilon)))
    for name, make in kinds:
        try:
            certs[name] = make().to_dict()
        except CertificateRefused as exc:
            certs[name] = {"refused": str(exc), **exc.info}
    norm = scn.matrix.adapted_norm(min(args.epsilon, max((1 - scn.matrix.spectral_radius) / 2,
                                                        1e-6)))
    _emit({"hypotheses": report.to_dict(), "certificates": certs,
           "spectral_radius": scn.matrix.spectral_radius, "adapted_norm": norm.to_dict()},
          args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------


def _transport_setup(cfg):
    from .transport import CharacteristicMaps, TransportField

    if not isinstance(cfg, dict):
        raise ConfigError("", "configuration must be a JSON object")
    for key in ("field", "matrix", "initial"):
        if key not in cfg:
            raise ConfigError("/" + key, "missing required field")
    try:
        fld = TransportField.from_dict(cfg["field"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("/field", str(exc)) from exc
    try:
        A = SystemMatrix(cfg["matrix"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("/matrix", str(exc)) from exc
    init = dict(cfg["initial"]) if isinstance(cfg["initial"], dict) else cfg["initial"]
    if isinstance(init, dict):
        init.setdefault("support", [0.0, 1.0])
        init.setdefault("closed_right", True)
    u0 = Signal.from_dict(init, "/initial")
    if u0.support != (0.0, 1.0) or not u0.closed_right:
        raise ConfigError("/initial/support", "u0 must live on the closed interval [0, 1]")
    if u0.dim != A.dim:
        raise ConfigError("/initial", "u0 and matrix dimensions differ")
    try:
        maps = CharacteristicMaps(fld, cfg.get("ode_step"), float(cfg.get("root_tol", 1e-10)))
    except (TypeError, ValueError) as exc:
        raise ConfigError("/ode_step", str(exc)) from exc
    return maps, A, u0


def cmd_transport(args) -> int:
    from .transport import solve_transport

    cfg = _load_json(args.config)
    maps, A, u0 = _transport_setup(cfg)
    times = _parse_times(args.times)
    xg = np.linspace(0.0, 1.0, args.points)
    out = Path(args.out)
    summary = {"T0": maps.T0, "alpha": maps.field.alpha, "beta0": maps.field.beta0,
               "beta1": maps.field.beta1, "snapshots": []}
    for t in times:
        sol = solve_transport(maps, A, u0, t, xg)
        path = out / f"u_t{t:g}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        sol.to_csv(path)
        summary["snapshots"].append({"t": t, "file": path.name, "tau": maps.induced_delay(t),
                                     "sup": float(np.max(np.abs(sol.u)))})
        summary["compatibility_gap"] = sol.compatibility_gap
    _emit(summary, str(out / "summary.json"))
    print(f"wrote {len(times)} snapshots to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


def cmd_reproduce(args) -> int:
    from .registry import REGISTRY, run_example, write_result

    if args.list:
        for ex in REGISTRY.values():
            print(f"{ex.example_id:28s} {ex.title}")
        return EXIT_OK
    if args.example is None:
        raise UsageError("reproduce needs an EXAMPLE_ID (or --list)")
    ids = list(REGISTRY) if args.example == "all" else [args.example]
    unknown = [i for i in ids if i not in REGISTRY]
    if unknown:
        raise UsageError(f"unknown example {unknown[0]!r}; try --list")
    ok = True
    for eid in ids:
        res = run_example(eid)
        out = Path(args.out) / eid if len(ids) > 1 else Path(args.out)
        write_result(res, out)
        for c in res.checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"{status} {eid} | {c.name} | observed={c.observed!r} expected={c.expected!r} "
                  f"tol={c.tol:g} [{c.provenance}]")
        print(f"{eid}: {'passed' if res.passed else 'FAILED'} in {res.seconds:.2f} s")
        ok &= res.passed
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _sweep_family(spec, base: Scenario):
    from .stability import scalar_shift_family

    if "scalar_shift" in spec:
        try:
            a = float(spec["scalar_shift"]["a"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("/sweep/scalar_shift/a", "expected a number") from exc
        A_k, x0_k = scalar_shift_family(a, base.initial.support)
        return A_k, x0_k, int(spec.get("k_max", 100))
    if "matrices" in spec:
        mats = []
        for i, m in enumerate(spec["matrices"]):
            try:
                mats.append(SystemMatrix(m))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"/sweep/matrices/{i}", str(exc)) from exc
        inits = [Signal.from_dict(s, f"/sweep/initials/{i}")
                 for i, s in enumerate(spec.get("initials", []))]
        if inits and len(inits) != len(mats):
            raise ConfigError("/sweep/initials", "needs one entry per matrix")
        return (lambda k: mats[k - 1], (lambda k: inits[k - 1]) if inits else
                (lambda k: base.initial), len(mats))
    raise ConfigError("/sweep", "needs 'scalar_shift' or 'matrices'")


def cmd_sweep(args) -> int:
    from .stability import continuous_dependence_sweep

    cfg = _load_json(args.config)
    if not isinstance(cfg, dict) or "sweep" not in cfg:
        raise ConfigError("/sweep", "missing required field")
    spec = cfg["sweep"]
    if not isinstance(spec, dict):
        raise ConfigError("/sweep", "must be an object")
    base = Scenario.from_dict({k: v for k, v in cfg.items() if k != "sweep"})
    A_k, x0_k, k_max = _sweep_family(spec, base)
    window = spec.get("window")
    mode = spec.get("mode", "uniform-compact")
    try:
        res = continuous_dependence_sweep(A_k, x0_k, base, k_max, mode=mode,
                                          window=tuple(window) if window else None)
    except ValueError as exc:
        raise ConfigError("/sweep/mode", str(exc)) from exc
    if args.out:
        _write_csv(Path(args.out), ["k", "distance"], [[r["k"], r["distance"]] for r in res["rows"]])
        print(f"wrote {len(res['rows'])} rows to {args.out}")
    else:
        print("k,distance")
        for r in res["rows"]:
            print(f"{r['k']},{r['distance']!r}")
    print(f"# mode={res['mode']} window={res['window']} "
          f"eventually_decreasing={res['eventually_decreasing']}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaydiff",
        description="Solve and analyse x(t) = A x(t - tau(t)).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="solve a scenario and write the trajectory")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--method", choices=("representation", "stepping"), default="representation")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="hypothesis report and decay certificates")
    p.add_argument("--config", required=True)
    p.add_argument("--p", type=float, default=None, help="exponent for the H9 and Lp checks")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transport", help="solve the boundary-coupled transport equation")
    p.add_argument("--config", required=True, help="JSON with field, matrix and initial")
    p.add_argument("--times", required=True, help="comma-separated snapshot times")
    p.add_argument("--out", default="transport_out")
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("reproduce", help="run a registered example and check it")
    p.add_argument("example", nargs="?", help="example id, or 'all'")
    p.add_argument("--out", default="reproduce_out")
    p.add_argument("--list", action="store_true", help="list registered examples")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("sweep", help="continuous-dependence distance table")
    p.add_argument("--config", required=True, help="scenario JSON with a 'sweep' section")
    p.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error at {exc.pointer or '/'}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DelayDiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


run = main

if __name__ == "__main__":
    sys.exit(main())
