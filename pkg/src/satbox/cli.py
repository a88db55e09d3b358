"""Command line front end.

Exit codes: 0 success, 1 verification failure (trace mismatch, missed
reachability, blow-up), 2 usage or precondition error.  Box lengths are
decimal or fraction strings ("1,1.5,7/5"), parsed exactly to rationals
for the exact paths and converted to floats for the numeric paths.
Floats are printed as shortest round-trip decimals (at most 17
significant digits); exact rationals as [numerator, denominator] pairs.
"""

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from . import galerkin
from .basis import DomainSpec, TrigVectorField, eigenmodes, eigenvalue, enumerate_frequencies
from .interact import FieldExpansion, advection_sym, bilinear_sym, project
from .saturation import saturate
from .trace import TraceMismatch, paper_trace


def _parse_domain(text: str, nu=1.0) -> DomainSpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"domain must be three comma-separated lengths, got {text!r}")
    return DomainSpec(*(Fraction(p) for p in parts), nu=Fraction(str(nu)))


def _parse_freq(text: str):
    parts = tuple(int(p) for p in text.split(","))
    if len(parts) != 3 or any(p < 0 for p in parts):
        raise ValueError(f"frequency must be three nonnegative integers, got {text!r}")
    return parts


def _parse_vec(text: str):
    parts = tuple(float(p) for p in text.split(","))
    if len(parts) != 3:
        raise ValueError(f"vector must be three numbers, got {text!r}")
    return parts


def _rat(x: Fraction):
    return [x.numerator, x.denominator]


def _mode_key_json(key):
    j, k = key
    return [j, list(k)]


def _read_state(path, sys_obj):
    with open(path) as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise ValueError(f"state file {path} must hold a JSON array")
    u = np.zeros(sys_obj.n_modes)
    index = {key: i for i, key in enumerate(sys_obj.keys)}
    for rec in records:
        try:
            key = (int(rec["j"]), tuple(int(x) for x in rec["k"]))
            value = float(rec["value"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed state record {rec!r} in {path}") from exc
        if key not in index:
            raise ValueError(f"mode {key} in {path} is outside the cutoff-{sys_obj.cutoff} system")
        u[index[key]] = value
    return u


def _write_state(path, sys_obj, u):
    records = [
        {"j": key[0], "k": list(key[1]), "value": float(u[i])}
        for i, key in enumerate(sys_obj.keys)
        if u[i] != 0.0
    ]
    with open(path, "w") as fh:
        json.dump(records, fh, indent=1)
        fh.write("\n")


def cmd_basis(args) -> int:
    domain = _parse_domain(args.domain, args.nu)
    fdom = domain.as_float()
    for k in enumerate_frequencies(args.max):
        for mode in eigenmodes(k, fdom):
            rec = {
                "k": list(mode.k),
                "j": mode.j,
                "w": [float(x) for x in mode.w],
                "eigenvalue": eigenvalue(k, fdom),
                "norm_sq": float(mode.norm_sq),
            }
            print(json.dumps(rec))
    return 0


def cmd_interact(args) -> int:
    domain = _parse_domain(args.domain, args.nu).as_float()
    a = eigenmodes(_parse_freq(args.k), domain)[args.j - 1]
    b = eigenmodes(_parse_freq(args.m), domain)[args.jm - 1]
    term = advection_sym(a, b, domain)
    expansion = bilinear_sym(a, b, domain)
    out = {
        "terms": [
            {"n": list(n), "z": [float(x) for x in z]} for n, z in sorted(term.terms.items())
        ],
        "expansion": [
            {"j": j, "k": list(k), "value": float(v)} for (j, k), v in sorted(expansion.items())
        ],
    }
    print(json.dumps(out, indent=1))
    return 0


def cmd_project(args) -> int:
    domain = _parse_domain(args.domain, args.nu).as_float()
    expansion = project(TrigVectorField(n=_parse_freq(args.n), z=_parse_vec(args.z)), domain)
    out = [{"j": j, "k": list(k), "value": float(v)} for (j, k), v in sorted(expansion.items())]
    print(json.dumps(out, indent=1))
    return 0


def cmd_saturate(args) -> int:
    domain = _parse_domain(args.domain)
    if args.cutoff < 3:
        raise ValueError("cutoff must be at least 3")
    report = saturate(args.cutoff, args.max_gen, domain.as_float())
    if args.out:
        certs = [
            {
                "target": _mode_key_json(c.target),
                "a": _mode_key_json(c.pair_a),
                "b": _mode_key_json(c.pair_b),
                "z": [[_rat(x) for x in z] for z in c.z_vectors],
                "det_num": c.det_value.numerator,
                "det_den": c.det_value.denominator,
                "evidence": c.rank_evidence,
                "generation": c.generation,
            }
            for c in report.certificates
        ]
        with open(args.out, "w") as fh:
            json.dump(certs, fh, indent=1)
            fh.write("\n")
    for q in range(4, args.cutoff + 1):
        ok = report.inclusion_holds(q)
        gen = report.covering_generation(q) if report.complete else -1
        print(f"shell {q}: covered at generation {gen} (bound {q - 1}) -> {'ok' if ok else 'FAIL'}")
    if not report.complete:
        print(f"unreached: {report.unreached}", file=sys.stderr)
        return 1
    return 0 if report.all_inclusions_hold() else 1


def cmd_trace_proof(args) -> int:
    domain = _parse_domain(args.domain)
    if args.q < 3:
        raise ValueError("q must be at least 3")
    try:
        report = paper_trace(args.q, domain)
    except TraceMismatch as exc:
        print(f"MISMATCH {exc}", file=sys.stderr)
        return 1
    for check in report.checks:
        det = check.det_value
        print(f"ok {check.check_id} target={check.target} det={det.numerator}/{det.denominator}")
    print(f"{len(report.checks)} checks passed at q={args.q}")
    return 0


def _load_schedule(path, sys_obj):
    with open(path) as fh:
        data = json.load(fh)
    index = {key: i for i, key in enumerate(sys_obj.keys)}
    ctrl_idx = []
    for j, k in (tuple(m) for m in data["control_modes"]):
        key = (int(j), tuple(int(x) for x in k))
        if key not in index:
            raise ValueError(f"control mode {key} outside the system")
        ctrl_idx.append(index[key])
    durations = tuple(float(s["duration"]) for s in data["segments"])
    values = np.array([[float(v) for v in s["values"]] for s in data["segments"]])
    if not set(ctrl_idx) <= set(sys_obj.control_idx.tolist()):
        raise ValueError("schedule actuates branches outside the system control set")
    full = np.zeros((len(durations), sys_obj.n_modes))
    for col, idx in enumerate(ctrl_idx):
        full[:, idx] = values[:, col]
    return galerkin.ControlSchedule(durations=durations, values=full[:, sys_obj.control_idx])


def _dump_schedule(path, sys_obj, schedule):
    data = {
        "horizon": schedule.horizon,
        "control_modes": [_mode_key_json(sys_obj.keys[i]) for i in sys_obj.control_idx],
        "segments": [
            {"duration": float(d), "values": [float(v) for v in row]}
            for d, row in zip(schedule.durations, schedule.values)
        ],
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def _load_expansion(path):
    with open(path) as fh:
        records = json.load(fh)
    return FieldExpansion(
        {(int(r["j"]), tuple(int(x) for x in r["k"])): float(r["value"]) for r in records}
    )


def cmd_simulate(args) -> int:
    domain = _parse_domain(args.domain, args.nu)
    h_spec = _load_expansion(args.h) if args.h else None
    sys_obj = galerkin.assemble(domain, args.cutoff, h_spec=h_spec)
    u0 = _read_state(args.u0, sys_obj) if args.u0 else np.zeros(sys_obj.n_modes)
    if args.schedule:
        schedule = _load_schedule(args.schedule, sys_obj)
    else:
        schedule = galerkin.ControlSchedule.zeros(args.T, 1, len(sys_obj.control_idx))
    try:
        traj = galerkin.integrate(sys_obj, u0, schedule, args.dt)
    except FloatingPointError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return 1
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["time"] + [f"u_{j}_{k[0]}_{k[1]}_{k[2]}" for j, k in sys_obj.keys]
        writer.writerow(header)
        for t, state in zip(traj.times, traj.states):
            writer.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in state])
    print(f"wrote {len(traj.times)} samples x {sys_obj.n_modes} modes to {args.out}")
    return 0


def cmd_steer(args) -> int:
    domain = _parse_domain(args.domain, args.nu)
    sys_obj = galerkin.assemble(domain, args.cutoff)
    target = _read_state(args.target, sys_obj)
    u0 = _read_state(args.u0, sys_obj) if args.u0 else np.zeros(sys_obj.n_modes)
    result = galerkin.steer(
        sys_obj, u0, target, horizon=args.T, n_segments=args.segments,
        max_iters=args.iters, dt=args.dt,
    )
    for it, J, step in result.history:
        print(f"iter {it} J {J:.17g} step {step:.17g}")
    _dump_schedule(args.out, sys_obj, result.schedule)
    print(f"final V-distance {result.distance:.17g}"
          + (" (stagnated)" if result.stagnated else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satbox",
        description="Stokes eigenbasis, interaction certificates and steered "
        "Galerkin dynamics on a 3D box with free-slip walls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="dump eigenmode records as JSON lines")
    p.add_argument("--max", type=int, required=True, help="max frequency per axis")
    p.add_argument("--domain", required=True, help="L1,L2,L3")
    p.add_argument("--nu", type=float, default=1.0)
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("interact", help="advection expansion and projection of a mode pair")
    p.add_argument("--k", required=True)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--m", required=True)
    p.add_argument("--jm", type=int, default=1)
    p.add_argument("--domain", required=True)
    p.add_argument("--nu", type=float, default=1.0)
    p.set_defaults(func=cmd_interact)

    p = sub.add_parser("project", help="project a trig vector field onto the eigenbasis")
    p.add_argument("--n", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--nu", type=float, default=1.0)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("saturate", help="run the reachability recursion with certificates")
    p.add_argument("--cutoff", type=int, required=True)
    p.add_argument("--max-gen", type=int, default=10)
    p.add_argument("--domain", required=True)
    p.add_argument("--out", default=None, help="certificate log (JSON)")
    p.set_defaults(func=cmd_saturate)

    p = sub.add_parser("trace-proof", help="replay the constructive proof exactly")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--domain", required=True)
    p.set_defaults(func=cmd_trace_proof)

    p = sub.add_parser("simulate", help="integrate the truncated dynamics")
    p.add_argument("--cutoff", type=int, default=4)
    p.add_argument("--domain", required=True)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--T", type=float, default=5.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--u0", default=None, help="initial state (JSON)")
    p.add_argument("--schedule", default=None, help="control schedule (JSON)")
    p.add_argument("--h", default=None, help="constant forcing (JSON expansion)")
    p.add_argument("--out", required=True, help="trajectory CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("steer", help="steer toward a target state")
    p.add_argument("--target", required=True, help="target state (JSON)")
    p.add_argument("--segments", type=int, default=8)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--cutoff", type=int, default=4)
    p.add_argument("--domain", required=True)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--T", type=float, default=5.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--u0", default=None)
    p.add_argument("--out", required=True, help="schedule output (JSON)")
    p.set_defaults(func=cmd_steer)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
