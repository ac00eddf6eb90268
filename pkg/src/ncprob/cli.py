"""Command-line interface.

One subcommand per experiment family; numeric output is locale-independent
CSV or JSON, deterministic for a fixed configuration and seed.  Exit codes:
0 success, 2 validation/usage error (message names the violated
precondition), 1 unexpected runtime failure.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import convolutions, graphs, loewner, markov, measures, randmat
from . import transforms


def _format_cell(x):
    if isinstance(x, (bool, int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(x) for x in row) + "\n")


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_convolve(args):
    lhs = measures.measure_from_json(_load_json(args.lhs))
    rhs = measures.measure_from_json(_load_json(args.rhs))
    if isinstance(lhs, measures.MomentSequence):
        lhs = lhs.truncate(min(lhs.order, args.order))
        rhs = rhs.truncate(min(rhs.order, args.order))
    out = convolutions.convolve(args.kind, lhs, rhs, order=args.order)
    measures.save_measure(out, args.out)
    return 0


_LAW_MAPS = {
    "semicircle": lambda a: transforms.HerglotzMap(
        lambda z: (z - a.mean - transforms.sqrt_upper((z - a.mean) ** 2
                                                      - 4 * a.var))
        / (2 * a.var), "cauchy"),
    "arcsine": lambda a: transforms.HerglotzMap(
        lambda z: 1.0 / transforms.sqrt_upper((z - a.mean) ** 2
                                              - 2 * a.var), "cauchy"),
    "marchenko-pastur": lambda a: transforms.HerglotzMap(
        lambda z: (z + 1 - a.c - transforms.sqrt_upper(
            a.c**2 - 2 * a.c * (z + 1) + (z - 1) ** 2)) / (2 * z), "cauchy"),
    "free-meixner": lambda a: transforms.free_meixner_fmap(
        a.fm_a, a.fm_c, a.fm_u).reciprocal("cauchy"),
}


def _invert_grid(args, default_lo, default_hi):
    lo = args.grid_min if args.grid_min is not None else default_lo
    hi = args.grid_max if args.grid_max is not None else default_hi
    return np.linspace(lo, hi, args.grid_points)


def _cmd_invert(args):
    candidates = list(args.atom or ())
    if args.law is not None:
        gmap = _LAW_MAPS[args.law](args)
        if args.law == "semicircle":
            r = 2 * math.sqrt(args.var)
            lo, hi = args.mean - r, args.mean + r
        elif args.law == "arcsine":
            r = math.sqrt(2 * args.var)
            lo, hi = args.mean - r, args.mean + r
        elif args.law == "marchenko-pastur":
            lo, hi = (1 - math.sqrt(args.c)) ** 2, (1 + math.sqrt(args.c)) ** 2
            if args.c < 1:
                candidates.append(0.0)
        else:
            r = 2 * math.sqrt(args.fm_c)
            lo, hi = args.fm_u - r - 2, args.fm_u + r
            candidates += transforms._free_meixner_atom_candidates(
                args.fm_a, args.fm_c, args.fm_u)
        grid = _invert_grid(args, lo - 0.2, hi + 0.2)
    else:
        if args.measure is None:
            raise ValueError("invert needs either --law or --measure")
        mu = measures.measure_from_json(_load_json(args.measure))
        if isinstance(mu, measures.MomentSequence):
            raise ValueError("invert --measure expects atoms or a grid, "
                             "not a moment sequence")
        gmap = transforms.HerglotzMap.from_measure(mu, "cauchy")
        lo, hi = mu.support_bounds()
        candidates += [x for x, _ in mu.atoms]
        grid = _invert_grid(args, lo - 0.5, hi + 0.5)
    rec = transforms.stieltjes_invert(gmap, grid, atom_candidates=candidates)
    measures.write_density_csv(rec, args.out)
    if args.json_out:
        measures.save_measure(rec, args.json_out)
    return 0


def _cmd_loewner(args):
    driving = loewner.DrivingFunction.from_json(_load_json(args.driving))
    field = loewner.HerglotzField.from_driving(driving, horizon=args.t)
    # slit measures live within the driving range widened by sqrt(2t)
    bound = driving.bound()
    half = bound + math.sqrt(2 * args.t) + 0.5
    lo = args.grid_min if args.grid_min is not None else -half
    hi = args.grid_max if args.grid_max is not None else half
    grid = np.linspace(lo, hi, args.grid_points)
    mu = loewner.chain_measure(field, args.t, grid, tol=args.tol,
                               eps_ladder=(5e-3, 2.5e-3, 1.25e-3))
    measures.write_density_csv(mu, args.out + ".csv")
    measures.save_measure(mu, args.out + ".json")
    return 0


def _cmd_sle(args):
    driving = loewner.sle_driving(args.kappa, args.T, args.dt, args.seed)
    _write_csv(args.out, ("t", "u"), zip(driving.times, driving.values))
    return 0


def _cmd_spidernet_approx(args):
    driving = loewner.DrivingFunction.from_json(_load_json(args.driving))
    res = graphs.approx_process(driving, args.T, args.n, order=args.order)
    header = ("k", "u", "vertices") + tuple(f"m{j}" for j in
                                            range(1, args.order + 1))
    rows = []
    for k in range(len(res.raw_moments)):
        scaled = res.scaled_moments(k)
        u = res.us[k - 1] if k else ""
        rows.append((k, u, res.graphs[k].n) + tuple(scaled.values))
    _write_csv(args.out, header, rows)
    return 0


_CLT_BASES = {
    "bernoulli": lambda order: measures.Bernoulli().moments(order),
}


def _cmd_clt(args):
    base = _CLT_BASES[args.base](args.order)
    out = convolutions.clt_iterate(args.kind, base, args.n)
    _write_csv(args.out, ("order", "moment"),
               [(j, float(v)) for j, v in enumerate(out.values, start=1)])
    return 0


def _cmd_markov(args):
    spec = _load_json(args.spec)
    p = markov.TransitionMatrix(np.array(spec["P"])) if "P" in spec else None
    if args.mode == "stationary":
        result = {"pi": list(markov.stationary_distribution(p))}
    elif args.mode == "converge":
        v0 = np.array(spec.get("v0", np.eye(p.n)[0]))
        pi, theta, c = markov.convergence_report(p, v0)
        result = {"pi": list(pi), "theta": theta, "C": c}
    elif args.mode == "mrp":
        v = markov.mrp_value(p, np.array(spec["R"]), spec["gamma"])
        result = {"v": list(v)}
    else:
        mdp = markov.MDPSpec(np.array(spec["transitions"]),
                             np.array(spec["R"]), spec["gamma"])
        v, policy = markov.mdp_value_iteration(mdp, tol=args.tol)
        result = {"v": list(v), "policy": [int(a) for a in policy]}
    with open(args.out, "w") as fh:
        json.dump(result, fh)
    return 0


def _cmd_ising(args):
    height = args.height if args.height is not None else args.width
    state = markov.IsingState.random(
        (height, args.width), seed=args.seed + 1,
        beta=args.beta, coupling=args.J, field=args.B,
    )
    out = markov.metropolis_ising(state, int(args.steps), args.seed)
    np.savetxt(args.out, out.spins, fmt="%d", delimiter=",")
    print(f"magnetization {markov.magnetization(out)!r}")
    return 0


def _cmd_lerw(args):
    path, walk = markov.lerw(args.width, int(args.cap), args.seed)
    _write_csv(args.out, ("x", "y"), path)
    print(f"walk length {len(walk)} erased length {len(path)}")
    return 0


def _cmd_gue(args):
    a = randmat.sample_gue(args.N, args.seed)
    evals = np.linalg.eigvalsh(a)
    _write_csv(args.out, ("eigenvalue",), [(x,) for x in evals])
    return 0


def _cmd_free_ar1(args):
    res = randmat.free_ar1(args.N, args.steps, args.c, args.noise, args.seed)
    result = {
        "mean_last": res.mean_last,
        "var_last": res.var_last,
        "mixed_moment": res.mixed_moment,
        "noise_var_last": res.noise_var_last,
    }
    text = json.dumps(result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="ncprob",
        description="Noncommutative probability experiments",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convolve", help="convolve two measure files")
    c.add_argument("--kind", required=True, choices=convolutions.KINDS)
    c.add_argument("--lhs", required=True)
    c.add_argument("--rhs", required=True)
    c.add_argument("--order", type=int, default=8)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_convolve)

    c = sub.add_parser("invert", help="Stieltjes inversion to a density CSV")
    c.add_argument("--law", choices=sorted(_LAW_MAPS))
    c.add_argument("--measure", help="measure JSON to round-trip")
    c.add_argument("--mean", type=float, default=0.0)
    c.add_argument("--sigma", dest="var", type=lambda s: float(s) ** 2,
                   default=1.0, help="standard deviation")
    c.add_argument("--c", type=float, default=1.0)
    c.add_argument("--fm-a", type=int, default=2)
    c.add_argument("--fm-c", type=int, default=1)
    c.add_argument("--fm-u", type=int, default=0)
    c.add_argument("--grid-min", type=float)
    c.add_argument("--grid-max", type=float)
    c.add_argument("--grid-points", type=int, default=1201)
    c.add_argument("--atom", type=float, action="append")
    c.add_argument("--out", required=True)
    c.add_argument("--json-out")
    c.set_defaults(fn=_cmd_invert)

    c = sub.add_parser("loewner", help="recover the chain measure at time t")
    c.add_argument("--driving", required=True)
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--grid-min", type=float)
    c.add_argument("--grid-max", type=float)
    c.add_argument("--grid-points", type=int, default=1201)
    c.add_argument("--out", required=True, help="prefix for .csv and .json")
    c.set_defaults(fn=_cmd_loewner)

    c = sub.add_parser("sle", help="sample an SLE driving function")
    c.add_argument("--kappa", type=float, required=True)
    c.add_argument("--T", type=float, required=True)
    c.add_argument("--dt", type=float, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_sle)

    c = sub.add_parser("spidernet-approx",
                       help="growing graph approximation table")
    c.add_argument("--driving", required=True)
    c.add_argument("--T", type=float, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--order", type=int, default=4)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_spidernet_approx)

    c = sub.add_parser("clt", help="scaled moments of an iterated convolution")
    c.add_argument("--kind", required=True, choices=convolutions.KINDS)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--order", type=int, default=6)
    c.add_argument("--base", default="bernoulli", choices=sorted(_CLT_BASES))
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_clt)

    c = sub.add_parser("markov", help="finite-chain solvers")
    c.add_argument("mode", choices=("stationary", "converge", "mrp", "mdp"))
    c.add_argument("--spec", required=True)
    c.add_argument("--tol", type=float, default=1e-10)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_markov)

    c = sub.add_parser("ising", help="Metropolis simulation of the Ising model")
    c.add_argument("--width", type=int, required=True)
    c.add_argument("--height", type=int)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--steps", type=float, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--J", type=float, default=1.0)
    c.add_argument("--B", type=float, default=0.0)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_ising)

    c = sub.add_parser("lerw", help="loop-erased random walk")
    c.add_argument("--width", type=int, default=100)
    c.add_argument("--cap", type=float, default=1e7)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_lerw)

    c = sub.add_parser("gue", help="sample a GUE matrix's eigenvalues")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_gue)

    c = sub.add_parser("free-ar1", help="free autoregressive toy model")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--steps", type=int, required=True)
    c.add_argument("--c", type=float, required=True)
    c.add_argument("--noise", choices=("gue", "squared_gue"), default="gue")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(fn=_cmd_free_ar1)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.fn(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
