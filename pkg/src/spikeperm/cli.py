"""Command-line interface.

Every option may also be given in a flat ``key=value`` file passed with
``--config``; keys are option names without leading dashes (``N-sim`` and
``N_sim`` are both accepted). Command-line flags win over the file.
"""

import argparse
import math
import sys
import warnings

from . import __version__
from .dendrograms import (DiagonalError, class_summary, count_dendrograms,
                          enumerate_dendrograms, eval_cumulant_density)
from .errors import HypothesisWarning
from .harness import (POWER_HEADER, NStarSearch, SaturationError, find_n_star, fit_quadratic,
                      power_curve, type_i_experiment)
from .hawkes import (HawkesAnalyticsInput, crit_rhs_hawkes, delta_phi_hawkes,
                     delta_phi_hawkes_lb, n_min_hawkes, v0, var_gap_bounds)
from .io import format_float, read_spike_csv, write_spike_csv, write_table
from .jitter import (EXPLICIT_C, JitterAnalyticsInput, crit_rhs_jitter, delta_phi_jitter,
                     n_min_jitter, noise_moments, v_indep_jitter)
from .permutation import TestConfig, permutation_test
from .simulate import HawkesParams, JitterParams, NoiseSpec, simulate_batch, trial_keys
from .svg import write_power_svg

FULL_SCALE = {"N_sim": 10000, "B": 5000}
# options that never reach the #meta record (they do not affect results)
_NOT_CONFIG = {"out", "svg", "workers", "config", "emit_null", "emit", "command", "kind", "func"}


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(float(v)) for v in str(text).split(",") if v.strip()]


def _constant(text):
    if str(text).lower() in ("explicit",):
        return EXPLICIT_C
    return float(text)


def read_config(path):
    """Parse a flat ``key=value`` file (``#`` starts a comment)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{num}: expected key=value")
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


# argument groups


def _add_jitter(p):
    p.add_argument("--lambda1", type=float, default=10.0)
    p.add_argument("--lambda2", type=float, default=10.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--noise", default="uniform:-0.1,0.1", help="uniform:lo,hi | tridec:D | triinc:D")
    p.add_argument("--margin", type=float, default=None)


def _add_hawkes(p, with_M=True):
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--a", type=float, default=3.0)
    p.add_argument("--b", type=float, default=4.0)
    if with_M:
        p.add_argument("--M", type=int, default=10)
    p.add_argument("--warmup", type=float, default=10.0)
    p.add_argument("--independent", action="store_true",
                   help="observe two separately simulated networks (null model)")


def _add_model(p, with_M=True):
    p.add_argument("--model", choices=["jitter", "hawkes"], default="jitter")
    _add_jitter(p)
    _add_hawkes(p, with_M)
    p.add_argument("--T", type=float, default=2.0)


def _add_test(p, delta=0.1):
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=delta)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)


def _add_run(p):
    p.add_argument("--N-sim", dest="N_sim", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full-scale", action="store_true",
                   help=f"full-scale run (N_sim={FULL_SCALE['N_sim']}, B={FULL_SCALE['B']})")
    p.add_argument("--out", default=None)


def _model(args, M=None):
    if args.model == "jitter":
        return JitterParams(args.lambda1, args.lambda2, args.eta, args.T,
                            NoiseSpec.parse(args.noise), args.margin)
    return HawkesParams(args.nu, args.a, args.b, args.M if M is None else M, args.T,
                        args.warmup, args.independent)


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _need_seed(args):
    if args.seed is None:
        raise SystemExit(f"error: --seed is required for '{args.command}'")


def _scale(args, N_sim=1000, B=500):
    if args.N_sim is None:
        args.N_sim = FULL_SCALE["N_sim"] if args.full_scale else N_sim
    if args.B is None:
        args.B = FULL_SCALE["B"] if args.full_scale else B


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)


# commands


def cmd_simulate(args):
    _need_seed(args)
    model = _model(args)
    r1, r2 = simulate_batch(model, trial_keys(args.seed, args.n))
    from .core import Sample
    sample = Sample.from_arrays(r1.to_list(), r2.to_list(), model.T)
    text = write_spike_csv(sample, args.out, _config(args))
    _emit(text, args.out)


def cmd_test(args):
    _need_seed(args)
    if args.B is None:
        args.B = 5000
    sample = read_spike_csv(args.input, T=args.T)
    cfg = TestConfig(args.alpha, args.delta, args.B, args.seed)
    res = permutation_test(sample, cfg, keep_null=args.emit_null is not None)
    print("statistic,quantile,p_value,reject")
    print(",".join([format_float(res.statistic), format_float(res.quantile),
                    format_float(res.p_value), format_float(res.reject)]))
    if args.emit_null:
        rows = [(k + 1, v) for k, v in enumerate(res.permuted_statistics)]
        write_table(args.emit_null, ["permutation", "statistic"], rows, _config(args))


class _Collect(warnings.catch_warnings):
    def __init__(self):
        super().__init__(record=True)

    def __enter__(self):
        self.log = super().__enter__()
        warnings.simplefilter("always", HypothesisWarning)
        return self

    def messages(self):
        return sorted({str(w.message) for w in self.log if issubclass(w.category, HypothesisWarning)})


def cmd_analytic_jitter(args):
    noise = NoiseSpec.parse(args.noise)
    rows, notes = [], []
    for d in _floats(args.delta):
        inp = JitterAnalyticsInput(args.lambda1, args.lambda2, args.eta, d, args.T, noise,
                                   _constant(args.C), _constant(args.Cprime))
        with _Collect() as c:
            m = noise_moments(noise, d)
            rows.append([d, m["p"], m["m1"], delta_phi_jitter(inp), v_indep_jitter(inp),
                         crit_rhs_jitter(inp, args.n, args.alpha, args.beta, strict=False),
                         n_min_jitter(inp, args.alpha, args.beta)])
        notes += [f"delta={d!r}: {msg}" for msg in c.messages()]
    cfg = _config(args)
    cfg["note"] = "crit_rhs and n_min are scaling bounds (unknown absolute constants C, C')"
    cfg["hypothesis_violations"] = notes
    text = write_table(args.out, ["delta", "p", "m1", "delta_phi", "v_indep", "crit_rhs", "n_min"],
                       rows, cfg)
    _emit(text, args.out)


def cmd_analytic_hawkes(args):
    rows, notes = [], []
    for d in _floats(args.delta):
        inp = HawkesAnalyticsInput(args.nu, args.a, args.b, args.M, d, args.T,
                                   _constant(args.C), _constant(args.Cprime))
        with _Collect() as c:
            lb = delta_phi_hawkes_lb(inp, strict=False)
            gaps = var_gap_bounds(inp)
            rows.append([d, delta_phi_hawkes(inp), lb, v0(inp.nu, inp.ell, d, inp.T),
                         gaps["gap_indep"], gaps["gap_obs"],
                         crit_rhs_hawkes(inp, args.n, args.alpha, args.beta, strict=False),
                         n_min_hawkes(inp, args.alpha, args.beta, strict=False)])
        notes += [f"delta={d!r}: {msg}" for msg in c.messages()]
    cfg = _config(args)
    cfg["note"] = ("delta_phi_lb, crit_rhs and n_min are scaling bounds; values flagged in "
                   "hypothesis_violations are illustrative only")
    cfg["hypothesis_violations"] = notes
    header = ["delta", "delta_phi", "delta_phi_lb", "v0", "gap_indep", "gap_obs", "crit_rhs", "n_min"]
    text = write_table(args.out, header, rows, cfg)
    _emit(text, args.out)


def _test_cfg(args):
    return TestConfig(args.alpha, args.delta, args.B, args.seed)


def cmd_power(args):
    _need_seed(args)
    _scale(args)
    grid = _floats(args.grid)
    if args.param in ("n", "M"):
        grid = [int(g) for g in grid]
    pts = power_curve(_model(args), _test_cfg(args), args.param, grid, args.n, args.N_sim,
                      workers=args.workers)
    text = write_table(args.out, POWER_HEADER, [p.row() for p in pts], _config(args))
    _emit(text, args.out)
    if args.svg:
        write_power_svg(pts, args.svg, title=f"power vs {args.param}")


def cmd_typei(args):
    _need_seed(args)
    _scale(args, N_sim=2000)
    pt = type_i_experiment(_model(args), _test_cfg(args), args.n, args.N_sim, workers=args.workers)
    text = write_table(args.out, POWER_HEADER, [pt.row()], _config(args))
    _emit(text, args.out)


def cmd_nstar(args):
    _need_seed(args)
    if args.full_scale:
        args.beta = 0.05 if args.beta is None else args.beta
        args.Ms = args.Ms or "10,15,20,25,30"
    _scale(args, N_sim=500)
    if args.beta is None:
        args.beta = 0.2
    Ms = _ints(args.Ms or "4,6,8")
    search = NStarSearch(args.n_lo, args.step, args.n_max, args.N_sim)
    rows, ns = [], []
    for M in Ms:
        model = HawkesParams(args.nu, args.a, args.b, M, args.T, args.warmup)
        with warnings.catch_warnings():
            warnings.simplefilter("error", HypothesisWarning)
            try:
                res = find_n_star(model, _test_cfg(args), args.beta, search, workers=args.workers)
            except SaturationError as exc:
                raise SystemExit(f"error: M={M}: {exc}; probes={exc.probes}")
        rows.append([M, res.n_star, res.probe_text()])
        ns.append(res.n_star)
    cfg = _config(args)
    if len(Ms) >= 2 and len(set(Ms)) >= 2:
        fit = fit_quadratic(Ms, ns)
        se = None if math.isnan(fit["c1_se"]) else fit["c1_se"]
        cfg["fit"] = {"c0": fit["c0"], "c1": fit["c1"], "c1_se": se}
        print(f"fit: n* = {fit['c0']:.4g} + {fit['c1']:.4g} M^2 (se of slope: {se})",
              file=sys.stderr)
    text = write_table(args.out, ["M", "n_star", "probes"], rows, cfg)
    _emit(text, args.out)


def cmd_dendrograms(args):
    lines = [f"l={args.l} count={count_dendrograms(args.l)}"]
    for label, shape, mult in class_summary(args.l):
        lines.append(f"class {label} shape={shape} multiplicity={mult}")
    if args.emit:
        body = "\n".join(str(d) for d in enumerate_dendrograms(args.l)) + "\n"
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(body)
    print("\n".join(lines))


def cmd_cumulant(args):
    times = _floats(args.times)
    if len(times) != args.l:
        raise SystemExit(f"error: --times needs {args.l} values")
    try:
        val = eval_cumulant_density(args.l, times, args.mu, args.a, args.b, args.quad_tol)
    except DiagonalError as exc:
        raise SystemExit(f"error: {exc}")
    print(format_float(val))


def build_parser():
    p = argparse.ArgumentParser(prog="spikeperm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate trials and write the spike-train CSV")
    _add_model(s)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("test", help="permutation test on a spike-train CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--T", type=float, default=None)
    _add_test(s)
    s.add_argument("--emit-null", dest="emit_null", default=None)
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("analytic", help="closed-form quantities")
    asub = s.add_subparsers(dest="kind", required=True)
    for kind, func in (("jitter", cmd_analytic_jitter), ("hawkes", cmd_analytic_hawkes)):
        a = asub.add_parser(kind)
        if kind == "jitter":
            _add_jitter(a)
        else:
            _add_hawkes(a)
        a.add_argument("--T", type=float, default=2.0)
        a.add_argument("--delta", default="0.1", help="one value or a comma-separated list")
        a.add_argument("--alpha", type=float, default=0.05)
        a.add_argument("--beta", type=float, default=0.05)
        a.add_argument("--n", type=int, default=200)
        a.add_argument("--C", default="1", help="constant C, a number or 'explicit'")
        a.add_argument("--Cprime", default="1")
        a.add_argument("--out", default=None)
        a.set_defaults(func=func)

    s = sub.add_parser("power", help="power curve over a parameter grid")
    _add_model(s)
    _add_test(s)
    _add_run(s)
    s.add_argument("--param", choices=["delta", "n", "M", "eta"], default="delta")
    s.add_argument("--grid", default="0.05,0.1,0.15,0.2")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--svg", default=None)
    s.set_defaults(func=cmd_power)

    s = sub.add_parser("typeI", help="rejection rate under a null model")
    _add_model(s)
    _add_test(s)
    _add_run(s)
    s.add_argument("--n", type=int, default=100)
    s.set_defaults(func=cmd_typei)

    s = sub.add_parser("nstar", help="minimal n reaching power 1 - beta, per network size")
    _add_hawkes(s, with_M=False)
    s.add_argument("--T", type=float, default=2.0)
    _add_test(s)
    _add_run(s)
    s.add_argument("--Ms", default=None, help="comma-separated network sizes (default 4,6,8)")
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--n-lo", dest="n_lo", type=int, default=10)
    s.add_argument("--step", type=int, default=10)
    s.add_argument("--n-max", dest="n_max", type=int, default=2000)
    s.set_defaults(func=cmd_nstar)

    s = sub.add_parser("dendrograms", help="count and classify dendrograms")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--emit", default=None)
    s.set_defaults(func=cmd_dendrograms)

    s = sub.add_parser("cumulant", help="cumulant density at distinct times")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--times", required=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--quad-tol", dest="quad_tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_cumulant)
    return p


def _subparser_for(parser, argv):
    """The innermost subparser selected by ``argv`` (for applying config defaults)."""
    node = parser
    for tok in argv:
        acts = [a for a in node._actions if isinstance(a, argparse._SubParsersAction)]
        if not acts:
            break
        if tok in acts[0].choices:
            node = acts[0].choices[tok]
    return node


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        cfg = read_config(known.config)
        target = _subparser_for(parser, rest)
        dests = {a.dest: a for a in target._actions}
        unknown = [k for k in cfg if k not in dests]
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        converted = {}
        for k, v in cfg.items():
            act = dests[k]
            if isinstance(act, argparse._StoreTrueAction):
                converted[k] = v.lower() in ("1", "true", "yes", "on")
            else:
                converted[k] = act.type(v) if act.type else v
            act.required = False
        target.set_defaults(**converted)
    args = parser.parse_args(rest)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
