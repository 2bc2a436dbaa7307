"""Command line entry point: `alphap <group> <command> [flags]`.

Exit codes: 0 success, 2 a checked identity or bound failed, 3 bad parameters.
"""
from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import AlphapError, ParamError
from .lab import FORMATS, ExperimentReport, dumps_json, emit_report

EXIT_OK, EXIT_CHECK, EXIT_PARAM = 0, 2, 3

_COMMON_DEFAULTS = {"d": -1, "alpha": "sqrt2_sqrt3", "seed": 0, "format": "json", "threads": 1}


class CheckFailed(Exception):
    """A verification ran but its assertion did not hold."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--d", type=int, default=None, help="field discriminant parameter (default -1)")
    g.add_argument("--alpha", default=None, help="preset name or 're,im' decimals (default sqrt2_sqrt3)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None, help="output path, or json|csv|plot to pick the format")
    g.add_argument("--format", choices=FORMATS, default=None)
    g.add_argument("--config", default=None, help="flat key=value file; flags override it")
    g.add_argument("--threads", type=int, default=None, help="accepted; execution is single-threaded")
    g.add_argument("--params", nargs="*", default=[], metavar="KEY=VAL")
    g.add_argument("--timing", action="store_true", help="include wall-clock timings in JSON")
    return p


def _read_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParamError(f"config line without '=': {line!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _parse_kv(items: list) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise ParamError(f"--params expects KEY=VAL, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


class Ctx:
    """Resolved options: flag, then config file, then built-in default."""

    def __init__(self, ns: argparse.Namespace):
        self.ns = ns
        cfg = _read_config(ns.config) if ns.config else {}
        self.params = {k: v for k, v in cfg.items() if k not in _COMMON_DEFAULTS and k not in ("out",)}
        self.params.update(_parse_kv(ns.params))
        for key, default in _COMMON_DEFAULTS.items():
            val = getattr(ns, key, None)
            if val is None:
                val = cfg.get(key, default)
            setattr(self, key, type(default)(val) if not isinstance(val, type(default)) else val)
        out = ns.out if ns.out is not None else cfg.get("out")
        self.out_path = None
        if out in FORMATS:
            if ns.format is None:
                self.format = out
        elif out:
            self.out_path = out
        if self.format not in FORMATS:
            raise ParamError(f"unknown format {self.format!r}")
        if self.threads < 1:
            raise ParamError("--threads must be positive")

    def get(self, key: str, default=None, conv=str):
        """Dedicated flag, then --params/config, then default."""
        v = getattr(self.ns, key, None)
        if v is None:
            v = self.params.get(key, default)
        if v is None:
            raise ParamError(f"missing parameter {key!r}")
        try:
            return conv(v)
        except (TypeError, ValueError) as exc:
            raise ParamError(f"bad value for {key}: {v!r}") from exc

    @property
    def field(self):
        from .qfield import make_field

        return make_field(self.d)

    @property
    def alpha_coords(self):
        from .qfield import alpha_from_spec

        return alpha_from_spec(self.field, self.alpha)


def _num(v) -> int:
    """Integer from '1000000', '1e6' or '2**12'."""
    s = str(v).strip()
    if "**" in s:
        a, b = s.split("**", 1)
        return int(a) ** int(b)
    if "^" in s:
        a, b = s.split("^", 1)
        return int(a) ** int(b)
    try:
        return int(s)
    except ValueError:
        f = float(s)
        if not f.is_integer():
            raise ValueError(s)
        return int(f)


def _frac(v) -> Fraction:
    return Fraction(str(v).strip())


def _write(ctx: Ctx, data: bytes):
    if ctx.out_path:
        with open(ctx.out_path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _emit(ctx: Ctx, report: ExperimentReport):
    _write(ctx, emit_report(report, ctx.format, timing=ctx.ns.timing))


def _emit_dict(ctx: Ctx, d: dict, experiment_id: str, records: list | None = None):
    rep = ExperimentReport(experiment_id, ctx.d, ctx.alpha, params=d, records=records or [], seed=ctx.seed)
    if ctx.format == "json" and records is None:
        body = dict(d, experiment_id=experiment_id, field_d=ctx.d, artifact_version=__version__)
        _write(ctx, dumps_json(body))
    else:
        _emit(ctx, rep)


# ---------------------------------------------------------------------------
# command implementations


def cmd_field_info(ctx: Ctx):
    f = ctx.field
    _emit_dict(ctx, {
        "d": f.d, "omega": f.omega_kind, "trace": f.trace_t, "xi1": f.xi1, "xi2": f.xi2,
        "norm_omega": f.norm_omega, "unit_count": f.unit_count,
        "units": [[u.n1, u.n2] for u in f.units], "im_omega": repr(f.im_omega),
        "gintner_C": repr(f.gintner_C),
    }, "field-info")


def cmd_primes_sieve(ctx: Ctx):
    from .arith import sieve_primes

    f = ctx.field
    x = ctx.get("x", None, _num)
    limit = ctx.get("limit", 20, int)
    tab = sieve_primes(f, x)
    recs = [{"n1": int(a), "n2": int(b), "norm": int(n)} for a, b, n in zip(tab.p1[:limit], tab.p2[:limit], tab.pnorm[:limit])]
    if ctx.format == "json":
        _emit_dict(ctx, {"x": x, "prime_count": len(tab), "first": recs}, "primes-sieve")
    else:
        _emit_dict(ctx, {"x": x, "prime_count": len(tab)}, "primes-sieve", recs)


def cmd_dioph_gintner(ctx: Ctx):
    from .dioph import gintner_search

    f = ctx.field
    qmax = ctx.get("qmax", 1000, _num)
    found = gintner_search(f, ctx.alpha_coords, qmax)
    recs = [ap.to_dict(f) for ap in found]
    for r in recs:
        r["a"], r["q"] = " ".join(map(str, r["a"])), " ".join(map(str, r["q"]))
    if ctx.format == "json":
        _emit_dict(ctx, {"qmax": qmax, "approximations": recs}, "dioph-gintner")
    else:
        _emit_dict(ctx, {"qmax": qmax}, "dioph-gintner", recs)


def _approx(ctx: Ctx, f, alpha):
    from .dioph import best_approximation

    target = ctx.get("q_norm", 20, _num)
    return best_approximation(f, alpha, target, search_max=ctx.get("q_norm_max", max(4 * target, 16), _num))


def cmd_expsum(ctx: Ctx, which: str):
    from . import expsum as es

    f, alpha = ctx.field, ctx.alpha_coords
    if which == "lin":
        x, y = ctx.get("x", 0, _num), ctx.get("y", 1000, _num)
        val, rep = es.lin_sum(f, alpha, x, y)
        out = {"value_re": repr(val.real), "value_im": repr(val.imag), "report": rep.to_dict(ctx.ns.timing)}
    elif which == "avg":
        ap = _approx(ctx, f, alpha)
        X = es.Region(ctx.get("x", 1000, _num), ctx.get("x0", 1, _num))
        S, (r1, r2) = es.avg_sum(f, alpha, X, ctx.get("M", 100.0, float), ap)
        out = {"S": repr(S), "report_general": r1.to_dict(ctx.ns.timing),
               "report_short": r2.to_dict(ctx.ns.timing) if r2 else None, "q": [ap.q.n1, ap.q.n2]}
    elif which == "bilinear":
        kind = ctx.get("kind", "type1")
        x = ctx.get("x", 2**10, _num)
        rng = es.BilinearRange(kind, x, M=ctx.get("M", math.sqrt(x), float),
                               mu=ctx.get("mu", 5 / 14, float), kappa=ctx.get("kappa", 0.5, float))
        coeffs = es.Coeffs(ctx.get("a", "ones"), ctx.get("b", "ones"), ctx.seed)
        val, empty = es.bilinear_F(f, alpha, ctx.get("J1", 2, int), ctx.get("J2", 2, int), rng, coeffs)
        out = {"F": repr(val), "range_empty": empty, "kind": kind, "x": x}
    else:
        kind = ctx.get("kind", "type1")
        x = ctx.get("x", 2**10, _num)
        ap = _approx(ctx, f, alpha)
        params = {"field": f, "alpha": alpha, "approx": ap, "x": x,
                  "J1": ctx.get("J1", 2, int), "J2": ctx.get("J2", 2, int),
                  "M": ctx.get("M", math.sqrt(x), float), "mu": ctx.get("mu", 5 / 14, float),
                  "kappa": ctx.get("kappa", 0.5, float), "J": ctx.get("J", 4, int),
                  "delta": ctx.get("delta", 0.25, float), "eps": ctx.get("eps", 0.0, float),
                  "seeds": ctx.get("seeds", 3, int)}
        rep = es.verify_section5_bound(kind, params)
        out = {"report": rep.to_dict(ctx.ns.timing), "q": [ap.q.n1, ap.q.n2]}
    _emit_dict(ctx, out, f"expsum-{which}")


def _omega_coords(spec: str):
    from .qfield import AlphaCoords, to_fx

    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 2:
        raise ParamError(f"theta must be 're_w,im_w'; got {spec!r}")
    return AlphaCoords(to_fx(parts[0]), to_fx(parts[1]))


def cmd_smooth(ctx: Ctx, which: str):
    from . import smooth as sm

    if which == "poisson":
        f = ctx.field
        R = ctx.get("R", 1, _num)
        th = _omega_coords(ctx.get("theta", "0,0"))
        res = sm.gauss_lattice_sum(f, R, th, ctx.get("x_eps", 1.0, float))
        out = dict(res.to_dict(), R=R)
        ok = res.rel_err <= 1e-9
    elif which == "theta":
        th, dl = ctx.get("theta", "0"), ctx.get("delta", "0.1")
        direct, dual = sm.theta_wdelta(_frac(th), _frac(dl))
        import mpmath

        rel = float(abs(direct - dual) / abs(direct))
        out = {"direct": mpmath.nstr(direct, 20), "dual": mpmath.nstr(dual, 20), "rel_diff": repr(rel)}
        ok = rel <= 1e-12
    elif which == "perron":
        g, r, T = ctx.get("gamma", 1.0, float), ctx.get("rho", 2.0, float), ctx.get("T", 100.0, float)
        val, bound = sm.perron_indicator(g, r, T)
        err = abs(val - (1.0 if g < r else 0.0))
        out = {"integral": repr(val), "err": repr(err), "err_bound": repr(bound)}
        ok = err <= bound
    else:
        x, J = ctx.get("x", 0.3, float), ctx.get("J", 100, int)
        approx, exact, err = sm.sawtooth_approx(x, J)
        bound = sm.sawtooth_bound(x, J)
        out = {"approx": repr(approx), "exact": repr(exact), "err": repr(err), "min_bound": repr(bound)}
        ok = err <= 2 * bound
    out["check_passed"] = ok
    _emit_dict(ctx, out, f"smooth-{which}")
    if not ok:
        raise CheckFailed(f"smooth {which} check failed")


def run_sieve_check(f, x: int, mu: float, kappa: float, seed: int, M: int | None = None, delta: str = "0.3") -> dict:
    """Legendre, Buchstab and Type I/II identities on one randomized desk instance."""
    from . import hsieve as hs
    from .qfield import alpha_from_spec

    rng = np.random.default_rng(seed)
    M = M if M is not None else max(int(math.isqrt(x)), int(math.floor(x**mu)) + 1)
    cfg = hs.SieveConfig(x, kappa, mu, M, x)
    tab = hs.class_table(f, x)
    w_int = hs.Weight(tab, rng.integers(-8, 9, len(tab)))
    w_fix = hs.Weight.from_array(tab, rng.random(len(tab)), fixed=True)
    leg = [hs.legendre_identity_check(f, w, cfg.z) for w in (w_int, w_fix)]
    g_vals = np.where(tab.cn > cfg.x_mu, rng.integers(-8, 9, len(tab)), 0)
    bu = hs.buchstab_decompose(f, cfg, hs.Weight(tab, g_vals))
    w1 = hs.Weight(tab, rng.integers(0, 9, len(tab)))
    w2 = hs.Weight(tab, rng.integers(0, 9, len(tab)))
    ts_int = hs.type_split(f, cfg, w1, w2)
    gw, gwt = hs.gaussian_weights(f, x, delta, alpha_from_spec(f, "sqrt2_sqrt3"))
    ts_gauss = hs.type_split(f, cfg, gw, gwt)
    return {
        "x": x, "z": cfg.z, "mu": mu, "kappa": kappa, "M": M, "seed": seed,
        "legendre_integer": leg[0].equal, "legendre_fixed": leg[1].equal,
        "buchstab_gap_zero": bu.identity_gap == 0, "buchstab_q_levels_ok": bu.max_q_level <= bu.q_level_bound,
        "buchstab": bu.to_dict(),
        "type_split_integer": ts_int.total_check, "type_split_gaussian": ts_gauss.total_check,
        "S_I": repr(ts_gauss.S_I), "S_II": repr(ts_gauss.S_II),
        "harman_smoke": {k: repr(v) for k, v in hs.harman_smoke(f, cfg, gw, gwt).items()},
    }


def cmd_sieve_check(ctx: Ctx):
    x = ctx.get("x", 2**12, _num)
    out = run_sieve_check(ctx.field, x, ctx.get("mu", 0.3, float), ctx.get("kappa", 0.5, float), ctx.seed,
                          ctx.params.get("M") and _num(ctx.params["M"]), ctx.params.get("delta", "0.3"))
    flags = [k for k in ("legendre_integer", "legendre_fixed", "buchstab_gap_zero", "buchstab_q_levels_ok",
                         "type_split_integer", "type_split_gaussian") if not out[k]]
    out["check_passed"] = not flags
    _emit_dict(ctx, out, "sieve-check")
    if flags:
        raise CheckFailed("identity failures: " + ", ".join(flags))


def cmd_experiment(ctx: Ctx, which: str):
    from . import lab

    f = ctx.field
    if which == "main-count":
        alpha = ctx.alpha_coords
        cap = ctx.get("cap", lab.DEFAULT_CAP, _num)
        target = ctx.get("q_norm", 20, _num)
        qmax = ctx.get("q_norm_max", 0, _num) or None
        sweep = ctx.get("sweep", 0, int)
        if sweep:
            rep = lab.delta_sweep(f, alpha, target, cap, sweep, ctx.alpha, qmax, ctx.seed)
        else:
            rep = lab.run_main_count(f, alpha, target, ctx.get("delta", "0.2", _frac), cap, ctx.alpha, qmax, ctx.seed)
    elif which == "search":
        rep = lab.search_good_primes(f, ctx.alpha_coords, ctx.get("x_max", 10**6, _num),
                                     ctx.get("theta", "1/8", _frac), ctx.alpha, ctx.seed)
    else:
        rep = lab.landau_check(f, ctx.get("x", 10**6, _num), ctx.seed)
    _emit(ctx, rep)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = _Parser(prog="alphap", description="Primes in Bohr sets of imaginary quadratic fields: desk-scale verifier.")
    p.add_argument("--version", action="version", version=f"alphap {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(sub, name, func, **kw):
        q = sub.add_parser(name, parents=[common], **kw)
        q.set_defaults(func=func)
        return q

    g = groups.add_parser("field").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(g, "info", cmd_field_info, help="field constants")

    g = groups.add_parser("primes").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(g, "sieve", cmd_primes_sieve, help="sieve prime elements up to a norm bound")
    q.add_argument("--x", "--xmax", dest="x", default=None)

    g = groups.add_parser("dioph").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(g, "gintner", cmd_dioph_gintner, help="all Gintner approximations up to a norm bound")
    q.add_argument("--qmax", default=None)

    g = groups.add_parser("expsum").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in ("lin", "avg", "bilinear", "verify"):
        leaf(g, name, lambda c, n=name: cmd_expsum(c, n))

    g = groups.add_parser("smooth").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in ("poisson", "theta", "perron", "sawtooth"):
        leaf(g, name, lambda c, n=name: cmd_smooth(c, n))

    g = groups.add_parser("sieve").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(g, "check", cmd_sieve_check, help="Legendre, Buchstab and Type I/II identities")
    q.add_argument("--x", default=None)
    q.add_argument("--mu", default=None)
    q.add_argument("--kappa", default=None)

    g = groups.add_parser("experiment").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(g, "main-count", lambda c: cmd_experiment(c, "main-count"))
    q.add_argument("--q-norm", dest="q_norm", default=None)
    q.add_argument("--q-norm-max", dest="q_norm_max", default=None)
    q.add_argument("--delta", default=None)
    q.add_argument("--cap", default=None)
    q.add_argument("--sweep", default=None, help="number of delta points for a sweep")
    q = leaf(g, "search", lambda c: cmd_experiment(c, "search"))
    q.add_argument("--x-max", dest="x_max", default=None)
    q.add_argument("--theta", default=None)
    q = leaf(g, "landau", lambda c: cmd_experiment(c, "landau"))
    q.add_argument("--x", default=None)
    return p


def main(argv: list | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        ctx = Ctx(ns)
        ns.func(ctx)
    except CheckFailed as exc:
        print(f"alphap: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except AssertionError as exc:
        print(f"alphap: assertion failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ParamError, AlphapError, OSError) as exc:
        print(f"alphap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARAM
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
