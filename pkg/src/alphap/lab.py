"""Experiment harness: prime counts in Bohr sets, record searches, the prime
ideal count check, and report serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import __version__
from .arith import prime_ideal_count, sieve_primes
from .dioph import best_approximation
from .errors import UnknownFormat
from .qfield import ONE, AlphaCoords, FieldCtx, RingElt, below_mask, dist_omega, dist_omega_many, mul_alpha, norm, to_fx
from .qfield import u64_error_bound
from .report import Timer

DEFAULT_CAP = 10**7
FORMATS = ("json", "csv", "plot")


@dataclass
class ExperimentReport:
    experiment_id: str
    field_d: int
    alpha_spec: str
    params: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    plot: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    runtime_seconds: float = 0.0
    seed: int = 0
    artifact_version: str = __version__

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        d["plot"] = [list(p) for p in self.plot]
        if not timing:
            d.pop("runtime_seconds")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        d = dict(d)
        d["plot"] = [tuple(p) for p in d.get("plot", [])]
        return cls(**d)


def _delta_fraction(delta) -> Fraction:
    if isinstance(delta, Fraction):
        return delta
    if isinstance(delta, float):
        return Fraction(repr(delta))
    return Fraction(str(delta))


def _associates(f: FieldCtx, p1: np.ndarray, p2: np.ndarray) -> tuple:
    e1, e2 = [], []
    for u in f.units:
        e1.append(u.n1 * p1 + f.xi1 * u.n2 * p2)
        e2.append(u.n1 * p2 + u.n2 * p1 + f.xi2 * u.n2 * p2)
    return np.concatenate(e1), np.concatenate(e2)


def main_count_x(nq: int, cap: int) -> int:
    return min(int(math.floor(nq ** 5.6)), int(cap))


def run_main_count(
    f: FieldCtx,
    alpha: AlphaCoords,
    q_norm_target: int,
    delta,
    cap: int = DEFAULT_CAP,
    alpha_spec: str = "",
    q_norm_max: int | None = None,
    seed: int = 0,
) -> ExperimentReport:
    """Count prime elements p with x/2 <= N(p) < x and ||p alpha|| < delta."""
    with Timer() as tm:
        search = q_norm_max if q_norm_max is not None else max(4 * q_norm_target, 16)
        approx = best_approximation(f, alpha, q_norm_target, search_max=search)
        nq = norm(f, approx.q)
        x = main_count_x(nq, cap)
        dq = _delta_fraction(delta)
        hits, count = _count_hits(f, alpha, x, [dq])
        hit = hits[0]
        expected = 4 * dq * dq * count
        dev = abs(Fraction(hit) / expected - 1) if expected else Fraction(0)
        warnings = []
        lower = x ** (-1 / 28)
        if float(dq) < lower:
            warnings.append(f"delta {dq} below x^(-1/28) = {lower:.6f}")
        if nq ** 5.6 > cap:
            warnings.append(f"x capped at {cap} (N(q)^(28/5) = {nq ** 5.6:.6g})")
    return ExperimentReport(
        experiment_id="main-count",
        field_d=f.d,
        alpha_spec=alpha_spec,
        params={"q": [approx.q.n1, approx.q.n2], "a": [approx.a.n1, approx.a.n2], "norm_q": nq, "x": x,
                "delta": str(dq), "cap": int(cap), "preset": "x = N(q)^(28/5)"},
        counts={"hit_count": hit, "prime_count": count, "expected": float(expected), "expected_exact": str(expected)},
        ratios={"hit_over_expected": float(Fraction(hit) / expected) if expected else 0.0, "deviation": float(dev)},
        warnings=warnings,
        runtime_seconds=tm.elapsed,
        seed=seed,
    )


def _count_hits(f: FieldCtx, alpha: AlphaCoords, x: int, deltas: list) -> tuple:
    """Hit counts for each delta over all prime elements with x/2 <= N < x."""
    if x < 3:
        return [0] * len(deltas), 0
    tab = sieve_primes(f, x)
    p1, p2, _ = tab.in_range((x + 1) // 2, x)
    e1, e2 = _associates(f, p1, p2)
    hits = []
    for dq in deltas:
        dfx = to_fx(dq)
        hits.append(int(below_mask(f, alpha, e1, e2, dfx, strict=True).sum()))
    return hits, len(e1)


def sweep_deltas(x: int, n_points: int | None = None) -> list:
    """Geometric grid with ratio sqrt 2 from 1/2 down to x^(-1/28), as 12-digit decimals."""
    lo = x ** (-1 / 28)
    out = []
    k = 0
    while True:
        d = 0.5 * 2 ** (-k / 2)
        if n_points is None and d < lo:
            break
        if n_points is not None and k >= n_points:
            break
        out.append(Fraction(f"{d:.12f}"))
        k += 1
    return out


def delta_sweep(
    f: FieldCtx, alpha: AlphaCoords, q_norm_target: int, cap: int = DEFAULT_CAP, n_points: int | None = 5,
    alpha_spec: str = "", q_norm_max: int | None = None, seed: int = 0,
) -> ExperimentReport:
    with Timer() as tm:
        search = q_norm_max if q_norm_max is not None else max(4 * q_norm_target, 16)
        approx = best_approximation(f, alpha, q_norm_target, search_max=search)
        nq = norm(f, approx.q)
        x = main_count_x(nq, cap)
        deltas = sweep_deltas(x, n_points)
        hits, count = _count_hits(f, alpha, x, deltas)
        plot, records = [], []
        for dq, h in zip(deltas, hits):
            r = Fraction(h) / (4 * dq * dq * count) if count else Fraction(0)
            plot.append((float(dq), float(r)))
            records.append({"delta": str(dq), "hit_count": h, "ratio": float(r)})
    return ExperimentReport(
        experiment_id="delta-sweep", field_d=f.d, alpha_spec=alpha_spec,
        params={"q": [approx.q.n1, approx.q.n2], "norm_q": nq, "x": x, "cap": int(cap)},
        counts={"prime_count": count}, records=records, plot=plot, runtime_seconds=tm.elapsed, seed=seed,
    )


def _theta_fraction(theta) -> Fraction:
    return _delta_fraction(theta)


def passes_exact(dist_fx: int, nrm: int, theta: Fraction) -> bool:
    """dist <= N^-theta, decided in integers: dist^den * N^num <= ONE^den."""
    num, den = theta.numerator, theta.denominator
    if den <= 64 and num >= 0:
        return dist_fx**den * nrm**num <= ONE**den
    with mpmath.workprec(256):
        return mpmath.mpf(dist_fx) / ONE <= mpmath.mpf(nrm) ** (-mpmath.mpf(num) / den)


def search_good_primes(
    f: FieldCtx, alpha: AlphaCoords, x_max: int, theta_exp, alpha_spec: str = "", seed: int = 0
) -> ExperimentReport:
    """Every prime element with N(p) <= x_max and ||p alpha|| <= N(p)^-theta, sorted by norm."""
    th = _theta_fraction(theta_exp)
    with Timer() as tm:
        tab = sieve_primes(f, max(2, int(x_max)))
        p1, p2, pn = tab.p1, tab.p2, tab.pnorm
        e1, e2 = _associates(f, p1, p2)
        en = np.tile(pn, f.unit_count)
        approx = dist_omega_many(f, alpha, e1, e2)
        thr = en.astype(np.float64) ** (-float(th))
        margin = 4 * u64_error_bound(f, e1, e2)
        cand = np.nonzero(approx <= thr * (1 + 1e-9) + margin)[0]
        records = []
        for i in cand:
            n = RingElt(int(e1[i]), int(e2[i]))
            nn = int(en[i])
            dv = dist_omega(f, mul_alpha(f, n, alpha))
            if passes_exact(dv, nn, th):
                records.append({"n1": n.n1, "n2": n.n2, "norm": nn, "dist": repr(dv / ONE)})
        records.sort(key=lambda r: (r["norm"], r["n2"], r["n1"]))
    return ExperimentReport(
        experiment_id="search", field_d=f.d, alpha_spec=alpha_spec,
        params={"x_max": int(x_max), "theta": str(th)},
        counts={"hit_count": len(records), "prime_count": int(len(e1))},
        records=records, runtime_seconds=tm.elapsed, seed=seed,
    )


def landau_check(f: FieldCtx, x: int, seed: int = 0) -> ExperimentReport:
    with Timer() as tm:
        count = prime_ideal_count(f, x)
        with mpmath.workprec(128):
            li = mpmath.li(x)
            dev = float(mpmath.mpf(count) / li - 1)
    warnings = [] if x >= 1000 else ["small x: no accuracy claim"]
    return ExperimentReport(
        experiment_id="landau", field_d=f.d, alpha_spec="",
        params={"x": int(x)},
        counts={"prime_ideal_count": count},
        ratios={"li": float(li), "deviation": dev},
        warnings=warnings, runtime_seconds=tm.elapsed, seed=seed,
    )


# ---------------------------------------------------------------------------
# serialization


def dumps_json(d: dict) -> bytes:
    return (json.dumps(d, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def emit_report(report: ExperimentReport, fmt: str = "json", timing: bool = False) -> bytes:
    if fmt == "json":
        return dumps_json(report.to_dict(timing))
    if fmt == "csv":
        keys = sorted({k for r in report.records for k in r})
        buf = io.StringIO()
        wr = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        wr.writeheader()
        for r in report.records:
            wr.writerow(r)
        return buf.getvalue().encode("utf-8")
    if fmt == "plot":
        return "".join(f"{a!r} {b!r}\n" for a, b in report.plot).encode("utf-8")
    raise UnknownFormat(f"unknown format {fmt!r}; expected one of {FORMATS}")
