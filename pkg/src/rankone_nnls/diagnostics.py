"""Desk-scale verification of the random-matrix claims.

Exhaustive restricted-isometry constants, sampled nullspace-property
checks, Monte-Carlo concentration checks for the vector norms and the
embedded column norms, and a moment-based estimator of Orlicz tail
norms.  Everything is seeded and deterministic.
"""

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .certificates import (
    DEFAULT_GAMMA_CONSTANT,
    DEFAULT_HW_CONSTANT,
    fourth_order_tail_bound,
    mplus_concentration_bound,
    phi_nsp_to_frobenius,
)
from .ensemble import forward, sample_ensemble
from .errors import ParameterError, PreconditionError
from .numerics import lp_norm

__all__ = [
    "RipEstimate",
    "TailCheckReport",
    "rip_exhaustive",
    "rip_sampled",
    "nsp_sampled_check",
    "norm_concentration_check",
    "fourth_order_poly",
    "fourth_order_tail_check",
    "psi_r_estimate",
    "calibrate_constants",
    "report_to_json",
]

EXHAUSTIVE_GUARD = 10**6


@dataclass
class RipEstimate:
    s: int
    delta: float
    method: str  # "exhaustive" or "sampled"
    supports_checked: int

    def to_dict(self):
        return {"s": self.s, "delta": self.delta, "method": self.method,
                "supports_checked": self.supports_checked}


@dataclass
class TailCheckReport:
    thresholds: list
    empirical_exceedance: list
    analytic_bound: list
    samples: int
    crossings: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "thresholds": self.thresholds,
            "empirical_exceedance": self.empirical_exceedance,
            "analytic_bound": self.analytic_bound,
            "samples": self.samples,
            "crossings": self.crossings,
            "meta": self.meta,
        }


def _support_delta(phi_s):
    sv = np.linalg.svd(phi_s, compute_uv=False)
    return max(float(sv[0] ** 2 - 1.0), float(1.0 - sv[-1] ** 2))


def rip_exhaustive(phi, s):
    """Exact restricted isometry constant of order s by support enumeration.

    Guarded at C(N, s) <= 10^6 supports; beyond that use ``rip_sampled``,
    which only lower-bounds the constant.
    """
    phi = np.asarray(phi, dtype=float)
    m, N = phi.shape
    if not 1 <= s <= min(m, N):
        raise ParameterError(f"s must lie in [1, {min(m, N)}], got {s}")
    count = math.comb(N, s)
    if count > EXHAUSTIVE_GUARD:
        raise PreconditionError(
            f"C({N}, {s}) = {count} supports exceeds the exhaustive guard "
            f"{EXHAUSTIVE_GUARD}; use the sampled method"
        )
    delta = 0.0
    for S in itertools.combinations(range(N), s):
        delta = max(delta, _support_delta(phi[:, S]))
    return RipEstimate(s=s, delta=delta, method="exhaustive", supports_checked=count)


def rip_sampled(phi, s, samples=1000, seed=0):
    """Sampled lower bound on the restricted isometry constant of order s.

    A lower bound can refute a certificate but never establish one.
    """
    phi = np.asarray(phi, dtype=float)
    m, N = phi.shape
    if not 1 <= s <= min(m, N):
        raise ParameterError(f"s must lie in [1, {min(m, N)}], got {s}")
    rng = np.random.default_rng(seed)
    delta = 0.0
    for _ in range(samples):
        S = rng.choice(N, size=s, replace=False)
        delta = max(delta, _support_delta(phi[:, S]))
    return RipEstimate(s=s, delta=delta, method="sampled", supports_checked=samples)


def _real_design(e):
    """Real embedding B with ||B x||_2 = ||forward(e, x)||_F."""
    A = e.vectors
    outer = A[:, :, None] * A.conj()[:, None, :]
    N = e.N
    return np.concatenate(
        [outer.real.reshape(N, -1), outer.imag.reshape(N, -1)], axis=1
    ).T


def nsp_sampled_check(e, cert, trials=1000, seed=0):
    """Count sampled violations of a robust nullspace certificate.

    Draws test vectors from three families (dense gaussian,
    sparse-plus-dense mixtures, and near-nullspace vectors found by
    least-squares minimization of the measurement norm over random
    subspaces and over the bottom singular subspace of the embedded
    design).  Each vector is tested on a random support and on its own
    worst support of size s.  Returns the violation count; a valid
    certificate yields zero.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    cert = phi_nsp_to_frobenius(cert, e.n)
    s = cert.s
    rng = np.random.default_rng(seed)
    N = e.N
    B = _real_design(e)
    # Bottom singular directions of the embedded design: these minimize
    # the measurement norm globally and expose true nullspace vectors.
    sv = np.linalg.svd(B, compute_uv=False)
    vt = np.linalg.svd(B, full_matrices=True)[2]
    rank = int(np.sum(sv > sv[0] * 1e-10)) if sv.size else 0
    bottom = vt[max(0, rank - 1):] if rank < N else vt[N - 3:]
    factor = cert.rho / s ** (1.0 - 1.0 / cert.q)
    violations = 0
    for t in range(trials):
        kind = t % 3
        if kind == 0:
            v = rng.standard_normal(N)
        elif kind == 1:
            v = 1e-3 * rng.standard_normal(N)
            spikes = rng.choice(N, size=min(s, N), replace=False)
            v[spikes] += rng.standard_normal(spikes.size)
        else:
            d = min(N, max(4, N - rank + 2))
            V = rng.standard_normal((N, d))
            _, _, wt = np.linalg.svd(B @ V, full_matrices=False)
            v = V @ wt[-1]
            if bottom.shape[0]:
                u = rng.standard_normal(bottom.shape[0]) @ bottom
                if np.linalg.norm(u) > 0:
                    v = v + u / np.linalg.norm(u)
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        v = v / nv
        meas = float(np.linalg.norm(forward(e, v)))
        worst = np.argsort(np.abs(v))[-s:]
        supports = [worst, rng.choice(N, size=s, replace=False)]
        for S in supports:
            mask = np.zeros(N, dtype=bool)
            mask[S] = True
            lhs = lp_norm(v[mask], cert.q)
            rhs = factor * lp_norm(v[~mask], 1.0) + cert.tau * meas
            if lhs > rhs + 1e-12:
                violations += 1
    return violations


def _norms_squared(law, n, samples, seed):
    e = sample_ensemble(n, samples, law=law, seed=seed)
    return np.sum(np.abs(e.vectors) ** 2, axis=1)


def norm_concentration_check(law, n, N, eta, samples=10_000, seed=0, c=DEFAULT_HW_CONSTANT):
    """Empirical tail of | ||a||^2 - n | > eta n against the analytic bound.

    The empirical rate is per vector and is compared with the per-vector
    bound 2 exp(-c eta^2 n / (2 psi2^4)); N enters the echoed union bound
    only.  ``crossings`` counts thresholds where the empirical rate
    exceeds the analytic bound.
    """
    if samples < 100:
        raise PreconditionError("need at least 100 samples")
    etas = [float(x) for x in np.atleast_1d(eta)]
    norms2 = _norms_squared(law, n, samples, seed)
    dev = np.abs(norms2 - n)
    rates, bounds, unions = [], [], []
    for et in etas:
        rates.append(float(np.mean(dev > et * n)))
        pb = mplus_concentration_bound(et, law.psi2_bound, n, N, c=c) if 0 < et < 1 else None
        per_vec = min(2.0 * math.exp(-c * et * et * n / (2.0 * law.psi2_bound**4)), 1.0)
        bounds.append(per_vec)
        unions.append(pb.probability if pb is not None else 1.0)
    crossings = sum(r > b for r, b in zip(rates, bounds))
    return TailCheckReport(
        thresholds=etas,
        empirical_exceedance=rates,
        analytic_bound=bounds,
        samples=samples,
        crossings=crossings,
        meta={"law": law.kind, "n": n, "N": N, "c": c, "union_bound": unions,
              "mean_norm_sq": float(norms2.mean())},
    )


def fourth_order_poly(v):
    """Even quartic sum_{(k,l) admissible} v_k^2 v_l^2, scaled by 2.

    The admissible pairs of indices in [2n] exclude k = l and the two
    pairings that couple a coordinate with its partner n steps away.  For
    v = (Re a, Im a) the value equals the squared norm of the scaled
    off-diagonal embedding of a a*, i.e. 2 * (sum_k |a_k|^2)^2 minus the
    diagonal contributions.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size % 2 != 0:
        raise ParameterError("v must be a flat vector of even dimension")
    n = v.size // 2
    if n < 2:
        raise ParameterError("v must have dimension 2n with n >= 2")
    sq = v * v
    total = float(sq.sum())
    quart = float((sq * sq).sum())
    cross = float(np.sum(sq[:n] * sq[n:]))
    return 2.0 * (total * total - quart - 2.0 * cross)


def fourth_order_tail_check(law, n, omega, samples=10_000, seed=0, gamma=DEFAULT_GAMMA_CONSTANT):
    """Empirical tail of | f - m | >= m omega against the analytic bound.

    f is the squared norm of the embedded column built from each sampled
    vector and m = 2n(n-1) its mean.  Requires n >= psi2^4.
    """
    if n < law.psi2_bound**4:
        raise PreconditionError(
            f"n = {n} must be at least psi2^4 = {law.psi2_bound ** 4:.3f}"
        )
    if samples < 100:
        raise PreconditionError("need at least 100 samples")
    omegas = [float(x) for x in np.atleast_1d(omega)]
    e = sample_ensemble(n, samples, law=law, seed=seed)
    absq = np.abs(e.vectors) ** 2
    s1 = absq.sum(axis=1)
    s2 = (absq * absq).sum(axis=1)
    f = 2.0 * (s1 * s1 - s2)
    m = 2 * n * (n - 1)
    dev = np.abs(f - m)
    rates, bounds = [], []
    for om in omegas:
        rates.append(float(np.mean(dev >= om * m)))
        bounds.append(fourth_order_tail_bound(om, law.psi2_bound, n, gamma=gamma).probability)
    crossings = sum(r > b for r, b in zip(rates, bounds))
    return TailCheckReport(
        thresholds=omegas,
        empirical_exceedance=rates,
        analytic_bound=bounds,
        samples=samples,
        crossings=crossings,
        meta={
            "law": law.kind,
            "n": n,
            "gamma": gamma,
            "m": m,
            "mean_f": float(f.mean()),
            "stderr_f": float(f.std(ddof=1) / math.sqrt(samples)),
        },
    )


def psi_r_estimate(samples, r, p_max=32):
    """Moment-based lower estimate of the Orlicz tail norm of order r.

    sup over integer p in [1, p_max] of p^(-1/r) (E|X|^p)^(1/p), with the
    expectation replaced by the sample mean (computed in the log domain).
    Finite p grid plus empirical moments make this a lower estimate.
    """
    x = np.abs(np.asarray(samples, dtype=float).ravel())
    if x.size < 1000:
        raise PreconditionError("need at least 1000 samples")
    if r < 1:
        raise ParameterError("r must be >= 1")
    if p_max < 2:
        raise ParameterError("p_max must be >= 2")
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    best = 0.0
    logn = math.log(x.size)
    for p in range(1, p_max + 1):
        log_moment = (logsumexp(p * logx) - logn) / p
        best = max(best, math.exp(log_moment - math.log(p) / r))
    return best


def calibrate_constants(ns=(16, 32, 64), etas=(0.25, 0.5), samples=10_000, seed=123, law=None):
    """Largest exponent constants keeping the tail bounds above empirical rates.

    Runs the standard gaussian sweep and inverts the bound formulas at each
    grid point; zero empirical rates impose no constraint.  The shipped
    defaults (c = 0.1, gamma = 0.01) are intentionally below the values
    this returns.
    """
    from .ensemble import SubgaussianLaw

    law = law or SubgaussianLaw.gaussian()
    p4 = law.psi2_bound**4
    c_max = math.inf
    g_max = math.inf
    for i, n in enumerate(ns):
        norms2 = _norms_squared(law, n, samples, seed + i)
        e = sample_ensemble(n, samples, law=law, seed=seed + 1000 + i)
        absq = np.abs(e.vectors) ** 2
        f = 2.0 * (absq.sum(axis=1) ** 2 - (absq * absq).sum(axis=1))
        m = 2 * n * (n - 1)
        for et in etas:
            rate = float(np.mean(np.abs(norms2 - n) > et * n))
            if rate > 0:
                c_max = min(c_max, 2.0 * p4 * math.log(2.0 / rate) / (et * et * n))
            rate4 = float(np.mean(np.abs(f - m) >= et * m))
            if rate4 > 0:
                g_max = min(g_max, p4 * math.log(2.0 / rate4) / (et * et * n))
    return {"c": c_max, "gamma": g_max,
            "defaults": {"c": DEFAULT_HW_CONSTANT, "gamma": DEFAULT_GAMMA_CONSTANT}}


def report_to_json(report, path, extra=None):
    """Write a RipEstimate or TailCheckReport as JSON with a parameter echo."""
    doc = report.to_dict()
    if extra:
        doc.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc
