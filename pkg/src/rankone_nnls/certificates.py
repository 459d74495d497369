"""Closed-form evaluators for the recovery-guarantee constant chains.

Everything here is a pure formula: the map from a restricted-isometry
level delta to robust-nullspace parameters (rho, tau), the error-bound
constants C(rho) <= D(rho), the weighted-nullspace transfer under a
positivity certificate, the deterministic and random-model error bounds,
the admissible-sparsity threshold, and the subgaussian tail bounds used
by the concentration diagnostics.

Exponent constants the bounds leave unpinned (the Hanson-Wright
exponent c, the fourth-order tail exponent gamma, and the heavy-tailed
isometry constants C, c_hat) enter as explicit parameters with
conservative defaults (c = 0.1, gamma = 0.01, C = 1.0, c_hat = 0.1) so
the diagnostics module can calibrate them empirically.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import adjoint
from .errors import InfeasibleError, ParameterError

__all__ = [
    "NspCertificate",
    "MPlusCertificate",
    "BoundBreakdown",
    "ProbabilityBound",
    "DELTA_MAX",
    "rip_to_nsp",
    "cd_constants",
    "weighted_nsp",
    "phi_nsp_to_frobenius",
    "mplus_certificate",
    "deterministic_error_bound",
    "random_model_constants",
    "random_model_bound",
    "sparsity_threshold",
    "hanson_wright_bound",
    "fourth_order_zeta",
    "mplus_concentration_bound",
    "heavy_tailed_rip_bound",
    "constant_chain",
    "constant_chain_json",
]

# Largest delta for which the rho(delta) map stays below 1.
DELTA_MAX = 4.0 / math.sqrt(41.0)

DEFAULT_HW_CONSTANT = 0.1       # exponent constant of the quadratic tail bound
DEFAULT_GAMMA_CONSTANT = 0.01   # exponent constant of the fourth-order tail bound
DEFAULT_RIP_C = 1.0             # prefactor of the heavy-tailed isometry bound
DEFAULT_RIP_CHAT = 0.1          # exponent constant of the heavy-tailed isometry bound


@dataclass(frozen=True)
class NspCertificate:
    """Parameters (q, s, rho, tau) of a robust nullspace property.

    ``norm_tag`` records which measurement norm the tau term refers to:
    "l2-columns" for the embedded real matrix, "frobenius" for the
    matrix-valued map itself.
    """

    q: float
    s: int
    rho: float
    tau: float
    norm_tag: str = "frobenius"

    def __post_init__(self):
        if self.q < 1:
            raise ParameterError("q must be >= 1")
        if self.s < 1:
            raise ParameterError("s must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise InfeasibleError(f"rho must lie in (0, 1), got {self.rho}")
        if self.tau <= 0:
            raise ParameterError("tau must be strictly positive")
        if self.norm_tag not in ("frobenius", "l2-columns"):
            raise ParameterError(f"unknown norm_tag {self.norm_tag!r}")


@dataclass(frozen=True)
class MPlusCertificate:
    """Positivity certificate: T with w = adjoint(T) > 0 entrywise.

    kappa = max(w) / min(w) and theta = ||T||_F / max(w); both are
    invariant under positive rescaling of T.
    """

    T: np.ndarray
    w: np.ndarray
    kappa: float
    theta: float


@dataclass(frozen=True)
class BoundBreakdown:
    """Error bound split into its sparsity-defect and noise terms."""

    p: float
    term_sparsity: float
    term_noise: float
    total: float
    constants: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProbabilityBound:
    """A tail bound clamped to [0, 1]; ``raw`` keeps the unclamped value."""

    probability: float
    raw: float
    kappa_bound: float | None = None


def rip_to_nsp(delta, s):
    """Nullspace parameters implied by a restricted isometry level delta.

    Valid for 0 < delta < 4/sqrt(41); returns the q = 2 certificate with

        rho = delta / (sqrt(1 - delta^2) - delta / 4)
        tau = sqrt(1 + delta) / (sqrt(1 - delta^2) - delta / 4)

    tagged "l2-columns" (it certifies the embedded real matrix).
    """
    if not 0.0 < delta < DELTA_MAX:
        raise InfeasibleError(f"delta must lie in (0, {DELTA_MAX:.6f}), got {delta}")
    den = math.sqrt(1.0 - delta * delta) - delta / 4.0
    return NspCertificate(q=2.0, s=int(s), rho=delta / den, tau=math.sqrt(1.0 + delta) / den, norm_tag="l2-columns")


def cd_constants(rho):
    """The pair C(rho) = (1 + rho)^2 / (1 - rho) <= (3 + rho) / (1 - rho) = D(rho)."""
    if not 0.0 <= rho < 1.0:
        raise InfeasibleError(f"rho must lie in [0, 1), got {rho}")
    return (1.0 + rho) ** 2 / (1.0 - rho), (3.0 + rho) / (1.0 - rho)


def weighted_nsp(cert, w):
    """Certificate for the column-rescaled map, weights w > 0.

    Transfers (rho, tau) to (kappa * rho, max(w) * tau) with
    kappa = max|w| / min|w|; infeasible when kappa * rho >= 1.
    """
    w = np.asarray(w, dtype=float)
    if w.size == 0 or np.any(w <= 0):
        raise ParameterError("weights must be strictly positive")
    kappa = float(np.max(w) / np.min(w))
    rho = kappa * cert.rho
    if rho >= 1.0:
        raise InfeasibleError(f"kappa * rho = {rho:.4f} >= 1: weighted certificate infeasible")
    return NspCertificate(q=cert.q, s=cert.s, rho=rho, tau=float(np.max(w)) * cert.tau, norm_tag=cert.norm_tag)


def phi_nsp_to_frobenius(cert, n):
    """Transfer an "l2-columns" certificate of the embedded matrix to the map.

    The off-diagonal embedding satisfies ||P(M)||_2 <= sqrt(2) ||M||_F, so a
    certificate (rho, tau) for (1/sqrt(m)) P o A yields (rho, tau * sqrt(2/m))
    for A with the Frobenius norm, m = 2n(n-1).
    """
    if cert.norm_tag == "frobenius":
        return cert
    m = 2 * n * (n - 1)
    return NspCertificate(q=cert.q, s=cert.s, rho=cert.rho, tau=cert.tau * math.sqrt(2.0 / m), norm_tag="frobenius")


def mplus_certificate(e, T):
    """Build the positivity certificate of T against an ensemble.

    Requires w = adjoint(e, T) strictly positive entrywise; computes
    kappa = max(w) / min(w) and theta = ||T||_F / ||w||_inf.
    """
    T = np.asarray(T, dtype=complex)
    w = adjoint(e, T)
    if np.any(w <= 0):
        raise InfeasibleError("adjoint image is not strictly positive: certificate does not apply")
    kappa = float(np.max(w) / np.min(w))
    theta = float(np.linalg.norm(T)) / float(np.max(np.abs(w)))
    return MPlusCertificate(T=T, w=w, kappa=kappa, theta=theta)


def deterministic_error_bound(cert, mp, sigma_s, E_norm, p, s=None):
    """Deterministic recovery-error bound from an NSP plus a positivity certificate.

    For kappa * rho < 1 and 1 <= p <= q the bound reads

        C' kappa sigma_s / s^(1 - 1/p)
          + (D' kappa / s^(1/q - 1/p)) (tau + theta / s^(1 - 1/q)) * E_norm

    with C' = 2 (1 + kappa rho)^2 / (1 - kappa rho) and
    D' = 2 (3 + kappa rho) / (1 - kappa rho).
    """
    s = int(cert.s if s is None else s)
    if s < 1:
        raise ParameterError("s must be >= 1")
    if not 1.0 <= p <= cert.q:
        raise InfeasibleError(f"p must lie in [1, q={cert.q}], got {p}")
    kr = mp.kappa * cert.rho
    if kr >= 1.0:
        raise InfeasibleError(f"kappa * rho = {kr:.4f} >= 1: bound does not apply")
    c_prime = 2.0 * (1.0 + kr) ** 2 / (1.0 - kr)
    d_prime = 2.0 * (3.0 + kr) / (1.0 - kr)
    term_sparsity = c_prime * mp.kappa * sigma_s / s ** (1.0 - 1.0 / p)
    term_noise = (d_prime * mp.kappa / s ** (1.0 / cert.q - 1.0 / p)) * (
        cert.tau + mp.theta / s ** (1.0 - 1.0 / cert.q)
    ) * E_norm
    return BoundBreakdown(
        p=p,
        term_sparsity=term_sparsity,
        term_noise=term_noise,
        total=term_sparsity + term_noise,
        constants={
            "C_prime": c_prime,
            "D_prime": d_prime,
            "kappa": mp.kappa,
            "rho": cert.rho,
            "tau": cert.tau,
            "theta": mp.theta,
        },
    )


def random_model_constants(eta, delta):
    """The (c2, c3, c4) chain for the rank-one subgaussian guarantee.

    With kappa_eta = (1 + eta) / (1 - eta) and (rho, tau) from
    ``rip_to_nsp(delta)``:

        c2 = 2 C(kappa_eta rho) kappa_eta
        c3 = 2 D(kappa_eta rho) kappa_eta / (1 + eta)
        c4 = 2 tau (1 + eta)

    At (eta, delta) = (1/3, 1/6) this gives c2 = 11.317, c3 = 15.547,
    c4 = 3.050.
    """
    if not 0.0 < eta < 1.0:
        raise InfeasibleError(f"eta must lie in (0, 1), got {eta}")
    cert = rip_to_nsp(delta, s=1)
    kappa_eta = (1.0 + eta) / (1.0 - eta)
    kr = kappa_eta * cert.rho
    if kr >= 1.0:
        raise InfeasibleError(f"kappa_eta * rho = {kr:.4f} >= 1: constants infeasible")
    C, D = cd_constants(kr)
    c2 = 2.0 * C * kappa_eta
    c3 = 2.0 * D * kappa_eta / (1.0 + eta)
    c4 = 2.0 * cert.tau * (1.0 + eta)
    return c2, c3, c4


def random_model_bound(constants, sigma_s, E_frob, n, s, p):
    """Evaluate the random-model error bound for given (c2, c3, c4).

    The bound is c2 sigma_s / s^(1 - 1/p)
    + c3 (c4 + sqrt(n/s)) / s^(1/2 - 1/p) * E_frob / n, for p in [1, 2].
    """
    c2, c3, c4 = constants
    if not 1.0 <= p <= 2.0:
        raise InfeasibleError(f"p must lie in [1, 2], got {p}")
    if s < 1:
        raise ParameterError("s must be >= 1")
    if n < 2:
        raise ParameterError("n must be >= 2")
    term_sparsity = c2 * sigma_s / s ** (1.0 - 1.0 / p)
    term_noise = c3 * (c4 + math.sqrt(n / s)) / s ** (0.5 - 1.0 / p) * E_frob / n
    return BoundBreakdown(
        p=p,
        term_sparsity=term_sparsity,
        term_noise=term_noise,
        total=term_sparsity + term_noise,
        constants={"c2": c2, "c3": c3, "c4": c4},
    )


def sparsity_threshold(n, N, alpha=1.0):
    """Largest admissible 2s: floor(alpha * m / log^2(e N / (alpha m))), m = 2n(n-1).

    Requires N >= m and 0 < alpha <= 1.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    m = 2 * n * (n - 1)
    if N < m:
        raise InfeasibleError(f"N = {N} must be at least m = {m}")
    return int(math.floor(alpha * m / math.log(math.e * N / (alpha * m)) ** 2))


def hanson_wright_bound(t, K, frob, op, c=DEFAULT_HW_CONSTANT, complex_case=False):
    """Quadratic-form tail bound for subgaussian vectors.

    Real case: 2 exp(-c min(t^2 / (K^4 F^2), t / (K^2 op))).
    Complex case: 4 exp(-c min(t^2 / (4 K^4 F^2), t / (sqrt(2) K^2 op))).
    F and op are the Frobenius and operator norms of the quadratic-form
    matrix; the probability is clamped to [0, 1] with the raw value kept.
    """
    if min(K, frob, op, c) <= 0 or t < 0:
        raise ParameterError("all parameters must be positive (t >= 0)")
    if complex_case:
        arg = min(t * t / (4.0 * K**4 * frob * frob), t / (math.sqrt(2.0) * K * K * op))
        raw = 4.0 * math.exp(-c * arg)
    else:
        arg = min(t * t / (K**4 * frob * frob), t / (K * K * op))
        raw = 2.0 * math.exp(-c * arg)
    return ProbabilityBound(probability=min(raw, 1.0), raw=raw)


def fourth_order_zeta(omega, L, mu, sigma2, n):
    """Exponent rate for the fourth-order polynomial tail bound.

    Minimum of the ten admissible-partition terms; divisions by zero
    (degenerate mu or sigma2) count as +inf so they drop out of the min.
    """
    if L < 1:
        raise ParameterError("L must be >= 1")
    if omega <= 0:
        raise ParameterError("omega must be strictly positive")
    if n < 2:
        raise ParameterError("n must be >= 2")
    if mu < 0 or sigma2 < 0:
        raise ParameterError("mu and sigma2 must be nonnegative")

    def ratio(num, den):
        return num / den if den > 0 else math.inf

    terms = [
        ratio(omega**2, L**2 * mu**2 * sigma2**2),
        ratio(omega, L**2 * (sigma2 + 2.0 * mu**2)),
        ratio(omega**2, L**4 * (sigma2 + mu**2) ** 2),
        ratio(omega ** (2.0 / 3.0), L**2 * mu ** (2.0 / 3.0)),
        ratio(omega, L**3 * mu),
        ratio(omega**2 * n, L**6 * mu**2),
        omega**0.5 / L**2,
        omega ** (2.0 / 3.0) / L ** (8.0 / 3.0),
        omega / L**4,
        omega**2 * n / L**8,
    ]
    return min(terms)


def mplus_concentration_bound(eta, psi2, n, N, c=DEFAULT_HW_CONSTANT):
    """Failure probability for uniform concentration of the vector norms.

    2 N exp(-c eta^2 n / (2 psi2^4)), clamped to [0, 1]; ``kappa_bound``
    carries the implied conditioning bound (1 + eta) / (1 - eta).
    """
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    if psi2 < 1:
        raise ParameterError("psi2 must be >= 1")
    raw = 2.0 * N * math.exp(-c * eta * eta * n / (2.0 * psi2**4))
    return ProbabilityBound(probability=min(raw, 1.0), raw=raw, kappa_bound=(1.0 + eta) / (1.0 - eta))


def fourth_order_tail_bound(omega, psi2, n, gamma=DEFAULT_GAMMA_CONSTANT):
    """Tail bound 2 exp(-gamma omega^2 n / psi2^4) for the embedded column norms."""
    if omega < 0:
        raise ParameterError("omega must be nonnegative")
    if psi2 < 1:
        raise ParameterError("psi2 must be >= 1")
    raw = 2.0 * math.exp(-gamma * omega * omega * n / psi2**4)
    return ProbabilityBound(probability=min(raw, 1.0), raw=raw)


def heavy_tailed_rip_bound(
    s,
    n,
    N,
    psi1,
    theta=0.5,
    K=1.0,
    K_prime=None,
    psi2=1.0,
    C=DEFAULT_RIP_C,
    c_hat=DEFAULT_RIP_CHAT,
    gamma=DEFAULT_GAMMA_CONSTANT,
):
    """Isometry-level bound for a matrix with independent heavy-tailed columns.

    Returns (delta_bound, (p1, p2, p3)): the bound
    C xi^2 sqrt(s/m) log(e N / (s sqrt(s/m))) + theta with xi = psi1 K + K',
    and the three failure-probability terms.  K' defaults to
    sqrt(1 + theta), which equalizes the two column-norm terms; those two
    are evaluated through the fourth-order tail bound with omega = theta.
    """
    if s < 1 or n < 2 or N < 1:
        raise ParameterError("require s >= 1, n >= 2, N >= 1")
    if not 0.0 < theta < 1.0:
        raise ParameterError("theta must lie in (0, 1)")
    m = 2 * n * (n - 1)
    if s > min(N, m):
        raise ParameterError(f"s must not exceed min(N, m) = {min(N, m)}")
    if K_prime is None:
        K_prime = math.sqrt(1.0 + theta)
    xi = psi1 * K + K_prime
    ratio = math.sqrt(s / m)
    log_term = math.log(math.e * N / (s * ratio))
    delta_bound = C * xi * xi * ratio * log_term + theta
    p1 = math.exp(-c_hat * K * math.sqrt(s) * log_term)
    per_col = fourth_order_tail_bound(theta, psi2, n, gamma=gamma).raw
    p2 = min(N * per_col, 1.0)
    p3 = p2
    return delta_bound, (min(p1, 1.0), p2, p3)


def constant_chain(eta=1.0 / 3.0, delta=1.0 / 6.0, n=None, N=None, alpha=1.0):
    """Full constant chain delta -> (rho, tau) -> (C, D) -> (c2, c3, c4).

    Each entry carries the producing formula as provenance.  When n and N
    are supplied the admissible-sparsity threshold is appended.  Raises
    InfeasibleError when the chain is infeasible at (eta, delta).
    """
    cert = rip_to_nsp(delta, s=1)
    kappa_eta = (1.0 + eta) / (1.0 - eta)
    C, D = cd_constants(cert.rho)
    c2, c3, c4 = random_model_constants(eta, delta)
    Ck, Dk = cd_constants(kappa_eta * cert.rho)
    chain = {
        "inputs": {"eta": eta, "delta": delta},
        "constants": [
            {"name": "rho", "value": cert.rho, "formula": "delta / (sqrt(1 - delta^2) - delta/4)"},
            {"name": "tau", "value": cert.tau, "formula": "sqrt(1 + delta) / (sqrt(1 - delta^2) - delta/4)"},
            {"name": "C", "value": C, "formula": "(1 + rho)^2 / (1 - rho)"},
            {"name": "D", "value": D, "formula": "(3 + rho) / (1 - rho)"},
            {"name": "kappa_eta", "value": kappa_eta, "formula": "(1 + eta) / (1 - eta)"},
            {"name": "C_at_kappa_rho", "value": Ck, "formula": "(1 + kappa_eta rho)^2 / (1 - kappa_eta rho)"},
            {"name": "D_at_kappa_rho", "value": Dk, "formula": "(3 + kappa_eta rho) / (1 - kappa_eta rho)"},
            {"name": "c2", "value": c2, "formula": "2 C(kappa_eta rho) kappa_eta"},
            {"name": "c3", "value": c3, "formula": "2 D(kappa_eta rho) kappa_eta / (1 + eta)"},
            {"name": "c4", "value": c4, "formula": "2 tau (1 + eta)"},
        ],
        "notes": [
            "tau is evaluated from the closed-form map; at delta = 0.5 it "
            "equals 1.653, not the informally rounded 1.5 sometimes quoted "
            "alongside these curves."
        ],
    }
    if n is not None and N is not None:
        chain["constants"].append(
            {
                "name": "max_two_s",
                "value": sparsity_threshold(n, N, alpha),
                "formula": "floor(alpha m / log^2(e N / (alpha m))), m = 2n(n-1)",
                "inputs": {"n": n, "N": N, "alpha": alpha},
            }
        )
    return chain


def constant_chain_json(path, **kwargs):
    """Write the constant chain as a JSON report; returns the chain dict."""
    chain = constant_chain(**kwargs)
    with open(path, "w", newline="\n") as fh:
        json.dump(chain, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return chain
