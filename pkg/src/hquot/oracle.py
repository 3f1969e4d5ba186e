"""Randomized verification of the symmetric-function and matrix inequalities.

Every verifier draws reproducible samples (rejection sampling into the
Gamma_k cone, hyperhermitian conjugations of cone diagonals), evaluates both
sides of one inequality, and reports failures against the strictness margin

    lhs - rhs > -MARGIN * (|lhs| + |rhs| + 1).

Floating point cannot certify open conditions, so near-zero slack is logged
in the report rather than failed.  All sampling is deterministic given the
spec seed; batches are independent, so reports merge associatively.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from . import quaternion as qt
from . import symfun
from .errors import SamplingError

__all__ = [
    "MARGIN",
    "SampleSpec",
    "VerificationReport",
    "sample_gamma_k",
    "sample_hyperhermitian_gamma_k",
    "verify_deletion_cone",
    "verify_minor_quotient",
    "verify_matrix_concavity",
    "verify_schur_pairing",
    "verify_sigma_identities",
    "verify_newton_maclaurin",
    "verify_quotient_monotonicity",
    "verify_quotient_concavity",
    "verify_garding_inequality",
    "verify_tuple_minor_quotient",
    "verify_moore_realization",
    "verify_sigma_triple_agreement",
    "verify_realize_homomorphism",
    "verify_unitary_invariance",
    "run_standard_suite",
    "STANDARD_PROPOSITIONS",
]

MARGIN = 1e-10

# ball offset/radius for the Gamma_k rejection sampler; the ball reaches well
# into negative coordinates so that k < n samples exercise the full cone
_CENTER = 0.6
_RADIUS = 1.4


@dataclass(frozen=True)
class SampleSpec:
    """Reproducible sampling request: dimension, cone order, count, seed, scale."""

    n: int
    k: int
    count: int
    seed: int = 20240601
    scale: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass
class VerificationReport:
    """Outcome of one proposition over one sample batch."""

    proposition: str
    n: int
    k: int
    l: int | None
    samples: int
    checks: int
    failures: int
    worst_violation: float | None
    min_slack: float | None
    seed: int
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.failures == 0

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _rng(spec, tag):
    if not isinstance(tag, tuple):
        tag = (tag,)
    words = tuple(t if isinstance(t, int) else zlib.crc32(str(t).encode()) for t in tag)
    return np.random.default_rng(np.random.SeedSequence((spec.seed, spec.n, spec.k) + words))


def _normalized_slack(lhs, rhs):
    """Slack of the strict inequality lhs > rhs, scaled by |lhs| + |rhs| + 1."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    return (lhs - rhs) / (np.abs(lhs) + np.abs(rhs) + 1.0)


def _concat(slacks):
    if not slacks:
        return np.array([])
    return np.concatenate([np.asarray(s, dtype=float).ravel() for s in slacks])


def _tally(report_args, slack):
    slack = np.asarray(slack, dtype=float).ravel()
    failures = int(np.count_nonzero(slack <= -MARGIN))
    worst = float(slack.min()) if slack.size else None
    return VerificationReport(
        **report_args,
        checks=int(slack.size),
        failures=failures,
        worst_violation=(worst if failures else None),
        min_slack=worst,
    )


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def sample_gamma_k(spec, tag=0, max_rounds=1000):
    """Tuples in Gamma_k, shape (count, n), by rejection from a shifted ball.

    Deterministic for a given spec; raises SamplingError if the retry budget
    is exhausted (the default ball accepts a healthy fraction for all k <= n <= 8).
    """
    rng = _rng(spec, ("gamma", tag))
    out = np.empty((spec.count, spec.n))
    filled = 0
    chunk = max(spec.count, 256)
    for _ in range(max_rounds):
        direction = rng.normal(size=(chunk, spec.n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.uniform(0.0, 1.0, size=(chunk, 1)) ** (1.0 / spec.n)
        pts = spec.scale * (_CENTER + _RADIUS * radius * direction)
        keep = pts[symfun.in_gamma_k(pts, spec.k)]
        take = min(len(keep), spec.count - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
        if filled == spec.count:
            return out
    raise SamplingError(
        f"Gamma_{spec.k} sampler exhausted {max_rounds} rounds at {filled}/{spec.count}"
    )


def sample_hyperhermitian_gamma_k(spec, tag=0, return_eigs=False, max_rounds=1000):
    """Stacked embeddings (count, 2n, 2n) with eigenvalue tuples in Gamma_k.

    Conjugates diag(lam) with random quaternionic unitaries, so the seeded
    eigenvalues are known exactly.  With return_eigs=True also returns the
    (sorted ascending) seed tuples.
    """
    lam = np.sort(sample_gamma_k(spec, tag=tag, max_rounds=max_rounds), axis=1)
    rng = _rng(spec, ("unitary", tag))
    U = qt.random_symplectic_unitary_chi(rng, spec.n, count=spec.count)
    D = np.concatenate([lam, lam], axis=1)
    A = np.einsum("cji,cj,cjk->cik", U.conj(), D, U)
    A = (A + A.conj().transpose(0, 2, 1)) / 2.0
    return (A, lam) if return_eigs else A


# ---------------------------------------------------------------------------
# matrix propositions
# ---------------------------------------------------------------------------


def verify_deletion_cone(spec):
    """lam(A) in Gamma_k implies lam(A | i) in Gamma_{k-1} for every deletion i."""
    args = dict(proposition="deletion-cone", n=spec.n, k=spec.k, l=None,
                samples=spec.count, seed=spec.seed)
    if spec.k < 2:
        return _tally(args, np.array([]))
    A = sample_hyperhermitian_gamma_k(spec, tag=10)
    slacks = []
    for i in range(spec.n):
        sub = qt.chi_delete(A, i)
        mu = qt.chi_eigvals(sub)
        e = symfun.elementary_all(mu, spec.k - 1)
        slacks.append(_normalized_slack(e[:, 1 : spec.k], 0.0))
    return _tally(args, _concat(slacks))


def verify_minor_quotient(spec, l):
    """sigma_{k-1}(A|i) / sigma_{l-1}(A|i) > sigma_k(A) / sigma_l(A), cross-multiplied."""
    k = spec.k
    if not 1 <= l < k:
        raise ValueError(f"need 1 <= l < k, got l={l}, k={k}")
    args = dict(proposition="matrix-minor-quotient", n=spec.n, k=k, l=l,
                samples=spec.count, seed=spec.seed)
    A, lam = sample_hyperhermitian_gamma_k(spec, tag=11, return_eigs=True)
    e = symfun.elementary_all(lam, k)
    sk, sl = e[:, k], e[:, l]
    slacks = []
    for i in range(spec.n):
        mu = qt.chi_eigvals(qt.chi_delete(A, i))
        emu = symfun.elementary_all(mu, k - 1)
        lhs = emu[:, k - 1] * sl
        rhs = sk * emu[:, l - 1]
        slacks.append(_normalized_slack(lhs, rhs))
    return _tally(args, _concat(slacks))


def verify_matrix_concavity(spec, l, scan_points=11, max_resample=50):
    """Midpoint concavity of (sigma_k / sigma_l)^(1/(k-l)) on matrix pairs.

    Tested only on segments whose scan stays in Gamma_k; exiting pairs are
    resampled (the cone is convex, so exits indicate numerical degeneracy).
    """
    k = spec.k
    if not 0 <= l < k:
        raise ValueError(f"need 0 <= l < k, got l={l}, k={k}")
    args = dict(proposition="matrix-quotient-concavity", n=spec.n, k=k, l=l,
                samples=spec.count, seed=spec.seed)
    A = sample_hyperhermitian_gamma_k(spec, tag=12)
    B = sample_hyperhermitian_gamma_k(spec, tag=13)
    ts = np.linspace(0.0, 1.0, scan_points)
    resamples = 0
    for _ in range(max_resample):
        seg = A[None] * (1 - ts)[:, None, None, None] + B[None] * ts[:, None, None, None]
        lam_seg = qt.chi_eigvals(seg.reshape(-1, *A.shape[1:])).reshape(scan_points, spec.count, spec.n)
        inside = symfun.in_gamma_k(lam_seg, k).all(axis=0)
        if inside.all():
            break
        bad = np.flatnonzero(~inside)
        repl = SampleSpec(spec.n, spec.k, len(bad), spec.seed + 1 + resamples, spec.scale)
        B[bad] = sample_hyperhermitian_gamma_k(repl, tag=14)
        resamples += 1
    else:
        raise SamplingError("could not keep concavity segments inside the cone")

    def f(M):
        lam = qt.chi_eigvals(M)
        return symfun.quotient_root(lam, k, l, check=False)

    mid = f((A + B) / 2.0)
    avg = (f(A) + f(B)) / 2.0
    report = _tally(args, _normalized_slack(mid, avg - 1e-15))
    report.notes["resample_rounds"] = resamples
    return report


def verify_schur_pairing(spec):
    """For lam ascending in Gamma_k and hyperhermitian B with ascending
    eigenvalues mu in Gamma_k:

        sum_i B_ii sigma_{k-1}(lam|i) >= sum_i mu_i sigma_{k-1}(lam|i) > 0.

    Both orderings ascending is the convention; the weights sigma_{k-1}(lam|i)
    are then non-increasing, which is what makes the pairing extremal.
    """
    k = spec.k
    args = dict(proposition="schur-diagonal-pairing", n=spec.n, k=k, l=None,
                samples=spec.count, seed=spec.seed)
    lam = np.sort(sample_gamma_k(spec, tag=15), axis=1)
    B, mu = sample_hyperhermitian_gamma_k(spec, tag=16, return_eigs=True)
    w = symfun.sigma_excl_all(lam, k - 1)
    diag = np.einsum("cii->ci", B)[:, : spec.n].real
    lhs = (diag * w).sum(axis=1)
    mid = (mu * w).sum(axis=1)
    s1 = _normalized_slack(lhs, mid - 1e-15)
    s2 = _normalized_slack(mid, 0.0)
    return _tally(args, np.concatenate([s1, s2]))


# ---------------------------------------------------------------------------
# tuple propositions
# ---------------------------------------------------------------------------


def verify_sigma_identities(spec, tol=1e-10):
    """The three split identities for deleted symmetric functions:

        sigma_k = sigma_k(.|i) + lam_i sigma_{k-1}(.|i)
        sum_i lam_i sigma_{k-1}(.|i) = k sigma_k
        sum_i sigma_k(.|i) = (n - k) sigma_k

    checked as relative deviations on unconstrained random tuples (the
    identities are polynomial, no cone needed), every order and index.
    """
    n, k = spec.n, spec.k
    args = dict(proposition="sigma-split-identities", n=n, k=k, l=None,
                samples=spec.count, seed=spec.seed)
    rng = _rng(spec, 19)
    lam = spec.scale * rng.uniform(-1.0, 1.0, size=(spec.count, n))
    slacks = []
    for kk in range(1, n + 1):
        s = symfun.sigma(lam, kk)
        w = symfun.sigma_excl_all(lam, kk - 1)
        d = symfun.sigma_excl_all(lam, kk) if kk <= n - 1 else np.zeros_like(lam)
        rel1 = np.abs(d + lam * w - s[:, None]) / (np.abs(s)[:, None] + np.abs(lam * w) + 1.0)
        rel2 = np.abs((lam * w).sum(axis=1) - kk * s) / (np.abs(kk * s) + 1.0)
        rel3 = np.abs(d.sum(axis=1) - (n - kk) * s) / (np.abs((n - kk) * s) + 1.0)
        slacks.extend([tol - rel1, tol - rel2, tol - rel3])
    return _tally(args, _concat(slacks))


def verify_newton_maclaurin(spec):
    """Normalized quotient roots are monotone across admissible order pairs:

        [ (s_k/C_k) / (s_l/C_l) ]^(1/(k-l)) <= [ (s_r/C_r) / (s_s/C_s) ]^(1/(r-s))

    for k > l, r > s, k >= r, l >= s, on Gamma_k samples.
    """
    n, k = spec.n, spec.k
    args = dict(proposition="newton-maclaurin", n=n, k=k, l=None,
                samples=spec.count, seed=spec.seed)
    lam = sample_gamma_k(spec, tag=20)
    e = symfun.elementary_all(lam, k)
    C = np.array([math.comb(n, m) for m in range(k + 1)], dtype=float)
    norm = e / C
    slacks = []
    for kk in range(1, k + 1):
        for ll in range(kk):
            lhs = (norm[:, kk] / norm[:, ll]) ** (1.0 / (kk - ll))
            for r in range(1, kk + 1):
                for s in range(min(ll, r - 1) + 1):
                    if (r, s) == (kk, ll):
                        continue
                    rhs = (norm[:, r] / norm[:, s]) ** (1.0 / (r - s))
                    slacks.append(_normalized_slack(rhs, lhs - 1e-15))
    return _tally(args, _concat(slacks))


def verify_quotient_monotonicity(spec, l, h_rel=1e-5):
    """Central-difference partials of sigma_k/sigma_l are positive on Gamma_k."""
    k = spec.k
    args = dict(proposition="quotient-monotonicity", n=spec.n, k=k, l=l,
                samples=spec.count, seed=spec.seed)
    lam = sample_gamma_k(spec, tag=21)
    slacks = []
    for i in range(spec.n):
        h = h_rel * (1.0 + np.abs(lam[:, i]))
        up = lam.copy()
        dn = lam.copy()
        up[:, i] += h
        dn[:, i] -= h
        fu = symfun.quotient(up, k, l, check=False)
        fd = symfun.quotient(dn, k, l, check=False)
        slacks.append(_normalized_slack(fu, fd))
    return _tally(args, _concat(slacks))


def verify_quotient_concavity(spec, l):
    """Midpoint concavity of (sigma_k/sigma_l)^(1/(k-l)) on tuple pairs in Gamma_k."""
    k = spec.k
    args = dict(proposition="quotient-root-concavity", n=spec.n, k=k, l=l,
                samples=spec.count, seed=spec.seed)
    lam = sample_gamma_k(spec, tag=22)
    mu = sample_gamma_k(spec, tag=23)
    mid = symfun.quotient_root((lam + mu) / 2.0, k, l, check=False)
    avg = (symfun.quotient_root(lam, k, l, check=False)
           + symfun.quotient_root(mu, k, l, check=False)) / 2.0
    return _tally(args, _normalized_slack(mid, avg - 1e-15))


def verify_garding_inequality(spec):
    """sum_i mu_i sigma_{k-1}(lam|i) >= k sigma_k(mu)^(1/k) sigma_k(lam)^(1-1/k)."""
    k = spec.k
    args = dict(proposition="garding-pairing", n=spec.n, k=k, l=None,
                samples=spec.count, seed=spec.seed)
    lam = sample_gamma_k(spec, tag=24)
    mu = sample_gamma_k(spec, tag=25)
    lhs = symfun.garding_pairing(mu, lam, k, check=False)
    rhs = k * symfun.sigma(mu, k) ** (1.0 / k) * symfun.sigma(lam, k) ** (1.0 - 1.0 / k)
    return _tally(args, _normalized_slack(lhs, rhs - 1e-15))


def verify_tuple_minor_quotient(spec, l):
    """sigma_{k-1}(lam|i) sigma_l(lam) > sigma_k(lam) sigma_{l-1}(lam|i) on Gamma_k."""
    k = spec.k
    if not 1 <= l < k:
        raise ValueError(f"need 1 <= l < k, got l={l}, k={k}")
    args = dict(proposition="minor-quotient", n=spec.n, k=k, l=l,
                samples=spec.count, seed=spec.seed)
    lam = sample_gamma_k(spec, tag=26)
    e = symfun.elementary_all(lam, k)
    wk = symfun.sigma_excl_all(lam, k - 1)
    wl = symfun.sigma_excl_all(lam, l - 1)
    lhs = wk * e[:, l, None]
    rhs = e[:, k, None] * wl
    return _tally(args, _normalized_slack(lhs, rhs))


# ---------------------------------------------------------------------------
# algebra cross-checks
# ---------------------------------------------------------------------------


def verify_moore_realization(spec, tol=1e-8):
    """|moore_det|^4 equals det(realize) on random hyperhermitian matrices."""
    args = dict(proposition="moore-realization", n=spec.n, k=spec.k, l=None,
                samples=spec.count, seed=spec.seed)
    rng = _rng(spec, 30)
    rel = np.empty(spec.count)
    for c in range(spec.count):
        A = qt.random_hyperhermitian(rng, spec.n, spec.scale)
        p4 = qt.moore_det(A) ** 4
        d = np.linalg.det(qt.realize(A))
        rel[c] = abs(p4 - d) / max(abs(p4), abs(d), 1e-12)
    return _tally(args, tol - rel)


def verify_sigma_triple_agreement(spec, tol=1e-8):
    """Eigenvalue, minor-sum, and coefficient routes to sigma_k agree."""
    args = dict(proposition="sigma-triple-agreement", n=spec.n, k=spec.k, l=None,
                samples=spec.count, seed=spec.seed)
    rng = _rng(spec, 31)
    rel = np.empty((spec.count, 2))
    for c in range(spec.count):
        A = qt.random_hyperhermitian(rng, spec.n, spec.scale)
        a = qt.sigma_k_matrix(A, spec.k)
        b = qt.sigma_k_minor_sum(A, spec.k)
        d = qt.sigma_k_coefficient(A, spec.k)
        scale = max(abs(a), abs(b), abs(d), 1.0)
        rel[c] = (abs(a - b) / scale, abs(a - d) / scale)
    return _tally(args, tol - rel)


def verify_realize_homomorphism(spec, tol=1e-10):
    """realize(A @ B) == realize(A) @ realize(B) on random quaternionic matrices."""
    args = dict(proposition="realize-homomorphism", n=spec.n, k=spec.k, l=None,
                samples=spec.count, seed=spec.seed)
    rng = _rng(spec, 32)
    rel = np.empty(spec.count)
    for c in range(spec.count):
        A = qt.random_qmatrix(rng, spec.n, spec.scale)
        B = qt.random_qmatrix(rng, spec.n, spec.scale)
        lhs = qt.realize(A @ B)
        rhs = qt.realize(A) @ qt.realize(B)
        rel[c] = np.abs(lhs - rhs).max() / (1.0 + np.abs(rhs).max())
    return _tally(args, tol - rel)


def verify_unitary_invariance(spec, tol=1e-9):
    """eigenvalues(C* A C) == eigenvalues(A) for random quaternionic unitaries."""
    args = dict(proposition="unitary-invariance", n=spec.n, k=spec.k, l=None,
                samples=spec.count, seed=spec.seed)
    A, lam = sample_hyperhermitian_gamma_k(spec, tag=33, return_eigs=True)
    rng = _rng(spec, 34)
    U = qt.random_symplectic_unitary_chi(rng, spec.n, count=spec.count)
    conj = np.einsum("cji,cjk,ckl->cil", U.conj(), A, U)
    conj = (conj + conj.conj().transpose(0, 2, 1)) / 2.0
    mu = qt.chi_eigvals(conj)
    rel = np.abs(mu - lam).max(axis=1) / (1.0 + np.abs(lam).max(axis=1))
    return _tally(args, tol - rel)


# ---------------------------------------------------------------------------
# suite driver
# ---------------------------------------------------------------------------

STANDARD_PROPOSITIONS = (
    "sigma-split-identities",
    "newton-maclaurin",
    "quotient-monotonicity",
    "quotient-root-concavity",
    "garding-pairing",
    "minor-quotient",
    "deletion-cone",
    "matrix-minor-quotient",
    "matrix-quotient-concavity",
    "schur-diagonal-pairing",
    "moore-realization",
    "sigma-triple-agreement",
    "realize-homomorphism",
    "unitary-invariance",
)


def run_standard_suite(count, seed, n_values=(2, 3, 4, 5), scale=1.0,
                       propositions=None, algebra_count=None):
    """Run every verifier over all admissible (n, k, l); returns report list.

    ``algebra_count`` caps the per-sample-loop algebra cross-checks
    (moore-realization, sigma-triple, homomorphism) independently of the
    vectorized inequality count.
    """
    want = set(propositions or STANDARD_PROPOSITIONS)
    unknown = want - set(STANDARD_PROPOSITIONS)
    if unknown:
        raise ValueError(f"unknown propositions: {sorted(unknown)}")
    acount = algebra_count or count
    reports = []

    def spec_for(n, k, c=count):
        return SampleSpec(n=n, k=k, count=c, seed=seed, scale=scale)

    for n in n_values:
        for k in range(1, n + 1):
            spec = spec_for(n, k)
            if "sigma-split-identities" in want and k == 1:
                reports.append(verify_sigma_identities(spec))
            if "newton-maclaurin" in want:
                reports.append(verify_newton_maclaurin(spec))
            if "garding-pairing" in want:
                reports.append(verify_garding_inequality(spec))
            if "deletion-cone" in want and k >= 2:
                reports.append(verify_deletion_cone(spec))
            if "schur-diagonal-pairing" in want:
                reports.append(verify_schur_pairing(spec))
            for l in range(k):
                if "quotient-monotonicity" in want:
                    reports.append(verify_quotient_monotonicity(spec, l))
                if "quotient-root-concavity" in want:
                    reports.append(verify_quotient_concavity(spec, l))
                if "matrix-quotient-concavity" in want:
                    reports.append(verify_matrix_concavity(spec, l))
                if l >= 1 and "minor-quotient" in want:
                    reports.append(verify_tuple_minor_quotient(spec, l))
                if l >= 1 and "matrix-minor-quotient" in want:
                    reports.append(verify_minor_quotient(spec, l))
        aspec = spec_for(n, max(1, n - 1), acount)
        if "moore-realization" in want:
            reports.append(verify_moore_realization(aspec))
        if "sigma-triple-agreement" in want:
            for k in range(1, n + 1):
                reports.append(verify_sigma_triple_agreement(spec_for(n, k, acount)))
        if "realize-homomorphism" in want:
            reports.append(verify_realize_homomorphism(aspec))
        if "unitary-invariance" in want:
            reports.append(verify_unitary_invariance(spec_for(n, max(1, n - 1), count)))
    return reports
