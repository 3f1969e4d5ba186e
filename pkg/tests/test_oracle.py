import json
import math

import numpy as np
import pytest

from hquot import oracle, quaternion as qt, symfun
from hquot.errors import SamplingError
from hquot.oracle import SampleSpec


def test_spec_validation():
    with pytest.raises(ValueError):
        SampleSpec(n=3, k=2, count=0)
    with pytest.raises(ValueError):
        SampleSpec(n=3, k=4, count=10)
    with pytest.raises(ValueError):
        SampleSpec(n=3, k=2, count=5, scale=-1.0)


def test_sampler_membership_and_determinism():
    spec = SampleSpec(n=4, k=3, count=400, seed=99)
    a = oracle.sample_gamma_k(spec)
    b = oracle.sample_gamma_k(spec)
    assert np.array_equal(a, b)
    assert symfun.in_gamma_k(a, 3).all()


def test_sampler_full_cone_is_positive_orthant():
    spec = SampleSpec(n=3, k=3, count=300, seed=5)
    a = oracle.sample_gamma_k(spec)
    assert (a > 0).all()


def test_sampler_reaches_negative_entries():
    spec = SampleSpec(n=3, k=2, count=500, seed=7)
    a = oracle.sample_gamma_k(spec)
    assert (a < 0).any()


def test_sampler_budget_exhaustion():
    spec = SampleSpec(n=5, k=5, count=50000, seed=1)
    with pytest.raises(SamplingError):
        oracle.sample_gamma_k(spec, max_rounds=1)


def test_hyperhermitian_sampler():
    spec = SampleSpec(n=3, k=2, count=200, seed=13)
    A, lam = oracle.sample_hyperhermitian_gamma_k(spec, return_eigs=True)
    assert np.abs(A - A.conj().transpose(0, 2, 1)).max() < 1e-12
    for i in range(0, 200, 40):
        assert qt.structure_residual(A[i]) < 1e-12
    mu = qt.chi_eigvals(A)
    assert np.abs(mu - lam).max() < 1e-9


def test_hyperhermitian_sampler_positive_det_at_top_order():
    spec = SampleSpec(n=3, k=3, count=100, seed=17)
    A = oracle.sample_hyperhermitian_gamma_k(spec)
    lam = qt.chi_eigvals(A)
    assert (np.prod(lam, axis=1) > 0).all()


def test_minor_quotient_identity_matrix_arithmetic():
    # C(n-1,k-1)/C(n-1,l-1) > C(n,k)/C(n,l) for the identity
    for n in (3, 4, 5):
        for k in range(2, n + 1):
            for l in range(1, k):
                lhs = math.comb(n - 1, k - 1) / math.comb(n - 1, l - 1)
                rhs = math.comb(n, k) / math.comb(n, l)
                assert lhs > rhs


def test_schur_pairing_diagonal_equality():
    lam = np.sort(np.abs(np.random.default_rng(0).normal(size=5)) + 0.1)
    mu = np.sort(np.abs(np.random.default_rng(1).normal(size=5)) + 0.1)
    w = symfun.sigma_excl_all(lam, 2)
    B = qt.QMatrix.diag(mu)
    diag = np.einsum("ii->i", B.chi).real[:5]
    assert (diag * w).sum() == pytest.approx((mu * w).sum(), rel=1e-14)


@pytest.mark.parametrize(
    "fn,extra",
    [
        (oracle.verify_deletion_cone, ()),
        (oracle.verify_minor_quotient, (1,)),
        (oracle.verify_matrix_concavity, (1,)),
        (oracle.verify_schur_pairing, ()),
        (oracle.verify_newton_maclaurin, ()),
        (oracle.verify_quotient_monotonicity, (1,)),
        (oracle.verify_quotient_concavity, (1,)),
        (oracle.verify_garding_inequality, ()),
        (oracle.verify_tuple_minor_quotient, (1,)),
    ],
)
def test_inequality_verifiers_pass(fn, extra):
    spec = SampleSpec(n=4, k=3, count=800, seed=2024)
    report = fn(spec, *extra)
    assert report.failures == 0
    assert report.checks > 0
    assert report.min_slack > -oracle.MARGIN


def test_sigma_identity_verifier():
    report = oracle.verify_sigma_identities(SampleSpec(n=5, k=1, count=2000, seed=8))
    assert report.failures == 0
    # per order: count*n splits + count weighted sums + count deleted sums
    assert report.checks == 5 * 2000 * (5 + 2)


def test_algebra_verifiers_pass():
    spec = SampleSpec(n=3, k=2, count=60, seed=77)
    for fn in (
        oracle.verify_moore_realization,
        oracle.verify_sigma_triple_agreement,
        oracle.verify_realize_homomorphism,
        oracle.verify_unitary_invariance,
    ):
        report = fn(spec)
        assert report.failures == 0


def test_reports_are_deterministic_and_serializable():
    spec = SampleSpec(n=3, k=2, count=200, seed=31)
    r1 = oracle.verify_garding_inequality(spec)
    r2 = oracle.verify_garding_inequality(spec)
    assert r1.to_json() == r2.to_json()
    payload = json.loads(r1.to_json())
    assert payload["proposition"] == "garding-pairing"
    assert payload["failures"] == 0


def test_standard_suite_small():
    reports = oracle.run_standard_suite(count=150, seed=3, n_values=(2, 3), algebra_count=25)
    assert all(r.passed for r in reports)
    names = {r.proposition for r in reports}
    assert names == set(oracle.STANDARD_PROPOSITIONS)
    with pytest.raises(ValueError):
        oracle.run_standard_suite(count=10, seed=3, n_values=(2,), propositions=["nope"])
