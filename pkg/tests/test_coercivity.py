"""Coercivity lab: constructed growth constants, certificates, witnesses."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import henckylab as hl
from henckylab import coercivity as co
from henckylab import kernels
from henckylab.convexity import GridAxis, ScanGrid, Verdict
from henckylab.energy import MaterialParams
from henckylab.errors import DomainError, InvalidDimensions
from henckylab.tensor import deviator

K_THIRD = 1.0 / 3.0


# ---------------------------------------------------------------------------
# scalar constant


def test_scalar_constant_fixed_points():
    assert co.scalar_coercivity_constant(3.0, 1.0) == math.exp(-2.25)
    assert co.scalar_coercivity_constant(0.1, 1.0) == pytest.approx(
        0.9975031223974601, rel=1e-15
    )
    assert co.scalar_coercivity_constant(4.0, 2.0) == pytest.approx(
        math.exp(-4.0) ** 2, rel=1e-15
    )
    # survives exponents where exp(-alpha^2/4) alone underflows
    assert co.scalar_coercivity_constant(64.0, 0.125) == pytest.approx(
        math.exp(-128.0), rel=1e-15
    )


def test_scalar_constant_beta_is_a_power():
    for alpha in (0.5, 1.0, 3.0, 6.0):
        k1 = co.scalar_coercivity_constant(alpha, 1.0)
        k2 = co.scalar_coercivity_constant(alpha, 2.0)
        assert k2 == pytest.approx(k1 * k1, rel=1e-14)


def test_scalar_constant_verifies_directly():
    # fresh grid, not the one the constructor used
    t = np.geomspace(1e-4, 1e4, 4001)
    for alpha, beta in ((3.0, 1.0), (1.0, K_THIRD), (4.0, 2.0), (0.5, 0.125)):
        K = co.scalar_coercivity_constant(alpha, beta)
        lhs = np.exp(beta * np.log(t) ** 2)
        rhs = K * np.abs(t - 1.0) ** (alpha * beta)
        assert np.all(lhs >= rhs)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_scalar_inequality_pointwise(t):
    K = math.exp(-2.25)  # alpha = 3, beta = 1
    assert math.exp(math.log(t) ** 2) >= K * abs(t - 1.0) ** 3 * (1.0 - 1e-12)


def test_scalar_constant_rejects_underflow():
    with pytest.raises(DomainError):
        co.scalar_coercivity_constant(200.0, 1.0)


# ---------------------------------------------------------------------------
# split constants


def test_taylor_split_hand_values():
    c, kt, m = co._taylor_split_constants(2.0)
    assert (c, kt, m) == (1.0, 4.0, 0)
    c, kt, m = co._taylor_split_constants(4.0)
    assert m == 1
    assert c == pytest.approx(1.0 / 9.0, rel=1e-15)
    assert kt == pytest.approx(16.0 / 9.0, rel=1e-15)
    c, kt, m = co._taylor_split_constants(8.0)
    assert m == 3
    assert c == pytest.approx(1.0 / 369.0, rel=1e-15)
    assert kt == pytest.approx(256.0 / 369.0, rel=1e-15)


def test_taylor_split_inequality_random():
    rng = np.random.default_rng(4)
    s = np.exp(rng.uniform(0.0, math.log(100.0), size=20000))
    s = s[s > 1.0]
    t = rng.uniform(0.0, 4.0, size=s.size)
    for gamma in (2.0, 4.0, 5.5, 8.0):
        c, kt, _ = co._taylor_split_constants(gamma)
        lhs = c * (s + t) ** (gamma / 2.0) - kt
        rhs = s ** (gamma / 2.0)
        assert np.all(lhs <= rhs * (1.0 + 1e-12))


# ---------------------------------------------------------------------------
# pair certificate


def test_pair_certificate_alpha4():
    cert = co.verify_pair_coercivity(4.0, 1.0)
    # k_cor = e^-4, C = 1/9: the squared branch wins k1, the Taylor term k2
    assert cert.k1 == pytest.approx(math.exp(-4.0) ** 2, rel=1e-15)
    assert cert.k2 == pytest.approx(math.exp(-4.0) * 16.0 / 9.0, rel=1e-15)
    assert cert.points_tested == 160000
    assert cert.overflow_points == 0
    # (1, 1) sits on the default grid: slack there is exactly 1 + k2
    assert cert.min_slack == pytest.approx(1.0 + cert.k2, rel=1e-12)
    assert cert.extras["empirical_k1"] > cert.k1


def test_pair_certificate_overflow_counted_separately():
    grid = ScanGrid(
        (GridAxis("lam1", 1e-12, 1e12, 300, log=True), GridAxis("lam2", 1e-12, 1e12, 300, log=True))
    )
    cert = co.verify_pair_coercivity(4.0, 1.0, grid=grid)
    # exp(log^2 t) passes 1e308 near t = 4e11; inf still satisfies the bound
    assert cert.overflow_points > 0
    assert cert.min_slack >= 0.0
    assert cert.points_tested == 90000


def test_pair_certificate_deterministic():
    a = co.verify_pair_coercivity(3.0, K_THIRD)
    b = co.verify_pair_coercivity(3.0, K_THIRD)
    assert a.to_json_dict() == b.to_json_dict()


def test_certificate_refuses_contradiction():
    with pytest.raises(DomainError):
        co.CoercivityCertificate("x", {}, 1.0, 0.0, {}, -1e-9, 10)
    with pytest.raises(DomainError):
        co.CoercivityCertificate("x", {}, 0.0, 0.0, {}, 1.0, 10)
    with pytest.raises(DomainError):
        co.CoercivityCertificate("x", {}, math.inf, 0.0, {}, 1.0, 10)
    with pytest.raises(DomainError):
        co.CoercivityCertificate("x", {}, 1.0, -1.0, {}, 1.0, 10)


# ---------------------------------------------------------------------------
# full energy bound


def test_full_constants_match_hand_recipe():
    p = MaterialParams()
    k1, k2 = co.full_coercivity_constants(p, 2.0, 2)
    # alpha1 = 12, beta = 1/3: k_cor = e^-12, gamma = 4 so C = 1/9, Kt = 16/9
    # alpha2 = 32, betahat = 1/8: k_vol = e^-32
    c1 = 3.0 * min(math.exp(-24.0), math.exp(-12.0) / 9.0)
    c2 = 4.0 * math.exp(-32.0)
    c3 = 3.0 * max(math.exp(-12.0) * 16.0 / 9.0, math.exp(-24.0) * 64.0)
    a2 = 2.0**0 * 4.0 + 2.0**3
    a1 = max(2.0**0 / c1, a2 / c2)
    assert k1 == pytest.approx(1.0 / a1, rel=1e-13)
    assert k2 == pytest.approx(c3 + a2 / a1, rel=1e-13)
    # the volumetric branch dominates a1 here
    assert k1 == pytest.approx(math.exp(-32.0) / 3.0, rel=1e-13)


def test_full_constants_monotone_in_q():
    p = MaterialParams()
    for n in (2, 3):
        k1s = [co.full_coercivity_constants(p, q, n)[0] for q in (1.0, 2.0, 4.0)]
        assert k1s[0] >= k1s[1] >= k1s[2]
        assert all(v > 0.0 for v in k1s)


def test_full_certificate_all_q_n():
    p = MaterialParams()
    for q in (1.0, 2.0, 4.0):
        for n in (2, 3):
            cert = co.verify_full_coercivity(p, q, n, n_samples=20000, seed=0)
            assert cert.min_slack >= p.rest_energy - 1.0
            assert cert.overflow_points == 0
            assert cert.points_tested == 20000
            assert cert.claim_id == f"full-coercivity-{n}d-q{q:g}"
            assert cert.extras["empirical_k1"] > cert.k1
            assert cert.grid["sampler"] == "spd-eigs-log-uniform"


def test_full_certificate_deterministic():
    p = MaterialParams()
    a = co.verify_full_coercivity(p, 2.0, 3, n_samples=20000, seed=5)
    b = co.verify_full_coercivity(p, 2.0, 3, n_samples=20000, seed=5)
    assert a.to_json_dict() == b.to_json_dict()


def test_no_polynomial_upper_bound():
    # W(c I2) outgrows C (1 + ||c I||^q) for every polynomial cap: the
    # volumetric factor is exp-of-log-squared
    c = np.geomspace(1.0, 1e6, 200)
    F = np.zeros((c.size, 2, 2))
    F[:, 0, 0] = c
    F[:, 1, 1] = c
    W = kernels.energy_eh(F, 1.0, 1.0, K_THIRD, 0.125, 2)
    norm_q = np.sqrt(2.0) * c
    for cap in (1.0, 1e3, 1e6):
        for q in (1.0, 2.0, 4.0):
            assert np.any(W > cap * (1.0 + norm_q**q))


# ---------------------------------------------------------------------------
# non-coercivity of the deviatoric factor


def test_witness_defeats_both_bounds():
    for k, alpha, k1, k2, target in (
        (1.0, 1.0, 1.0, 0.0, 1e6),
        (K_THIRD, 2.0, 0.5, 3.0, 1e6),
        (0.2, 4.0, 1e-3, 10.0, 1e4),
    ):
        N = co.dev_only_noncoercivity_witness(k, alpha, k1, k2, target=target)
        ak = alpha * k
        # isochoric ray: the factor stays at exp(0) while ||U - 1|| grows
        U1 = np.diag([N + 1.0, N + 1.0])
        dev2_1 = float(kernels.log_strain(U1[None])[0][0])
        lhs1 = math.exp(k * dev2_1)
        rhs1 = k1 * (N * math.sqrt(2.0)) ** ak - k2
        assert rhs1 >= target * lhs1
        # fixed-ratio ray: pinned at exp((k/2) log^2 2) while ||dev U|| grows
        U2 = np.diag([2.0 * N, float(N)])
        dev2_2 = float(kernels.log_strain(U2[None])[0][0])
        lhs2 = math.exp(k * dev2_2)
        rhs2 = k1 / 2.0 ** (ak / 2.0) * float(N) ** ak - k2
        assert rhs2 >= target * lhs2


def test_witness_ray_geometry():
    # the two families' invariants, exactly
    for c in (0.5, 2.0, 4.0):
        dev2 = float(kernels.log_strain(np.diag([c, c])[None])[0][0])
        assert dev2 == 0.0
    N = 1024.0
    assert np.linalg.norm(deviator(np.diag([2.0 * N, N]))) == pytest.approx(
        N / math.sqrt(2.0), rel=1e-15
    )
    dev2 = float(kernels.log_strain(np.diag([2.0 * N, N])[None])[0][0])
    assert dev2 == pytest.approx(math.log(2.0) ** 2 / 2.0, rel=1e-12)


def test_witness_overflow_is_an_error():
    with pytest.raises(DomainError):
        co.dev_only_noncoercivity_witness(0.01, 0.01, 1e-300, 0.0, target=1e6)


# ---------------------------------------------------------------------------
# functional-side bound


def _two_triangle_functional(q):
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = ((0, 1, 2), (0, 2, 3))

    def mesh_energy(phi):
        total = 0.0
        grad_q = 0.0
        for a, b, c in tris:
            X = np.column_stack([nodes[b] - nodes[a], nodes[c] - nodes[a]])
            Y = np.column_stack([phi[b] - phi[a], phi[c] - phi[a]])
            Fm = Y @ np.linalg.inv(X)
            w = float(kernels.energy_eh(Fm[None], 1.0, 1.0, K_THIRD, 0.125, 2)[0])
            ar = 0.5 * abs(np.linalg.det(X))
            total += ar * w
            grad_q += ar * np.linalg.norm(Fm) ** q
        return total, grad_q ** (1.0 / q)

    return nodes, mesh_energy


def test_functional_identity_field_values():
    p = MaterialParams()
    nodes, mesh_energy = _two_triangle_functional(2.0)
    energy, grad = mesh_energy(nodes)
    assert energy == pytest.approx(p.rest_energy, rel=1e-12)
    assert grad == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_functional_bound_holds():
    p = MaterialParams()
    q = 2.0
    k1, k2 = co.full_coercivity_constants(p, q, 2)
    nodes, mesh_energy = _two_triangle_functional(q)
    out = co.q_coercivity_of_functional(
        q, mesh_energy, nodes, 1.0, k1, k2, trials=200, seed=0
    )
    assert out["verdict"] is Verdict.HOLDS
    assert out["fields_tested"] == 204
    assert out["max_grad_seen"] > 0.0
    for row in out["table"]:
        assert row["violations"] == 0
        # implied gradient cap, recomputed
        kt = (2.0 * ((row["bound"] + k2) / k1 + 2.0)) ** 0.5
        assert row["k_tilde"] == pytest.approx(kt, rel=1e-12)
    # small bounds admit few fields, large bounds admit more
    admissible = [row["admissible"] for row in out["table"]]
    assert admissible == sorted(admissible)
    assert admissible[0] >= 1  # the rest state at least


# ---------------------------------------------------------------------------
# validation


def test_validation_errors():
    p = MaterialParams()
    with pytest.raises(DomainError):
        co.scalar_coercivity_constant(0.0, 1.0)
    with pytest.raises(DomainError):
        co.scalar_coercivity_constant(1.0, -2.0)
    with pytest.raises(DomainError):
        co._taylor_split_constants(-1.0)
    with pytest.raises(DomainError):
        co.full_coercivity_constants(p, 0.5, 2)
    with pytest.raises(InvalidDimensions):
        co.full_coercivity_constants(p, 2.0, 5)
    with pytest.raises(DomainError):
        co.verify_full_coercivity(p, 2.0, 2, n_samples=0)
    with pytest.raises(DomainError):
        co.verify_full_coercivity(p, 2.0, 2, eig_lo=1.0, eig_hi=0.5)
    with pytest.raises(DomainError):
        co.dev_only_noncoercivity_witness(-1.0, 1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        co.dev_only_noncoercivity_witness(1.0, 1.0, 1.0, -0.5)
    with pytest.raises(DomainError):
        co.dev_only_noncoercivity_witness(1.0, 1.0, 1.0, 0.0, target=0.0)
    nodes, mesh_energy = _two_triangle_functional(2.0)
    with pytest.raises(DomainError):
        co.q_coercivity_of_functional(0.5, mesh_energy, nodes, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        co.q_coercivity_of_functional(2.0, mesh_energy, nodes, 1.0, 1.0, 1.0, trials=0)
    with pytest.raises(DomainError):
        co.q_coercivity_of_functional(2.0, mesh_energy, nodes, -1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        co.q_coercivity_of_functional(2.0, mesh_energy, nodes, 1.0, 0.0, 1.0)


def test_package_exports():
    assert hl.scalar_coercivity_constant is co.scalar_coercivity_constant
    assert hl.CoercivityCertificate is co.CoercivityCertificate
    assert hl.verify_full_coercivity is co.verify_full_coercivity
