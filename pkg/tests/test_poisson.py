import numpy as np
import pytest

import classical_oracles as co
from finiteqg import preset
from finiteqg.actions import load_action
from finiteqg.amenability import amenable_from_mean, self_action_expectation
from finiteqg.multimatrix import MultiMatrixAlgebra, max_residual
from finiteqg.poisson import (
    boundary_amenability,
    boundary_crossed_injectivity,
    markov_operator,
    poisson_boundary,
    walk_state,
)
from finiteqg.quantumgroup import BudgetExceeded
from finiteqg._numeric import orth_basis, snorm, subspace_distance


def _kp_mixture(g, i, j):
    return 0.5 * walk_state(g, f"block_trace:{i}") \
        + 0.5 * walk_state(g, f"block_trace:{j}")


def test_walk_state_descriptors():
    g = preset("func_z3")
    assert np.allclose(walk_state(g, "counit"), g.counit)
    assert np.allclose(walk_state(g, "uniform"), np.full(3, 1 / 3))
    assert np.allclose(walk_state(g, "haar"), g.haar_state)
    assert np.allclose(walk_state(g, "point:1"), [0.0, 1.0, 0.0])
    assert np.allclose(walk_state(g, [2.0, 0.0, 2.0]), [0.5, 0.0, 0.5])

    kp = preset("kac_paljutkin")
    dens = [np.zeros((1, 1))] * 4 + [np.eye(2) / 2]
    hand = kp.algebra.functional_from_densities(dens)
    assert np.allclose(walk_state(kp, "block_trace:4"), hand)

    with pytest.raises(ValueError):
        walk_state(g, [1.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        walk_state(kp, "point:0")
    with pytest.raises(ValueError):
        walk_state(g, "nonsense")


def test_markov_operator_counit_and_errors():
    for name in ["trivial", "func_z2", "func_z3", "group_s3", "kac_paljutkin"]:
        g = preset(name)
        phi, certs = markov_operator(g, g.counit)
        assert snorm(phi - np.eye(g.dim)) < 1e-12, name
        assert certs["unital"] < 1e-10
        assert certs["cp"] < 1e-10
        assert certs["spectral_radius"] < 1e-9
    g = preset("func_z3")
    with pytest.raises(ValueError):
        markov_operator(g, np.array([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        markov_operator(g, np.array([1.0, 1.0, 1.0]))


def test_markov_operator_classical_circulant():
    rng = np.random.default_rng(7)
    g = preset("func_z5")
    mu = rng.random(5)
    mu /= mu.sum()
    hand = co.walk_matrix(co.cyclic(5), mu)
    phi, _ = markov_operator(g, mu)
    assert snorm(phi - hand) < 1e-12
    assert np.allclose(phi.sum(axis=1), 1.0)
    assert np.allclose(phi.sum(axis=0), 1.0)

    phi_u, _ = markov_operator(g, walk_state(g, "uniform"))
    assert snorm(phi_u - np.full((5, 5), 1 / 5)) < 1e-12

    phi_p, _ = markov_operator(g, walk_state(g, "point:2"))
    hand_p = co.walk_matrix(co.cyclic(5), [0, 0, 1, 0, 0])
    assert snorm(phi_p - hand_p) < 1e-12
    assert np.allclose(np.sort(phi_p.real, axis=1)[:, -1], 1.0)

    gs = preset("func_s3")
    mu6 = rng.random(6)
    mu6 /= mu6.sum()
    hand6 = co.walk_matrix(co.sym3(), mu6)
    phi6, _ = markov_operator(gs, mu6)
    assert snorm(phi6 - hand6) < 1e-12


def test_poisson_boundary_counit():
    for name in ["func_z3", "group_s3"]:
        g = preset(name)
        pb = poisson_boundary(g, g.counit)
        d = g.dim
        assert pb.fixed_basis.shape[1] == d
        assert snorm(pb.expectation.map - np.eye(d)) < 1e-10
        assert sorted(pb.algebra.block_dims) == sorted(g.algebra.block_dims)
        inc = pb.fixed_basis @ pb.presentation.from_mma
        assert snorm(np.kron(np.eye(d), inc) @ pb.action.alpha
                     - g.comul @ inc) < 1e-8
        assert pb.certs["cesaro"] < 1e-9
        assert pb.certs["info_cesaro_raw"] < 1e-9
        assert max_residual(pb.certs["choi_effros"]) < 1e-9


def test_poisson_boundary_z4_subgroup_walk():
    # walk stuck on {0,2}: fixed functions are constant on the two cosets
    grp = co.cyclic(4)
    mu = np.array([0.5, 0.0, 0.5, 0.0])
    hand_phi = co.walk_matrix(grp, mu)
    sub, m, ind = co.walk_closure(grp, [0, 2])
    assert sub == [0, 2] and m == 2
    e_hand = ind @ ind.T / 2

    g = preset("func_z4")
    pb = poisson_boundary(g, mu)
    assert snorm(pb.markov - hand_phi) < 1e-12
    assert pb.fixed_basis.shape[1] == 2
    assert subspace_distance(pb.fixed_basis, orth_basis(ind)) < 1e-10
    assert snorm(pb.expectation.map - e_hand) < 1e-9
    assert pb.algebra.block_dims == [1, 1]
    assert max_residual(pb.certs["choi_effros"]) < 1e-12
    assert pb.certs["equivariance"] < 1e-9

    # the transition operator is idempotent, so the running average misses
    # the projection by exactly (1 - phi)/n
    raw_hand = snorm((np.eye(4) - hand_phi) / 1024)
    assert abs(pb.certs["info_cesaro_raw"] - raw_hand) < 1e-12
    assert pb.certs["cesaro"] < 1e-9

    # boundary action is the coset translation, up to the labeling choice
    # made by the block presentation
    m2, alpha_coset = co.coset_translation_coaction(grp, [0, 2])
    inc = pb.fixed_basis @ pb.presentation.from_mma
    perm = np.zeros((2, 2))
    for j in range(2):
        col = np.abs(inc[:, j])
        perm[int(np.argmax(ind.T @ col)), j] = 1.0
    assert snorm(inc - ind @ perm) < 1e-8
    assert snorm(np.kron(np.eye(4), perm) @ pb.action.alpha
                 - alpha_coset @ perm) < 1e-8


def test_poisson_boundary_strictly_positive_trivial():
    # everywhere-positive step distribution: irreducible aperiodic chain,
    # so only constants are fixed
    rng = np.random.default_rng(3)
    g = preset("func_s3")
    mu = rng.random(6) + 0.1
    mu /= mu.sum()
    sub, m, _ = co.walk_closure(co.sym3(), list(range(6)))
    assert m == 1
    pb = poisson_boundary(g, mu)
    assert pb.fixed_basis.shape[1] == 1
    assert pb.algebra.block_dims == [1]
    e_hand = np.outer(g.algebra.unit(), g.mean)
    assert snorm(pb.expectation.map - e_hand) < 1e-9
    assert pb.certs["cesaro"] < 1e-9


def test_boundary_monotone_convolution():
    g = preset("func_z4")
    mu = walk_state(g, "point:1")
    nu = (np.kron(mu, mu) @ g.comul).reshape(-1)
    assert np.allclose(nu, walk_state(g, "point:2"))

    phi_mu, _ = markov_operator(g, mu)
    phi_nu, _ = markov_operator(g, nu)
    assert snorm(phi_nu - phi_mu @ phi_mu) < 1e-12

    pb1 = poisson_boundary(g, mu)
    pb2 = poisson_boundary(g, nu)
    assert pb1.fixed_basis.shape[1] == 1
    assert pb2.fixed_basis.shape[1] == 2
    proj2 = pb2.fixed_basis @ pb2.fixed_basis.conj().T
    assert snorm(pb1.fixed_basis - proj2 @ pb1.fixed_basis) < 1e-10

    # full periods of the peripheral eigenvalues cancel exactly in the
    # running average at n = 1024
    assert pb1.certs["info_cesaro_raw"] < 1e-12


def test_boundary_amenability_counit_reduces():
    g = preset("func_z3")
    pb = poisson_boundary(g, g.counit)
    cert = boundary_amenability(pb)
    assert cert.passes
    assert cert.residual < 1e-9
    assert cert.certs["averaging_equivariance"] < 1e-9
    base = self_action_expectation(g)
    assert base.passes


def test_boundary_amenability_z4_matches_coset_route():
    g = preset("func_z4")
    pb = poisson_boundary(g, np.array([0.5, 0.0, 0.5, 0.0]))
    cert = boundary_amenability(pb)
    assert cert.passes
    assert cert.residual < 1e-9

    m2, alpha_coset = co.coset_translation_coaction(co.cyclic(4), [0, 2])
    coset_act = load_action(g, MultiMatrixAlgebra([1, 1]), alpha_coset)
    coset_cert = amenable_from_mean(coset_act, g.mean)
    assert coset_cert.passes

    _, _, ind = co.walk_closure(co.cyclic(4), [0, 2])
    inc = pb.fixed_basis @ pb.presentation.from_mma
    perm = np.zeros((2, 2))
    for j in range(2):
        perm[int(np.argmax(ind.T @ np.abs(inc[:, j]))), j] = 1.0
    s = np.kron(np.eye(4), perm)
    lhs = orth_basis(cert.expectation.map)
    rhs = orth_basis(s.conj().T @ coset_cert.expectation.map @ s)
    assert subspace_distance(lhs, rhs) < 1e-8


def test_boundary_amenability_kac_paljutkin_walks():
    g = preset("kac_paljutkin")
    pb = poisson_boundary(g, walk_state(g, "block_trace:4"))
    assert pb.fixed_basis.shape[1] == 1
    assert pb.algebra.block_dims == [1]
    cert = boundary_amenability(pb)
    assert cert.passes
    assert cert.residual < 1e-9

    pb2 = poisson_boundary(g, _kp_mixture(g, 1, 2))
    assert pb2.fixed_basis.shape[1] == 4
    assert pb2.algebra.block_dims == [1, 1, 1, 1]
    assert max_residual(pb2.certs["choi_effros"]) < 1e-9
    cert2 = boundary_amenability(pb2)
    assert cert2.passes
    assert cert2.residual < 1e-9


def test_boundary_crossed_injectivity_trivial_boundary():
    rng = np.random.default_rng(5)
    g = preset("func_s3")
    mu = rng.random(6) + 0.1
    mu /= mu.sum()
    pb = poisson_boundary(g, mu)
    report = boundary_crossed_injectivity(pb)
    assert report["passes"]
    ce = report["expectation"]
    cp = ce.context["crossed"]
    assert subspace_distance(ce.onto.basis, orth_basis(cp.dual_embedded)) < 1e-8
    assert "injective" in report["note"]


def test_boundary_crossed_injectivity_z4_and_budget():
    g = preset("func_z4")
    pb = poisson_boundary(g, np.array([0.5, 0.0, 0.5, 0.0]))
    report = boundary_crossed_injectivity(pb)
    assert report["passes"]
    assert report["residuals"]["certificate"] < 1e-8
    assert report["residuals"]["dual_opposite"] < 1e-8
    assert report["residuals"]["kac_range_distance"] < 1e-8
    assert report["boundary_blocks"] == [1, 1]

    kp = preset("kac_paljutkin")
    pbk = poisson_boundary(kp, walk_state(kp, "block_trace:4"))
    with pytest.raises(BudgetExceeded):
        boundary_crossed_injectivity(pbk)


def test_classical_pipeline_matches_chain_oracle():
    cases = [
        ("func_s3", co.sym3(), [1]),            # one transposition
        ("func_z6", co.cyclic(6), [2]),         # a step of order three
        ("func_s3", co.sym3(), [3, 4]),         # the two rotations
        ("func_s3", co.sym3(), [0, 1]),         # an order-two subgroup
        ("func_z6", co.cyclic(6), [0, 2, 4]),   # the even subgroup
    ]
    for name, grp, support in cases:
        g = preset(name)
        n = g.dim
        mu = np.zeros(n)
        mu[support] = 1.0 / len(support)
        sub, m, ind = co.walk_closure(grp, support)
        pb = poisson_boundary(g, mu)
        assert pb.fixed_basis.shape[1] == m, (name, support)
        assert subspace_distance(pb.fixed_basis, orth_basis(ind)) < 1e-9
        assert pb.algebra.block_dims == [1] * m
        if set(sub) == set(support):
            # uniform measure on its own subgroup: the walk operator is
            # already the averaging projection
            assert snorm(pb.expectation.map - pb.markov) < 1e-10

    # point mass of order two: the projection is the half-sum of now and
    # one step later
    g = preset("func_s3")
    mu = np.zeros(6)
    mu[1] = 1.0
    pb = poisson_boundary(g, mu)
    e_hand = (np.eye(6) + co.walk_matrix(co.sym3(), mu)) / 2
    assert snorm(pb.expectation.map - e_hand) < 1e-10
    assert pb.fixed_basis.shape[1] == 3
