import numpy as np
import pytest

import classical_oracles as co
from finiteqg import preset
from finiteqg.actions import (
    crossed_product,
    dual_translation_action,
    load_action,
    self_action,
    trivial_action,
)
from finiteqg.amenability import (
    amenable_from_mean,
    amenable_from_pair,
    auto_equivariance,
    dual_average_expectation,
    extended_comul_commutation,
    general_amenable_from_expectation,
    general_equivariant_expectation,
    kac_amenable_from_expectation,
    kac_crossed_expectation,
    kac_extract,
    kac_lift,
    mean_from_amenable,
    pair_expectation_up,
    self_action_expectation,
    verify_amenable,
)
from finiteqg.multimatrix import MultiMatrixAlgebra, max_residual, \
    present_algebra
from finiteqg.quantumgroup import BudgetExceeded
from finiteqg._numeric import orth_basis, snorm, subspace_distance


SMALL = ["trivial", "func_z2", "func_z3", "func_s3", "group_s3", "kac_paljutkin"]


def _coset_setup():
    """C(S3) over the coset space of the order-2 subgroup, with membership."""
    elems, compose, inverse, identity = co.sym3()
    sub = [(0, 1, 2), (1, 0, 2)]
    index = {e: i for i, e in enumerate(elems)}
    seen = {}
    member = []
    for el in elems:
        key = frozenset(index[compose(el, h)] for h in sub)
        if key not in seen:
            seen[key] = len(seen)
        member.append(seen[key])
    m, alpha = co.coset_translation_coaction(co.sym3(), sub)
    inc = np.zeros((len(elems), m))
    for i, c in enumerate(member):
        inc[i, c] = 1.0
    return m, alpha, inc, member


def test_self_action_expectation_z2_hand_table():
    # the counit-slice expectation on C(Z2), all 16 entries by hand
    g = preset("func_z2")
    elems, compose, inverse, identity = co.cyclic(2)
    iid = elems.index(identity)
    comul_hand = np.zeros((4, 2))
    for b in range(2):
        for c in range(2):
            comul_hand[b * 2 + c, elems.index(compose(elems[b], elems[c]))] = 1.0
    e_hand = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            if b == iid:
                e_hand[:, a * 2 + b] = comul_hand[:, a]
    cert = self_action_expectation(g)
    assert snorm(cert.expectation.map - e_hand) < 1e-10
    assert cert.passes
    assert cert.residual < 1e-9
    assert cert.certs["left_inverse"] < 1e-12


def test_self_action_expectation_presets():
    for name in SMALL:
        cert = self_action_expectation(preset(name))
        assert cert.passes, name
        assert cert.residual < 1e-9, name
    t = self_action_expectation(preset("trivial"))
    assert snorm(t.expectation.map - np.eye(1)) < 1e-12


def test_verify_amenable_trivial_action_mean_slice():
    # E = mean (x) id on a trivial action always passes
    for name in ["func_z2", "kac_paljutkin"]:
        g = preset(name)
        n = MultiMatrixAlgebra([2])
        a = trivial_action(g, n)
        e = np.kron(np.outer(g.algebra.unit(), g.mean), np.eye(4))
        cert = verify_amenable(a, e)
        assert cert.passes, name
        assert cert.residual < 1e-8, name
        assert cert.expectation.ce_certificate["bimodule"] < 1e-9, name


def test_verify_amenable_scalar_group_identity():
    t = preset("trivial")
    n = MultiMatrixAlgebra([2])
    a = trivial_action(t, n)
    cert = verify_amenable(a, np.eye(4))
    assert cert.passes


def test_verify_amenable_rank_one_breaks_bimodule():
    g = preset("func_z2")
    n = MultiMatrixAlgebra([2])
    a = trivial_action(g, n)
    # point state on the group side, corner state on the 2x2 side
    s = np.kron(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0, 0.0]))
    e = np.outer(a.pair.unit(), s)
    u = a.alpha @ np.array([0.0, 1.0, 0.0, 0.0])   # image of e_12
    v = a.alpha @ np.array([0.0, 0.0, 1.0, 0.0])   # image of e_21
    gap = e @ a.pair.mul(u, v) - a.pair.lmul_matrix(u) @ (e @ v)
    assert np.linalg.norm(gap) > 1.0
    cert = verify_amenable(a, e)
    assert not cert.passes
    assert cert.expectation.ce_certificate["bimodule"] > 0.5
    assert cert.expectation.ce_certificate["idempotent"] < 1e-10
    assert cert.expectation.ce_certificate["unital"] < 1e-10


def test_mean_recovery_self_action():
    g = preset("func_z3")
    a = self_action(g)
    cert = self_action_expectation(g)
    m, info = mean_from_amenable(a, cert, g.haar_state)
    assert np.allclose(m, np.full(3, 1 / 3), atol=1e-8)
    assert np.linalg.norm(m - g.mean) < 1e-8
    assert max_residual(info) < 1e-8
    kp = preset("kac_paljutkin")
    mk, infok = mean_from_amenable(self_action(kp), self_action_expectation(kp),
                                   kp.haar_state)
    assert np.linalg.norm(mk - kp.mean) < 1e-8
    assert max_residual(infok) < 1e-8


def test_mean_recovery_dual_action():
    # hand-built expectation: conjugate by the multiplication unitary inside
    # the pair, slice the function leg with the invariant state, conjugate back
    for name in ["func_z3", "kac_paljutkin"]:
        g = preset(name)
        a = dual_translation_action(g)
        dn = a.target.dim
        pair = a.pair
        w = np.kron(np.linalg.pinv(g.rep), g.dual_unrep) @ g.op_pair_coords(
            g.mult_unitary)
        ws = pair.star(w)
        c1 = pair.lmul_matrix(w) @ pair.rmul_matrix(ws)
        c2 = pair.lmul_matrix(ws) @ pair.rmul_matrix(w)
        slice_embed = (np.kron(g.algebra.unit()[:, None], np.eye(dn))
                       @ np.kron(g.haar_state[None, :], np.eye(dn)))
        e = c2 @ slice_embed @ c1
        cert = verify_amenable(a, e)
        assert cert.passes, name
        m, info = mean_from_amenable(a, cert, g.dual_haar_state)
        assert np.linalg.norm(m - g.mean) < 1e-8, name
        assert max_residual(info) < 1e-8, name


def test_amenable_from_mean_matches_counit_route():
    g = preset("func_z3")
    cert_m = amenable_from_mean(self_action(g), g.mean)
    cert_c = self_action_expectation(g)
    assert cert_m.passes
    assert subspace_distance(cert_m.expectation.onto.basis,
                             cert_c.expectation.onto.basis) < 1e-9
    m2, _ = mean_from_amenable(self_action(g), cert_m, g.haar_state)
    assert np.linalg.norm(m2 - g.mean) < 1e-8
    # scalar target: the construction collapses to mean (x) id
    t = trivial_action(g, MultiMatrixAlgebra([1]))
    cert_t = amenable_from_mean(t, g.mean)
    e_expected = np.outer(t.pair.unit(), np.kron(g.mean, [1.0]))
    assert snorm(cert_t.expectation.map - e_expected) < 1e-8
    assert cert_t.state is not None


def test_amenable_from_mean_coset_action():
    g = preset("func_s3")
    m, alpha, inc, member = _coset_setup()
    a = load_action(g, MultiMatrixAlgebra([1] * m), alpha, label="cosets")
    cert = amenable_from_mean(a, g.mean)
    assert cert.passes
    assert cert.residual < 1e-9
    mm, info = mean_from_amenable(a, cert, cert.state)
    assert np.allclose(mm, np.full(6, 1 / 6), atol=1e-8)
    assert max_residual(info) < 1e-8


def test_pair_expectation_up_coset_averaging():
    g = preset("func_s3")
    m, alpha, inc, member = _coset_setup()
    a = load_action(g, MultiMatrixAlgebra([1] * m), alpha)
    beta = self_action(g)
    # restricting the translation action to coset functions gives alpha back
    assert snorm(g.comul @ inc - np.kron(np.eye(6), inc) @ alpha) < 1e-12
    cert = amenable_from_mean(a, g.mean)
    # deliberately biased input expectation: evaluate at one coset member
    q = np.zeros((m, 6))
    for c in range(m):
        q[c, member.index(c)] = 1.0
    ce = pair_expectation_up(cert, q, beta, inc)
    p = ce.context["restriction"]
    assert np.linalg.norm(p - inc.T / 2.0) < 1e-8
    assert ce.equivariance_certificates["pair"] < 1e-8
    assert snorm(ce.map - inc @ p) < 1e-12
    # equal algebras with the identity input reduce to the identity
    cert_beta = self_action_expectation(g)
    ce_id = pair_expectation_up(cert_beta, np.eye(6), beta, np.eye(6))
    assert snorm(ce_id.context["restriction"] - np.eye(6)) < 1e-9


def test_amenable_from_pair_restricts():
    g = preset("func_s3")
    m, alpha, inc, member = _coset_setup()
    a = load_action(g, MultiMatrixAlgebra([1] * m), alpha)
    beta = self_action(g)
    cert_beta = self_action_expectation(g)
    cert_small = amenable_from_pair(cert_beta, inc.T / 2.0, inc, a)
    assert cert_small.passes
    want = amenable_from_mean(a, g.mean)
    assert subspace_distance(cert_small.expectation.onto.basis,
                             want.expectation.onto.basis) < 1e-8
    # identity restriction recovers the original expectation
    cert_same = amenable_from_pair(cert_beta, np.eye(6), np.eye(6), beta)
    assert snorm(cert_same.expectation.map - cert_beta.expectation.map) < 1e-12


def test_dual_average_expectation_collapses_group_elements():
    g = preset("func_z3")
    a = self_action(g)
    cp = crossed_product(a)
    ce = dual_average_expectation(cp)
    assert max_residual(ce.ce_certificate) < 1e-9
    amb = cp.ambient
    q = orth_basis(cp.dual_embedded)
    n_unit = a.target.unit()
    for aidx in range(3):
        lam = np.zeros((3, 3))
        for j in range(3):
            lam[(aidx + j) % 3, j] = 1.0
        lam_emb = np.kron(lam.reshape(-1), n_unit)
        assert np.linalg.norm(lam_emb - q @ (q.conj().T @ lam_emb)) < 1e-9
        for j in range(3):
            x = amb.mul(lam_emb, cp.alpha_embedded[:, j])
            want = (1.0 if aidx == 0 else 0.0) * cp.alpha_embedded[:, j]
            assert np.linalg.norm(ce.map @ x - want) < 1e-9


def test_kac_lift_extract_roundtrip():
    g = preset("func_z2")
    n4 = MultiMatrixAlgebra([1, 1, 1, 1])
    # Z2 translating the first coordinate of Z2 x Z2, second left alone
    beta = np.zeros((8, 4))
    for x in range(2):
        for y in range(2):
            for aa in range(2):
                beta[aa * 4 + ((x - aa) % 2) * 2 + y, x * 2 + y] = 1.0
    a = load_action(g, n4, beta)
    inc = np.zeros((4, 2))
    inc[0, 0] = inc[1, 0] = inc[2, 1] = inc[3, 1] = 1.0
    q0 = inc.T / 2.0
    assert snorm(inc @ q0 - np.kron(np.eye(2), np.full((2, 2), 0.5))) < 1e-12
    ce = kac_lift(a, q0, inc)
    cp = ce.context["crossed"]
    assert max_residual(ce.ce_certificate) < 1e-8
    assert ce.equivariance_certificates["dual_translation"] < 1e-8
    assert ce.equivariance_certificates["base_coaction"] < 1e-8
    p_back, certs = kac_extract(cp, ce, inc)
    assert np.linalg.norm(p_back - q0) < 1e-8
    assert certs["dual_state_identity"] < 1e-9
    # equal algebras: lifting the identity is the identity
    ce2 = kac_lift(a, np.eye(4), np.eye(4))
    assert snorm(ce2.map - np.eye(16)) < 1e-12
    p2, _ = kac_extract(ce2.context["crossed"], ce2, np.eye(4))
    assert snorm(p2 - np.eye(4)) < 1e-8


def test_kac_crossed_expectation_and_back():
    for name in ["func_z2", "func_z3"]:
        g = preset(name)
        a = self_action(g)
        cert = self_action_expectation(g)
        ce = kac_crossed_expectation(a, cert)
        cp = ce.context["crossed"]
        assert max_residual(ce.ce_certificate) < 1e-8, name
        assert ce.equivariance_certificates["dual_opposite"] < 1e-8, name
        assert ce.equivariance_certificates["right_translation"] < 1e-8, name
        assert subspace_distance(ce.onto.basis, cp.subalg.basis) < 1e-8, name
        back = kac_amenable_from_expectation(a, ce)
        assert back.passes, name
        m, _ = mean_from_amenable(a, back, g.haar_state)
        assert np.allclose(m, np.full(g.dim, 1 / g.dim), atol=1e-8), name
        if name == "func_z2":
            # the self-action crossed product is one full matrix block on
            # the regular representation space
            pres = present_algebra(cp.subalg.abstract())
            assert pres.mma.block_dims == [2]
            assert max_residual(pres.cert) < 1e-8


def test_crossed_expectation_trivial_target_hits_dual():
    # scalar fibre: the expectation is the trace-compatible projection onto
    # the regular-representation span
    for name in ["func_z2", "func_z3"]:
        g = preset(name)
        t = trivial_action(g, MultiMatrixAlgebra([1]))
        cert = amenable_from_mean(t, g.mean)
        ce = kac_crossed_expectation(t, cert)
        cp = ce.context["crossed"]
        q = orth_basis(cp.dual_embedded)
        assert subspace_distance(ce.onto.basis, q) < 1e-8, name
        assert snorm(ce.map - q @ q.conj().T) < 1e-8, name


def test_extended_comul_commutation_presets():
    for name in SMALL:
        res = extended_comul_commutation(preset(name))
        assert res < 1e-9, name
    assert extended_comul_commutation(preset("trivial")) < 1e-12


def test_auto_equivariance():
    g = preset("func_z3")
    r = auto_equivariance(g, np.eye(9))
    assert r["right_translation"] < 1e-12
    assert r["dual_opposite"] < 1e-12
    r0 = auto_equivariance(preset("trivial"), np.eye(1))
    assert max(r0.values()) < 1e-12
    # averaging any completely positive map over the right translation leg
    # produces an equivariant map; the dual residual then comes for free
    kp = preset("kac_paljutkin")
    d = kp.dim
    dd = d * d
    rng = np.random.default_rng(7)
    kraus = rng.standard_normal((3, d, d)) + 1j * rng.standard_normal((3, d, d))
    phi0 = sum(np.kron(k, k.conj()) for k in kraus)
    phi0 = phi0 / snorm(phi0)
    f_row = (np.eye(d).reshape(-1) / d) @ phi0
    psi = np.tensordot(kp.comul_ext_right.reshape(dd, dd, dd), f_row,
                       axes=(1, 0))
    r2 = auto_equivariance(kp, psi)
    assert r2["right_translation"] < 1e-9
    assert r2["dual_opposite"] < 1e-8
    with pytest.raises(ValueError, match="equivarian"):
        auto_equivariance(kp, phi0)


def test_general_route_cross_validates_kac():
    g = preset("func_z3")
    a = self_action(g)
    cert = self_action_expectation(g)
    ce_k = kac_crossed_expectation(a, cert)
    ce_g = general_equivariant_expectation(a)
    assert subspace_distance(ce_k.onto.basis, ce_g.onto.basis) < 1e-8
    assert snorm(ce_k.map - ce_g.map) > 1e-3   # genuinely different routes
    assert ce_g.equivariance_certificates["dual_opposite"] < 1e-8
    assert ce_g.equivariance_certificates["right_translation"] < 1e-8
    back = general_amenable_from_expectation(a, ce_g)
    assert back.passes
    m, _ = mean_from_amenable(a, back, g.haar_state)
    assert np.allclose(m, np.full(3, 1 / 3), atol=1e-8)


def test_budget_gate_and_non_tracial_refusal():
    kp = preset("kac_paljutkin")
    with pytest.raises(BudgetExceeded):
        amenable_from_mean(self_action(kp), kp.mean)
    g = preset("func_z3")
    a = self_action(g)
    cert = self_action_expectation(g)
    old = g.certs["haar"]["tracial"]
    g.certs["haar"]["tracial"] = 1.0
    try:
        with pytest.raises(ValueError, match="tracial"):
            kac_crossed_expectation(a, cert)
        with pytest.raises(ValueError, match="tracial"):
            kac_lift(a, np.eye(3), np.eye(3))
    finally:
        g.certs["haar"]["tracial"] = old


def test_certificates_stable_under_unitary_transport():
    g = preset("func_z2")
    n = MultiMatrixAlgebra([2])
    a = trivial_action(g, n)
    good = np.kron(np.outer(g.algebra.unit(), g.mean), np.eye(4))
    bad = np.outer(a.pair.unit(),
                   np.kron([1.0, 0.0], [1.0, 0.0, 0.0, 0.0]))
    u = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    adu = np.kron(u, u.conj())
    alpha2 = np.kron(np.eye(2), adu) @ a.alpha @ adu.conj().T
    a2 = load_action(g, n, alpha2)
    s = np.kron(np.eye(2), adu)
    for e, ok in [(good, True), (bad, False)]:
        c1 = verify_amenable(a, e)
        c2 = verify_amenable(a2, s @ e @ s.conj().T)
        assert c1.passes == ok
        assert c2.passes == ok
        assert abs(c1.residual - c2.residual) < 1e-9


def test_feasible_expectation_explorer():
    from finiteqg.amenability import feasible_expectation
    from finiteqg.multimatrix import generated_subalgebra

    # M2 onto its diagonal: the affine system pins the pinch map exactly
    alg = MultiMatrixAlgebra([2])
    zmat = np.zeros(4, dtype=complex)
    zmat[0], zmat[3] = 1.0, -1.0
    diag = generated_subalgebra(alg, [zmat])
    ce = feasible_expectation(alg, diag)
    pinch = np.diag([1.0, 0.0, 0.0, 1.0]).astype(complex)
    assert snorm(ce.map - pinch) < 1e-8
    assert ce.ce_certificate["feasibility"] < 1e-10
    assert ce.ce_certificate["cp"] < 1e-10

    # pin a functional value no state can take: affinely feasible, CP fails
    scalars = generated_subalgebra(alg, [alg.unit()])
    e11 = np.zeros(4, dtype=complex)
    e11[0] = 1.0
    ce2 = feasible_expectation(alg, scalars, pins=[(e11, 2.0 * alg.unit())])
    want = np.outer(alg.unit(), np.array([2.0, 0.0, 0.0, -1.0]))
    assert snorm(ce2.map - want) < 1e-8
    assert ce2.ce_certificate["feasibility"] < 1e-10
    assert ce2.ce_certificate["idempotent"] < 1e-10
    assert abs(ce2.ce_certificate["cp"] - 1.0) < 1e-8

    # with the equivariance constraint the solution set is the family of
    # first-leg slices; minimum norm picks the uniform-weight member
    g = preset("func_z3")
    a = self_action(g)
    can = self_action_expectation(g).expectation
    rng = generated_subalgebra(a.pair, [a.alpha[:, j] for j in range(3)])
    ext = np.kron(g.comul, np.eye(3))
    ce3 = feasible_expectation(a.pair, rng, commuting=[ext])
    emean = np.zeros((9, 9), dtype=complex)
    for x in range(3):
        for y in range(3):
            z = (x + y) % 3
            for w in range(3):
                emean[w * 3 + ((z - w) % 3), x * 3 + y] = 1.0 / 3.0
    assert snorm(ce3.map - emean) < 1e-8
    assert ce3.ce_certificate["feasibility"] < 1e-10
    assert snorm(ce3.map - can.map) > 0.5
    assert verify_amenable(a, ce3.map).passes

    # a pin contradicting equivariance is reported, not silently projected
    y0 = np.zeros(9, dtype=complex)
    y0[0] = 1.0
    gap = np.linalg.norm(can.map @ y0 - y0)
    assert gap > 0.3
    ce4 = feasible_expectation(a.pair, rng, commuting=[ext],
                               pins=[(y0, y0)])
    assert ce4.ce_certificate["feasibility"] > 1e-3
    ce5 = feasible_expectation(a.pair, rng, commuting=[ext],
                               pins=[(y0, can.map @ y0)])
    assert ce5.ce_certificate["feasibility"] < 1e-8
    assert snorm(ce5.map - can.map) < 1e-8
