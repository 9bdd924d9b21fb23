"""Equivariant conditional expectations for certified coactions.

An action is amenable when the tensor product of the group algebra with the
target admits a conditional expectation onto the coaction range that
commutes with comultiplying the group leg.  This module builds and checks
such expectations, converts them to and from invariant means, moves them
along nested targets, and carries them between a crossed product and the
full operator ambient.  Every construction returns residual certificates;
`verify_amenable` records failures instead of raising, while the builders
raise `ValueError` when their own output does not certify.
"""

from dataclasses import dataclass, field

import numpy as np

from ._numeric import RANK_CUTOFF, TOL_BUILD, TOL_CROSS, orth_basis, snorm
from .actions import crossed_product, self_action
from .braided import braided_crossed_iso, braided_tensor_product, \
    braided_trivialization, canonical_yd
from .multimatrix import SubAlgebra, generated_subalgebra, max_residual, \
    verify_conditional_expectation
from .quantumgroup import find_invariant_mean, is_kac


@dataclass
class ConditionalExpectation:
    algebra: object              # domain algebra for the coordinates of `map`
    map: np.ndarray
    onto: SubAlgebra
    ce_certificate: dict
    equivariance_certificates: dict
    label: str = ""
    context: dict = field(default_factory=dict, repr=False)

    def max_residual(self):
        worst = max_residual(self.ce_certificate)
        for val in self.equivariance_certificates.values():
            worst = max(worst, float(val))
        return worst


@dataclass
class AmenabilityCertificate:
    action: object
    expectation: ConditionalExpectation
    residual: float              # equivariance defect of the expectation
    provenance: str
    certs: dict
    tol: float
    passes: bool
    state: np.ndarray | None = None


# -- small helpers ---------------------------------------------------------


def _trace_state(alg):
    return alg.trace_functional() / alg.rep_dim


def _mean_defects(g, m):
    """State and two-sided invariance residuals of a functional on the group."""
    m = np.asarray(m, dtype=complex)
    fixed = np.outer(g.algebra.unit(), m)
    out = dict(g.algebra.state_defects(m))
    out["invariant_right"] = snorm(
        np.kron(np.eye(g.dim), m[None, :]) @ g.comul - fixed
    )
    out["invariant_left"] = snorm(
        np.kron(m[None, :], np.eye(g.dim)) @ g.comul - fixed
    )
    return out


def _invariant_state_defect(a, omega):
    """Residual of (id (x) omega) alpha = omega(.) 1."""
    g = a.group
    omega = np.asarray(omega, dtype=complex)
    lhs = np.kron(np.eye(g.dim), omega[None, :]) @ a.alpha
    return snorm(lhs - np.outer(g.algebra.unit(), omega))


def _range_subalgebra(a):
    return generated_subalgebra(
        a.pair, [a.alpha[:, j] for j in range(a.target.dim)]
    )


def _op_leg_equivariance(ext, e, d, dn):
    """Residual of extending the operator leg before or after applying e.

    `ext` sends operators to operator pairs; e acts on operator (x) target
    coordinates and is applied to the second pair leg together with the
    target leg.  Evaluated column by column to keep memory flat.
    """
    d2 = d * d
    amb = d2 * dn
    worst = 0.0
    for j in range(amb):
        col = e[:, j]
        wx = (ext @ np.eye(amb, dtype=complex)[:, j].reshape(d2, dn)) \
            .reshape(d2, amb)
        lhs = wx @ e.T
        rhs = (ext @ col.reshape(d2, dn)).reshape(d2, amb)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


# -- verification and the counit route ------------------------------------


def verify_amenable(a, e, *, tol=TOL_CROSS):
    """Full certificate for e as an equivariant expectation onto the range.

    Never raises: every failing residual is recorded and `passes` reports
    the verdict at the given tolerance.
    """
    g = a.group
    e = np.asarray(e, dtype=complex)
    dn = a.target.dim
    onto = _range_subalgebra(a)
    ce = verify_conditional_expectation(a.pair, e, onto)
    ext = np.kron(g.comul, np.eye(dn))
    equi = snorm(np.kron(np.eye(g.dim), e) @ ext - ext @ e)
    expectation = ConditionalExpectation(
        a.pair, e, onto, ce, {"translation": float(equi)},
        label="amenability check",
    )
    certs = {"range_defect": float(onto.closure_defect)}
    worst = max(max_residual(ce), equi, onto.closure_defect)
    return AmenabilityCertificate(
        a, expectation, float(equi), "verified", certs, tol,
        bool(worst <= tol),
    )


def self_action_expectation(g, *, tol=TOL_BUILD):
    """The translation action of a group on itself is amenable.

    Slice the second leg with the counit, then comultiply; the slice is a
    left inverse of the comultiplication, which makes the composite an
    idempotent onto the comultiplication range.
    """
    a = self_action(g)
    d = g.dim
    slice2 = np.kron(np.eye(d), g.counit[None, :])
    e = g.comul @ slice2
    cert = verify_amenable(a, e, tol=tol)
    cert.provenance = "counit slice"
    cert.certs["left_inverse"] = snorm(slice2 @ g.comul - np.eye(d))
    if not cert.passes or cert.certs["left_inverse"] > tol:
        raise ValueError("counit-slice expectation failed its certificate")
    return cert


# -- mean <-> expectation --------------------------------------------------


def mean_from_amenable(a, cert, omega, *, tol=TOL_CROSS):
    """Recover an invariant mean: m(f) = omega(alpha^-1 E(f (x) 1)).

    omega must be a certified invariant state on the target.
    """
    g = a.group
    if not cert.passes:
        raise ValueError("amenability certificate does not pass")
    omega = np.asarray(omega, dtype=complex)
    odef = max(
        _invariant_state_defect(a, omega),
        max_residual(a.target.state_defects(omega)),
    )
    if odef > tol:
        raise ValueError(
            "omega is not a certified invariant state (defect %.3e)" % odef
        )
    d = g.dim
    cols = cert.expectation.map @ np.kron(
        np.eye(d), a.target.unit()[:, None]
    )
    coef, *_ = np.linalg.lstsq(a.alpha, cols, rcond=None)
    m = omega @ coef
    info = _mean_defects(g, m)
    info["landing"] = snorm(a.alpha @ coef - cols)
    if max_residual(info) > tol:
        raise ValueError(
            "recovered functional failed its mean certificate (%.3e)"
            % max_residual(info)
        )
    return m, info


def amenable_from_mean(a, m=None, *, eta=None, tol=TOL_BUILD, budget=20736):
    """Build the equivariant expectation from an invariant mean.

    The operator average, the mean, and the identity act on the three legs
    of the braided product ambient; compressing to the braided product and
    straightening to the plain tensor product lands the expectation on the
    coaction range.  Also produces the certified invariant state
    omega = (m (x) eta) alpha used for the reverse direction.
    """
    g = a.group
    if m is None:
        m = g.mean
    m = np.asarray(m, dtype=complex)
    mdef = max_residual(_mean_defects(g, m))
    if mdef > max(tol, TOL_CROSS):
        raise ValueError("mean is not certified invariant (defect %.3e)" % mdef)
    dn = a.target.dim
    bp = braided_tensor_product(canonical_yd(g), a, budget=budget)
    tmat, tcerts = braided_trivialization(bp)
    big = np.kron(
        g.base_expectation,
        np.kron(np.outer(g.algebra.unit(), m), np.eye(dn)),
    )
    bas = bp.subalg.basis
    compressed = bas.conj().T @ (big @ bas)
    preserved = snorm(big @ bas - bas @ compressed)
    e = tmat @ compressed @ np.linalg.inv(tmat)
    cert = verify_amenable(a, e, tol=tol)
    cert.provenance = "invariant mean"
    cert.certs["braided_preserved"] = float(preserved)
    for key, val in tcerts.items():
        if not key.startswith("info_"):
            cert.certs["trivialization_" + key] = float(val)
    if eta is None:
        eta = _trace_state(a.target)
    omega = np.kron(m, np.asarray(eta, dtype=complex)) @ a.alpha
    cert.state = omega
    cert.certs["state_invariant"] = _invariant_state_defect(a, omega)
    cert.certs["state"] = dict(a.target.state_defects(omega))
    worst = max(max_residual(cert.certs), 0.0 if cert.passes else np.inf)
    if worst > tol:
        raise ValueError(
            "mean-built expectation failed its certificate (%.3e)" % worst
        )
    return cert


# -- nested targets --------------------------------------------------------


def pair_expectation_up(cert, q, beta, inclusion, *, tol=TOL_CROSS):
    """Equivariantize an expectation between nested targets.

    cert certifies the action on the smaller algebra, beta acts on the
    larger one and restricts to it along `inclusion`; q is any conditional
    expectation of the larger target onto the included copy, equivariant or
    not.  Averaging through the certified expectation returns the
    equivariant one.
    """
    a = cert.action
    g = a.group
    if beta.group is not g:
        raise ValueError("actions live over different groups")
    if not cert.passes:
        raise ValueError("amenability certificate does not pass")
    q = np.asarray(q, dtype=complex)
    inc = np.asarray(inclusion, dtype=complex)
    d, dm, dn = g.dim, a.target.dim, beta.target.dim
    restrict = snorm(beta.alpha @ inc - np.kron(np.eye(d), inc) @ a.alpha)
    if restrict > tol:
        raise ValueError(
            "restriction hypothesis fails: residual %.3e" % restrict
        )
    sub = generated_subalgebra(beta.target, [inc[:, j] for j in range(dm)])
    qcert = verify_conditional_expectation(beta.target, inc @ q, sub)
    if max_residual(qcert) > tol:
        raise ValueError(
            "q is not a conditional expectation onto the included copy "
            "(%.3e)" % max_residual(qcert)
        )
    comp = cert.expectation.map @ np.kron(np.eye(d), q) @ beta.alpha
    p, *_ = np.linalg.lstsq(a.alpha, comp, rcond=None)
    landing = snorm(a.alpha @ p - comp)
    equi = snorm(np.kron(np.eye(d), p) @ beta.alpha - a.alpha @ p)
    endo = inc @ p
    pcert = verify_conditional_expectation(beta.target, endo, sub)
    ce = ConditionalExpectation(
        beta.target, endo, sub, pcert, {"pair": float(equi)},
        label="pair expectation",
        context={"restriction": p, "landing": float(landing),
                 "input_certificate": qcert},
    )
    if max(landing, equi, max_residual(pcert)) > tol:
        raise ValueError(
            "pair expectation failed its certificate (%.3e)"
            % max(landing, equi, max_residual(pcert))
        )
    return ce


def amenable_from_pair(cert_big, p, inclusion, restricted, *, tol=TOL_CROSS):
    """Push an amenability certificate down to an included invariant target.

    p is the equivariant expectation onto the smaller target; the composite
    (id (x) p) E (id (x) inc) certifies the restricted action.
    """
    beta = cert_big.action
    g = beta.group
    if not cert_big.passes:
        raise ValueError("amenability certificate does not pass")
    p = np.asarray(p, dtype=complex)
    inc = np.asarray(inclusion, dtype=complex)
    d = g.dim
    restrict = snorm(
        beta.alpha @ inc - np.kron(np.eye(d), inc) @ restricted.alpha
    )
    if restrict > tol:
        raise ValueError(
            "restriction hypothesis fails: residual %.3e" % restrict
        )
    equi = snorm(np.kron(np.eye(d), p) @ beta.alpha - restricted.alpha @ p)
    if equi > tol:
        raise ValueError(
            "pair expectation is not equivariant (residual %.3e)" % equi
        )
    e_small = np.kron(np.eye(d), p) @ cert_big.expectation.map \
        @ np.kron(np.eye(d), inc)
    cert = verify_amenable(restricted, e_small, tol=tol)
    cert.provenance = "restricted from extension"
    cert.certs["restriction"] = float(restrict)
    cert.certs["pair_equivariance"] = float(equi)
    if not cert.passes:
        raise ValueError("restricted expectation failed its certificate")
    return cert


# -- crossed products ------------------------------------------------------


def dual_average_expectation(cp, *, tol=TOL_BUILD):
    """Average a crossed product over its dual translation.

    The invariant state of the dual side slices the new leg of the dual
    coaction; group-algebra elements collapse to their unit coefficient and
    the coaction range is fixed pointwise.
    """
    g = cp.parent.group
    amb = cp.ambient
    acan = np.kron(g.dual_haar_state[None, :], np.eye(amb.dim)) \
        @ cp.dual_action
    s = cp.subalg.basis
    compressed = s.conj().T @ (acan @ s)
    preserved = snorm(acan @ s - s @ compressed)
    sub_abs = cp.subalg.abstract()
    dn = cp.parent.target.dim
    range_abs = generated_subalgebra(
        sub_abs,
        [s.conj().T @ cp.alpha_embedded[:, j] for j in range(dn)],
    )
    # slice of a *-homomorphism by a state; CP holds by construction and the
    # abstract coordinates carry no representation to test it against
    cecert = verify_conditional_expectation(
        sub_abs, compressed, range_abs, cp=False
    )
    zres = np.kron(np.eye(g.dim), s.conj().T) @ (cp.dual_action @ s)
    equi = snorm(
        np.kron(np.eye(g.dim), compressed) @ zres - zres @ compressed
    )
    onto = generated_subalgebra(
        amb, [cp.alpha_embedded[:, j] for j in range(dn)]
    )
    ce = ConditionalExpectation(
        amb, acan, onto, cecert, {"dual_translation": float(equi)},
        label="dual average",
        context={"crossed": cp, "preserved": float(preserved)},
    )
    worst = max(max_residual(cecert), equi, preserved)
    if worst > tol:
        raise ValueError(
            "dual-average expectation failed its certificate (%.3e)" % worst
        )
    return ce


def _require_tracial(g, tol=TOL_CROSS):
    res = is_kac(g)
    worst = max(float(v) for v in res.values())
    if worst > tol:
        raise ValueError(
            "the invariant state is not certified tracial (residuals %r); "
            "this construction needs the tracial case" % res
        )


def kac_lift(a, p, inclusion, *, tol=TOL_BUILD, budget=20736):
    """Lift an expectation between nested targets to the crossed product.

    Requires the tracial case.  The lift acts as the identity on both
    operator legs and as `inclusion @ p` on the target; certified to
    preserve the crossed product, to commute with the dual translation and
    with the ambient coaction, and to be an expectation onto the included
    crossed copy.
    """
    g = a.group
    _require_tracial(g)
    p = np.asarray(p, dtype=complex)
    inc = np.asarray(inclusion, dtype=complex)
    d = g.dim
    dm = p.shape[0]
    rest, *_ = np.linalg.lstsq(
        np.kron(np.eye(d), inc), a.alpha @ inc, rcond=None
    )
    rest_landing = snorm(np.kron(np.eye(d), inc) @ rest - a.alpha @ inc)
    equi = snorm(np.kron(np.eye(d), p) @ a.alpha - rest @ p)
    cp = crossed_product(a, budget=budget)
    lift = np.kron(np.eye(d * d), inc @ p)
    s = cp.subalg.basis
    compressed = s.conj().T @ (lift @ s)
    preserved = snorm(lift @ s - s @ compressed)
    gens = [cp.alpha_embedded @ inc[:, j] for j in range(dm)]
    gens += [cp.dual_embedded[:, k] for k in range(d)]
    sub_abs = cp.subalg.abstract()
    onto_abs = generated_subalgebra(
        sub_abs, [s.conj().T @ col for col in gens]
    )
    # id tensor a verified concrete expectation; CP is inherited, and the
    # abstract coordinates carry no representation to test it against
    cecert = verify_conditional_expectation(
        sub_abs, compressed, onto_abs, cp=False
    )
    dual_eq = snorm(
        np.kron(np.eye(d), lift) @ cp.dual_action - cp.dual_action @ lift
    )
    base_eq = snorm(np.kron(np.eye(d), lift) @ cp.beta - cp.beta @ lift)
    onto = generated_subalgebra(cp.ambient, gens)
    ce = ConditionalExpectation(
        cp.ambient, lift, onto, cecert,
        {"dual_translation": float(dual_eq), "base_coaction": float(base_eq)},
        label="crossed lift",
        context={"crossed": cp, "restriction": p, "inclusion": inc,
                 "preserved": float(preserved),
                 "pair_equivariance": float(equi),
                 "restricted_landing": float(rest_landing)},
    )
    worst = max(max_residual(cecert), dual_eq, base_eq, preserved, equi,
                rest_landing)
    if worst > tol:
        raise ValueError("crossed lift failed its certificate (%.3e)" % worst)
    return ce


def kac_extract(cp, e, inclusion, *, tol=TOL_CROSS):
    """Recover the fibre expectation from a crossed-product one.

    Requires the tracial case.  Averaging over the dual translation sends
    the image of a coacted element back to the coaction range; pulling
    through the coaction and the inclusion returns the fibre map.  The
    certificate includes the averaging identity on lifted group-algebra
    elements: extending the operator leg and averaging the second pair
    returns the dual invariant state times the unit.
    """
    g = cp.parent.group
    _require_tracial(g)
    emap = np.asarray(e.map if hasattr(e, "map") else e, dtype=complex)
    inc = np.asarray(inclusion, dtype=complex)
    d = g.dim
    dn = cp.parent.target.dim
    d2 = d * d
    amb = cp.ambient
    acan = np.kron(g.dual_haar_state[None, :], np.eye(amb.dim)) \
        @ cp.dual_action
    cols = acan @ (emap @ cp.alpha_embedded)
    y, *_ = np.linalg.lstsq(cp.alpha_embedded, cols, rcond=None)
    landing = snorm(cp.alpha_embedded @ y - cols)
    p, *_ = np.linalg.lstsq(inc, y, rcond=None)
    p_landing = snorm(inc @ p - y)
    ext_l = g.comul_ext_left
    unit_first = g.gns.unit()
    au = amb.unit()
    chain = 0.0
    for k in range(d):
        t = cp.dual_embedded[:, k].reshape(d2, dn)
        w = (ext_l @ t).reshape(d2, d2 * dn)
        got = w @ acan.T
        want = g.dual_haar_state[k] * np.outer(unit_first, au)
        chain = max(chain, float(np.linalg.norm(got - want)))
    certs = {
        "landing": float(landing),
        "inclusion_landing": float(p_landing),
        "dual_state_identity": float(chain),
    }
    if max_residual(certs) > tol:
        raise ValueError(
            "fibre extraction failed its certificate (%.3e)"
            % max_residual(certs)
        )
    return p, certs


# -- the operator-ambient characterization ---------------------------------


def _crossed_transport(a, e_pair, *, seed=0, tol=TOL_BUILD, budget=20736,
                       label=""):
    """Carry a pair-level expectation to the full operator ambient.

    The braided crossed product is the whole operator ambient; writing its
    elements as group-algebra elements times coacted base elements, the
    pair expectation acts on the base factor and the result is conjugated
    through the straightening isomorphism.
    """
    g = a.group
    d, dn = g.dim, a.target.dim
    bi = braided_crossed_iso(a, seed=seed, budget=budget)
    cp_b, cp_a = bi.source, bi.target
    chain = bi.trivialization @ bi.presentation_to_coeffs
    pbase = np.linalg.solve(chain, e_pair @ chain)
    alpha_b = cp_b.parent.alpha
    base_eq = snorm(
        np.kron(np.eye(d), pbase) @ alpha_b - alpha_b @ pbase
    )
    db = d * dn
    lam = np.zeros((cp_b.subalg.dim, d * db), dtype=complex)
    for h in range(d):
        lcol = cp_b.dual_embedded[:, h]
        for k in range(db):
            col = cp_b.ambient.mul(lcol, cp_b.alpha_embedded[:, k])
            lam[:, h * db + k] = cp_b.subalg.project(col)
    sv = np.linalg.svd(lam, compute_uv=False)
    if sv[-1] < RANK_CUTOFF * max(1.0, sv[0]):
        raise ValueError("crossed-product decomposition is degenerate")
    ecross = lam @ np.kron(np.eye(d), pbase) @ np.linalg.inv(lam)
    emap = bi.phi @ ecross @ np.linalg.inv(bi.phi)
    cecert = verify_conditional_expectation(cp_a.ambient, emap, cp_a.subalg)
    img = orth_basis(emap)
    onto = generated_subalgebra(
        cp_a.ambient, [img[:, i] for i in range(img.shape[1])]
    )
    dual_eq = _op_leg_equivariance(g.comul_ext_dual_op, emap, d, dn)
    right_eq = _op_leg_equivariance(g.comul_ext_right, emap, d, dn)
    ce = ConditionalExpectation(
        cp_a.ambient, emap, onto, cecert,
        {"dual_opposite": float(dual_eq),
         "right_translation": float(right_eq)},
        label=label,
        context={"crossed": cp_a, "iso": bi, "base": pbase,
                 "base_equivariance": float(base_eq),
                 "injectivity": "finite-dimensional algebras are injective, "
                 "so existence of this expectation is the whole content of "
                 "the injectivity statement for the crossed product"},
    )
    worst = max(max_residual(cecert), dual_eq, right_eq, base_eq,
                onto.closure_defect)
    if worst > tol:
        raise ValueError(
            "crossed expectation failed its certificate (%.3e)" % worst
        )
    return ce


def kac_crossed_expectation(a, cert, *, seed=0, tol=TOL_BUILD, budget=20736):
    """Expectation from the operator ambient onto the crossed product.

    Tracial case; driven by the pair-level expectation of a passing
    amenability certificate.
    """
    _require_tracial(a.group)
    if not cert.passes:
        raise ValueError("amenability certificate does not pass")
    return _crossed_transport(
        a, np.asarray(cert.expectation.map, dtype=complex),
        seed=seed, tol=tol, budget=budget, label="crossed expectation",
    )


def _ambient_restriction(a, e, cp, *, tol):
    """Pull an ambient expectation back to the pair along the coaction."""
    g = a.group
    d, dn = g.dim, a.target.dim
    if cp is None:
        cp = crossed_product(a)
    emap = np.asarray(e.map if hasattr(e, "map") else e, dtype=complex)
    acan = np.kron(g.dual_haar_state[None, :], np.eye(cp.ambient.dim)) \
        @ cp.dual_action
    lift = np.kron(g.rep, np.eye(dn))
    cols = acan @ (emap @ lift)
    back, *_ = np.linalg.lstsq(lift, cols, rcond=None)
    landing = snorm(lift @ back - cols)
    cert = verify_amenable(a, back, tol=tol)
    cert.certs["landing"] = float(landing)
    cert.passes = bool(cert.passes and landing <= tol)
    return cert


def kac_amenable_from_expectation(a, e, *, tol=TOL_CROSS):
    """Amenability certificate from an operator-ambient expectation.

    Tracial case.  Average over the dual translation, restrict to coacted
    pair elements, and verify.  Like `verify_amenable` this records
    failures rather than raising.
    """
    _require_tracial(a.group)
    cp = e.context.get("crossed") if hasattr(e, "context") else None
    cert = _ambient_restriction(a, e, cp, tol=tol)
    cert.provenance = "crossed restriction"
    return cert


def general_equivariant_expectation(a, m=None, *, seed=0, tol=TOL_BUILD,
                                    budget=20736):
    """Operator-ambient expectation built from an invariant mean alone.

    No traciality is used: the pair-level expectation comes from the mean
    compression and is carried through the same straightening transport.
    """
    if m is None:
        m, _ = find_invariant_mean(a.group)
    cert = amenable_from_mean(a, m, tol=tol, budget=budget)
    ce = _crossed_transport(
        a, np.asarray(cert.expectation.map, dtype=complex),
        seed=seed, tol=tol, budget=budget,
        label="general crossed expectation",
    )
    ce.context["mean_certificate"] = cert
    return ce


def general_amenable_from_expectation(a, e, *, tol=TOL_CROSS):
    """Amenability certificate from a dual-equivariant ambient expectation.

    The expectation must commute with the opposite dual translation; that
    residual is a precondition, not part of the output certificate.
    """
    g = a.group
    d, dn = g.dim, a.target.dim
    if hasattr(e, "map"):
        emap = np.asarray(e.map, dtype=complex)
        cp = e.context.get("crossed")
        dual_res = e.equivariance_certificates.get("dual_opposite")
    else:
        emap = np.asarray(e, dtype=complex)
        cp = None
        dual_res = None
    if dual_res is None:
        dual_res = _op_leg_equivariance(g.comul_ext_dual_op, emap, d, dn)
    if dual_res > tol:
        raise ValueError(
            "expectation is not equivariant for the opposite dual "
            "translation (residual %.3e)" % dual_res
        )
    cert = _ambient_restriction(a, emap, cp, tol=tol)
    cert.provenance = "crossed restriction, no traciality"
    return cert


# -- automatic equivariance ------------------------------------------------


def extended_comul_commutation(g):
    """Commutation of the two operator-leg extensions on a spanning set.

    Extending with the right translation after the opposite dual
    translation matches the other order; returns the worst residual over
    the operator basis.
    """
    d2 = g.dim * g.dim
    ext_r = g.comul_ext_right
    dop = g.comul_ext_dual_op
    eye = np.eye(d2, dtype=complex)
    worst = 0.0
    for j in range(d2):
        x = eye[:, j]
        tx = (dop @ x).reshape(d2, d2)
        lhs = np.tensordot(ext_r, tx, axes=(1, 1)).transpose(1, 0)
        ty = (ext_r @ x).reshape(d2, d2)
        rhs = np.tensordot(dop, ty, axes=(1, 0))
        worst = max(worst, float(np.linalg.norm(lhs.reshape(-1)
                                                - rhs.reshape(-1))))
    return worst


def auto_equivariance(g, phi, *, tol=TOL_CROSS):
    """Right-translation equivariance forces the dual-opposite one.

    phi acts on operator (x) target coordinates (target possibly trivial).
    Raises unless phi certifies as right-translation equivariant; the
    returned dual-opposite residual is then a theorem check, not an input
    hypothesis.
    """
    phi = np.asarray(phi, dtype=complex)
    d = g.dim
    d2 = d * d
    if phi.shape[0] != phi.shape[1] or phi.shape[0] % d2:
        raise ValueError("map does not cover the operator leg")
    dn = phi.shape[0] // d2
    right = _op_leg_equivariance(g.comul_ext_right, phi, d, dn)
    if right > tol:
        raise ValueError(
            "map is not right-translation equivariant (residual %.3e); "
            "nothing to conclude" % right
        )
    dual = _op_leg_equivariance(g.comul_ext_dual_op, phi, d, dn)
    return {"right_translation": float(right), "dual_opposite": float(dual)}


# -- linear-feasibility exploration ----------------------------------------


def feasible_expectation(alg, onto, commuting=(), pins=(), tol=TOL_BUILD):
    """Minimum-norm solve of the affine expectation constraints.

    Stacks the linear conditions on a map of `alg` (lands in the range,
    fixes it, unital, commutes with the range's left and right
    multiplications, plus optional commutation constraints
    ``kron(1, e) @ z = z @ e`` and value pins ``e @ x = y``) and least
    squares the system.  Complete positivity and the star identity are
    NOT imposed; they are measured on the solution afterwards, so a
    feasible map can still fail its certificate.  An exploration tool for
    small algebras, not a construction route.
    """
    dim = alg.dim
    q = onto.basis
    perp = np.eye(dim, dtype=complex) - q @ q.conj().T
    gens = onto.generators if onto.generators else [
        q[:, j] for j in range(q.shape[1])
    ]
    mods = [(alg.lmul_matrix(v), alg.rmul_matrix(v)) for v in gens]
    unit = alg.unit()
    zs = [np.asarray(z, dtype=complex) for z in commuting]
    pin = [(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
           for x, y in pins]

    def residvec(e):
        parts = [(perp @ e).reshape(-1), (e @ q - q).reshape(-1),
                 e @ unit - unit]
        for lm, rm in mods:
            parts.append((e @ lm - lm @ e).reshape(-1))
            parts.append((e @ rm - rm @ e).reshape(-1))
        for z in zs:
            k = z.shape[0] // dim
            parts.append((np.kron(np.eye(k), e) @ z - z @ e).reshape(-1))
        for x, y in pin:
            parts.append(e @ x - y)
        return np.concatenate(parts)

    zero = residvec(np.zeros((dim, dim), dtype=complex))
    mat = np.empty((zero.size, dim * dim), dtype=complex)
    probe = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim * dim):
        probe.flat[idx] = 1.0
        mat[:, idx] = residvec(probe) - zero
        probe.flat[idx] = 0.0
    x, *_ = np.linalg.lstsq(mat, -zero, rcond=None)
    e = x.reshape(dim, dim)
    feas = float(np.linalg.norm(mat @ x + zero))
    cert = verify_conditional_expectation(alg, e, onto)
    cert["feasibility"] = feas
    eye = np.eye(dim, dtype=complex)
    star = max(
        float(np.linalg.norm(e @ alg.star(eye[:, j]) - alg.star(e @ eye[:, j])))
        for j in range(dim)
    )
    return ConditionalExpectation(
        alg, e, onto, cert, {},
        label="feasibility explorer",
        context={"info_star_defect": star,
                 "caveat": "positivity and the star identity were measured "
                 "after solving, not imposed"},
    )
