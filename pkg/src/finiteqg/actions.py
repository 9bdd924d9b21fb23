"""Left coactions of a finite quantum group on multimatrix algebras.

An action places the group leg on the left: alpha maps the target N into
l∞(G) (x) N and satisfies the coaction law (Delta (x) id) alpha =
(id (x) alpha) alpha.  Everything downstream of a certified action is again
certified: invariant states, fixed-point subalgebras, unitary implementers,
and the crossed product with its dual action and its characterization as the
fixed points of a conjugation action on B(l2(G)) (x) N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numeric import (
    RANK_CUTOFF,
    TOL_BUILD,
    null_basis,
    orth_basis,
    rng,
    snorm,
    subspace_distance,
)
from .multimatrix import (
    MultiMatrixAlgebra,
    SubAlgebra,
    TensorAlgebra,
    contract_leg_matrix,
    embed_element,
    generated_subalgebra,
    hom_defect_pairs,
    permute_legs_matrix,
    star_hom_defect,
    tensor_algebra,
)
from .quantumgroup import BudgetExceeded, FiniteQuantumGroup


@dataclass
class Action:
    group: FiniteQuantumGroup
    target: object
    alpha: np.ndarray            # (dim G * dim N, dim N)
    pair: TensorAlgebra          # group algebra (x) target
    certs: dict
    label: str = ""
    implementer: np.ndarray | None = None

    def max_residual(self):
        worst = 0.0
        for key, val in self.certs.items():
            if not key.startswith("info_"):
                worst = max(worst, float(val))
        return worst

    def fixed_points(self):
        return fixed_point_algebra(self.group.algebra, self.target, self.alpha)


def _coaction_certs(acting, target, alpha, comul, counit):
    pair = tensor_algebra([acting, target])
    da, dn = acting.dim, target.dim
    certs = hom_defect_pairs(target, pair, alpha)
    lhs = np.kron(comul, np.eye(dn)) @ alpha
    rhs = np.kron(np.eye(da), alpha) @ alpha
    certs["coaction"] = snorm(lhs - rhs)
    certs["counit_slice"] = snorm(
        contract_leg_matrix(pair, 0, counit) @ alpha - np.eye(dn)
    )
    sv = np.linalg.svd(alpha, compute_uv=False)
    certs["info_min_sv"] = float(sv[-1])
    certs["injective"] = 0.0 if sv[-1] > RANK_CUTOFF * max(1.0, sv[0]) else 1.0
    return pair, certs


def load_action(group, target, alpha, *, label="", tol=TOL_BUILD):
    """Certify alpha as a left action of `group` on `target`.

    Raises on any axiom failure, naming the residual that broke.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.shape != (group.dim * target.dim, target.dim):
        raise ValueError("alpha has the wrong shape for this group and target")
    pair, certs = _coaction_certs(
        group.algebra, target, alpha, group.comul, group.counit
    )
    for key, val in certs.items():
        if not key.startswith("info_") and val > tol:
            raise ValueError(
                "action axiom %r failed: residual %.3e" % (key, float(val))
            )
    return Action(group, target, alpha, pair, certs, label=label)


def trivial_action(group, target, *, label="trivial"):
    cols = [
        np.kron(group.algebra.unit(), np.eye(target.dim, dtype=complex)[:, k])
        for k in range(target.dim)
    ]
    return load_action(group, target, np.column_stack(cols), label=label)


def self_action(group, *, label="translation"):
    """The group acting on itself; the coaction law is coassociativity."""
    return load_action(group, group.algebra, group.comul, label=label)


def dual_translation_action(group, *, label="dual translation", tol=TOL_BUILD):
    """The canonical action on the dual: restrict the extended left
    comultiplication T -> W*(1 (x) T)W to the dual copy inside B(l2(G)).
    """
    if group.dual is None:
        raise ValueError("group was built without its dual")
    d = group.dim
    rep_pinv = np.linalg.pinv(group.rep, rcond=RANK_CUTOFF)
    alpha = (
        np.kron(rep_pinv, group.dual_unrep)
        @ group.comul_ext_left
        @ group.dual_rep
    )
    recon = np.kron(group.rep, group.dual_rep) @ alpha
    act = load_action(group, group.dual.algebra, alpha, label=label, tol=tol)
    act.certs["leg_compression"] = snorm(
        recon - group.comul_ext_left @ group.dual_rep
    )
    return act


# -- invariant states ------------------------------------------------------


def _invariance_operator(acting, target, alpha):
    """Stack of the linear conditions on w for (f (x) w) alpha = f(1) w."""
    da, dn = acting.dim, target.dim
    unit = acting.unit()
    tensor = np.asarray(alpha, dtype=complex).reshape(da, dn, dn)
    rows = [tensor[i].T - unit[i] * np.eye(dn) for i in range(da)]
    return np.vstack(rows)


def invariance_defect(action, w):
    op = _invariance_operator(action.group.algebra, action.target, action.alpha)
    return float(np.linalg.norm(op @ np.asarray(w, dtype=complex)))


def _adjoint_functional(alg, w):
    return alg.star_matrix().T @ np.conj(np.asarray(w, dtype=complex))


def _herm_basis(alg, cols, cutoff=RANK_CUTOFF):
    """Real-orthonormal hermitian spanning set of a *-closed functional space."""
    out = []
    cand = []
    for j in range(cols.shape[1]):
        v = cols[:, j]
        cand.append(v + _adjoint_functional(alg, v))
        cand.append(1j * v + _adjoint_functional(alg, 1j * v))
    for v in cand:
        for u in out:
            v = v - u * np.real(np.vdot(u, v))
        nv = float(np.linalg.norm(v))
        if nv > cutoff:
            out.append(v / nv)
    return out


def invariant_states(action, *, eig_floor=-1e-10, cutoff=RANK_CUTOFF):
    """States invariant under the action, spanning the full invariant set.

    The first entry is the average (haar (x) trace-state) alpha, which always
    exists; the rest walk each hermitian direction of the invariant functional
    space to the boundary of the state cone.
    """
    g, target, alpha = action.group, action.target, action.alpha
    op = _invariance_operator(g.algebra, target, alpha)
    sol = null_basis(op, cutoff)
    tr = target.trace_functional()
    sigma = tr / complex(tr @ target.unit())
    avg = np.kron(g.haar_state, sigma) @ alpha
    states = [avg]
    if sol.shape[1] == 0:
        return states
    normal = (target.unit() @ sol)[None, :]
    dirs = sol @ null_basis(normal, cutoff)
    if dirs.shape[1] == 0:
        return states

    def min_block_eig(w):
        dens = target.functional_to_densities(w)
        return min(float(np.linalg.eigvalsh((d + d.conj().T) / 2.0)[0])
                   for d in dens)

    for v in _herm_basis(target, dirs, cutoff):
        for direction in (v, -v):
            lo, hi = 0.0, 1.0
            while min_block_eig(avg + hi * direction) >= eig_floor and hi < 2 ** 30:
                lo, hi = hi, hi * 2.0
            for _ in range(60):
                mid = (lo + hi) / 2.0
                if min_block_eig(avg + mid * direction) >= eig_floor:
                    lo = mid
                else:
                    hi = mid
            if lo > cutoff:
                states.append(avg + lo * direction)
    return states


# -- fixed points ----------------------------------------------------------


def _unit_embed(acting, target):
    """Matrix of x -> 1 (x) x on coordinate columns."""
    return np.kron(
        np.asarray(acting.unit(), dtype=complex)[:, None],
        np.eye(target.dim, dtype=complex),
    )


def fixed_point_algebra(acting, target, beta, *, cutoff=RANK_CUTOFF):
    """The x with beta(x) = 1 (x) x, as a certified *-subalgebra of target."""
    beta = np.asarray(beta, dtype=complex)
    basis = null_basis(beta - _unit_embed(acting, target), cutoff)
    q = orth_basis(basis, cutoff) if basis.shape[1] else basis
    defect = 0.0
    proj = lambda v: v - q @ (q.conj().T @ v)
    for i in range(q.shape[1]):
        defect = max(defect, snorm(proj(target.star(q[:, i]))))
        for j in range(q.shape[1]):
            defect = max(defect, snorm(proj(target.mul(q[:, i], q[:, j]))))
    return SubAlgebra(target, q, defect)


# -- unitary implementation ------------------------------------------------


def _inv_sqrt_positive(alg, x, cutoff=RANK_CUTOFF):
    blocks = []
    for blk in alg.rep_blocks(x):
        w, v = np.linalg.eigh((blk + blk.conj().T) / 2.0)
        if w[0] <= cutoff * max(1.0, w[-1]):
            raise np.linalg.LinAlgError("element is not invertible positive")
        blocks.append((v * (w ** -0.5)) @ v.conj().T)
    return alg.from_rep_blocks(blocks)


def implementing_unitary(action, theta=None, *, seed=0, tol=TOL_BUILD):
    """A unitary U in l∞(G) (x) B(H_theta) with alpha(x) = U (1 (x) x) U*.

    H_theta is the GNS space of a faithful state theta on the target (default:
    normalized trace).  U is found in the intertwiner space of the two
    representations and unitarized inside the algebra; when the action already
    equals its untwisted form the identity is returned.
    """
    g, target = action.group, action.target
    dn = target.dim
    if theta is None:
        tr = target.trace_functional()
        theta = tr / complex(tr @ target.unit())
    theta = np.asarray(theta, dtype=complex)
    eye = np.eye(dn, dtype=complex)
    gram = np.empty((dn, dn), dtype=complex)
    for j in range(dn):
        for k in range(dn):
            gram[j, k] = theta @ target.mul(target.star(eye[:, j]), eye[:, k])
    evals, evecs = np.linalg.eigh((gram + gram.conj().T) / 2.0)
    if evals[0] <= RANK_CUTOFF * max(1.0, evals[-1]):
        raise ValueError("theta is not faithful: GNS Gram matrix is singular")
    sq = (evecs * np.sqrt(evals)) @ evecs.conj().T
    isq = (evecs * (evals ** -0.5)) @ evecs.conj().T
    bh = MultiMatrixAlgebra([dn])
    iota = np.column_stack(
        [(sq @ target.lmul_matrix(eye[:, j]) @ isq).reshape(-1)
         for j in range(dn)]
    )
    big = tensor_algebra([g.algebra, bh])
    r1 = np.kron(np.eye(g.dim), iota) @ action.alpha
    r2 = np.column_stack(
        [embed_element(iota[:, j], bh, big, [1]) for j in range(dn)]
    )
    cert = {}
    if snorm(r1 - r2) <= tol:
        u = big.unit()
        cert["info_intertwiner_dim"] = float(big.dim)
    else:
        rows = []
        for j in range(dn):
            rows.append(big.lmul_matrix(r1[:, j]) - big.rmul_matrix(r2[:, j]))
        space = null_basis(np.vstack(rows), RANK_CUTOFF)
        cert["info_intertwiner_dim"] = float(space.shape[1])
        if space.shape[1] == 0:
            raise ValueError("no intertwiner: action is not implementable here")
        r = rng(seed)
        u = None
        for _ in range(8):
            t = space @ (r.standard_normal(space.shape[1])
                         + 1j * r.standard_normal(space.shape[1]))
            try:
                s = _inv_sqrt_positive(big, big.mul(big.star(t), t))
            except np.linalg.LinAlgError:
                continue
            u = big.mul(t, s)
            break
        if u is None:
            raise ValueError("intertwiner space has no invertible element")
    cert["unitary"] = max(
        big.norm(big.mul(u, big.star(u)) - big.unit()),
        big.norm(big.mul(big.star(u), u) - big.unit()),
    )
    impl = 0.0
    for j in range(dn):
        conj = big.mul(u, big.mul(r2[:, j], big.star(u)))
        impl = max(impl, float(np.linalg.norm(conj - r1[:, j])))
    cert["implements"] = impl
    for key in ("unitary", "implements"):
        if cert[key] > tol:
            raise ValueError(
                "implementer check %r failed: residual %.3e" % (key, cert[key])
            )
    action.implementer = u
    for k, v in cert.items():
        if k.startswith("info_"):
            action.certs["info_implementer_" + k[5:]] = v
        else:
            action.certs["implementer_" + k] = v
    return u


# -- crossed products ------------------------------------------------------


@dataclass
class CrossedProduct:
    parent: Action
    ambient: TensorAlgebra       # B(l2(G)) (x) N
    subalg: SubAlgebra           # the crossed product inside the ambient
    alpha_embedded: np.ndarray   # N -> ambient, (id (x) iota-free) alpha
    dual_embedded: np.ndarray    # dual mma coords -> ambient
    dual_action: np.ndarray      # ambient -> dual (x) ambient, restricts to subalg
    beta: np.ndarray             # ambient -> group (x) ambient
    certs: dict
    fixed_of_beta: SubAlgebra = field(default=None, repr=False)

    def max_residual(self):
        worst = 0.0
        for key, val in self.certs.items():
            if not key.startswith("info_"):
                worst = max(worst, float(val))
        return worst


def _conj_first_legs(mat, u, d, rest):
    """Conjugate the first two B(l2) legs of coordinate columns by u."""
    m = mat.shape[1]
    arr = mat.reshape(d, d, d, d, rest, m)
    op = arr.transpose(0, 2, 1, 3, 4, 5).reshape(d * d, d * d, rest * m)
    out = np.tensordot(u.conj().T, op, axes=(1, 0))
    out = np.moveaxis(np.tensordot(out, u, axes=(1, 0)), 2, 1)
    out = out.reshape(d, d, d, d, rest, m).transpose(0, 2, 1, 3, 4, 5)
    return out.reshape(d ** 4 * rest, m)


def crossed_product(action, *, tol=TOL_BUILD, budget=20736):
    """The crossed product of a certified action, with its certificates.

    Generated inside B(l2(G)) (x) N by the embedded action range and the dual
    copy; carries the dual action (conjugation by the opposite-dual unitary on
    the operator leg) and the conjugation action whose fixed points recover
    the crossed product.
    """
    act = action
    g, target = act.group, act.target
    if g.dual is None:
        raise ValueError("group was built without its dual")
    d, dn = g.dim, target.dim
    if d ** 4 * dn > budget:
        raise BudgetExceeded(
            "crossed-product ambient %d exceeds budget %d" % (d ** 4 * dn, budget)
        )
    amb = tensor_algebra([g.gns, target])
    alpha_amb = np.kron(g.rep, np.eye(dn)) @ act.alpha
    eyed = np.eye(d, dtype=complex)
    dual_emb = np.column_stack(
        [embed_element(g.dual_rep @ eyed[:, k], g.gns, amb, [0])
         for k in range(d)]
    )
    gens = [alpha_amb[:, k] for k in range(dn)]
    gens += [dual_emb[:, k] for k in range(d)]
    sub = generated_subalgebra(amb, gens)
    certs = {"generation_closure": sub.closure_defect,
             "info_dim": float(sub.dim)}

    # dual action: opposite-dual conjugation on the operator leg, compressed
    # to dual coordinates on the new leg
    dop = g.comul_ext_dual_op
    big = np.kron(dop, np.eye(dn))
    zfull = np.kron(g.dual_unrep, np.eye(d * d * dn)) @ big
    recon = np.kron(g.dual_rep, np.eye(d * d * dn)) @ zfull
    certs["dual_leg_compression"] = snorm(
        (recon - big) @ sub.basis
    )
    comul_op = permute_legs_matrix(g.dual.pair, [1, 0]) @ g.dual.comul
    lhs = np.kron(comul_op, np.eye(d * d * dn)) @ zfull @ sub.basis
    rhs = np.kron(np.eye(d), zfull) @ zfull @ sub.basis
    certs["dual_coaction"] = snorm(lhs - rhs)
    land = 0.0
    for i in range(sub.dim):
        arr = (zfull @ sub.basis[:, i]).reshape(d, d * d * dn)
        for row in arr:
            land = max(land, float(sub.contains(row) / max(1.0, snorm(arr))))
    certs["dual_lands_in_product"] = land
    unit_n = target.unit()
    fix_alpha = 0.0
    for k in range(dn):
        expect = np.kron(g.dual.algebra.unit(), alpha_amb[:, k])
        fix_alpha = max(fix_alpha, float(np.linalg.norm(
            zfull @ alpha_amb[:, k] - expect
        )))
    certs["dual_trivial_on_range"] = fix_alpha
    emb2 = np.stack(
        [np.kron(g.dual_rep @ eyed[:, q], unit_n) for q in range(d)]
    )
    cop = 0.0
    for k in range(d):
        arr = (comul_op @ eyed[:, k]).reshape(d, d)
        expect = (arr @ emb2).reshape(-1)
        cop = max(cop, float(np.linalg.norm(zfull @ dual_emb[:, k] - expect)))
    certs["dual_translates_dual_copy"] = cop
    fixed_hat = null_basis((zfull - _unit_embed(g.dual.algebra, amb)) @ sub.basis)
    fixed_hat = sub.basis @ fixed_hat if fixed_hat.shape[1] else fixed_hat
    certs["dual_fixed_equals_range"] = subspace_distance(
        orth_basis(fixed_hat) if fixed_hat.shape[1] else fixed_hat,
        orth_basis(alpha_amb),
    )

    # the characterization action: swap in the action leg, conjugate by the
    # swapped right-regular unitary, read the result off the group leg
    sw = np.eye(d * d).reshape(d, d, d, d).transpose(1, 0, 2, 3).reshape(d * d, d * d)
    svs = sw @ g.right_mult_unitary @ sw
    amb3 = tensor_algebra([g.gns, g.gns, target])
    step = np.kron(np.eye(d * d), np.kron(g.rep, np.eye(dn)) @ act.alpha)
    step = permute_legs_matrix(amb3, [1, 0, 2]) @ step
    step = _conj_first_legs(step, svs, d, dn)
    rep_pinv = np.linalg.pinv(g.rep, rcond=RANK_CUTOFF)
    beta = np.kron(rep_pinv, np.eye(d * d * dn)) @ step
    certs["beta_leg_compression"] = snorm(
        np.kron(g.rep, np.eye(d * d * dn)) @ beta - step
    )
    bigpair = tensor_algebra([g.algebra, amb])
    bgens = [embed_element(g.gns.basis_unit(0, a, b), g.gns, amb, [0])
             for a in range(d) for b in range(d)]
    bgens += [np.kron(g.gns.unit(), np.eye(dn, dtype=complex)[:, k])
              for k in range(dn)]
    hom = star_hom_defect(amb, bigpair, beta, gens=bgens)
    certs["beta_hom"] = max(hom.values())
    lhs = np.kron(g.comul, np.eye(d * d * dn)) @ beta
    rhs = np.kron(np.eye(g.dim), beta) @ beta
    certs["beta_coaction"] = snorm(lhs - rhs)
    fixed = fixed_point_algebra(g.algebra, amb, beta)
    certs["beta_fixed_closure"] = fixed.closure_defect
    certs["beta_fixed_equals_product"] = subspace_distance(
        fixed.basis, sub.basis
    )
    if certs["beta_fixed_equals_product"] > tol:
        raise ValueError(
            "crossed product does not match the conjugation fixed points "
            "(distance %.3e)" % certs["beta_fixed_equals_product"]
        )
    return CrossedProduct(
        act, amb, sub, alpha_amb, dual_emb, zfull, beta, certs,
        fixed_of_beta=fixed,
    )
