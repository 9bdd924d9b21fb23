"""Finite quantum groups as certified matrix data.

A quantum group here is a multimatrix algebra together with a coassociative
unital *-homomorphism into its tensor square and a counit character.  From
that input everything else is derived numerically: invariant functionals, the
GNS representation, the regular unitaries, the dual quantum group living
inside the operators on the GNS space, extended comultiplications on all
operators, and the expectation onto the base algebra.  Every construction
carries residuals collected in ``certs``; keys prefixed ``info_`` are
measurements (ranks, margins), not residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._numeric import RANK_CUTOFF, herm, null_basis, orth_basis, snorm
from .multimatrix import (
    MultiMatrixAlgebra,
    SubAlgebra,
    TensorAlgebra,
    contract_leg_matrix,
    embed_element,
    generated_subalgebra,
    hom_defect_pairs,
    max_residual,
    permute_legs_matrix,
    present_subalgebra,
    tensor_algebra,
    verify_conditional_expectation,
)


class BudgetExceeded(RuntimeError):
    """The requested construction would exceed the dense-ambient budget."""


@dataclass
class FiniteQuantumGroup:
    name: str
    algebra: MultiMatrixAlgebra
    comul: np.ndarray            # (dim^2, dim)
    counit: np.ndarray           # (dim,)
    pair: TensorAlgebra          # algebra (x) algebra
    haar_left: np.ndarray        # normalized at the counit projection
    haar_right: np.ndarray
    haar_state: np.ndarray       # haar_left / haar_left(1)
    mean: np.ndarray             # two-sided invariant state, solved separately
    counit_proj: np.ndarray      # support projection of the counit
    gram: np.ndarray             # (dim, dim) left-Haar Gram matrix
    gns_vectors: np.ndarray      # sqrt(gram): algebra coords -> GNS vectors
    gns: MultiMatrixAlgebra      # operators on the GNS space
    rep: np.ndarray              # (dim^2, dim): algebra -> GNS operators
    op_pair: TensorAlgebra       # gns (x) gns
    mult_unitary: np.ndarray     # multiplication unitary on gns (x) gns
    right_mult_unitary: np.ndarray
    dual_mult_unitary: np.ndarray  # flip of the adjoint; fundamental for the dual
    certs: dict
    dual: "FiniteQuantumGroup | None" = None
    dual_span: SubAlgebra | None = None
    dual_rep: np.ndarray | None = None       # dual coords -> GNS-operator coords
    dual_unrep: np.ndarray | None = None
    dual_haar_state: np.ndarray | None = None
    dual_gns_unitary: np.ndarray | None = None
    opposite_dual_unitary: np.ndarray | None = None
    comul_ext_left: np.ndarray | None = None   # operators -> algebra (x) operators
    comul_ext_right: np.ndarray | None = None
    comul_ext_dual_op: np.ndarray | None = None
    base_expectation: np.ndarray | None = None
    rep_span: SubAlgebra | None = None

    @property
    def dim(self):
        return self.algebra.dim

    def max_residual(self):
        worst = max_residual(self.certs)
        if self.dual is not None:
            worst = max(worst, max_residual(self.dual.certs))
        return worst

    def pair_operator(self, v):
        """Matrix on gns (x) gns of an element of algebra (x) algebra."""
        return _pair_operator(self.rep, v, self.dim)

    def op_coords(self, mat):
        """GNS-operator coordinates of a matrix on the GNS space."""
        return np.asarray(mat, dtype=complex).reshape(-1)

    def op_pair_coords(self, op):
        return self.op_pair.from_rep_blocks([op])

    def op_pair_operator(self, v):
        return self.op_pair.rep_blocks(v)[0]

    def __repr__(self):
        return f"FiniteQuantumGroup({self.name!r}, blocks={list(self.algebra.blocks)})"


# -- small helpers ---------------------------------------------------------


def _swap(d):
    return np.eye(d * d).reshape(d, d, d, d).transpose(1, 0, 2, 3).reshape(d * d, d * d)


def _unitary_defect(u):
    n = u.shape[0]
    return max(
        snorm(u @ u.conj().T - np.eye(n)), snorm(u.conj().T @ u - np.eye(n))
    )


def _pair_operator(rep, v, d):
    dim = rep.shape[1]
    arr = np.asarray(v, dtype=complex).reshape(dim, dim)
    big = rep @ arr @ rep.T
    return big.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def _operator_pair_coords(op, d):
    return np.asarray(op, dtype=complex).reshape(d, d, d, d).transpose(
        0, 2, 1, 3
    ).reshape(-1)


def _sqrt_pair(gram):
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] <= 0:
        raise ValueError("Gram matrix is not positive definite")
    s = (evecs * np.sqrt(evals)) @ evecs.conj().T
    si = (evecs / np.sqrt(evals)) @ evecs.conj().T
    return s, si, float(evals[0])


def _gram_from_functional(alg, w):
    """Gram matrix of <a, b> = w(a* b) in coordinates, from the block densities."""
    dens = alg.functional_to_densities(w)
    blocks = [np.kron(np.eye(n), d.T) for n, d in zip(alg.blocks, dens)]
    return scipy.linalg.block_diag(*blocks)


def _commutant_basis(alg, elements):
    """Orthonormal basis of the commutant of a set of elements, as coords."""
    rows = [alg.lmul_matrix(x) - alg.rmul_matrix(x) for x in elements]
    return null_basis(np.vstack(rows)) if rows else np.eye(alg.dim, dtype=complex)


# -- axiom and Haar layers -------------------------------------------------


def _coassoc_defect(alg, delta):
    d = alg.dim
    eye = np.eye(d, dtype=complex)
    worst = 0.0
    for j in range(d):
        v = (delta @ eye[:, j]).reshape(d, d)
        lhs = np.tensordot(delta, v, axes=(1, 0)).reshape(-1)
        rhs = np.tensordot(delta, v, axes=(1, 1)).T.reshape(-1)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def _axiom_certs(alg, pair, delta, counit):
    d = alg.dim
    eye = np.eye(d, dtype=complex)
    res = dict(hom_defect_pairs(alg, pair, delta))
    res["coassociative"] = _coassoc_defect(alg, delta)
    left = contract_leg_matrix(pair, 0, counit) @ delta - np.eye(d)
    right = contract_leg_matrix(pair, 1, counit) @ delta - np.eye(d)
    res["counit_left"] = snorm(left)
    res["counit_right"] = snorm(right)
    char = 0.0
    for i in range(d):
        for j in range(d):
            val = counit @ alg.mul(eye[:, i], eye[:, j])
            char = max(char, abs(val - (counit @ eye[:, i]) * (counit @ eye[:, j])))
    res["counit_multiplicative"] = char
    res["counit_hermitian"] = float(
        np.linalg.norm(alg.star_matrix().T @ counit - np.conj(counit))
    )
    return res


def _counit_projection(alg, counit):
    dens = alg.functional_to_densities(counit)
    traces = [abs(np.trace(m)) for m in dens]
    i = int(np.argmax(traces))
    if alg.blocks[i] != 1:
        raise ValueError("counit is not supported on a one-dimensional block")
    expected = [
        (np.eye(1) if j == i else np.zeros((n, n))) for j, n in enumerate(alg.blocks)
    ]
    defect = float(
        np.linalg.norm(counit - alg.functional_from_densities(expected))
    )
    return alg.basis_unit(i, 0, 0), defect


def haar_solve(alg, delta, counit):
    """Left and right invariant functionals, normalized at the counit projection.

    Returns (phi, psi, counit_projection, cert).  Uniqueness of each invariant
    functional is part of the certificate; failure raises.
    """
    d = alg.dim
    eye = np.eye(d, dtype=complex)
    unit = alg.unit()
    rows_l, rows_r = [], []
    for j in range(d):
        dj = (delta @ eye[:, j]).reshape(d, d)
        rows_l.append(dj - np.outer(unit, eye[:, j]))
        rows_r.append(dj.T - np.outer(unit, eye[:, j]))
    lmat, rmat = np.vstack(rows_l), np.vstack(rows_r)
    nl, nr = null_basis(lmat), null_basis(rmat)
    cert = {
        "info_left_invariant_dim": float(nl.shape[1]),
        "info_right_invariant_dim": float(nr.shape[1]),
    }
    if nl.shape[1] != 1 or nr.shape[1] != 1:
        raise ValueError("invariant functional space is not one-dimensional")
    p_eps, char_defect = _counit_projection(alg, counit)
    phi = nl[:, 0]
    psi = nr[:, 0]
    phi = phi / (phi @ p_eps)
    psi = psi / (psi @ p_eps)
    cert["counit_support"] = char_defect
    cert["left_invariance"] = snorm(lmat @ phi)
    cert["right_invariance"] = snorm(rmat @ psi)
    cert["left_equals_right"] = float(np.linalg.norm(phi - psi))
    dens = alg.functional_to_densities(phi)
    mins = min(float(np.linalg.eigvalsh(herm(dm))[0]) for dm in dens)
    cert["positivity"] = max(0.0, -mins)
    cert["hermiticity"] = max(snorm(dm - dm.conj().T) for dm in dens)
    cert["info_faithful_margin"] = mins
    trac = 0.0
    for i in range(d):
        for j in range(i):
            trac = max(
                trac,
                abs(phi @ alg.mul(eye[:, i], eye[:, j])
                    - phi @ alg.mul(eye[:, j], eye[:, i])),
            )
    cert["tracial"] = trac
    return phi, psi, p_eps, cert


def _solve_mean(alg, delta):
    """The unique two-sided invariant state."""
    d = alg.dim
    eye = np.eye(d, dtype=complex)
    unit = alg.unit()
    rows = []
    for j in range(d):
        dj = (delta @ eye[:, j]).reshape(d, d)
        rows.append(dj - np.outer(unit, eye[:, j]))
        rows.append(dj.T - np.outer(unit, eye[:, j]))
    stacked = np.vstack(rows)
    nn = null_basis(stacked)
    cert = {"info_invariant_dim": float(nn.shape[1])}
    if nn.shape[1] != 1:
        raise ValueError("two-sided invariant functional space is not one-dimensional")
    m = nn[:, 0]
    m = m / (m @ unit)
    cert["invariance"] = snorm(stacked @ m)
    cert.update({"state_" + k: v for k, v in alg.state_defects(m).items()})
    return m, cert


# -- regular unitaries -----------------------------------------------------


def left_regular_unitary(alg, delta, phi):
    """Multiplication unitary on the GNS space of a left-invariant functional.

    Its adjoint sends the GNS vector of a (x) b to the GNS vector of
    delta(b)(a (x) 1); left invariance of phi makes this isometric.
    """
    d = alg.dim
    eye = np.eye(d, dtype=complex)
    pair = tensor_algebra([alg, alg])
    sq, isq, _ = _sqrt_pair(_gram_from_functional(alg, phi))
    s = np.empty((d * d, d * d), dtype=complex)
    for p in range(d):
        left = embed_element(eye[:, p], alg, pair, [0])
        for q in range(d):
            s[:, p * d + q] = pair.mul(delta @ eye[:, q], left)
    wstar = np.kron(sq, sq) @ s @ np.kron(isq, isq)
    return wstar.conj().T, sq, isq


def right_regular_unitary(alg, delta, phi):
    """Unitary sending the GNS vector of a (x) b to that of delta(a)(1 (x) b)."""
    d = alg.dim
    eye = np.eye(d, dtype=complex)
    pair = tensor_algebra([alg, alg])
    sq, isq, _ = _sqrt_pair(_gram_from_functional(alg, phi))
    s = np.empty((d * d, d * d), dtype=complex)
    for q in range(d):
        rightv = embed_element(eye[:, q], alg, pair, [1])
        for p in range(d):
            s[:, p * d + q] = pair.mul(delta @ eye[:, p], rightv)
    return np.kron(sq, sq) @ s @ np.kron(isq, isq)


def _pentagon_defect(w, d):
    w12 = np.kron(w, np.eye(d))
    w23 = np.kron(np.eye(d), w)
    p23 = np.kron(np.eye(d), _swap(d))
    w13 = p23 @ w12 @ p23
    return snorm(w12 @ w13 @ w23 - w23 @ w12)


# -- the pipeline ----------------------------------------------------------


def build_quantum_group(algebra, comul, counit, *, name="", seed=0,
                        budget=20736, with_dual=True):
    """Derive and certify the full structure from (algebra, comul, counit)."""
    alg = algebra
    d = alg.dim
    if d ** 4 > budget:
        raise BudgetExceeded(
            f"operator pair space has dimension {d ** 4} > budget {budget}"
        )
    delta = np.asarray(comul, dtype=complex)
    eps = np.asarray(counit, dtype=complex)
    if delta.shape != (d * d, d) or eps.shape != (d,):
        raise ValueError("comul/counit shapes do not match the algebra")
    pair = tensor_algebra([alg, alg])
    certs = {"axioms": _axiom_certs(alg, pair, delta, eps)}

    phi, psi, p_eps, haar_cert = haar_solve(alg, delta, eps)
    haar_state = phi / (phi @ alg.unit())
    haar_cert.update(
        {"state_" + k: v for k, v in alg.state_defects(haar_state).items()}
    )
    certs["haar"] = haar_cert
    mean, mean_cert = _solve_mean(alg, delta)
    mean_cert["matches_haar_state"] = float(np.linalg.norm(mean - haar_state))
    certs["mean"] = mean_cert

    gram = _gram_from_functional(alg, phi)
    sq, isq, gram_min = _sqrt_pair(gram)
    gns = MultiMatrixAlgebra([d])
    rep = np.column_stack(
        [(sq @ alg.lmul_matrix(np.eye(d)[:, j]) @ isq).reshape(-1) for j in range(d)]
    )
    op_pair = tensor_algebra([gns, gns])
    gns_cert = dict(hom_defect_pairs(alg, gns, rep))
    gns_cert["info_gram_min_eig"] = gram_min
    sv = np.linalg.svd(rep, compute_uv=False)
    gns_cert["info_rep_min_sv"] = float(sv[-1])
    cyc = np.column_stack(
        [rep[:, j].reshape(d, d) @ (sq @ alg.unit()) for j in range(d)]
    )
    gns_cert["info_cyclic_min_sv"] = float(np.linalg.svd(cyc, compute_uv=False)[-1])
    certs["gns"] = gns_cert

    w, _, _ = left_regular_unitary(alg, delta, phi)
    v = right_regular_unitary(alg, delta, phi)
    sw = _swap(d)
    what = sw @ w.conj().T @ sw
    rep_q = orth_basis(rep)
    fund = {
        "mult_unitary": _unitary_defect(w),
        "right_unitary": _unitary_defect(v),
        "pentagon_mult": _pentagon_defect(w, d),
        "pentagon_right": _pentagon_defect(v, d),
    }
    imp_w = imp_v = 0.0
    for j in range(d):
        dx = _pair_operator(rep, delta @ np.eye(d)[:, j], d)
        x = rep[:, j].reshape(d, d)
        imp_w = max(imp_w, snorm(dx - w.conj().T @ np.kron(np.eye(d), x) @ w))
        imp_v = max(imp_v, snorm(dx - v @ np.kron(x, np.eye(d)) @ v.conj().T))
    fund["implements_comul_mult"] = imp_w
    fund["implements_comul_right"] = imp_v
    wt = w.reshape(d, d, d, d)
    vt = v.reshape(d, d, d, d)
    w_left = np.hstack([wt[:, i, :, j].reshape(d * d, 1) for i in range(d)
                        for j in range(d)])
    v_right = np.hstack([vt[i, :, j, :].reshape(d * d, 1) for i in range(d)
                         for j in range(d)])
    fund["mult_left_leg_in_base"] = float(
        snorm(w_left - rep_q @ (rep_q.conj().T @ w_left)) / max(1.0, snorm(w_left))
    )
    fund["right_right_leg_in_base"] = float(
        snorm(v_right - rep_q @ (rep_q.conj().T @ v_right)) / max(1.0, snorm(v_right))
    )
    certs["fundamental"] = fund

    g = FiniteQuantumGroup(
        name=name or "quantum-group",
        algebra=alg,
        comul=delta,
        counit=eps,
        pair=pair,
        haar_left=phi,
        haar_right=psi,
        haar_state=haar_state,
        mean=mean,
        counit_proj=p_eps,
        gram=gram,
        gns_vectors=sq,
        gns=gns,
        rep=rep,
        op_pair=op_pair,
        mult_unitary=w,
        right_mult_unitary=v,
        dual_mult_unitary=what,
        certs=certs,
    )
    g.rep_span = SubAlgebra(
        gns, rep_q, 0.0, generators=[rep[:, j] for j in range(d)]
    )
    if with_dual:
        _attach_dual(g, seed)
        _attach_extended(g)
        _attach_base_expectation(g)
    return g


# -- dual ------------------------------------------------------------------


def _attach_dual(g, seed):
    d = g.dim
    gns = g.gns
    w = g.mult_unitary
    wt = w.reshape(d, d, d, d)
    slices = [wt[i, :, j, :].reshape(-1) for i in range(d) for j in range(d)]
    span = generated_subalgebra(gns, slices)
    cert = {"span_closure": span.closure_defect, "info_dual_dim": float(span.dim)}
    if span.dim != d:
        raise ValueError("dual algebra dimension differs from the GNS dimension")
    pres = present_subalgebra(span, seed=seed)
    cert["presentation"] = max_residual(pres.cert)
    ahat = pres.mma
    hatrep, hatunrep = pres.from_mma, pres.to_mma

    what = g.dual_mult_unitary
    eyeh = np.eye(d, dtype=complex)
    comul_hat = np.empty((d * d, d), dtype=complex)
    in_span = 0.0
    for k in range(d):
        x = (hatrep @ eyeh[:, k]).reshape(d, d)
        op = what.conj().T @ np.kron(np.eye(d), x) @ what
        coords = _operator_pair_coords(op, d).reshape(d * d, d * d)
        comp = hatunrep @ coords @ hatunrep.T
        back = hatrep @ comp @ hatrep.T
        in_span = max(in_span, snorm(back - coords))
        comul_hat[:, k] = comp.reshape(-1)
    cert["comul_in_span"] = in_span

    rows, rhs = [], []
    for j in range(d):
        dj = (comul_hat @ eyeh[:, j]).reshape(d, d)
        rows += [dj.T, dj]
        rhs += [eyeh[:, j], eyeh[:, j]]
    sys = np.vstack(rows)
    b = np.concatenate(rhs)
    eps_hat, *_ = np.linalg.lstsq(sys, b, rcond=None)
    cert["counit_solve"] = float(np.linalg.norm(sys @ eps_hat - b))

    dual = build_quantum_group(
        ahat, comul_hat, eps_hat, name=g.name + "-dual", seed=seed + 1,
        with_dual=False,
    )

    xi0 = g.gns_vectors @ g.counit_proj
    xi0 = xi0 / np.linalg.norm(xi0)
    hat_mats = [(hatrep @ eyeh[:, k]).reshape(d, d) for k in range(d)]
    haar_state_hat = np.array([xi0.conj() @ m @ xi0 for m in hat_mats])
    ps = dual.haar_left
    c = (ps.conj() @ haar_state_hat) / (ps.conj() @ ps)
    cert["haar_state_collinear"] = float(np.linalg.norm(haar_state_hat - c * ps))
    cert.update(
        {"haar_state_" + k: v for k, v in ahat.state_defects(haar_state_hat).items()}
    )

    u0 = np.column_stack([m @ xi0 for m in hat_mats]) @ np.linalg.inv(
        dual.gns_vectors
    )
    scale = np.sqrt(np.real(np.trace(u0.conj().T @ u0)) / d)
    u = u0 / scale
    cert["gns_unitary"] = _unitary_defect(u)
    transport = 0.0
    for k in range(d):
        lhs = u @ dual.rep[:, k].reshape(d, d) @ u.conj().T
        transport = max(transport, snorm(lhs - hat_mats[k]))
    cert["gns_transport"] = transport
    uu = np.kron(u, u)
    cert["fundamental_transport"] = snorm(
        uu @ dual.mult_unitary @ uu.conj().T - what
    )

    hat_comm = _commutant_basis(gns, [hatrep @ eyeh[:, k] for k in range(d)])
    vt = g.right_mult_unitary.reshape(d, d, d, d)
    v_left = np.hstack([vt[:, i, :, j].reshape(d * d, 1) for i in range(d)
                        for j in range(d)])
    cert["right_unitary_left_leg_in_dual_commutant"] = float(
        snorm(v_left - hat_comm @ (hat_comm.conj().T @ v_left))
        / max(1.0, snorm(v_left))
    )

    g.dual = dual
    g.dual_span = span
    g.dual_rep = hatrep
    g.dual_unrep = hatunrep
    g.dual_haar_state = haar_state_hat
    g.dual_gns_unitary = u
    g.certs["dual"] = cert

    _attach_opposite_dual(g)


def _attach_opposite_dual(g):
    d = g.dim
    dual = g.dual
    sw = _swap(d)
    comul_hat_op = permute_legs_matrix(dual.pair, [1, 0]) @ dual.comul
    wop_gns, _, _ = left_regular_unitary(dual.algebra, comul_hat_op, dual.haar_right)
    uu = np.kron(g.dual_gns_unitary, g.dual_gns_unitary)
    wop = uu @ wop_gns @ uu.conj().T
    cert = {
        "unitary": _unitary_defect(wop),
        "pentagon": _pentagon_defect(wop, d),
    }
    eyeh = np.eye(d, dtype=complex)
    imp = 0.0
    for k in range(d):
        vv = comul_hat_op @ eyeh[:, k]
        op_lhs = _pair_operator(g.dual_rep, vv, d)
        x = (g.dual_rep @ eyeh[:, k]).reshape(d, d)
        op_rhs = wop.conj().T @ np.kron(np.eye(d), x) @ wop
        imp = max(imp, snorm(op_lhs - op_rhs))
    cert["implements_opposite_comul"] = imp

    base_triv = 0.0
    for j in range(d):
        x = g.rep[:, j].reshape(d, d)
        lhs = wop.conj().T @ np.kron(np.eye(d), x) @ wop
        base_triv = max(base_triv, snorm(lhs - np.kron(np.eye(d), x)))
    cert["trivial_on_base"] = base_triv

    wt = wop.reshape(d, d, d, d)
    left = np.hstack([wt[:, i, :, j].reshape(d * d, 1) for i in range(d)
                      for j in range(d)])
    right = np.hstack([wt[i, :, j, :].reshape(d * d, 1) for i in range(d)
                       for j in range(d)])
    dq = g.dual_span.basis
    base_comm = _commutant_basis(g.gns, [g.rep[:, j] for j in range(d)])
    cert["left_leg_in_dual"] = float(
        snorm(left - dq @ (dq.conj().T @ left)) / max(1.0, snorm(left))
    )
    cert["right_leg_in_base_commutant"] = float(
        snorm(right - base_comm @ (base_comm.conj().T @ right))
        / max(1.0, snorm(right))
    )

    vd = uu @ dual.right_mult_unitary @ uu.conj().T
    cert["matches_flipped_dual_right_unitary"] = snorm(
        wop - sw @ vd.conj().T @ sw
    )
    g.opposite_dual_unitary = wop
    g.certs["opposite_dual"] = cert


# -- extended comultiplications and the base expectation -------------------


def _conjugation_map(u, side_left, d):
    """Matrix on operator coords of T -> u* (1 (x) T) u or u (T (x) 1) u*."""
    cols = np.empty((d ** 4, d * d), dtype=complex)
    eye = np.eye(d)
    for a in range(d):
        for b in range(d):
            m = np.zeros((d, d), dtype=complex)
            m[a, b] = 1.0
            if side_left:
                op = u.conj().T @ np.kron(eye, m) @ u
            else:
                op = u @ np.kron(m, eye) @ u.conj().T
            cols[:, a * d + b] = _operator_pair_coords(op, d)
    return cols


def _attach_extended(g):
    d = g.dim
    gns, op_pair = g.gns, g.op_pair
    dl = _conjugation_map(g.mult_unitary, True, d)
    dr = _conjugation_map(g.right_mult_unitary, False, d)
    dop = _conjugation_map(g.opposite_dual_unitary, True, d)
    cert = {}
    cert["left_restricts_to_comul"] = snorm(
        dl @ g.rep - np.kron(g.rep, g.rep) @ g.comul
    )
    cert["right_restricts_to_comul"] = snorm(
        dr @ g.rep - np.kron(g.rep, g.rep) @ g.comul
    )
    cert["dual_op_restricts"] = snorm(
        dop @ g.dual_rep - np.kron(g.dual_rep, g.dual_rep)
        @ permute_legs_matrix(g.dual.pair, [1, 0]) @ g.dual.comul
    )
    triv_r = 0.0
    for k in range(d):
        xk = g.dual_rep[:, k]
        triv_r = max(triv_r, float(np.linalg.norm(
            dr @ xk - embed_element(xk, gns, op_pair, [0])
        )))
    cert["right_trivial_on_dual"] = triv_r
    triv_o = 0.0
    for j in range(d):
        xj = g.rep[:, j]
        triv_o = max(triv_o, float(np.linalg.norm(
            dop @ xj - embed_element(xj, gns, op_pair, [1])
        )))
    cert["dual_op_trivial_on_base"] = triv_o
    cert["left_hom"] = max(hom_defect_pairs(gns, op_pair, dl).values())
    cert["right_hom"] = max(hom_defect_pairs(gns, op_pair, dr).values())

    # left extension is a coaction: comultiply the function leg
    rep_q = g.rep_span.basis
    base_comul = np.kron(g.rep, g.rep) @ g.comul @ np.linalg.pinv(g.rep)
    coact = 0.0
    sl = 0.0
    for j in range(d * d):
        v = dl[:, j].reshape(d * d, d * d)
        lhs = np.tensordot(base_comul, v, axes=(1, 0)).reshape(-1)
        rhs = np.tensordot(dl, v, axes=(1, 1)).T.reshape(-1)
        coact = max(coact, float(np.linalg.norm(lhs - rhs)))
        sl = max(sl, float(snorm(v - rep_q @ (rep_q.conj().T @ v))
                           / max(1.0, snorm(v))))
    cert["left_coaction"] = coact
    cert["left_leg_in_base"] = sl
    g.comul_ext_left = dl
    g.comul_ext_right = dr
    g.comul_ext_dual_op = dop
    g.certs["extended"] = cert


def _attach_base_expectation(g):
    d = g.dim
    gns = g.gns
    mix = tensor_algebra([g.algebra, g.dual.algebra])
    eyeh = np.eye(d, dtype=complex)
    cols = []
    for j in range(d):
        for k in range(d):
            cols.append(gns.mul(g.rep[:, j], g.dual_rep @ eyeh[:, k]))
    m_mat = np.column_stack(cols)
    sv = np.linalg.svd(m_mat, compute_uv=False)
    cert = {"info_product_min_sv": float(sv[-1])}
    if sv[-1] <= RANK_CUTOFF * sv[0]:
        raise ValueError("base-dual multiplication map is singular")
    e0 = g.rep @ contract_leg_matrix(mix, 1, g.dual_haar_state) @ np.linalg.inv(m_mat)
    ce = verify_conditional_expectation(gns, e0, g.rep_span)
    cert.update({"expectation_" + k: v for k, v in ce.items()})

    dl = g.comul_ext_left
    cov = 0.0
    for j in range(d * d):
        f = np.zeros(d * d)
        f[j] = 1.0
        sf = contract_leg_matrix(g.op_pair, 0, f) @ dl
        cov = max(cov, snorm(e0 @ sf - sf @ e0))
    cert["slice_covariance"] = cov
    harm = 0.0
    unit_pair = g.op_pair.unit()
    for k in range(d):
        xk = g.dual_rep @ eyeh[:, k]
        v = dl @ xk
        arr = v.reshape(d * d, d * d)
        lhs = (arr @ e0.T).reshape(-1)
        harm = max(harm, float(np.linalg.norm(
            lhs - (g.dual_haar_state @ eyeh[:, k]) * unit_pair
        )))
    cert["averages_dual_to_scalars"] = harm
    conv_rank = int(np.sum(
        np.linalg.svd(dl, compute_uv=False) > RANK_CUTOFF * snorm(dl)
    ))
    cert["info_convolution_rank"] = float(conv_rank)
    cert["convolution_full_rank"] = 0.0 if conv_rank == d * d else 1.0
    g.base_expectation = e0
    g.certs["base_expectation"] = cert


# -- convenience accessors -------------------------------------------------


def build_fundamental_unitaries(g):
    """The four regular unitaries: multiplication, right, dual, opposite dual."""
    return (
        g.mult_unitary,
        g.right_mult_unitary,
        g.dual_mult_unitary,
        g.opposite_dual_unitary,
    )


def build_dual(g, seed=0):
    if g.dual is None:
        _attach_dual(g, seed)
        _attach_extended(g)
        _attach_base_expectation(g)
    return g.dual


def extended_comultiplications(g):
    """Comultiplications extended to all GNS-space operators (left, right)."""
    return g.comul_ext_left, g.comul_ext_right


def build_E0(g):
    """The bimodule expectation from GNS-space operators onto the base algebra."""
    return g.base_expectation


def is_kac(g):
    """Residuals witnessing traciality of the invariant functionals."""
    h = g.certs["haar"]
    return {
        "tracial": h["tracial"],
        "left_equals_right": h["left_equals_right"],
    }


def find_invariant_mean(g):
    """The unique two-sided invariant state, with its certificate."""
    return g.mean, dict(g.certs["mean"])


# -- biduality -------------------------------------------------------------


def biduality(g, seed=0, budget=20736):
    """Certify that the dual of the dual is canonically the original group.

    Returns (psi, cert): psi maps bidual coordinates to original coordinates.
    """
    dual = g.dual
    if dual is None:
        raise ValueError("group was built without a dual")
    gd = build_quantum_group(
        dual.algebra, dual.comul, dual.counit, name=dual.name, seed=seed,
        budget=budget, with_dual=True,
    )
    u = g.dual_gns_unitary
    uu = np.kron(u, u)
    cert = {
        "fundamental_is_flipped_adjoint": snorm(
            uu @ gd.mult_unitary @ uu.conj().T - g.dual_mult_unitary
        )
    }
    adu = np.kron(u, np.conj(u))
    lift = adu @ gd.dual_rep  # bidual coords -> operators on the original GNS space
    rep_pinv = np.linalg.pinv(g.rep, rcond=RANK_CUTOFF)
    psi = rep_pinv @ lift
    cert["lands_in_base"] = snorm(g.rep @ psi - lift)
    hom = hom_defect_pairs(gd.dual.algebra, g.algebra, psi)
    cert.update({"iso_" + k: v for k, v in hom.items()})
    sv = np.linalg.svd(psi, compute_uv=False)
    cert["info_iso_min_sv"] = float(sv[-1])
    cert["intertwines_comul"] = snorm(
        g.comul @ psi - np.kron(psi, psi) @ gd.dual.comul
    )
    return psi, cert
