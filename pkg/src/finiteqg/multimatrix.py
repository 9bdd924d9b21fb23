"""Multimatrix *-algebras, tensor legs, subalgebras, and structure recovery.

Conventions used everywhere in the package:

* An algebra with blocks ``(n_1, ..., n_k)`` is the direct sum of full matrix
  algebras of those sizes.  An element is a coordinate vector of length
  ``sum(n_i**2)``: the row-major entries of each block, blocks in order.
* A tensor product of algebras has coordinates equal to the Kronecker product
  of the factor coordinates (pure tensors), extended linearly.
* Linear maps between algebras are plain ndarrays of shape
  ``(target_dim, source_dim)`` acting on coordinate vectors.
* Linear functionals are ndarrays ``w`` acting by ``w @ coords`` (no
  conjugation).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._numeric import (
    RANK_CUTOFF,
    cluster_by_gap,
    herm,
    null_basis,
    orth_basis,
    rand_complex,
    snorm,
)


def _interleave_perm(sizes):
    """Permutation taking local coordinates (r1,c1,r2,c2,...) to (rows, cols)."""
    shape = []
    for n in sizes:
        shape += [n, n]
    k = len(sizes)
    order = list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))
    return np.arange(int(np.prod(shape))).reshape(shape).transpose(order).reshape(-1)


class _AlgebraBase:
    """Shared machinery driven by the list of irreducible representation blocks.

    ``_tuples`` holds one entry per irreducible block of the defining
    representation: (flat coordinate indices, interleave permutation, size).
    """

    dim: int
    _tuples: list

    # -- element operations ------------------------------------------------

    def rep_blocks(self, coords):
        coords = np.asarray(coords, dtype=complex)
        return [coords[idx][pi].reshape(n, n) for idx, pi, n in self._tuples]

    def from_rep_blocks(self, blocks):
        out = np.zeros(self.dim, dtype=complex)
        for (idx, pi, n), b in zip(self._tuples, blocks):
            local = np.empty(n * n, dtype=complex)
            local[pi] = np.asarray(b, dtype=complex).reshape(-1)
            out[idx] = local
        return out

    def rep_matrix(self, coords):
        return scipy.linalg.block_diag(*self.rep_blocks(coords))

    @property
    def rep_dim(self):
        return sum(n for _, _, n in self._tuples)

    @property
    def block_dims(self):
        return [n for _, _, n in self._tuples]

    def mul(self, x, y):
        return self.from_rep_blocks(
            [a @ b for a, b in zip(self.rep_blocks(x), self.rep_blocks(y))]
        )

    def star(self, x):
        return self.from_rep_blocks([b.conj().T for b in self.rep_blocks(x)])

    def unit(self):
        return self.from_rep_blocks([np.eye(n) for _, _, n in self._tuples])

    def norm(self, x):
        """Operator norm in the defining representation."""
        return max(snorm(b) for b in self.rep_blocks(x))

    def min_herm_eig(self, x):
        return min(float(np.linalg.eigvalsh(herm(b))[0]) for b in self.rep_blocks(x))

    def random_element(self, r):
        return rand_complex(r, self.dim)

    def random_herm(self, r):
        x = self.random_element(r)
        return (x + self.star(x)) / 2.0

    # -- matrices of structural maps --------------------------------------

    def lmul_matrix(self, x):
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for (idx, pi, n), blk in zip(self._tuples, self.rep_blocks(x)):
            out[np.ix_(idx[pi], idx[pi])] = np.kron(blk, np.eye(n))
        return out

    def rmul_matrix(self, y):
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for (idx, pi, n), blk in zip(self._tuples, self.rep_blocks(y)):
            out[np.ix_(idx[pi], idx[pi])] = np.kron(np.eye(n), blk.T)
        return out

    def star_matrix(self):
        """Real matrix T with coords(x*) = T @ conj(coords(x))."""
        t = np.zeros((self.dim, self.dim))
        for idx, pi, n in self._tuples:
            tau = np.arange(n * n).reshape(n, n).T.reshape(-1)
            t[idx[pi], idx[pi[tau]]] = 1.0
        return t

    # -- functionals -------------------------------------------------------

    def functional_from_densities(self, mats):
        """Functional x -> sum_i tr(D_i X_i) from density blocks D_i."""
        out = np.zeros(self.dim, dtype=complex)
        for (idx, pi, n), d in zip(self._tuples, mats):
            local = np.empty(n * n, dtype=complex)
            local[pi] = np.asarray(d, dtype=complex).T.reshape(-1)
            out[idx] = local
        return out

    def functional_to_densities(self, w):
        w = np.asarray(w, dtype=complex)
        return [w[idx][pi].reshape(n, n).T for idx, pi, n in self._tuples]

    def trace_functional(self, weights=None):
        if weights is None:
            weights = [1.0] * len(self._tuples)
        return self.functional_from_densities(
            [w * np.eye(n) for w, (_, _, n) in zip(weights, self._tuples)]
        )

    def state_defects(self, w):
        """Normalization, hermiticity, and positivity defects of a functional."""
        dens = self.functional_to_densities(w)
        return {
            "normalization": abs(complex(np.asarray(w) @ self.unit()) - 1.0),
            "hermiticity": max(snorm(d - d.conj().T) for d in dens),
            "positivity": max(
                0.0, -min(float(np.linalg.eigvalsh(herm(d))[0]) for d in dens)
            ),
        }


class MultiMatrixAlgebra(_AlgebraBase):
    def __init__(self, blocks):
        self.blocks = tuple(int(n) for n in blocks)
        if not self.blocks or any(n < 1 for n in self.blocks):
            raise ValueError("blocks must be positive integers")
        self.dim = sum(n * n for n in self.blocks)
        self._offsets = np.concatenate([[0], np.cumsum([n * n for n in self.blocks])])
        self._block_slices = [
            (int(self._offsets[i]), n) for i, n in enumerate(self.blocks)
        ]
        self._tuples = [
            (np.arange(o, o + n * n), _interleave_perm([n]), n)
            for o, n in self._block_slices
        ]

    def basis_unit(self, i, a, b):
        """Coordinates of the (a, b) matrix unit of block i."""
        o, n = self._block_slices[i]
        out = np.zeros(self.dim, dtype=complex)
        out[o + a * n + b] = 1.0
        return out

    def __eq__(self, other):
        return isinstance(other, MultiMatrixAlgebra) and self.blocks == other.blocks

    def __hash__(self):
        return hash(("mma", self.blocks))

    def __repr__(self):
        return f"MultiMatrixAlgebra({list(self.blocks)})"


class TensorAlgebra(_AlgebraBase):
    def __init__(self, factors):
        factors = list(factors)
        if not factors or not all(isinstance(f, MultiMatrixAlgebra) for f in factors):
            raise ValueError("factors must be MultiMatrixAlgebra instances")
        self.factors = factors
        self.dims = tuple(f.dim for f in factors)
        self.dim = int(np.prod(self.dims))
        index_arr = np.arange(self.dim).reshape(self.dims)
        self._tuples = []
        for combo in itertools.product(*[f._block_slices for f in factors]):
            idx = index_arr[tuple(slice(o, o + n * n) for o, n in combo)].reshape(-1)
            sizes = [n for _, n in combo]
            self._tuples.append(
                (idx, _interleave_perm(sizes), int(np.prod(sizes)))
            )

    @property
    def nlegs(self):
        return len(self.factors)

    def __eq__(self, other):
        return isinstance(other, TensorAlgebra) and self.factors == other.factors

    def __hash__(self):
        return hash(("tensor", tuple(self.dims)))

    def __repr__(self):
        return f"TensorAlgebra({self.factors!r})"


def tensor_algebra(parts):
    """Tensor product of algebras; tensor factors are flattened, not nested."""
    factors = []
    for p in parts:
        if isinstance(p, TensorAlgebra):
            factors.extend(p.factors)
        else:
            factors.append(p)
    return TensorAlgebra(factors)


# -- tensor-leg operations -------------------------------------------------


def _dims_of(alg):
    return alg.dims if isinstance(alg, TensorAlgebra) else (alg.dim,)


def leg_apply(ta, coords, leg, m, new_factor=None):
    """Apply a matrix to one tensor leg; returns (new_algebra, new_coords)."""
    m = np.asarray(m, dtype=complex)
    arr = np.asarray(coords, dtype=complex).reshape(ta.dims)
    arr = np.moveaxis(np.tensordot(m, arr, axes=(1, leg)), 0, leg)
    factors = list(ta.factors)
    if new_factor is not None:
        factors[leg] = new_factor
    elif m.shape[0] != m.shape[1]:
        raise ValueError("non-square leg map needs new_factor")
    out = TensorAlgebra(factors)
    return out, arr.reshape(-1)


def leg_matrix(ta, leg, m):
    """Matrix on tensor coordinates acting as `m` on one leg, identity elsewhere."""
    pre = int(np.prod(ta.dims[:leg], initial=1))
    post = int(np.prod(ta.dims[leg + 1:], initial=1))
    return np.kron(np.kron(np.eye(pre), np.asarray(m, dtype=complex)), np.eye(post))


def permute_legs(ta, coords, perm):
    """Reorder tensor legs: new leg i is old leg perm[i]."""
    arr = np.asarray(coords, dtype=complex).reshape(ta.dims).transpose(perm)
    return TensorAlgebra([ta.factors[p] for p in perm]), arr.reshape(-1)


def permute_legs_matrix(ta, perm):
    idx = np.arange(ta.dim).reshape(ta.dims).transpose(perm).reshape(-1)
    p = np.zeros((ta.dim, ta.dim))
    p[np.arange(ta.dim), idx] = 1.0
    return p


def embed_element(coords, src, dst, legs):
    """Place an element of `src` on the listed legs of `dst`, units elsewhere."""
    dims_src = _dims_of(src)
    if len(dims_src) != len(legs):
        raise ValueError("legs must match the source factors")
    for d, leg in zip(dims_src, legs):
        if dst.factors[leg].dim != d:
            raise ValueError("factor mismatch at leg %d" % leg)
    arr = np.asarray(coords, dtype=complex).reshape(dims_src)
    others = [j for j in range(dst.nlegs) if j not in legs]
    for j in others:
        arr = np.multiply.outer(arr, dst.factors[j].unit())
    order = list(legs) + others
    return arr.transpose(np.argsort(order)).reshape(-1)


def leg_embed(ta, legs, m):
    """Matrix acting as `m` on the listed legs (in order), identity elsewhere.

    The legs need not be adjacent or in increasing order; the necessary
    reshuffling is built in.  `m` must be square on the product of the listed
    leg dimensions.
    """
    m = np.asarray(m, dtype=complex)
    order = list(legs) + [j for j in range(ta.nlegs) if j not in legs]
    p = permute_legs_matrix(ta, order)
    rest = int(np.prod([ta.dims[j] for j in order[len(legs):]], initial=1))
    if m.shape != (ta.dim // rest, ta.dim // rest):
        raise ValueError("map does not match the listed legs")
    return p.T @ np.kron(m, np.eye(rest)) @ p


def contract_leg(ta, coords, leg, w):
    """Apply a functional to one leg; returns (smaller algebra, coords)."""
    arr = np.asarray(coords, dtype=complex).reshape(ta.dims)
    arr = np.tensordot(np.asarray(w, dtype=complex), arr, axes=(0, leg))
    rest = [f for j, f in enumerate(ta.factors) if j != leg]
    alg = rest[0] if len(rest) == 1 else TensorAlgebra(rest)
    return alg, arr.reshape(-1)


def contract_leg_matrix(ta, leg, w):
    """Matrix of (id (x) ... (x) w (x) ... (x) id) on tensor coordinates."""
    pre = int(np.prod(ta.dims[:leg], initial=1))
    post = int(np.prod(ta.dims[leg + 1:], initial=1))
    return np.kron(
        np.kron(np.eye(pre), np.asarray(w, dtype=complex)[None, :]), np.eye(post)
    )


# -- subalgebras -----------------------------------------------------------


@dataclass
class SubAlgebra:
    ambient: object
    basis: np.ndarray  # (ambient.dim, dim), orthonormal columns
    closure_defect: float = 0.0
    generators: list = field(default_factory=list)

    @property
    def dim(self):
        return self.basis.shape[1]

    def project(self, coords):
        return self.basis.conj().T @ np.asarray(coords, dtype=complex)

    def lift(self, coeffs):
        return self.basis @ np.asarray(coeffs, dtype=complex)

    def contains(self, coords):
        v = np.asarray(coords, dtype=complex)
        return snorm(v - self.basis @ (self.basis.conj().T @ v))

    def abstract(self):
        amb = self.ambient
        q = self.basis

        def mul(x, y):
            return q.conj().T @ amb.mul(q @ x, q @ y)

        def star(x):
            return q.conj().T @ amb.star(q @ x)

        return AbstractStarAlgebra(
            self.dim, mul, star, q.conj().T @ amb.unit()
        )


def generated_subalgebra(alg, generators, include_unit=True, star_close=True,
                         cutoff=RANK_CUTOFF):
    """Span of all words in the generators, with a numerical closure certificate."""
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if star_close:
        gens = gens + [alg.star(g) for g in generators]
    cols = ([alg.unit()] if include_unit else []) + gens
    q = orth_basis(np.column_stack(cols), cutoff)
    while True:
        prods = np.column_stack(
            [alg.mul(q[:, i], g) for i in range(q.shape[1]) for g in gens]
        )
        resid = prods - q @ (q.conj().T @ prods)
        scale = max(1.0, snorm(prods))
        u, s, _ = np.linalg.svd(resid, full_matrices=False)
        keep = int(np.sum(s > cutoff * scale))
        if keep == 0:
            break
        q = orth_basis(np.hstack([q, u[:, :keep]]))
    defect = 0.0
    proj = lambda v: v - q @ (q.conj().T @ v)
    for i in range(q.shape[1]):
        for g in gens:
            defect = max(defect, snorm(proj(alg.mul(q[:, i], g))))
            defect = max(defect, snorm(proj(alg.mul(g, q[:, i]))))
        defect = max(defect, snorm(proj(alg.star(q[:, i]))))
    if include_unit:
        defect = max(defect, snorm(proj(alg.unit())))
    return SubAlgebra(alg, q, defect, generators=gens)


def extend_homomorphism(src, gens, images, tgt, include_unit=True,
                        cutoff=RANK_CUTOFF):
    """Extend generator assignments to the generated span by word closure.

    Returns (phi, span, cert): a (tgt.dim, src.dim) matrix supported on the
    generated span, the span as a SubAlgebra of `src`, and residuals.  The
    extension exists iff the assignment is consistent; inconsistency shows up
    as a large 'multiplicative' residual, never as a silent wrong answer.
    """
    gens = [np.asarray(g, dtype=complex) for g in gens]
    images = [np.asarray(g, dtype=complex) for g in images]
    pairs = []
    if include_unit:
        pairs.append((src.unit(), tgt.unit()))
    pairs += list(zip(gens, images))
    vecs, imgs = [], []
    q = np.zeros((src.dim, 0), dtype=complex)
    queue = list(pairs)
    while queue:
        v, w = queue.pop(0)
        nv = snorm(v)
        if nv < cutoff:
            continue
        resid = v - q @ (q.conj().T @ v) if q.shape[1] else v
        if snorm(resid) <= cutoff * max(1.0, nv):
            continue
        vecs.append(v / nv)
        imgs.append(w / nv)
        q = orth_basis(np.hstack([q, (v / nv)[:, None]]))
        for g, gw in zip(gens, images):
            queue.append((src.mul(v / nv, g), tgt.mul(w / nv, gw)))
    vmat = np.column_stack(vecs) if vecs else np.zeros((src.dim, 0))
    wmat = np.column_stack(imgs) if imgs else np.zeros((tgt.dim, 0))
    phi = wmat @ np.linalg.pinv(vmat, rcond=cutoff)
    mult = 0.0
    for i in range(len(vecs)):
        for g, gw in zip(gens, images):
            lhs = phi @ src.mul(vecs[i], g)
            rhs = tgt.mul(phi @ vecs[i], gw)
            mult = max(mult, snorm(lhs - rhs))
    cert = {"multiplicative": mult, "info_span_dim": float(q.shape[1])}
    if include_unit:
        cert["unital"] = tgt.norm(phi @ src.unit() - tgt.unit())
    span = SubAlgebra(src, q, 0.0, generators=gens)
    return phi, span, cert


# -- abstract *-algebras and structure recovery ----------------------------


class AbstractStarAlgebra:
    """A *-algebra given by callables on coordinate vectors of length `dim`."""

    def __init__(self, dim, mul, star, unit):
        self.dim = int(dim)
        self._mul = mul
        self._star = star
        self._unit = np.asarray(unit, dtype=complex)

    def mul(self, x, y):
        return self._mul(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))

    def star(self, x):
        return self._star(np.asarray(x, dtype=complex))

    def unit(self):
        return self._unit.copy()

    def norm(self, x):
        # coordinate 2-norm; stands in for the operator norm in residual checks
        return float(np.linalg.norm(np.asarray(x, dtype=complex)))

    def lmul_matrix(self, x):
        eye = np.eye(self.dim, dtype=complex)
        return np.column_stack([self.mul(x, eye[:, j]) for j in range(self.dim)])

    def rmul_matrix(self, x):
        eye = np.eye(self.dim, dtype=complex)
        return np.column_stack([self.mul(eye[:, j], x) for j in range(self.dim)])


@dataclass
class Presentation:
    """A certified isomorphism with a concrete multimatrix algebra.

    ``from_mma`` maps multimatrix coordinates into the presented algebra
    (ambient coordinates for a subalgebra, abstract coordinates otherwise);
    ``to_mma`` is its inverse on the presented algebra.
    """

    mma: MultiMatrixAlgebra
    to_mma: np.ndarray
    from_mma: np.ndarray
    cert: dict


def _solve_rep_element(pimat, p):
    z, *_ = np.linalg.lstsq(pimat, p.reshape(-1), rcond=None)
    resid = snorm(pimat @ z - p.reshape(-1))
    return z, resid


def present_algebra(alg, seed=0, cluster_gap=1e-6, attempts=12):
    """Recover block sizes and matrix units of a finite-dimensional *-algebra.

    The trace of the left regular representation is faithful and positive on a
    multimatrix algebra, so its GNS representation is a faithful *-rep; the
    center is split with a generic central hermitian element and each block is
    split with a generic in-block hermitian, giving diagonal matrix units and
    then partial isometries.  All randomness is seeded; structure decisions
    (cluster counts, ranks) are retried with fresh randomness on failure.
    """
    r = np.random.default_rng(seed)
    m = alg.dim
    eye = np.eye(m, dtype=complex)
    lmats = np.empty((m, m, m), dtype=complex)
    rmats = np.empty((m, m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            c = alg.mul(eye[:, j], eye[:, k])
            lmats[j][:, k] = c
            rmats[k][:, j] = c
    tau = np.array([np.trace(lmats[j]) for j in range(m)])
    smat = np.column_stack([alg.star(eye[:, j]) for j in range(m)])

    def mul_c(x, y):
        return alg.mul(x, y)

    def star_c(x):
        return smat @ np.conj(x)

    def lmat_of(x):
        return np.tensordot(x, lmats, axes=(0, 0))

    gram = np.empty((m, m), dtype=complex)
    for p in range(m):
        gram[p] = tau @ lmat_of(smat[:, p])
    gram = herm(gram)
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] <= 1e-12 * evals[-1]:
        raise ValueError("left regular trace is not faithful; input is not semisimple")
    gh = (evecs * np.sqrt(evals)) @ evecs.conj().T
    ghi = (evecs / np.sqrt(evals)) @ evecs.conj().T
    pis = np.array([gh @ lmats[j] @ ghi for j in range(m)])
    pimat = np.column_stack([pis[j].reshape(-1) for j in range(m)])

    def pi_of(x):
        return np.tensordot(x, pis, axes=(0, 0))

    def anorm(x):
        return snorm(pi_of(x))

    pi_star = max(
        snorm(pis[j].conj().T - pi_of(star_c(eye[:, j]))) for j in range(m)
    )

    center = null_basis(
        np.vstack([rmats[j] - lmats[j] for j in range(m)])
    )
    k = center.shape[1]

    def spectral_split(proj_basis, h_coords, want=None):
        """Cluster pi(h) on the range of an orthonormal basis; return projections."""
        hb = herm(proj_basis.conj().T @ pi_of(h_coords) @ proj_basis)
        ev, evec = np.linalg.eigh(hb)
        spread = max(1.0, float(ev[-1] - ev[0]))
        clusters = cluster_by_gap(ev, cluster_gap * spread)
        if want is not None and len(clusters) != want:
            return None
        out = []
        for cl in sorted(clusters, key=lambda c: float(np.mean(ev[c]))):
            p = proj_basis @ evec[:, cl] @ evec[:, cl].conj().T @ proj_basis.conj().T
            z, resid = _solve_rep_element(pimat, p)
            if resid > 1e-6:
                return None
            out.append((z, len(cl)))
        return out

    full = np.eye(m, dtype=complex)
    for attempt in range(attempts):
        c = center @ rand_complex(r, k)
        h = (c + star_c(c)) / 2.0
        split = spectral_split(full, h, want=k)
        if split is None:
            continue
        blocks_data = []
        ok = True
        for z, _ in split:
            cols = np.column_stack([mul_c(z, eye[:, j]) for j in range(m)])
            mi = orth_basis(cols).shape[1]
            ni = int(round(np.sqrt(mi)))
            if ni * ni != mi:
                ok = False
                break
            blocks_data.append((z, ni))
        if not ok:
            continue
        blocks_data.sort(key=lambda t: t[1])
        units = _matrix_units(
            alg, blocks_data, mul_c, star_c, pi_of, pimat, tau, r, cluster_gap
        )
        if units is None:
            continue
        ns, cols = units
        fmat = np.column_stack(cols)
        sv = np.linalg.svd(fmat, compute_uv=False)
        if sv[-1] <= RANK_CUTOFF * sv[0]:
            continue
        mma = MultiMatrixAlgebra(ns)
        to_mma = np.linalg.inv(fmat)
        cert = _presentation_cert(
            alg, mma, fmat, to_mma, mul_c, star_c, smat, anorm, lmat_of
        )
        cert["gns_star_rep"] = pi_star
        return Presentation(mma, to_mma, fmat, cert)
    raise RuntimeError("structure recovery failed after %d attempts" % attempts)


def _matrix_units(alg, blocks_data, mul_c, star_c, pi_of, pimat, tau, r, gap):
    m = alg.dim
    eye = np.eye(m, dtype=complex)
    ns, cols = [], []
    for z, ni in blocks_data:
        ns.append(ni)
        if ni == 1:
            cols.append(z)
            continue
        vb = orth_basis(pi_of(z))
        diag = None
        for _ in range(8):
            rh = rand_complex(r, m)
            c = mul_c(z, (rh + star_c(rh)) / 2.0)
            split = _block_diag_split(vb, c, ni, pi_of, pimat, gap)
            if split is not None:
                diag = split
                break
        if diag is None:
            return None
        vs = None
        for _ in range(8):
            s = rand_complex(r, m)
            cand = [diag[0]]
            good = True
            for j in range(1, ni):
                w = mul_c(mul_c(diag[j], s), diag[0])
                cj = (tau @ mul_c(star_c(w), w)) / (tau @ diag[0])
                cj = float(np.real(cj))
                if cj < 1e-8:
                    good = False
                    break
                cand.append(w / np.sqrt(cj))
            if good:
                vs = cand
                break
        if vs is None:
            return None
        for a in range(ni):
            for b in range(ni):
                cols.append(mul_c(vs[a], star_c(vs[b])))
    return ns, cols


def _block_diag_split(vb, h_coords, ni, pi_of, pimat, gap):
    """Split one block into its minimal diagonal projections."""
    hb = herm(vb.conj().T @ pi_of(h_coords) @ vb)
    ev, evec = np.linalg.eigh(hb)
    spread = max(1.0, float(ev[-1] - ev[0]))
    clusters = cluster_by_gap(ev, gap * spread)
    if len(clusters) != ni or any(len(c) != ni for c in clusters):
        return None
    out = []
    for cl in sorted(clusters, key=lambda c: float(np.mean(ev[c]))):
        p = vb @ evec[:, cl] @ evec[:, cl].conj().T @ vb.conj().T
        z, resid = _solve_rep_element(pimat, p)
        if resid > 1e-6:
            return None
        out.append(z)
    return out


def _presentation_cert(alg, mma, fmat, to_mma, mul_c, star_c, smat, anorm, lmat_of):
    gens = []
    for i in range(len(mma.blocks)):
        n = mma.blocks[i]
        gens.append(mma.basis_unit(i, 0, 0))
        for a in range(1, n):
            gens.append(mma.basis_unit(i, a, 0))
            gens.append(mma.basis_unit(i, 0, a))
    mult = 0.0
    for g in gens:
        lhs = fmat @ mma.lmul_matrix(g)
        rhs = lmat_of(fmat @ g) @ fmat
        mult = max(mult, snorm(lhs - rhs))
    star_def = snorm(fmat @ mma.star_matrix() - smat @ np.conj(fmat))
    unit_def = anorm(fmat @ mma.unit() - alg.unit())
    round_def = snorm(to_mma @ fmat - np.eye(mma.dim))
    return {
        "multiplicative": mult,
        "star": star_def,
        "unital": unit_def,
        "roundtrip": round_def,
    }


def present_subalgebra(sub, seed=0):
    """Present a subalgebra; the returned maps use ambient coordinates."""
    pres = present_algebra(sub.abstract(), seed=seed)
    from_amb = sub.basis @ pres.from_mma
    to_amb = pres.to_mma @ sub.basis.conj().T
    cert = dict(pres.cert)
    cert["roundtrip"] = snorm(to_amb @ from_amb - np.eye(pres.mma.dim))
    return Presentation(pres.mma, to_amb, from_amb, cert)


# -- verification helpers --------------------------------------------------


def star_hom_defect(src, tgt, f, gens=None):
    """Residuals of f: src -> tgt being a unital *-homomorphism.

    With `gens`, multiplicativity is checked as f L_g = L_{f(g)} f per
    generator, which forces it on the whole generated algebra; the default
    checks every basis element.
    """
    f = np.asarray(f, dtype=complex)
    if gens is None:
        gens = [np.eye(src.dim, dtype=complex)[:, j] for j in range(src.dim)]
    mult = 0.0
    for g in gens:
        lhs = f @ src.lmul_matrix(g)
        rhs = tgt.lmul_matrix(f @ g) @ f
        mult = max(mult, snorm(lhs - rhs))
    return {
        "multiplicative": mult,
        "star": snorm(f @ src.star_matrix() - tgt.star_matrix() @ np.conj(f)),
        "unital": tgt.norm(f @ src.unit() - tgt.unit()),
    }


def hom_defect_pairs(src, tgt, f):
    """Unital *-hom residuals of f by direct evaluation on basis pairs.

    Frobenius norms in the target representation, so residuals are
    conservative upper bounds for the operator-norm versions.  Suitable for
    large targets where assembling left-multiplication matrices is wasteful.
    """
    f = np.asarray(f, dtype=complex)
    d = src.dim
    eye = np.eye(d, dtype=complex)
    reps = [tgt.rep_blocks(f @ eye[:, j]) for j in range(d)]
    mult = 0.0
    for i in range(d):
        for j in range(d):
            prod = tgt.rep_blocks(f @ src.mul(eye[:, i], eye[:, j]))
            err = sum(
                float(np.linalg.norm(a @ b - c)) ** 2
                for a, b, c in zip(reps[i], reps[j], prod)
            )
            mult = max(mult, np.sqrt(err))
    star = 0.0
    for j in range(d):
        diff = f @ src.star(eye[:, j]) - tgt.star(f @ eye[:, j])
        star = max(star, snorm(diff))
    return {
        "multiplicative": mult,
        "star": star,
        "unital": tgt.norm(f @ src.unit() - tgt.unit()),
    }


def map_cp_defect(src, tgt, f):
    """Complete-positivity defect of a linear map via blockwise Choi matrices.

    For each irreducible source block the Choi matrix with respect to the full
    defining representation of the target is assembled; the defect is the most
    negative eigenvalue found, floored at zero.
    """
    f = np.asarray(f, dtype=complex)
    worst = 0.0
    for idx, pi, n in src._tuples:
        rep_cols = {}
        for r_ in range(n):
            for c_ in range(n):
                img = f[:, idx[pi[r_ * n + c_]]]
                rep_cols[(r_, c_)] = tgt.rep_matrix(img)
        rd = tgt.rep_dim
        choi = np.zeros((n * rd, n * rd), dtype=complex)
        for (r_, c_), mat in rep_cols.items():
            choi[r_ * rd:(r_ + 1) * rd, c_ * rd:(c_ + 1) * rd] = mat
        ev = float(np.linalg.eigvalsh(herm(choi))[0])
        worst = min(worst, ev)
    return max(0.0, -worst)


def verify_conditional_expectation(alg, e, onto, module_gens=None, cp=True):
    """Residuals certifying `e` as a conditional expectation onto `onto`.

    `e` is a matrix on the coordinates of `alg`; `onto` a SubAlgebra.  The
    bimodule property is checked per module generator (the subalgebra's
    recorded generators, else its basis), which is equivalent on the generated
    algebra.
    """
    e = np.asarray(e, dtype=complex)
    q = onto.basis
    res = {
        "idempotent": snorm(e @ e - e),
        "into_range": snorm(e - q @ (q.conj().T @ e)),
        "fixes_range": snorm(e @ q - q),
        "unital": alg.norm(e @ alg.unit() - alg.unit()),
    }
    gens = module_gens
    if gens is None:
        gens = onto.generators if onto.generators else [
            q[:, j] for j in range(q.shape[1])
        ]
    bimod = 0.0
    for g in gens:
        lm = alg.lmul_matrix(g)
        rm = alg.rmul_matrix(g)
        bimod = max(bimod, snorm(e @ lm - lm @ e), snorm(e @ rm - rm @ e))
    res["bimodule"] = bimod
    if cp:
        res["cp"] = map_cp_defect(alg, alg, e)
    return res


def max_residual(cert):
    """Largest residual in a certificate dict.

    Keys starting with ``info_`` are measurements, not residuals, and are
    skipped; nested dicts are descended into.
    """
    worst = 0.0
    for k, v in cert.items():
        if k.startswith("info_"):
            continue
        if isinstance(v, dict):
            worst = max(worst, max_residual(v))
        else:
            worst = max(worst, float(v))
    return worst
