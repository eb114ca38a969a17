"""Katz operations: addition, convolution, K-/L-reduction, middle
convolution, and the combined "middle convolution with additions at one
singular point" for Okubo systems and their monodromy tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BlockStructure,
    KernelError,
    MonodromyTuple,
    OkuboSystem,
    RankError,
    SchlesingerSystem,
    ShapeError,
    SingularBlock,
    StructureError,
    ZeroScalar,
    as_cmatrix,
    matrix_scale,
    matrix_to_json,
    numerical_rank,
    rank_factorization,
    right_inverse,
)

KERNEL_TOL = 1e-8
FACTOR_TOL = 1e-9


# ---------------------------------------------------------------------------
# witnesses

@dataclass
class ReductionWitness:
    """Factors recorded while performing a middle convolution."""

    parameter: complex                 # mu (additive) or lambda (multiplicative)
    factors_p: list = field(default_factory=list)   # per-point P_k
    factors_q: list = field(default_factory=list)   # per-point Q_k
    factors_s: list = field(default_factory=list)   # per-point right inverses
    ranks: list = field(default_factory=list)       # n_k = rank of A_k / M_k - 1
    p0: np.ndarray | None = None
    q0: np.ndarray | None = None
    s0: np.ndarray | None = None
    m: int = 0                          # rank of the L-reduction
    tol: float = FACTOR_TOL

    @property
    def n_tilde(self) -> int:
        return sum(self.ranks)

    def k_blocks(self) -> BlockStructure:
        return BlockStructure(tuple(r for r in self.ranks if r > 0))

    def to_json(self) -> dict:
        return {
            "parameter": [complex(self.parameter).real, complex(self.parameter).imag],
            "ranks": list(self.ranks),
            "m": self.m,
            "tol": self.tol,
            "P": [matrix_to_json(p) for p in self.factors_p],
            "Q": [matrix_to_json(q) for q in self.factors_q],
            "P0": matrix_to_json(self.p0) if self.p0 is not None else None,
            "Q0": matrix_to_json(self.q0) if self.q0 is not None else None,
        }


@dataclass
class McAddWitness:
    """Rank-complement factors and gauges for a mc-with-additions step."""

    k: int
    c: complex | None = None           # additive parameters ...
    rho: complex | None = None
    s: complex | None = None           # ... or multiplicative ones
    lam: complex | None = None
    xi: np.ndarray | None = None       # stacked (n - n_k) x l
    eta: np.ndarray | None = None      # stacked l x (n - n_k)
    gauge: np.ndarray | None = None    # G (additive) or script-G (multiplicative)
    gq: np.ndarray | None = None

    def to_json(self) -> dict:
        def c2(v):
            return None if v is None else [complex(v).real, complex(v).imag]

        def m2(v):
            return None if v is None else matrix_to_json(v)

        return {
            "k": self.k,
            "c": c2(self.c), "rho": c2(self.rho),
            "s": c2(self.s), "lambda": c2(self.lam),
            "xi": m2(self.xi), "eta": m2(self.eta),
            "gauge": m2(self.gauge), "gq": m2(self.gq),
        }


# ---------------------------------------------------------------------------
# additions

def add_system(sys: SchlesingerSystem, a) -> SchlesingerSystem:
    """add_a: shift each residue A_k by the scalar a_k."""
    if len(a) != sys.r:
        raise ShapeError("need one shift per singular point")
    eye = np.eye(sys.n, dtype=complex)
    return SchlesingerSystem(
        points=sys.points,
        residues=tuple(ak + complex(sk) * eye for ak, sk in zip(sys.residues, a)),
    )


def add_monodromy(mon: MonodromyTuple, lams) -> MonodromyTuple:
    """Add_lambda: scale each monodromy matrix by the nonzero scalar lambda_k."""
    if len(lams) != mon.r:
        raise ShapeError("need one scalar per matrix")
    if any(complex(l) == 0 for l in lams):
        raise ZeroScalar("addition scalars must be nonzero")
    return MonodromyTuple(
        matrices=tuple(complex(l) * m for l, m in zip(lams, mon.matrices)),
        config=mon.config,
        blocks=mon.blocks,
    )


# ---------------------------------------------------------------------------
# middle convolution of a Schlesinger system (three steps)

def convolve_system(sys: SchlesingerSystem, mu) -> OkuboSystem:
    """c_mu: the dimension-nr Okubo system with B_k zero outside block row k."""
    n, r = sys.n, sys.r
    mu = complex(mu)
    b = np.zeros((n * r, n * r), dtype=complex)
    for i in range(r):
        for j in range(r):
            blk = sys.residues[j].copy()
            if i == j:
                blk += mu * np.eye(n)
            b[i * n:(i + 1) * n, j * n:(j + 1) * n] = blk
    return OkuboSystem(
        blocks=BlockStructure((n,) * r), points=sys.points, A=b
    )


def _factor_residues(sys: SchlesingerSystem, tol: float):
    ps, qs, ranks = [], [], []
    for a in sys.residues:
        p, q, rk = rank_factorization(a, tol)
        ps.append(p)
        qs.append(q)
        ranks.append(rk)
    return ps, qs, ranks


def k_reduce_system(conv: OkuboSystem, w: ReductionWitness) -> SchlesingerSystem:
    """K-reduction: blocks Q_i P_j + mu delta_ij on the nonzero ranks."""
    r = conv.r
    if len(w.factors_p) != r or len(w.factors_q) != r:
        raise ShapeError("witness factor count does not match the system")
    n = conv.blocks.sizes[0]
    for p, q, rk in zip(w.factors_p, w.factors_q, w.ranks):
        if p.shape != (n, rk) or q.shape != (rk, n):
            raise ShapeError("witness factor shapes inconsistent with ranks")
    mu = complex(w.parameter)
    keep = [i for i in range(r) if w.ranks[i] > 0]
    nt = sum(w.ranks)
    bt = np.zeros((nt, nt), dtype=complex)
    offs = np.concatenate([[0], np.cumsum([w.ranks[i] for i in keep])])
    for a, i in enumerate(keep):
        for b_, j in enumerate(keep):
            blk = w.factors_q[i] @ w.factors_p[j]
            if i == j:
                blk += mu * np.eye(w.ranks[i])
            bt[offs[a]:offs[a + 1], offs[b_]:offs[b_ + 1]] = blk
    # residues of the K-reduced Schlesinger system (block rows of bt),
    # reported for every original point; dropped blocks give zero residues
    residues = []
    for i in range(r):
        res = np.zeros((nt, nt), dtype=complex)
        if w.ranks[i] > 0:
            a = keep.index(i)
            res[offs[a]:offs[a + 1], :] = bt[offs[a]:offs[a + 1], :]
        residues.append(res)
    return SchlesingerSystem(points=conv.points, residues=tuple(residues))


def l_reduce_system(ksys: SchlesingerSystem, mu, tol: float = FACTOR_TOL):
    """L-reduction: B-hat_k = Q_0 E_k P_0 from B-tilde = P_0 Q_0.

    Returns (SchlesingerSystem, (P0, Q0, S0, m)).
    """
    bt = sum(ksys.residues)
    p0, q0, m = rank_factorization(bt, tol)
    res = matrix_scale(bt - p0 @ q0)
    if res > 1e-8 * max(1.0, matrix_scale(bt)):
        raise RankError(f"L-reduction factor residual too large: {res}")
    s0 = right_inverse(q0) if m > 0 else np.zeros((bt.shape[0], 0), dtype=complex)
    residues = []
    for a in ksys.residues:
        # E_k selects the rows where residue k lives (its nonzero block row)
        rows = np.any(a != 0, axis=1)
        ek_p0 = np.where(rows[:, None], p0, 0.0)
        residues.append(q0 @ ek_p0)
    return (
        SchlesingerSystem(points=ksys.points, residues=tuple(residues)),
        (p0, q0, s0, m),
    )


def middle_convolution_system(sys: SchlesingerSystem, mu, tol: float = FACTOR_TOL):
    """mc_mu: convolution, K-reduction, L-reduction; returns (system, witness)."""
    mu = complex(mu)
    ps, qs, ranks = _factor_residues(sys, tol)
    w = ReductionWitness(parameter=mu, factors_p=ps, factors_q=qs,
                         ranks=ranks, tol=tol)
    w.factors_s = [right_inverse(q) if r > 0 else np.zeros((sys.n, 0), complex)
                   for q, r in zip(qs, ranks)]
    conv = convolve_system(sys, mu)
    ksys = k_reduce_system(conv, w)
    lsys, (p0, q0, s0, m) = l_reduce_system(ksys, mu, tol)
    w.p0, w.q0, w.s0, w.m = p0, q0, s0, m
    return lsys, w


# ---------------------------------------------------------------------------
# middle convolution of a monodromy tuple

def convolve_monodromy(mon: MonodromyTuple, lam) -> MonodromyTuple:
    """C_lambda: the dimension-nr convolution of a monodromy tuple."""
    lam = complex(lam)
    if lam == 0:
        raise ZeroScalar("convolution parameter must be nonzero")
    n, r = mon.n, mon.r
    eye = np.eye(n, dtype=complex)
    mats = []
    for k in range(r):
        nk = np.eye(n * r, dtype=complex)
        for j in range(r):
            if j < k:
                blk = lam * (mon.matrices[j] - eye)
            elif j == k:
                blk = lam * mon.matrices[k]
            else:
                blk = mon.matrices[j] - eye
            nk[k * n:(k + 1) * n, j * n:(j + 1) * n] = blk
        mats.append(nk)
    return MonodromyTuple(matrices=tuple(mats), config=mon.config,
                          blocks=BlockStructure((n,) * r))


def middle_convolution_monodromy(mon: MonodromyTuple, lam, tol: float = FACTOR_TOL):
    """MC_lambda: K-reduction by M_k - 1 = P_k Q_k, then L-reduction by
    N0-tilde = N1-tilde ... Nr-tilde.  Returns (tuple, witness)."""
    lam = complex(lam)
    if lam == 0:
        raise ZeroScalar("convolution parameter must be nonzero")
    n, r = mon.n, mon.r
    eye = np.eye(n, dtype=complex)
    ps, qs, ss, ranks = [], [], [], []
    for m in mon.matrices:
        p, q, rk = rank_factorization(m - eye, tol)
        ps.append(p)
        qs.append(q)
        ss.append(right_inverse(q) if rk > 0 else np.zeros((n, 0), complex))
        ranks.append(rk)
    w = ReductionWitness(parameter=lam, factors_p=ps, factors_q=qs,
                         factors_s=ss, ranks=ranks, tol=tol)
    keep = [i for i in range(r) if ranks[i] > 0]
    nt = sum(ranks)
    offs = np.concatenate([[0], np.cumsum([ranks[i] for i in keep])])
    n_tildes = []
    for pos, k in enumerate(keep):
        nk = np.eye(nt, dtype=complex)
        for pos_j, j in enumerate(keep):
            blk = qs[k] @ ps[j]
            if j < k:
                blk = lam * blk
            elif j == k:
                blk = lam * (blk + np.eye(ranks[k]))
            sl_i = slice(offs[pos], offs[pos + 1])
            sl_j = slice(offs[pos_j], offs[pos_j + 1])
            if j == k:
                nk[sl_i, sl_j] = blk
            else:
                nk[sl_i, sl_j] += blk
        n_tildes.append(nk)
    n0 = np.eye(nt, dtype=complex)
    for nk in n_tildes:
        n0 = n0 @ nk
    p0, q0, m = rank_factorization(n0 - np.eye(nt), tol)
    s0 = right_inverse(q0) if m > 0 else np.zeros((nt, 0), complex)
    w.p0, w.q0, w.s0, w.m = p0, q0, s0, m
    reduced = [q0 @ nk @ s0 for nk in n_tildes]
    out = []
    pos = 0
    for i in range(r):
        if ranks[i] > 0:
            out.append(reduced[pos])
            pos += 1
        else:
            out.append(np.eye(m, dtype=complex))
    return MonodromyTuple(matrices=tuple(out), config=mon.config), w


# ---------------------------------------------------------------------------
# rank-one (rank-l) complements: X_ij = X_ik X_kk^{-1} X_kj + xi_i eta_j

def complement_factorization(x, blocks: BlockStructure, k: int,
                             tol: float = FACTOR_TOL):
    """Factor the Schur complement of block k of X as xi eta.

    Returns (xi, eta, l) with xi of shape (n - n_k, l) and eta (l, n - n_k),
    both of maximal rank, where l = rank X - n_k.  Raises SingularBlock if
    X_kk is singular at tolerance, RankError if rank X < n_k.
    """
    x = as_cmatrix(x)
    n = blocks.n
    if x.shape != (n, n):
        raise ShapeError("X must match the block structure")
    sl_k = blocks.block_slice(k)
    xkk = x[sl_k, sl_k]
    scale = max(1.0, matrix_scale(x))
    if numerical_rank(xkk, tol) < blocks.sizes[k] or \
            np.linalg.svd(xkk, compute_uv=False)[-1] <= tol * scale:
        raise SingularBlock(f"X_kk singular at tolerance for k={k}")
    rank_x = numerical_rank(x, tol)
    if rank_x < blocks.sizes[k]:
        raise RankError("rank X < n_k")
    others = np.concatenate([np.arange(n)[blocks.block_slice(i)]
                             for i in range(blocks.r) if i != k]) \
        if blocks.r > 1 else np.array([], dtype=int)
    if others.size == 0:
        return (np.zeros((0, 0), complex), np.zeros((0, 0), complex), 0)
    xoo = x[np.ix_(others, others)]
    xok = x[np.ix_(others, np.arange(n)[sl_k])]
    xko = x[np.ix_(np.arange(n)[sl_k], others)]
    schur = xoo - xok @ np.linalg.solve(xkk, xko)
    xi, eta, l = rank_factorization(schur, tol)
    if l != rank_x - blocks.sizes[k]:
        # fall back on the Schur rank itself; the identity below is what
        # callers rely on, and the two agree except at threshold boundaries
        l = xi.shape[1]
    res = matrix_scale(schur - xi @ eta)
    if res > max(tol, 1e-9) * scale:
        raise RankError(f"complement factorization residual {res}")
    return xi, eta, l


def split_rows(m: np.ndarray, blocks: BlockStructure, skip: int):
    """Rows of m split per block, skipping block ``skip``."""
    out = {}
    pos = 0
    for i in range(blocks.r):
        if i == skip:
            continue
        out[i] = m[pos:pos + blocks.sizes[i]]
        pos += blocks.sizes[i]
    return out


def split_cols(m: np.ndarray, blocks: BlockStructure, skip: int):
    out = {}
    pos = 0
    for j in range(blocks.r):
        if j == skip:
            continue
        out[j] = m[:, pos:pos + blocks.sizes[j]]
        pos += blocks.sizes[j]
    return out


# ---------------------------------------------------------------------------
# middle convolution with additions at a singular point (system version)

def mc_add_system(sys: OkuboSystem, k: int, c, rho, xi_eta=None,
                  tol: float = KERNEL_TOL):
    """add_(0..rho..0) o mc_(-rho-c) o add_(0..c..0) at point k, assembled
    directly in Okubo form.  Returns (OkuboSystem, McAddWitness).

    ``xi_eta`` optionally supplies the rank-complement factors (used to pin
    the gauge when reproducing canonical forms); by default they come from
    :func:`complement_factorization`.
    """
    c, rho = complex(c), complex(rho)
    blocks, a = sys.blocks, sys.A
    n, r = blocks.n, blocks.r
    if not 0 <= k < r:
        raise ShapeError(f"block index k={k} out of range")
    scale = max(1.0, matrix_scale(a))
    ak_shift = sys.residue(k) + c * np.eye(n)
    if np.linalg.svd(ak_shift, compute_uv=False)[-1] <= tol * scale:
        raise KernelError("Ker(A_k + c) != 0")
    akk = sys.block(k, k)
    if np.linalg.svd(akk - rho * np.eye(blocks.sizes[k]),
                     compute_uv=False)[-1] <= tol * scale:
        raise KernelError("Ker(A_kk - rho) != 0")

    if xi_eta is None:
        xi, eta, l = complement_factorization(
            a - rho * np.eye(n), blocks, k, tol=min(tol, FACTOR_TOL))
    else:
        xi, eta = (as_cmatrix(xi_eta[0]), as_cmatrix(xi_eta[1]))
        l = xi.shape[1]
        if eta.shape[0] != l or xi.shape[0] != n - blocks.sizes[k] \
                or eta.shape[1] != n - blocks.sizes[k]:
            raise ShapeError("supplied xi/eta have inconsistent shapes")

    nk = blocks.sizes[k]
    new_sizes = list(blocks.sizes)
    new_sizes[k] = nk + l
    new_blocks = BlockStructure(tuple(new_sizes))
    nm = n + l
    amc = np.zeros((nm, nm), dtype=complex)

    akk_rho_inv = np.linalg.inv(akk - rho * np.eye(nk))
    xi_rows = split_rows(xi, blocks, k)       # xi_i, i != k
    eta_cols = split_cols(eta, blocks, k)     # eta_j, j != k

    def ns(i):   # new slice of block i
        return new_blocks.block_slice(i)

    ko = new_blocks.offset(k)                # start of (k-old | k-new)
    sl_ko = slice(ko, ko + nk)
    sl_kn = slice(ko + nk, ko + nk + l)

    for i in range(r):
        for j in range(r):
            if i == k or j == k:
                continue
            blk = sys.block(i, j).astype(complex)
            if i == j:
                blk = blk - (rho + c) * np.eye(blocks.sizes[i])
            amc[ns(i), ns(j)] = blk
    for i in range(r):
        if i == k:
            continue
        amc[ns(i), sl_ko] = sys.block(i, k) @ (akk + c * np.eye(nk)) @ akk_rho_inv
        if l:
            amc[ns(i), sl_kn] = (rho + c) * xi_rows[i]
    for j in range(r):
        if j == k:
            continue
        amc[sl_ko, ns(j)] = sys.block(k, j)
        if l:
            amc[sl_kn, ns(j)] = eta_cols[j]
    amc[sl_ko, sl_ko] = akk
    if l:
        amc[sl_kn, sl_kn] = rho * np.eye(l)

    g = _mc_add_gauge(sys, k, rho, xi, akk_rho_inv, new_blocks, l)
    gq = _mc_add_gq(sys, k, c, rho, xi, eta, akk_rho_inv, new_blocks, l)
    witness = McAddWitness(k=k, c=c, rho=rho, xi=xi, eta=eta, gauge=g, gq=gq)
    return OkuboSystem(blocks=new_blocks, points=sys.points, A=amc), witness


def _mc_add_gauge(sys, k, rho, xi, akk_rho_inv, new_blocks, l):
    n, r = sys.n, sys.r
    nk = sys.blocks.sizes[k]
    nm = n + l
    g = np.eye(nm, dtype=complex)
    ko = new_blocks.offset(k)
    sl_ko = slice(ko, ko + nk)
    sl_kn = slice(ko + nk, ko + nk + l)
    xi_rows = split_rows(xi, sys.blocks, k)
    for i in range(r):
        if i == k:
            continue
        g[new_blocks.block_slice(i), sl_ko] = sys.block(i, k) @ akk_rho_inv
        if l:
            g[new_blocks.block_slice(i), sl_kn] = xi_rows[i]
    return g


def _mc_add_gq(sys, k, c, rho, xi, eta, akk_rho_inv, new_blocks, l):
    """The combined transformation W = GQ Z from the nr-dimensional
    convolution down to the Okubo form (recorded for audit)."""
    n, r = sys.n, sys.r
    nk = sys.blocks.sizes[k]
    nm = n + l
    gq = np.zeros((nm, n * r), dtype=complex)
    # Q_0 = rows (A_k1 ... A_kk - rho ... A_kr ; eta_1 ... 0 ... eta_r)
    q0 = np.zeros((nk + l, n), dtype=complex)
    q0[:nk] = sys.A[sys.blocks.block_slice(k), :]
    q0[:nk, sys.blocks.block_slice(k)] = sys.block(k, k) - rho * np.eye(nk)
    if l:
        cols = split_cols(eta, sys.blocks, k)
        for j in range(r):
            if j != k:
                q0[nk:, sys.blocks.block_slice(j)] = cols[j]
    for i in range(r):
        sl_new = new_blocks.block_slice(i)
        if i == k:
            gq[sl_new, k * n:(k + 1) * n] = q0
            continue
        qi = sys.A[sys.blocks.block_slice(i), :]
        gq[sl_new, i * n:(i + 1) * n] = qi
        blk = np.zeros((sys.blocks.sizes[i], n), dtype=complex)
        blk[:, sys.blocks.block_slice(i)] = -rho * np.eye(sys.blocks.sizes[i])
        gq[sl_new, k * n:(k + 1) * n] = blk
    return gq


# ---------------------------------------------------------------------------
# middle convolution with additions (monodromy version)

def is_okubo_type(mon: MonodromyTuple, blocks: BlockStructure,
                  tol: float = 1e-9) -> bool:
    """Each M_i equals the identity outside its block row i."""
    if blocks.n != mon.n or blocks.r != mon.r:
        return False
    eye = np.eye(mon.n, dtype=complex)
    for i, m in enumerate(mon.matrices):
        mask = np.ones((mon.n, mon.n), dtype=bool)
        mask[blocks.block_slice(i), :] = False
        if matrix_scale(np.where(mask, m - eye, 0.0)) > tol:
            return False
    return True


def mc_add_monodromy(mon: MonodromyTuple, blocks: BlockStructure, k: int,
                     s, lam, xi_eta=None, tol: float = KERNEL_TOL,
                     structure_tol: float = 1e-9):
    """Add_(1..1/lam..1) o MC_(lam/s) o Add_(1..s..1) on an Okubo-type tuple,
    assembled directly in Okubo-type form.  Returns (tuple, witness).

    The (k2) blocks for r > 2 are validated numerically only (r = 2 covers
    all canonical chains).
    """
    s, lam = complex(s), complex(lam)
    if s == 0 or lam == 0:
        raise ZeroScalar("s and lambda must be nonzero")
    if not is_okubo_type(mon, blocks, tol=structure_tol):
        raise StructureError("input tuple is not of Okubo type")
    n, r = mon.n, mon.r
    if not 0 <= k < r:
        raise ShapeError(f"block index k={k} out of range")
    nk = blocks.sizes[k]

    m0k = lam * np.eye(n, dtype=complex)
    for j in range(k + 1, r):
        m0k = m0k @ mon.matrices[j]
    for j in range(0, k + 1):
        m0k = m0k @ mon.matrices[j]

    x = m0k - np.eye(n)
    sl_k = blocks.block_slice(k)
    xkk = x[sl_k, sl_k]
    scale = max(1.0, matrix_scale(x))
    if np.linalg.svd(xkk, compute_uv=False)[-1] <= tol * scale:
        raise SingularBlock("M^(k)_kk - 1 singular at tolerance")
    if xi_eta is None:
        xi, eta, l = complement_factorization(x, blocks, k,
                                              tol=min(tol, FACTOR_TOL))
    else:
        xi, eta = as_cmatrix(xi_eta[0]), as_cmatrix(xi_eta[1])
        l = xi.shape[1]

    new_sizes = list(blocks.sizes)
    new_sizes[k] = nk + l
    new_blocks = BlockStructure(tuple(new_sizes))
    nm = n + l
    ko = new_blocks.offset(k)
    sl_ko = slice(ko, ko + nk)
    sl_kn = slice(ko + nk, ko + nk + l)

    xkk_inv = np.linalg.inv(xkk)
    m0k_inv = np.linalg.inv(m0k)
    xi_rows = split_rows(xi, blocks, k)
    eta_cols = split_cols(eta, blocks, k)

    def mij(i, j):
        return mon.matrices[i][blocks.block_slice(i), blocks.block_slice(j)]

    def m0k_blk(i, j):
        return m0k[blocks.block_slice(i), blocks.block_slice(j)]

    def m0k_inv_blk(i, j):
        return m0k_inv[blocks.block_slice(i), blocks.block_slice(j)]

    mats = []
    for i in range(r):
        mi = np.eye(nm, dtype=complex)
        sl_new_i = new_blocks.block_slice(i)
        if i == k:
            # two block rows: (k-old) and (k-new)
            for j in range(r):
                if j == k:
                    continue
                fac = lam / s if j < k else 1.0
                mi[sl_ko, new_blocks.block_slice(j)] = fac * mij(k, j)
                fac2 = 1.0 / s if j < k else 1.0 / lam
                if l:
                    mi[sl_kn, new_blocks.block_slice(j)] = fac2 * eta_cols[j]
            mi[sl_ko, sl_ko] = mij(k, k)
            mi[sl_ko, sl_kn] = 0.0
            if l:
                mi[sl_kn, sl_ko] = 0.0
                mi[sl_kn, sl_kn] = (1.0 / lam) * np.eye(l)
        else:
            for j in range(r):
                if j == k:
                    continue
                fac = lam / s if j <= i else 1.0
                mi[sl_new_i, new_blocks.block_slice(j)] = fac * mij(i, j)
            corr = (m0k_blk(k, k) - (lam / s) * np.eye(nk)) @ xkk_inv
            if i < k:
                mi[sl_new_i, sl_ko] = (s / lam) * mij(i, k) @ corr
                if l:
                    acc = -xi_rows[i].copy()
                    for j in range(i + 1, k):
                        acc = acc + mij(i, j) @ xi_rows[j]
                    mi[sl_new_i, sl_kn] = (1.0 - s / lam) * acc
            else:
                mi[sl_new_i, sl_ko] = mij(i, k) @ corr
                if l:
                    acc = np.zeros((blocks.sizes[i], l), dtype=complex)
                    for j in range(k + 1, i + 1):
                        inner = np.zeros((blocks.sizes[j], l), dtype=complex)
                        for p in range(r):
                            if p != k:
                                inner = inner + m0k_inv_blk(j, p) @ xi_rows[p]
                        acc = acc + mij(i, j) @ inner
                    mi[sl_new_i, sl_kn] = lam * (1.0 - lam / s) * acc
        mats.append(mi)

    gauge = _mc_add_mono_gauge(mon, blocks, k, s, lam, m0k, m0k_inv,
                               xkk_inv, xi, new_blocks, l)
    witness = McAddWitness(k=k, s=s, lam=lam, xi=xi, eta=eta, gauge=gauge)
    out = MonodromyTuple(matrices=tuple(mats), config=mon.config,
                         blocks=new_blocks)
    return out, witness


def _mc_add_mono_gauge(mon, blocks, k, s, lam, m0k, m0k_inv, xkk_inv, xi,
                       new_blocks, l):
    """The script-G conjugation used to restore Okubo type (audit record)."""
    n, r = mon.n, mon.r
    nk = blocks.sizes[k]
    nm = n + l
    ko = new_blocks.offset(k)
    sl_kcol = slice(ko, ko + nk + l)
    g = np.eye(nm, dtype=complex)
    # P_0^(k) rows: (M^(k)_ik (M^(k)_kk - 1)^{-1} | xi_i), row k = (1 | 0)
    xi_rows = split_rows(xi, blocks, k) if l else {}
    for i in range(r):
        if i == k:
            continue
        row = np.zeros((blocks.sizes[i], nk + l), dtype=complex)
        row[:, :nk] = m0k[blocks.block_slice(i), blocks.block_slice(k)] @ xkk_inv
        if l:
            row[:, nk:] = xi_rows[i]
        if i < k:
            g[new_blocks.block_slice(i), sl_kcol] = (s / lam) * row
        else:
            # lam * (M_0^(k))^{-1} row i times P_0^(k)
            p0 = np.zeros((n, nk + l), dtype=complex)
            for p in range(r):
                if p == k:
                    continue
                p0[blocks.block_slice(p), :nk] = \
                    m0k[blocks.block_slice(p), blocks.block_slice(k)] @ xkk_inv
                if l:
                    p0[blocks.block_slice(p), nk:] = xi_rows[p]
            p0[blocks.block_slice(k), :nk] = np.eye(nk)
            g[new_blocks.block_slice(i), sl_kcol] = \
                lam * m0k_inv[blocks.block_slice(i), :] @ p0
    return g
