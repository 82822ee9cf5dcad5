"""Homogeneous self-dual primal-dual interior-point method for LP/SOCP.

Solves the pair

    primal:  min c'x   s.t.  A x = b,  G x + s = h,  s in K
    dual:    max -b'y - h'z   s.t.  A'y + G'z + c = 0,  z in K

where ``K`` is a nonnegative orthant of size ``l`` followed by second-order
cones of sizes ``q_dims``.  The method embeds both problems in a
homogeneous system with variables ``(x, y, z, s, tau, kappa)``, uses
Nesterov-Todd scaling and a Mehrotra predictor-corrector, and detects
infeasibility from the embedding.  Newton systems are solved through a
regularized quasi-definite KKT factorization with iterative refinement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels as K

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"


@dataclass
class IPMSettings:
    feastol: float = 1e-9
    abstol: float = 1e-9
    reltol: float = 1e-9
    # accepted when the method stalls before reaching the tight targets
    reduced_tol: float = 1e-6
    max_iter: int = 120
    regularization: float = 1e-10
    refinement: int = 4
    step_fraction: float = 0.99
    equilibrate: int = 15


@dataclass
class IPMResult:
    status: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    iterations: int
    pcost: float = math.nan
    dcost: float = math.nan
    pres: float = math.nan
    dres: float = math.nan
    gap: float = math.nan
    info: dict = field(default_factory=dict)


class _Layout:
    __slots__ = ("l", "q_starts", "q_dims", "m", "degree", "e")

    def __init__(self, l: int, q_dims):
        self.l = int(l)
        self.q_dims = np.asarray(q_dims, dtype=np.int64)
        self.q_starts = (self.l + np.concatenate(([0], np.cumsum(self.q_dims)[:-1]))).astype(np.int64) \
            if len(self.q_dims) else np.zeros(0, dtype=np.int64)
        self.m = self.l + int(self.q_dims.sum())
        self.degree = self.l + len(self.q_dims)
        e = np.zeros(self.m)
        e[: self.l] = 1.0
        e[self.q_starts] = 1.0
        self.e = e

    def args(self):
        return self.l, self.q_starts, self.q_dims


def _equilibrate(A, G, lay: _Layout, rounds: int):
    """Ruiz scaling; cone rows of one second-order cone share a factor."""
    n = A.shape[1]
    d = np.ones(n)
    ea = np.ones(A.shape[0])
    eg = np.ones(G.shape[0])
    if rounds <= 0 or n == 0:
        return A, G, d, ea, eg
    As, Gs = A.tocsc(copy=True), G.tocsc(copy=True)
    cone_of = None
    if len(lay.q_dims):
        cone_of = np.repeat(np.arange(len(lay.q_dims)), lay.q_dims)
    for _ in range(rounds):
        M = sp.vstack([As, Gs]).tocsc()
        col = np.sqrt(np.asarray(abs(M).max(axis=0).todense()).ravel())
        col[col == 0.0] = 1.0
        ra = np.sqrt(np.asarray(abs(As).max(axis=1).todense()).ravel()) if As.shape[0] else np.zeros(0)
        rg = np.asarray(abs(Gs).max(axis=1).todense()).ravel() if Gs.shape[0] else np.zeros(0)
        if cone_of is not None:
            blk = np.zeros(len(lay.q_dims))
            np.maximum.at(blk, cone_of, rg[lay.l:])
            rg[lay.l:] = blk[cone_of]
        rg = np.sqrt(rg)
        ra[ra == 0.0] = 1.0
        rg[rg == 0.0] = 1.0
        if max(np.abs(col - 1).max(initial=0), np.abs(ra - 1).max(initial=0), np.abs(rg - 1).max(initial=0)) < 1e-3:
            break
        Dc = sp.diags(1.0 / col)
        As = sp.diags(1.0 / ra) @ As @ Dc
        Gs = sp.diags(1.0 / rg) @ Gs @ Dc
        d /= col
        ea /= ra
        eg /= rg
    return As.tocsr(), Gs.tocsr(), d, ea, eg


class _KKT:
    """Factorization of [[dI, A', G'], [A, -dI, 0], [G, 0, -W^2 - dI]]."""

    def __init__(self, A, G, reg, refinement):
        self.A, self.G = A, G
        self.n, self.p, self.m = A.shape[1], A.shape[0], G.shape[0]
        self.reg = reg
        self.refinement = refinement
        Z = sp.csc_matrix
        self.top = sp.bmat([[Z((self.n, self.n)), A.T, G.T],
                            [A, Z((self.p, self.p)), Z((self.p, self.m))],
                            [G, Z((self.m, self.p)), Z((self.m, self.m))]], format="csc")
        self.lu = None
        self.W2 = None

    def factor(self, w2_triplets):
        n, p, m = self.n, self.p, self.m
        r, c, v = w2_triplets
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("non-finite cone scaling")
        self.W2 = sp.csc_matrix((v, (r, c)), shape=(m, m))
        N = n + p + m
        off = n + p
        lower = sp.csc_matrix((-v, (r + off, c + off)), shape=(N, N))
        self.exact = (self.top + lower).tocsc()
        dreg = np.concatenate([np.full(n, self.reg), np.full(p, -self.reg), np.full(m, -self.reg)])
        Kreg = (self.exact + sp.diags(dreg)).tocsc()
        self.lu = spla.splu(Kreg, permc_spec="COLAMD", diag_pivot_thresh=0.1)

    def solve(self, rhs):
        x = self.lu.solve(rhs)
        for _ in range(self.refinement):
            res = rhs - self.exact @ x
            if np.linalg.norm(res, np.inf) <= 1e-14 * (1.0 + np.linalg.norm(rhs, np.inf)):
                break
            x = x + self.lu.solve(res)
        return x


def solve_ipm(c, A, b, G, h, l, q_dims, settings: IPMSettings | None = None) -> IPMResult:
    """Run the interior-point method on the standard pair above."""
    st = settings or IPMSettings()
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    h = np.asarray(h, dtype=float)
    A = sp.csr_matrix(A, dtype=float)
    G = sp.csr_matrix(G, dtype=float)
    n, p, m = c.shape[0], A.shape[0], G.shape[0]
    lay = _Layout(l, q_dims)
    if lay.m != m:
        raise ValueError(f"cone layout covers {lay.m} rows but G has {m}")
    if A.shape[1] != n or G.shape[1] != n:
        raise ValueError("column mismatch between c, A and G")

    As, Gs, dcol, ea, eg = _equilibrate(A, G, lay, st.equilibrate)
    cs, bs, hs = c * dcol, b * ea, h * eg
    res = _run(cs, As, bs, Gs, hs, lay, st)
    # undo scaling
    res.x = res.x * dcol
    res.y = res.y * ea
    res.z = res.z * eg
    res.s = res.s / eg
    if res.status == OPTIMAL or res.status == LIMIT:
        res.pcost = float(c @ res.x)
        res.dcost = float(-(b @ res.y) - (h @ res.z))
        res.pres = float(max(np.linalg.norm(A @ res.x - b, np.inf) if p else 0.0,
                             np.linalg.norm(G @ res.x + res.s - h, np.inf) if m else 0.0))
        res.dres = float(np.linalg.norm(A.T @ res.y + G.T @ res.z + c, np.inf))
        res.gap = float(res.s @ res.z)
    return res


def _run(c, A, b, G, h, lay: _Layout, st: IPMSettings) -> IPMResult:
    n, p, m = c.shape[0], A.shape[0], G.shape[0]
    args = lay.args()
    kkt = _KKT(A, G, st.regularization, st.refinement)
    nb = max(1.0, math.sqrt(b @ b + h @ h))
    nc = max(1.0, float(np.linalg.norm(c)))

    def split(u):
        return u[:n], u[n:n + p], u[n + p:]

    # initial point from two least-squares style solves with W = I
    try:
        kkt.factor((np.arange(m, dtype=np.int64), np.arange(m, dtype=np.int64), np.ones(m)))
        x, _, zz = split(kkt.solve(np.concatenate([np.zeros(n), b, h])))
        s = -zz
        _, y, z = split(kkt.solve(np.concatenate([-c, np.zeros(p), np.zeros(m)])))
    except (RuntimeError, ValueError) as exc:
        return IPMResult(LIMIT, np.zeros(n), np.zeros(p), np.zeros(m), np.zeros(m), 0,
                         info={"error": f"initial factorization failed: {exc}"})
    for v in (s, z):
        me = K.min_eig(v, *args) if m else 1.0
        if me <= 1e-8 * max(1.0, float(np.linalg.norm(v))):
            v += (1.0 - me) * lay.e
    tau = kappa = 1.0

    best = None
    status = LIMIT
    info: dict = {}
    it = 0
    for it in range(st.max_iter + 1):
        rx = A.T @ y + G.T @ z + c * tau
        ry = A @ x - b * tau
        rz = G @ x + s - h * tau
        cx = float(c @ x)
        bh = float(b @ y + h @ z)
        rt = kappa + cx + bh
        sz = float(s @ z)
        mu = (sz + tau * kappa) / (lay.degree + 1)
        pres = max(np.linalg.norm(ry), np.linalg.norm(rz)) / tau / nb
        dres = np.linalg.norm(rx) / tau / nc
        pcost, dcost = cx / tau, -bh / tau
        gap = sz / tau ** 2
        relgap = abs(pcost - dcost) / max(1.0, abs(pcost), abs(dcost))
        gapm = min(gap / max(1.0, abs(pcost), abs(dcost)), relgap)
        score = max(pres, dres, gapm)
        if best is None or score < best[0]:
            best = (score, x / tau, y / tau, z / tau, s / tau, pres, dres, gapm)
        if pres <= st.feastol and dres <= st.feastol and (gap <= st.abstol or gapm <= st.reltol):
            status = OPTIMAL
            break
        if bh < 0 and np.linalg.norm(A.T @ y + G.T @ z) / (-bh) <= st.feastol * nc:
            status = INFEASIBLE
            info["certificate"] = (y / -bh, z / -bh)
            break
        if cx < 0 and max(np.linalg.norm(A @ x), np.linalg.norm(G @ x + s)) / (-cx) <= st.feastol * nb:
            status = UNBOUNDED
            info["ray"] = (x / -cx, s / -cx)
            break
        if it == st.max_iter:
            break
        try:
            lp_w, wbar, eta, lam = K.nt_scaling(s, z, *args)
            kkt.factor(K.w2_blocks(lp_w, wbar, eta, *args))
            u1 = kkt.solve(np.concatenate([-c, b, h]))
        except (RuntimeError, ValueError, FloatingPointError) as exc:
            info["error"] = f"factorization failed at iteration {it}: {exc}"
            break
        u1x, u1y, u1z = split(u1)
        q1 = float(c @ u1x + b @ u1y + h @ u1z)

        def direction(eta_r, ds, dk):
            t = K.jordan_div(lam, ds, *args)
            wt = K.scale(t, lp_w, wbar, eta, *args, False)
            u2 = kkt.solve(np.concatenate([-eta_r * rx, -eta_r * ry, -eta_r * rz - wt]))
            u2x, u2y, u2z = split(u2)
            q2 = float(c @ u2x + b @ u2y + h @ u2z)
            dtau = (-eta_r * rt - dk / tau - q2) / (q1 - kappa / tau)
            dx, dy, dz = u2x + dtau * u1x, u2y + dtau * u1y, u2z + dtau * u1z
            dsv = K.scale(t - K.scale(dz, lp_w, wbar, eta, *args, False), lp_w, wbar, eta, *args, False)
            dkap = (dk - kappa * dtau) / tau
            return dx, dy, dz, dsv, dtau, dkap

        def step_len(dsv, dz, dtau, dkap):
            a = min(K.max_step(s, dsv, *args), K.max_step(z, dz, *args)) if m else math.inf
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        lamlam = K.jordan_prod(lam, lam, *args)
        aff = direction(1.0, -lamlam, -tau * kappa)
        a_aff = min(1.0, step_len(aff[3], aff[2], aff[4], aff[5]))
        sigma = (1.0 - a_aff) ** 3
        corr = K.jordan_prod(K.scale(aff[3], lp_w, wbar, eta, *args, True),
                             K.scale(aff[2], lp_w, wbar, eta, *args, False), *args)
        ds = -lamlam - corr + sigma * mu * lay.e
        dk = -tau * kappa - aff[4] * aff[5] + sigma * mu
        dx, dy, dz, dsv, dtau, dkap = direction(1.0 - sigma, ds, dk)
        a = min(1.0, st.step_fraction * step_len(dsv, dz, dtau, dkap))
        if not np.isfinite(a) or a <= 1e-12:
            info["error"] = f"step length collapsed at iteration {it}"
            break
        x = x + a * dx
        y = y + a * dy
        z = z + a * dz
        s = s + a * dsv
        tau = tau + a * dtau
        kappa = kappa + a * dkap
        if not (np.all(np.isfinite(x)) and math.isfinite(tau)):
            info["error"] = "non-finite iterate"
            break
        # renormalize the embedding so the iterates stay O(1)
        nrm = max(tau, kappa)
        if nrm > 1e6 or nrm < 1e-6:
            x, y, z, s, tau, kappa = x / nrm, y / nrm, z / nrm, s / nrm, tau / nrm, kappa / nrm

    if status == OPTIMAL:
        return IPMResult(OPTIMAL, x / tau, y / tau, z / tau, s / tau, it, info=info)
    if status == INFEASIBLE:
        cy, cz = info["certificate"]
        return IPMResult(INFEASIBLE, np.full(n, np.nan), cy, cz, np.full(m, np.nan), it, info=info)
    if status == UNBOUNDED:
        rx_, rs_ = info["ray"]
        return IPMResult(UNBOUNDED, rx_, np.full(p, np.nan), np.full(m, np.nan), rs_, it, info=info)
    score, bx, by, bz, bs, bp, bd, bg = best
    info.update(best_pres=bp, best_dres=bd, best_gap=bg)
    if max(bp, bd, bg) <= st.reduced_tol:
        info["reduced_accuracy"] = True
        return IPMResult(OPTIMAL, bx, by, bz, bs, it, info=info)
    return IPMResult(LIMIT, bx, by, bz, bs, it, info=info)
