"""Cone kernels in vectorized numpy (reference implementation).

The cone is a product of a nonnegative orthant of size ``l`` followed by
second-order cones whose first coordinates sit at ``q_starts`` with sizes
``q_dims``.  Second-order cones of equal dimension are processed together
as a 2-D gather, so the cost per call is a handful of numpy operations per
distinct cone dimension.

Every function has the same signature as its compiled counterpart in
``_kernels.pyx``.
"""
from __future__ import annotations

import numpy as np

_GROUPS: dict = {}


def _groups(q_starts, q_dims):
    """Index matrices grouping cones of equal dimension (cached per layout)."""
    key = (q_starts.tobytes(), q_dims.tobytes())
    hit = _GROUPS.get(key)
    if hit is not None:
        return hit
    out = []
    for d in np.unique(q_dims):
        which = np.flatnonzero(q_dims == d)
        idx = q_starts[which][:, None] + np.arange(d)[None, :]
        out.append((which, idx))
    if len(_GROUPS) > 64:
        _GROUPS.clear()
    _GROUPS[key] = out
    return out


def _jnorm(u):
    # sqrt(u0^2 - |u1|^2) row-wise, for rows strictly inside the cone
    return np.sqrt(np.maximum(u[:, 0] ** 2 - np.einsum("ij,ij->i", u[:, 1:], u[:, 1:]), 0.0))


def nt_scaling(s, z, l, q_starts, q_dims):
    """Nesterov-Todd scaling of an interior pair ``(s, z)``.

    Returns ``(lp_w, wbar, eta, lam)``: the orthant scaling ``sqrt(s/z)``,
    the concatenated normalized scaling points of the second-order cones,
    their scale factors, and the scaled point ``lam = W z = W^{-1} s``.
    """
    m = s.shape[0]
    lam = np.empty(m)
    lp_w = np.sqrt(s[:l] / z[:l])
    lam[:l] = np.sqrt(s[:l] * z[:l])
    nq = q_dims.shape[0]
    wbar = np.empty(int(q_dims.sum()))
    eta = np.empty(nq)
    woff = np.concatenate(([0], np.cumsum(q_dims)[:-1])).astype(np.int64) if nq else q_dims
    for which, idx in _groups(q_starts, q_dims):
        S, Z = s[idx], z[idx]
        sn, zn = _jnorm(S), _jnorm(Z)
        Sb, Zb = S / sn[:, None], Z / zn[:, None]
        gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", Sb, Zb)))
        Zb[:, 1:] *= -1.0
        W = (Sb + Zb) / (2.0 * gamma[:, None])
        et = np.sqrt(sn / zn)
        eta[which] = et
        wbar[woff[which][:, None] + np.arange(idx.shape[1])[None, :]] = W
        lam[idx] = _apply_L(W, Z, False) * et[:, None]
    return lp_w, wbar, eta, lam


def _apply_L(W, V, inverse):
    w0 = W[:, 0]
    w1 = W[:, 1:]
    v0 = V[:, 0]
    v1 = V[:, 1:]
    dot = np.einsum("ij,ij->i", w1, v1)
    out = np.empty_like(V)
    if not inverse:
        out[:, 0] = w0 * v0 + dot
        out[:, 1:] = v1 + ((v0 + dot / (1.0 + w0))[:, None]) * w1
    else:
        out[:, 0] = w0 * v0 - dot
        out[:, 1:] = v1 + ((-v0 + dot / (1.0 + w0))[:, None]) * w1
    return out


def scale(v, lp_w, wbar, eta, l, q_starts, q_dims, inverse):
    """Apply ``W`` (or ``W^{-1}`` when ``inverse``) to ``v``."""
    out = np.empty_like(v)
    out[:l] = v[:l] / lp_w if inverse else v[:l] * lp_w
    if q_dims.shape[0]:
        woff = np.concatenate(([0], np.cumsum(q_dims)[:-1]))
        for which, idx in _groups(q_starts, q_dims):
            W = wbar[woff[which][:, None] + np.arange(idx.shape[1])[None, :]]
            r = _apply_L(W, v[idx], inverse)
            f = 1.0 / eta[which] if inverse else eta[which]
            out[idx] = r * f[:, None]
    return out


def jordan_prod(u, v, l, q_starts, q_dims):
    out = np.empty_like(u)
    out[:l] = u[:l] * v[:l]
    for _, idx in _groups(q_starts, q_dims):
        U, V = u[idx], v[idx]
        r = np.empty_like(U)
        r[:, 0] = np.einsum("ij,ij->i", U, V)
        r[:, 1:] = U[:, :1] * V[:, 1:] + V[:, :1] * U[:, 1:]
        out[idx] = r
    return out


def jordan_div(lam, d, l, q_starts, q_dims):
    """Solve ``lam o x = d`` for ``x``."""
    out = np.empty_like(d)
    out[:l] = d[:l] / lam[:l]
    for _, idx in _groups(q_starts, q_dims):
        L, D = lam[idx], d[idx]
        det = L[:, 0] ** 2 - np.einsum("ij,ij->i", L[:, 1:], L[:, 1:])
        x0 = (L[:, 0] * D[:, 0] - np.einsum("ij,ij->i", L[:, 1:], D[:, 1:])) / det
        r = np.empty_like(D)
        r[:, 0] = x0
        r[:, 1:] = (D[:, 1:] - x0[:, None] * L[:, 1:]) / L[:, :1]
        out[idx] = r
    return out


def max_step(u, d, l, q_starts, q_dims):
    """Largest ``a`` with ``u + a d`` in the cone (``inf`` if unbounded); ``u`` interior."""
    best = np.inf
    if l:
        neg = d[:l] < 0.0
        if neg.any():
            best = float(np.min(-u[:l][neg] / d[:l][neg]))
    for _, idx in _groups(q_starts, q_dims):
        U, D = u[idx], d[idx]
        un = _jnorm(U)
        Ub = U / un[:, None]
        inner = Ub[:, 0] * D[:, 0] - np.einsum("ij,ij->i", Ub[:, 1:], D[:, 1:])
        rho0 = inner / un
        factor = (inner + D[:, 0]) / (Ub[:, 0] + 1.0)
        rho1 = (D[:, 1:] - factor[:, None] * Ub[:, 1:]) / un[:, None]
        gap = np.linalg.norm(rho1, axis=1) - rho0
        pos = gap > 0.0
        if pos.any():
            best = min(best, float(np.min(1.0 / gap[pos])))
    return best


def min_eig(u, l, q_starts, q_dims):
    """Smallest Jordan eigenvalue across all cones (``inf`` for an empty cone)."""
    best = np.inf
    if l:
        best = float(u[:l].min())
    for _, idx in _groups(q_starts, q_dims):
        U = u[idx]
        best = min(best, float(np.min(U[:, 0] - np.linalg.norm(U[:, 1:], axis=1))))
    return best


def w2_blocks(lp_w, wbar, eta, l, q_starts, q_dims):
    """Triplets ``(row, col, val)`` of ``W^2`` in cone coordinates."""
    rows = [np.arange(l)]
    cols = [np.arange(l)]
    vals = [lp_w ** 2]
    if q_dims.shape[0]:
        woff = np.concatenate(([0], np.cumsum(q_dims)[:-1]))
        for which, idx in _groups(q_starts, q_dims):
            d = idx.shape[1]
            W = wbar[woff[which][:, None] + np.arange(d)[None, :]]
            B = 2.0 * W[:, :, None] * W[:, None, :]
            B[:, 0, 0] -= 1.0
            B[:, np.arange(1, d), np.arange(1, d)] += 1.0
            B *= (eta ** 2)[which][:, None, None]
            rows.append(np.repeat(idx, d, axis=1).ravel())
            cols.append(np.tile(idx, (1, d)).ravel())
            vals.append(B.ravel())
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals))
