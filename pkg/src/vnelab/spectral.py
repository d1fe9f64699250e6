"""Spectral substrate features.

Pipeline: per-node attribute matrix -> one-step degree-normalized smoothing
-> node-pair similarity S = H H^T -> top-k eigenpairs, maintained either by
full recomputation or by first-order perturbation correction between small
substrate changes.
"""

import numpy as np

from . import _kernels
from .errors import ConvergenceError

EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 10000
GAP_FACTOR = 0.1       # fallback when ||dS||_F exceeds this fraction of the gap
DEGENERATE_GAP = 1e-8  # below this the first-order correction is meaningless

_START_SEED = 0x5EED


def average_hop_distances(net):
    """Mean min-hop distance from each node to every other node.

    Unreachable nodes count as n hops (farther than any simple path). Row
    order ascending node id.
    """
    ids = net.node_ids()
    n = len(ids)
    out = np.zeros(n)
    for i, nid in enumerate(ids):
        dist = {nid: 0}
        frontier = [nid]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in net.neighbors(u):
                    if v not in dist:
                        dist[v] = d
                        nxt.append(v)
            frontier = nxt
        if n > 1:
            total = sum(dist.get(other, n) for other in ids if other != nid)
            out[i] = total / (n - 1)
    return out


def build_attribute_matrix(net, avg_dist=None):
    """Per-node attributes, min-max normalized to [0,1] per column.

    Columns: residual CPU, degree, sum of adjacent residual bandwidth,
    1/(1 + average min-hop distance). Rows in ascending node id. Constant
    columns normalize to all zeros. avg_dist may carry precomputed hop
    averages (they depend only on topology, not on residuals).
    """
    ids = net.node_ids()
    n = len(ids)
    if n == 0:
        raise ValueError("empty substrate")
    if avg_dist is None:
        avg_dist = average_hop_distances(net)
    raw = np.zeros((n, 4))
    for i, nid in enumerate(ids):
        node = net.node(nid)
        raw[i, 0] = node.cpu_available
        raw[i, 1] = net.degree(nid)
        raw[i, 2] = sum(l.bw_available for l in net.adjacent_links(nid))
        raw[i, 3] = 1.0 / (1.0 + avg_dist[i])
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    out = np.zeros_like(raw)
    for c in range(4):
        if span[c] > 0.0:
            out[:, c] = (raw[:, c] - lo[c]) / span[c]
    return out


def fuse(attr, net):
    """Fused similarity matrix S = H H^T with H = D^{-1/2}(A+I)D^{-1/2} attr.

    One smoothing step mixes link structure into the node attributes; the
    inner product then measures pairwise node similarity. S is symmetric
    positive semidefinite by construction.
    """
    ids = net.node_ids()
    n = len(ids)
    if attr.shape[0] != n:
        raise ValueError("attribute rows %d != node count %d" % (attr.shape[0], n))
    index = {nid: i for i, nid in enumerate(ids)}
    A = np.eye(n)
    for link in net.links():
        i, j = index[link.u], index[link.v]
        A[i, j] = 1.0
        A[j, i] = 1.0
    dinv = 1.0 / np.sqrt(A.sum(axis=1))
    ahat = A * dinv[:, None] * dinv[None, :]
    H = ahat @ attr
    S = H @ H.T
    return (S + S.T) / 2.0


class SpectralEmbedding:
    """Top-k eigenpairs of a fused similarity matrix.

    eigenvalues descending, eigenvector columns orthonormal with the
    largest-magnitude entry of each column positive. degenerate marks a
    (near-)repeated eigenvalue among or just beyond the tracked set; method
    records how the pairs were last obtained ("full" or "perturb").
    """

    def __init__(self, eigenvalues, eigenvectors, degenerate=False, method="full"):
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        self.eigenvectors = np.asarray(eigenvectors, dtype=np.float64)
        self.k = self.eigenvalues.shape[0]
        self.degenerate = bool(degenerate)
        self.method = method

    def node_features(self):
        """Per-node spectral coordinates: rows of V sqrt(max(lambda, 0))."""
        scale = np.sqrt(np.clip(self.eigenvalues, 0.0, None))
        return self.eigenvectors * scale[None, :]

    def __repr__(self):
        return "SpectralEmbedding(k=%d, lams=%s, method=%s)" % (
            self.k, np.array2string(self.eigenvalues, precision=4), self.method)


def _start_vectors(n, k):
    rng = np.random.default_rng(_START_SEED)
    return np.ascontiguousarray(rng.standard_normal((k + 1, n)))


def _value_shift(S):
    """Smallest workable shift making S + shift*I positive semidefinite.

    Power iteration tracks the dominant-magnitude eigenvalue; shifting makes
    that the largest algebraic one. The shift also degrades the relative
    separation of small eigenvalues, so it should be as small as possible:
    a matrix that passes a (jittered) Cholesky factorization is already PSD
    and gets shift 0; otherwise the Gershgorin lower bound applies.
    """
    n = S.shape[0]
    jitter = 1e-12 * max(1.0, float(np.trace(S)))
    try:
        np.linalg.cholesky(S + jitter * np.eye(n))
        return 0.0
    except np.linalg.LinAlgError:
        pass
    absrows = np.abs(S).sum(axis=1)
    diag = np.diag(S)
    lo = float((diag - (absrows - np.abs(diag))).min())
    return max(0.0, -lo)


def top_k_eigen(S, k, tol=EIGEN_TOL, max_iter=EIGEN_MAX_ITER):
    """Top-k eigenpairs of symmetric S by power iteration with deflation."""
    S = np.ascontiguousarray(S, dtype=np.float64)
    n = S.shape[0]
    if S.shape != (n, n):
        raise ValueError("S must be square, got %r" % (S.shape,))
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, %d], got %d" % (n, k))
    want_est = 1 if k < n else 0
    starts = _start_vectors(n, k)
    lams, V, status, resids, next_est, has_est = _kernels.power_deflate(
        S, k, tol, max_iter, starts, want_est, _value_shift(S))
    if status.any():
        worst = float(resids[status == 1].max())
        raise ConvergenceError(
            "power iteration hit %d iterations; residual %.3e" % (max_iter, worst),
            residual=worst)
    order = np.argsort(-lams, kind="stable")
    lams = lams[order]
    V = V[:, order]
    seq = list(lams)
    if has_est:
        seq.append(next_est)
    degenerate = any(abs(a - b) < DEGENERATE_GAP for a, b in zip(seq, seq[1:]))
    return SpectralEmbedding(lams, V, degenerate=degenerate, method="full")


def _orthonormalize(V):
    """Modified Gram-Schmidt on columns, in place order."""
    V = V.copy()
    n, k = V.shape
    for i in range(k):
        for j in range(i):
            V[:, i] -= (V[:, j] @ V[:, i]) * V[:, j]
        norm = np.linalg.norm(V[:, i])
        if norm < 1e-14:
            raise np.linalg.LinAlgError("collapsed eigenvector during update")
        V[:, i] /= norm
    return V


def _sign_fix(V):
    V = V.copy()
    for i in range(V.shape[1]):
        idx = int(np.argmax(np.abs(V[:, i])))
        if V[idx, i] < 0.0:
            V[:, i] = -V[:, i]
    return V


def min_tracked_gap(eigenvalues):
    lams = np.asarray(eigenvalues)
    if lams.shape[0] < 2:
        return np.inf
    return float(np.min(np.abs(np.diff(lams))))


def perturb_update(emb, S_old, S_new, gap_factor=GAP_FACTOR):
    """Advance a SpectralEmbedding across a small change of S.

    First-order eigenpair correction: eigenvalues move by v_i' dS v_i,
    eigenvectors by the classical sum over tracked pairs plus a resolvent
    term for the untracked complement, with a second-order eigenvalue
    refinement; columns are then re-orthonormalized. When ||dS||_F exceeds
    gap_factor times the minimum tracked spectral gap, or the gap is
    (near-)degenerate, falls back to a full recomputation (method "full"
    on the result; "perturb" when the correction path ran).
    """
    S_old = np.asarray(S_old, dtype=np.float64)
    S_new = np.asarray(S_new, dtype=np.float64)
    if S_old.shape != S_new.shape:
        raise ValueError("dimension mismatch: %r vs %r" % (S_old.shape, S_new.shape))
    dS = S_new - S_old
    norm_ds = float(np.linalg.norm(dS))
    if norm_ds == 0.0:
        return SpectralEmbedding(emb.eigenvalues.copy(), emb.eigenvectors.copy(),
                                 degenerate=emb.degenerate, method="perturb")
    gap = min_tracked_gap(emb.eigenvalues)
    if emb.degenerate or gap < DEGENERATE_GAP or norm_ds > gap_factor * gap:
        return top_k_eigen(S_new, emb.k)

    lams = emb.eigenvalues
    V = emb.eigenvectors
    n, k = V.shape
    dSV = dS @ V                      # column i = dS v_i
    M = V.T @ dSV                     # M[j, i] = v_j' dS v_i
    new_lams = lams + np.diag(M)
    newV = V.copy()
    P_rhs = dSV - V @ (V.T @ dSV)     # complement component of dS v_i
    for i in range(k):
        delta = np.zeros(n)
        for j in range(k):
            if j != i:
                delta += (M[j, i] / (lams[i] - lams[j])) * V[:, j]
        # untracked spectrum enters through the resolvent of S_old
        resolvent = lams[i] * np.eye(n) - S_old
        w, *_ = np.linalg.lstsq(resolvent, P_rhs[:, i], rcond=None)
        w = w - V @ (V.T @ w)
        delta += w
        new_lams[i] += float(dSV[:, i] @ delta)  # second-order value refinement
        newV[:, i] = V[:, i] + delta
    try:
        newV = _orthonormalize(newV)
    except np.linalg.LinAlgError:
        return top_k_eigen(S_new, emb.k)
    order = np.argsort(-new_lams, kind="stable")
    new_lams = new_lams[order]
    newV = _sign_fix(newV[:, order])
    degenerate = min_tracked_gap(new_lams) < DEGENERATE_GAP
    return SpectralEmbedding(new_lams, newV, degenerate=degenerate, method="perturb")
