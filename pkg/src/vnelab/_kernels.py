"""Hot numeric kernels.

Everything here is written against the numba nopython subset of numpy and is
JIT-compiled when the numba backend is active (see `_accel`). With
VNELAB_NUMBA=0 the same source runs as plain numpy, so the two paths compute
the same quantities. All arrays are float64, C-order.
"""

import numpy as np

from ._accel import maybe_njit


@maybe_njit
def gru_seq_forward(X, h0, Wz, Wr, Wh, bz, br, bh):
    """Run a gated recurrent cell over the rows of X.

    Cell equations, per step t with input x = X[t] and state h = H[t]:
      z = sigmoid([x;h] @ Wz + bz)
      r = sigmoid([x;h] @ Wr + br)
      c = tanh([x; r*h] @ Wh + bh)
      h' = (1-z)*h + z*c

    Returns (H, Z, R, C, XH, XRH) where H[0] = h0 and H[t+1] is the state
    after consuming X[t]; the rest are per-step caches for the backward pass.
    """
    T, d = X.shape
    h = h0.shape[0]
    H = np.zeros((T + 1, h))
    Z = np.zeros((T, h))
    R = np.zeros((T, h))
    C = np.zeros((T, h))
    XH = np.zeros((T, d + h))
    XRH = np.zeros((T, d + h))
    H[0] = h0
    for t in range(T):
        xh = XH[t]
        xh[:d] = X[t]
        xh[d:] = H[t]
        z = 1.0 / (1.0 + np.exp(-(np.dot(xh, Wz) + bz)))
        r = 1.0 / (1.0 + np.exp(-(np.dot(xh, Wr) + br)))
        xrh = XRH[t]
        xrh[:d] = X[t]
        xrh[d:] = r * H[t]
        c = np.tanh(np.dot(xrh, Wh) + bh)
        Z[t] = z
        R[t] = r
        C[t] = c
        H[t + 1] = (1.0 - z) * H[t] + z * c
    return H, Z, R, C, XH, XRH


@maybe_njit
def gru_seq_backward(H, Z, R, C, XH, XRH, Wz, Wr, Wh, dH):
    """Backpropagate through gru_seq_forward.

    dH has shape (T+1, h): dH[t] is the upstream gradient on H[t] (state
    gradients flowing in from outside the recurrence, e.g. attention reads).
    Returns (dX, dh0, dWz, dWr, dWh, dbz, dbr, dbh).
    """
    T = Z.shape[0]
    h = Z.shape[1]
    d = XH.shape[1] - h
    dX = np.zeros((T, d))
    dWz = np.zeros_like(Wz)
    dWr = np.zeros_like(Wr)
    dWh = np.zeros_like(Wh)
    dbz = np.zeros(h)
    dbr = np.zeros(h)
    dbh = np.zeros(h)
    g = dH[T].copy()
    for t in range(T - 1, -1, -1):
        h_prev = H[t]
        z = Z[t]
        r = R[t]
        c = C[t]
        dz = g * (c - h_prev)
        dc = g * z
        dh = g * (1.0 - z)
        dah = dc * (1.0 - c * c)
        dxrh = np.dot(dah, Wh.T)
        dX[t] += dxrh[:d]
        drh = dxrh[d:]
        dr = drh * h_prev
        dh += drh * r
        daz = dz * z * (1.0 - z)
        dar = dr * r * (1.0 - r)
        dxh = np.dot(daz, Wz.T) + np.dot(dar, Wr.T)
        dX[t] += dxh[:d]
        dh += dxh[d:]
        dWh += XRH[t].reshape(-1, 1) * dah.reshape(1, -1)
        dbh += dah
        dWz += XH[t].reshape(-1, 1) * daz.reshape(1, -1)
        dbz += daz
        dWr += XH[t].reshape(-1, 1) * dar.reshape(1, -1)
        dbr += dar
        g = dh + dH[t]
    return dX, g, dWz, dWr, dWh, dbz, dbr, dbh


@maybe_njit
def attention_forward(Enc, dec, W1, W2, w):
    """Pointer attention logits u_i = w . tanh(Enc[i] @ W1 + dec @ W2)."""
    A = np.dot(Enc, W1) + np.dot(dec, W2)
    T = np.tanh(A)
    logits = np.dot(T, w)
    return logits, T


@maybe_njit
def attention_backward(Enc, dec, W1, W2, w, T, dlogits):
    """Backward of attention_forward; returns (dEnc, ddec, dW1, dW2, dw)."""
    dT = dlogits.reshape(-1, 1) * w.reshape(1, -1)
    dA = dT * (1.0 - T * T)
    dEnc = np.dot(dA, W1.T)
    dW1 = np.dot(Enc.T, dA)
    s = np.sum(dA, axis=0)
    ddec = np.dot(s, W2.T)
    dW2 = dec.reshape(-1, 1) * s.reshape(1, -1)
    dw = np.dot(T.T, dlogits)
    return dEnc, ddec, dW1, dW2, dw


@maybe_njit
def power_deflate(S, k, tol, max_iter, starts, want_estimate, shift):
    """Top-k eigenpairs of symmetric S by shifted power iteration with deflation.

    The caller supplies a shift that keeps S + shift*I positive semidefinite
    so dominance in magnitude coincides with dominance in value; reported
    eigenvalues are Rayleigh quotients of the unshifted S. starts has one
    column per pass (k, plus one more when want_estimate != 0, used for a
    best-effort estimate of eigenvalue k+1).

    Returns (lams, V, status, resids, next_est, has_est) where status[i] is
    0 on convergence, 1 when the iteration cap was hit; resids[i] then holds
    the last eigenvector change. starts holds start vectors as rows; found
    eigenvectors are kept as rows internally for contiguous dot products and
    returned as columns of V.
    """
    n = S.shape[0]
    maxabs = 0.0
    for i in range(n):
        for j in range(n):
            if abs(S[i, j]) > maxabs:
                maxabs = abs(S[i, j])
    passes = k + 1 if want_estimate != 0 else k
    VT = np.zeros((k, n))
    lams = np.zeros(k)
    mus = np.zeros(k)
    status = np.zeros(k, np.int64)
    resids = np.zeros(k)
    next_est = 0.0
    has_est = 0
    for i in range(passes):
        tracked = min(i, k)
        v = starts[i].copy()
        for j in range(tracked):
            v -= np.dot(VT[j], v) * VT[j]
        nv = np.sqrt(np.dot(v, v))
        if nv < 1e-12:
            v = np.zeros(n)
            v[i % n] = 1.0
            for j in range(tracked):
                v -= np.dot(VT[j], v) * VT[j]
            nv = np.sqrt(np.dot(v, v))
        v /= nv
        delta = np.inf
        converged = False
        scale = 1.0 + maxabs + shift
        for _ in range(max_iter):
            w = np.dot(S, v) + shift * v
            for j in range(tracked):
                w -= mus[j] * np.dot(VT[j], v) * VT[j]
            for j in range(tracked):
                w -= np.dot(VT[j], w) * VT[j]
            nw = np.sqrt(np.dot(w, w))
            if nw < 1e-13 * scale:
                # deflated operator annihilates v: v spans a (near-)null
                # direction of the shifted matrix, eigenvalue is -shift
                converged = True
                delta = 0.0
                break
            w /= nw
            if np.dot(w, v) < 0.0:
                w = -w
            diff = w - v
            delta = np.sqrt(np.dot(diff, diff))
            v = w
            if delta < tol:
                converged = True
                break
        idx = 0
        big = 0.0
        for j in range(n):
            if abs(v[j]) > big:
                big = abs(v[j])
                idx = j
        if v[idx] < 0.0:
            v = -v
        lam = np.dot(v, np.dot(S, v))
        if i < k:
            VT[i] = v
            lams[i] = lam
            mus[i] = lam + shift
            if not converged:
                status[i] = 1
                resids[i] = delta
        else:
            next_est = lam
            has_est = 1
    return lams, VT.T.copy(), status, resids, next_est, has_est


@maybe_njit
def weighted_walk_scores(indptr, indices, hvals, damping, tol, max_iter):
    """Stationary scores of the resource-weighted random walk.

    Transition u->v for v in N(u) plus u itself, with probability
    H(v) / sum of H over N(u) plus u; damped PageRank-style update
    score' = (1-d)/n + d * P^T score. When the local H mass is zero the walk
    leaves u uniformly over N(u) plus u. Returns (scores, iterations, done,
    last L1 change).
    """
    n = indptr.shape[0] - 1
    denom = np.zeros(n)
    for u in range(n):
        s = hvals[u]
        for p in range(indptr[u], indptr[u + 1]):
            s += hvals[indices[p]]
        denom[u] = s
    scores = np.full(n, 1.0 / n)
    new = np.zeros(n)
    base = (1.0 - damping) / n
    it = 0
    done = 0
    l1 = np.inf
    while it < max_iter:
        for u in range(n):
            new[u] = base
        for u in range(n):
            mass = damping * scores[u]
            if denom[u] > 0.0:
                new[u] += mass * hvals[u] / denom[u]
                for p in range(indptr[u], indptr[u + 1]):
                    v = indices[p]
                    new[v] += mass * hvals[v] / denom[u]
            else:
                deg = indptr[u + 1] - indptr[u]
                share = mass / (deg + 1.0)
                new[u] += share
                for p in range(indptr[u], indptr[u + 1]):
                    new[indices[p]] += share
        l1 = 0.0
        for u in range(n):
            l1 += abs(new[u] - scores[u])
            scores[u] = new[u]
        it += 1
        if l1 < tol:
            done = 1
            break
    return scores, it, done, l1
