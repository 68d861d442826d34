"""Reference (pure numpy) backend for the batched model evaluations.

The three entry points evaluate a whole dataset at once for a network-based
potential assembled from invariant features:

``energy_batch``   total potential per tuple,
``stress_batch``   second Piola-Kirchhoff stress per tuple,
``mse_and_grad``   mean squared stress residual against data, plus its exact
                   gradient with respect to the flat parameter vector.

The parameter gradient is the expensive part.  The stress depends on the
network only through its *input gradient* g = d psi / d inputs, so the chain
rule needs mixed second derivatives d^2 psi / d theta d inputs contracted
with per-tuple weight vectors.  That contraction equals the theta-gradient
of a directional derivative (a forward tangent sweep through the network
followed by reverse accumulation), which costs only a small constant factor
over a plain forward pass.  The stress-normalization constants are functions
of theta through the input gradient at the undeformed state, so they add one
pseudo-tuple to the same sweep.

All arguments are plain arrays so compiled twins can share the signature:

``theta``  flat parameter vector (layer weights row-major, layer biases,
           repeated, then output weights),
``sizes``  (input_dim, hidden_1, ..., hidden_H),
``tiso``   0/1 isotropic / transversely isotropic (with ``beta``),
``growth`` 0/1 add the volumetric growth term,
``normalize`` 0/1 add stress + energy normalization terms.
"""

from __future__ import annotations

import numpy as np

__all__ = ["energy_batch", "stress_batch", "mse_and_grad", "norm_constants"]

# Off-diagonal components count twice in contractions of symmetric tensors.
_W6 = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


# ---------------------------------------------------------------------------
# invariant features (self-contained batch kinematics)
# ---------------------------------------------------------------------------

def _features(C6, tiso, beta):
    """Invariant vector, its C-derivatives, and volumetric helpers."""
    n = C6.shape[0]
    a, b, c, d, e, f = (C6[:, i] for i in range(6))
    I1 = a + b + c
    cof = np.stack(
        [
            b * c - f * f,
            a * c - e * e,
            a * b - d * d,
            e * f - d * c,
            d * f - e * b,
            d * e - a * f,
        ],
        axis=1,
    )
    I2 = cof[:, 0] + cof[:, 1] + cof[:, 2]
    I3 = a * b * c + 2.0 * d * e * f - a * f * f - b * e * e - c * d * d
    J = np.sqrt(I3)
    Cinv6 = cof / I3[:, None]

    ident = np.zeros((n, 6))
    ident[:, :3] = 1.0

    k = 6 if tiso else 4
    feat = np.empty((n, k))
    dfeat = np.empty((n, k, 6))
    feat[:, 0] = I1
    feat[:, 1] = I2
    feat[:, 2] = I3
    feat[:, k - 1] = -2.0 * J
    dfeat[:, 0, :] = ident
    dfeat[:, 1, :] = I1[:, None] * ident - C6
    dfeat[:, 2, :] = cof
    dfeat[:, k - 1, :] = -J[:, None] * Cinv6

    if tiso:
        g11 = beta * beta
        g22 = 1.0 / beta
        G6 = np.array([g11, g22, g22, 0.0, 0.0, 0.0])
        feat[:, 3] = C6[:, 0] * g11 + (C6[:, 1] + C6[:, 2]) * g22
        feat[:, 4] = cof[:, 0] * g11 + (cof[:, 1] + cof[:, 2]) * g22
        dfeat[:, 3, :] = G6[None, :]
        # d I5 / dC = I5 C^-1 - I3 * C^-1 G C^-1  (symmetrized)
        Cinvm = _mat(Cinv6)
        M = I3[:, None, None] * (Cinvm * np.array([g11, g22, g22])[None, None, :]) @ Cinvm
        dfeat[:, 4, :] = feat[:, 4][:, None] * Cinv6 - _sym6(M)

    return feat, dfeat, J, Cinv6


def _mat(C6):
    n = C6.shape[0]
    m = np.empty((n, 3, 3))
    m[:, 0, 0] = C6[:, 0]
    m[:, 1, 1] = C6[:, 1]
    m[:, 2, 2] = C6[:, 2]
    m[:, 0, 1] = m[:, 1, 0] = C6[:, 3]
    m[:, 0, 2] = m[:, 2, 0] = C6[:, 4]
    m[:, 1, 2] = m[:, 2, 1] = C6[:, 5]
    return m


def _sym6(M):
    return np.stack(
        [
            M[:, 0, 0],
            M[:, 1, 1],
            M[:, 2, 2],
            0.5 * (M[:, 0, 1] + M[:, 1, 0]),
            0.5 * (M[:, 0, 2] + M[:, 2, 0]),
            0.5 * (M[:, 1, 2] + M[:, 2, 1]),
        ],
        axis=1,
    )


def _identity_inputs(tiso, beta):
    if tiso:
        g = beta * beta + 2.0 / beta
        return np.array([3.0, 3.0, 1.0, g, g, -2.0])
    return np.array([3.0, 3.0, 1.0, -2.0])


# ---------------------------------------------------------------------------
# network sweeps
# ---------------------------------------------------------------------------

def _unpack(theta, sizes):
    weights, biases = [], []
    pos = 0
    for h in range(1, len(sizes)):
        n, p = sizes[h], sizes[h - 1]
        weights.append(theta[pos:pos + n * p].reshape(n, p))
        pos += n * p
        biases.append(theta[pos:pos + n])
        pos += n
    wout = theta[pos:]
    return weights, biases, wout


def _logistic(z):
    out = np.empty_like(z)
    np.negative(np.abs(z), out=out)
    np.exp(out, out=out)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + out[pos])
    neg = ~pos
    out[neg] = out[neg] / (1.0 + out[neg])
    return out


def _softplus(z):
    return np.logaddexp(0.0, z)


def _net_forward(theta, sizes, X):
    """psi values and input gradients for a batch of invariant vectors."""
    weights, biases, wout = _unpack(theta, sizes)
    ss = []
    a = X
    for w, b in zip(weights, biases):
        z = a @ w.T + b
        ss.append(_logistic(z))
        a = _softplus(z)
    psi = a @ wout
    g = np.broadcast_to(wout, (X.shape[0], wout.size)).copy()
    for w, s in zip(reversed(weights), reversed(ss)):
        g = (g * s) @ w
    return psi, g


def _tangent_param_grad(theta, sizes, X, V):
    """Gradient w.r.t. theta of  sum_p V_p . (d psi / d inputs)(X_p).

    Forward tangent sweep with per-row input tangents V, then reverse
    accumulation through both the primal and tangent paths.
    """
    weights, biases, wout = _unpack(theta, sizes)
    H = len(weights)
    # primal forward
    ss, acts = [], [X]
    a = X
    for w, b in zip(weights, biases):
        z = a @ w.T + b
        ss.append(_logistic(z))
        a = _softplus(z)
        acts.append(a)
    # forward tangent: t_h pre-activation, sdot_h = s_h * t_h
    ts = []
    sdot = V
    for h in range(H):
        t = sdot @ weights[h].T
        ts.append(t)
        sdot = ss[h] * t
    # reverse through both paths
    gW = [None] * H
    gb = [None] * H
    g_out = ss[H - 1] * ts[H - 1]           # sdot_H; d Phi / d wout = its sum
    r = np.broadcast_to(wout, ts[H - 1].shape)   # d Phi / d sdot_h
    da = None                                # d Phi / d a_h from layer above
    for h in range(H - 1, -1, -1):
        s = ss[h]
        sp = s * (1.0 - s)
        u = r * s                            # d Phi / d t_h
        stot = r * sp * ts[h]                # d Phi / d z_h, tangent path
        if da is not None:
            stot = stot + da * s             # primal path: d SP(z) / dz = s
        prev_t = ss[h - 1] * ts[h - 1] if h > 0 else V
        gW[h] = stot.T @ acts[h] + u.T @ prev_t
        gb[h] = stot.sum(axis=0)
        if h > 0:
            da = stot @ weights[h]
            r = u @ weights[h]
    parts = []
    for h in range(H):
        parts.append(gW[h].ravel())
        parts.append(gb[h])
    parts.append(g_out.sum(axis=0))
    return np.concatenate(parts)


def norm_constants(theta, sizes, tiso, beta):
    """Stress-normalization constants from the undeformed input gradient.

    Isotropic: the single coefficient multiplying -J C^-1.  Transversely
    isotropic: (o, p, q, x) where o multiplies -J C^-1, p the structural
    tensor term, q the cofactor-structural term, and x = g4 - g5 is the
    switch variable whose sign splits p/q.
    """
    x0 = _identity_inputs(tiso, beta)
    _, g0 = _net_forward(theta, sizes, x0[None, :])
    g0 = g0[0]
    if not tiso:
        return (2.0 * (g0[0] + 2.0 * g0[1] + g0[2] - g0[3]),)
    trG = beta * beta + 2.0 / beta
    x = g0[3] - g0[4]
    q = x if x > 0.0 else 0.0
    p = -x if x < 0.0 else 0.0
    o = 2.0 * (g0[0] + 2.0 * g0[1] + g0[2] - g0[5] + g0[4] * trG + q * trG)
    return (o, p, q, x)


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def _nn_stress(g, dfeat):
    return 2.0 * np.einsum("nk,nki->ni", g, dfeat)


def _growth_scalar(J):
    return 2.0 * (J + 1.0 / J - 2.0) * (1.0 - 1.0 / (J * J)) * J


def prepare(C6, tiso, beta):
    """Precompute the theta-independent invariant features of a batch.

    The returned tuple may be passed to the ``*_prepared`` entry points to
    avoid rebuilding features on every optimizer evaluation.
    """
    return _features(np.ascontiguousarray(C6, dtype=np.float64), tiso, beta)


def stress_batch_prepared(prep, theta, sizes, tiso, beta, growth, normalize):
    feat, dfeat, J, Cinv6 = prep
    _, g = _net_forward(theta, sizes, feat)
    T = _nn_stress(g, dfeat)
    if growth:
        T += _growth_scalar(J)[:, None] * Cinv6
    if normalize:
        k = feat.shape[1]
        if tiso:
            o, p, q, _ = norm_constants(theta, sizes, tiso, beta)
            T += o * dfeat[:, k - 1, :] + 2.0 * p * dfeat[:, 3, :] + 2.0 * q * dfeat[:, 4, :]
        else:
            (nconst,) = norm_constants(theta, sizes, tiso, beta)
            T += nconst * dfeat[:, k - 1, :]
    return T


def stress_batch(C6, theta, sizes, tiso, beta, growth, normalize):
    prep = prepare(C6, tiso, beta)
    return stress_batch_prepared(prep, theta, sizes, tiso, beta, growth, normalize)


def energy_batch_prepared(prep, theta, sizes, tiso, beta, growth, normalize):
    feat, _, J, _ = prep
    psi, _ = _net_forward(theta, sizes, feat)
    if growth:
        psi = psi + (J + 1.0 / J - 2.0) ** 2
    if normalize:
        x0 = _identity_inputs(tiso, beta)
        psi0, _ = _net_forward(theta, sizes, x0[None, :])
        if tiso:
            o, p, q, _ = norm_constants(theta, sizes, tiso, beta)
            trG = x0[3]
            psi = psi - o * (J - 1.0) + p * (feat[:, 3] - trG) + q * (feat[:, 4] - trG)
        else:
            (nconst,) = norm_constants(theta, sizes, tiso, beta)
            psi = psi - nconst * (J - 1.0)
        # energy shift: subtract the full assembled potential at C = 1
        # (its growth and stress parts vanish there by construction)
        psi = psi - psi0[0]
    return psi


def energy_batch(C6, theta, sizes, tiso, beta, growth, normalize):
    prep = prepare(C6, tiso, beta)
    return energy_batch_prepared(prep, theta, sizes, tiso, beta, growth, normalize)


def mse_and_grad_prepared(prep, T6, theta, sizes, tiso, beta, growth, normalize):
    """Mean squared Frobenius stress residual and its exact theta-gradient."""
    feat, dfeat, J, Cinv6 = prep
    n = feat.shape[0]
    _, g = _net_forward(theta, sizes, feat)
    T = _nn_stress(g, dfeat)
    if growth:
        T += _growth_scalar(J)[:, None] * Cinv6
    k = feat.shape[1]
    consts = None
    if normalize:
        consts = norm_constants(theta, sizes, tiso, beta)
        if tiso:
            o, p, q, _ = consts
            T += o * dfeat[:, k - 1, :] + 2.0 * p * dfeat[:, 3, :] + 2.0 * q * dfeat[:, 4, :]
        else:
            T += consts[0] * dfeat[:, k - 1, :]

    R = T - T6
    mse = float(np.mean((R * R) @ _W6))

    # Per-tuple contraction weights a[n, k] = R_n : dfeat_n,k
    Rw = R * _W6
    a = np.einsum("ni,nki->nk", Rw, dfeat)
    V = (4.0 / n) * a
    X = feat
    if normalize:
        x0 = _identity_inputs(tiso, beta)
        if tiso:
            _, _, _, x = consts
            co = (2.0 / n) * a[:, k - 1].sum()
            cp = (4.0 / n) * a[:, 3].sum()
            cq = (4.0 / n) * a[:, 4].sum()
            trG = x0[3]
            v0 = 2.0 * co * np.array([1.0, 2.0, 1.0, 0.0, trG, -1.0])
            kappa = 0.0
            if x > 0.0:
                kappa += 2.0 * co * trG + cq
            elif x < 0.0:
                kappa -= cp
            v0[3] += kappa
            v0[4] -= kappa
        else:
            c = (2.0 / n) * a[:, k - 1].sum()
            v0 = 2.0 * c * np.array([1.0, 2.0, 1.0, -1.0])
        X = np.vstack([feat, x0[None, :]])
        V = np.vstack([V, v0[None, :]])

    grad = _tangent_param_grad(theta, sizes, X, V)
    return mse, grad


def mse_and_grad(C6, T6, theta, sizes, tiso, beta, growth, normalize):
    prep = prepare(C6, tiso, beta)
    return mse_and_grad_prepared(prep, T6, theta, sizes, tiso, beta, growth, normalize)
