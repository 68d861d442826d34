# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the reference backend.

Same entry points and the same mathematics as the pure-numpy module, with
the per-tuple feature construction and the network forward/tangent/reverse
sweeps fused into C loops.  Results agree with the reference to roundoff
(the elementwise softplus/logistic use the same stable branch splits, but
compiler rounding may differ in the last units).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, sqrt

cnp.import_array()

__all__ = [
    "prepare",
    "energy_batch", "stress_batch", "mse_and_grad",
    "energy_batch_prepared", "stress_batch_prepared", "mse_and_grad_prepared",
]

DEF MAX_LAYERS = 64


cdef inline double _softplus(double z) nogil:
    if z > 0.0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


cdef inline double _logistic(double z) nogil:
    cdef double e
    if z >= 0.0:
        e = exp(-z)
        return 1.0 / (1.0 + e)
    e = exp(z)
    return e / (1.0 + e)


cdef inline double _growth_scalar(double J) nogil:
    return 2.0 * (J + 1.0 / J - 2.0) * (1.0 - 1.0 / (J * J)) * J


cdef void _identity_inputs_c(int tiso, double beta, double* x0, int k) nogil:
    cdef double g
    x0[0] = 3.0; x0[1] = 3.0; x0[2] = 1.0
    if tiso:
        g = beta * beta + 2.0 / beta
        x0[3] = g; x0[4] = g
    x0[k - 1] = -2.0


# ---------------------------------------------------------------------------
# invariant features
# ---------------------------------------------------------------------------

def prepare(C6_in, int tiso, double beta):
    """Invariant features and their C-derivatives for a batch (cacheable)."""
    cdef cnp.ndarray[double, ndim=2] C6 = np.ascontiguousarray(C6_in, dtype=np.float64)
    cdef Py_ssize_t n = C6.shape[0]
    cdef int k = 6 if tiso else 4
    cdef cnp.ndarray[double, ndim=2] feat = np.empty((n, k))
    cdef cnp.ndarray[double, ndim=3] dfeat = np.empty((n, k, 6))
    cdef cnp.ndarray[double, ndim=1] J = np.empty(n)
    cdef cnp.ndarray[double, ndim=2] Cinv6 = np.empty((n, 6))

    cdef double a, b, c, d, e, f
    cdef double I1, I2, I3, Jp, I4, I5
    cdef double cof0, cof1, cof2, cof3, cof4, cof5
    cdef double g11, g22
    cdef double ci[6]
    cdef double M00, M01, M02, M10, M11, M12, M20, M21, M22
    cdef double B00, B01, B02, B11, B12, B22
    cdef Py_ssize_t p, j

    g11 = beta * beta if tiso else 0.0
    g22 = 1.0 / beta if tiso else 0.0

    for p in range(n):
        a = C6[p, 0]; b = C6[p, 1]; c = C6[p, 2]
        d = C6[p, 3]; e = C6[p, 4]; f = C6[p, 5]
        I1 = a + b + c
        cof0 = b * c - f * f
        cof1 = a * c - e * e
        cof2 = a * b - d * d
        cof3 = e * f - d * c
        cof4 = d * f - e * b
        cof5 = d * e - a * f
        I2 = cof0 + cof1 + cof2
        I3 = a * b * c + 2.0 * d * e * f - a * f * f - b * e * e - c * d * d
        Jp = sqrt(I3)
        J[p] = Jp
        ci[0] = cof0 / I3; ci[1] = cof1 / I3; ci[2] = cof2 / I3
        ci[3] = cof3 / I3; ci[4] = cof4 / I3; ci[5] = cof5 / I3
        for j in range(6):
            Cinv6[p, j] = ci[j]

        feat[p, 0] = I1
        feat[p, 1] = I2
        feat[p, 2] = I3
        feat[p, k - 1] = -2.0 * Jp
        # d I1 / dC = 1
        dfeat[p, 0, 0] = 1.0; dfeat[p, 0, 1] = 1.0; dfeat[p, 0, 2] = 1.0
        dfeat[p, 0, 3] = 0.0; dfeat[p, 0, 4] = 0.0; dfeat[p, 0, 5] = 0.0
        # d I2 / dC = I1 1 - C
        dfeat[p, 1, 0] = I1 - a; dfeat[p, 1, 1] = I1 - b; dfeat[p, 1, 2] = I1 - c
        dfeat[p, 1, 3] = -d; dfeat[p, 1, 4] = -e; dfeat[p, 1, 5] = -f
        # d I3 / dC = Cof C
        dfeat[p, 2, 0] = cof0; dfeat[p, 2, 1] = cof1; dfeat[p, 2, 2] = cof2
        dfeat[p, 2, 3] = cof3; dfeat[p, 2, 4] = cof4; dfeat[p, 2, 5] = cof5
        # d I1* / dC = -J C^-1
        for j in range(6):
            dfeat[p, k - 1, j] = -Jp * ci[j]

        if tiso:
            I4 = a * g11 + (b + c) * g22
            I5 = cof0 * g11 + (cof1 + cof2) * g22
            feat[p, 3] = I4
            feat[p, 4] = I5
            dfeat[p, 3, 0] = g11; dfeat[p, 3, 1] = g22; dfeat[p, 3, 2] = g22
            dfeat[p, 3, 3] = 0.0; dfeat[p, 3, 4] = 0.0; dfeat[p, 3, 5] = 0.0
            # d I5 / dC = I5 C^-1 - I3 sym(C^-1 G C^-1), with M = C^-1 G
            M00 = ci[0] * g11; M01 = ci[3] * g22; M02 = ci[4] * g22
            M10 = ci[3] * g11; M11 = ci[1] * g22; M12 = ci[5] * g22
            M20 = ci[4] * g11; M21 = ci[5] * g22; M22 = ci[2] * g22
            B00 = M00 * ci[0] + M01 * ci[3] + M02 * ci[4]
            B01 = M00 * ci[3] + M01 * ci[1] + M02 * ci[5]
            B02 = M00 * ci[4] + M01 * ci[5] + M02 * ci[2]
            B11 = M10 * ci[3] + M11 * ci[1] + M12 * ci[5]
            B12 = M10 * ci[4] + M11 * ci[5] + M12 * ci[2]
            B22 = M20 * ci[4] + M21 * ci[5] + M22 * ci[2]
            dfeat[p, 4, 0] = I5 * ci[0] - I3 * B00
            dfeat[p, 4, 1] = I5 * ci[1] - I3 * B11
            dfeat[p, 4, 2] = I5 * ci[2] - I3 * B22
            dfeat[p, 4, 3] = I5 * ci[3] - I3 * 0.5 * (B01 + (M10 * ci[0] + M11 * ci[3] + M12 * ci[4]))
            dfeat[p, 4, 4] = I5 * ci[4] - I3 * 0.5 * (B02 + (M20 * ci[0] + M21 * ci[3] + M22 * ci[4]))
            dfeat[p, 4, 5] = I5 * ci[5] - I3 * 0.5 * (B12 + (M20 * ci[3] + M21 * ci[1] + M22 * ci[5]))

    return feat, dfeat, J, Cinv6


# ---------------------------------------------------------------------------
# network sweeps
# ---------------------------------------------------------------------------

cdef void _layer_offsets(cnp.int64_t[:] sizes, Py_ssize_t* offW, Py_ssize_t* offb):
    cdef Py_ssize_t pos = 0, h
    for h in range(sizes.shape[0] - 1):
        offW[h] = pos
        pos += sizes[h + 1] * sizes[h]
        offb[h] = pos
        pos += sizes[h + 1]


def _net_forward_arrays(X_in, theta_in, sizes_in):
    """Network value and input-gradient rows for a batch of feature rows."""
    cdef cnp.ndarray[double, ndim=2] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] theta = np.ascontiguousarray(theta_in, dtype=np.float64)
    cdef cnp.int64_t[:] sizes = np.ascontiguousarray(sizes_in, dtype=np.int64)
    cdef Py_ssize_t H = sizes.shape[0] - 1
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k = X.shape[1]
    cdef Py_ssize_t maxw = 0, h, p, i, j
    for h in range(sizes.shape[0]):
        if sizes[h] > maxw:
            maxw = sizes[h]

    cdef cnp.ndarray[double, ndim=1] psi = np.empty(n)
    cdef cnp.ndarray[double, ndim=2] g = np.empty((n, k))
    cdef cnp.ndarray[double, ndim=2] acts = np.empty((H + 1, maxw))
    cdef cnp.ndarray[double, ndim=2] sig = np.empty((H, maxw))
    cdef cnp.ndarray[double, ndim=1] gv = np.empty(maxw)
    cdef cnp.ndarray[double, ndim=1] tmp = np.empty(maxw)
    cdef Py_ssize_t offW[MAX_LAYERS]
    cdef Py_ssize_t offb[MAX_LAYERS]
    cdef Py_ssize_t offout
    cdef double z, acc
    cdef double* th = <double*> theta.data

    _layer_offsets(sizes, offW, offb)
    offout = theta.shape[0] - sizes[H]

    cdef double e
    for p in range(n):
        for i in range(k):
            acts[0, i] = X[p, i]
        for h in range(H):
            for j in range(sizes[h + 1]):
                z = th[offb[h] + j]
                for i in range(sizes[h]):
                    z += th[offW[h] + j * sizes[h] + i] * acts[h, i]
                # one exp(-|z|) serves both the logistic and the softplus
                e = exp(-fabs(z))
                if z >= 0.0:
                    sig[h, j] = 1.0 / (1.0 + e)
                    acts[h + 1, j] = z + log1p(e) if z > 0.0 else log1p(e)
                else:
                    sig[h, j] = e / (1.0 + e)
                    acts[h + 1, j] = log1p(e)
        acc = 0.0
        for j in range(sizes[H]):
            acc += th[offout + j] * acts[H, j]
        psi[p] = acc
        for j in range(sizes[H]):
            gv[j] = th[offout + j]
        for h in range(H - 1, -1, -1):
            for j in range(sizes[h + 1]):
                gv[j] *= sig[h, j]
            for i in range(sizes[h]):
                acc = 0.0
                for j in range(sizes[h + 1]):
                    acc += gv[j] * th[offW[h] + j * sizes[h] + i]
                tmp[i] = acc
            for i in range(sizes[h]):
                gv[i] = tmp[i]
        for i in range(k):
            g[p, i] = gv[i]
    return psi, g


def _norm_consts(theta, sizes, int tiso, double beta):
    """(o, p, q, x) normalization constants; p, q, x are zero when isotropic."""
    cdef int k = 6 if tiso else 4
    cdef double x0v[6]
    _identity_inputs_c(tiso, beta, x0v, k)
    x0 = np.empty((1, k))
    cdef Py_ssize_t i
    for i in range(k):
        x0[0, i] = x0v[i]
    _, g = _net_forward_arrays(x0, theta, sizes)
    cdef double g0 = g[0, 0], g1 = g[0, 1], g2 = g[0, 2], g3 = g[0, 3]
    cdef double g4, g5, trG, x, pp, qq
    if not tiso:
        return 2.0 * (g0 + 2.0 * g1 + g2 - g3), 0.0, 0.0, 0.0
    g4 = g[0, 4]; g5 = g[0, 5]
    trG = beta * beta + 2.0 / beta
    x = g3 - g4
    qq = x if x > 0.0 else 0.0
    pp = -x if x < 0.0 else 0.0
    return (2.0 * (g0 + 2.0 * g1 + g2 - g5 + g4 * trG + qq * trG), pp, qq, x)


def stress_batch_prepared(prep, theta_in, sizes_in, int tiso, double beta,
                          int growth, int normalize):
    feat_o, dfeat_o, J_o, Cinv6_o = prep
    cdef cnp.ndarray[double, ndim=2] feat = np.ascontiguousarray(feat_o)
    cdef cnp.ndarray[double, ndim=3] dfeat = np.ascontiguousarray(dfeat_o)
    cdef cnp.ndarray[double, ndim=1] J = np.ascontiguousarray(J_o)
    cdef cnp.ndarray[double, ndim=2] Cinv6 = np.ascontiguousarray(Cinv6_o)
    cdef cnp.ndarray[double, ndim=1] theta = np.ascontiguousarray(theta_in, dtype=np.float64)
    sizes = np.ascontiguousarray(sizes_in, dtype=np.int64)
    cdef Py_ssize_t n = feat.shape[0]
    cdef int k = feat.shape[1]
    cdef cnp.ndarray[double, ndim=2] T = np.zeros((n, 6))
    cdef double o = 0.0, pco = 0.0, qco = 0.0, gs
    cdef Py_ssize_t p, i, j

    _, g = _net_forward_arrays(feat, theta, sizes)
    cdef cnp.ndarray[double, ndim=2] gv = g

    if normalize:
        o, pco, qco, _ = _norm_consts(theta, sizes, tiso, beta)

    for p in range(n):
        for i in range(k):
            for j in range(6):
                T[p, j] += 2.0 * gv[p, i] * dfeat[p, i, j]
        if growth:
            gs = _growth_scalar(J[p])
            for j in range(6):
                T[p, j] += gs * Cinv6[p, j]
        if normalize:
            for j in range(6):
                T[p, j] += o * dfeat[p, k - 1, j]
            if tiso:
                for j in range(6):
                    T[p, j] += 2.0 * pco * dfeat[p, 3, j] + 2.0 * qco * dfeat[p, 4, j]
    return T


def energy_batch_prepared(prep, theta_in, sizes_in, int tiso, double beta,
                          int growth, int normalize):
    feat_o, _, J_o, _ = prep
    cdef cnp.ndarray[double, ndim=2] feat = np.ascontiguousarray(feat_o)
    cdef cnp.ndarray[double, ndim=1] J = np.ascontiguousarray(J_o)
    theta = np.ascontiguousarray(theta_in, dtype=np.float64)
    sizes = np.ascontiguousarray(sizes_in, dtype=np.int64)
    cdef Py_ssize_t n = feat.shape[0]
    cdef int k = feat.shape[1]
    cdef double o, pco, qco, trG, psi0
    cdef Py_ssize_t p

    psi_arr, _ = _net_forward_arrays(feat, theta, sizes)
    cdef cnp.ndarray[double, ndim=1] out = psi_arr

    if growth:
        for p in range(n):
            out[p] += (J[p] + 1.0 / J[p] - 2.0) ** 2
    if normalize:
        o, pco, qco, _ = _norm_consts(theta, sizes, tiso, beta)
        x0 = np.empty((1, k))
        _fill_identity(x0, tiso, beta, k)
        psi0_arr, _ = _net_forward_arrays(x0, theta, sizes)
        psi0 = psi0_arr[0]
        if tiso:
            trG = beta * beta + 2.0 / beta
            for p in range(n):
                out[p] += (-o * (J[p] - 1.0) + pco * (feat[p, 3] - trG)
                           + qco * (feat[p, 4] - trG) - psi0)
        else:
            for p in range(n):
                out[p] += -o * (J[p] - 1.0) - psi0
    return out


def _fill_identity(cnp.ndarray[double, ndim=2] x0, int tiso, double beta, int k):
    cdef double x0c[6]
    _identity_inputs_c(tiso, beta, x0c, k)
    cdef Py_ssize_t i
    for i in range(k):
        x0[0, i] = x0c[i]


def mse_and_grad_prepared(prep, T6_in, theta_in, sizes_in, int tiso, double beta,
                          int growth, int normalize):
    """Mean squared Frobenius stress residual and its exact theta-gradient."""
    feat_o, dfeat_o, J_o, Cinv6_o = prep
    cdef cnp.ndarray[double, ndim=2] feat = np.ascontiguousarray(feat_o)
    cdef cnp.ndarray[double, ndim=3] dfeat = np.ascontiguousarray(dfeat_o)
    cdef cnp.ndarray[double, ndim=1] J = np.ascontiguousarray(J_o)
    cdef cnp.ndarray[double, ndim=2] Cinv6 = np.ascontiguousarray(Cinv6_o)
    cdef cnp.ndarray[double, ndim=2] T6 = np.ascontiguousarray(T6_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] theta = np.ascontiguousarray(theta_in, dtype=np.float64)
    sizes_arr = np.ascontiguousarray(sizes_in, dtype=np.int64)
    cdef cnp.int64_t[:] sizes = sizes_arr
    cdef Py_ssize_t H = sizes.shape[0] - 1
    cdef Py_ssize_t n = feat.shape[0]
    cdef int k = feat.shape[1]
    cdef Py_ssize_t P = theta.shape[0]
    cdef Py_ssize_t maxw = 0, h
    for h in range(sizes.shape[0]):
        if sizes[h] > maxw:
            maxw = sizes[h]

    cdef Py_ssize_t offW[MAX_LAYERS]
    cdef Py_ssize_t offb[MAX_LAYERS]
    cdef Py_ssize_t offout
    _layer_offsets(sizes, offW, offb)
    offout = P - sizes[H]
    cdef double* th = <double*> theta.data

    cdef double o = 0.0, pco = 0.0, qco = 0.0, xsw = 0.0
    if normalize:
        o, pco, qco, xsw = _norm_consts(theta, sizes_arr, tiso, beta)

    cdef cnp.ndarray[double, ndim=1] grad = np.zeros(P)
    cdef double* gr = <double*> grad.data

    # per-row workspaces; tng rows hold activation tangents (row 0 = input V)
    cdef cnp.ndarray[double, ndim=2] acts = np.empty((H + 1, maxw))
    cdef cnp.ndarray[double, ndim=2] sig = np.empty((H, maxw))
    cdef cnp.ndarray[double, ndim=2] tng = np.empty((H + 1, maxw))
    cdef cnp.ndarray[double, ndim=2] tpre = np.empty((H, maxw))
    cdef cnp.ndarray[double, ndim=1] rv = np.empty(maxw)
    cdef cnp.ndarray[double, ndim=1] uv = np.empty(maxw)
    cdef cnp.ndarray[double, ndim=1] stot = np.empty(maxw)
    cdef cnp.ndarray[double, ndim=1] dav = np.empty(maxw)
    cdef cnp.ndarray[double, ndim=1] tmp = np.empty(maxw)

    cdef double Trow[6]
    cdef double Rrow[6]
    cdef double arow[6]
    cdef double vrow[6]
    cdef double x0v[6]
    cdef double v0[6]
    cdef double mse = 0.0, gs, z, acc, s, sp, w6, e
    cdef double co_sum = 0.0, cp_sum = 0.0, cq_sum = 0.0
    cdef double trG, kappa, coc, cpc, cqc
    cdef Py_ssize_t p, i, j, row_count
    cdef int have_da
    cdef int extra = 1 if normalize else 0

    row_count = n + extra
    for p in range(row_count):
        # primal forward on the data row (or the undeformed pseudo-row)
        if p < n:
            for i in range(k):
                acts[0, i] = feat[p, i]
        else:
            _identity_inputs_c(tiso, beta, x0v, k)
            for i in range(k):
                acts[0, i] = x0v[i]
        for h in range(H):
            for j in range(sizes[h + 1]):
                z = th[offb[h] + j]
                for i in range(sizes[h]):
                    z += th[offW[h] + j * sizes[h] + i] * acts[h, i]
                e = exp(-fabs(z))
                if z >= 0.0:
                    sig[h, j] = 1.0 / (1.0 + e)
                else:
                    sig[h, j] = e / (1.0 + e)
                # top-layer activations are never consumed here: the output
                # gradient needs only the tangent, so skip their softplus
                if h < H - 1:
                    if z > 0.0:
                        acts[h + 1, j] = z + log1p(e)
                    else:
                        acts[h + 1, j] = log1p(e)

        if p < n:
            # input gradient -> stress row -> residual -> contraction weights
            for j in range(sizes[H]):
                rv[j] = th[offout + j]
            for h in range(H - 1, -1, -1):
                for j in range(sizes[h + 1]):
                    rv[j] *= sig[h, j]
                for i in range(sizes[h]):
                    acc = 0.0
                    for j in range(sizes[h + 1]):
                        acc += rv[j] * th[offW[h] + j * sizes[h] + i]
                    tmp[i] = acc
                for i in range(sizes[h]):
                    rv[i] = tmp[i]
            for j in range(6):
                Trow[j] = 0.0
            for i in range(k):
                for j in range(6):
                    Trow[j] += 2.0 * rv[i] * dfeat[p, i, j]
            if growth:
                gs = _growth_scalar(J[p])
                for j in range(6):
                    Trow[j] += gs * Cinv6[p, j]
            if normalize:
                for j in range(6):
                    Trow[j] += o * dfeat[p, k - 1, j]
                if tiso:
                    for j in range(6):
                        Trow[j] += 2.0 * pco * dfeat[p, 3, j] + 2.0 * qco * dfeat[p, 4, j]
            for j in range(6):
                Rrow[j] = Trow[j] - T6[p, j]
                w6 = 1.0 if j < 3 else 2.0
                mse += w6 * Rrow[j] * Rrow[j]
            for i in range(k):
                acc = 0.0
                for j in range(6):
                    w6 = 1.0 if j < 3 else 2.0
                    acc += w6 * Rrow[j] * dfeat[p, i, j]
                arow[i] = acc
            if normalize:
                co_sum += arow[k - 1]
                if tiso:
                    cp_sum += arow[3]
                    cq_sum += arow[4]
            for i in range(k):
                vrow[i] = (4.0 / n) * arow[i]
        else:
            # pseudo-row input tangent from the normalization constants
            coc = (2.0 / n) * co_sum
            if tiso:
                cpc = (4.0 / n) * cp_sum
                cqc = (4.0 / n) * cq_sum
                trG = beta * beta + 2.0 / beta
                v0[0] = 2.0 * coc
                v0[1] = 4.0 * coc
                v0[2] = 2.0 * coc
                v0[3] = 0.0
                v0[4] = 2.0 * coc * trG
                v0[5] = -2.0 * coc
                kappa = 0.0
                if xsw > 0.0:
                    kappa += 2.0 * coc * trG + cqc
                elif xsw < 0.0:
                    kappa -= cpc
                v0[3] += kappa
                v0[4] -= kappa
            else:
                v0[0] = 2.0 * coc
                v0[1] = 4.0 * coc
                v0[2] = 2.0 * coc
                v0[3] = -2.0 * coc
            for i in range(k):
                vrow[i] = v0[i]

        # forward tangent sweep
        for i in range(k):
            tng[0, i] = vrow[i]
        for h in range(H):
            for j in range(sizes[h + 1]):
                acc = 0.0
                for i in range(sizes[h]):
                    acc += tng[h, i] * th[offW[h] + j * sizes[h] + i]
                tpre[h, j] = acc
                tng[h + 1, j] = sig[h, j] * acc

        # d Phi / d wout accumulates the top activation tangent
        for j in range(sizes[H]):
            gr[offout + j] += tng[H, j]

        # reverse through the tangent and primal paths
        for j in range(sizes[H]):
            rv[j] = th[offout + j]
        have_da = 0
        for h in range(H - 1, -1, -1):
            for j in range(sizes[h + 1]):
                s = sig[h, j]
                sp = s * (1.0 - s)
                uv[j] = rv[j] * s
                stot[j] = rv[j] * sp * tpre[h, j]
                if have_da:
                    stot[j] += dav[j] * s
            for j in range(sizes[h + 1]):
                for i in range(sizes[h]):
                    gr[offW[h] + j * sizes[h] + i] += (
                        stot[j] * acts[h, i] + uv[j] * tng[h, i])
                gr[offb[h] + j] += stot[j]
            if h > 0:
                for i in range(sizes[h]):
                    acc = 0.0
                    z = 0.0
                    for j in range(sizes[h + 1]):
                        acc += stot[j] * th[offW[h] + j * sizes[h] + i]
                        z += uv[j] * th[offW[h] + j * sizes[h] + i]
                    dav[i] = acc
                    tmp[i] = z
                for i in range(sizes[h]):
                    rv[i] = tmp[i]
                have_da = 1

    return mse / n, grad


# ---------------------------------------------------------------------------
# unprepared wrappers
# ---------------------------------------------------------------------------

def stress_batch(C6, theta, sizes, int tiso, double beta, int growth, int normalize):
    return stress_batch_prepared(prepare(C6, tiso, beta), theta, sizes,
                                 tiso, beta, growth, normalize)


def energy_batch(C6, theta, sizes, int tiso, double beta, int growth, int normalize):
    return energy_batch_prepared(prepare(C6, tiso, beta), theta, sizes,
                                 tiso, beta, growth, normalize)


def mse_and_grad(C6, T6, theta, sizes, int tiso, double beta, int growth, int normalize):
    return mse_and_grad_prepared(prepare(C6, tiso, beta), T6, theta, sizes,
                                 tiso, beta, growth, normalize)
