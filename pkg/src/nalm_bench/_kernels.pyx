# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused loss-and-gradient kernels for the arithmetic modules.

Each ``*_grad`` function runs the forward pass over a batch, writes the
gradient of the batch MSE into the supplied output arrays (overwriting them)
and returns the MSE. Shapes: x is n x I, y is n x O, weights are I x O, the
iNALU gate is 1 x O and the NPU gate is 1 x I.
"""
from libc.math cimport exp, log, tanh, cos, sin, fabs, sqrt, M_PI

import numpy as np


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef inline double _sign(double z) nogil:
    if z > 0:
        return 1.0
    if z < 0:
        return -1.0
    return 0.0


def adam_update(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps, long step,
                double clip_lo, double clip_hi):
    """In-place bias-corrected Adam on flat arrays; ``g`` is clipped first."""
    cdef Py_ssize_t k, n = p.shape[0]
    cdef double gk, bc1 = 1.0 - beta1 ** step, bc2 = 1.0 - beta2 ** step
    cdef double mhat, vhat
    with nogil:
        for k in range(n):
            gk = g[k]
            if gk < clip_lo:
                gk = clip_lo
            elif gk > clip_hi:
                gk = clip_hi
            m[k] = beta1 * m[k] + (1.0 - beta1) * gk
            v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk
            mhat = m[k] / bc1
            vhat = v[k] / bc2
            p[k] -= lr * mhat / (sqrt(vhat) + eps)


def nalu_grad(const double[:, ::1] x, const double[:, ::1] y,
              const double[:, ::1] w_hat, const double[:, ::1] m_hat, const double[:, ::1] gate,
              double[:, ::1] d_w_hat, double[:, ::1] d_m_hat, double[:, ::1] d_gate,
              double scale, int mode, double eps):
    """NALU family. mode 0: gated NALU, 1: additive path only, 2: multiplicative only.

    ``scale`` multiplies every pre-activation (1 for base e, ln(phi) for the
    golden-ratio variant).
    """
    cdef Py_ssize_t n = x.shape[0], I = x.shape[1], O = y.shape[1]
    cdef Py_ssize_t b, i, o
    cdef double[:, ::1] W = np.empty((I, O))
    cdef double[:, ::1] TH = np.empty((I, O))
    cdef double[:, ::1] SG = np.empty((I, O))
    cdef double[:, ::1] dW = np.zeros((I, O))
    cdef double[::1] L = np.empty(I)
    cdef double a, s, u, g, m, yh, r, d, loss = 0.0, norm = 2.0 / (n * O)

    with nogil:
        for i in range(I):
            for o in range(O):
                TH[i, o] = tanh(scale * w_hat[i, o])
                SG[i, o] = _sigmoid(scale * m_hat[i, o])
                W[i, o] = TH[i, o] * SG[i, o]
                d_gate[i, o] = 0.0
        for b in range(n):
            for i in range(I):
                L[i] = log(fabs(x[b, i]) + eps)
            for o in range(O):
                a = 0.0
                s = 0.0
                u = 0.0
                for i in range(I):
                    a = a + x[b, i] * W[i, o]
                    s = s + L[i] * W[i, o]
                    u = u + x[b, i] * gate[i, o]
                m = exp(s)
                if mode == 1:
                    g = 1.0
                elif mode == 2:
                    g = 0.0
                else:
                    g = _sigmoid(scale * u)
                yh = g * a + (1.0 - g) * m
                r = yh - y[b, o]
                loss = loss + r * r
                d = norm * r
                for i in range(I):
                    dW[i, o] = dW[i, o] + d * (g * x[b, i] + (1.0 - g) * m * L[i])
                if mode == 0:
                    for i in range(I):
                        d_gate[i, o] = d_gate[i, o] + d * (a - m) * g * (1.0 - g) * scale * x[b, i]
        for i in range(I):
            for o in range(O):
                d_w_hat[i, o] = dW[i, o] * SG[i, o] * scale * (1.0 - TH[i, o] * TH[i, o])
                d_m_hat[i, o] = dW[i, o] * TH[i, o] * scale * SG[i, o] * (1.0 - SG[i, o])
    return loss / (n * O)


def inalu_grad(const double[:, ::1] x, const double[:, ::1] y,
               const double[:, ::1] wa_hat, const double[:, ::1] ma_hat,
               const double[:, ::1] wm_hat, const double[:, ::1] mm_hat, const double[:, ::1] gate,
               double[:, ::1] d_wa_hat, double[:, ::1] d_ma_hat,
               double[:, ::1] d_wm_hat, double[:, ::1] d_mm_hat, double[:, ::1] d_gate,
               double eps, double omega):
    cdef Py_ssize_t n = x.shape[0], I = x.shape[1], O = y.shape[1]
    cdef Py_ssize_t b, i, o
    cdef double[:, ::1] THa = np.empty((I, O))
    cdef double[:, ::1] SGa = np.empty((I, O))
    cdef double[:, ::1] THm = np.empty((I, O))
    cdef double[:, ::1] SGm = np.empty((I, O))
    cdef double[:, ::1] Wa = np.empty((I, O))
    cdef double[:, ::1] Wm = np.empty((I, O))
    cdef double[:, ::1] dWa = np.zeros((I, O))
    cdef double[:, ::1] dWm = np.zeros((I, O))
    cdef double[::1] L = np.empty(I)
    cdef double[::1] sg = np.empty(I)
    cdef double[::1] q = np.empty(I)
    cdef double[::1] pre = np.empty(I + 1)
    cdef double[::1] suf = np.empty(I + 1)
    cdef double[::1] G = np.empty(O)
    cdef double a, s, m, dm_ds, msv, yh, r, d, absw, loss = 0.0, norm = 2.0 / (n * O)

    with nogil:
        for i in range(I):
            for o in range(O):
                THa[i, o] = tanh(wa_hat[i, o])
                SGa[i, o] = _sigmoid(ma_hat[i, o])
                Wa[i, o] = THa[i, o] * SGa[i, o]
                THm[i, o] = tanh(wm_hat[i, o])
                SGm[i, o] = _sigmoid(mm_hat[i, o])
                Wm[i, o] = THm[i, o] * SGm[i, o]
        for o in range(O):
            G[o] = _sigmoid(gate[0, o])
            d_gate[0, o] = 0.0
        for b in range(n):
            for i in range(I):
                absw = fabs(x[b, i])
                if absw < eps:
                    absw = eps
                L[i] = log(absw)
                sg[i] = _sign(x[b, i])
            for o in range(O):
                a = 0.0
                s = 0.0
                for i in range(I):
                    a = a + x[b, i] * Wa[i, o]
                    s = s + L[i] * Wm[i, o]
                if s <= omega:
                    m = exp(s)
                    dm_ds = m
                else:
                    m = exp(omega)
                    dm_ds = 0.0
                pre[0] = 1.0
                for i in range(I):
                    absw = fabs(Wm[i, o])
                    q[i] = sg[i] * absw + 1.0 - absw
                    pre[i + 1] = pre[i] * q[i]
                msv = pre[I]
                suf[I] = 1.0
                for i in range(I - 1, -1, -1):
                    suf[i] = suf[i + 1] * q[i]
                yh = G[o] * a + (1.0 - G[o]) * m * msv
                r = yh - y[b, o]
                loss = loss + r * r
                d = norm * r
                for i in range(I):
                    dWa[i, o] = dWa[i, o] + d * G[o] * x[b, i]
                    dWm[i, o] = dWm[i, o] + d * (1.0 - G[o]) * (
                        msv * dm_ds * L[i]
                        + m * (sg[i] - 1.0) * _sign(Wm[i, o]) * pre[i] * suf[i + 1])
                d_gate[0, o] = d_gate[0, o] + d * (a - m * msv) * G[o] * (1.0 - G[o])
        for i in range(I):
            for o in range(O):
                d_wa_hat[i, o] = dWa[i, o] * SGa[i, o] * (1.0 - THa[i, o] * THa[i, o])
                d_ma_hat[i, o] = dWa[i, o] * THa[i, o] * SGa[i, o] * (1.0 - SGa[i, o])
                d_wm_hat[i, o] = dWm[i, o] * SGm[i, o] * (1.0 - THm[i, o] * THm[i, o])
                d_mm_hat[i, o] = dWm[i, o] * THm[i, o] * SGm[i, o] * (1.0 - SGm[i, o])
    return loss / (n * O)


def nau_grad(const double[:, ::1] x, const double[:, ::1] y,
             const double[:, ::1] w, double[:, ::1] d_w):
    cdef Py_ssize_t n = x.shape[0], I = x.shape[1], O = y.shape[1]
    cdef Py_ssize_t b, i, o
    cdef double[:, ::1] Wc = np.empty((I, O))
    cdef double a, r, d, loss = 0.0, norm = 2.0 / (n * O)
    with nogil:
        for i in range(I):
            for o in range(O):
                Wc[i, o] = min(max(w[i, o], -1.0), 1.0)
                d_w[i, o] = 0.0
        for b in range(n):
            for o in range(O):
                a = 0.0
                for i in range(I):
                    a = a + x[b, i] * Wc[i, o]
                r = a - y[b, o]
                loss = loss + r * r
                d = norm * r
                for i in range(I):
                    d_w[i, o] = d_w[i, o] + d * x[b, i]
        for i in range(I):
            for o in range(O):
                if w[i, o] < -1.0 or w[i, o] > 1.0:
                    d_w[i, o] = 0.0
    return loss / (n * O)


def nmu_grad(const double[:, ::1] x, const double[:, ::1] y,
             const double[:, ::1] w, double[:, ::1] d_w):
    cdef Py_ssize_t n = x.shape[0], I = x.shape[1], O = y.shape[1]
    cdef Py_ssize_t b, i, o
    cdef double[:, ::1] Wc = np.empty((I, O))
    cdef double[::1] q = np.empty(I)
    cdef double[::1] pre = np.empty(I + 1)
    cdef double[::1] suf = np.empty(I + 1)
    cdef double r, d, loss = 0.0, norm = 2.0 / (n * O)
    with nogil:
        for i in range(I):
            for o in range(O):
                Wc[i, o] = min(max(w[i, o], 0.0), 1.0)
                d_w[i, o] = 0.0
        for b in range(n):
            for o in range(O):
                pre[0] = 1.0
                for i in range(I):
                    q[i] = Wc[i, o] * x[b, i] + 1.0 - Wc[i, o]
                    pre[i + 1] = pre[i] * q[i]
                suf[I] = 1.0
                for i in range(I - 1, -1, -1):
                    suf[i] = suf[i + 1] * q[i]
                r = pre[I] - y[b, o]
                loss = loss + r * r
                d = norm * r
                for i in range(I):
                    d_w[i, o] = d_w[i, o] + d * (x[b, i] - 1.0) * pre[i] * suf[i + 1]
        for i in range(I):
            for o in range(O):
                if w[i, o] < 0.0 or w[i, o] > 1.0:
                    d_w[i, o] = 0.0
    return loss / (n * O)


def npu_grad(const double[:, ::1] x, const double[:, ::1] y,
             const double[:, ::1] w_re, const double[:, ::1] w_im, const double[:, ::1] gate,
             double[:, ::1] d_w_re, double[:, ::1] d_w_im, double[:, ::1] d_gate,
             double eps, bint real_only):
    """NPU; with ``real_only`` the imaginary weights are ignored (RealNPU)."""
    cdef Py_ssize_t n = x.shape[0], I = x.shape[1], O = y.shape[1]
    cdef Py_ssize_t b, i, o
    cdef double[::1] gc = np.empty(I)
    cdef double[::1] ax = np.empty(I)
    cdef double[::1] rr = np.empty(I)
    cdef double[::1] lr = np.empty(I)
    cdef double[::1] k = np.empty(I)
    cdef double[::1] neg = np.empty(I)
    cdef double[::1] dlr = np.empty(I)
    cdef double[::1] dk = np.empty(I)
    cdef double A, B, ea, yh, dA, dB, r, d, wim, loss = 0.0, norm = 2.0 / (n * O)
    with nogil:
        for i in range(I):
            gc[i] = min(max(gate[0, i], 0.0), 1.0)
            d_gate[0, i] = 0.0
            for o in range(O):
                d_w_re[i, o] = 0.0
                d_w_im[i, o] = 0.0
        for b in range(n):
            for i in range(I):
                ax[i] = fabs(x[b, i]) + eps
                rr[i] = gc[i] * ax[i] + 1.0 - gc[i]
                lr[i] = log(rr[i])
                neg[i] = 1.0 if x[b, i] < 0 else 0.0
                k[i] = M_PI * gc[i] * neg[i]
                dlr[i] = 0.0
                dk[i] = 0.0
            for o in range(O):
                A = 0.0
                B = 0.0
                for i in range(I):
                    wim = 0.0 if real_only else w_im[i, o]
                    A = A + w_re[i, o] * lr[i] - wim * k[i]
                    B = B + wim * lr[i] + w_re[i, o] * k[i]
                ea = exp(A)
                yh = ea * cos(B)
                r = yh - y[b, o]
                loss = loss + r * r
                d = norm * r
                dA = d * yh
                dB = -d * ea * sin(B)
                for i in range(I):
                    wim = 0.0 if real_only else w_im[i, o]
                    d_w_re[i, o] = d_w_re[i, o] + dA * lr[i] + dB * k[i]
                    if not real_only:
                        d_w_im[i, o] = d_w_im[i, o] - dA * k[i] + dB * lr[i]
                    dlr[i] = dlr[i] + dA * w_re[i, o] + dB * wim
                    dk[i] = dk[i] - dA * wim + dB * w_re[i, o]
            for i in range(I):
                d_gate[0, i] = d_gate[0, i] + dlr[i] * (ax[i] - 1.0) / rr[i] + dk[i] * M_PI * neg[i]
        for i in range(I):
            if gate[0, i] < 0.0 or gate[0, i] > 1.0:
                d_gate[0, i] = 0.0
    return loss / (n * O)
