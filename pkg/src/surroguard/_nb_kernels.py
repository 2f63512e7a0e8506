"""Numba-compiled twins of the kernels in ``_np_kernels``.

Same five entry points, same signatures, same arithmetic (up to floating
point reduction order).  Hidden-layer activations and ReLU masks live in
flat per-call buffers because nopython mode has no ragged list of arrays.
Kernels are cached to disk so the compile cost is paid once per machine.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True, fastmath=False)


@njit(**_JIT)
def _layer_offsets(dims):
    n_layers = dims.shape[0] - 1
    w_off = np.empty(n_layers, np.int64)
    b_off = np.empty(n_layers, np.int64)
    off = 0
    for layer in range(n_layers):
        w_off[layer] = off
        off += dims[layer] * dims[layer + 1]
        b_off[layer] = off
        off += dims[layer + 1]
    return w_off, b_off


@njit(**_JIT)
def fnn_forward(params, dims, X):
    n = X.shape[0]
    n_layers = dims.shape[0] - 1
    w_off, b_off = _layer_offsets(dims)
    a = X.copy()
    for layer in range(n_layers):
        d_in = dims[layer]
        d_out = dims[layer + 1]
        w = params[w_off[layer]:w_off[layer] + d_in * d_out].reshape(d_in, d_out)
        b = params[b_off[layer]:b_off[layer] + d_out]
        z = np.dot(a, w)
        for i in range(n):
            for j in range(d_out):
                z[i, j] += b[j]
        if layer < n_layers - 1:
            for i in range(n):
                for j in range(d_out):
                    if z[i, j] < 0.0:
                        z[i, j] = 0.0
        a = z
    out = np.empty(n)
    for i in range(n):
        out[i] = a[i, 0]
    return out


@njit(**_JIT)
def fnn_value_grad(params, dims, X):
    n = X.shape[0]
    n_layers = dims.shape[0] - 1
    w_off, b_off = _layer_offsets(dims)
    n_hidden = 0
    for layer in range(1, n_layers):
        n_hidden += dims[layer]
    h_off = np.empty(n_layers, np.int64)
    acc = 0
    for layer in range(n_layers - 1):
        h_off[layer] = acc
        acc += dims[layer + 1]

    masks = np.empty((n, n_hidden))
    y = np.empty(n)
    a = X.copy()
    for layer in range(n_layers):
        d_in = dims[layer]
        d_out = dims[layer + 1]
        w = params[w_off[layer]:w_off[layer] + d_in * d_out].reshape(d_in, d_out)
        b = params[b_off[layer]:b_off[layer] + d_out]
        z = np.dot(a, w)
        for i in range(n):
            for j in range(d_out):
                z[i, j] += b[j]
        if layer < n_layers - 1:
            base = h_off[layer]
            for i in range(n):
                for j in range(d_out):
                    if z[i, j] > 0.0:
                        masks[i, base + j] = 1.0
                    else:
                        masks[i, base + j] = 0.0
                        z[i, j] = 0.0
            a = z
        else:
            for i in range(n):
                y[i] = z[i, 0]

    # reverse sweep on dy/d(activation)
    d_last = dims[n_layers - 1]
    w_last = params[w_off[n_layers - 1]:w_off[n_layers - 1] + d_last].reshape(d_last, 1)
    v = np.empty((n, d_last))
    for i in range(n):
        for j in range(d_last):
            v[i, j] = w_last[j, 0]
    for layer in range(n_layers - 2, -1, -1):
        d_in = dims[layer]
        d_out = dims[layer + 1]
        base = h_off[layer]
        for i in range(n):
            for j in range(d_out):
                v[i, j] *= masks[i, base + j]
        w = params[w_off[layer]:w_off[layer] + d_in * d_out].reshape(d_in, d_out)
        wt = np.ascontiguousarray(w.T)
        v = np.dot(v, wt)
    return y, v


@njit(**_JIT)
def fnn_adam_epoch(params, dims, X, y, order, batch_size, lr, l2,
                   m, v, step, beta1, beta2, eps):
    n = X.shape[0]
    n_layers = dims.shape[0] - 1
    w_off, b_off = _layer_offsets(dims)
    n_hidden = 0
    for layer in range(1, n_layers):
        n_hidden += dims[layer]
    h_off = np.empty(n_layers, np.int64)
    acc = 0
    for layer in range(n_layers - 1):
        h_off[layer] = acc
        acc += dims[layer + 1]

    grad = np.empty_like(params)
    total_se = 0.0
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        bsz = stop - start
        xb = np.empty((bsz, dims[0]))
        yb = np.empty(bsz)
        for i in range(bsz):
            k = order[start + i]
            for j in range(dims[0]):
                xb[i, j] = X[k, j]
            yb[i] = y[k]

        acts = np.empty((bsz, n_hidden))   # hidden activations (post-ReLU)
        masks = np.empty((bsz, n_hidden))
        a = xb
        pred = np.empty(bsz)
        for layer in range(n_layers):
            d_in = dims[layer]
            d_out = dims[layer + 1]
            w = params[w_off[layer]:w_off[layer] + d_in * d_out].reshape(d_in, d_out)
            b = params[b_off[layer]:b_off[layer] + d_out]
            z = np.dot(a, w)
            for i in range(bsz):
                for j in range(d_out):
                    z[i, j] += b[j]
            if layer < n_layers - 1:
                base = h_off[layer]
                for i in range(bsz):
                    for j in range(d_out):
                        if z[i, j] > 0.0:
                            masks[i, base + j] = 1.0
                        else:
                            masks[i, base + j] = 0.0
                            z[i, j] = 0.0
                        acts[i, base + j] = z[i, j]
                a = z
            else:
                for i in range(bsz):
                    pred[i] = z[i, 0]

        r = np.empty(bsz)
        for i in range(bsz):
            r[i] = pred[i] - yb[i]
            total_se += r[i] * r[i]

        dz = np.empty((bsz, 1))
        scale = 2.0 / bsz
        for i in range(bsz):
            dz[i, 0] = scale * r[i]
        for layer in range(n_layers - 1, -1, -1):
            d_in = dims[layer]
            d_out = dims[layer + 1]
            gb = b_off[layer]
            for j in range(d_out):
                s = 0.0
                for i in range(bsz):
                    s += dz[i, j]
                grad[gb + j] = s
            if layer > 0:
                a_in = np.ascontiguousarray(
                    acts[:, h_off[layer - 1]:h_off[layer - 1] + d_in])
            else:
                a_in = xb
            gw = np.dot(np.ascontiguousarray(a_in.T), dz)
            w = params[w_off[layer]:w_off[layer] + d_in * d_out].reshape(d_in, d_out)
            gwf = gw.ravel()
            base = w_off[layer]
            if l2 > 0.0:
                wf = params[base:base + d_in * d_out]
                for p in range(d_in * d_out):
                    grad[base + p] = gwf[p] + l2 * wf[p]
            else:
                for p in range(d_in * d_out):
                    grad[base + p] = gwf[p]
            if layer > 0:
                wt = np.ascontiguousarray(w.T)
                da = np.dot(dz, wt)
                mb = h_off[layer - 1]
                for i in range(bsz):
                    for j in range(d_in):
                        da[i, j] *= masks[i, mb + j]
                dz = da

        step += 1
        c1 = 1.0 - beta1 ** step
        c2 = 1.0 - beta2 ** step
        for p in range(params.shape[0]):
            gg = grad[p]
            m[p] = beta1 * m[p] + (1.0 - beta1) * gg
            v[p] = beta2 * v[p] + (1.0 - beta2) * gg * gg
            params[p] -= lr * (m[p] / c1) / (np.sqrt(v[p] / c2) + eps)
    return total_se / n, step


@njit(**_JIT)
def gbdt_best_split(X, g, h, min_leaf):
    n, n_feat = X.shape
    eps = 1e-12
    g_tot = 0.0
    h_tot = 0.0
    for i in range(n):
        g_tot += g[i]
        h_tot += h[i]
    parent = g_tot * g_tot / (h_tot + eps)
    best_feat = -1
    best_thresh = 0.0
    best_gain = 0.0
    for j in range(n_feat):
        col = X[:, j].copy()
        idx = np.argsort(col)
        gl = 0.0
        hl = 0.0
        for i in range(n - 1):
            k = idx[i]
            gl += g[k]
            hl += h[k]
            x_here = col[k]
            x_next = col[idx[i + 1]]
            if x_here == x_next:
                continue
            n_left = i + 1
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            gr = g_tot - gl
            hr = h_tot - hl
            gain = gl * gl / (hl + eps) + gr * gr / (hr + eps) - parent
            if gain > best_gain:
                best_gain = gain
                best_feat = j
                best_thresh = 0.5 * (x_here + x_next)
    return best_feat, best_thresh, best_gain


@njit(**_JIT)
def rbf_gram(X1, X2, lengthscale, signal_var):
    n1 = X1.shape[0]
    n2 = X2.shape[0]
    d = X1.shape[1]
    inv = -0.5 / (lengthscale * lengthscale)
    K = np.empty((n1, n2))
    for i in range(n1):
        for j in range(n2):
            s = 0.0
            for k in range(d):
                diff = X1[i, k] - X2[j, k]
                s += diff * diff
            K[i, j] = signal_var * np.exp(inv * s)
    return K
