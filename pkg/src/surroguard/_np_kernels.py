"""Pure-numpy implementations of the hot numeric kernels.

`accel` binds either this module or its numba twin (`_nb_kernels`) at import
time, steered by the SURROGUARD_BACKEND environment variable.  Both modules
expose the same five functions with identical signatures and must stay
arithmetically aligned: the kernel tests compare them call-for-call.

Feedforward nets travel through these kernels as a flat float64 parameter
vector plus a ``dims`` int64 array ``[d_in, h1, ..., h_k, 1]``.  Layer ``l``
maps ``dims[l] -> dims[l+1]`` through ``W_l`` (``dims[l] x dims[l+1]``) and
``b_l``, with ReLU on every layer except the last.  The flat layout is
``W_0, b_0, W_1, b_1, ...`` with each ``W`` raveled in C order.
"""

from __future__ import annotations

import numpy as np


def fnn_forward(params, dims, X):
    """Batched forward pass; returns the (n,) output vector."""
    n_layers = len(dims) - 1
    a = X
    off = 0
    for layer in range(n_layers):
        d_in = int(dims[layer])
        d_out = int(dims[layer + 1])
        w = params[off:off + d_in * d_out].reshape(d_in, d_out)
        off += d_in * d_out
        b = params[off:off + d_out]
        off += d_out
        z = a @ w + b
        a = np.maximum(z, 0.0) if layer < n_layers - 1 else z
    return a[:, 0].copy()


def fnn_value_grad(params, dims, X):
    """Forward pass plus the input gradient of the scalar output per row.

    Returns ``(y, g)`` with ``y`` of shape (n,) and ``g`` of shape
    (n, d_in).  ReLU uses the zero subgradient at exactly-zero
    pre-activations (mask is a strict ``z > 0``).
    """
    n_layers = len(dims) - 1
    a = X
    weights = []
    masks = []
    off = 0
    for layer in range(n_layers):
        d_in = int(dims[layer])
        d_out = int(dims[layer + 1])
        w = params[off:off + d_in * d_out].reshape(d_in, d_out)
        off += d_in * d_out
        b = params[off:off + d_out]
        off += d_out
        z = a @ w + b
        weights.append(w)
        if layer < n_layers - 1:
            mask = (z > 0.0).astype(np.float64)
            masks.append(mask)
            a = z * mask
        else:
            y = z[:, 0].copy()
    # reverse sweep: v holds dy/d(activation of layer `layer`)
    v = np.broadcast_to(weights[-1][:, 0], (X.shape[0], int(dims[-2]))).copy()
    for layer in range(n_layers - 2, -1, -1):
        v = (v * masks[layer]) @ weights[layer].T
    return y, v


def fnn_adam_epoch(params, dims, X, y, order, batch_size, lr, l2,
                   m, v, step, beta1, beta2, eps):
    """One epoch of minibatch Adam on the MSE + L2(weights) objective.

    ``params``, ``m`` and ``v`` are updated in place.  ``order`` is the
    pre-shuffled index array for this epoch; the trailing partial batch is
    kept.  Returns ``(train_mse, step)`` where ``train_mse`` is the mean
    squared error accumulated at pre-update parameters (the L2 penalty is
    not folded into the reported loss) and ``step`` the advanced Adam step
    counter.
    """
    n = X.shape[0]
    n_layers = len(dims) - 1
    grad = np.empty_like(params)
    total_se = 0.0
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        xb = X[idx]
        yb = y[idx]
        bsz = xb.shape[0]

        # forward, caching inputs of every layer and the hidden ReLU masks
        acts = [xb]
        masks = []
        weights = []
        a = xb
        off = 0
        for layer in range(n_layers):
            d_in = int(dims[layer])
            d_out = int(dims[layer + 1])
            w = params[off:off + d_in * d_out].reshape(d_in, d_out)
            off += d_in * d_out
            b = params[off:off + d_out]
            off += d_out
            z = a @ w + b
            weights.append(w)
            if layer < n_layers - 1:
                mask = (z > 0.0).astype(np.float64)
                masks.append(mask)
                a = z * mask
                acts.append(a)
            else:
                pred = z[:, 0]

        r = pred - yb
        total_se += float(r @ r)

        # backward, filling the flat gradient buffer back to front
        dz = (2.0 / bsz) * r[:, None]
        off = params.shape[0]
        for layer in range(n_layers - 1, -1, -1):
            d_in = int(dims[layer])
            d_out = int(dims[layer + 1])
            off -= d_out
            grad[off:off + d_out] = dz.sum(axis=0)
            off -= d_in * d_out
            gw = acts[layer].T @ dz
            if l2 > 0.0:
                gw = gw + l2 * weights[layer]
            grad[off:off + d_in * d_out] = gw.ravel()
            if layer > 0:
                dz = (dz @ weights[layer].T) * masks[layer - 1]

        step += 1
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        mhat = m / (1.0 - beta1 ** step)
        vhat = v / (1.0 - beta2 ** step)
        params -= lr * mhat / (np.sqrt(vhat) + eps)
    return total_se / n, step


def gbdt_best_split(X, g, h, min_leaf):
    """Exact greedy split search over every feature of a node's rows.

    ``X`` holds the node's rows only.  Candidate thresholds are midpoints
    between adjacent distinct sorted values; both children must keep at
    least ``min_leaf`` rows.  Gain is the Newton objective improvement
    ``GL^2/HL + GR^2/HR - G^2/H``; ties keep the first (lowest feature
    index, lowest threshold) candidate.  Returns ``(feat, thresh, gain)``
    with ``feat == -1`` when no valid split exists.
    """
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
        idx = np.argsort(X[:, j])
        gl = 0.0
        hl = 0.0
        for i in range(n - 1):
            k = idx[i]
            gl += g[k]
            hl += h[k]
            x_here = X[k, j]
            x_next = X[idx[i + 1], j]
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


def rbf_gram(X1, X2, lengthscale, signal_var):
    """Isotropic squared-exponential Gram matrix, shape (n1, n2)."""
    d2 = (
        (X1 * X1).sum(axis=1)[:, None]
        + (X2 * X2).sum(axis=1)[None, :]
        - 2.0 * (X1 @ X2.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return signal_var * np.exp(-0.5 * d2 / (lengthscale * lengthscale))
