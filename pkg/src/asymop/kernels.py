"""Hot loops of the solver and the grid oracle.

Each kernel has a numba implementation (explicit loops) and a numpy one
(vectorized). ``ASYMOP_DISABLE_NUMBA=1`` selects the numpy path at import;
both are importable directly for benchmarking and cross-checking.

Array conventions: ``s``, ``f`` are float64 ``(E,)``; ``tri`` is int64
``(T, 4)`` of edge indices (ascending within a row for ``grid_search``, whose
``tri_tab`` holds one flattened ``n^4`` cost table per row); ``configs`` is float64 ``(16, 4)``; ``bal`` is a
bool ``(16,)`` mask; ``params`` is ``[lam1, lam0, t1, t2]``.
"""
import math

import numpy as np

from ._accel import BACKEND, HAS_NUMBA, njit


# -- numba path ---------------------------------------------------------------

@njit(cache=True)
def _obj_grad_nb(s, f, tri, configs, bal, params, grad):
    lam1 = params[0]
    lam0 = params[1]
    t1 = params[2]
    t2 = params[3]
    obj = 0.0
    for e in range(s.shape[0]):
        d = s[e] - f[e]
        if d >= 0.0:
            obj += lam1 * d
            grad[e] = lam1
        else:
            obj -= lam0 * d
            grad[e] = -lam0
    for t in range(tri.shape[0]):
        for z in range(16):
            l1 = 0.0
            for i in range(4):
                l1 += abs(s[tri[t, i]] - configs[z, i])
            prox = 1.0 - l1
            if bal[z]:
                obj += t1 * (1.0 - max(0.0, prox))
                coef = -t1
            else:
                obj += t2 * max(0.0, prox)
                coef = t2
            if prox >= 0.0 and coef != 0.0:
                for i in range(4):
                    k = tri[t, i]
                    # d prox / d s_k = -sign(s_k - z_k), positive side at the kink
                    if s[k] - configs[z, i] >= 0.0:
                        grad[k] -= coef
                    else:
                        grad[k] += coef
    return obj


@njit(cache=True)
def _objective_nb(s, f, tri, configs, bal, params):
    grad = np.zeros(s.shape[0])
    return _obj_grad_nb(s, f, tri, configs, bal, params, grad)


@njit(cache=True)
def _subgradient_nb(s, f, tri, configs, bal, params):
    grad = np.zeros(s.shape[0])
    _obj_grad_nb(s, f, tri, configs, bal, params, grad)
    return grad


@njit(cache=True)
def _descend_nb(s0, f, tri, configs, bal, params, max_iters, eta0, tol, patience):
    n = s0.shape[0]
    s = s0.copy()
    grad = np.zeros(n)
    best_s = s.copy()
    best = np.inf
    ref = np.inf
    since = 0
    iters = 0
    converged = False
    for k in range(1, max_iters + 1):
        iters = k
        for e in range(n):
            grad[e] = 0.0
        val = _obj_grad_nb(s, f, tri, configs, bal, params, grad)
        if val < best:
            best = val
            for e in range(n):
                best_s[e] = s[e]
        since += 1
        if since >= patience:
            if ref - best < tol:
                converged = True
                break
            ref = best
            since = 0
        gmax = 0.0
        for e in range(n):
            if abs(grad[e]) > gmax:
                gmax = abs(grad[e])
        if gmax == 0.0:
            converged = True
            break
        step = eta0 / math.sqrt(k) / gmax
        for e in range(n):
            v = s[e] - step * grad[e]
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            s[e] = v
    if not converged:
        val = _objective_nb(s, f, tri, configs, bal, params)
        if val < best:
            best = val
            for e in range(n):
                best_s[e] = s[e]
    return best_s, best, iters, converged


@njit(cache=True)
def _grid_search_nb(edge_tab, tri_tab, tri):
    # Odometer over all but the last edge; the last edge runs in an inner loop
    # that only touches the terms depending on it.
    n_edges = edge_tab.shape[0]
    n = edge_tab.shape[1]
    last = n_edges - 1
    n_tri = tri.shape[0]
    stride = np.zeros(n_tri, dtype=np.int64)
    for t in range(n_tri):
        for q in range(4):
            if tri[t, q] == last:
                stride[t] = n ** (3 - q)
    idx = np.zeros(n_edges, dtype=np.int64)
    best_idx = idx.copy()
    best = np.inf
    base_flat = np.zeros(n_tri, dtype=np.int64)
    outer = 1
    for _ in range(last):
        outer *= n
    for _ in range(outer):
        fixed = 0.0
        for e in range(last):
            fixed += edge_tab[e, idx[e]]
        for t in range(n_tri):
            flat = 0
            for q in range(4):
                k = tri[t, q]
                flat = flat * n + (0 if k == last else idx[k])
            if stride[t] == 0:
                fixed += tri_tab[t, flat]
            base_flat[t] = flat
        for i in range(n):
            val = fixed + edge_tab[last, i]
            for t in range(n_tri):
                if stride[t] != 0:
                    val += tri_tab[t, base_flat[t] + i * stride[t]]
            if val < best:
                best = val
                for e in range(last):
                    best_idx[e] = idx[e]
                best_idx[last] = i
        j = last - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < n:
                break
            idx[j] = 0
            j -= 1
    return best_idx, best


# -- numpy path ---------------------------------------------------------------

def _obj_grad_np(s, f, tri, configs, bal, params):
    lam1, lam0, t1, t2 = params
    d = s - f
    obj = lam1 * np.maximum(0.0, d).sum() + lam0 * np.maximum(0.0, -d).sum()
    grad = np.where(d >= 0.0, lam1, -lam0)
    if tri.shape[0]:
        S = s[tri]                                   # (T, 4)
        diff = S[:, None, :] - configs[None, :, :]   # (T, 16, 4)
        prox = 1.0 - np.abs(diff).sum(axis=2)        # (T, 16)
        pos = np.maximum(0.0, prox)
        obj += np.where(bal, t1 * (1.0 - pos), t2 * pos).sum()
        coef = np.where(bal, -t1, t2) * (prox >= 0.0)
        dS = -(coef[:, :, None] * np.where(diff >= 0.0, 1.0, -1.0)).sum(axis=1)
        np.add.at(grad, tri.ravel(), dS.ravel())
    return float(obj), grad


def _objective_np(s, f, tri, configs, bal, params):
    return _obj_grad_np(s, f, tri, configs, bal, params)[0]


def _subgradient_np(s, f, tri, configs, bal, params):
    return _obj_grad_np(s, f, tri, configs, bal, params)[1]


def _descend_np(s0, f, tri, configs, bal, params, max_iters, eta0, tol, patience):
    s = s0.copy()
    best_s = s.copy()
    best = np.inf
    ref = np.inf
    since = 0
    iters = 0
    converged = False
    for k in range(1, max_iters + 1):
        iters = k
        val, grad = _obj_grad_np(s, f, tri, configs, bal, params)
        if val < best:
            best = val
            best_s = s.copy()
        since += 1
        if since >= patience:
            if ref - best < tol:
                converged = True
                break
            ref = best
            since = 0
        gmax = np.abs(grad).max()
        if gmax == 0.0:
            converged = True
            break
        s = np.clip(s - (eta0 / math.sqrt(k) / gmax) * grad, 0.0, 1.0)
    if not converged:
        val = _objective_np(s, f, tri, configs, bal, params)
        if val < best:
            best, best_s = val, s.copy()
    return best_s, best, iters, converged


def _grid_search_np(edge_tab, tri_tab, tri):
    n_edges, n = edge_tab.shape
    m = min(n_edges, 4)
    lead = n_edges - m
    axes = [np.arange(n).reshape([n if j == a else 1 for j in range(m)]) for a in range(m)]
    trail_sum = np.zeros((n,) * m)
    for a in range(m):
        trail_sum = trail_sum + edge_tab[lead + a][axes[a]]
    best = np.inf
    best_idx = np.zeros(n_edges, dtype=np.int64)
    for head in np.ndindex(*((n,) * lead)):
        val = trail_sum + sum(edge_tab[e, head[e]] for e in range(lead))
        for t in range(tri.shape[0]):
            ix = tuple(head[k] if k < lead else axes[k - lead] for k in tri[t])
            val = val + tri_tab[t].reshape(n, n, n, n)[ix]
        flat = int(np.argmin(val))
        v = val.flat[flat]
        if v < best:
            best = float(v)
            best_idx[:lead] = head
            best_idx[lead:] = np.unravel_index(flat, val.shape) if m else ()
    return best_idx, best


if HAS_NUMBA:
    objective = _objective_nb
    subgradient = _subgradient_nb
    descend = _descend_nb
    grid_search = _grid_search_nb
else:
    objective = _objective_np
    subgradient = _subgradient_np
    descend = _descend_np
    grid_search = _grid_search_np

__all__ = ["BACKEND", "objective", "subgradient", "descend", "grid_search"]
