"""Gaussian naive Bayes and brute-force k-nearest neighbours."""

import numpy as np
from scipy.special import expit

_KNN_CHUNK = 512


def fit_gaussian_nb(X, y, var_floor=1e-9):
    theta = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
    var = np.vstack([X[y == c].var(axis=0) for c in (0, 1)])
    var = np.maximum(var, var_floor)
    prior = np.array([np.mean(y == 0), np.mean(y == 1)])
    return {"theta": theta, "var": var, "log_prior": np.log(prior)}


def gaussian_nb_proba(state, X):
    jll = []
    for c in (0, 1):
        mu, var = state["theta"][c], state["var"][c]
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * var)) - 0.5 * np.sum((X - mu) ** 2 / var, axis=1)
        jll.append(ll + state["log_prior"][c])
    return expit(jll[1] - jll[0])


def knn_proba(state, X, k):
    """Fraction of positive labels among the ``k`` nearest training rows.

    Squared Euclidean distance; equal distances are resolved toward the lower
    training-row index, without sorting whole rows.
    """
    Xtr = state["X"]
    ytr = state["y"].astype(np.float64)
    k = min(int(k), Xtr.shape[0])
    sq_tr = np.einsum("ij,ij->i", Xtr, Xtr)
    out = np.empty(X.shape[0], dtype=np.float64)
    for start in range(0, X.shape[0], _KNN_CHUNK):
        q = X[start:start + _KNN_CHUNK]
        d = np.einsum("ij,ij->i", q, q)[:, None] + sq_tr[None, :] - 2.0 * (q @ Xtr.T)
        np.maximum(d, 0.0, out=d)
        kth = np.partition(d, k - 1, axis=1)[:, k - 1:k]
        closer = d < kth
        tied = d == kth
        need = k - closer.sum(axis=1, keepdims=True)
        chosen = closer | (tied & (np.cumsum(tied, axis=1) <= need))
        out[start:start + q.shape[0]] = (chosen @ ytr) / k
    return out
