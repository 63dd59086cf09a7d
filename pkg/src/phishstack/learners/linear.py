"""Logistic regression, hinge-loss linear SVM and Platt calibration."""

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_expit
from sklearn.linear_model import SGDClassifier


def _lr_objective(params, X, ypm, C):
    w, b = params[:-1], params[-1]
    z = X @ w + b
    m = ypm * z
    loss = 0.5 * w @ w - C * np.sum(log_expit(m))
    # d/dz of -log sigmoid(y z) = -y * sigmoid(-y z)
    g = -C * ypm * expit(-m)
    grad = np.empty_like(params)
    grad[:-1] = w + X.T @ g
    grad[-1] = g.sum()
    return loss, grad


def fit_logistic(X, y, C=1.0, tol=1e-5, max_iter=1000):
    """L2-penalised logistic regression (unpenalised intercept) by L-BFGS."""
    ypm = 2.0 * y - 1.0
    x0 = np.zeros(X.shape[1] + 1)
    res = minimize(_lr_objective, x0, args=(X, ypm, C), jac=True, method="L-BFGS-B",
                   options={"gtol": tol, "maxiter": max_iter})
    return {"coef": res.x[:-1].copy(), "intercept": np.array([res.x[-1]])}


def linear_margin(state, X):
    return X @ state["coef"] + state["intercept"][0]


def fit_platt(margins, y):
    """Sigmoid ``P = 1 / (1 + exp(a*f + b))`` with Platt's smoothed targets."""
    n_pos = float(np.sum(y == 1))
    n_neg = float(y.size - n_pos)
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(ab):
        a, b = ab
        z = -(a * margins + b)  # logit of P
        loss = -np.sum(t * log_expit(z) + (1 - t) * log_expit(-z))
        r = expit(z) - t
        return loss, np.array([-np.sum(r * margins), -np.sum(r)])

    b0 = np.log((n_neg + 1.0) / (n_pos + 1.0))
    res = minimize(nll, np.array([0.0, b0]), jac=True, method="BFGS", options={"gtol": 1e-10})
    return float(res.x[0]), float(res.x[1])


def platt_proba(margins, a, b):
    return expit(-(a * margins + b))


def fit_linear_svm(X, y, calib_idx, train_idx, C=1.0, epochs=200, random_state=0):
    """Hinge-loss SGD on ``train_idx``; Platt sigmoid fitted on ``calib_idx``."""
    Xt, yt = X[train_idx], y[train_idx]
    sgd = SGDClassifier(loss="hinge", penalty="l2", alpha=1.0 / (C * Xt.shape[0]),
                        max_iter=epochs, tol=None, shuffle=True, average=True,
                        random_state=random_state)
    sgd.fit(Xt, yt)
    state = {"coef": sgd.coef_.ravel().astype(np.float64).copy(),
             "intercept": sgd.intercept_.astype(np.float64).copy()}
    a, b = fit_platt(linear_margin(state, X[calib_idx]), y[calib_idx])
    state["platt"] = np.array([a, b])
    return state
