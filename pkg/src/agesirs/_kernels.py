"""Compiled inner loops for the model field, the costate field and their RK4 passes.

Parameter arrays follow ``model.PARAM_NAMES`` order:
``b1, delta1, delta2, beta1, beta2, beta3, beta4, mu, d1, d2, u11, u12, alpha, m``.
Controls are given on grid nodes and interpolated linearly inside a step, so the
RK4 midpoint stages use the average of the two neighbouring nodes.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def model_rhs(x, u11, u12, p, out):
    b1 = p[0]
    delta1 = p[1]
    delta2 = p[2]
    beta1 = p[3]
    beta2 = p[4]
    beta3 = p[5]
    beta4 = p[6]
    mu = p[7]
    d1 = p[8]
    d2 = p[9]
    alpha = p[12]
    m = p[13]
    S1 = x[0]
    I1 = x[1]
    R1 = x[2]
    S2 = x[3]
    I2 = x[4]
    R2 = x[5]

    treat = u12 * I2 * I2 / (1.0 + alpha * I2 * I2)
    inf1 = beta1 * S1 * I1 + beta2 * S1 * I2
    inf2 = beta3 * S2 * I1 + beta4 * S2 * I2

    out[0] = b1 + delta1 * R1 - inf1 - mu * S1 - m * S1
    out[1] = inf1 - d1 * I1 - mu * I1 - u11 * I1
    out[2] = u11 * I1 - mu * R1 - delta1 * R1 - m * R1
    out[3] = m * S1 + delta2 * R2 - inf2 - mu * S2
    out[4] = inf2 - d2 * I2 - mu * I2 - treat
    out[5] = m * R1 + treat - mu * R2 - delta2 * R2


@njit(cache=True)
def costate_rhs(x, lam, u11, u12, p, out):
    """``-dH/dx`` with running cost ``I1 + I2`` (control terms do not depend on x)."""
    delta1 = p[1]
    delta2 = p[2]
    beta1 = p[3]
    beta2 = p[4]
    beta3 = p[5]
    beta4 = p[6]
    mu = p[7]
    d1 = p[8]
    d2 = p[9]
    alpha = p[12]
    m = p[13]
    S1 = x[0]
    I1 = x[1]
    S2 = x[3]
    I2 = x[4]
    lS1 = lam[0]
    lI1 = lam[1]
    lR1 = lam[2]
    lS2 = lam[3]
    lI2 = lam[4]
    lR2 = lam[5]

    den = 1.0 + alpha * I2 * I2
    dtreat = 2.0 * u12 * I2 / (den * den)
    force1 = beta1 * I1 + beta2 * I2
    force2 = beta3 * I1 + beta4 * I2

    out[0] = lS1 * (force1 + mu + m) - lI1 * force1 - lS2 * m
    out[1] = (
        -1.0
        + lS1 * beta1 * S1
        - lI1 * (beta1 * S1 - d1 - mu - u11)
        - lR1 * u11
        + lS2 * beta3 * S2
        - lI2 * beta3 * S2
    )
    out[2] = -lS1 * delta1 + lR1 * (mu + delta1 + m) - lR2 * m
    out[3] = lS2 * (force2 + mu) - lI2 * force2
    out[4] = (
        -1.0
        + lS1 * beta2 * S1
        - lI1 * beta2 * S1
        + lS2 * beta4 * S2
        - lI2 * (beta4 * S2 - d2 - mu - dtreat)
        - lR2 * dtreat
    )
    out[5] = -lS2 * delta2 + lR2 * (mu + delta2)


@njit(cache=True)
def state_pass(x0, u11, u12, p, h):
    """Forward RK4 over ``len(u11) - 1`` steps.

    Returns the sample array and the index of the first non-finite sample
    (``-1`` when the pass completed cleanly).
    """
    n = u11.shape[0] - 1
    X = np.zeros((n + 1, 6))
    X[0] = x0
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    y = np.empty(6)
    for k in range(n):
        xk = X[k]
        a1 = u11[k]
        a2 = u12[k]
        c1 = u11[k + 1]
        c2 = u12[k + 1]
        m1 = 0.5 * (a1 + c1)
        m2 = 0.5 * (a2 + c2)
        model_rhs(xk, a1, a2, p, k1)
        for i in range(6):
            y[i] = xk[i] + 0.5 * h * k1[i]
        model_rhs(y, m1, m2, p, k2)
        for i in range(6):
            y[i] = xk[i] + 0.5 * h * k2[i]
        model_rhs(y, m1, m2, p, k3)
        for i in range(6):
            y[i] = xk[i] + h * k3[i]
        model_rhs(y, c1, c2, p, k4)
        ok = True
        for i in range(6):
            v = xk[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            X[k + 1, i] = v
            if not np.isfinite(v):
                ok = False
        if not ok:
            return X, k + 1
    return X, -1


@njit(cache=True)
def costate_pass(X, u11, u12, p, h):
    """Backward RK4 for the costates from ``lam(T) = 0``.

    States between nodes are interpolated linearly, matching the control
    treatment in :func:`state_pass`.
    """
    n = u11.shape[0] - 1
    L = np.zeros((n + 1, 6))
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    y = np.empty(6)
    xm = np.empty(6)
    for k in range(n, 0, -1):
        lk = L[k]
        for i in range(6):
            xm[i] = 0.5 * (X[k, i] + X[k - 1, i])
        m1 = 0.5 * (u11[k] + u11[k - 1])
        m2 = 0.5 * (u12[k] + u12[k - 1])
        costate_rhs(X[k], lk, u11[k], u12[k], p, k1)
        for i in range(6):
            y[i] = lk[i] - 0.5 * h * k1[i]
        costate_rhs(xm, y, m1, m2, p, k2)
        for i in range(6):
            y[i] = lk[i] - 0.5 * h * k2[i]
        costate_rhs(xm, y, m1, m2, p, k3)
        for i in range(6):
            y[i] = lk[i] - h * k3[i]
        costate_rhs(X[k - 1], y, u11[k - 1], u12[k - 1], p, k4)
        ok = True
        for i in range(6):
            v = lk[i] - h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            L[k - 1, i] = v
            if not np.isfinite(v):
                ok = False
        if not ok:
            return L, k - 1
    return L, -1
