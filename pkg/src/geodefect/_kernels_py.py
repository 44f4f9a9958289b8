"""Pure-Python/NumPy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def metric_jet1(ci, cj, exps, coeffs, x):
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    exps = np.asarray(exps)
    coeffs = np.asarray(coeffs, dtype=float)
    powers = np.prod(x[None, :] ** exps, axis=1) * coeffs
    g = np.zeros((n, n))
    np.add.at(g, (ci, cj), powers)
    dg = np.zeros((n, n, n))
    for a in range(n):
        lowered = exps.copy()
        lowered[:, a] = np.maximum(lowered[:, a] - 1, 0)
        part = coeffs * exps[:, a] * np.prod(x[None, :] ** lowered, axis=1)
        np.add.at(dg[a], (ci, cj), part)
    iu = np.triu_indices(n, 1)
    g[iu[1], iu[0]] = g[iu]
    for a in range(n):
        dg[a][iu[1], iu[0]] = dg[a][iu]
    return g, dg


def geodesic_accel(ci, cj, exps, coeffs, x, v):
    g, dg = metric_jet1(ci, cj, exps, coeffs, x)
    v = np.asarray(v, dtype=float)
    # Γ_m(v, v) = ½ (2 ∂_i g_jm - ∂_m g_ij) v^i v^j
    first = np.einsum("ijm,i,j->m", dg, v, v)
    second = np.einsum("mij,i,j->m", dg, v, v)
    low = first - 0.5 * second
    try:
        return -np.linalg.solve(g, low)
    except np.linalg.LinAlgError as exc:
        raise ZeroDivisionError("metric singular along the path") from exc


def rk4_integrate(ci, cj, exps, coeffs, x0, v0, h, steps):
    n = len(x0)
    X = np.zeros((steps + 1, n))
    V = np.zeros((steps + 1, n))
    A = np.zeros((steps + 1, n))
    X[0], V[0] = x0, v0

    def acc(x, v):
        return geodesic_accel(ci, cj, exps, coeffs, x, v)

    for s in range(steps):
        x, v = X[s], V[s]
        k1 = acc(x, v)
        A[s] = k1
        k2 = acc(x + 0.5 * h * v, v + 0.5 * h * k1)
        k3 = acc(x + 0.5 * h * (v + 0.5 * h * k1), v + 0.5 * h * k2)
        k4 = acc(x + h * (v + 0.5 * h * k2), v + h * k3)
        X[s + 1] = x + h * v + h * h / 6.0 * (k1 + k2 + k3)
        V[s + 1] = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    A[steps] = acc(X[steps], V[steps])
    return X, V, A
