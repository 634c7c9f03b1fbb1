"""Hand-set T = 5, n = 2 instance simulated from the definitions.

Writes golden_tiny.csv with the played points, losses and regret of delayed
FTRL (lambda = 1) and delayed projected OGD (eta = 0.3) on the ridge family
over the unit ball. Each argmin is solved numerically, independent of any
closed form used by the library.
"""

import csv
import os

import numpy as np

R = 1.0
Z = np.array([[1.0, 0.5], [-0.5, 1.0], [0.8, -0.3], [0.2, 0.9], [-1.0, -0.4]])
Y = np.array([2.0, 1.5, -0.7, 1.2, 0.3])
D = [2, 0, 1, 0, 0]
T, N = Z.shape


def loss(t, x):
    r = Z[t] @ x - Y[t]
    return 0.5 * r * r + 0.5 * x @ x


def grad(t, x):
    return (Z[t] @ x - Y[t]) * Z[t] + x


def project(x):
    norm = np.linalg.norm(x)
    return x if norm <= R else x * (R / norm)


def observed(t):
    """Origins whose feedback is known before round t (1-based)."""
    return [tau for tau in range(1, T + 1) if tau + D[tau - 1] < t]


def pgd(f_grad, lipschitz, iters=200000):
    x = np.zeros(N)
    for _ in range(iters):
        nxt = project(x - f_grad(x) / lipschitz)
        if np.linalg.norm(nxt - x) < 1e-17:
            break
        x = nxt
    return x


def comparator():
    # Trust-region solve: (H + mu I) u = b with ||u|| = R or mu = 0.
    h = sum(np.outer(Z[t], Z[t]) + np.eye(N) for t in range(T))
    b = sum(Y[t] * Z[t] for t in range(T))
    u = np.linalg.solve(h, b)
    if np.linalg.norm(u) <= R:
        return u
    lo, hi = 0.0, 1.0
    while np.linalg.norm(np.linalg.solve(h + hi * np.eye(N), b)) > R:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(np.linalg.solve(h + mid * np.eye(N), b)) > R:
            lo = mid
        else:
            hi = mid
    return np.linalg.solve(h + hi * np.eye(N), b)


def run_ftrl(lam=1.0):
    xs, gs = [], []
    x = np.zeros(N)
    for t in range(1, T + 1):
        xs.append(x)
        gs.append(grad(t - 1, x))
        obs = observed(t + 1)
        g_sum = sum((gs[tau - 1] for tau in obs), np.zeros(N))
        pts = list(xs)

        def obj_grad(v, g_sum=g_sum, pts=pts):
            return g_sum + lam * sum(v - p for p in pts)

        x = pgd(obj_grad, lam * len(pts))
    return xs


def run_ogd(eta=0.3):
    xs, gs = [], []
    x = np.zeros(N)
    for t in range(1, T + 1):
        xs.append(x)
        gs.append(grad(t - 1, x))
        arrived = [tau for tau in range(1, T + 1) if tau + D[tau - 1] == t]
        for tau in arrived:
            x = project(x - eta * gs[tau - 1])
    return xs


def main():
    u = comparator()
    here = os.path.dirname(os.path.abspath(__file__))
    with open(os.path.join(here, "golden_tiny.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["algo", "t", "x1", "x2", "inst_loss", "cum_regret"])
        for name, xs in (("dftrl", run_ftrl()), ("dogd", run_ogd())):
            cum = 0.0
            for t, x in enumerate(xs, start=1):
                cum += loss(t - 1, x) - loss(t - 1, u)
                w.writerow([name, t] + [repr(float(v)) for v in (x[0], x[1], loss(t - 1, x), cum)])
        w.writerow(["comparator", 0, repr(float(u[0])), repr(float(u[1])), "0", "0"])


if __name__ == "__main__":
    main()
