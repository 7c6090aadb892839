"""Independent scalar re-derivations used as test oracles."""
import math

import numpy as np


def rate_by_terms(k, gamma, h, user_assign, ap_assign, ap_active, blocks, power, noise):
    """Achievable rate of user k summed term by term with explicit loops.

    blocks maps subnetwork -> (ap indices, user indices, L_m x K_m precoder).
    """
    m = user_assign[k]

    def gain(n, j):
        # |g_{k,B_n} w_j|^2 where w_j is user j's precoder over the APs of B_n
        aps, users, W = blocks[n]
        col = list(users).index(j)
        acc = 0j
        for row, l in enumerate(aps):
            acc += gamma[k][l] * h[k][l] * W[row][col]
        return abs(acc) ** 2

    desired = gain(m, k) * power[k]
    intra = 0.0
    inter = 0.0
    for j in range(len(user_assign)):
        n = user_assign[j]
        if j == k:
            continue
        if n == m:
            intra += gain(m, j) * power[j]
        else:
            inter += gain(n, j) * power[j]
    return math.log2(1.0 + desired / (intra + inter + noise))


def central_difference(f, arrays, step=1e-6):
    """Numerical gradient of scalar f() w.r.t. every entry of each array (in place)."""
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = a[idx]
            a[idx] = orig + step
            up = f()
            a[idx] = orig - step
            down = f()
            a[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return grads
