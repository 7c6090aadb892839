"""Clustering benchmarks: user k-means, AP GMM, meganode spectral, hierarchical AP selection."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .partition import Partition, nearest_anchor
from .scenario import NetworkState


class Method(str, Enum):
    USER_KMEANS = "USER_KMEANS"
    AP_GMM = "AP_GMM"
    GRAPH_SPECTRAL = "GRAPH_SPECTRAL"
    UCR_APSEL = "UCR_APSEL"
    UC_APSEL = "UC_APSEL"


@dataclass(frozen=True)
class BaselineConfig:
    method: Method = Method.USER_KMEANS
    ap_selection_ratio: float = 0.6
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not 0 < self.ap_selection_ratio <= 1:
            raise ValueError("ap_selection_ratio must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


# k-means

@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia_history: list
    repairs: int = 0


def _sq_dist(x, c):
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=-1)


def kmeans_pp_init(x, k, rng):
    centers = [x[rng.integers(len(x))]]
    for _ in range(1, k):
        d2 = _sq_dist(x, np.asarray(centers)).min(axis=1)
        total = d2.sum()
        if total == 0:
            centers.append(x[rng.integers(len(x))])
        else:
            centers.append(x[rng.choice(len(x), p=d2 / total)])
    return np.asarray(centers, dtype=float)


def kmeans(x, k, rng, max_iters=100, tol=1e-6, init=None) -> KMeansResult:
    """Lloyd iterations; an empty cluster is re-seeded at the worst-fit point."""
    x = np.asarray(x, dtype=float)
    c = kmeans_pp_init(x, k, rng) if init is None else np.array(init, dtype=float)
    history, repairs = [], 0
    labels = np.argmin(_sq_dist(x, c), axis=1)
    for _ in range(max_iters):
        d2 = _sq_dist(x, c)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(x)), labels].sum()))
        new_c = c.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_c[j] = x[members].mean(axis=0)
            else:
                far = int(np.argmax(d2[np.arange(len(x)), labels]))
                new_c[j] = x[far]
                labels[far] = j
                repairs += 1
        shift = np.sqrt(((new_c - c) ** 2).sum(axis=1)).max()
        c = new_c
        if shift < tol:
            break
    d2 = _sq_dist(x, c)
    labels = np.argmin(d2, axis=1)
    history.append(float(d2[np.arange(len(x)), labels].sum()))
    return KMeansResult(labels, c, history, repairs)


def user_centric_kmeans(state: NetworkState, M: int, cfg: BaselineConfig) -> Partition:
    if state.K < M:
        raise ValueError("user k-means needs K >= M")
    res = kmeans(state.user_pos, M, np.random.default_rng(cfg.seed), cfg.max_iters, cfg.tol)
    ap_assign = nearest_anchor(state.ap_pos, res.centroids)
    return Partition(res.labels, ap_assign, np.ones(state.L, bool), M, state.user_ids)


# Gaussian mixture

@dataclass
class GmmResult:
    means: np.ndarray
    covs: np.ndarray
    weights: np.ndarray
    responsibilities: np.ndarray
    loglik_history: list
    resets: int = 0


def _log_gauss(x, mean, cov):
    diff = x - mean
    chol = np.linalg.cholesky(cov)
    z = np.linalg.solve(chol, diff.T)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    return -0.5 * ((z ** 2).sum(axis=0) + logdet + x.shape[1] * np.log(2 * np.pi))


def gmm_em(x, k, rng, max_iters=100, tol=1e-6) -> GmmResult:
    """EM with full covariances, ridge 1e-6 * trace, initialized by k-means."""
    x = np.asarray(x, dtype=float)
    n, dim = x.shape
    init = kmeans(x, k, rng, max_iters, tol)
    spread = np.cov(x.T).trace() / dim if n > 1 else 1.0
    spread = spread if spread > 0 else 1.0
    means = init.centroids.copy()
    weights = np.array([max((init.labels == j).mean(), 1.0 / n) for j in range(k)])
    weights /= weights.sum()
    covs = np.empty((k, dim, dim))
    for j in range(k):
        pts = x[init.labels == j]
        covs[j] = np.cov(pts.T) if len(pts) > dim else spread * np.eye(dim)
    history, resets = [], 0

    def ridge(c):
        return c + 1e-6 * max(np.trace(c), 1e-12) * np.eye(dim)

    covs = np.array([ridge(c) for c in covs])
    prev = -np.inf
    for _ in range(max_iters):
        logp = np.stack([np.log(weights[j]) + _log_gauss(x, means[j], covs[j])
                         for j in range(k)], axis=1)
        top = logp.max(axis=1, keepdims=True)
        lse = top[:, 0] + np.log(np.exp(logp - top).sum(axis=1))
        ll = float(lse.sum())
        history.append(ll)
        resp = np.exp(logp - lse[:, None])
        nk = resp.sum(axis=0)
        for j in range(k):
            if nk[j] < 1e-8:
                # dead component: restart on the worst-explained point
                means[j] = x[int(np.argmin(lse))]
                covs[j] = spread * np.eye(dim)
                weights[j] = 1.0 / n
                resets += 1
                continue
            means[j] = resp[:, j] @ x / nk[j]
            diff = x - means[j]
            cov = (resp[:, j, None] * diff).T @ diff / nk[j]
            if np.linalg.eigvalsh(cov).min() <= 1e-12 * spread:
                cov = spread * np.eye(dim)
                resets += 1
            covs[j] = ridge(cov)
            weights[j] = nk[j] / n
        weights /= weights.sum()
        if abs(ll - prev) < tol * max(1.0, abs(ll)):
            break
        prev = ll
    logp = np.stack([np.log(weights[j]) + _log_gauss(x, means[j], covs[j]) for j in range(k)],
                    axis=1)
    resp = np.exp(logp - logp.max(axis=1, keepdims=True))
    resp /= resp.sum(axis=1, keepdims=True)
    return GmmResult(means, covs, weights, resp, history, resets)


def ap_centric_gmm(state: NetworkState, M: int, cfg: BaselineConfig) -> Partition:
    if state.L < M:
        raise ValueError("AP GMM needs L >= M")
    res = gmm_em(state.ap_pos, M, np.random.default_rng(cfg.seed), cfg.max_iters, cfg.tol)
    ap_assign = np.argmax(res.responsibilities, axis=1)
    user_assign = nearest_anchor(state.user_pos, res.means)
    return Partition(user_assign, ap_assign, np.ones(state.L, bool), M, state.user_ids)


# spectral partitioning

def _round_robin(n):
    """n-1 rounds of n/2 disjoint index pairs covering every pair once (n even)."""
    players = list(range(n))
    for _ in range(n - 1):
        yield [(players[i], players[n - 1 - i]) for i in range(n // 2)]
        players = [players[0], players[-1]] + players[1:-1]


def jacobi_eigh(A, tol=1e-14, max_sweeps=60):
    """Eigenvalues (ascending) and eigenvectors of a symmetric matrix.

    Cyclic Jacobi with tournament ordering, so each round applies n/2
    independent rotations as whole-row and whole-column updates.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n == 1:
        return A.diagonal().copy(), np.ones((1, 1))
    pad = n % 2
    if pad:
        A = np.pad(A, ((0, 1), (0, 1)))
    N = A.shape[0]
    V = np.eye(N)
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        if np.linalg.norm(A - np.diag(A.diagonal())) <= tol * scale:
            break
        for pairs in _round_robin(N):
            p = np.array([a for a, _ in pairs])
            q = np.array([b for _, b in pairs])
            apq = A[p, q]
            app, aqq = A[p, p], A[q, q]
            nz = np.abs(apq) > 0
            tau = np.where(nz, (aqq - app) / (2.0 * np.where(nz, apq, 1.0)), 0.0)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(nz, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t ** 2)
            s = t * c
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
    if pad:
        A, V = A[:n, :n], V[:n, :n]
    w = A.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass
class Meganodes:
    users: list  # per node, user indices
    aps: list  # per node, AP indices


def build_meganodes(gamma: np.ndarray) -> Meganodes:
    """Pair each user with its strongest free AP, strongest pairs first."""
    K, L = gamma.shape
    if K > L:
        raise ValueError("meganode matching needs K <= L")
    order = np.argsort(-gamma, axis=None, kind="stable")
    user_ap = {}
    used_aps = set()
    for flat in order:
        k, l = divmod(int(flat), L)
        if k in user_ap or l in used_aps:
            continue
        user_ap[k] = l
        used_aps.add(l)
        if len(user_ap) == K:
            break
    users = [[k] for k in range(K)]
    aps = [[user_ap[k]] for k in range(K)]
    for l in range(L):
        if l not in used_aps:
            users.append([])
            aps.append([l])
    return Meganodes(users, aps)


def meganode_affinity(gamma: np.ndarray, nodes: Meganodes) -> np.ndarray:
    n = len(nodes.users)
    user_of = np.zeros((n, gamma.shape[0]))
    ap_of = np.zeros((n, gamma.shape[1]))
    for i, (us, bs) in enumerate(zip(nodes.users, nodes.aps)):
        user_of[i, us] = 1.0
        ap_of[i, bs] = 1.0
    cross = user_of @ gamma ** 2 @ ap_of.T  # users of i with APs of j
    W = cross + cross.T
    np.fill_diagonal(W, 0.0)
    return W


def normalized_laplacian(W: np.ndarray) -> np.ndarray:
    deg = W.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return np.eye(len(W)) - inv_sqrt[:, None] * W * inv_sqrt[None, :]


def spectral_embedding(W: np.ndarray, k: int) -> np.ndarray:
    _, vecs = jacobi_eigh(normalized_laplacian(W))
    U = vecs[:, :k]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    return U / np.where(norms > 0, norms, 1.0)


def graph_spectral(state: NetworkState, M: int, cfg: BaselineConfig) -> Partition:
    nodes = build_meganodes(state.gamma)
    emb = spectral_embedding(meganode_affinity(state.gamma, nodes), M)
    labels = kmeans(emb, M, np.random.default_rng(cfg.seed), cfg.max_iters, cfg.tol).labels
    user_assign = np.zeros(state.K, int)
    ap_assign = np.zeros(state.L, int)
    for lab, us, bs in zip(labels, nodes.users, nodes.aps):
        user_assign[us] = lab
        ap_assign[bs] = lab
    return Partition(user_assign, ap_assign, np.ones(state.L, bool), M, state.user_ids)


# hierarchical clustering with AP selection

@dataclass
class Dendrogram:
    labels: np.ndarray
    merge_heights: list


def average_linkage(x: np.ndarray, n_clusters: int) -> Dendrogram:
    """Agglomerative average-linkage clustering cut at n_clusters."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    D = np.sqrt(_sq_dist(x, x))
    np.fill_diagonal(D, np.inf)
    sizes = np.ones(n)
    alive = np.ones(n, bool)
    members = [[i] for i in range(n)]
    heights = []
    for _ in range(n - n_clusters):
        masked = np.where(alive[:, None] & alive[None, :], D, np.inf)
        i, j = divmod(int(np.argmin(masked)), n)
        if i > j:
            i, j = j, i
        heights.append(float(masked[i, j]))
        # Lance-Williams update for average linkage
        D[i, :] = (sizes[i] * D[i, :] + sizes[j] * D[j, :]) / (sizes[i] + sizes[j])
        D[:, i] = D[i, :]
        D[i, i] = np.inf
        sizes[i] += sizes[j]
        alive[j] = False
        members[i] += members[j]
        members[j] = []
    labels = np.empty(n, int)
    for new, root in enumerate(np.flatnonzero(alive)):
        labels[members[root]] = new
    return Dendrogram(labels, heights)


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def hierarchical_apsel(state: NetworkState, M: int, cfg: BaselineConfig,
                       fix_ratio: bool) -> Partition:
    """Average-linkage user clusters; each AP joins its best user's cluster.

    fix_ratio keeps round(ratio * L_m) strongest APs per cluster; otherwise the
    round(ratio * L) strongest APs network-wide stay on wherever they fall.
    APs are ranked by their strongest large-scale fading to any user.
    """
    if state.K < M:
        raise ValueError("hierarchical clustering needs K >= M")
    user_assign = average_linkage(state.user_pos, M).labels
    best_user = np.argmax(state.gamma, axis=0)
    ap_assign = user_assign[best_user]
    score = state.gamma.max(axis=0)
    ratio = cfg.ap_selection_ratio
    active = np.zeros(state.L, bool)
    if fix_ratio:
        for m in range(M):
            aps = np.flatnonzero(ap_assign == m)
            keep = _round_half_up(ratio * aps.size)
            active[aps[np.argsort(-score[aps], kind="stable")[:keep]]] = True
    else:
        keep = _round_half_up(ratio * state.L)
        active[np.argsort(-score, kind="stable")[:keep]] = True
    return Partition(user_assign, ap_assign, active, M, state.user_ids)


def run_baseline(state: NetworkState, M: int, cfg: BaselineConfig) -> Partition:
    if cfg.method is Method.USER_KMEANS:
        return user_centric_kmeans(state, M, cfg)
    if cfg.method is Method.AP_GMM:
        return ap_centric_gmm(state, M, cfg)
    if cfg.method is Method.GRAPH_SPECTRAL:
        return graph_spectral(state, M, cfg)
    return hierarchical_apsel(state, M, cfg, fix_ratio=cfg.method is Method.UCR_APSEL)


def canonical_labels(labels) -> np.ndarray:
    """Relabel so clusters are numbered by first appearance."""
    mapping = {}
    out = np.empty(len(labels), int)
    for i, lab in enumerate(labels):
        out[i] = mapping.setdefault(int(lab), len(mapping))
    return out
