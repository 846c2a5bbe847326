"""NumPy implementations of the compiled kernels (same signatures, no fused loops)."""
from __future__ import annotations

import numpy as np

FUSED = False


def budget_prefix_max(values, floor: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.max(np.cumsum(floor - values)))


def sherman_morrison(Minv: np.ndarray, x) -> None:
    x = np.asarray(x, dtype=float)
    w = Minv @ x
    Minv -= np.outer(w, w) / (1.0 + x @ w)


def _bonus(N, var, Hr, L, bernstein):
    with np.errstate(divide="ignore", invalid="ignore"):
        if bernstein:
            b = np.sqrt(2.0 * L * var / N) + 7.0 * Hr * L / (3.0 * N)
        else:
            b = Hr * np.sqrt(L / (2.0 * N))
    return np.where(N == 0, np.inf, b)


def ucbvi_upper(N, r_hat, p_hat, r_max: float, L: float, bernstein: bool):
    N = np.asarray(N)
    H, S, A = N.shape
    Vu = np.zeros((H + 1, S))
    pi = np.zeros((H, S), dtype=np.int64)
    bonus = np.zeros((H, S, A))
    Hr = H * r_max
    for h in range(H - 1, -1, -1):
        cap = (H - h) * r_max
        nxt = Vu[h + 1]
        m = p_hat[h] @ nxt
        var = np.einsum("sat,sat->sa", p_hat[h], (nxt[None, None, :] - m[..., None]) ** 2) if bernstein else 0.0
        bonus[h] = _bonus(N[h], var, Hr, L, bernstein)
        Q = np.where(N[h] == 0, cap, np.clip(r_hat[h] + m + np.where(N[h] == 0, 0.0, bonus[h]), 0.0, cap))
        pi[h] = np.argmax(Q, axis=1)
        Vu[h] = Q.max(axis=1)
    return Vu, pi, bonus


def ucbvi_lower(N, r_hat, p_hat, r_max: float, bonus, pi):
    N = np.asarray(N)
    H, S, _ = N.shape
    Vl = np.zeros((H + 1, S))
    idx = np.arange(S)
    for h in range(H - 1, -1, -1):
        a = pi[h]
        n = N[h, idx, a]
        q = r_hat[h, idx, a] + p_hat[h, idx, a] @ Vl[h + 1] - np.where(n == 0, 0.0, bonus[h, idx, a])
        Vl[h] = np.where(n == 0, 0.0, np.clip(q, 0.0, (H - h) * r_max))
    return Vl


def policy_value(P, R, pi, s1: int) -> float:
    H, S = P.shape[:2]
    V = np.zeros(S)
    idx = np.arange(S)
    for h in range(H - 1, -1, -1):
        V = R[h, idx, pi[h]] + P[h, idx, pi[h]] @ V
    return float(V[s1])


def lsvi_bonus(Linv, phi, beta: float):
    return beta * np.sqrt(np.einsum("sai,hij,saj->hsa", phi, Linv, phi))


def lsvi_upper(Linv, b, M, phi, bonus, r_max: float):
    H = Linv.shape[0]
    S = phi.shape[0]
    Vu = np.zeros((H + 1, S))
    pi = np.zeros((H, S), dtype=np.int64)
    for h in range(H - 1, -1, -1):
        w = Linv[h] @ (b[h] + M[h] @ Vu[h + 1])
        Q = np.clip(phi @ w + bonus[h], 0.0, (H - h) * r_max)
        pi[h] = np.argmax(Q, axis=1)
        Vu[h] = Q.max(axis=1)
    return Vu, pi


def lsvi_lower(Linv, b, M, phi, bonus, r_max: float, pi):
    H = Linv.shape[0]
    S = phi.shape[0]
    Vl = np.zeros((H + 1, S))
    idx = np.arange(S)
    for h in range(H - 1, -1, -1):
        w = Linv[h] @ (b[h] + M[h] @ Vl[h + 1])
        a = pi[h]
        Vl[h] = np.clip(phi[idx, a] @ w - bonus[h, idx, a], 0.0, (H - h) * r_max)
    return Vl
