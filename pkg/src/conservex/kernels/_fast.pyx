# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: per-step planners shared with the Python agents, and fused
run loops that keep a whole conservative run inside C.

The fused loops consume pre-drawn random streams in exactly the order the
Python environments would (one noise value per bandit pull, one (H, 2) uniform
block per MDP episode), so both paths produce the same trajectories.
"""
import numpy as np
from libc.math cimport sqrt, log, INFINITY

FUSED = True

cdef enum:
    META_NONE = 0
    META_BUDGET_FIRST = 1
    META_LCBCE = 2


cpdef double budget_prefix_max(const double[::1] values, double floor):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double s = 0.0, best = -INFINITY
    if n == 0:
        return 0.0
    for i in range(n):
        s += floor - values[i]
        if s > best:
            best = s
    return best


# --- small dense helpers ------------------------------------------------------

cdef inline double _quad(const double[:, ::1] M, const double[::1] x, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, row
    for i in range(d):
        row = 0.0
        for j in range(d):
            row = row + M[i, j] * x[j]
        acc = acc + x[i] * row
    return acc


cdef inline void _sherman_morrison(double[:, ::1] Minv, const double[::1] x, double[::1] work,
                                   Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double denom = 1.0
    for i in range(d):
        work[i] = 0.0
        for j in range(d):
            work[i] = work[i] + Minv[i, j] * x[j]
        denom = denom + x[i] * work[i]
    for i in range(d):
        for j in range(d):
            Minv[i, j] = Minv[i, j] - work[i] * work[j] / denom


def sherman_morrison(double[:, ::1] Minv, const double[::1] x):
    """In-place rank-one inverse update (M + x x^T)^-1."""
    cdef Py_ssize_t d = x.shape[0]
    work = np.empty(d)
    cdef double[::1] w = work
    _sherman_morrison(Minv, x, w, d)


cdef inline int _decide(int meta, long t, long T0, double lam, double floor, double accumulated,
                        long tp, double dsum, double dmax, double* new_dsum, double* new_dmax) noexcept nogil:
    """1 to play the candidate, 0 for the baseline."""
    cdef double dc, m
    if meta == META_NONE:
        return 1
    if meta == META_BUDGET_FIRST:
        return 0 if t <= T0 else 1
    dc = dsum + floor - lam
    m = dc if tp == 0 else (dc if dc > dmax else dmax)
    new_dsum[0] = dc
    new_dmax[0] = m
    return 1 if m <= accumulated else 0


cdef inline void _log_round(long t, int played, double a_v0, long n0, double dsum, double dmax,
                            unsigned char[::1] is_base, double[::1] acc, double[::1] ds,
                            double[::1] dm) noexcept nogil:
    is_base[t] = 0 if played else 1
    acc[t] = a_v0 * n0
    ds[t] = dsum
    dm[t] = dmax


def _outputs(Py_ssize_t T):
    return (np.zeros(T, dtype=np.uint8), np.full(T, -1, dtype=np.int64), np.zeros(T), np.zeros(T),
            np.full(T, np.nan), np.zeros(T), np.zeros(T), np.zeros(T))


# --- tabular planning -----------------------------------------------------------

cdef inline double _ucbvi_bonus(long n, double var, double Hr, double L, bint bernstein) noexcept nogil:
    if bernstein:
        return sqrt(2.0 * L * var / n) + 7.0 * Hr * L / (3.0 * n)
    return Hr * sqrt(L / (2.0 * n))


cdef void _ucbvi_upper(const long[:, :, ::1] N, const double[:, :, ::1] r_hat,
                       const double[:, :, :, ::1] p_hat, double r_max, double L, bint bernstein,
                       double[:, ::1] Vu, long[:, ::1] pi, double[:, :, ::1] bonus) noexcept nogil:
    cdef Py_ssize_t H = N.shape[0], S = N.shape[1], A = N.shape[2]
    cdef Py_ssize_t h, s, a, s2
    cdef double cap, m, var, dv, q, best, Hr = H * r_max
    cdef long n, arg
    for s in range(S):
        Vu[H, s] = 0.0
    for h in range(H - 1, -1, -1):
        cap = (H - h) * r_max
        for s in range(S):
            best = -INFINITY
            arg = 0
            for a in range(A):
                n = N[h, s, a]
                if n == 0:
                    bonus[h, s, a] = INFINITY
                    q = cap
                else:
                    m = 0.0
                    for s2 in range(S):
                        m = m + p_hat[h, s, a, s2] * Vu[h + 1, s2]
                    var = 0.0
                    if bernstein:
                        for s2 in range(S):
                            dv = Vu[h + 1, s2] - m
                            var = var + p_hat[h, s, a, s2] * dv * dv
                    bonus[h, s, a] = _ucbvi_bonus(n, var, Hr, L, bernstein)
                    q = r_hat[h, s, a] + m + bonus[h, s, a]
                    if q > cap:
                        q = cap
                    if q < 0.0:
                        q = 0.0
                if q > best:
                    best = q
                    arg = a
            Vu[h, s] = best
            pi[h, s] = arg


cdef void _ucbvi_lower(const long[:, :, ::1] N, const double[:, :, ::1] r_hat,
                       const double[:, :, :, ::1] p_hat, double r_max, const double[:, :, ::1] bonus,
                       const long[:, ::1] pi, double[:, ::1] Vl) noexcept nogil:
    cdef Py_ssize_t H = N.shape[0], S = N.shape[1]
    cdef Py_ssize_t h, s, a, s2
    cdef double cap, m, q
    for s in range(S):
        Vl[H, s] = 0.0
    for h in range(H - 1, -1, -1):
        cap = (H - h) * r_max
        for s in range(S):
            a = pi[h, s]
            if N[h, s, a] == 0:
                Vl[h, s] = 0.0
                continue
            m = 0.0
            for s2 in range(S):
                m = m + p_hat[h, s, a, s2] * Vl[h + 1, s2]
            q = r_hat[h, s, a] + m - bonus[h, s, a]
            if q > cap:
                q = cap
            if q < 0.0:
                q = 0.0
            Vl[h, s] = q


def ucbvi_upper(N, r_hat, p_hat, double r_max, double L, bint bernstein):
    """Optimistic pass. Returns (Vu (H+1, S), greedy policy (H, S), bonus (H, S, A))."""
    cdef long[:, :, ::1] n = np.ascontiguousarray(N, dtype=np.int64)
    H, S, A = n.shape[0], n.shape[1], n.shape[2]
    Vu = np.zeros((H + 1, S))
    pi = np.zeros((H, S), dtype=np.int64)
    bonus = np.zeros((H, S, A))
    _ucbvi_upper(n, np.ascontiguousarray(r_hat, dtype=float), np.ascontiguousarray(p_hat, dtype=float),
                 r_max, L, bernstein, Vu, pi, bonus)
    return Vu, pi, bonus


def ucbvi_lower(N, r_hat, p_hat, double r_max, bonus, pi):
    """Pessimistic evaluation of ``pi`` with the bonuses negated. Returns Vl (H+1, S)."""
    cdef long[:, :, ::1] n = np.ascontiguousarray(N, dtype=np.int64)
    Vl = np.zeros((n.shape[0] + 1, n.shape[1]))
    _ucbvi_lower(n, np.ascontiguousarray(r_hat, dtype=float), np.ascontiguousarray(p_hat, dtype=float),
                 r_max, np.ascontiguousarray(bonus, dtype=float), np.ascontiguousarray(pi, dtype=np.int64), Vl)
    return Vl


cdef double _policy_value(const double[:, :, :, ::1] P, const double[:, :, ::1] R, const long[:, ::1] pi,
                          long s1, double[:, ::1] V) noexcept nogil:
    cdef Py_ssize_t H = P.shape[0], S = P.shape[1]
    cdef Py_ssize_t h, s, a, s2
    cdef double m
    for s in range(S):
        V[H, s] = 0.0
    for h in range(H - 1, -1, -1):
        for s in range(S):
            a = pi[h, s]
            m = R[h, s, a]
            for s2 in range(S):
                m = m + P[h, s, a, s2] * V[h + 1, s2]
            V[h, s] = m
    return V[0, s1]


def policy_value(P, R, pi, long s1):
    cdef const double[:, :, :, ::1] p = np.ascontiguousarray(P, dtype=float)
    V = np.zeros((p.shape[0] + 1, p.shape[1]))
    return _policy_value(p, np.ascontiguousarray(R, dtype=float), np.ascontiguousarray(pi, dtype=np.int64), s1, V)


cdef long _rollout(const double[:, :, ::1] R, const double[:, :, :, ::1] cumP, const long[:, ::1] pi,
                   long s1, double r_max, bint bernoulli, const double[:, ::1] u,
                   long[::1] states, long[::1] actions, double[::1] rewards) noexcept nogil:
    """Sample one episode; returns nothing useful, fills the three buffers."""
    cdef Py_ssize_t H = R.shape[0], S = R.shape[1]
    cdef Py_ssize_t h, j
    cdef long s = s1, a
    for h in range(H):
        states[h] = s
        a = pi[h, s]
        actions[h] = a
        if bernoulli:
            rewards[h] = r_max if u[h, 0] < R[h, s, a] / r_max else 0.0
        else:
            rewards[h] = R[h, s, a]
        j = 0
        while j < S - 1 and not (cumP[h, s, a, j] > u[h, 1]):
            j += 1
        s = j
    states[H] = s
    return s


# --- linear MDP planning --------------------------------------------------------

cdef void _lsvi_bonus(const double[:, :, ::1] Linv, const double[:, :, ::1] phi, double beta,
                      double[:, :, ::1] bonus) noexcept nogil:
    cdef Py_ssize_t H = Linv.shape[0], S = phi.shape[0], A = phi.shape[1], d = phi.shape[2]
    cdef Py_ssize_t h, s, a
    for h in range(H):
        for s in range(S):
            for a in range(A):
                bonus[h, s, a] = beta * sqrt(_quad(Linv[h], phi[s, a], d))


cdef void _lsvi_weights(const double[:, ::1] Linv, const double[::1] b, const double[:, ::1] M,
                        const double[::1] V, double[::1] target, double[::1] w) noexcept nogil:
    cdef Py_ssize_t d = b.shape[0], S = V.shape[0]
    cdef Py_ssize_t i, j
    for i in range(d):
        target[i] = b[i]
        for j in range(S):
            target[i] = target[i] + M[i, j] * V[j]
    for i in range(d):
        w[i] = 0.0
        for j in range(d):
            w[i] = w[i] + Linv[i, j] * target[j]


cdef void _lsvi_upper(const double[:, :, ::1] Linv, const double[:, ::1] b, const double[:, :, ::1] M,
                      const double[:, :, ::1] phi, const double[:, :, ::1] bonus, double r_max,
                      double[:, ::1] Vu, long[:, ::1] pi, double[::1] target, double[::1] w) noexcept nogil:
    cdef Py_ssize_t H = Linv.shape[0], S = phi.shape[0], A = phi.shape[1], d = phi.shape[2]
    cdef Py_ssize_t h, s, a, i
    cdef double cap, q, best
    cdef long arg
    for s in range(S):
        Vu[H, s] = 0.0
    for h in range(H - 1, -1, -1):
        cap = (H - h) * r_max
        _lsvi_weights(Linv[h], b[h], M[h], Vu[h + 1], target, w)
        for s in range(S):
            best = -INFINITY
            arg = 0
            for a in range(A):
                q = bonus[h, s, a]
                for i in range(d):
                    q = q + phi[s, a, i] * w[i]
                if q > cap:
                    q = cap
                if q < 0.0:
                    q = 0.0
                if q > best:
                    best = q
                    arg = a
            Vu[h, s] = best
            pi[h, s] = arg


cdef void _lsvi_lower(const double[:, :, ::1] Linv, const double[:, ::1] b, const double[:, :, ::1] M,
                      const double[:, :, ::1] phi, const double[:, :, ::1] bonus, double r_max,
                      const long[:, ::1] pi, double[:, ::1] Vl, double[::1] target, double[::1] w) noexcept nogil:
    cdef Py_ssize_t H = Linv.shape[0], S = phi.shape[0], d = phi.shape[2]
    cdef Py_ssize_t h, s, a, i
    cdef double cap, q
    for s in range(S):
        Vl[H, s] = 0.0
    for h in range(H - 1, -1, -1):
        cap = (H - h) * r_max
        _lsvi_weights(Linv[h], b[h], M[h], Vl[h + 1], target, w)
        for s in range(S):
            a = pi[h, s]
            q = -bonus[h, s, a]
            for i in range(d):
                q = q + phi[s, a, i] * w[i]
            if q > cap:
                q = cap
            if q < 0.0:
                q = 0.0
            Vl[h, s] = q


def lsvi_bonus(Linv, phi, double beta):
    cdef const double[:, :, ::1] li = np.ascontiguousarray(Linv, dtype=float)
    cdef const double[:, :, ::1] f = np.ascontiguousarray(phi, dtype=float)
    bonus = np.zeros((li.shape[0], f.shape[0], f.shape[1]))
    _lsvi_bonus(li, f, beta, bonus)
    return bonus


def lsvi_upper(Linv, b, M, phi, bonus, double r_max):
    """Optimistic pass from sufficient statistics. Returns (Vu (H+1, S), greedy policy (H, S))."""
    cdef const double[:, :, ::1] f = np.ascontiguousarray(phi, dtype=float)
    H = np.shape(Linv)[0]
    Vu = np.zeros((H + 1, f.shape[0]))
    pi = np.zeros((H, f.shape[0]), dtype=np.int64)
    _lsvi_upper(np.ascontiguousarray(Linv, dtype=float), np.ascontiguousarray(b, dtype=float),
                np.ascontiguousarray(M, dtype=float), f, np.ascontiguousarray(bonus, dtype=float),
                r_max, Vu, pi, np.zeros(f.shape[2]), np.zeros(f.shape[2]))
    return Vu, pi


def lsvi_lower(Linv, b, M, phi, bonus, double r_max, pi):
    cdef const double[:, :, ::1] f = np.ascontiguousarray(phi, dtype=float)
    H = np.shape(Linv)[0]
    Vl = np.zeros((H + 1, f.shape[0]))
    _lsvi_lower(np.ascontiguousarray(Linv, dtype=float), np.ascontiguousarray(b, dtype=float),
                np.ascontiguousarray(M, dtype=float), f, np.ascontiguousarray(bonus, dtype=float),
                r_max, np.ascontiguousarray(pi, dtype=np.int64), Vl, np.zeros(f.shape[2]), np.zeros(f.shape[2]))
    return Vl


# --- fused run loops ----------------------------------------------------------------

def run_mab(means, double delta, double alpha, double v0, int meta, long T0, noise, long T,
            choices=None):
    """UCB (or, with ``choices``, a uniform-random control) on a MAB.

    ``noise[k]`` is the noise of the k-th non-baseline pull; ``choices[k]`` the
    0-based arm of the k-th proposal of the control agent.
    """
    cdef const double[::1] mu = np.ascontiguousarray(means, dtype=float)
    cdef const double[::1] eta = np.ascontiguousarray(noise, dtype=float)
    cdef bint control = choices is not None
    cdef const long[::1] ch = np.ascontiguousarray(choices if control else np.zeros(1), dtype=np.int64)
    cdef Py_ssize_t K = mu.shape[0], i
    out = _outputs(T)
    cdef unsigned char[::1] is_base = out[0]
    cdef long[::1] act = out[1]
    cdef double[::1] rew = out[2], val = out[3], lcb = out[4], acc = out[5], ds = out[6], dm = out[7]
    cnt_arr = np.zeros(K, dtype=np.int64)
    sums_arr = np.zeros(K)
    ucb_arr = np.full(K, INFINITY)
    lcb_arr = np.zeros(K)
    cdef long[::1] cnt = cnt_arr
    cdef double[::1] sums = sums_arr, ucb = ucb_arr, lo = lcb_arr
    cdef double floor = (1.0 - alpha) * v0, a_v0 = alpha * v0
    cdef double dsum = 0.0, dmax = 0.0, nds = 0.0, ndm = 0.0, best, mean, bon, x
    cdef long t, tp = 0, n0 = 0, arm, nprop = 0, n
    cdef int played
    with nogil:
        for t in range(T):
            if meta == META_BUDGET_FIRST and t + 1 <= T0:
                n0 += 1
                rew[t] = v0
                val[t] = v0
                _log_round(t, 0, a_v0, n0, dsum, dmax, is_base, acc, ds, dm)
                continue
            if control:
                arm = ch[nprop]
            else:
                arm = 0
                best = ucb[0]
                for i in range(1, K):
                    if ucb[i] > best:
                        best = ucb[i]
                        arm = i
            nprop += 1
            played = _decide(meta, t + 1, T0, lo[arm], floor, a_v0 * n0, tp, dsum, dmax, &nds, &ndm)
            if played:
                x = mu[arm] + eta[tp]
                tp += 1
                act[t] = arm + 1
                rew[t] = x
                val[t] = mu[arm]
                lcb[t] = lo[arm]
                if meta == META_LCBCE:
                    dsum = nds
                    dmax = ndm
                cnt[arm] += 1
                sums[arm] += x
                n = cnt[arm]
                if not control:
                    mean = sums[arm] / n
                    bon = sqrt(2.0 * log(K * (<double>n) * n * n / delta) / n)
                    ucb[arm] = mean + bon
                    lo[arm] = mean - bon if mean - bon > 0.0 else 0.0
            else:
                n0 += 1
                rew[t] = v0
                val[t] = v0
            _log_round(t, played, a_v0, n0, dsum, dmax, is_base, acc, ds, dm)
    return out + (cnt_arr, sums_arr)


def run_linear(actions, rewards, double delta, double lam_reg, double B_norm,
               double D_norm, double alpha, double v0, int meta, long T0, noise, long T):
    """LinUCB with per-action ellipsoid lower bounds on a finite action set."""
    cdef const double[:, ::1] feats = np.ascontiguousarray(actions, dtype=float)
    cdef const double[::1] r = np.ascontiguousarray(rewards, dtype=float)
    cdef const double[::1] eta = np.ascontiguousarray(noise, dtype=float)
    cdef Py_ssize_t n_act = feats.shape[0], d = feats.shape[1], i, j, a
    out = _outputs(T)
    cdef unsigned char[::1] is_base = out[0]
    cdef long[::1] act = out[1]
    cdef double[::1] rew = out[2], val = out[3], lcb = out[4], acc = out[5], ds = out[6], dm = out[7]
    Vinv_arr = np.eye(d) / lam_reg
    mom_arr = np.zeros(d)
    theta_arr = np.zeros(d)
    cdef double[:, ::1] Vinv = Vinv_arr
    cdef double[::1] mom = mom_arr, th = theta_arr, work = np.zeros(d)
    cdef double floor = (1.0 - alpha) * v0, a_v0 = alpha * v0
    cdef double dsum = 0.0, dmax = 0.0, nds = 0.0, ndm = 0.0
    cdef double beta, best, score, est, width, lam_c = 0.0, x
    cdef double log_term = 2.0 * log(1.0 / delta), root_lam_B = sqrt(lam_reg) * B_norm
    cdef long t, tp = 0, n0 = 0, arm = 0, n_upd = 0
    cdef bint stale = True
    cdef int played
    with nogil:
        for t in range(T):
            if stale:
                beta = root_lam_B + sqrt(log_term + d * log((d * lam_reg + n_upd * D_norm * D_norm) / (d * lam_reg)))
                best = -INFINITY
                for a in range(n_act):
                    est = 0.0
                    for i in range(d):
                        est = est + th[i] * feats[a, i]
                    width = beta * sqrt(_quad(Vinv, feats[a], d))
                    score = est + width
                    if score > best:
                        best = score
                        arm = a
                        lam_c = est - width
                if lam_c < 0.0:
                    lam_c = 0.0
                stale = False
            played = _decide(meta, t + 1, T0, lam_c, floor, a_v0 * n0, tp, dsum, dmax, &nds, &ndm)
            if played:
                x = r[arm] + eta[tp]
                tp += 1
                act[t] = arm
                rew[t] = x
                val[t] = r[arm]
                lcb[t] = lam_c
                if meta == META_LCBCE:
                    dsum = nds
                    dmax = ndm
                _sherman_morrison(Vinv, feats[arm], work, d)
                for i in range(d):
                    mom[i] = mom[i] + x * feats[arm, i]
                for i in range(d):
                    th[i] = 0.0
                    for j in range(d):
                        th[i] = th[i] + Vinv[i, j] * mom[j]
                n_upd += 1
                stale = True
            else:
                n0 += 1
                rew[t] = v0
                val[t] = v0
            _log_round(t, played, a_v0, n0, dsum, dmax, is_base, acc, ds, dm)
    return out + (Vinv_arr, mom_arr)


def run_tabular(P, R, cumP, long s1, double r_max, bint bernoulli, double delta, long horizon,
                bint bernstein, double alpha, double v0, int meta, long T0, u, long T):
    """UCBVI with the pessimistic evaluation of its own greedy policy as the lower bound."""
    cdef const double[:, :, :, ::1] p = np.ascontiguousarray(P, dtype=float)
    cdef const double[:, :, ::1] rr = np.ascontiguousarray(R, dtype=float)
    cdef const double[:, :, :, ::1] cp = np.ascontiguousarray(cumP, dtype=float)
    cdef const double[:, :, ::1] uu = np.ascontiguousarray(u, dtype=float)
    cdef Py_ssize_t H = p.shape[0], S = p.shape[1], A = p.shape[2], h, s2
    out = _outputs(T)
    cdef unsigned char[::1] is_base = out[0]
    cdef long[::1] act = out[1]
    cdef double[::1] rew = out[2], val = out[3], lcb = out[4], acc = out[5], ds = out[6], dm = out[7]
    N_arr = np.zeros((H, S, A), dtype=np.int64)
    nxt_arr = np.zeros((H, S, A, S), dtype=np.int64)
    rsum_arr = np.zeros((H, S, A))
    cdef long[:, :, ::1] N = N_arr
    cdef long[:, :, :, ::1] nxt = nxt_arr
    cdef double[:, :, ::1] rsum = rsum_arr, r_hat = np.zeros((H, S, A)), bonus = np.zeros((H, S, A))
    cdef double[:, :, :, ::1] p_hat = np.zeros((H, S, A, S))
    cdef double[:, ::1] Vu = np.zeros((H + 1, S)), Vl = np.zeros((H + 1, S)), Vtrue = np.zeros((H + 1, S))
    cdef long[:, ::1] pi = np.zeros((H, S), dtype=np.int64)
    cdef long[::1] states = np.zeros(H + 1, dtype=np.int64), actions = np.zeros(H, dtype=np.int64)
    cdef double[::1] rewards = np.zeros(H)
    cdef double L = log(5.0 * S * A * H * (horizon if horizon > 1 else 1) / delta)
    cdef double floor = (1.0 - alpha) * v0, a_v0 = alpha * v0
    cdef double dsum = 0.0, dmax = 0.0, nds = 0.0, ndm = 0.0, lam_c = 0.0, v_pi = 0.0, total
    cdef long t, tp = 0, n0 = 0, s, a, n
    cdef bint stale = True
    cdef int played
    with nogil:
        for t in range(T):
            if stale:
                _ucbvi_upper(N, r_hat, p_hat, r_max, L, bernstein, Vu, pi, bonus)
                _ucbvi_lower(N, r_hat, p_hat, r_max, bonus, pi, Vl)
                lam_c = Vl[0, s1]
                v_pi = _policy_value(p, rr, pi, s1, Vtrue)
                stale = False
            played = _decide(meta, t + 1, T0, lam_c, floor, a_v0 * n0, tp, dsum, dmax, &nds, &ndm)
            if played:
                _rollout(rr, cp, pi, s1, r_max, bernoulli, uu[tp], states, actions, rewards)
                tp += 1
                total = 0.0
                for h in range(H):
                    total = total + rewards[h]
                    s = states[h]
                    a = actions[h]
                    N[h, s, a] += 1
                    nxt[h, s, a, states[h + 1]] += 1
                    rsum[h, s, a] += rewards[h]
                    n = N[h, s, a]
                    r_hat[h, s, a] = rsum[h, s, a] / n
                    for s2 in range(S):
                        p_hat[h, s, a, s2] = (<double>nxt[h, s, a, s2]) / n
                rew[t] = total
                val[t] = v_pi
                lcb[t] = lam_c
                if meta == META_LCBCE:
                    dsum = nds
                    dmax = ndm
                stale = True
            else:
                n0 += 1
                rew[t] = v0
                val[t] = v0
            _log_round(t, played, a_v0, n0, dsum, dmax, is_base, acc, ds, dm)
    return out + (N_arr, nxt_arr, rsum_arr)


def run_lowrank(phi, P, R, cumP, long s1, bint bernoulli, double beta, double lam_reg,
                double alpha, double v0, int meta, long T0, u, long T):
    """LSVI-UCB on a finite-state linear MDP, planning from per-stage sufficient statistics."""
    cdef const double[:, :, ::1] f = np.ascontiguousarray(phi, dtype=float)
    cdef const double[:, :, :, ::1] p = np.ascontiguousarray(P, dtype=float)
    cdef const double[:, :, ::1] rr = np.ascontiguousarray(R, dtype=float)
    cdef const double[:, :, :, ::1] cp = np.ascontiguousarray(cumP, dtype=float)
    cdef const double[:, :, ::1] uu = np.ascontiguousarray(u, dtype=float)
    cdef Py_ssize_t H = p.shape[0], S = p.shape[1], A = p.shape[2], d = f.shape[2], h, i
    out = _outputs(T)
    cdef unsigned char[::1] is_base = out[0]
    cdef long[::1] act = out[1]
    cdef double[::1] rew = out[2], val = out[3], lcb = out[4], acc = out[5], ds = out[6], dm = out[7]
    Linv_arr = np.repeat((np.eye(d) / lam_reg)[None], H, axis=0)
    b_arr = np.zeros((H, d))
    M_arr = np.zeros((H, d, S))
    cdef double[:, :, ::1] Linv = Linv_arr, M = M_arr, bonus = np.zeros((H, S, A))
    cdef double[:, ::1] bvec = b_arr
    cdef double[:, ::1] Vu = np.zeros((H + 1, S)), Vl = np.zeros((H + 1, S)), Vtrue = np.zeros((H + 1, S))
    cdef long[:, ::1] pi = np.zeros((H, S), dtype=np.int64)
    cdef long[::1] states = np.zeros(H + 1, dtype=np.int64), actions = np.zeros(H, dtype=np.int64)
    cdef double[::1] rewards = np.zeros(H), target = np.zeros(d), w = np.zeros(d), work = np.zeros(d)
    cdef double floor = (1.0 - alpha) * v0, a_v0 = alpha * v0
    cdef double dsum = 0.0, dmax = 0.0, nds = 0.0, ndm = 0.0, lam_c = 0.0, v_pi = 0.0, total
    cdef long t, tp = 0, n0 = 0, s, a
    cdef bint stale = True
    cdef int played
    with nogil:
        for t in range(T):
            if stale:
                _lsvi_bonus(Linv, f, beta, bonus)
                _lsvi_upper(Linv, bvec, M, f, bonus, 1.0, Vu, pi, target, w)
                _lsvi_lower(Linv, bvec, M, f, bonus, 1.0, pi, Vl, target, w)
                lam_c = Vl[0, s1]
                v_pi = _policy_value(p, rr, pi, s1, Vtrue)
                stale = False
            played = _decide(meta, t + 1, T0, lam_c, floor, a_v0 * n0, tp, dsum, dmax, &nds, &ndm)
            if played:
                _rollout(rr, cp, pi, s1, 1.0, bernoulli, uu[tp], states, actions, rewards)
                tp += 1
                total = 0.0
                for h in range(H):
                    total = total + rewards[h]
                    s = states[h]
                    a = actions[h]
                    _sherman_morrison(Linv[h], f[s, a], work, d)
                    for i in range(d):
                        bvec[h, i] = bvec[h, i] + f[s, a, i] * rewards[h]
                        M[h, i, states[h + 1]] = M[h, i, states[h + 1]] + f[s, a, i]
                rew[t] = total
                val[t] = v_pi
                lcb[t] = lam_c
                if meta == META_LCBCE:
                    dsum = nds
                    dmax = ndm
                stale = True
            else:
                n0 += 1
                rew[t] = v0
                val[t] = v0
            _log_round(t, played, a_v0, n0, dsum, dmax, is_base, acc, ds, dm)
    return out + (Linv_arr, b_arr, M_arr)
