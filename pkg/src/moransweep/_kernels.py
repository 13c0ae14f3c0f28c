"""Hot numerical kernels shared by the simulator and the ODE solvers.

Every function here is decorated with :func:`moransweep._compat.njit` so
the package runs compiled by default and uncompiled (bit-identically)
when ``MORANSWEEP_DISABLE_NUMBA=1`` is set.

Randomness is explicit: kernels receive a 4-word xoshiro256++ state and
advance it in place, so a trial's trajectory depends only on its seed.
"""

from __future__ import annotations

import numpy as np

from ._compat import njit

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0xD1B54A32D192ED03)
_INV_2POW53 = 1.1102230246251565e-16

# Ordered enumeration of the 12 composition-changing transitions (a -> b).
_TA = np.array([a for a in range(4) for b in range(4) if a != b], dtype=np.int64)
_TB = np.array([b for a in range(4) for b in range(4) if a != b], dtype=np.int64)


# ---------------------------------------------------------------------------
# RNG: splitmix64 seeding, xoshiro256++ stream
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _mix64(z):
    """splitmix64 finalizer."""
    z = np.uint64(z + _GOLD)
    z = np.uint64((z ^ (z >> np.uint64(30))) * _MIX1)
    z = np.uint64((z ^ (z >> np.uint64(27))) * _MIX2)
    return np.uint64(z ^ (z >> np.uint64(31)))


@njit(cache=True, nogil=True)
def seed_state(master_seed, stream):
    """Derive an independent 4-word generator state from (seed, stream)."""
    base = np.uint64(_mix64(master_seed) ^ _mix64(np.uint64(stream + _STREAM_SALT)))
    s = np.empty(4, np.uint64)
    nonzero = False
    for i in range(4):
        s[i] = _mix64(np.uint64(base + np.uint64(i) * _GOLD))
        if s[i] != np.uint64(0):
            nonzero = True
    if not nonzero:
        s[0] = _GOLD
    return s


@njit(cache=True, nogil=True)
def _rotl(x, k):
    return np.uint64((x << k) | (x >> (np.uint64(64) - k)))


@njit(cache=True, nogil=True)
def next_u64(s):
    """xoshiro256++ step."""
    out = np.uint64(_rotl(np.uint64(s[0] + s[3]), np.uint64(23)) + s[0])
    t = np.uint64(s[1] << np.uint64(17))
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], np.uint64(45))
    return out


@njit(cache=True, nogil=True)
def next_uniform(s):
    """Uniform double in [0, 1) with 53 random bits."""
    return (next_u64(s) >> np.uint64(11)) * _INV_2POW53


@njit(cache=True, nogil=True)
def next_exponential(s):
    """Unit-mean exponential via the inverse CDF."""
    return -np.log1p(-next_uniform(s))


# ---------------------------------------------------------------------------
# Moran engine
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def takeover_matrix(sigma, gamma):
    """M[a, b]: probability the b individual replaces the a individual
    when an (a, b) pair competes.  Types are 2*i + j for bits (i, j)."""
    m = np.empty((4, 4), np.float64)
    for a in range(4):
        ia = a >> 1
        ja = a & 1
        for b in range(4):
            ib = b >> 1
            jb = b & 1
            m[a, b] = 0.5 * (1.0 + sigma * (ib - ia) + sigma * gamma * (jb - ja))
    return m


@njit(cache=True, nogil=True)
def _fill_rates(n, two_n, pba, quart, rates):
    """Fill the 12 ordered-pair transition rates; returns their sum.

    rate(a -> b) combines selection-resampling (n_a n_b p(b,a) / 2N) and
    single-locus recombination replacement (rho n_a / 4N times the count
    of partners donating the changed locus).
    """
    m0 = n[0] + n[2]  # second-locus digit 0
    m1 = n[1] + n[3]
    k0 = n[0] + n[1]  # first-locus digit 0
    k1 = n[2] + n[3]
    inv2n = 1.0 / two_n
    total = 0.0
    for idx in range(12):
        a = _TA[idx]
        b = _TB[idx]
        r = n[a] * n[b] * pba[a, b] * inv2n
        if quart > 0.0:
            if (a >> 1) == (b >> 1):
                r += quart * n[a] * (m0 if (b & 1) == 0 else m1)
            elif (a & 1) == (b & 1):
                r += quart * n[a] * (k0 if (b >> 1) == 0 else k1)
        rates[idx] = r
        total += r
    return total


@njit(cache=True, nogil=True)
def single_event(n, two_n, pba, quart, rates, s):
    """Sample one replacement event and apply it to the counts in place.

    Returns (a, b, waiting_time); a == -1 signals an absorbing state.
    """
    total = _fill_rates(n, two_n, pba, quart, rates)
    if total <= 0.0:
        return np.int64(-1), np.int64(-1), 0.0
    dt = -np.log1p(-next_uniform(s)) / total
    u = next_uniform(s) * total
    acc = 0.0
    pick = 11
    for idx in range(12):
        acc += rates[idx]
        if u < acc:
            pick = idx
            break
    a = _TA[pick]
    b = _TB[pick]
    n[a] -= 1
    n[b] += 1
    return a, b, dt


@njit(cache=True, nogil=True)
def run_to_fixation(two_n, sigma, gamma, rho, n00, n01, n10, n11, s, max_events,
                    threshold_count):
    """Simulate until one type reaches count 2N.

    Returns (fixed_type, time, events, hit) where fixed_type is -1 when
    max_events was exhausted first, and hit records whether the count of
    type 11 ever reached threshold_count (<= 0 disables tracking).
    """
    pba = takeover_matrix(sigma, gamma)
    quart = rho / (2.0 * two_n)
    n = np.empty(4, np.int64)
    n[0] = n00
    n[1] = n01
    n[2] = n10
    n[3] = n11
    rates = np.empty(12, np.float64)
    t = 0.0
    ev = np.int64(0)
    hit = np.int64(1) if (threshold_count > 0 and n11 >= threshold_count) else np.int64(0)
    while True:
        for a in range(4):
            if n[a] == two_n:
                return np.int64(a), t, ev, hit
        if ev >= max_events:
            return np.int64(-1), t, ev, hit
        a, b, dt = single_event(n, two_n, pba, quart, rates, s)
        if a < 0:
            # unreachable while polymorphic: some ordered pair always has
            # positive takeover probability
            return np.int64(-1), t, ev, hit
        t += dt
        ev += 1
        if threshold_count > 0 and b == 3 and n[3] >= threshold_count:
            hit = np.int64(1)


@njit(cache=True, nogil=True)
def first_hit_or_loss(two_n, sigma, gamma, rho, n00, n01, n10, n11, s, max_events,
                      target_count):
    """Run until type 10 reaches target_count individuals or is lost for good.

    Returns (hit, time, events); hit == -1 when max_events was exhausted.
    Loss is final once n10 == n11 == 0 (recombination cannot recreate the
    newer mutation) or another type fixes.
    """
    pba = takeover_matrix(sigma, gamma)
    quart = rho / (2.0 * two_n)
    n = np.empty(4, np.int64)
    n[0] = n00
    n[1] = n01
    n[2] = n10
    n[3] = n11
    rates = np.empty(12, np.float64)
    t = 0.0
    ev = np.int64(0)
    while True:
        if n[2] >= target_count:
            return np.int64(1), t, ev
        if (n[2] == 0 and n[3] == 0) or n[0] == two_n or n[1] == two_n:
            return np.int64(0), t, ev
        if ev >= max_events:
            return np.int64(-1), t, ev
        a, b, dt = single_event(n, two_n, pba, quart, rates, s)
        if a < 0:
            return np.int64(0), t, ev
        t += dt
        ev += 1


# ---------------------------------------------------------------------------
# Establishment kinetics of the double mutant (birth-death approximation)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _logistic_value(t, y0, theta):
    return 1.0 / (1.0 + (1.0 / y0 - 1.0) * np.exp(-theta * t))


@njit(cache=True, nogil=True)
def sweep_beta(z, t, two_n, sigma, gamma, rho, c1, theta, t_switch):
    """Birth/death rates of the double-mutant frequency walk at level z.

    Before t_switch the resident single-mutant frequency follows the
    logistic curve from c1; afterwards it is pinned at one and the walk
    competes against that type alone.  Tiny negative values from
    cancellation are clipped to zero.
    """
    half_n = 0.5 * two_n
    zz = z * (1.0 - z)
    if t < t_switch:
        y = _logistic_value(t, c1, theta)
        drag = (sigma - rho) * y + (sigma * gamma - rho) * (1.0 - y)
        bp = half_n * zz * (1.0 + sigma * (1.0 + gamma)) - half_n * z * drag \
            + rho * two_n * y * (1.0 - y)
        bm = half_n * zz * (1.0 - sigma * (1.0 + gamma) + 2.0 * rho) + half_n * z * drag
    else:
        bp = half_n * (1.0 + sigma * gamma + rho) * zz
        bm = half_n * (1.0 - sigma * gamma + rho) * zz
    if bp < 0.0:
        bp = 0.0
    if bm < 0.0:
        bm = 0.0
    return bp, bm


@njit(cache=True, nogil=True)
def _fill_sweep_beta(zs, zzs, t, two_n, sigma, gamma, rho, c1, theta, t_switch,
                     absorbing, bp, bm):
    half_n = 0.5 * two_n
    top = zs.size - 1
    if t < t_switch:
        y = _logistic_value(t, c1, theta)
        drag = (sigma - rho) * y + (sigma * gamma - rho) * (1.0 - y)
        imm = rho * two_n * y * (1.0 - y)
        cp = 1.0 + sigma * (1.0 + gamma)
        cm = 1.0 - sigma * (1.0 + gamma) + 2.0 * rho
        for k in range(top + 1):
            vp = half_n * zzs[k] * cp - half_n * zs[k] * drag + imm
            vm = half_n * zzs[k] * cm + half_n * zs[k] * drag
            bp[k] = vp if vp > 0.0 else 0.0
            bm[k] = vm if vm > 0.0 else 0.0
    else:
        cp = half_n * (1.0 + sigma * gamma + rho)
        cm = half_n * (1.0 - sigma * gamma + rho)
        for k in range(top + 1):
            vp = cp * zzs[k]
            vm = cm * zzs[k]
            bp[k] = vp if vp > 0.0 else 0.0
            bm[k] = vm if vm > 0.0 else 0.0
    bp[top] = 0.0
    if absorbing:
        bm[top] = 0.0


@njit(cache=True, nogil=True)
def _master_derivative(p, bp, bm, out):
    size = p.size
    for k in range(size):
        acc = -(bp[k] + bm[k]) * p[k]
        if k > 0:
            acc += bp[k - 1] * p[k - 1]
        if k < size - 1:
            acc += bm[k + 1] * p[k + 1]
        out[k] = acc


@njit(cache=True, nogil=True)
def forward_segment(p, t0, t1, nsteps, two_n, sigma, gamma, rho, c1, theta,
                    t_switch, absorbing):
    """Advance the occupancy distribution with fixed-step RK4 on [t0, t1]."""
    size = p.size
    zs = np.empty(size, np.float64)
    zzs = np.empty(size, np.float64)
    for k in range(size):
        zs[k] = k / two_n
        zzs[k] = zs[k] * (1.0 - zs[k])
    bp = np.empty(size, np.float64)
    bm = np.empty(size, np.float64)
    k1 = np.empty(size, np.float64)
    k2 = np.empty(size, np.float64)
    k3 = np.empty(size, np.float64)
    k4 = np.empty(size, np.float64)
    tmp = np.empty(size, np.float64)
    h = (t1 - t0) / nsteps
    for step in range(nsteps):
        t = t0 + step * h
        _fill_sweep_beta(zs, zzs, t, two_n, sigma, gamma, rho, c1, theta,
                         t_switch, absorbing, bp, bm)
        _master_derivative(p, bp, bm, k1)
        _fill_sweep_beta(zs, zzs, t + 0.5 * h, two_n, sigma, gamma, rho, c1,
                         theta, t_switch, absorbing, bp, bm)
        for k in range(size):
            tmp[k] = p[k] + 0.5 * h * k1[k]
        _master_derivative(tmp, bp, bm, k2)
        for k in range(size):
            tmp[k] = p[k] + 0.5 * h * k2[k]
        _master_derivative(tmp, bp, bm, k3)
        _fill_sweep_beta(zs, zzs, t + h, two_n, sigma, gamma, rho, c1, theta,
                         t_switch, absorbing, bp, bm)
        for k in range(size):
            tmp[k] = p[k] + h * k3[k]
        _master_derivative(tmp, bp, bm, k4)
        for k in range(size):
            p[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])


@njit(cache=True, nogil=True)
def establishment_mc(two_n, sigma, gamma, rho, c1, theta, t_switch, horizon,
                     levels, absorbing, n_paths, master_seed):
    """Direct stochastic simulation of the double-mutant level walk.

    Counts paths occupying the top level (absorbing: having ever reached
    it) at the horizon.  Time-varying rates are handled by thinning with
    a per-level dominating rate.
    """
    half_n = 0.5 * two_n
    lam = np.empty(levels + 1, np.float64)
    for k in range(levels + 1):
        z = k / two_n
        zz = z * (1.0 - z)
        bp_sup = half_n * zz * (1.0 + sigma * (1.0 + gamma)) + 0.25 * rho * two_n
        bm_sup = half_n * zz * (1.0 - sigma * (1.0 + gamma) + 2.0 * rho) \
            + half_n * z * sigma
        bm_post = half_n * zz * (1.0 - sigma * gamma + rho)
        if bm_post > bm_sup:
            bm_sup = bm_post
        lam[k] = bp_sup + bm_sup + 1e-12
    hits = np.int64(0)
    for path in range(n_paths):
        s = seed_state(master_seed, np.uint64(path))
        k = 0
        t = 0.0
        while True:
            t += next_exponential(s) / lam[k]
            if t >= horizon:
                break
            bp, bm = sweep_beta(k / two_n, t, two_n, sigma, gamma, rho, c1,
                                theta, t_switch)
            if k == levels:
                bp = 0.0
                if absorbing:
                    bm = 0.0
            u = next_uniform(s) * lam[k]
            if u < bp:
                k += 1
                if k == levels and absorbing:
                    break
            elif u < bp + bm:
                k -= 1
        if k == levels:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# Two-type deterministic displacement coupled to the level walk
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _fill_pair_beta(zs, zzs, z10, z01, two_n, sigma, gamma, rho, absorbing,
                    bp, bm):
    half_n = 0.5 * two_n
    top = zs.size - 1
    sg = sigma * (1.0 + gamma)
    press = sigma * z10 + sigma * gamma * z01
    imm = rho * two_n * z10 * z01
    for k in range(top + 1):
        z = zs[k]
        x00 = 1.0 - z10 - z01 - z
        if x00 < 0.0:
            x00 = 0.0
        vp = half_n * zzs[k] * (1.0 + sg) - half_n * z * press \
            + imm + 0.5 * rho * two_n * z * (z10 + z01)
        vm = half_n * zzs[k] * (1.0 - sg) + half_n * z * press \
            + 0.5 * rho * two_n * z * (2.0 * x00 + z01 + z10)
        bp[k] = vp if vp > 0.0 else 0.0
        bm[k] = vm if vm > 0.0 else 0.0
    bp[top] = 0.0
    if absorbing:
        bm[top] = 0.0


@njit(cache=True, nogil=True)
def _pair_growth(z10, z01, sigma, gamma):
    d10 = sigma * z10 * ((1.0 - z10) - gamma * z01)
    d01 = sigma * z01 * (gamma * (1.0 - z01) - z10)
    return d10, d01


@njit(cache=True, nogil=True)
def pair_segment(state, t1, nsteps, two_n, sigma, gamma, rho, absorbing):
    """RK4 for the coupled system: two deterministic frequencies followed
    by the occupancy distribution of the double-mutant level walk.

    state[0] = frequency of the newer single mutant, state[1] = frequency
    of the older one, state[2:] = occupancy vector.  Integrates over
    [0, t1] in place.
    """
    size = state.size - 2
    zs = np.empty(size, np.float64)
    zzs = np.empty(size, np.float64)
    for k in range(size):
        zs[k] = k / two_n
        zzs[k] = zs[k] * (1.0 - zs[k])
    bp = np.empty(size, np.float64)
    bm = np.empty(size, np.float64)
    k1 = np.empty(size + 2, np.float64)
    k2 = np.empty(size + 2, np.float64)
    k3 = np.empty(size + 2, np.float64)
    k4 = np.empty(size + 2, np.float64)
    tmp = np.empty(size + 2, np.float64)
    h = t1 / nsteps

    for step in range(nsteps):
        _pair_derivative(state, zs, zzs, two_n, sigma, gamma, rho, absorbing,
                         bp, bm, k1)
        for i in range(size + 2):
            tmp[i] = state[i] + 0.5 * h * k1[i]
        _pair_derivative(tmp, zs, zzs, two_n, sigma, gamma, rho, absorbing,
                         bp, bm, k2)
        for i in range(size + 2):
            tmp[i] = state[i] + 0.5 * h * k2[i]
        _pair_derivative(tmp, zs, zzs, two_n, sigma, gamma, rho, absorbing,
                         bp, bm, k3)
        for i in range(size + 2):
            tmp[i] = state[i] + h * k3[i]
        _pair_derivative(tmp, zs, zzs, two_n, sigma, gamma, rho, absorbing,
                         bp, bm, k4)
        for i in range(size + 2):
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def _pair_derivative(state, zs, zzs, two_n, sigma, gamma, rho, absorbing,
                     bp, bm, out):
    z10 = state[0]
    z01 = state[1]
    d10, d01 = _pair_growth(z10, z01, sigma, gamma)
    out[0] = d10
    out[1] = d01
    _fill_pair_beta(zs, zzs, z10, z01, two_n, sigma, gamma, rho, absorbing,
                    bp, bm)
    size = zs.size
    for k in range(size):
        acc = -(bp[k] + bm[k]) * state[2 + k]
        if k > 0:
            acc += bp[k - 1] * state[2 + k - 1]
        if k < size - 1:
            acc += bm[k + 1] * state[2 + k + 1]
        out[2 + k] = acc


# ---------------------------------------------------------------------------
# Binary branching process
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def branching_extinctions(split_rate, death_rate, k0, t_end, cap, n_paths,
                          master_seed):
    """Count paths of the binary branching process extinct by t_end.

    Each individual branches at rate split_rate + death_rate, splitting
    in two or dying.  Paths reaching cap individuals are treated as
    non-extinct (callers pick cap so the error is negligible).
    """
    total_rate = split_rate + death_rate
    p_split = split_rate / total_rate
    extinct = np.int64(0)
    for path in range(n_paths):
        s = seed_state(master_seed, np.uint64(path))
        cnt = k0
        t = 0.0
        while cnt > 0:
            t += next_exponential(s) / (cnt * total_rate)
            if t >= t_end:
                break
            if next_uniform(s) < p_split:
                cnt += 1
                if cnt >= cap:
                    break
            else:
                cnt -= 1
        if cnt == 0:
            extinct += 1
    return extinct
