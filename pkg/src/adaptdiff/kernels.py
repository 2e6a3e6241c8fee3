"""Event-driven simulation kernels.

These functions take flat NumPy arrays and a ``numpy.random.Generator`` and
contain the inner loops of every Monte Carlo routine in the package.  They
are compiled by numba unless ``ADAPTDIFF_DISABLE_NUMBA`` is set (see
:mod:`adaptdiff._accel`).  Public wrappers with validation live in
:mod:`adaptdiff.population` and :mod:`adaptdiff.tss`.

Parameter packing
-----------------
``bpar``  : ``[b0, g_1, ..., g_k]`` for the affine birth rate ``b0 + g.x``.
``cpar``  : ``[code, scale, width, floor]``; code 0 is a constant kernel equal
            to ``scale``, code 1 is ``floor + (scale - floor) exp(-|x-y|^2/2w^2)``;
            code 2 is ``[2, c0, g1..., g2...]`` for ``c0 + g1.x + g2.y``.
``p``     : two-type rates ``[b1, b2, c11, c12, c21, c22, d1, d2]``.
"""
import numpy as np

from ._accel import njit

__all__ = [
    "OK",
    "STOPPED",
    "EVENT_CAP",
    "BAD_RATE",
    "BIRTH",
    "MUTANT_BIRTH",
    "DEATH",
    "birth_rate",
    "competition",
    "two_type_batch",
    "genealogy_batch",
    "gl_run",
    "gl_first_substitution_batch",
    "gl_snapshot_batch",
    "table_lookup",
    "tss_batch_1d",
]

# run status codes
OK = 0
STOPPED = 1
EVENT_CAP = 2
BAD_RATE = 3

# event kinds
BIRTH = 0
MUTANT_BIRTH = 1
DEATH = 2


@njit
def birth_rate(x, bpar):
    r = bpar[0]
    for j in range(x.shape[0]):
        r += bpar[1 + j] * x[j]
    return r


@njit
def competition(x, y, cpar):
    if cpar[0] == 0.0:
        return cpar[1]
    if cpar[0] == 2.0:
        k = x.shape[0]
        r = cpar[1]
        for j in range(k):
            r += cpar[2 + j] * x[j] + cpar[2 + k + j] * y[j]
        return r
    d2 = 0.0
    for j in range(x.shape[0]):
        diff = x[j] - y[j]
        d2 += diff * diff
    return cpar[3] + (cpar[1] - cpar[3]) * np.exp(-0.5 * d2 / (cpar[2] * cpar[2]))


# ---------------------------------------------------------------------------
# two-type logistic chain
# ---------------------------------------------------------------------------

@njit
def two_type_batch(n0, m0, p, count, max_events, rng):
    fixed = np.zeros(count, np.int8)
    times = np.zeros(count)
    jumps = np.zeros(count, np.int64)
    sizes = np.zeros(count, np.int64)
    status = np.zeros(count, np.int8)
    for r in range(count):
        n = n0
        m = m0
        t = 0.0
        k = 0
        while n > 0 and m > 0:
            bn = p[0] * n
            bm = p[1] * m
            dn = n * (p[2] * (n - 1) + p[3] * m + p[6])
            dm = m * (p[4] * n + p[5] * (m - 1) + p[7])
            if dn < 0.0 or dm < 0.0:
                status[r] = BAD_RATE
                break
            tot = bn + bm + dn + dm
            t += rng.exponential() / tot
            u = rng.random() * tot
            if u < bn:
                n += 1
            elif u < bn + bm:
                m += 1
            elif u < bn + bm + dn:
                n -= 1
            else:
                m -= 1
            k += 1
            if k >= max_events:
                status[r] = EVENT_CAP
                break
        if n == 0 and m > 0:
            fixed[r] = 1
        times[r] = t
        jumps[r] = k
        sizes[r] = n + m
    return fixed, times, jumps, sizes, status


# ---------------------------------------------------------------------------
# labelled neutral logistic process (genealogy of the first surviving k-tuple)
# ---------------------------------------------------------------------------

@njit
def genealogy_batch(n0, b, c, d, count, max_events, rng):
    """Distinctness of ancestral labels at the first hitting of sizes 3 and 2.

    Only the embedded jump chain matters, so no holding times are drawn.
    Entries are -1 where undefined (``n0 < 3`` for the size-3 statistic).
    """
    out3 = np.full(count, -1, np.int8)
    out2 = np.full(count, -1, np.int8)
    status = np.zeros(count, np.int8)
    cap = max(4 * n0, 64)
    labels = np.empty(cap, np.int64)
    for r in range(count):
        size = n0
        for i in range(n0):
            labels[i] = i
        if n0 == 3:
            out3[r] = 1
        k = 0
        while size > 2:
            birth = b * size
            death = size * (c * (size - 1) + d)
            u = rng.random() * (birth + death)
            i = int(rng.random() * size)
            if u < birth:
                if size == labels.shape[0]:
                    grown = np.empty(2 * size, np.int64)
                    grown[:size] = labels[:size]
                    labels = grown
                labels[size] = labels[i]
                size += 1
            else:
                labels[i] = labels[size - 1]
                size -= 1
                if size == 3 and out3[r] < 0:
                    a0 = labels[0]
                    a1 = labels[1]
                    a2 = labels[2]
                    out3[r] = 1 if (a0 != a1 and a0 != a2 and a1 != a2) else 0
            k += 1
            if k >= max_events:
                status[r] = EVENT_CAP
                break
        if status[r] == OK:
            out2[r] = 1 if labels[0] != labels[1] else 0
    return out3, out2, status


# ---------------------------------------------------------------------------
# GL population with mutation (structured logistic branching process)
# ---------------------------------------------------------------------------

@njit
def _grow1(a, cap):
    out = np.zeros(cap, a.dtype)
    out[: a.shape[0]] = a
    return out


@njit
def _grow2(a, cap):
    out = np.zeros((cap, a.shape[1]), a.dtype)
    out[: a.shape[0]] = a
    return out


@njit
def gl_run(traits0, counts0, bpar, cpar, dnat, mu, gamma, step_mean, step_chol,
           horizon, stop_on_substitution, sample_times, max_events, record_cap, rng):
    """Exact simulation of a structured logistic population with mutation.

    Returns a tuple, in order: final time, status, number of events, final
    traits, final counts, mutation times, monomorphic times after mutation
    (rho), surviving traits at those times, recorded event times, kinds and
    traits, sampled total sizes, sampled numbers of types, sampled trait of
    the first type, and the time integrals of the total size and of its
    square.
    """
    k = traits0.shape[1]
    cap = max(8, 2 * traits0.shape[0])
    K = traits0.shape[0]
    traits = np.zeros((cap, k))
    counts = np.zeros(cap, np.int64)
    bvals = np.zeros(cap)
    cmat = np.zeros((cap, cap))
    for i in range(K):
        traits[i] = traits0[i]
        counts[i] = counts0[i]
        bvals[i] = birth_rate(traits[i], bpar)
    for i in range(K):
        for j in range(K):
            cmat[i, j] = competition(traits[i], traits[j], cpar)
    x0 = traits0[0].copy()

    mut_times = np.zeros(16)
    rho_times = np.zeros(16)
    v_traits = np.zeros((16, k))
    n_mut = 0
    n_rho = 0

    ev_times = np.zeros(max(record_cap, 1))
    ev_kind = np.zeros(max(record_cap, 1), np.int8)
    ev_traits = np.zeros((max(record_cap, 1), k))
    n_rec = 0

    ns = sample_times.shape[0]
    s_size = np.zeros(ns, np.int64)
    s_types = np.zeros(ns, np.int64)
    s_trait = np.zeros((ns, k))
    si = 0

    birth = np.zeros(cap)
    death = np.zeros(cap)
    z = np.zeros(k)
    pmut = gamma * mu
    t = 0.0
    n_events = 0
    status = OK
    int_n = 0.0
    int_n2 = 0.0
    total = 0
    for i in range(K):
        total += counts[i]

    while True:
        if birth.shape[0] < cap:
            birth = np.zeros(cap)
            death = np.zeros(cap)
        rate = 0.0
        for i in range(K):
            if bvals[i] <= 0.0:
                status = BAD_RATE
            comp = -cmat[i, i]
            for j in range(K):
                comp += cmat[i, j] * counts[j]
            birth[i] = counts[i] * bvals[i]
            death[i] = counts[i] * (comp + dnat)
            if death[i] < 0.0:
                status = BAD_RATE
            rate += birth[i] + death[i]
        if status != OK or rate <= 0.0:
            status = BAD_RATE
            break
        t_next = t + rng.exponential() / rate
        while si < ns and sample_times[si] < t_next and sample_times[si] <= horizon:
            s_size[si] = total
            s_types[si] = K
            s_trait[si] = traits[0]
            si += 1
        if t_next > horizon:
            int_n += total * (horizon - t)
            int_n2 += total * total * (horizon - t)
            t = horizon
            break
        int_n += total * (t_next - t)
        int_n2 += total * total * (t_next - t)
        t = t_next

        u = rng.random() * rate
        acc = 0.0
        kind = DEATH
        who = K - 1
        for i in range(K):
            acc += birth[i]
            if u < acc:
                kind = BIRTH
                who = i
                break
        if kind != BIRTH:
            for i in range(K):
                acc += death[i]
                if u < acc:
                    who = i
                    break
        if kind == BIRTH and pmut > 0.0 and rng.random() < pmut:
            kind = MUTANT_BIRTH

        if kind == BIRTH:
            counts[who] += 1
            total += 1
            rec_i = who
        elif kind == MUTANT_BIRTH:
            if K == cap:
                cap *= 2
                traits = _grow2(traits, cap)
                counts = _grow1(counts, cap)
                bvals = _grow1(bvals, cap)
                cm = np.zeros((cap, cap))
                cm[:K, :K] = cmat[:K, :K]
                cmat = cm
            for j in range(k):
                z[j] = rng.standard_normal()
            for j in range(k):
                acc = step_mean[j]
                for l in range(k):
                    acc += step_chol[j, l] * z[l]
                traits[K, j] = traits[who, j] + acc
            counts[K] = 1
            bvals[K] = birth_rate(traits[K], bpar)
            for j in range(K + 1):
                cmat[K, j] = competition(traits[K], traits[j], cpar)
                cmat[j, K] = competition(traits[j], traits[K], cpar)
            K += 1
            total += 1
            rec_i = K - 1
            if n_mut == mut_times.shape[0]:
                mut_times = _grow1(mut_times, 2 * n_mut)
            mut_times[n_mut] = t
            n_mut += 1
        else:
            rec_i = who

        if n_rec < record_cap:
            ev_times[n_rec] = t
            ev_kind[n_rec] = kind
            ev_traits[n_rec] = traits[rec_i]
            n_rec += 1

        if kind == DEATH:
            counts[who] -= 1
            total -= 1
            if counts[who] == 0:
                last = K - 1
                if who != last:
                    traits[who] = traits[last]
                    counts[who] = counts[last]
                    bvals[who] = bvals[last]
                    for j in range(K):
                        cmat[who, j] = cmat[last, j]
                    for j in range(K):
                        cmat[j, who] = cmat[j, last]
                    cmat[who, who] = cmat[last, last]
                K -= 1

        n_events += 1
        if K == 1 and n_rho < n_mut:
            while n_rho < n_mut:
                if n_rho == rho_times.shape[0]:
                    rho_times = _grow1(rho_times, 2 * n_rho)
                    v_traits = _grow2(v_traits, 2 * n_rho)
                rho_times[n_rho] = t
                v_traits[n_rho] = traits[0]
                n_rho += 1
            if stop_on_substitution:
                moved = False
                for j in range(k):
                    if traits[0, j] != x0[j]:
                        moved = True
                if moved:
                    status = STOPPED
                    break
        if n_events >= max_events:
            status = EVENT_CAP
            break

    while si < ns and sample_times[si] <= t:
        s_size[si] = total
        s_types[si] = K
        s_trait[si] = traits[0]
        si += 1
    return (t, status, n_events, traits[:K].copy(), counts[:K].copy(),
            mut_times[:n_mut].copy(), rho_times[:n_rho].copy(), v_traits[:n_rho].copy(),
            ev_times[:n_rec].copy(), ev_kind[:n_rec].copy(), ev_traits[:n_rec].copy(),
            s_size[:si].copy(), s_types[:si].copy(), s_trait[:si].copy(), int_n, int_n2)


@njit
def gl_first_substitution_batch(n0_sizes, x0, bpar, cpar, dnat, mu, gamma, step_mean,
                                step_chol, horizon, max_events, rng):
    """First substitution ``(rho, V)`` for a batch of monomorphic starts."""
    count = n0_sizes.shape[0]
    k = x0.shape[0]
    rho = np.full(count, np.nan)
    v = np.full((count, k), np.nan)
    status = np.zeros(count, np.int8)
    traits0 = np.zeros((1, k))
    traits0[0] = x0
    counts0 = np.zeros(1, np.int64)
    empty = np.zeros(0)
    for r in range(count):
        counts0[0] = n0_sizes[r]
        res = gl_run(traits0, counts0, bpar, cpar, dnat, mu, gamma, step_mean, step_chol,
                     horizon, True, empty, max_events, 0, rng)
        status[r] = res[1]
        if res[1] == STOPPED:
            rho[r] = res[6][res[6].shape[0] - 1]
            v[r] = res[7][res[7].shape[0] - 1]
    return rho, v, status


@njit
def gl_snapshot_batch(n0_sizes, x0, bpar, cpar, dnat, mu, gamma, step_mean, step_chol,
                      horizon, max_events, rng):
    """State at ``horizon`` for a batch of monomorphic starts."""
    count = n0_sizes.shape[0]
    k = x0.shape[0]
    size = np.zeros(count, np.int64)
    ntypes = np.zeros(count, np.int64)
    trait = np.zeros((count, k))
    status = np.zeros(count, np.int8)
    traits0 = np.zeros((1, k))
    traits0[0] = x0
    counts0 = np.zeros(1, np.int64)
    empty = np.zeros(0)
    for r in range(count):
        counts0[0] = n0_sizes[r]
        res = gl_run(traits0, counts0, bpar, cpar, dnat, mu, gamma, step_mean, step_chol,
                     horizon, False, empty, max_events, 0, rng)
        status[r] = res[1]
        cnt = res[4]
        size[r] = cnt.sum()
        ntypes[r] = cnt.shape[0]
        trait[r] = res[3][0]
    return size, ntypes, trait, status


# ---------------------------------------------------------------------------
# trait substitution sequence on a tabulated fitness landscape (k = 1)
# ---------------------------------------------------------------------------

@njit
def table_lookup(x, delta, xlo, dx, nx, dlo, dd, nd, table):
    """Bilinear interpolation of ``table[ix, id]``; returns (value, in_range)."""
    fx = (x - xlo) / dx
    fd = (delta - dlo) / dd
    inside = fx >= 0.0 and fx <= nx - 1 and fd >= 0.0 and fd <= nd - 1
    if fx < 0.0:
        fx = 0.0
    if fx > nx - 1:
        fx = nx - 1.0
    if fd < 0.0:
        fd = 0.0
    if fd > nd - 1:
        fd = nd - 1.0
    i = min(int(fx), nx - 2)
    j = min(int(fd), nd - 2)
    a = fx - i
    c = fd - j
    val = ((1 - a) * (1 - c) * table[i, j] + a * (1 - c) * table[i + 1, j]
           + (1 - a) * c * table[i, j + 1] + a * c * table[i + 1, j + 1])
    return val, inside


@njit
def tss_batch_1d(x0, bpar, cpar, mu, step_sd, eps, record_times, stop_first,
                 xlo, dx, dlo, dd, table, count, max_proposals, rng):
    """Thinning simulation of the (rescaled) TSS for a one-dimensional trait.

    The step law is ``N(0, (eps*step_sd)^2)`` and rates are multiplied by
    ``1/eps^2``; ``eps = 1`` gives the plain TSS.  ``table`` holds the
    invasion fitness chi(x, x + delta) on a uniform (x, delta) grid.
    """
    nx = table.shape[0]
    nd = table.shape[1]
    nrec = record_times.shape[0]
    states = np.zeros((count, nrec))
    first_time = np.full(count, np.nan)
    first_step = np.full(count, np.nan)
    proposals = np.zeros(count, np.int64)
    jumps = np.zeros(count, np.int64)
    outside = 0
    horizon = record_times[nrec - 1] if nrec > 0 else np.inf
    xv = np.zeros(1)
    for r in range(count):
        x = x0
        t = 0.0
        ri = 0
        while True:
            xv[0] = x
            b = birth_rate(xv, bpar)
            cxx = competition(xv, xv, cpar)
            theta = b / cxx
            beta = mu * b * theta / (-np.expm1(-theta))
            if beta > 0.0:
                t += rng.exponential() / (beta / (eps * eps))
            else:
                t = np.inf
            while ri < nrec and record_times[ri] < t:
                states[r, ri] = x
                ri += 1
            if t == np.inf:
                break
            if ri == nrec and not stop_first:
                break
            if t > horizon and not stop_first:
                break
            h = eps * step_sd * rng.standard_normal()
            chi, inside = table_lookup(x, h, xlo, dx, nx, dlo, dd, nd, table)
            if not inside:
                outside += 1
            proposals[r] += 1
            if rng.random() < chi:
                jumps[r] += 1
                if stop_first:
                    first_time[r] = t
                    first_step[r] = h
                    break
                x = x + h
            if proposals[r] >= max_proposals:
                break
    return states, first_time, first_step, proposals, jumps, outside
