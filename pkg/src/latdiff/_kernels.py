"""Compiled inner loops for the dense density-matrix integrator.

All matrices are stored zero-padded, shape (N + 2, N + 2); the border stands
in for the missing neighbours of the open chain and is never written.  Work is
restricted to an active square window ``[lo, hi]`` that grows whenever the
state reaches its edge, so early steps of a localized packet are cheap.
"""

import numpy as np
from numba import njit, uint64

N_L = 4  # coherence orders recorded, l = 1..N_L
TINY = 1e-150  # entries below this are flushed to zero (no subnormal arithmetic)
EDGE_TOL = 1e-30  # window grows when its edge band exceeds this
EDGE_BAND = 4
GROW = 16


@njit(cache=True)
def hsr_rhs(rho, J, gamma, out):
    """Unpadded reference right-hand side: -i[H, rho] - gamma * offdiag(rho)."""
    n = rho.shape[0]
    mj = -1j * J
    for a in range(n):
        for b in range(n):
            acc = 0j
            if a + 1 < n:
                acc += rho[a + 1, b]
            if a > 0:
                acc += rho[a - 1, b]
            if b + 1 < n:
                acc -= rho[a, b + 1]
            if b > 0:
                acc -= rho[a, b - 1]
            v = mj * acc
            if a != b:
                v -= gamma * rho[a, b]
            out[a, b] = v


@njit(cache=True)
def record(rho, sites, margin, row, obs):
    """Write trace, moments, coherences and edge mass of padded ``rho`` into ``obs[row]``.

    Column layout: trace, <n>, <n^2>, edge mass, then (rho_l, n_l) pairs for
    l = 1..N_L.
    """
    n = sites.shape[0]
    tr = 0.0
    m1 = 0.0
    m2 = 0.0
    edge = 0.0
    for a in range(n):
        p = rho[a + 1, a + 1].real
        tr += p
        m1 += sites[a] * p
        m2 += sites[a] * sites[a] * p
        if a < margin or a >= n - margin:
            edge += p
    obs[row, 0] = tr
    obs[row, 1] = m1
    obs[row, 2] = m2
    obs[row, 3] = edge
    for l in range(1, N_L + 1):
        s = 0j
        sn = 0j
        for a in range(n - l):
            v = rho[a + 1, a + 1 + l]
            s += v
            sn += sites[a] * v
        obs[row, 2 + 2 * l] = s
        obs[row, 3 + 2 * l] = sn


@njit(cache=True)
def _stage(src, rho, acc, dst, J, gamma, c_acc, c_dst, lo, hi):
    """Fused RK4 stage on the upper triangle: k = rhs(src); acc += c_acc * k; dst = rho + c_dst * k.

    Only entries with b >= a are read or written; the lower triangle is
    implied by Hermiticity.  ``lo`` and ``hi`` arrive as uint64 so that no
    negative-index wraparound code is emitted, which keeps the inner loop
    vectorizable.
    """
    mj = -1j * J
    one = uint64(1)
    for a in range(lo, hi + one):
        for b in range(a + one, hi + one):
            v = mj * (src[a + one, b] + src[a - one, b] - src[a, b + one] - src[a, b - one]) - gamma * src[a, b]
            acc[a, b] += c_acc * v
            dst[a, b] = rho[a, b] + c_dst * v
    # populations: neighbours below the diagonal are conjugates of those above
    two_j = 2.0 * J
    for a in range(lo, hi + one):
        v = two_j * (src[a - one, a].imag - src[a, a + one].imag)
        acc[a, a] += c_acc * v
        dst[a, a] = rho[a, a] + c_dst * v


@njit(cache=True)
def _commit(src, dst, lo, hi):
    """Copy the upper triangle of ``src`` into ``dst``, flushing tiny parts to zero."""
    one = uint64(1)
    for a in range(lo, hi + one):
        for b in range(a, hi + one):
            x = src[a, b]
            re = x.real
            im = x.imag
            if abs(re) < TINY:
                re = 0.0
            if abs(im) < TINY:
                im = 0.0
            dst[a, b] = complex(re, im)


def mirror_upper(rho):
    """Fill the strict lower triangle from the upper one (in place)."""
    low = np.tril_indices(rho.shape[0], -1)
    rho[low] = rho.T[low].conj()
    return rho


@njit(cache=True)
def _edge_max(rho, lo, hi, band):
    """Largest upper-triangle |entry| within ``band`` sites of the window boundary."""
    top = 0.0
    for a in range(lo, hi + 1):
        b0 = a if a < lo + band else max(a, hi - band + 1)
        for b in range(b0, hi + 1):
            v = rho[a, b]
            top = max(top, max(abs(v.real), abs(v.imag)))
    return top


@njit(cache=True)
def initial_window(rho):
    """Smallest square window (padded coordinates) holding every nonzero entry."""
    m = rho.shape[0]
    lo = m - 2
    hi = 1
    for a in range(1, m - 1):
        for b in range(1, m - 1):
            if rho[a, b] != 0:
                lo = min(lo, min(a, b))
                hi = max(hi, max(a, b))
    if hi < lo:
        return 1, m - 2
    return lo, hi


@njit(cache=True)
def rk4_run(rho, J, gamma, dt, n_steps, stride, sites, margin, snap_steps, snaps):
    """Classical RK4 on the upper triangle of a Hermitian density matrix.

    ``rho`` is a zero-padded (N+2, N+2) array advanced in place; on return
    its strict lower triangle is stale (see :func:`mirror_upper`).
    Observables are recorded every ``stride`` steps (step 0 included);
    populations are copied into ``snaps`` at the step numbers listed in
    ``snap_steps``.  Returns the observable table.
    """
    m = rho.shape[0]
    n_rec = n_steps // stride + 1
    obs = np.zeros((n_rec, 4 + 2 * N_L), dtype=np.complex128)
    acc = np.zeros_like(rho)
    buf_a = np.zeros_like(rho)
    buf_b = np.zeros_like(rho)
    half = 0.5 * dt
    i_snap = 0
    n_snap = snap_steps.shape[0]
    lo, hi = initial_window(rho)
    for a in range(m):
        for b in range(a):
            rho[a, b] = 0.0
    lo = max(1, lo - GROW)
    hi = min(m - 2, hi + GROW)

    record(rho, sites, margin, 0, obs)
    while i_snap < n_snap and snap_steps[i_snap] == 0:
        for a in range(m - 2):
            snaps[i_snap, a] = rho[a + 1, a + 1].real
        i_snap += 1

    for step in range(1, n_steps + 1):
        while (lo > 1 or hi < m - 2) and _edge_max(rho, lo, hi, EDGE_BAND) > EDGE_TOL:
            lo = max(1, lo - GROW)
            hi = min(m - 2, hi + GROW)
        ulo = uint64(lo)
        uhi = uint64(hi)
        for a in range(ulo, uhi + uint64(1)):
            for b in range(a, uhi + uint64(1)):
                acc[a, b] = rho[a, b]
        _stage(rho, rho, acc, buf_a, J, gamma, dt / 6.0, half, ulo, uhi)
        _stage(buf_a, rho, acc, buf_b, J, gamma, dt / 3.0, half, ulo, uhi)
        _stage(buf_b, rho, acc, buf_a, J, gamma, dt / 3.0, dt, ulo, uhi)
        _stage(buf_a, rho, acc, buf_b, J, gamma, dt / 6.0, 0.0, ulo, uhi)
        _commit(acc, rho, ulo, uhi)
        if step % stride == 0:
            record(rho, sites, margin, step // stride, obs)
        while i_snap < n_snap and snap_steps[i_snap] == step:
            for a in range(m - 2):
                snaps[i_snap, a] = rho[a + 1, a + 1].real
            i_snap += 1
    return obs
