"""Compiled kernels for pairwise clearance scans over sampled trajectories.

These loops run over (pair, time, occluder) triples that reach 1e10
evaluations at reference scale; plain numpy would need multi-gigabyte
intermediates, so they are JIT-compiled instead.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def banded_pair_scan(positions, plane_ids, band, threshold, cap):
    """Scan pairs whose plane indices differ by at most ``band``.

    Returns (global_min, count, idx_i, idx_j, pair_min) where the arrays hold
    the first ``count`` pairs whose min-over-time distance falls below
    ``threshold``. ``count`` may exceed ``cap``; only ``cap`` entries are
    stored and the caller should retry with a larger cap.
    """
    n = positions.shape[0]
    n_t = positions.shape[1]
    viol_i = np.empty(cap, dtype=np.int64)
    viol_j = np.empty(cap, dtype=np.int64)
    viol_d = np.empty(cap, dtype=np.float64)
    count = 0
    global_min = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            if abs(plane_ids[i] - plane_ids[j]) > band:
                continue
            best = np.inf
            for t in range(n_t):
                dx = positions[i, t, 0] - positions[j, t, 0]
                dy = positions[i, t, 1] - positions[j, t, 1]
                dz = positions[i, t, 2] - positions[j, t, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 < best:
                    best = d2
            best = np.sqrt(best)
            if best < global_min:
                global_min = best
            if best < threshold:
                if count < cap:
                    viol_i[count] = i
                    viol_j[count] = j
                    viol_d[count] = best
                count += 1
    return global_min, count, viol_i, viol_j, viol_d


@njit(cache=True)
def exposure_scan(positions, suns, samples, r_sat):
    """Summed shadowed disk fraction per satellite over all time samples.

    ``samples`` holds in-disk offsets (already scaled by the disk radius) in
    the sun-orthogonal basis. A sample point is shadowed when some strictly
    sunward satellite center lies laterally within ``r_sat`` of it. Caller
    divides by the number of time samples to obtain a fraction.
    """
    n = positions.shape[0]
    n_t = positions.shape[1]
    n_s = samples.shape[0]
    r2 = r_sat * r_sat
    four_r2 = 4.0 * r2
    shadowed = np.zeros(n, dtype=np.float64)
    along = np.empty(n, dtype=np.float64)
    lat_a = np.empty(n, dtype=np.float64)
    lat_b = np.empty(n, dtype=np.float64)
    cand_a = np.empty(n, dtype=np.float64)
    cand_b = np.empty(n, dtype=np.float64)
    for t in range(n_t):
        sx = suns[t, 0]
        sy = suns[t, 1]
        sz = suns[t, 2]
        # e_a = normalize(z x sun), e_b = sun x e_a; sun never parallel to z
        nrm = np.sqrt(sx * sx + sy * sy)
        eax = -sy / nrm
        eay = sx / nrm
        ebx = sy * 0.0 - sz * eay
        eby = sz * eax - sx * 0.0
        ebz = sx * eay - sy * eax
        for i in range(n):
            px = positions[i, t, 0]
            py = positions[i, t, 1]
            pz = positions[i, t, 2]
            along[i] = px * sx + py * sy + pz * sz
            lat_a[i] = px * eax + py * eay
            lat_b[i] = px * ebx + py * eby + pz * ebz
        for i in range(n):
            n_c = 0
            for o in range(n):
                if o == i or along[o] <= along[i]:
                    continue
                da = lat_a[o] - lat_a[i]
                db = lat_b[o] - lat_b[i]
                if da * da + db * db < four_r2:
                    cand_a[n_c] = da
                    cand_b[n_c] = db
                    n_c += 1
            if n_c == 0:
                continue
            hits = 0
            for k in range(n_s):
                for c in range(n_c):
                    ga = samples[k, 0] - cand_a[c]
                    gb = samples[k, 1] - cand_b[c]
                    if ga * ga + gb * gb < r2:
                        hits += 1
                        break
            shadowed[i] += hits / n_s
    return shadowed


@njit(cache=True)
def _distance_extrema(positions):
    """Min and max separation of every satellite pair over the sampled orbit."""
    n = positions.shape[0]
    n_t = positions.shape[1]
    mind = np.zeros((n, n))
    maxd = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            lo = 1.0e300
            hi = 0.0
            for t in range(n_t):
                dx = positions[j, t, 0] - positions[i, t, 0]
                dy = positions[j, t, 1] - positions[i, t, 1]
                dz = positions[j, t, 2] - positions[i, t, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 < lo:
                    lo = d2
                if d2 > hi:
                    hi = d2
            mind[i, j] = mind[j, i] = np.sqrt(lo)
            maxd[i, j] = maxd[j, i] = np.sqrt(hi)
    return mind, maxd


@njit(cache=True)
def los_scan(positions, r_sat):
    """Line-of-sight matrix: pair (i, j) holds iff at every sampled instant no
    third satellite comes within ``r_sat`` of the segment between them.

    A blocker within r_sat of the segment satisfies
    |o-i| + |o-j| <= |i-j| + 2 r_sat at the blocking instant, so only
    satellites passing that test on the orbit-wide distance extrema can ever
    block the pair; the exact segment test runs over those candidates alone.
    """
    n = positions.shape[0]
    n_t = positions.shape[1]
    out = np.ones((n, n), dtype=np.bool_)
    r2 = r_sat * r_sat
    mind, maxd = _distance_extrema(positions)
    slack = 2.0 * r_sat
    cand = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i, i] = False
        for j in range(i + 1, n):
            lim = maxd[i, j] + slack
            n_c = 0
            for o in range(n):
                if o != i and o != j and mind[o, i] + mind[o, j] <= lim:
                    cand[n_c] = o
                    n_c += 1
            if n_c == 0:
                continue
            clear = True
            for t in range(n_t):
                ax = positions[i, t, 0]
                ay = positions[i, t, 1]
                az = positions[i, t, 2]
                dx = positions[j, t, 0] - ax
                dy = positions[j, t, 1] - ay
                dz = positions[j, t, 2] - az
                seg2 = dx * dx + dy * dy + dz * dz
                inv = 1.0 / seg2 if seg2 > 0.0 else 0.0
                for c in range(n_c):
                    o = cand[c]
                    px = positions[o, t, 0] - ax
                    py = positions[o, t, 1] - ay
                    pz = positions[o, t, 2] - az
                    s = (px * dx + py * dy + pz * dz) * inv
                    if s < 0.0:
                        s = 0.0
                    elif s > 1.0:
                        s = 1.0
                    cx = px - s * dx
                    cy = py - s * dy
                    cz = pz - s * dz
                    if cx * cx + cy * cy + cz * cz < r2:
                        clear = False
                        break
                if not clear:
                    break
            if not clear:
                out[i, j] = out[j, i] = False
    return out
