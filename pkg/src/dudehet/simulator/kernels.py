"""Compiled geometry kernels for the Monte Carlo engine.

All functions work on a square window [-L, L]^2.  A point set is indexed by
a uniform grid: ``start[c]..start[c+1]`` is the slice of grid cell c in the
cell-sorted coordinate arrays ``sx, sy``, and ``items`` maps a sorted slot
back to the original point index.  Nearest-point queries then cost O(1) on
average and read contiguous memory.

Global BS indices run over macros first (0..n_m-1) and then femtos.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_SIXTH = math.pi / 3.0
# Cone boundaries sit at 15 + 60k degrees.  No boundary is then parallel to
# a window edge, so no cone is cut down to a thin sliver along one.
_TILT = math.pi / 12.0
# Grid cell side relative to the mean point spacing 1/sqrt(density).
GRID_SCALE = 0.7


@njit(cache=True)
def _cone_of(dx, dy):
    a = math.atan2(dy, dx) + math.pi - _TILT
    if a < 0.0:
        a += 2.0 * math.pi
    return min(5, int(a / _SIXTH))


@njit(cache=True)
def build_grid(xs, ys, half, cell):
    """Bucket points into grid cells.  Returns (start, items, sx, sy, ng)."""
    ng = max(1, int(math.ceil(2.0 * half / cell)))
    n = xs.size
    cid = np.empty(n, np.int64)
    start = np.zeros(ng * ng + 1, np.int64)
    for i in range(n):
        gx = min(ng - 1, max(0, int((xs[i] + half) / cell)))
        gy = min(ng - 1, max(0, int((ys[i] + half) / cell)))
        c = gx * ng + gy
        cid[i] = c
        start[c + 1] += 1
    for c in range(ng * ng):
        start[c + 1] += start[c]
    fill = start[:-1].copy()
    items = np.empty(n, np.int64)
    for i in range(n):
        items[fill[cid[i]]] = i
        fill[cid[i]] += 1
    sx = np.empty(n)
    sy = np.empty(n)
    for k in range(n):
        sx[k] = xs[items[k]]
        sy[k] = ys[items[k]]
    return start, items, sx, sy, ng


@njit(cache=True)
def _covered(px, py, x0, x1, y0, y1, ng, cell, half):
    """Radius around (px, py) fully inside the cell box [x0, x1] x [y0, y1].

    Box sides on the window boundary do not limit it: no point lies beyond.
    """
    cov = np.inf
    if x0 > 0:
        cov = min(cov, px + half - x0 * cell)
    if x1 < ng - 1:
        cov = min(cov, (x1 + 1) * cell - half - px)
    if y0 > 0:
        cov = min(cov, py + half - y0 * cell)
    if y1 < ng - 1:
        cov = min(cov, (y1 + 1) * cell - half - py)
    return cov


@njit(cache=True)
def nearest(px, py, sx, sy, start, ng, cell, half):
    """Sorted slot of, and distance to, the point nearest (px, py)."""
    cx = min(ng - 1, max(0, int((px + half) / cell)))
    cy = min(ng - 1, max(0, int((py + half) / cell)))
    best = np.inf
    bk = -1
    for r in range(ng + 1):
        x0 = cx - r
        x1 = cx + r
        y0 = cy - r
        y1 = cy + r
        for gx in range(max(x0, 0), min(x1, ng - 1) + 1):
            if gx == x0 or gx == x1:
                # Whole column of the ring is one contiguous slice.
                k0 = start[gx * ng + max(y0, 0)]
                k1 = start[gx * ng + min(y1, ng - 1) + 1]
                for k in range(k0, k1):
                    dx = sx[k] - px
                    dy = sy[k] - py
                    d2 = dx * dx + dy * dy
                    if d2 < best:
                        best = d2
                        bk = k
            else:
                for gy in (y0, y1):
                    if 0 <= gy < ng:
                        c = gx * ng + gy
                        for k in range(start[c], start[c + 1]):
                            dx = sx[k] - px
                            dy = sy[k] - py
                            d2 = dx * dx + dy * dy
                            if d2 < best:
                                best = d2
                                bk = k
        cov = _covered(px, py, x0, x1, y0, y1, ng, cell, half)
        if best <= cov * cov:
            break
    return bk, math.sqrt(best)


@njit(cache=True)
def assign(px, py, g, lw_m, lw_f, a_m, a_f, half):
    """UL serving BS (global index) of a point; ties go to the macro tier."""
    (ms, mi, msx, msy, mng, mc, fs, fi, fsx, fsy, fng, fc, nm) = g
    km, dm = nearest(px, py, msx, msy, ms, mng, mc, half)
    kf, df = nearest(px, py, fsx, fsy, fs, fng, fc, half)
    if lw_m - a_m * math.log(dm) >= lw_f - a_f * math.log(df):
        return mi[km]
    return nm + fi[kf]


@njit(cache=True)
def _ray_exit(px, py, th, half):
    """Distance from (px, py) to the window boundary along direction th."""
    dx = math.cos(th)
    dy = math.sin(th)
    t = np.inf
    if dx > 1e-15:
        t = min(t, (half - px) / dx)
    elif dx < -1e-15:
        t = min(t, (-half - px) / dx)
    if dy > 1e-15:
        t = min(t, (half - py) / dy)
    elif dy < -1e-15:
        t = min(t, (-half - py) / dy)
    return t


@njit(cache=True)
def _sector_reach(px, py, c, half):
    """Farthest window point inside 60-degree cone c around (px, py).

    Cone ∩ window is convex, so the farthest point is a vertex: one of the
    two ray exits or a window corner lying inside the cone.
    """
    lo = c * _SIXTH - math.pi + _TILT
    best = max(_ray_exit(px, py, lo, half), _ray_exit(px, py, lo + _SIXTH, half))
    for sx in (-half, half):
        for sy in (-half, half):
            dx = sx - px
            dy = sy - py
            if _cone_of(dx, dy) == c:
                best = max(best, math.sqrt(dx * dx + dy * dy))
    return best


@njit(cache=True)
def cone_radii(i, px, py, sx, sy, start, items, ng, cell, half):
    """Per-cone radii of a star region containing point i's same-tier Voronoi cell (clipped to the window).

    Uses the 60-degree cone lemma: if cone c around i holds a competitor at
    distance d_c, no point of cone c beyond d_c is closer to i than to that
    competitor.  A cone is also bounded by its farthest point in the window.
    The UL cell of a BS lies inside its same-tier Voronoi cell, so the
    union of the six sectors contains it.
    """
    cone = np.empty(6)
    for c in range(6):
        cone[c] = _sector_reach(px, py, c, half)
    cx = min(ng - 1, max(0, int((px + half) / cell)))
    cy = min(ng - 1, max(0, int((py + half) / cell)))
    for r in range(ng + 1):
        x0 = cx - r
        x1 = cx + r
        for gx in range(max(x0, 0), min(x1, ng - 1) + 1):
            edge = gx == x0 or gx == x1
            step = 1 if edge else 2 * r
            gy = cy - r
            while gy <= cy + r:
                if 0 <= gy < ng:
                    cc = gx * ng + gy
                    for k in range(start[cc], start[cc + 1]):
                        if items[k] == i:
                            continue
                        dx = sx[k] - px
                        dy = sy[k] - py
                        d = math.sqrt(dx * dx + dy * dy)
                        c = _cone_of(dx, dy)
                        if d < cone[c]:
                            cone[c] = d
                if step == 0:
                    break
                gy += step
        if cone.max() <= _covered(px, py, x0, x1, cy - r, cy + r, ng, cell, half):
            break
    return cone


@njit(cache=True)
def cone_radius(i, px, py, sx, sy, start, items, ng, cell, half):
    """Radius of a disk around point i containing its clipped Voronoi cell."""
    return cone_radii(i, px, py, sx, sy, start, items, ng, cell, half).max()


@njit(cache=True)
def _cell_cones(b, g, bx, by, lw_m, lw_f, a_m, a_f, half):
    """Per-cone radii of a star region containing BS b's UL cell.

    On top of the same-tier cone bound, a BS of the lower-weight tier
    (rho = (w_b / w_o)^(1/a) < 1, common a) only wins points p with
    |p - b| <= rho |p - o| <= rho (|p - b| + d_o), where o is its nearest
    other-tier BS at distance d_o.  So |p - b| <= rho d_o / (1 - rho).
    """
    (ms, mi, msx, msy, mng, mc, fs, fi, fsx, fsy, fng, fc, nm) = g
    if b < nm:
        radii = cone_radii(b, bx[b], by[b], msx, msy, ms, mi, mng, mc, half)
        gap = lw_m - lw_f
    else:
        radii = cone_radii(b - nm, bx[b], by[b], fsx, fsy, fs, fi, fng, fc, half)
        gap = lw_f - lw_m
    if a_m == a_f and gap < 0.0:
        rho = math.exp(gap / a_m)
        if b < nm:
            _, d_o = nearest(bx[b], by[b], fsx, fsy, fs, fng, fc, half)
        else:
            _, d_o = nearest(bx[b], by[b], msx, msy, ms, mng, mc, half)
        radii = np.minimum(radii, rho * d_o / (1.0 - rho))
    return radii


@njit(cache=True)
def _star_point(bx, by, cum, radii):
    """Uniform point in the union of the six sectors (cum: cumulative r^2 weights)."""
    u = np.random.random() * cum[5]
    c = 0
    while c < 5 and u > cum[c]:
        c += 1
    rad = radii[c] * math.sqrt(np.random.random())
    ang = (c + np.random.random()) * _SIXTH - math.pi + _TILT
    return bx + rad * math.cos(ang), by + rad * math.sin(ang)


@njit(cache=True)
def _first_in_cell(b, g, bx, by, lam, lw_m, lw_f, a_m, a_f, half):
    """First point of a density-lam PPP (random order) inside BS b's UL cell.

    Points of the PPP on the bounding star region arrive one by one; the
    first that lands in the cell is uniform on it.  Returns (x, y, found).
    """
    radii = _cell_cones(b, g, bx, by, lw_m, lw_f, a_m, a_f, half)
    cum = np.cumsum(radii * radii)
    budget = lam * (_SIXTH / 2.0) * cum[5]
    acc = 0.0
    while True:
        acc -= math.log(1.0 - np.random.random())
        if acc > budget:
            return 0.0, 0.0, False
        px, py = _star_point(bx[b], by[b], cum, radii)
        if abs(px) > half or abs(py) > half:
            continue
        if assign(px, py, g, lw_m, lw_f, a_m, a_f, half) == b:
            return px, py, True


@njit(cache=True)
def _count_in_cell(b, g, bx, by, lam, lw_m, lw_f, a_m, a_f, half):
    """Number of points of a density-lam PPP inside BS b's UL cell."""
    radii = _cell_cones(b, g, bx, by, lw_m, lw_f, a_m, a_f, half)
    cum = np.cumsum(radii * radii)
    n = np.random.poisson(lam * (_SIXTH / 2.0) * cum[5])
    hits = 0
    for _ in range(n):
        px, py = _star_point(bx[b], by[b], cum, radii)
        if abs(px) > half or abs(py) > half:
            continue
        if assign(px, py, g, lw_m, lw_f, a_m, a_f, half) == b:
            hits += 1
    return hits


@njit(cache=True)
def simulate_drop(mx, my, fx, fy, ue_x, ue_y, layered, lam_rest, rng_seed,
                  lw_m, lw_f, a_m, a_f, eta, half, tag, x_serv, sig_gain, gain_int):
    """One snapshot given the tagged BS.  Returns (sir, load).

    The typical UE sits at the origin and is served in the UL by global BS
    index ``tag`` at distance ``x_serv``.  ``ue_x, ue_y`` are UE points in
    the window, in uniformly random order.  With ``layered`` False they are
    the complete UE population.  With ``layered`` True they are a thinned
    first layer, and the remaining density ``lam_rest`` is sampled lazily:
    per BS cell missed by the first layer, and for the tagged cell's load.

    Each BS schedules the first of its UEs in the given (random) order,
    which is a uniform choice.

    ``rng_seed`` seeds the compiled generator used for the lazy sampling, so
    a drop is reproducible from its seed alone.  ``sig_gain`` is the
    MRC signal gain and ``gain_int[b]`` the interference gain of BS b's
    scheduled UE.
    """
    nm = mx.size
    nf = fx.size
    nb = nm + nf
    area = 4.0 * half * half
    cm = GRID_SCALE / math.sqrt(max(nm, 1) / area)
    cf = GRID_SCALE / math.sqrt(max(nf, 1) / area)
    ms, mi, msx, msy, mng = build_grid(mx, my, half, cm)
    fs, fi, fsx, fsy, fng = build_grid(fx, fy, half, cf)
    g = (ms, mi, msx, msy, mng, cm, fs, fi, fsx, fsy, fng, cf, nm)
    bx = np.concatenate((mx, fx))
    by = np.concatenate((my, fy))
    tier = 0 if tag < nm else 1

    # Visit UEs grid cell by grid cell for memory locality; keep, per BS,
    # the UE earliest in the original order.
    us, ui, usx, usy, _ = build_grid(ue_x, ue_y, half, cf)
    first = np.full(nb, ue_x.size, np.int64)
    sched_x = np.empty(nb)
    sched_y = np.empty(nb)
    load = 1
    for k in range(ue_x.size):
        o = assign(usx[k], usy[k], g, lw_m, lw_f, a_m, a_f, half)
        if o == tag:
            load += 1
        elif ui[k] < first[o]:
            first[o] = ui[k]
            sched_x[o] = usx[k]
            sched_y[o] = usy[k]
    has = first < ue_x.size

    np.random.seed(rng_seed)
    if layered and lam_rest > 0:
        for b in range(nb):
            if b == tag or has[b]:
                continue
            px, py, hit = _first_in_cell(b, g, bx, by, lam_rest, lw_m, lw_f, a_m, a_f, half)
            if hit:
                has[b] = True
                sched_x[b] = px
                sched_y[b] = py
        load += _count_in_cell(tag, g, bx, by, lam_rest, lw_m, lw_f, a_m, a_f, half)

    a_k = a_m if tier == 0 else a_f
    interference = 0.0
    for b in range(nb):
        if b == tag or not has[b]:
            continue
        ab = a_m if b < nm else a_f
        dx = sched_x[b] - bx[b]
        dy = sched_y[b] - by[b]
        y2 = dx * dx + dy * dy
        ex = sched_x[b] - bx[tag]
        ey = sched_y[b] - by[tag]
        d2 = ex * ex + ey * ey
        # P0 y^(a_b eta) * D^-a_k, in squared distances.
        interference += gain_int[b] * math.exp(0.5 * (ab * eta * math.log(y2) - a_k * math.log(d2)))
    signal = sig_gain * x_serv ** (a_k * (eta - 1.0))
    sir = signal / interference if interference > 0 else np.inf
    return sir, load


@njit(cache=True)
def nearest_to_origin(xs, ys):
    """Index of and distance to the point nearest the origin."""
    best = np.inf
    bi = -1
    for i in range(xs.size):
        d = xs[i] * xs[i] + ys[i] * ys[i]
        if d < best:
            best = d
            bi = i
    return bi, math.sqrt(best)
