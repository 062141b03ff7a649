"""Numeric kernels for the push-physics propagator and mRegion occupancy.

Each kernel exists twice: an explicit-loop version compiled with numba when
available, and a vectorised numpy version.  ``COSAFE_TAMP_NO_NUMBA=1`` selects
the numpy path.  Both follow the same update order so they agree to rounding.

Face codes: 0 = +x, 1 = -x, 2 = +y, 3 = -y.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("COSAFE_TAMP_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = numba is not None and not _DISABLED

PROJ_ITERS = 24
ROBOT_ITERS = 16
TOUCH_TOL = 1e-6
SEP_TOL = 1e-10

# axis, sign of the outward normal
FACE_AXIS = np.array([0, 0, 1, 1])
FACE_SIGN = np.array([1.0, -1.0, 1.0, -1.0])


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True, fastmath=False)(fn)


# ---------------------------------------------------------------------------
# loop kernels


def _face_of(px, py, x0, y0, x1, y1):
    """Face of the box nearest the circle centre; dominant axis, ties to x."""
    qx = min(max(px, x0), x1)
    qy = min(max(py, y0), y1)
    dx = px - qx
    dy = py - qy
    if dx == 0.0 and dy == 0.0:
        # centre inside: least penetration
        best = x1 - px
        face = 0
        if px - x0 < best:
            best = px - x0
            face = 1
        if y1 - py < best:
            best = y1 - py
            face = 2
        if py - y0 < best:
            face = 3
        return face
    if abs(dx) >= abs(dy):
        return 0 if dx > 0 else 1
    return 2 if dy > 0 else 3


def _circle_rect_dist(px, py, x0, y0, x1, y1):
    qx = min(max(px, x0), x1)
    qy = min(max(py, y0), y1)
    dx = px - qx
    dy = py - qy
    return math.sqrt(dx * dx + dy * dy), qx, qy


def _robot_out_of_rect(p, v, r, x0, y0, x1, y1):
    """Project the circle out of a rectangle.

    Outside the rectangle the push follows the contact normal, so corners
    release the robot sideways; a centre inside uses the nearest face.
    """
    qx = min(max(p[0], x0), x1)
    qy = min(max(p[1], y0), y1)
    dx = p[0] - qx
    dy = p[1] - qy
    d = math.sqrt(dx * dx + dy * dy)
    if d > 0.0:
        nx = dx / d
        ny = dy / d
        p[0] = qx + nx * r
        p[1] = qy + ny * r
        vn = v[0] * nx + v[1] * ny
        if vn < 0.0:
            v[0] -= vn * nx
            v[1] -= vn * ny
        return
    face = _face_of(p[0], p[1], x0, y0, x1, y1)
    if face == 0:
        p[0] = x1 + r
        if v[0] < 0.0:
            v[0] = 0.0
    elif face == 1:
        p[0] = x0 - r
        if v[0] > 0.0:
            v[0] = 0.0
    elif face == 2:
        p[1] = y1 + r
        if v[1] < 0.0:
            v[1] = 0.0
    else:
        p[1] = y0 - r
        if v[1] > 0.0:
            v[1] = 0.0


def _overlap_axis(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1):
    """(axis, depth) of the least-penetration separation, axis -1 if apart."""
    ox = min(ax1, bx1) - max(ax0, bx0)
    oy = min(ay1, by1) - max(ay0, by0)
    if ox <= SEP_TOL or oy <= SEP_TOL:
        return -1, 0.0
    if ox <= oy:
        return 0, ox
    return 1, oy


def project_boxes_loop(bc, bv, half, fixed, bounds, corr):
    """Jacobi sweeps pushing boxes out of each other, walls and the edge."""
    m = bc.shape[0]
    k = fixed.shape[0]
    for _it in range(PROJ_ITERS):
        moved = False
        for b in range(m):
            corr[b, 0] = 0.0
            corr[b, 1] = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                a, depth = _overlap_axis(bc[i, 0] - half[i, 0], bc[i, 1] - half[i, 1],
                                         bc[i, 0] + half[i, 0], bc[i, 1] + half[i, 1],
                                         bc[j, 0] - half[j, 0], bc[j, 1] - half[j, 1],
                                         bc[j, 0] + half[j, 0], bc[j, 1] + half[j, 1])
                if a >= 0:
                    moved = True
                    sgn = 1.0 if bc[i, a] > bc[j, a] else -1.0
                    corr[i, a] += 0.5 * depth * sgn
                    corr[j, a] -= 0.5 * depth * sgn
                    if bv[i, a] * sgn < 0.0:
                        bv[i, a] = 0.0
                    if bv[j, a] * sgn > 0.0:
                        bv[j, a] = 0.0
            for f in range(k):
                a, depth = _overlap_axis(bc[i, 0] - half[i, 0], bc[i, 1] - half[i, 1],
                                         bc[i, 0] + half[i, 0], bc[i, 1] + half[i, 1],
                                         fixed[f, 0], fixed[f, 1], fixed[f, 2], fixed[f, 3])
                if a >= 0:
                    moved = True
                    fc = 0.5 * (fixed[f, a] + fixed[f, a + 2])
                    sgn = 1.0 if bc[i, a] >= fc else -1.0
                    corr[i, a] += depth * sgn
                    if bv[i, a] * sgn < 0.0:
                        bv[i, a] = 0.0
            for a in range(2):
                lo = bounds[a] - (bc[i, a] - half[i, a])
                hi = (bc[i, a] + half[i, a]) - bounds[a + 2]
                if lo > SEP_TOL:
                    moved = True
                    corr[i, a] += lo
                    if bv[i, a] < 0.0:
                        bv[i, a] = 0.0
                elif hi > SEP_TOL:
                    moved = True
                    corr[i, a] -= hi
                    if bv[i, a] > 0.0:
                        bv[i, a] = 0.0
        if not moved:
            break
        for b in range(m):
            bc[b, 0] += corr[b, 0]
            bc[b, 1] += corr[b, 1]


_project_boxes = project_boxes_loop


def _shove_box(rp, r, bc, bv, half, b, face):
    """Move box ``b`` out of the robot along ``face``; the robot stays put."""
    x0 = bc[b, 0] - half[b, 0]
    y0 = bc[b, 1] - half[b, 1]
    x1 = bc[b, 0] + half[b, 0]
    y1 = bc[b, 1] + half[b, 1]
    if face == 0:
        bc[b, 0] -= x1 - rp[0] + r
    elif face == 1:
        bc[b, 0] += rp[0] + r - x0
    elif face == 2:
        bc[b, 1] -= y1 - rp[1] + r
    else:
        bc[b, 1] += rp[1] + r - y0
    a = FACE_AXIS[face]
    if bv[b, a] * FACE_SIGN[face] > 0.0:
        bv[b, a] = 0.0


def substeps_loop(rp, rv, bc, bv, half, bmass, bmu, mdepth, fixed, bounds,
                  u, r, rmass, vmax, vbmax, g, h, nsub, face_mask, onset_bad):
    """Advance robot/box state ``nsub`` substeps of length ``h`` in place.

    Returns 1 if the robot collided with a fixed body or the workspace edge.
    ``face_mask`` collects (as bits) the faces the robot touched per body and
    ``onset_bad`` the faces whose contact began with the robot centre outside
    that face's mRegion.
    """
    m = bc.shape[0]
    k = fixed.shape[0]
    hit_fixed = 0
    touching = np.zeros(m, dtype=np.bool_)
    for b in range(m):
        d, qx, qy = _circle_rect_dist(rp[0], rp[1], bc[b, 0] - half[b, 0], bc[b, 1] - half[b, 1],
                                      bc[b, 0] + half[b, 0], bc[b, 1] + half[b, 1])
        touching[b] = d <= r + TOUCH_TOL
    corr = np.zeros((m, 2))
    ax = u[0] / rmass * h
    ay = u[1] / rmass * h
    for _ in range(nsub):
        # velocities
        rv[0] += ax
        rv[1] += ay
        sp = math.sqrt(rv[0] * rv[0] + rv[1] * rv[1])
        if sp > vmax:
            rv[0] *= vmax / sp
            rv[1] *= vmax / sp
        for b in range(m):
            sp = math.sqrt(bv[b, 0] * bv[b, 0] + bv[b, 1] * bv[b, 1])
            if sp > 0.0:
                dec = bmu[b] * g * h
                if sp <= dec:
                    bv[b, 0] = 0.0
                    bv[b, 1] = 0.0
                else:
                    s = (sp - dec) / sp
                    if sp - dec > vbmax:
                        s = vbmax / sp
                    bv[b, 0] *= s
                    bv[b, 1] *= s
        # positions
        rp[0] += rv[0] * h
        rp[1] += rv[1] * h
        for b in range(m):
            bc[b, 0] += bv[b, 0] * h
            bc[b, 1] += bv[b, 1] * h
        # robot pushes boxes
        for b in range(m):
            x0 = bc[b, 0] - half[b, 0]
            y0 = bc[b, 1] - half[b, 1]
            x1 = bc[b, 0] + half[b, 0]
            y1 = bc[b, 1] + half[b, 1]
            d, qx, qy = _circle_rect_dist(rp[0], rp[1], x0, y0, x1, y1)
            if d < r:
                face = _face_of(rp[0], rp[1], x0, y0, x1, y1)
                face_mask[b] |= 1 << face
                if not touching[b]:
                    dep = mdepth[b, face]
                    if face == 0:
                        inside = rp[0] >= x1 and rp[0] <= x1 + dep and rp[1] >= y0 and rp[1] <= y1
                    elif face == 1:
                        inside = rp[0] <= x0 and rp[0] >= x0 - dep and rp[1] >= y0 and rp[1] <= y1
                    elif face == 2:
                        inside = rp[1] >= y1 and rp[1] <= y1 + dep and rp[0] >= x0 and rp[0] <= x1
                    else:
                        inside = rp[1] <= y0 and rp[1] >= y0 - dep and rp[0] >= x0 and rp[0] <= x1
                    if dep <= 0.0 or not inside:
                        onset_bad[b] |= 1 << face
                a = FACE_AXIS[face]
                n = -FACE_SIGN[face]  # into the box
                vrn = rv[a] * n
                vbn = bv[b, a] * n
                if vrn > vbn:
                    vc = (rmass * vrn + bmass[b] * vbn) / (rmass + bmass[b])
                    rv[a] += (vc - vrn) * n
                    bv[b, a] += (vc - vbn) * n
                if a == 0:
                    pen = r - abs(rp[0] - qx) if d > 0.0 else r + min(rp[0] - x0, x1 - rp[0])
                else:
                    pen = r - abs(rp[1] - qy) if d > 0.0 else r + min(rp[1] - y0, y1 - rp[1])
                bc[b, a] += pen * n
            touching[b] = d <= r + TOUCH_TOL
        # boxes against boxes, walls and the workspace edge
        _project_boxes(bc, bv, half, fixed, bounds, corr)
        # robot out of walls, the edge and boxes
        shoved = False
        for _it in range(ROBOT_ITERS):
            clean = True
            pinned = False
            for f in range(k):
                d, qx, qy = _circle_rect_dist(rp[0], rp[1], fixed[f, 0], fixed[f, 1], fixed[f, 2], fixed[f, 3])
                if d < r - SEP_TOL:
                    hit_fixed = 1
                    pinned = True
                    clean = False
                    _robot_out_of_rect(rp, rv, r, fixed[f, 0], fixed[f, 1], fixed[f, 2], fixed[f, 3])
            for a in range(2):
                if rp[a] - r < bounds[a] - SEP_TOL:
                    hit_fixed = 1
                    pinned = True
                    clean = False
                    rp[a] = bounds[a] + r
                    if rv[a] < 0.0:
                        rv[a] = 0.0
                elif rp[a] + r > bounds[a + 2] + SEP_TOL:
                    hit_fixed = 1
                    pinned = True
                    clean = False
                    rp[a] = bounds[a + 2] - r
                    if rv[a] > 0.0:
                        rv[a] = 0.0
            for b in range(m):
                x0 = bc[b, 0] - half[b, 0]
                y0 = bc[b, 1] - half[b, 1]
                x1 = bc[b, 0] + half[b, 0]
                y1 = bc[b, 1] + half[b, 1]
                d, qx, qy = _circle_rect_dist(rp[0], rp[1], x0, y0, x1, y1)
                if d < r - SEP_TOL:
                    clean = False
                    face = _face_of(rp[0], rp[1], x0, y0, x1, y1)
                    face_mask[b] |= 1 << face
                    if pinned and _it >= ROBOT_ITERS // 2:
                        # still squeezed against a wall: the box gives way
                        _shove_box(rp, r, bc, bv, half, b, face)
                        shoved = True
                    else:
                        _robot_out_of_rect(rp, rv, r, x0, y0, x1, y1)
                    touching[b] = True
            if clean:
                break
        if shoved:
            _project_boxes(bc, bv, half, fixed, bounds, corr)
    return hit_fixed


def mregion_free_loop(mrects, declared, body_rects, fixed, bounds, tol):
    """free[i, f]: mRegion f of body i overlaps nothing and stays in bounds."""
    m = mrects.shape[0]
    k = fixed.shape[0]
    free = np.zeros((m, 4), dtype=np.bool_)
    for i in range(m):
        for f in range(4):
            if not declared[i, f]:
                continue
            x0 = mrects[i, f, 0]
            y0 = mrects[i, f, 1]
            x1 = mrects[i, f, 2]
            y1 = mrects[i, f, 3]
            ok = (x0 >= bounds[0] - 1e-9 and y0 >= bounds[1] - 1e-9
                  and x1 <= bounds[2] + 1e-9 and y1 <= bounds[3] + 1e-9)
            j = 0
            while ok and j < k:
                w = min(x1, fixed[j, 2]) - max(x0, fixed[j, 0])
                hh = min(y1, fixed[j, 3]) - max(y0, fixed[j, 1])
                if w > 0.0 and hh > 0.0 and w * hh > tol:
                    ok = False
                j += 1
            j = 0
            while ok and j < m:
                if j != i:
                    w = min(x1, body_rects[j, 2]) - max(x0, body_rects[j, 0])
                    hh = min(y1, body_rects[j, 3]) - max(y0, body_rects[j, 1])
                    if w > 0.0 and hh > 0.0 and w * hh > tol:
                        ok = False
                j += 1
            free[i, f] = ok
    return free


_py_face_of = _face_of
_py_circle_rect_dist = _circle_rect_dist
_py_robot_out_of_rect = _robot_out_of_rect
_py_shove_box = _shove_box


# ---------------------------------------------------------------------------
# numpy kernels


def _np_circle_rects(p, rects):
    q = np.clip(p, rects[:, :2], rects[:, 2:])
    d = p - q
    return np.hypot(d[:, 0], d[:, 1]), q


def _np_rects(c, half):
    return np.concatenate([c - half, c + half], axis=1)


def _np_project_boxes(bc, bv, half, fixed, bounds, iu, ju):
    m = bc.shape[0]
    for _it in range(PROJ_ITERS):
        if not m:
            break
        rects = _np_rects(bc, half)
        corr = np.zeros((m, 2))
        moved = False
        if len(iu):
            ox = np.minimum(rects[iu, 2], rects[ju, 2]) - np.maximum(rects[iu, 0], rects[ju, 0])
            oy = np.minimum(rects[iu, 3], rects[ju, 3]) - np.maximum(rects[iu, 1], rects[ju, 1])
            hit = (ox > SEP_TOL) & (oy > SEP_TOL)
            if hit.any():
                moved = True
                pi, pj = iu[hit], ju[hit]
                axis = np.where(ox[hit] <= oy[hit], 0, 1)
                depth = np.where(axis == 0, ox[hit], oy[hit])
                ci, cj = bc[pi, axis], bc[pj, axis]
                sgn = np.where(ci > cj, 1.0, -1.0)
                np.add.at(corr, (pi, axis), 0.5 * depth * sgn)
                np.add.at(corr, (pj, axis), -0.5 * depth * sgn)
                zi = bv[pi, axis] * sgn < 0.0
                zj = bv[pj, axis] * sgn > 0.0
                bv[pi[zi], axis[zi]] = 0.0
                bv[pj[zj], axis[zj]] = 0.0
        if len(fixed):
            ox = np.minimum(rects[:, None, 2], fixed[None, :, 2]) - np.maximum(rects[:, None, 0], fixed[None, :, 0])
            oy = np.minimum(rects[:, None, 3], fixed[None, :, 3]) - np.maximum(rects[:, None, 1], fixed[None, :, 1])
            hit = (ox > SEP_TOL) & (oy > SEP_TOL)
            if hit.any():
                moved = True
                bi, fi = np.nonzero(hit)
                axis = np.where(ox[bi, fi] <= oy[bi, fi], 0, 1)
                depth = np.where(axis == 0, ox[bi, fi], oy[bi, fi])
                fc = 0.5 * (fixed[fi, axis] + fixed[fi, axis + 2])
                sgn = np.where(bc[bi, axis] >= fc, 1.0, -1.0)
                np.add.at(corr, (bi, axis), depth * sgn)
                z = bv[bi, axis] * sgn < 0.0
                bv[bi[z], axis[z]] = 0.0
        lo = bounds[None, :2] - rects[:, :2]
        hi = rects[:, 2:] - bounds[None, 2:]
        low_hit = lo > SEP_TOL
        high_hit = (hi > SEP_TOL) & ~low_hit
        if low_hit.any() or high_hit.any():
            moved = True
            corr += np.where(low_hit, lo, 0.0) - np.where(high_hit, hi, 0.0)
            bv[low_hit & (bv < 0.0)] = 0.0
            bv[high_hit & (bv > 0.0)] = 0.0
        if not moved:
            break
        bc += corr



def substeps_numpy(rp, rv, bc, bv, half, bmass, bmu, mdepth, fixed, bounds,
                   u, r, rmass, vmax, vbmax, g, h, nsub, face_mask, onset_bad):
    m = bc.shape[0]
    hit_fixed = 0
    if m:
        dist, _ = _np_circle_rects(rp, _np_rects(bc, half))
        touching = dist <= r + TOUCH_TOL
    else:
        touching = np.zeros(0, dtype=bool)
    acc = np.asarray(u, dtype=float) / rmass * h
    iu, ju = np.triu_indices(m, 1)
    for _ in range(nsub):
        rv += acc
        sp = math.hypot(rv[0], rv[1])
        if sp > vmax:
            rv *= vmax / sp
        if m:
            sp = np.hypot(bv[:, 0], bv[:, 1])
            dec = bmu * g * h
            with np.errstate(invalid="ignore", divide="ignore"):
                scale = np.where(sp - dec > vbmax, vbmax / sp, (sp - dec) / sp)
            scale = np.where(sp <= dec, 0.0, scale)
            scale = np.where(sp > 0.0, scale, 1.0)
            bv *= scale[:, None]
        rp += rv * h
        bc += bv * h

        for b in range(m):  # sequential: each push changes the robot velocity
            x0, y0 = bc[b] - half[b]
            x1, y1 = bc[b] + half[b]
            d, qx, qy = _py_circle_rect_dist(rp[0], rp[1], x0, y0, x1, y1)
            if d < r:
                face = _py_face_of(rp[0], rp[1], x0, y0, x1, y1)
                face_mask[b] |= 1 << face
                if not touching[b]:
                    dep = mdepth[b, face]
                    lo_hi = ((rp[0] >= x1, rp[0] <= x1 + dep, y0 <= rp[1] <= y1),
                             (rp[0] <= x0, rp[0] >= x0 - dep, y0 <= rp[1] <= y1),
                             (rp[1] >= y1, rp[1] <= y1 + dep, x0 <= rp[0] <= x1),
                             (rp[1] <= y0, rp[1] >= y0 - dep, x0 <= rp[0] <= x1))[face]
                    if dep <= 0.0 or not all(lo_hi):
                        onset_bad[b] |= 1 << face
                a = FACE_AXIS[face]
                n = -FACE_SIGN[face]
                vrn = rv[a] * n
                vbn = bv[b, a] * n
                if vrn > vbn:
                    vc = (rmass * vrn + bmass[b] * vbn) / (rmass + bmass[b])
                    rv[a] += (vc - vrn) * n
                    bv[b, a] += (vc - vbn) * n
                if a == 0:
                    pen = r - abs(rp[0] - qx) if d > 0.0 else r + min(rp[0] - x0, x1 - rp[0])
                else:
                    pen = r - abs(rp[1] - qy) if d > 0.0 else r + min(rp[1] - y0, y1 - rp[1])
                bc[b, a] += pen * n
            touching[b] = d <= r + TOUCH_TOL

        _np_project_boxes(bc, bv, half, fixed, bounds, iu, ju)

        shoved = False
        for _it in range(ROBOT_ITERS):
            clean = True
            pinned = False
            if len(fixed) and (_np_circle_rects(rp, fixed)[0] < r - SEP_TOL).any():
                # sequential: one projection can push the robot into the next wall
                for f in range(len(fixed)):
                    d, _, _ = _py_circle_rect_dist(rp[0], rp[1], *fixed[f])
                    if d < r - SEP_TOL:
                        hit_fixed = 1
                        pinned = True
                        clean = False
                        _py_robot_out_of_rect(rp, rv, r, *fixed[f])
            for a in range(2):
                if rp[a] - r < bounds[a] - SEP_TOL:
                    hit_fixed = 1
                    pinned = True
                    clean = False
                    rp[a] = bounds[a] + r
                    if rv[a] < 0.0:
                        rv[a] = 0.0
                elif rp[a] + r > bounds[a + 2] + SEP_TOL:
                    hit_fixed = 1
                    pinned = True
                    clean = False
                    rp[a] = bounds[a + 2] - r
                    if rv[a] > 0.0:
                        rv[a] = 0.0
            for b in range(m):
                x0, y0 = bc[b] - half[b]
                x1, y1 = bc[b] + half[b]
                d, _, _ = _py_circle_rect_dist(rp[0], rp[1], x0, y0, x1, y1)
                if d < r - SEP_TOL:
                    clean = False
                    face = _py_face_of(rp[0], rp[1], x0, y0, x1, y1)
                    face_mask[b] |= 1 << face
                    if pinned and _it >= ROBOT_ITERS // 2:
                        _py_shove_box(rp, r, bc, bv, half, b, face)
                        shoved = True
                    else:
                        _py_robot_out_of_rect(rp, rv, r, x0, y0, x1, y1)
                    touching[b] = True
            if clean:
                break
        if shoved:
            _np_project_boxes(bc, bv, half, fixed, bounds, iu, ju)
    return hit_fixed


def mregion_free_numpy(mrects, declared, body_rects, fixed, bounds, tol):
    m = mrects.shape[0]
    if m == 0:
        return np.zeros((0, 4), dtype=bool)
    mr = mrects.reshape(m * 4, 4)
    inside = ((mr[:, 0] >= bounds[0] - 1e-9) & (mr[:, 1] >= bounds[1] - 1e-9)
              & (mr[:, 2] <= bounds[2] + 1e-9) & (mr[:, 3] <= bounds[3] + 1e-9))

    def blocked_by(rects):
        if len(rects) == 0:
            return np.zeros((m * 4, 0), dtype=bool)
        w = np.minimum(mr[:, None, 2], rects[None, :, 2]) - np.maximum(mr[:, None, 0], rects[None, :, 0])
        hh = np.minimum(mr[:, None, 3], rects[None, :, 3]) - np.maximum(mr[:, None, 1], rects[None, :, 1])
        return (w > 0.0) & (hh > 0.0) & (w * hh > tol)

    by_fixed = blocked_by(fixed).any(axis=1)
    by_body = blocked_by(body_rects)
    owner = np.repeat(np.arange(m), 4)
    by_body[np.arange(m * 4), owner] = False
    free = inside & ~by_fixed & ~by_body.any(axis=1)
    return free.reshape(m, 4) & declared


# ---------------------------------------------------------------------------
# dispatch

if numba is not None:
    _face_of = _njit(_face_of)
    _circle_rect_dist = _njit(_circle_rect_dist)
    _robot_out_of_rect = _njit(_robot_out_of_rect)
    _overlap_axis = _njit(_overlap_axis)
    _shove_box = _njit(_shove_box)
    _project_boxes = _njit(project_boxes_loop)
    substeps_jit = _njit(substeps_loop)
    mregion_free_jit = _njit(mregion_free_loop)
else:  # pragma: no cover
    substeps_jit = substeps_loop
    mregion_free_jit = mregion_free_loop

BACKENDS = {
    "numba": (substeps_jit, mregion_free_jit),
    "numpy": (substeps_numpy, mregion_free_numpy),
}


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def get_kernels(name: str | None = None):
    return BACKENDS[name or backend_name()]
