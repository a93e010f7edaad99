"""Vector/quaternion math, convex supports, GJK/EPA on plain tuples.

The contact pipeline keeps everything in Python floats: at a handful of
bodies numpy's per-call overhead dwarfs the arithmetic, and tuple math is
bitwise deterministic across runs.

Conventions: quaternions are ``[w, x, y, z]``; rotation matrices are row
tuples mapping body to world (``world = R @ body``); contact normals point
in the direction that pushes the first shape away from the second.
"""

from __future__ import annotations

import math

SPHERE, BOX, CYLINDER = 0, 1, 2
KIND_BY_SHAPE = {"sphere": SPHERE, "box": BOX, "cylinder": CYLINDER}


# ---------------------------------------------------------------------------
# vec3 / mat3


def add3(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub3(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def scale3(a, s):
    return (a[0] * s, a[1] * s, a[2] * s)


def neg3(a):
    return (-a[0], -a[1], -a[2])


def dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross3(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def norm3(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def normalize3(a, fallback=(0.0, 0.0, 1.0)):
    n = norm3(a)
    if n < 1e-12:
        return fallback
    return (a[0] / n, a[1] / n, a[2] / n)


def mat3_vec(m, v):
    return (
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )


def mat3_T_vec(m, v):
    return (
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    )


# ---------------------------------------------------------------------------
# quaternions [w, x, y, z]


def quat_to_mat3(q):
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return (
        (1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)),
        (2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)),
        (2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)),
    )


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_integrate(q, omega, dt):
    """Advance orientation by world angular velocity, renormalized."""
    half = 0.5 * dt
    dw, dx, dy, dz = quat_mul((0.0, omega[0], omega[1], omega[2]), q)
    w = q[0] + half * dw
    x = q[1] + half * dx
    y = q[2] + half * dy
    z = q[3] + half * dz
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n < 1e-12:
        return (1.0, 0.0, 0.0, 0.0)
    return (w / n, x / n, y / n, z / n)


# ---------------------------------------------------------------------------
# shape derived quantities


def body_geometry(obj):
    """(kind, params) pair for an ObjectSpec. Box params are half-extents,
    cylinder params are (radius, half_height)."""
    if obj.shape == "sphere":
        return SPHERE, (float(obj.radius),)
    if obj.shape == "box":
        return BOX, (float(obj.size[0]), float(obj.size[1]), float(obj.size[2]))
    if obj.shape == "cylinder":
        return CYLINDER, (float(obj.radius), 0.5 * float(obj.height))
    raise ValueError(f"unknown shape {obj.shape!r}")


def bounding_radius(kind, params):
    if kind == SPHERE:
        return params[0]
    if kind == BOX:
        return math.sqrt(params[0] ** 2 + params[1] ** 2 + params[2] ** 2)
    return math.sqrt(params[0] ** 2 + params[1] ** 2)


def inertia_diagonal(kind, params, mass):
    """Body-frame principal moments of inertia (solid primitives)."""
    if kind == SPHERE:
        i = 0.4 * mass * params[0] ** 2
        return (i, i, i)
    if kind == BOX:
        hx, hy, hz = params
        return (
            mass / 3.0 * (hy * hy + hz * hz),
            mass / 3.0 * (hx * hx + hz * hz),
            mass / 3.0 * (hx * hx + hy * hy),
        )
    r, hh = params
    ixy = mass * (3.0 * r * r + 4.0 * hh * hh) / 12.0
    return (ixy, ixy, 0.5 * mass * r * r)


def world_inv_inertia(R, inv_diag):
    """R diag(inv_diag) R^T as nested tuples."""
    a = (
        (R[0][0] * inv_diag[0], R[0][1] * inv_diag[1], R[0][2] * inv_diag[2]),
        (R[1][0] * inv_diag[0], R[1][1] * inv_diag[1], R[1][2] * inv_diag[2]),
        (R[2][0] * inv_diag[0], R[2][1] * inv_diag[1], R[2][2] * inv_diag[2]),
    )
    out = []
    for i in range(3):
        out.append(
            (
                a[i][0] * R[0][0] + a[i][1] * R[0][1] + a[i][2] * R[0][2],
                a[i][0] * R[1][0] + a[i][1] * R[1][1] + a[i][2] * R[1][2],
                a[i][0] * R[2][0] + a[i][1] * R[2][1] + a[i][2] * R[2][2],
            )
        )
    return tuple(out)


# ---------------------------------------------------------------------------
# support mappings


def support_local(kind, params, d):
    if kind == SPHERE:
        r = params[0]
        n = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        if n < 1e-12:
            return (r, 0.0, 0.0)
        return (r * d[0] / n, r * d[1] / n, r * d[2] / n)
    if kind == BOX:
        return (
            params[0] if d[0] >= 0.0 else -params[0],
            params[1] if d[1] >= 0.0 else -params[1],
            params[2] if d[2] >= 0.0 else -params[2],
        )
    r, hh = params
    rad = math.hypot(d[0], d[1])
    if rad < 1e-12:
        px = py = 0.0
    else:
        px, py = r * d[0] / rad, r * d[1] / rad
    return (px, py, hh if d[2] >= 0.0 else -hh)


def support_world(kind, params, R, c, d_world):
    p = support_local(kind, params, mat3_T_vec(R, d_world))
    return add3(c, mat3_vec(R, p))


def lowest_point_z(kind, params, R, c):
    """Height of the shape's lowest point above the ground plane z = 0."""
    p = support_world(kind, params, R, c, (0.0, 0.0, -1.0))
    return p[2]


# ---------------------------------------------------------------------------
# closest points on primitives (body frame), used for sphere contacts


def closest_on_box_local(p, half):
    """Closest boundary point of the solid box to p, plus inside flag."""
    inside = abs(p[0]) <= half[0] and abs(p[1]) <= half[1] and abs(p[2]) <= half[2]
    if not inside:
        return (
            min(max(p[0], -half[0]), half[0]),
            min(max(p[1], -half[1]), half[1]),
            min(max(p[2], -half[2]), half[2]),
        ), False
    # push to the nearest face
    gaps = (half[0] - abs(p[0]), half[1] - abs(p[1]), half[2] - abs(p[2]))
    axis = min(range(3), key=lambda i: gaps[i])
    q = list(p)
    q[axis] = half[axis] if p[axis] >= 0.0 else -half[axis]
    return tuple(q), True


def closest_on_cylinder_local(p, r, hh):
    """Closest boundary point of the solid capped cylinder to p, plus inside flag."""
    rad = math.hypot(p[0], p[1])
    inside = rad <= r and abs(p[2]) <= hh
    if not inside:
        if rad > 1e-12:
            cx, cy = min(rad, r) * p[0] / rad, min(rad, r) * p[1] / rad
        else:
            cx = cy = 0.0
        return (cx, cy, min(max(p[2], -hh), hh)), False
    side_gap = r - rad
    cap_gap = hh - abs(p[2])
    if side_gap < cap_gap:
        if rad > 1e-12:
            return (r * p[0] / rad, r * p[1] / rad, p[2]), True
        return (r, 0.0, p[2]), True
    return (p[0], p[1], hh if p[2] >= 0.0 else -hh), True


# ---------------------------------------------------------------------------
# GJK distance with witness points

_AXES = ((1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0), (0.0, 0.0, -1.0))


def _closest_on_segment(a, b):
    ab = sub3(b, a)
    denom = dot3(ab, ab)
    if denom < 1e-30:
        return a, (1.0, 0.0)
    t = -dot3(a, ab) / denom
    t = min(max(t, 0.0), 1.0)
    return add3(a, scale3(ab, t)), (1.0 - t, t)


def _closest_on_triangle(a, b, c):
    """Closest point of triangle abc to the origin, with barycentrics."""
    ab = sub3(b, a)
    ac = sub3(c, a)
    ap = neg3(a)
    d1 = dot3(ab, ap)
    d2 = dot3(ac, ap)
    if d1 <= 0.0 and d2 <= 0.0:
        return a, (1.0, 0.0, 0.0)
    bp = neg3(b)
    d3 = dot3(ab, bp)
    d4 = dot3(ac, bp)
    if d3 >= 0.0 and d4 <= d3:
        return b, (0.0, 1.0, 0.0)
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return add3(a, scale3(ab, v)), (1.0 - v, v, 0.0)
    cp = neg3(c)
    d5 = dot3(ab, cp)
    d6 = dot3(ac, cp)
    if d6 >= 0.0 and d5 <= d6:
        return c, (0.0, 0.0, 1.0)
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return add3(a, scale3(ac, w)), (1.0 - w, 0.0, w)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return add3(b, scale3(sub3(c, b), w)), (0.0, 1.0 - w, w)
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return add3(a, add3(scale3(ab, v), scale3(ac, w))), (1.0 - v - w, v, w)


def _reduce_simplex(simplex):
    """Closest point of the simplex to the origin; prunes zero-weight verts.

    Returns (v, reduced simplex, contains_origin).
    """
    pts = [s[0] for s in simplex]
    if len(simplex) == 1:
        return pts[0], simplex, False
    if len(simplex) == 2:
        v, lam = _closest_on_segment(pts[0], pts[1])
        kept = [simplex[i] for i in range(2) if lam[i] > 1e-12]
        return v, (kept or [simplex[0]]), False
    if len(simplex) == 3:
        v, lam = _closest_on_triangle(pts[0], pts[1], pts[2])
        kept = [simplex[i] for i in range(3) if lam[i] > 1e-12]
        return v, (kept or [simplex[0]]), False
    # tetrahedron: check each face the origin could be outside of
    a, b, c, d = pts
    best = None
    inside = True
    for (i, j, k, opp) in ((0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 3, 1), (1, 2, 3, 0)):
        n = cross3(sub3(pts[j], pts[i]), sub3(pts[k], pts[i]))
        side_opp = dot3(n, sub3(pts[opp], pts[i]))
        side_origin = dot3(n, neg3(pts[i]))
        if side_opp * side_origin < 0.0 or abs(side_opp) < 1e-18:
            inside = False
            v, lam = _closest_on_triangle(pts[i], pts[j], pts[k])
            d2 = dot3(v, v)
            if best is None or d2 < best[0]:
                kept = [simplex[t] for t, l in zip((i, j, k), lam) if l > 1e-12]
                best = (d2, v, kept or [simplex[i]])
    if inside:
        return (0.0, 0.0, 0.0), simplex, True
    return best[1], best[2], False


def _witnesses(simplex, v):
    """Barycentric witness points for the closest point v on the simplex."""
    pts = [s[0] for s in simplex]
    if len(simplex) == 1:
        lam = (1.0,)
    elif len(simplex) == 2:
        _, lam = _closest_on_segment(pts[0], pts[1])
    else:
        _, lam = _closest_on_triangle(pts[0], pts[1], pts[2])
    pa = (0.0, 0.0, 0.0)
    pb = (0.0, 0.0, 0.0)
    for l, (_, sa, sb) in zip(lam, simplex):
        pa = add3(pa, scale3(sa, l))
        pb = add3(pb, scale3(sb, l))
    return pa, pb


def _gjk_closest(sup_a, sup_b, initial_dir=(1.0, 0.0, 0.0), tol=1e-9, max_iter=64):
    """GJK core: (distance, point_on_a, point_on_b, final simplex).

    Distance 0.0 with witness points both None signals interpenetration; the
    simplex is then the origin-enclosing tetrahedron (EPA seed) unless the
    origin was hit degenerately mid-walk.
    """
    d = initial_dir if norm3(initial_dir) > 1e-12 else (1.0, 0.0, 0.0)
    sa = sup_a(d)
    sb = sup_b(neg3(d))
    simplex = [(sub3(sa, sb), sa, sb)]
    v = simplex[0][0]
    for _ in range(max_iter):
        vn = norm3(v)
        if vn < 1e-9:
            return 0.0, None, None, simplex
        d = scale3(v, -1.0 / vn)
        sa = sup_a(d)
        sb = sup_b(neg3(d))
        w = sub3(sa, sb)
        # lower-bound convergence test
        if vn + dot3(w, d) <= tol * max(1.0, vn):
            pa, pb = _witnesses(simplex, v)
            return vn, pa, pb, simplex
        if any(norm3(sub3(w, s[0])) < 1e-12 for s in simplex):
            pa, pb = _witnesses(simplex, v)
            return vn, pa, pb, simplex
        simplex.append((w, sa, sb))
        v, simplex, contains = _reduce_simplex(simplex)
        if contains:
            return 0.0, None, None, simplex
    vn = norm3(v)
    pa, pb = _witnesses(simplex, v)
    return vn, pa, pb, simplex


def gjk_distance(sup_a, sup_b, initial_dir=(1.0, 0.0, 0.0), tol=1e-9, max_iter=64):
    """Distance between convex shapes given by world-space support functions.

    Returns (distance, point_on_a, point_on_b); distance 0.0 with witness
    points both None signals interpenetration.
    """
    dist, pa, pb, _ = _gjk_closest(sup_a, sup_b, initial_dir, tol, max_iter)
    return dist, pa, pb


# ---------------------------------------------------------------------------
# EPA penetration depth


_TETRA_FACES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
# triangle (0,1,2) plus apexes 3 and 4 on opposite sides
_BIPYRAMID_FACES = ((0, 1, 3), (1, 2, 3), (2, 0, 3), (0, 1, 4), (1, 2, 4), (2, 0, 4))


def _epa_seed(sup_a, sup_b):
    """Origin-enclosing seed (verts, face index triples) for EPA, or None.

    The GJK walk normally terminates with an origin-enclosing tetrahedron.
    When it instead lands exactly on the origin with a triangle, the triangle
    is inflated to a bipyramid using supports along both plane normals; the
    rarer segment/point landings retry the walk from other directions.
    """

    def vertex(d):
        sa = sup_a(d)
        sb = sup_b(neg3(d))
        return (sub3(sa, sb), sa, sb)

    for start in _AXES[:3]:
        dist, _, pb, simplex = _gjk_closest(sup_a, sup_b, start)
        if pb is not None or dist > 0.0:
            return None  # shapes do not overlap
        if len(simplex) == 4:
            return list(simplex), _TETRA_FACES
        if len(simplex) == 3:
            n = normalize3(cross3(sub3(simplex[1][0], simplex[0][0]), sub3(simplex[2][0], simplex[0][0])))
            up = vertex(n)
            down = vertex(neg3(n))
            if (
                dot3(sub3(up[0], simplex[0][0]), n) > 1e-12
                and dot3(sub3(down[0], simplex[0][0]), n) < -1e-12
            ):
                return list(simplex) + [up, down], _BIPYRAMID_FACES
    return None


def epa_penetration(sup_a, sup_b, tol=1e-6, max_iter=96):
    """Penetration depth and direction for overlapping convex shapes.

    Returns (depth, normal, contact_point) with the normal oriented to push
    shape A away from shape B, or None when the shapes do not overlap or the
    seed polytope degenerates (callers fall back to a center-line pushout).
    """
    seed = _epa_seed(sup_a, sup_b)
    if seed is None:
        return None
    verts, seed_tris = seed

    def make_face(i, j, k):
        # normal follows the (i, j, k) winding; callers supply outward order
        a, b, c = verts[i][0], verts[j][0], verts[k][0]
        n = cross3(sub3(b, a), sub3(c, a))
        ln = norm3(n)
        if ln < 1e-14:
            return None
        n = scale3(n, 1.0 / ln)
        return [n, dot3(n, a), (i, j, k)]

    # orient each seed face away from the most off-plane remaining vertex;
    # the horizon expansion below preserves winding from there on
    faces = []
    all_idx = range(len(verts))
    for tri in seed_tris:
        f = make_face(*tri)
        if f is None:
            return None
        rest = [i for i in all_idx if i not in tri]
        a = verts[tri[0]][0]
        ref = max(rest, key=lambda i: abs(dot3(f[0], sub3(verts[i][0], a))))
        side = dot3(f[0], sub3(verts[ref][0], a))
        if abs(side) < 1e-14:
            return None  # flat seed polytope
        if side > 0.0:
            f = make_face(tri[0], tri[2], tri[1])
            if f is None:
                return None
        faces.append(f)
    if any(f[1] < -1e-9 for f in faces):
        return None  # origin escaped the seed polytope numerically

    for _ in range(max_iter):
        best = min(faces, key=lambda f: f[1])
        n = best[0]
        sa = sup_a(n)
        sb = sup_b(neg3(n))
        w = sub3(sa, sb)
        gap = dot3(w, n) - best[1]
        if gap < tol:
            i, j, k = best[2]
            proj = scale3(n, best[1])
            _, lam = _closest_on_triangle(sub3(verts[i][0], proj), sub3(verts[j][0], proj), sub3(verts[k][0], proj))
            pa = (0.0, 0.0, 0.0)
            pb = (0.0, 0.0, 0.0)
            for l, idx in zip(lam, (i, j, k)):
                pa = add3(pa, scale3(verts[idx][1], l))
                pb = add3(pb, scale3(verts[idx][2], l))
            point = scale3(add3(pa, pb), 0.5)
            return best[1], neg3(n), point
        verts.append((w, sa, sb))
        new_idx = len(verts) - 1
        visible = [f for f in faces if dot3(f[0], sub3(w, verts[f[2][0]][0])) > 1e-12]
        if not visible:
            i, j, k = best[2]
            return best[1], neg3(n), scale3(add3(verts[i][1], verts[i][2]), 0.5)
        edges: dict = {}
        for f in visible:
            i, j, k = f[2]
            for e in ((i, j), (j, k), (k, i)):
                key = (min(e), max(e))
                if key in edges:
                    del edges[key]
                else:
                    edges[key] = e
        faces = [f for f in faces if f not in visible]
        for a, b in edges.values():
            nf = make_face(a, b, new_idx)
            if nf is not None:
                faces.append(nf)
        if not faces:
            return None
    best = min(faces, key=lambda f: f[1])
    i = best[2][0]
    return best[1], neg3(best[0]), scale3(add3(verts[i][1], verts[i][2]), 0.5)
