"""Hot inner loops, each with a numba build and a plain numpy/Python build.

The numba path is used when numba imports and ``ZERO_TRACER_NUMBA`` is not
set to ``0``. Both builds are always importable under explicit names
(``*_py`` / ``*_nb``) so tests and the benchmark can compare them.
"""
import os

import numpy as np

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ZERO_TRACER_NUMBA", "1") != "0"

# status codes returned by walk_paths
WALK_OK = 0
WALK_DEAD_END = 1      # mixed edge without a second incident triangle
WALK_NOT_MIXED = 2     # stepped into a triangle that has no zero segment
WALK_REVISIT = 3       # re-entered a triangle of the current path or another path


# ---------------------------------------------------------------------------
# zero-path walk

def walk_paths_py(tri_mixed, edge_tris):
    """Walk every closed zero path.

    ``tri_mixed[t]`` holds the two mixed edge ids of triangle ``t`` (sorted),
    or ``-1, -1`` when the triangle is monochrome. ``edge_tris[e]`` holds the
    two triangles incident to edge ``e``.

    Returns ``(tris, exits, starts, status)``: the concatenated triangle
    sequence of all paths, the exit edge of each of those triangles, the
    offset where each path begins (with a final sentinel), and a status code.
    """
    n_tri = tri_mixed.shape[0]
    visited = np.full(n_tri, -1, dtype=np.int64)
    tris = np.empty(n_tri, dtype=np.int64)
    exits = np.empty(n_tri, dtype=np.int64)
    starts = np.empty(n_tri + 1, dtype=np.int64)
    n = 0
    n_paths = 0
    for t0 in range(n_tri):
        if tri_mixed[t0, 0] < 0 or visited[t0] >= 0:
            continue
        starts[n_paths] = n
        cur = t0
        exit_edge = tri_mixed[t0, 0]
        while True:
            visited[cur] = n_paths
            tris[n] = cur
            exits[n] = exit_edge
            n += 1
            a, b = edge_tris[exit_edge, 0], edge_tris[exit_edge, 1]
            nxt = b if a == cur else a
            if nxt < 0:
                starts[n_paths + 1] = n
                return tris[:n], exits[:n], starts[:n_paths + 2], WALK_DEAD_END
            if nxt == t0:
                break
            if tri_mixed[nxt, 0] < 0:
                starts[n_paths + 1] = n
                return tris[:n], exits[:n], starts[:n_paths + 2], WALK_NOT_MIXED
            if visited[nxt] >= 0:
                starts[n_paths + 1] = n
                return tris[:n], exits[:n], starts[:n_paths + 2], WALK_REVISIT
            entry = exit_edge
            exit_edge = tri_mixed[nxt, 1] if tri_mixed[nxt, 0] == entry else tri_mixed[nxt, 0]
            cur = nxt
        n_paths += 1
    starts[n_paths] = n
    return tris[:n], exits[:n], starts[:n_paths + 1], WALK_OK


# ---------------------------------------------------------------------------
# first angular crossing along a periodic point cycle

def _angle(ax, ay, az, bx, by, bz):
    cx = ay * bz - az * by
    cy = az * bx - ax * bz
    cz = ax * by - ay * bx
    return np.arctan2(np.sqrt(cx * cx + cy * cy + cz * cz), ax * bx + ay * by + az * bz)


def first_crossings_py(points, origins, start, theta):
    """For each row ``k``, scan ``points[(start[k] + j) % M]`` for
    ``j = 1 .. M // 2`` and return the first ``j`` whose angle to
    ``origins[k]`` is ``>= theta`` (``0`` when none is found).
    """
    m = points.shape[0]
    half = m // 2
    out = np.zeros(origins.shape[0], dtype=np.int64)
    offsets = np.arange(1, half + 1)
    for k in range(origins.shape[0]):
        idx = (start[k] + offsets) % m
        p = points[idx]
        o = origins[k]
        ang = _angle(o[0], o[1], o[2], p[:, 0], p[:, 1], p[:, 2])
        hit = np.flatnonzero(ang >= theta)
        if hit.size:
            out[k] = hit[0] + 1
    return out


if HAVE_NUMBA:
    walk_paths_nb = numba.njit(cache=True)(walk_paths_py)

    @numba.njit(cache=True)
    def first_crossings_nb(points, origins, start, theta):
        m = points.shape[0]
        half = m // 2
        out = np.zeros(origins.shape[0], dtype=np.int64)
        for k in range(origins.shape[0]):
            ox, oy, oz = origins[k, 0], origins[k, 1], origins[k, 2]
            for j in range(1, half + 1):
                i = (start[k] + j) % m
                px, py, pz = points[i, 0], points[i, 1], points[i, 2]
                cx = oy * pz - oz * py
                cy = oz * px - ox * pz
                cz = ox * py - oy * px
                ang = np.arctan2(np.sqrt(cx * cx + cy * cy + cz * cz),
                                 ox * px + oy * py + oz * pz)
                if ang >= theta:
                    out[k] = j
                    break
        return out
else:  # pragma: no cover
    walk_paths_nb = None
    first_crossings_nb = None


if USE_NUMBA:
    walk_paths = walk_paths_nb
    first_crossings = first_crossings_nb
else:
    walk_paths = walk_paths_py
    first_crossings = first_crossings_py


def backend():
    return "numba" if USE_NUMBA else "numpy"
