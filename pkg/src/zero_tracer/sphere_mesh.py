"""Centrally symmetric triangulations of the unit sphere.

Vertex ``i`` and ``antipode[i]`` always sit at exactly negated coordinates:
the lower index of each pair owns the position and the partner is written as
its coordinate-wise negation, so antipodal checks elsewhere are exact index
or bit comparisons rather than tolerance tests.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidMesh, LevelTooLarge, NotARotation

DEFAULT_MAX_LEVEL = 10
NORM_TOL = 1e-12
AREA_TOL = 1e-14
ROTATION_TOL = 1e-10


def max_level() -> int:
    """Global refinement cap; ``ZERO_TRACER_MAX_LEVEL`` overrides the default."""
    raw = os.environ.get("ZERO_TRACER_MAX_LEVEL")
    return int(raw) if raw else DEFAULT_MAX_LEVEL


class Violation(NamedTuple):
    rule: str
    index: int


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def __bool__(self):
        return self.ok


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


def _pair_keys(pairs, n):
    return pairs[:, 0].astype(np.int64) * n + pairs[:, 1]


def _rows_in(rows, table):
    """Membership of each int row of ``rows`` in the row set ``table``."""
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    table = np.ascontiguousarray(table, dtype=np.int64)
    void = np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))
    return np.isin(rows.view(void).ravel(), table.view(void).ravel())


@dataclass(frozen=True, eq=False)
class SymmetricTriangulation:
    """Triangle mesh on the unit sphere with an explicit antipodal pairing.

    Construction does not validate; call :func:`validate` on anything that
    did not come out of this module's builders. Derived connectivity is
    computed lazily and cached.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    antipode: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, np.float64).reshape(-1, 3))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(self, "antipode", _frozen(self.antipode, np.int64).reshape(-1))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @cached_property
    def _edge_index(self):
        tri = self.triangles
        half = np.stack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=1).reshape(-1, 2)
        half = np.sort(half, axis=1)
        n = max(self.n_vertices, 1)
        keys, inverse = np.unique(_pair_keys(half, n), return_inverse=True)
        edges = np.stack([keys // n, keys % n], axis=1)
        return edges, inverse.reshape(-1)

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted ``(u, v)`` rows, lexicographic order."""
        return _frozen(self._edge_index[0], np.int64).reshape(-1, 2)

    @cached_property
    def tri_edges(self) -> np.ndarray:
        """``tri_edges[t, k]`` is the edge joining corners ``k`` and ``k+1`` of ``t``."""
        return _frozen(self._edge_index[1].reshape(-1, 3), np.int64)

    @cached_property
    def edge_valence(self) -> np.ndarray:
        return _frozen(np.bincount(self.tri_edges.reshape(-1), minlength=self.n_edges), np.int64)

    @cached_property
    def edge_tris(self) -> np.ndarray:
        """First two triangles incident to each edge, ``-1`` where missing."""
        flat = self.tri_edges.reshape(-1)
        owner = np.repeat(np.arange(self.n_triangles), 3)
        order = np.argsort(flat, kind="stable")
        flat, owner = flat[order], owner[order]
        first = np.searchsorted(flat, np.arange(self.n_edges))
        out = np.full((self.n_edges, 2), -1, dtype=np.int64)
        out[:, 0] = owner[first]
        second = first + 1
        has_second = (second < len(flat)) & (flat[np.minimum(second, len(flat) - 1)] == np.arange(self.n_edges))
        out[has_second, 1] = owner[second[has_second]]
        return _frozen(out, np.int64)

    def edge_id(self, u: int, v: int) -> int:
        """Index of edge ``{u, v}``; ``KeyError`` if it is not an edge."""
        e = self.lookup_edges(np.array([[u, v]]))[0]
        if e < 0:
            raise KeyError((u, v))
        return int(e)

    def lookup_edges(self, pairs) -> np.ndarray:
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        keys = _pair_keys(self.edges, self.n_vertices)
        q = _pair_keys(pairs, self.n_vertices)
        pos = np.searchsorted(keys, q)
        pos_c = np.minimum(pos, len(keys) - 1)
        return np.where(keys[pos_c] == q, pos_c, -1)

    @cached_property
    def edge_antipode(self) -> np.ndarray:
        """Edge id of the antipodal image of each edge, ``-1`` if absent."""
        a = self.antipode
        e = self.edges
        if a.shape[0] != self.n_vertices or (a.size and (a.min() < 0 or a.max() >= self.n_vertices)):
            return _frozen(np.full(self.n_edges, -1), np.int64)
        return _frozen(self.lookup_edges(a[e]), np.int64)

    @cached_property
    def canonical(self) -> np.ndarray:
        """Boolean mask of the vertex that owns each antipodal pair (the lower index)."""
        return _frozen(np.arange(self.n_vertices) < self.antipode, bool)

    def midpoints(self, edge_ids) -> np.ndarray:
        """Chord midpoints of the given edges (not projected to the sphere)."""
        e = self.edges[np.asarray(edge_ids, dtype=np.int64)]
        return (self.vertices[e[:, 0]] + self.vertices[e[:, 1]]) / 2.0

    def __repr__(self):
        return (f"SymmetricTriangulation(V={self.n_vertices}, E={self.n_edges}, "
                f"F={self.n_triangles}, meta={self.meta})")


# ---------------------------------------------------------------------------
# builders

def base_octahedron() -> SymmetricTriangulation:
    """Regular octahedron with vertices e1, e2, e3, -e1, -e2, -e3 (in that order)."""
    eye = np.eye(3)
    vertices = np.vstack([eye, -eye])
    triangles = []
    for sx in (0, 3):
        for sy in (1, 4):
            for sz in (2, 5):
                triangles.append((sx, sy, sz))
    antipode = np.array([3, 4, 5, 0, 1, 2])
    return SymmetricTriangulation(vertices, np.array(triangles), antipode,
                                  meta={"base": "octahedron", "levels": 0})


def _symmetrize(positions, antipode):
    """Overwrite every non-canonical vertex with the negation of its partner."""
    n = len(positions)
    partner = ~(np.arange(n) < antipode)
    positions[partner] = -positions[antipode[partner]]
    return positions


def subdivide_once(T: SymmetricTriangulation) -> SymmetricTriangulation:
    """Split each triangle 1-to-4 at its edge midpoints (projected to the sphere)."""
    report = validate(T)
    if not report.ok:
        raise InvalidMesh(f"cannot subdivide invalid mesh: {report.violations[:3]}")
    return _subdivide(T)


def _subdivide(T):
    nv = T.n_vertices
    edges = T.edges
    e_anti = T.edge_antipode
    mids = T.vertices[edges[:, 0]] + T.vertices[edges[:, 1]]
    mids /= np.linalg.norm(mids, axis=1)[:, None]
    positions = np.vstack([T.vertices, mids])
    antipode = np.concatenate([T.antipode, nv + e_anti])
    positions = _symmetrize(positions, antipode)

    a, b, c = T.triangles.T
    mab, mbc, mca = (nv + T.tri_edges).T
    triangles = np.concatenate([
        np.stack([a, mab, mca], axis=1),
        np.stack([b, mbc, mab], axis=1),
        np.stack([c, mca, mbc], axis=1),
        np.stack([mab, mbc, mca], axis=1),
    ])
    meta = dict(T.meta)
    meta["levels"] = int(meta.get("levels", 0)) + 1
    return SymmetricTriangulation(positions, triangles, antipode, meta=meta)


@lru_cache(maxsize=16)
def _refined(levels):
    T = base_octahedron()
    for _ in range(levels):
        T = _subdivide(T)
    return T


def build_refined(levels: int, cap: int | None = None) -> SymmetricTriangulation:
    """Octahedron subdivided ``levels`` times (cached; meshes are immutable)."""
    cap = max_level() if cap is None else cap
    if levels < 0:
        raise ValueError("levels must be non-negative")
    if levels > cap:
        raise LevelTooLarge(f"levels={levels} exceeds the configured maximum {cap}")
    return _refined(int(levels))


# ---------------------------------------------------------------------------
# validation and geometry

def validate(T: SymmetricTriangulation) -> ValidationReport:
    """Check every structural invariant; violations are returned, not raised."""
    out: list[Violation] = []
    nv, nf = T.n_vertices, T.n_triangles
    tri = T.triangles
    a = T.antipode

    if tri.size and (tri.min() < 0 or tri.max() >= nv):
        bad = np.flatnonzero(((tri < 0) | (tri >= nv)).any(axis=1))
        out.extend(Violation("triangle index out of range", int(t)) for t in bad)
        return ValidationReport(tuple(out))

    norms = np.linalg.norm(T.vertices, axis=1)
    for i in np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL):
        out.append(Violation("vertex not on unit sphere", int(i)))

    repeated = (tri[:, 0] == tri[:, 1]) | (tri[:, 1] == tri[:, 2]) | (tri[:, 0] == tri[:, 2])
    p = T.vertices
    area = 0.5 * np.linalg.norm(np.cross(p[tri[:, 1]] - p[tri[:, 0]], p[tri[:, 2]] - p[tri[:, 0]]), axis=1)
    for t in np.flatnonzero(repeated | (area <= AREA_TOL)):
        out.append(Violation("degenerate triangle", int(t)))

    antipode_ok = a.shape == (nv,) and (nv == 0 or (a.min() >= 0 and a.max() < nv))
    if not antipode_ok:
        out.append(Violation("antipode map malformed", -1))
    else:
        for i in np.flatnonzero(a == np.arange(nv)):
            out.append(Violation("antipode fixed point", int(i)))
        for i in np.flatnonzero(a[a] != np.arange(nv)):
            out.append(Violation("involution", int(i)))
        for i in np.flatnonzero((p[a] != -p).any(axis=1)):
            out.append(Violation("antipode position", int(i)))
        present = _rows_in(np.sort(a[tri], axis=1), np.sort(tri, axis=1))
        for t in np.flatnonzero(~present):
            out.append(Violation("triangle closure", int(t)))

    valence = T.edge_valence
    for e in np.flatnonzero(valence != 2):
        out.append(Violation(f"edge with {int(valence[e])} incident triangle"
                             + ("" if valence[e] == 1 else "s"), int(e)))

    if nv:
        e = T.edges
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nv, nv))
        n_comp, _ = connected_components(g, directed=False)
        if n_comp != 1:
            out.append(Violation("disconnected", n_comp))
        used = np.zeros(nv, bool)
        used[tri.reshape(-1)] = True
        for i in np.flatnonzero(~used):
            out.append(Violation("isolated vertex", int(i)))

    chi = T.euler_characteristic()
    if chi != 2:
        out.append(Violation("euler characteristic", chi))
    return ValidationReport(tuple(out))


def mesh_diameter(T: SymmetricTriangulation) -> float:
    """Longest edge chord."""
    e = T.edges
    return float(np.linalg.norm(T.vertices[e[:, 0]] - T.vertices[e[:, 1]], axis=1).max())


def rotate_mesh(T: SymmetricTriangulation, R) -> SymmetricTriangulation:
    """Apply a proper rotation; connectivity and pairing are kept as is."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise NotARotation(f"expected a 3x3 matrix, got shape {R.shape}")
    if np.linalg.norm(R.T @ R - np.eye(3)) > ROTATION_TOL or np.linalg.det(R) <= 0:
        raise NotARotation("matrix is not orthogonal with determinant +1")
    positions = T.vertices @ R.T
    positions = _symmetrize(positions, T.antipode)
    return SymmetricTriangulation(positions, T.triangles, T.antipode, meta=dict(T.meta))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation from the QR decomposition of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ---------------------------------------------------------------------------
# JSON

def mesh_to_dict(T: SymmetricTriangulation) -> dict:
    meta = {"base": T.meta.get("base", "octahedron"), "levels": T.meta.get("levels")}
    meta.update({k: v for k, v in T.meta.items() if k not in meta})
    return {
        "vertices": T.vertices.tolist(),
        "triangles": T.triangles.tolist(),
        "antipode": T.antipode.tolist(),
        "meta": meta,
    }


def mesh_from_dict(data: dict) -> SymmetricTriangulation:
    try:
        return SymmetricTriangulation(
            np.asarray(data["vertices"], dtype=np.float64),
            np.asarray(data["triangles"], dtype=np.int64),
            np.asarray(data["antipode"], dtype=np.int64),
            meta=dict(data.get("meta") or {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidMesh(f"malformed mesh JSON: {exc}") from exc


def save_mesh(T: SymmetricTriangulation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mesh_to_dict(T), fh)


def load_mesh(path) -> SymmetricTriangulation:
    with open(path, encoding="utf-8") as fh:
        return mesh_from_dict(json.load(fh))
