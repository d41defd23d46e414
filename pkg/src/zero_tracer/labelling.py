"""Antisymmetric +/-1 vertex labellings and their piecewise-linear extension."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateField, InvalidLabelling
from .sphere_mesh import (SymmetricTriangulation, ValidationReport, Violation,
                          random_rotation, rotate_mesh)

DEFAULT_TIE_TOL = 1e-9
DEFAULT_MAX_RETRIES = 16


class ScalarField:
    """Real-valued function on unit vectors.

    ``fn`` takes one point of shape ``(3,)``; with ``vectorized=True`` it must
    also accept an ``(n, 3)`` array and return shape ``(n,)``. Fields must be
    pure: the solver evaluates them in whatever order and batching it likes.
    """

    def __init__(self, fn: Callable, vectorized: bool = False, name: str | None = None):
        self.fn = fn
        self.vectorized = vectorized
        self.name = name or getattr(fn, "__name__", "field")

    def __call__(self, p) -> float:
        return float(self.fn(np.asarray(p, dtype=np.float64)))

    def batch(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if self.vectorized:
            return np.asarray(self.fn(pts), dtype=np.float64).reshape(len(pts))
        return np.fromiter((self.fn(p) for p in pts), dtype=np.float64, count=len(pts))

    def __repr__(self):
        return f"ScalarField({self.name})"


def as_field(f) -> ScalarField:
    """Wrap a plain per-point callable; ScalarFields pass through."""
    return f if isinstance(f, ScalarField) else ScalarField(f)


@dataclass(frozen=True, eq=False)
class Labelling:
    labels: np.ndarray
    tie_retries_used: int = 0
    rotation: np.ndarray | None = None
    mesh_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.int64).reshape(-1)
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i):
        return int(self.labels[i])


@dataclass(frozen=True)
class BarycentricPoint:
    triangle: int
    weights: tuple[float, float, float]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != 3:
            raise ValueError("need exactly three barycentric weights")
        if abs(sum(w) - 1.0) > 1e-12 or min(w) < -1e-14:
            raise ValueError(f"invalid barycentric weights {w}")
        object.__setattr__(self, "weights", w)


def _labels_array(labelling):
    if isinstance(labelling, Labelling):
        return labelling.labels
    if isinstance(labelling, dict):
        return labelling
    return np.asarray(labelling)


def validate_labelling(T: SymmetricTriangulation, labelling) -> ValidationReport:
    """Report missing labels, values outside {+1, -1} and antisymmetry breaks."""
    lab = _labels_array(labelling)
    nv = T.n_vertices
    if isinstance(lab, dict):
        present = np.array([i in lab for i in range(nv)], dtype=bool)
        values = np.array([lab.get(i, 0) for i in range(nv)])
        extra = any(not (isinstance(k, (int, np.integer)) and 0 <= k < nv) for k in lab)
    else:
        lab = np.asarray(lab).reshape(-1)
        present = np.arange(nv) < len(lab)
        values = np.zeros(nv, dtype=lab.dtype if lab.size else np.int64)
        values[: min(nv, len(lab))] = lab[:nv]
        extra = len(lab) > nv
    out = [Violation("missing label", int(i)) for i in np.flatnonzero(~present)]
    out += [Violation("label not in {+1,-1}", int(i))
            for i in np.flatnonzero(present & (values != 1) & (values != -1))]
    a = T.antipode
    both = present & present[a] & (np.arange(nv) < a)
    out += [Violation("antisymmetry", int(i)) for i in np.flatnonzero(both & (values[a] != -values))]
    if extra:
        out.append(Violation("extra labels", nv))
    return ValidationReport(tuple(out))


def _require_valid(T, labelling):
    report = validate_labelling(T, labelling)
    if not report.ok:
        raise InvalidLabelling(f"invalid labelling: {report.violations[:3]}")


def label_by_sign(T: SymmetricTriangulation, g, tie_tol: float = DEFAULT_TIE_TOL,
                  seed: int = 1, max_retries: int = DEFAULT_MAX_RETRIES):
    """Label each vertex by the sign of ``g`` there.

    ``g`` is evaluated only at the owning vertex of each antipodal pair and the
    partner gets the negated label, so the result is exactly antisymmetric.
    When some vertex lands within ``tie_tol`` of the zero set, the mesh is
    rotated by a seeded random rotation and evaluated again.

    Returns ``(mesh, labelling)``; ``mesh`` is ``T`` or a rotated copy of it.
    """
    if tie_tol <= 0:
        raise ValueError("tie_tol must be positive")
    g = as_field(g)
    rng = np.random.default_rng(seed)
    owners = np.flatnonzero(T.canonical)
    mesh, R = T, None
    for attempt in range(max_retries + 1):
        if attempt:
            R = random_rotation(rng)
            mesh = rotate_mesh(T, R)
        values = g.batch(mesh.vertices[owners])
        if np.all(np.isfinite(values)) and np.all(np.abs(values) > tie_tol):
            labels = np.empty(T.n_vertices, dtype=np.int64)
            labels[owners] = np.where(values > 0, 1, -1)
            labels[T.antipode[owners]] = -labels[owners]
            return mesh, Labelling(labels, tie_retries_used=attempt, rotation=R,
                                   mesh_meta=dict(T.meta))
    raise DegenerateField(
        f"field is within {tie_tol:g} of zero at a mesh vertex after {max_retries} rotations")


def random_labelling(T: SymmetricTriangulation, rng: np.random.Generator) -> Labelling:
    """Uniform random antisymmetric labelling: one coin flip per antipodal pair."""
    owners = np.flatnonzero(T.canonical)
    labels = np.empty(T.n_vertices, dtype=np.int64)
    labels[owners] = rng.choice(np.array([-1, 1]), size=len(owners))
    labels[T.antipode[owners]] = -labels[owners]
    return Labelling(labels, mesh_meta=dict(T.meta))


def eval_simplicial(T: SymmetricTriangulation, labelling, p: BarycentricPoint) -> float:
    lab = _labels_array(labelling)
    a, b, c = T.triangles[p.triangle]
    w0, w1, w2 = p.weights
    return float(w0 * lab[a] + w1 * lab[b] + w2 * lab[c])


def edge_is_mixed(T: SymmetricTriangulation, labelling) -> np.ndarray:
    lab = np.asarray(_labels_array(labelling))
    e = T.edges
    return lab[e[:, 0]] + lab[e[:, 1]] == 0


def mixed_edges(T: SymmetricTriangulation, labelling) -> np.ndarray:
    """Sorted ids of the edges whose endpoints carry opposite labels."""
    return np.flatnonzero(edge_is_mixed(T, labelling))


def triangle_mixed_edges(T: SymmetricTriangulation, labelling) -> np.ndarray:
    """``(F, 2)`` array of each triangle's two mixed edge ids, ``-1`` if none.

    Raises ``InvalidLabelling`` if some triangle has a number of mixed edges
    other than 0 or 2, which cannot happen with labels in {+1, -1}.
    """
    mixed = edge_is_mixed(T, labelling)
    te = T.tri_edges
    m = mixed[te]
    counts = m.sum(axis=1)
    if np.any((counts != 0) & (counts != 2)):
        raise InvalidLabelling("triangle with an odd number of mixed edges")
    out = np.full((T.n_triangles, 2), -1, dtype=np.int64)
    rows = np.flatnonzero(counts == 2)
    pick = te[rows][m[rows]].reshape(-1, 2)
    out[rows] = np.sort(pick, axis=1)
    return out


def find_seed_triangle(T: SymmetricTriangulation, labelling) -> int:
    """Smallest-index triangle whose labels are not all equal."""
    lab = np.asarray(_labels_array(labelling))
    tl = lab[T.triangles]
    mixed = np.flatnonzero((tl != tl[:, :1]).any(axis=1))
    if not mixed.size:
        raise InvalidLabelling("no mixed triangle; labelling cannot be antisymmetric")
    return int(mixed[0])


# ---------------------------------------------------------------------------
# JSON

def labelling_to_dict(labelling: Labelling) -> dict:
    R = labelling.rotation
    return {
        "labels": [int(v) for v in labelling.labels],
        "mesh_meta": dict(labelling.mesh_meta),
        "tie_retries_used": int(labelling.tie_retries_used),
        "rotation": None if R is None else [float(v) for v in np.asarray(R).reshape(-1)],
    }


def labelling_from_dict(data: dict) -> Labelling:
    try:
        R = data.get("rotation")
        return Labelling(
            np.asarray(data["labels"], dtype=np.int64),
            tie_retries_used=int(data.get("tie_retries_used", 0)),
            rotation=None if R is None else np.asarray(R, dtype=np.float64).reshape(3, 3),
            mesh_meta=dict(data.get("mesh_meta") or {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidLabelling(f"malformed labelling JSON: {exc}") from exc


def save_labelling(labelling: Labelling, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(labelling_to_dict(labelling), fh)


def load_labelling(path) -> Labelling:
    with open(path, encoding="utf-8") as fh:
        return labelling_from_dict(json.load(fh))
