"""Tracing the zero set of the piecewise-linear extension of a labelling.

Inside a triangle with a 2-1 label split, the extension vanishes on the chord
joining the midpoints of the two mixed edges. Chaining those chords across
shared mixed edges gives closed polygonal paths. For an antisymmetric
labelling of a symmetric triangulation there is always an odd number of them,
exactly one mapped onto itself by the antipodal map and the rest swapped in
pairs; :func:`trace_all` checks this every time it runs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NoShiftStructure, TheoremViolation
from .labelling import _labels_array, _require_valid, triangle_mixed_edges
from .sphere_mesh import SymmetricTriangulation

_WALK_ERRORS = {
    _kernels.WALK_DEAD_END: "mixed edge with a single incident triangle",
    _kernels.WALK_NOT_MIXED: "zero segment leads into a monochrome triangle",
    _kernels.WALK_REVISIT: "zero path re-enters a visited triangle",
}


@dataclass(frozen=True)
class ZeroSegment:
    triangle: int
    entry_edge: int
    exit_edge: int
    entry_midpoint: np.ndarray
    exit_midpoint: np.ndarray


@dataclass(frozen=True, eq=False)
class ZeroPath:
    """One closed component of the zero set.

    ``edges[k]`` is the mixed edge shared by ``triangles[k]`` and
    ``triangles[k + 1]`` (cyclically); ``midpoints[k]`` is its chord midpoint.
    """

    triangles: np.ndarray
    edges: np.ndarray
    edge_vertices: np.ndarray
    midpoints: np.ndarray
    invariant: bool

    def __len__(self):
        return len(self.triangles)


@dataclass(frozen=True)
class Certificate:
    """Outcome of the parity checks on a set of traced paths."""

    n_paths: int
    n_invariant: int
    pairing_ok: bool

    @property
    def odd_count(self) -> bool:
        return self.n_paths % 2 == 1

    @property
    def unique_invariant(self) -> bool:
        return self.n_invariant == 1

    @property
    def ok(self) -> bool:
        return self.odd_count and self.unique_invariant and self.pairing_ok


@dataclass(frozen=True)
class TraceResult:
    paths: tuple[ZeroPath, ...]
    invariant_index: int
    pairs: tuple[tuple[int, int], ...]
    certificate: Certificate

    @property
    def invariant_path(self) -> ZeroPath:
        return self.paths[self.invariant_index]


def zero_segment(T: SymmetricTriangulation, labelling, tri: int) -> ZeroSegment | None:
    """Zero chord of triangle ``tri``; ``None`` when its labels are all equal.

    With corners ``(a, b, c)`` and ``c`` the odd one out, the chord runs from
    the midpoint of ``ac`` to the midpoint of ``bc``.
    """
    lab = _labels_array(labelling)
    corners = [int(v) for v in T.triangles[tri]]
    values = [lab[v] for v in corners]
    if values[0] == values[1] == values[2]:
        return None
    k = next(i for i in range(3) if values[i] != values[(i + 1) % 3] and values[i] != values[(i + 2) % 3])
    odd = corners[k]
    majority = [corners[i] for i in range(3) if i != k]
    entry = T.edge_id(majority[0], odd)
    exit_ = T.edge_id(majority[1], odd)
    m = T.midpoints([entry, exit_])
    return ZeroSegment(int(tri), entry, exit_, m[0], m[1])


def _walk(T, labelling):
    _require_valid(T, labelling)
    tri_mixed = triangle_mixed_edges(T, labelling)
    tris, exits, starts, status = _kernels.walk_paths(tri_mixed, T.edge_tris)
    if status != _kernels.WALK_OK:
        raise TheoremViolation(_WALK_ERRORS[status])
    return tris, exits, starts


def _classify(T, exits, starts):
    """Invariant flags and antipodal pairs from the edge-to-path map."""
    n_paths = len(starts) - 1
    path_of_edge = np.full(T.n_edges, -1, dtype=np.int64)
    for i in range(n_paths):
        path_of_edge[exits[starts[i]:starts[i + 1]]] = i
    e_anti = T.edge_antipode
    invariant = np.zeros(n_paths, dtype=bool)
    partner = np.full(n_paths, -1, dtype=np.int64)
    pairing_ok = True
    for i in range(n_paths):
        edges = exits[starts[i]:starts[i + 1]]
        images = e_anti[edges]
        owners = np.unique(path_of_edge[images]) if np.all(images >= 0) else np.array([-1])
        if owners.size != 1 or owners[0] < 0:
            pairing_ok = False
        elif owners[0] == i:
            invariant[i] = True
        else:
            partner[i] = owners[0]
    for i in range(n_paths):
        j = partner[i]
        if invariant[i]:
            continue
        if j < 0 or partner[j] != i or (starts[i + 1] - starts[i]) != (starts[j + 1] - starts[j]):
            pairing_ok = False
    return invariant, partner, pairing_ok


def trace_all(T: SymmetricTriangulation, labelling, check: bool = True) -> TraceResult:
    """Trace every component of the zero set and certify the parity structure.

    Paths are listed by their smallest triangle index; each starts at that
    triangle and leaves it through its lower-numbered mixed edge. With
    ``check=True`` (the default) a failed certificate raises TheoremViolation.
    """
    tris, exits, starts = _walk(T, labelling)
    invariant, partner, pairing_ok = _classify(T, exits, starts)
    paths = []
    for i in range(len(starts) - 1):
        sl = slice(starts[i], starts[i + 1])
        edges = exits[sl].copy()
        paths.append(ZeroPath(
            triangles=tris[sl].copy(),
            edges=edges,
            edge_vertices=T.edges[edges],
            midpoints=T.midpoints(edges),
            invariant=bool(invariant[i]),
        ))
    cert = Certificate(len(paths), int(invariant.sum()), pairing_ok)
    if check and not cert.ok:
        raise TheoremViolation(
            f"zero set has {cert.n_paths} paths, {cert.n_invariant} invariant, "
            f"pairing {'ok' if pairing_ok else 'broken'}")
    inv = np.flatnonzero(invariant)
    pairs = tuple((i, int(partner[i])) for i in range(len(paths))
                  if not invariant[i] and 0 <= i < partner[i])
    return TraceResult(tuple(paths), int(inv[0]) if inv.size else -1, pairs, cert)


def is_invariant(T: SymmetricTriangulation, path: ZeroPath) -> bool:
    """Whether the path's mixed-edge set is mapped onto itself by the antipode."""
    edges = np.asarray(path.edges)
    return bool(np.array_equal(np.sort(T.edge_antipode[edges]), np.sort(edges)))


def antipodal_shift_index(T: SymmetricTriangulation, path: ZeroPath) -> int:
    """Half-length ``q`` such that edge ``k + q`` is the antipodal image of edge ``k``."""
    if not is_invariant(T, path):
        raise ValueError("antipodal shift is only defined for an invariant path")
    edges = np.asarray(path.edges)
    n = len(edges)
    if n % 2:
        raise NoShiftStructure(f"invariant path has odd length {n}")
    q = n // 2
    if not np.array_equal(np.roll(edges, -q), T.edge_antipode[edges]):
        raise NoShiftStructure("antipodal map does not act on the path as a half-turn")
    return q


# ---------------------------------------------------------------------------
# independent check of the partition

class _DisjointSet:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def union_find_partition(T: SymmetricTriangulation, labelling) -> set[frozenset[int]]:
    """Mixed triangles grouped by union-find across shared mixed edges.

    Works from the raw triangle list only, so it shares no adjacency code
    with the tracer.
    """
    lab = np.asarray(_labels_array(labelling))
    by_edge: dict[tuple[int, int], list[int]] = {}
    mixed_tris = []
    for t, (a, b, c) in enumerate(T.triangles.tolist()):
        la, lb, lc = lab[a], lab[b], lab[c]
        if la == lb == lc:
            continue
        mixed_tris.append(t)
        for u, v, lu, lv in ((a, b, la, lb), (b, c, lb, lc), (c, a, lc, la)):
            if lu != lv:
                by_edge.setdefault((min(u, v), max(u, v)), []).append(t)
    dsu = _DisjointSet(mixed_tris)
    for owners in by_edge.values():
        for t in owners[1:]:
            dsu.union(owners[0], t)
    groups: dict[int, set[int]] = {}
    for t in mixed_tris:
        groups.setdefault(dsu.find(t), set()).add(t)
    return {frozenset(g) for g in groups.values()}


def trace_partition(result: TraceResult) -> set[frozenset[int]]:
    return {frozenset(int(t) for t in p.triangles) for p in result.paths}


# ---------------------------------------------------------------------------
# JSON

def paths_to_dict(result: TraceResult) -> dict:
    return {
        "paths": [
            {
                "triangles": [int(t) for t in p.triangles],
                "edges": [[int(u), int(v)] for u, v in p.edge_vertices],
                "midpoints": p.midpoints.tolist(),
                "invariant": p.invariant,
            }
            for p in result.paths
        ],
        "invariant_index": result.invariant_index,
        "pairs": [list(p) for p in result.pairs],
    }


def save_paths(result: TraceResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(paths_to_dict(result), fh)


# ---------------------------------------------------------------------------
# randomized certification

FUZZ_CHECKS = ("odd_m", "unique_invariant", "antipodal_pairing", "oracle_partition")


@dataclass(frozen=True)
class FuzzReport:
    levels: int
    runs: int
    seed: int
    passed: dict
    failed_runs: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.failed_runs

    def lines(self) -> list[str]:
        out = [f"runs={self.runs} levels={self.levels} seed={self.seed}"]
        out += [f"{name}: {self.passed[name]}/{self.runs}" for name in FUZZ_CHECKS]
        out.append("PASS" if self.ok else f"FAIL runs={list(self.failed_runs[:10])}")
        return out


def check_random_labelling(T: SymmetricTriangulation, rng: np.random.Generator) -> tuple[bool, ...]:
    """Trace one random antisymmetric labelling; one flag per entry of FUZZ_CHECKS."""
    from .labelling import random_labelling

    lab = random_labelling(T, rng)
    try:
        result = trace_all(T, lab, check=False)
    except TheoremViolation:
        return (False,) * len(FUZZ_CHECKS)
    cert = result.certificate
    partition = trace_partition(result) == union_find_partition(T, lab)
    return cert.odd_count, cert.unique_invariant, cert.pairing_ok, partition


def _fuzz_chunk(args):
    levels, seeds = args
    from .sphere_mesh import build_refined

    T = build_refined(levels)
    return [check_random_labelling(T, np.random.default_rng(s)) for s in seeds]


def fuzz(levels: int, runs: int, seed: int, workers: int = 1) -> FuzzReport:
    """Trace ``runs`` random labellings of the level-``levels`` mesh.

    Run ``k`` draws from the ``k``-th child of ``SeedSequence(seed)``, so the
    report does not depend on ``workers``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(runs)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [seeds[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_fuzz_chunk, [(levels, c) for c in chunks]))
        flags = [None] * runs
        for w, part in enumerate(parts):
            flags[w::workers] = part
    else:
        flags = _fuzz_chunk((levels, seeds))
    passed = {name: sum(int(f[k]) for f in flags) for k, name in enumerate(FUZZ_CHECKS)}
    failed = tuple(i for i, f in enumerate(flags) if not all(f))
    return FuzzReport(levels, runs, seed, passed, failed)
