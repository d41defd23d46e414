"""Equal-value diameters of a continuous function on the sphere.

Pipeline: ``f`` -> odd part ``g(x) = f(x) - f(-x)`` -> sign labelling of a
refined symmetric mesh -> the antipodally invariant zero path -> a closed
curve on which ``f(x) ~= f(-x)`` -> a search along that curve for two points
at a prescribed angle with equal ``f`` values.

Curves are handled in *sample coordinates*: ``s`` in ``[0, 2N)`` with integer
``s`` at the stored samples and ``s + N`` the antipode of ``s``. Integer grid
rows stay exact, so bracketing never depends on rounding ``u * N``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .errors import (LevelTooLarge, NoConvergence, NotOdd, PairSearchFailed,
                     ROutOfRange, ThetaOutOfRange)
from .labelling import ScalarField, as_field, label_by_sign
from .sphere_mesh import build_refined, max_level
from .zero_paths import antipodal_shift_index, trace_all

ODD_CHECK_TOL = 1e-9
ODD_CHECK_POINTS = 64
_BISECT_ITERS = 200


@dataclass(frozen=True)
class SolverConfig:
    start_level: int = 4
    max_level: int = 8
    residual_tol: float = 1e-3
    pair_tol: float = 1e-3
    samples_per_segment: int = 8
    seed: int = 1
    tie_tol: float = 1e-9
    max_retries: int = 16
    # False keeps the raw chord midpoints of the traced path as curve knots
    refine_roots: bool = True

    def __post_init__(self):
        if self.start_level < 0 or self.start_level > self.max_level:
            raise ValueError("need 0 <= start_level <= max_level")
        if self.residual_tol <= 0 or self.pair_tol <= 0 or self.tie_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be >= 1")


@dataclass(frozen=True, eq=False)
class InvariantCurve:
    """Closed curve of ``2N`` unit vectors with ``points[i + N] == -points[i]``."""

    level: int
    points: np.ndarray
    max_abs_g: float
    path_length: int

    @property
    def half(self) -> int:
        return len(self.points) // 2

    def point_at(self, s) -> np.ndarray:
        """Point at sample coordinate ``s`` (scalar or array), projected to the sphere."""
        s = np.asarray(s, dtype=np.float64)
        m = len(self.points)
        base = np.floor(s)
        frac = (s - base)[..., None]
        i = base.astype(np.int64) % m
        p = (1.0 - frac) * self.points[i] + frac * self.points[(i + 1) % m]
        return p / np.linalg.norm(p, axis=-1, keepdims=True)


@dataclass(frozen=True)
class DiameterQuadruple:
    x: tuple[float, float, float]
    y: tuple[float, float, float]
    values: tuple[float, float, float, float]
    theta: float
    angle: float
    chord: float
    value_spread: float
    angle_residual: float
    level: int = -1
    curve_samples: int = 0
    u1: float = float("nan")
    u2: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "chord": self.chord,
            "x": list(self.x),
            "y": list(self.y),
            "values": list(self.values),
            "value_spread": self.value_spread,
            "angle_residual": self.angle_residual,
            "level": self.level,
            "curve_samples": self.curve_samples,
        }


# ---------------------------------------------------------------------------
# chord / angle

def chord_to_angle(r: float) -> float:
    if not 0.0 < r < 2.0:
        raise ROutOfRange(f"chord length must lie in (0, 2), got {r}")
    return 2.0 * math.asin(r / 2.0)


def angle_to_chord(theta: float) -> float:
    if not 0.0 < theta < math.pi:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta}")
    return 2.0 * math.sin(theta / 2.0)


def _angles(a, b):
    cross = np.cross(a, b)
    return np.arctan2(np.linalg.norm(cross, axis=-1), np.sum(a * b, axis=-1))


# ---------------------------------------------------------------------------
# odd part and the invariant curve

def odd_part(f) -> ScalarField:
    """``g(x) = f(x) - f(-x)``."""
    f = as_field(f)
    fn = f.fn
    return ScalarField(lambda p: fn(p) - fn(-p), vectorized=f.vectorized,
                       name=f"odd({f.name})")


def check_odd(g, seed: int = 1, tol: float = ODD_CHECK_TOL) -> None:
    g = as_field(g)
    rng = np.random.default_rng(seed)
    p = rng.standard_normal((ODD_CHECK_POINTS, 3))
    p /= np.linalg.norm(p, axis=1)[:, None]
    err = np.abs(g.batch(p) + g.batch(-p))
    if err.max() > tol:
        raise NotOdd(f"g(-x) != -g(x) at a sample point (|g(x)+g(-x)| = {err.max():.3g})")


def _unit(p):
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


def _edge_roots(mesh, labels, edge_vertices, g):
    """Zero of ``g`` on the great arc of each mixed edge, by batched bisection.

    Endpoint labels give the sign of ``g``; the returned point is the arc
    point closest to the sign change found in ``_BISECT_ITERS`` halvings.
    """
    pu = mesh.vertices[edge_vertices[:, 0]]
    pv = mesh.vertices[edge_vertices[:, 1]]
    su = labels[edge_vertices[:, 0]].astype(np.float64)
    lo = np.zeros(len(pu))
    hi = np.ones(len(pu))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        val = g.batch(_unit((1.0 - mid)[:, None] * pu + mid[:, None] * pv)) * su
        same = val > 0
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    t = 0.5 * (lo + hi)
    return _unit((1.0 - t)[:, None] * pu + t[:, None] * pv)


def _resample(knots, s):
    """``s`` samples per segment along the closed knot cycle (first half only)."""
    q = len(knots)
    nxt = np.vstack([knots[1:], -knots[:1]])
    frac = (np.arange(s) / s)[None, :, None]
    pts = (1.0 - frac) * knots[:, None, :] + frac * nxt[:, None, :]
    return _unit(pts.reshape(q * s, 3))


def curve_from_path(mesh, labelling, path, g, cfg: SolverConfig, level: int = -1) -> InvariantCurve:
    g = as_field(g)
    q = antipodal_shift_index(mesh, path)
    ev = np.asarray(path.edge_vertices)[:q]
    if cfg.refine_roots:
        knots = _edge_roots(mesh, labelling.labels, ev, g)
    else:
        knots = _unit(np.asarray(path.midpoints)[:q])
    first = _resample(knots, cfg.samples_per_segment)
    points = np.vstack([first, -first])
    points.flags.writeable = False
    max_abs_g = float(np.abs(g.batch(points)).max())
    return InvariantCurve(level, points, max_abs_g, 2 * q)


def invariant_curve(g, cfg: SolverConfig | None = None) -> InvariantCurve:
    """Invariant approximate zero curve of an odd field.

    Refines from ``cfg.start_level`` until the largest ``|g|`` over the curve
    samples is within ``cfg.residual_tol``.
    """
    cfg = cfg or SolverConfig()
    g = as_field(g)
    check_odd(g, cfg.seed)
    cap = min(cfg.max_level, max_level())
    if cfg.start_level > cap:
        raise LevelTooLarge(f"start_level {cfg.start_level} exceeds the refinement cap {cap}")
    last = None
    for level in range(cfg.start_level, cap + 1):
        mesh, lab = label_by_sign(build_refined(level, cap=cap), g, cfg.tie_tol,
                                  cfg.seed, cfg.max_retries)
        result = trace_all(mesh, lab)
        last = curve_from_path(mesh, lab, result.invariant_path, g, cfg, level)
        if last.max_abs_g <= cfg.residual_tol:
            return last
    raise NoConvergence(f"max |g| on the curve is {last.max_abs_g:.3g} at level {cap}, "
                        f"above residual_tol {cfg.residual_tol:g}")


# ---------------------------------------------------------------------------
# pair search

class _PairSearch:
    def __init__(self, f: ScalarField, curve: InvariantCurve, theta: float, cfg: SolverConfig):
        self.f = f
        self.curve = curve
        self.theta = theta
        self.cfg = cfg
        self.N = curve.half
        self.M = len(curve.points)

    def r(self, s):
        return self.f.batch(self.curve.point_at(s))

    def partner(self, s1):
        """Smallest ``s2`` in ``(s1, s1 + N]`` where the angle to ``s1`` reaches theta."""
        s1 = np.atleast_1d(np.asarray(s1, dtype=np.float64))
        x = self.curve.point_at(s1)
        base = np.floor(s1)
        start = base.astype(np.int64) % self.M
        j = _kernels.first_crossings(self.curve.points, np.ascontiguousarray(x), start, self.theta)
        found = j > 0
        hi = np.where(found, base + j, s1 + self.N)
        lo = np.where(found, np.where(j > 1, base + j - 1, s1), base + self.N)
        lo = np.maximum(lo, s1)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            moved = (mid > lo) & (mid < hi)
            if not moved.any():
                break
            below = _angles(x, self.curve.point_at(mid)) < self.theta
            lo = np.where(moved & below, mid, lo)
            hi = np.where(moved & ~below, mid, hi)
        # whichever end of the final bracket is closer in angle
        a_lo = np.abs(_angles(x, self.curve.point_at(lo)) - self.theta)
        a_hi = np.abs(_angles(x, self.curve.point_at(hi)) - self.theta)
        return np.where(a_lo < a_hi, lo, hi)

    def phi(self, s1):
        s2 = self.partner(s1)
        return self.r(s1) - self.r(s2), s2

    def quadruple(self, s1, s2) -> DiameterQuadruple:
        x = self.curve.point_at(float(s1))
        y = self.curve.point_at(float(s2))
        vals = self.f.batch(np.vstack([x, -x, y, -y]))
        angle = float(_angles(x, y))
        return DiameterQuadruple(
            x=tuple(float(v) for v in x),
            y=tuple(float(v) for v in y),
            values=tuple(float(v) for v in vals),
            theta=self.theta,
            angle=angle,
            chord=float(np.linalg.norm(x - y)),
            value_spread=float(vals.max() - vals.min()),
            angle_residual=abs(angle - self.theta),
            level=self.curve.level,
            curve_samples=self.M,
            u1=float(s1) / self.N,
            u2=float(s2) / self.N,
        )

    def accepted(self, q: DiameterQuadruple) -> bool:
        return q.value_spread <= self.cfg.pair_tol and q.angle_residual <= self.cfg.pair_tol

    def refine(self, a, b, pa):
        """Bisect the sign change of phi on ``[a, b]`` (``pa`` = phi(a))."""
        if pa == 0.0:
            return self.quadruple(a, self.partner(a)[0])
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (a + b)
            if not a < mid < b:
                break
            pm, s2 = self.phi(mid)
            if pm[0] == 0.0:
                return self.quadruple(mid, s2[0])
            if (pm[0] > 0) == (pa > 0):
                a, pa = mid, pm[0]
            else:
                b = mid
        s = a if abs(pa) <= abs(self.phi(b)[0][0]) else b
        return self.quadruple(s, self.partner(s)[0])

    def scan(self, rows, max_tries=32):
        """First accepted root of phi between consecutive integer rows."""
        rows = np.asarray(rows, dtype=np.float64)
        phis, _ = self.phi(rows)
        tries = 0
        for k in range(len(rows)):
            p0 = phis[k]
            if k + 1 < len(rows):
                p1 = phis[k + 1]
                if not (p0 == 0.0 or (p0 > 0) != (p1 > 0)):
                    continue
                q = self.refine(rows[k], rows[k + 1], p0)
            elif p0 == 0.0:
                q = self.refine(rows[k], rows[k], p0)
            else:
                continue
            if self.accepted(q):
                return q
            tries += 1
            if tries >= max_tries:
                break
        return None


def find_equal_pair(f, curve: InvariantCurve, theta: float,
                    cfg: SolverConfig | None = None) -> DiameterQuadruple:
    """Two curve points at angle ``theta`` whose four antipodal values agree.

    ``r(s) = f(point(s))`` is nearly ``N``-periodic on the curve. Between a
    maximiser and a minimiser of ``r`` the difference
    ``phi(s1) = r(s1) - r(s2(s1))`` changes sign, where ``s2(s1)`` is the
    first point after ``s1`` at angle ``theta``. Both arcs (max -> min and
    min -> max) are searched; when both yield a solution the one with the
    larger common value is returned. If neither arc produces an accepted
    root, every grid row is scanned before giving up.
    """
    cfg = cfg or SolverConfig()
    if not 0.0 < theta < math.pi:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta}")
    f = as_field(f)
    N = curve.half
    if N < 1:
        raise PairSearchFailed("curve has no samples")
    search = _PairSearch(f, curve, theta, cfg)
    r_grid = f.batch(curve.points[:N])
    i_max, i_min = int(np.argmax(r_grid)), int(np.argmin(r_grid))
    lo, hi = min(i_max, i_min), max(i_max, i_min)
    arcs = [np.arange(lo, hi + 1), np.arange(hi, lo + N + 1)]

    found = [q for q in (search.scan(rows) for rows in arcs) if q is not None]
    if not found:
        q = search.scan(np.arange(0, N + 1), max_tries=N)
        if q is None:
            rows = np.arange(0, N, dtype=np.float64)
            phis, s2 = search.phi(rows)
            k = int(np.argmin(np.abs(phis)))
            q = search.quadruple(rows[k], s2[k])
            if not search.accepted(q):
                raise PairSearchFailed(
                    f"no equal-value pair at angle {theta:.6g} on a {2 * N}-sample curve "
                    f"(best spread {q.value_spread:.3g}); refine the curve")
        found = [q]
    return max(found, key=lambda q: float(np.mean(q.values)))


# ---------------------------------------------------------------------------
# end-to-end solvers

def solve(f, theta: float, cfg: SolverConfig | None = None) -> DiameterQuadruple:
    cfg = cfg or SolverConfig()
    if not 0.0 < theta < math.pi:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta}")
    f = as_field(f)
    curve = invariant_curve(odd_part(f), cfg)
    return find_equal_pair(f, curve, theta, cfg)


def dyson(f, cfg: SolverConfig | None = None) -> DiameterQuadruple:
    """Two orthogonal diameters with (approximately) equal values at all four ends."""
    return solve(f, math.pi / 2, cfg)


def livesay(f, r: float, cfg: SolverConfig | None = None) -> DiameterQuadruple:
    """Like :func:`dyson` with the two diameters' endpoints ``x, y`` at chord distance ``r``."""
    cfg = cfg or SolverConfig()
    q = solve(f, chord_to_angle(r), cfg)
    if abs(q.chord - r) > cfg.pair_tol:
        raise PairSearchFailed(f"chord {q.chord:.6g} misses the target {r:.6g}")
    return q


def save_result(q: DiameterQuadruple, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(q.to_dict(), fh)


def config_dict(cfg: SolverConfig) -> dict:
    return asdict(cfg)
