"""Spiral geometry of forward images and their crossings with the
stable-manifold traces.

The image of a curve that approaches q_i, pushed once through the tube
toward branch j, accumulates on the line W^u_j = { q_j + s t_u }.  All
spiral analysis happens in the plane slice through q_j orthogonal to
t_u.  Projecting onto that slice removes the t_u component of the image
exactly, so the projected curve is smooth even where the angular offset
delta wraps, and it limits onto the slice origin q_j.  In slice
coordinates the projected image of exit coordinates (u1, u2) is the
fixed invertible linear image of (u1, u2); in particular the slice
curve of a radial seed is a logarithmic spiral, and it crosses the
projected W^s_j trace exactly where (u1, u2) is parallel to the
in-plane part of the alignment vector k = A_j^{-1} t_s.

Crossing search therefore runs one-dimensionally along the curve
(bracket the signed slice distance, refine by secant), recovers the
angular degree of freedom in closed form from the t_u-coordinate
matching, and finishes with a two-dimensional Newton polish on the
Fix-plane seed so the three-dimensional image lands on the W^s_j line
to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import (DomainError, InsufficientResolution, NoVisits,
                     RootNotConverged, StableManifoldHit, TurnUnresolvable)
from .geometry import (ModelParams, SigmaPoint, TWO_PI, circle_dist,
                       wrap_angle, wrap_pm)
from .solvers import newton2d, secant, sign_change_brackets
from .transitions import raw_passage, return_map

__all__ = [
    "SliceFrame",
    "slice_frame",
    "radial_seed",
    "SpiralSamples",
    "image_spiral",
    "SpiralReport",
    "classify_spiral",
    "IntersectionPoint",
    "find_spiral_line_intersections",
    "resolution_floor",
]


# ======================================================================
# the analysis slice
# ======================================================================

@dataclass(frozen=True)
class SliceFrame:
    """Orthonormal frame of the plane through q_j normal to t_u.

    ``line_dir`` is the unit slice direction of the projected W^s_j
    trace; the signed slice distance to that trace is the cross product
    of ``line_dir`` with the slice coordinates.
    """

    branch: int
    origin: np.ndarray
    normal: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    line_dir: np.ndarray

    def to_slice(self, p: SigmaPoint) -> Tuple[float, float]:
        va = p.a - self.origin[0]
        vb = p.b - self.origin[1]
        vc = p.c - self.origin[2]
        x = va * self.e1[0] + vb * self.e1[1] + vc * self.e1[2]
        y = va * self.e2[0] + vb * self.e2[1] + vc * self.e2[2]
        return x, y

    def line_distance(self, x, y):
        """Signed slice distance to the projected W^s trace."""
        return self.line_dir[0] * y - self.line_dir[1] * x


def slice_frame(j, mp: ModelParams) -> SliceFrame:
    """Build the analysis slice for branch j."""
    b = mp.branch(j)
    t_u = np.asarray(b.t_u, dtype=float)
    norm = np.linalg.norm(t_u)
    if norm == 0.0:
        raise DomainError(f"branch {j} has a degenerate unstable direction")
    n_hat = t_u / norm
    w = np.array([1.0, 0.0, 0.0])
    if abs(n_hat[0]) > 0.9:
        w = np.array([0.0, 1.0, 0.0])
    e1 = w - (w @ n_hat) * n_hat
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n_hat, e1)
    t_s = np.asarray(b.t_s, dtype=float)
    d = np.array([t_s @ e1, t_s @ e2])
    dn = np.linalg.norm(d)
    if dn == 0.0:
        raise DomainError(
            f"branch {j} stable trace is normal to the slice; "
            "quasi-transversality fails")
    origin = np.array([float(b.q_sigma[0]), float(b.q_sigma[1]), 0.0])
    return SliceFrame(branch=j, origin=origin,
                      normal=n_hat, e1=e1, e2=e2, line_dir=d / dn)


# ======================================================================
# seed curves
# ======================================================================

def radial_seed(i, mp: ModelParams, theta=0.0, rho_start=None
                ) -> Callable[[float], SigmaPoint]:
    """Fix-plane ray toward q_i with exponentially shrinking distance.

    seed(s) = q_i + rho_start * exp(-s) * (cos theta, sin theta) in the
    c = 0 plane.  With this parameterization the unwrapped exit angle
    grows linearly in s at rate omega/alpha, which makes uniform s-grids
    uniformly resolve the spiral.
    """
    b = mp.branch(i)
    if rho_start is None:
        rho_start = 0.999 * min(mp.c_radius, mp.v_radius)
    ct, st = np.cos(theta), np.sin(theta)

    def seed(s):
        rho = rho_start * np.exp(-s)
        return SigmaPoint(a=b.q_sigma[0] + rho * ct,
                          b=b.q_sigma[1] + rho * st,
                          c=0.0, branch_hint=i)

    seed.rho_start = float(rho_start)
    seed.theta = float(theta)
    return seed


def resolution_floor(mp: ModelParams) -> float:
    """Radius below which turns are declared unresolvable."""
    return 100.0 * np.finfo(float).eps * mp.section_radius


# ======================================================================
# sampled spirals
# ======================================================================

@dataclass
class SpiralSamples:
    """A sampled planar curve in polar decomposition.

    ``params`` is the strictly increasing sample parameter, ``points``
    the slice coordinates (n, 2), and ``radii``/``angles`` the polar
    decomposition about the slice origin, with ``angles`` a continuous
    unwrapped lift.  Only samples whose gated passage lands in branch
    ``j`` are retained; the lift is computed on the full smooth curve
    before restriction, so it stays a valid continuous-lift restriction
    across the retained arcs.
    """

    params: np.ndarray
    points: np.ndarray
    radii: np.ndarray
    angles: np.ndarray
    i: Optional[int] = None
    j: Optional[int] = None

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.params.ndim != 1:
            raise ValueError("params must be one-dimensional")
        n = self.params.size
        if self.points.shape != (n, 2):
            raise ValueError("points must have shape (n, 2)")
        if self.radii.shape != (n,) or self.angles.shape != (n,):
            raise ValueError("polar arrays must match params length")
        if n >= 2 and not np.all(np.diff(self.params) > 0):
            raise ValueError("params must be strictly increasing")
        if n and not np.all(self.radii > 0):
            raise ValueError("radii must be positive")

    @property
    def n_samples(self) -> int:
        return int(self.params.size)


def _full_curve(seed_curve, i, j, mp, s_grid, frame):
    """Evaluate the ungated slice curve on a grid.

    Returns slice coordinates, the unwrapped slice angle of the full
    curve, and the per-sample gate mask for landing in branch j.  The
    grid is truncated at the first stable-manifold hit, if any occurs
    past the first sample.
    """
    b_in = mp.branch(i)
    xs, ys, mask = [], [], []
    kept = 0
    for s in s_grid:
        p = seed_curve(s)
        try:
            raw = raw_passage(p, i, j, mp)
        except StableManifoldHit:
            if kept == 0:
                raise
            break
        x, y = frame.to_slice(raw.image)
        xs.append(float(x))
        ys.append(float(y))
        est = raw.entry
        ok = (est.r_u <= mp.c_radius
              and circle_dist(est.phi_s_raw, b_in.phi_u_anchor) <= mp.c_radius
              and np.hypot(raw.u1, raw.u2) <= mp.c_radius
              and abs(raw.delta) <= mp.c_radius
              and raw.image.dist(mp.branch(j).q_point) <= mp.v_radius)
        mask.append(bool(ok))
        kept += 1
    xs = np.array(xs)
    ys = np.array(ys)
    angles = np.unwrap(np.arctan2(ys, xs))
    steps = np.abs(np.diff(angles))
    if steps.size and steps.max() > 0.95 * np.pi:
        raise InsufficientResolution(
            "slice angle steps exceed the unwrap limit; increase n_samples")
    return xs, ys, angles, np.array(mask, dtype=bool), s_grid[:kept]


def image_spiral(seed_curve, i, j, mp: ModelParams, s_max,
                 n_samples=None) -> SpiralSamples:
    """Push a seed curve once through the tube and sample its slice spiral.

    Parameters
    ----------
    seed_curve : callable
        s -> SigmaPoint, with distance to q_i decreasing in s (see
        ``radial_seed``).
    i, j : int
        Start branch and landing branch.
    s_max : float
        Parameter range [0, s_max].
    n_samples : int, optional
        Grid size; the default resolves the exponential radial seed at
        64 samples per expected turn.

    Raises
    ------
    NoVisits
        If no sample's gated passage lands in C_j^out.
    StableManifoldHit
        If the seed curve starts on the stable trace.
    InsufficientResolution
        If the grid is too coarse to unwrap the slice angle.
    """
    if s_max <= 0:
        raise DomainError("s_max must be positive")
    if n_samples is None:
        turns = s_max * mp.omega / (mp.alpha * TWO_PI)
        n_samples = max(512, int(64 * turns) + 2)
    frame = slice_frame(j, mp)
    s_grid = np.linspace(0.0, float(s_max), int(n_samples))
    xs, ys, angles, mask, s_used = _full_curve(
        seed_curve, i, j, mp, s_grid, frame)
    if not mask.any():
        raise NoVisits(
            f"no sample of the seed curve lands in C_{j}^out within s_max")
    pts = np.column_stack([xs[mask], ys[mask]])
    return SpiralSamples(params=s_used[mask], points=pts,
                         radii=np.hypot(xs[mask], ys[mask]),
                         angles=angles[mask], i=i, j=j)


# ======================================================================
# spiral classification
# ======================================================================

@dataclass
class SpiralReport:
    """Verdict on the three spiral conditions.

    condition1: the radius is pinched between two monotonically
    decreasing per-turn envelopes (witnessed by the envelope sequences).
    condition2: the angle is strictly monotone on a terminal subinterval
    spanning at least two turns (witnessed by the interval).
    condition3: the total angle exceeds the threshold (witnessed by the
    maximum attained).
    """

    condition1: bool
    envelope_bins: List[int]
    upper_envelope: List[float]
    lower_envelope: List[float]
    condition2: bool
    monotone_interval: Tuple[float, float]
    condition3: bool
    max_angle: float
    threshold: float
    turns_resolved: int

    @property
    def all_conditions(self) -> bool:
        return self.condition1 and self.condition2 and self.condition3


def classify_spiral(sp: SpiralSamples, phi_threshold=6 * np.pi
                    ) -> SpiralReport:
    """Evaluate the three spiral conditions on a sampled curve."""
    n = sp.n_samples
    if n < 8:
        raise InsufficientResolution(
            f"{n} samples are too few to classify a spiral")
    phi = sp.angles - sp.angles[0]
    direction = 1.0 if phi[-1] >= 0 else -1.0
    u = phi * direction
    span = float(np.max(np.abs(phi)))

    bins = np.floor(u / TWO_PI).astype(int)
    order = np.unique(bins)
    upper = [float(sp.radii[bins == b].max()) for b in order]
    lower = [float(sp.radii[bins == b].min()) for b in order]
    cond1 = all(upper[a + 1] < upper[a] for a in range(len(upper) - 1)) \
        and all(lower[a + 1] < lower[a] for a in range(len(lower) - 1))

    d = np.diff(u)
    k_star = n - 1
    while k_star > 0 and d[k_star - 1] > 0:
        k_star -= 1
    suffix_span = u[-1] - u[k_star]
    cond2 = suffix_span >= 2 * TWO_PI
    interval = (float(sp.params[k_star]), float(sp.params[-1]))

    cond3 = span >= phi_threshold

    return SpiralReport(condition1=bool(cond1),
                        envelope_bins=[int(b) for b in order],
                        upper_envelope=upper, lower_envelope=lower,
                        condition2=bool(cond2), monotone_interval=interval,
                        condition3=bool(cond3), max_angle=span,
                        threshold=float(phi_threshold),
                        turns_resolved=int(np.floor(u.max() / TWO_PI)))


# ======================================================================
# crossings with the stable trace
# ======================================================================

@dataclass
class IntersectionPoint:
    """One transversal crossing of the image sheet with W^s_j.

    ``location`` is the three-dimensional section point on the line,
    ``seed_point`` its Fix-plane preimage (the pull-back used by the
    homoclinic search), ``turn_index`` the absolute winding of the
    generating passage, and ``pair_slot`` which of the two crossings in
    that turn this is ("first" = larger radius).  ``s_value`` is the
    parameter of the generating radial family at the crossing.
    """

    location: SigmaPoint
    turn_index: int
    pair_slot: str
    s_value: float
    seed_point: SigmaPoint
    seed_rho: float
    seed_theta: float
    residual: float
    transversality_margin: float
    mu: float
    delta: float


def _perp_basis(t_s):
    """Two orthonormal vectors spanning the plane orthogonal to t_s."""
    t = np.asarray(t_s, dtype=float)
    t = t / np.linalg.norm(t)
    w = np.array([1.0, 0.0, 0.0])
    if abs(t[0]) > 0.9:
        w = np.array([0.0, 1.0, 0.0])
    w1 = w - (w @ t) * t
    w1 /= np.linalg.norm(w1)
    w2 = np.cross(t, w1)
    return w1, w2


def _fix_seed(i, mp, a, b):
    return SigmaPoint(a=a, b=b, c=0.0, branch_hint=i)


def _line_residual(i, j, mp, w1, w2):
    """Two-component residual of the image against the W^s_j line."""
    qs = mp.branch(j).q_sigma

    def func(x):
        try:
            raw = raw_passage(_fix_seed(i, mp, x[0], x[1]), i, j, mp)
        except (StableManifoldHit, DomainError):
            return None
        va = raw.image.a - qs[0]
        vb = raw.image.b - qs[1]
        vc = raw.image.c
        return np.array([va * w1[0] + vb * w1[1] + vc * w1[2],
                         va * w2[0] + vb * w2[1] + vc * w2[2]])

    return func


def _transversality_margin(i, j, mp, a, b):
    """Angle between the image-sheet tangent plane and the W^s_j line."""
    bj = mp.branch(j)
    t_hat = np.asarray(bj.t_s, dtype=float)
    t_hat = t_hat / np.linalg.norm(t_hat)
    q = mp.branch(i).q_sigma
    rho = np.hypot(a - q[0], b - q[1])
    h = 1e-7 * max(rho, 1e-3)

    def img(aa, bb):
        raw = raw_passage(_fix_seed(i, mp, aa, bb), i, j, mp)
        return np.array([raw.image.a, raw.image.b, raw.image.c])

    ta = (img(a + h, b) - img(a - h, b)) / (2 * h)
    tb = (img(a, b + h) - img(a, b - h)) / (2 * h)
    nrm = np.cross(ta, tb)
    nn = np.linalg.norm(nrm)
    if nn == 0.0:
        return 0.0
    return float(np.arcsin(min(1.0, abs(nrm @ t_hat) / nn)))


def find_spiral_line_intersections(i, j, turn_range, mp: ModelParams,
                                   seed_theta=0.0, refine_tol=1e-12
                                   ) -> List[IntersectionPoint]:
    """Enumerate the two crossings with W^s_j in each requested turn.

    Parameters
    ----------
    i, j : int
        Start branch (seed disk around q_i) and target branch.
    turn_range : (m_lo, m_hi)
        Inclusive window of absolute winding numbers.
    seed_theta : float
        Direction of the generating radial family (irrelevant for the
        affine model, a seeding aid under perturbations).

    Raises
    ------
    TurnUnresolvable
        If a requested turn lies below the numeric radius floor or its
        crossings fail the tube gates.
    """
    m_lo, m_hi = int(turn_range[0]), int(turn_range[1])
    if m_lo > m_hi:
        raise DomainError("empty turn range")
    b_in = mp.branch(i)
    b_out = mp.branch(j)
    frame = slice_frame(j, mp)
    k = b_out.k_align
    ell2 = b_out.k_perp ** 2
    w1, w2 = _perp_basis(b_out.t_s)
    residual2 = _line_residual(i, j, mp, w1, w2)
    floor = resolution_floor(mp)

    seed = radial_seed(i, mp, theta=seed_theta)
    rho_start = seed.rho_start
    # Conservative radius needed to cover the band past m_hi, from the
    # closed-form crossing-radius ladder of the affine model.
    barrier = max(floor, float(mp.stable_tol))
    rho_need = mp.section_radius * np.exp(
        -mp.alpha * (b_out.beta + np.pi * (2 * m_hi + 3)
                     - b_in.phi_u_anchor) / mp.omega)
    if rho_need < barrier:
        raise TurnUnresolvable(
            f"turn {m_hi} needs radius {rho_need:.3g} below the "
            f"resolution barrier {barrier:.3g}")
    s_max = float(np.log(rho_start / max(rho_need, barrier)) + 0.25)
    n = max(512, int(64 * s_max * mp.omega / (mp.alpha * TWO_PI)) + 2)
    s_grid = np.linspace(0.0, s_max, n)

    cache = {}

    def slice_dist(s):
        if s not in cache:
            try:
                raw = raw_passage(seed(s), i, j, mp)
            except StableManifoldHit:
                cache[s] = (None, None)
                return None
            x, y = frame.to_slice(raw.image)
            cache[s] = (float(frame.line_distance(x, y)), raw)
        return cache[s][0]

    hs = [slice_dist(s) for s in s_grid]
    found = {}
    for a_idx in sign_change_brackets(s_grid, hs):
        s0, s1 = s_grid[a_idx], s_grid[a_idx + 1]
        try:
            s_star, _ = secant(slice_dist, s0, s1, tol=refine_tol,
                               f0=hs[a_idx], f1=hs[a_idx + 1])
        except RootNotConverged:
            continue
        try:
            raw = cache[s_star][1] if s_star in cache \
                else raw_passage(seed(s_star), i, j, mp)
        except StableManifoldHit:
            continue
        if raw is None:
            continue
        mu = (raw.u1 * k[0] + raw.u2 * k[1]) / ell2
        delta_t = mu * k[2]
        if abs(delta_t) >= np.pi:
            continue
        # Recover the Fix-plane angle from the t_u-coordinate matching,
        # then polish the two-dimensional alignment.
        omega_t = mp.omega * raw.flight
        theta0 = wrap_angle(b_out.phi_u_anchor + delta_t + omega_t)
        rho0 = rho_start * np.exp(-s_star)
        a0 = b_in.q_sigma[0] + rho0 * np.cos(theta0)
        b0 = b_in.q_sigma[1] + rho0 * np.sin(theta0)
        try:
            xy, _ = newton2d(residual2, np.array([a0, b0]),
                             tol=1e-13 * mp.section_radius)
        except RootNotConverged:
            continue
        seed_pt = _fix_seed(i, mp, xy[0], xy[1])
        res = return_map(seed_pt, mp)
        if res.escaped or res.symbol != j:
            continue
        rr = residual2(xy)
        dist = float(np.hypot(rr[0], rr[1]))
        m = int(res.windings)
        rho_f = np.hypot(xy[0] - b_in.q_sigma[0], xy[1] - b_in.q_sigma[1])
        rec = IntersectionPoint(
            location=res.point, turn_index=m, pair_slot="",
            s_value=float(np.log(rho_start / rho_f)),
            seed_point=seed_pt, seed_rho=float(rho_f),
            seed_theta=float(np.arctan2(xy[1] - b_in.q_sigma[1],
                                        xy[0] - b_in.q_sigma[0])),
            residual=dist,
            transversality_margin=_transversality_margin(
                i, j, mp, xy[0], xy[1]),
            mu=float(mu), delta=float(delta_t))
        found.setdefault(m, []).append(rec)

    out = []
    for m in range(m_lo, m_hi + 1):
        recs = found.get(m, [])
        # Distinct crossings can be re-found from adjacent brackets;
        # deduplicate by seed radius.
        recs.sort(key=lambda r: -r.seed_rho)
        dedup = []
        for r in recs:
            if not dedup or abs(r.seed_rho - dedup[-1].seed_rho) \
                    > 1e-6 * max(r.seed_rho, floor):
                dedup.append(r)
        if len(dedup) != 2:
            raise TurnUnresolvable(
                f"turn {m} yielded {len(dedup)} gated crossings "
                f"(expected 2); radius floor is {floor:.3g}")
        dedup[0].pair_slot = "first"
        dedup[1].pair_slot = "second"
        out.extend(dedup)
    return out
