"""Orbit search from the symmetry plane: secondary homoclinics, nested
disk chains, switching points, reversible periodic points, and the
super-homoclinic convergence check.

Everything here exploits the same two facts.  First, a Fix-plane point
whose k-th forward image lies on the stable trace W^s of some branch is
the section footprint of a reversible homoclinic orbit (the backward
half is the R-mirror of the forward half).  Second, those footprints
organize into nested families indexed by itineraries and winding words,
with one anchor point per family at every depth, so depth-(d+1) anchors
can be corrected out of depth-d anchors by a short Newton step whose
seed comes from the single-passage crossing ladder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (ContainmentFailure, DomainError, RootNotConverged,
                     StableManifoldHit, TurnUnresolvable,
                     UnstableManifoldHit, WindowExhausted)
from .geometry import ModelParams, SigmaPoint, TWO_PI, sigma_involution
from .solvers import newton2d, secant, sign_change_brackets
from .spiral import _perp_basis, find_spiral_line_intersections
from .transitions import entry_state, return_map, return_map_inverse

__all__ = [
    "HomoclinicPoint",
    "PeriodicPoint",
    "Box",
    "DiskChain",
    "ConvergenceReport",
    "AreaRatio",
    "find_secondary_homoclinics",
    "find_word_homoclinic",
    "refine_nested_disk",
    "approximate_switching_point",
    "find_reversible_periodic",
    "verify_superhomoclinic",
    "estimate_area_ratio",
]

DEFAULT_WINDING = 2


# ======================================================================
# result types
# ======================================================================

@dataclass
class HomoclinicPoint:
    """Fix-plane footprint of a reversible homoclinic orbit.

    ``point`` has c = 0 exactly; after len(itinerary) - 1 gated returns
    with the stated windings its image lies on W^s of the last symbol,
    ``residual`` away.  ``turn_index``/``pair_slot`` locate the final
    crossing on the spiral ladder.
    """

    point: SigmaPoint
    itinerary: Tuple[int, ...]
    windings: Tuple[int, ...]
    residual: float
    turn_index: int
    pair_slot: str
    slots: Tuple[str, ...] = ()
    forward_hit: Optional[bool] = None
    backward_hit: Optional[bool] = None


@dataclass
class PeriodicPoint:
    """Reversible periodic point found from the symmetry plane.

    ``point`` has c = 0; its half_period-th image returns to Fix(R)
    (``fix_error`` is |c| there), which forces closure at period
    2 * half_period (``closure_error``, evaluated in extended
    precision).  ``closing_winding`` is the winding of the final
    half-period passage; growing it walks the family toward the
    homoclinic anchor of the same word.
    """

    point: SigmaPoint
    half_period: int
    closure_error: float
    itinerary: Tuple[int, ...]
    closing_winding: int
    fix_error: float
    anchor_distance: float


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in the Fix-plane."""

    center: Tuple[float, float]
    half: Tuple[float, float]

    def contains(self, a, b, margin=0.0) -> bool:
        return (abs(a - self.center[0]) <= self.half[0] - margin
                and abs(b - self.center[1]) <= self.half[1] - margin)

    def inside(self, other: "Box") -> bool:
        """Strict containment of self within other."""
        return (abs(self.center[0] - other.center[0]) + self.half[0]
                < other.half[0]
                and abs(self.center[1] - other.center[1]) + self.half[1]
                < other.half[1])

    @property
    def area(self) -> float:
        return 4.0 * self.half[0] * self.half[1]

    @property
    def diameter(self) -> float:
        return 2.0 * float(np.hypot(self.half[0], self.half[1]))

    def corners(self) -> List[Tuple[float, float]]:
        cx, cy = self.center
        hx, hy = self.half
        return [(cx - hx, cy - hy), (cx + hx, cy - hy),
                (cx + hx, cy + hy), (cx - hx, cy + hy)]

    def boundary_points(self, n: int) -> np.ndarray:
        """n points distributed along the boundary, corners included."""
        per = max(1, n // 4)
        t = np.linspace(0.0, 1.0, per, endpoint=False)
        cx, cy = self.center
        hx, hy = self.half
        pts = []
        for k in range(per):
            u = 2.0 * t[k] - 1.0
            pts.append((cx + u * hx, cy - hy))
            pts.append((cx + hx, cy + u * hy))
            pts.append((cx - u * hx, cy + hy))
            pts.append((cx - hx, cy - u * hy))
        return np.array(pts)

    def sample(self, rng, n: int) -> np.ndarray:
        u = rng.uniform(-1.0, 1.0, size=(n, 2))
        return np.column_stack([self.center[0] + u[:, 0] * self.half[0],
                                self.center[1] + u[:, 1] * self.half[1]])


@dataclass
class DiskChain:
    """Nested Fix-plane boxes realizing an itinerary with windings.

    boxes[d] (depth d + 1) is centered on the depth-(d+2) anchor for
    d >= 1; every boundary sample of boxes[d] completes d gated returns
    matching the itinerary and windings.  ``anchor`` is the deepest
    anchor, whose final image lies on the last symbol's stable trace.
    """

    depth: int
    itinerary: Tuple[int, ...]
    windings: Tuple[int, ...]
    slots: Tuple[str, ...]
    boxes: List[Box]
    anchors: List[SigmaPoint]
    anchor_residuals: List[float]
    areas: List[float]
    boundary_samples: int

    @property
    def anchor(self) -> SigmaPoint:
        return self.anchors[-1]

    @property
    def anchor_residual(self) -> float:
        return self.anchor_residuals[-1]

    @property
    def ratios(self) -> List[float]:
        return [self.areas[d + 1] / self.areas[d]
                for d in range(len(self.areas) - 1)]


@dataclass
class ConvergenceReport:
    """Distance profile of a switching-point orbit to the base points.

    distances[k] is d_j for offset offsets[k]; forward offsets come from
    iterating the return map, negative ones from its inverse (not from
    the symmetry shortcut), so the symmetry check is informative.
    """

    offsets: List[int]
    distances: List[float]
    symmetry_error: float
    symmetric_ok: bool
    decay_ok: bool
    window_min_decreasing: bool
    tol: float
    truncated: bool


@dataclass
class AreaRatio:
    """Monte-Carlo area ratio with standard error."""

    ratio: float
    stderr: float
    n_samples: int

    def __float__(self):
        return float(self.ratio)


# ======================================================================
# shared iteration helpers
# ======================================================================

def _fix_point(a, b, hint=None) -> SigmaPoint:
    return SigmaPoint(a=a, b=b, c=0.0 * a, branch_hint=hint)


def _iterate_checked(x: SigmaPoint, symbols: Sequence[int],
                     windings: Sequence[int], mp: ModelParams):
    """Gated returns constrained to given symbols and windings.

    Returns the list of ReturnResults, or None if any step escapes,
    hits a manifold, or produces the wrong symbol or winding.
    """
    results = []
    cur = x
    for step, (sym, wnd) in enumerate(zip(symbols, windings)):
        try:
            res = return_map(cur, mp)
        except StableManifoldHit:
            return None
        if res.escaped or res.symbol != sym:
            return None
        if wnd is not None and res.windings != wnd:
            return None
        results.append(res)
        cur = res.point
    return results


def _crossing_target(i, j, n, slot, mp, cache):
    """Single-passage crossing record for branch pair (i, j), winding n."""
    key = (i, j, int(n), slot)
    if cache is not None and key in cache:
        return cache[key]
    try:
        pts = find_spiral_line_intersections(i, j, (n, n), mp)
    except TurnUnresolvable as err:
        raise WindowExhausted(str(err), depth=0) from None
    rec = pts[0] if slot == "first" else pts[1]
    if cache is not None:
        cache[key] = rec
    return rec


def _normalize_slots(slots, count):
    if slots is None:
        return ("first",) * count
    slots = tuple(slots)
    if len(slots) != count:
        raise DomainError(f"expected {count} slot entries, got {len(slots)}")
    for s in slots:
        if s not in ("first", "second"):
            raise DomainError(f"invalid slot {s!r}")
    return slots


def _word_anchor_chain(itinerary, windings, mp, slots=None, cache=None):
    """Anchors of the nested family at every depth 1..k.

    Returns (anchors, residuals); anchors[d-1] is the depth-d anchor,
    i.e. the Fix-plane point whose (d-1)-th image lies on the stable
    trace of itinerary[d-1] after passages with windings[:d-1].
    """
    itinerary = tuple(int(s) for s in itinerary)
    windings = tuple(int(n) for n in windings)
    k = len(itinerary)
    if k == 0:
        raise DomainError("empty itinerary")
    if len(windings) != k - 1:
        raise DomainError("windings length must be itinerary length - 1")
    for s in itinerary:
        if not 1 <= s <= mp.n_branches:
            raise DomainError(f"symbol {s} out of range")
    slots = _normalize_slots(slots, max(0, k - 1))

    b1 = mp.branch(itinerary[0])
    anchors = [_fix_point(b1.q_sigma[0], b1.q_sigma[1], hint=itinerary[0])]
    residuals = [0.0]
    if k == 1:
        return anchors, residuals

    first = _crossing_target(itinerary[0], itinerary[1], windings[0],
                             slots[0], mp, cache)
    anchors.append(first.seed_point)
    residuals.append(first.residual)

    for d in range(2, k):
        # Build the depth-(d+1) anchor from the depth-d anchor.  The
        # new final passage is step d, from branch itinerary[d-1] to
        # itinerary[d] with winding windings[d-1].
        try:
            target = _crossing_target(itinerary[d - 1], itinerary[d],
                                      windings[d - 1], slots[d - 1],
                                      mp, cache)
        except WindowExhausted as err:
            raise WindowExhausted(
                f"winding {windings[d - 1]} unresolvable at depth {d}: "
                f"{err}", depth=d) from None
        t_est = entry_state(target.seed_point, mp,
                            branch=itinerary[d - 1])
        w_star = (float(t_est.inpoint.u3), float(t_est.inpoint.u4))
        syms_pre = itinerary[1:d]
        free_pre = (None,) * (d - 1)

        # Winding labels are floors of smooth quantities, so they are
        # left unconstrained while iterating (constraining them litters
        # the domain with rejections) and verified at the converged
        # anchor instead.
        def stage(xy):
            res = _iterate_checked(_fix_point(xy[0], xy[1],
                                              hint=itinerary[0]),
                                   syms_pre, free_pre, mp)
            if res is None:
                return None
            est = entry_state(res[-1].point, mp, branch=itinerary[d - 1])
            return np.array([est.inpoint.u3 - w_star[0],
                             est.inpoint.u4 - w_star[1]])

        a_prev = anchors[-1]
        x0 = np.array([float(a_prev.a), float(a_prev.b)])
        xA, _ = newton2d(stage, x0, tol=1e-10 * mp.section_radius)

        bq = mp.branch(itinerary[d]).q_sigma
        w1, w2 = _perp_basis(mp.branch(itinerary[d]).t_s)
        syms_all = itinerary[1:d + 1]
        free_all = (None,) * d

        def align(xy):
            res = _iterate_checked(_fix_point(xy[0], xy[1],
                                              hint=itinerary[0]),
                                   syms_all, free_all, mp)
            if res is None:
                return None
            q = res[-1].point
            va, vb, vc = q.a - bq[0], q.b - bq[1], q.c
            return np.array([va * w1[0] + vb * w1[1] + vc * w1[2],
                             va * w2[0] + vb * w2[1] + vc * w2[2]])

        xB, resid = newton2d(align, xA, tol=1e-13 * mp.section_radius)
        anchor = _fix_point(xB[0], xB[1], hint=itinerary[0])
        if _iterate_checked(anchor, syms_all, windings[:d], mp) is None:
            raise RootNotConverged(
                f"depth-{d + 1} anchor for {itinerary[:d + 1]} converged "
                f"in a wrong winding basin", best_residual=float(resid))
        anchors.append(anchor)
        residuals.append(float(resid))
    return anchors, residuals


# ======================================================================
# homoclinic search
# ======================================================================

def _verify_manifold_hits(h: HomoclinicPoint, mp: ModelParams):
    """Check the forward W^s hit and the backward W^u hit by iteration."""
    steps = len(h.itinerary) - 1
    cur = h.point
    ok_f = False
    for step in range(steps + 1):
        try:
            res = return_map(cur, mp)
        except StableManifoldHit:
            ok_f = step == steps
            break
        if res.escaped:
            break
        cur = res.point
    ok_b = False
    cur = h.point
    for step in range(steps + 1):
        try:
            res = return_map_inverse(cur, mp)
        except UnstableManifoldHit:
            ok_b = step == steps
            break
        if res.escaped:
            break
        cur = res.point
    h.forward_hit = ok_f
    h.backward_hit = ok_b


def find_secondary_homoclinics(i, j, turn_range, mp: ModelParams,
                               verify=True) -> List[HomoclinicPoint]:
    """Homoclinic footprints with one intermediate passage.

    For every turn m in the inclusive window, both crossings of the
    branch-i image spiral with W^s_j pull back to Fix-plane points;
    each is returned as a HomoclinicPoint with itinerary (i, j) and
    winding word (m,).

    Raises
    ------
    TurnUnresolvable
        If a requested turn is below the resolution barrier.
    RootNotConverged
        If a crossing refinement fails.
    """
    out = []
    for rec in find_spiral_line_intersections(i, j, turn_range, mp):
        h = HomoclinicPoint(point=rec.seed_point, itinerary=(i, j),
                            windings=(rec.turn_index,),
                            residual=rec.residual,
                            turn_index=rec.turn_index,
                            pair_slot=rec.pair_slot,
                            slots=(rec.pair_slot,))
        if verify:
            _verify_manifold_hits(h, mp)
        out.append(h)
    return out


def find_word_homoclinic(itinerary, windings, mp: ModelParams,
                         slots=None, cache=None, verify=False
                         ) -> HomoclinicPoint:
    """Homoclinic footprint realizing a full word.

    The point's forward orbit follows ``itinerary`` with the given
    windings and enters the stable manifold after the final passage;
    the backward orbit is its R-mirror.
    """
    anchors, residuals = _word_anchor_chain(itinerary, windings, mp,
                                            slots=slots, cache=cache)
    slots_n = _normalize_slots(slots, max(0, len(itinerary) - 1))
    h = HomoclinicPoint(point=anchors[-1],
                        itinerary=tuple(int(s) for s in itinerary),
                        windings=tuple(int(n) for n in windings),
                        residual=residuals[-1],
                        turn_index=int(windings[-1]) if windings else 0,
                        pair_slot=slots_n[-1] if slots_n else "first",
                        slots=slots_n)
    if verify:
        _verify_manifold_hits(h, mp)
    return h


# ======================================================================
# nested disk chains
# ======================================================================

def _box_passes(box: Box, d_steps, symbols, windings, mp, n_boundary,
                parent: Optional[Box]):
    """All boundary samples complete d_steps checked returns."""
    pts = box.boundary_points(n_boundary)
    for a, b in pts:
        if parent is not None and not parent.contains(a, b):
            return False
        res = _iterate_checked(_fix_point(a, b), symbols[:d_steps],
                               windings[:d_steps], mp)
        if res is None:
            return False
    return True


def refine_nested_disk(itinerary, windings, mp: ModelParams, slots=None,
                       n_boundary=32, cache=None) -> DiskChain:
    """Nested boxes realizing an itinerary, with verified containment.

    boxes[0] is the base box inscribed in V of the first symbol; each
    deeper box is centered on the next anchor and halved until all
    ``n_boundary`` boundary samples complete the required checked
    returns, sit inside the parent box, and stay inside V.

    Raises
    ------
    WindowExhausted
        If a requested winding has no resolvable crossing at its depth.
    ContainmentFailure
        If halving hits the resolution floor before the boundary check
        passes.
    """
    itinerary = tuple(int(s) for s in itinerary)
    windings = tuple(int(n) for n in windings)
    k = len(itinerary)
    anchors, residuals = _word_anchor_chain(itinerary, windings, mp,
                                            slots=slots, cache=cache)
    slots_n = _normalize_slots(slots, max(0, k - 1))

    b1 = mp.branch(itinerary[0])
    h0 = 0.999 * mp.v_radius / np.sqrt(2.0)
    boxes = [Box(center=(float(b1.q_sigma[0]), float(b1.q_sigma[1])),
                 half=(h0, h0))]
    areas = [boxes[0].area]

    floor = 100.0 * np.finfo(float).eps * mp.section_radius
    for d in range(1, k):
        anchor = anchors[d]
        parent = boxes[d - 1]
        half = 0.45 * min(parent.half)
        placed = None
        while half > floor:
            cand = Box(center=(float(anchor.a), float(anchor.b)),
                       half=(half, half))
            if cand.inside(parent) and _box_passes(
                    cand, d, itinerary[1:], windings, mp, n_boundary,
                    parent):
                placed = cand
                break
            half *= 0.5
        if placed is None:
            raise ContainmentFailure(
                f"could not realize containment at depth {d + 1} for "
                f"itinerary {itinerary} windings {windings}", depth=d + 1)
        boxes.append(placed)
        areas.append(placed.area)

    return DiskChain(depth=k, itinerary=itinerary, windings=windings,
                     slots=slots_n, boxes=boxes, anchors=anchors,
                     anchor_residuals=[float(r) for r in residuals],
                     areas=areas, boundary_samples=int(n_boundary))


def approximate_switching_point(itinerary, windings, mp: ModelParams,
                                closing_winding=None, slots=None,
                                cache=None) -> SigmaPoint:
    """Fix-plane point whose orbit shadows the itinerary both ways.

    The word is closed with one more symbol (its first) and winding
    (``closing_winding``, default the last winding or 2), and the
    deepest anchor of the extended family is returned: its forward
    orbit completes len(itinerary) gated returns through the requested
    branches, and by reversibility the backward orbit mirrors it.
    """
    itinerary = tuple(int(s) for s in itinerary)
    windings = tuple(int(n) for n in windings)
    if closing_winding is None:
        closing_winding = windings[-1] if windings else DEFAULT_WINDING
    ext_itin = itinerary + (itinerary[0],)
    ext_wind = windings + (int(closing_winding),)
    ext_slots = None if slots is None else tuple(slots) + ("first",)
    anchors, _ = _word_anchor_chain(ext_itin, ext_wind, mp,
                                    slots=ext_slots, cache=cache)
    return anchors[-1]


# ======================================================================
# reversible periodic points
# ======================================================================

def _to_longdouble(p: SigmaPoint) -> SigmaPoint:
    return SigmaPoint(a=np.longdouble(p.a), b=np.longdouble(p.b),
                      c=np.longdouble(p.c), branch_hint=p.branch_hint)


def _closure_error(p: SigmaPoint, period, mp: ModelParams):
    """|Pi^period(p) - p| evaluated in extended precision."""
    cur = _to_longdouble(p)
    start = cur
    for _ in range(period):
        res = return_map(cur, mp)
        if res.escaped:
            return np.inf
        cur = res.point
    return float(np.sqrt((cur.a - start.a) ** 2 + (cur.b - start.b) ** 2
                         + (cur.c - start.c) ** 2))


def find_reversible_periodic(itinerary, windings, mp: ModelParams,
                             closing_winding=None, slots=None,
                             cache=None, scan_points=400
                             ) -> PeriodicPoint:
    """Reversible periodic point realizing a word.

    For a word of length L (L >= 2; a single symbol is treated as its
    doubling), the half period is m = L: the first L - 1 passages
    follow the word's windings, and the L-th passage with the free
    ``closing_winding`` returns the orbit to Fix(R), where reversibility
    closes it at period 2m.  The family of such points, indexed by the
    closing winding, accumulates on the word's homoclinic anchor.

    Raises
    ------
    DomainError
        For an empty word (a zero half period has no orbit).
    RootNotConverged
        If no Fix-return root is found in the scan window.
    """
    itinerary = tuple(int(s) for s in itinerary)
    if len(itinerary) == 0:
        raise DomainError("empty word has no periodic orbit")
    windings = tuple(int(n) for n in windings)
    if len(itinerary) == 1:
        itinerary = itinerary + itinerary
        if not windings:
            windings = (DEFAULT_WINDING,)
        slots = None if slots is None else tuple(slots) * 2

    L = len(itinerary)
    anchors, _ = _word_anchor_chain(itinerary, windings, mp, slots=slots,
                                    cache=cache)
    a = anchors[-1]
    syms = itinerary[1:]
    wnds = windings

    def half_orbit(pt):
        """L-1 checked returns, then the free closing passage."""
        res = _iterate_checked(pt, syms, wnds, mp)
        if res is None:
            return None
        try:
            last = return_map(res[-1].point, mp)
        except StableManifoldHit:
            return None
        if last.escaped:
            return None
        return res, last

    # Pick the Fix-plane direction along which the closing-passage
    # entry radius grows fastest, by probing a small ring around the
    # anchor.
    probe = 1e-4 * mp.section_radius
    best_dir, best_r = None, -1.0
    for ang in np.linspace(0.0, np.pi, 8, endpoint=False):
        da, db = np.cos(ang), np.sin(ang)
        out = half_orbit(_fix_point(a.a + probe * da, a.b + probe * db,
                                    hint=itinerary[0]))
        if out is None:
            continue
        r_in = out[1].entry_radius
        if r_in is not None and r_in > best_r:
            best_r, best_dir = r_in, (da, db)
    if best_dir is None:
        raise RootNotConverged(
            "no closing passage completes near the homoclinic anchor",
            best_residual=np.inf)

    # Scan outward on a log grid; each sample records c(Pi^L) and the
    # closing winding so roots can be grouped by winding band.
    t_hi = 0.2 * mp.v_radius
    t_lo = probe * 1e-4
    ts = np.geomspace(t_lo, t_hi, int(scan_points))

    def eval_c(t):
        out = half_orbit(_fix_point(a.a + t * best_dir[0],
                                    a.b + t * best_dir[1],
                                    hint=itinerary[0]))
        if out is None:
            return None, None
        return float(out[1].point.c), int(out[1].windings)

    samples = [eval_c(t) for t in ts]
    roots = []
    for idx in range(len(ts) - 1):
        c0, w0 = samples[idx]
        c1, w1 = samples[idx + 1]
        if c0 is None or c1 is None or w0 != w1:
            continue
        if c0 == 0.0 or (c0 < 0.0) != (c1 < 0.0):
            try:
                t_root, _ = secant(lambda t: eval_c(t)[0], ts[idx],
                                   ts[idx + 1], tol=1e-14, f0=c0, f1=c1)
            except RootNotConverged:
                continue
            c_fin, w_fin = eval_c(t_root)
            if c_fin is None:
                continue
            roots.append((int(w_fin), float(t_root), abs(c_fin)))
    if not roots:
        raise RootNotConverged(
            f"no Fix-return root for word {itinerary} in the scan window",
            best_residual=np.inf)

    by_wind = {}
    for w_fin, t_root, c_abs in roots:
        cur = by_wind.get(w_fin)
        if cur is None or c_abs < cur[1]:
            by_wind[w_fin] = (t_root, c_abs)
    if closing_winding is not None and int(closing_winding) in by_wind:
        w_sel = int(closing_winding)
    else:
        w_sel = min(by_wind)
    t_sel = by_wind[w_sel][0]

    # Longdouble polish of the Fix-return root along the same ray.
    a_ld = _to_longdouble(a)
    da_ld, db_ld = np.longdouble(best_dir[0]), np.longdouble(best_dir[1])

    def eval_c_ld(t):
        pt = SigmaPoint(a=a_ld.a + t * da_ld, b=a_ld.b + t * db_ld,
                        c=np.longdouble(0.0), branch_hint=itinerary[0])
        out = half_orbit(pt)
        if out is None:
            return None
        return out[1].point.c

    t0 = np.longdouble(t_sel) * np.longdouble(1.0 - 1e-9)
    t1 = np.longdouble(t_sel)
    try:
        t_ld, c_ld = secant(eval_c_ld, t0, t1, tol=np.longdouble(1e-18))
    except RootNotConverged:
        t_ld, c_ld = t1, eval_c_ld(t1)

    p_ld = SigmaPoint(a=a_ld.a + t_ld * da_ld, b=a_ld.b + t_ld * db_ld,
                      c=np.longdouble(0.0), branch_hint=itinerary[0])
    closure = _closure_error(p_ld, 2 * L, mp)
    p = SigmaPoint(a=float(p_ld.a), b=float(p_ld.b), c=0.0,
                   branch_hint=itinerary[0])
    return PeriodicPoint(point=p, half_period=L,
                         closure_error=float(closure),
                         itinerary=itinerary, closing_winding=w_sel,
                         fix_error=abs(float(c_ld)),
                         anchor_distance=float(p.dist(a)))


# ======================================================================
# super-homoclinic convergence
# ======================================================================

def verify_superhomoclinic(x: SigmaPoint, k, mp: ModelParams,
                           tol=1e-8, window=2) -> ConvergenceReport:
    """Distance profile d_j of the orbit of x to the base points.

    d_j is the distance of the j-th image (j in [-(k-1), k-1], negative
    j via the inverse return map) to the nearest q_i.  The report
    records whether the profile is symmetric in +-j within ``tol``,
    whether d_{k-1} < d_1, and whether the sliding-window minimum is
    non-increasing.
    """
    k = int(k)
    if k < 2:
        raise DomainError("depth must be at least 2")
    qs = [mp.branch(i).q_point for i in range(1, mp.n_branches + 1)]

    def dist_to_base(p):
        return min(float(p.dist(q)) for q in qs)

    fwd = [dist_to_base(x)]
    cur = x
    truncated = False
    for _ in range(k - 1):
        try:
            res = return_map(cur, mp)
        except StableManifoldHit:
            truncated = True
            break
        if res.escaped:
            truncated = True
            break
        cur = res.point
        fwd.append(dist_to_base(cur))
    bwd = []
    cur = x
    for _ in range(len(fwd) - 1):
        try:
            res = return_map_inverse(cur, mp)
        except UnstableManifoldHit:
            truncated = True
            break
        if res.escaped:
            truncated = True
            break
        cur = res.point
        bwd.append(dist_to_base(cur))

    n_off = min(len(fwd) - 1, len(bwd))
    offsets = list(range(-n_off, len(fwd)))
    distances = [bwd[-j - 1] for j in range(-n_off, 0)] + fwd
    sym_err = max((abs(fwd[j] - bwd[j - 1]) for j in range(1, n_off + 1)),
                  default=0.0)
    decay_ok = len(fwd) >= 3 and fwd[-1] < fwd[1]
    mins = [min(fwd[j:j + window]) for j in range(len(fwd) - window + 1)]
    win_ok = all(mins[j + 1] <= mins[j] * (1.0 + 1e-9)
                 for j in range(len(mins) - 1))
    return ConvergenceReport(offsets=offsets, distances=distances,
                             symmetry_error=float(sym_err),
                             symmetric_ok=bool(sym_err <= tol),
                             decay_ok=bool(decay_ok),
                             window_min_decreasing=bool(win_ok),
                             tol=float(tol),
                             truncated=bool(truncated))


# ======================================================================
# area ratios
# ======================================================================

def estimate_area_ratio(parent_box: Box, child_box: Box,
                        n_samples=20000, rng=None, seed=0) -> AreaRatio:
    """Monte-Carlo ratio of child to parent box area.

    Uniform samples in the parent are tested for membership in the
    child; the binomial standard error is reported alongside.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    pts = parent_box.sample(rng, int(n_samples))
    hits = sum(1 for a, b in pts if child_box.contains(a, b))
    p = hits / float(n_samples)
    stderr = float(np.sqrt(max(p * (1.0 - p), 0.0) / n_samples))
    return AreaRatio(ratio=float(p), stderr=stderr,
                     n_samples=int(n_samples))
