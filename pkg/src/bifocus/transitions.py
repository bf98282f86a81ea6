"""Global transition maps along the branches and the first-return map.

Each branch i carries an affine outgoing map

    Pi_u_i : C_i^out -> V_i,   w |-> q_i + A_i u(w),

where u(w) = (u1, u2, phi_u - anchor_i) are exit coordinates relative to the
branch anchor.  Reversibility fixes the incoming map,

    Pi_s_i = R o (Pi_u_i)^{-1} o R,

and the first-return map on the global section is the composition

    Pi = Pi_u o Pi_O o Pi_s .

Because both factors conjugate correctly, Pi^{-1} = R o Pi o R holds
identically; ``return_map_inverse`` is implemented exactly that way.

A forward passage can end three ways: it completes into some V_j (symbol j),
it enters the local stable manifold (raised as StableManifoldHit), or it
leaves the modelled tube (reported as data on the ReturnResult, since an
escape is a legitimate outcome of the model, not a failure).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, StableManifoldHit, UnstableManifoldHit
from .geometry import (InPoint, ModelParams, OutPoint, SigmaPoint, TWO_PI,
                       circle_dist, sigma_involution, wrap_angle, wrap_pm)
from .local import LocalPassage, local_passage


# ======================================================================
# branch resolution and the outgoing affine map
# ======================================================================

def resolve_branch(p: SigmaPoint, mp: ModelParams) -> int:
    """Which V_i a section point belongs to (1-based).

    An explicit ``branch_hint`` wins if the point is inside that ball;
    otherwise the nearest q_i is tried.  Points outside every V_i have no
    branch and raise DomainError.
    """
    if p.branch_hint is not None:
        q = mp.branch(p.branch_hint).q_point
        if p.dist(q) <= mp.v_radius:
            return p.branch_hint
    best, best_d = None, np.inf
    for i in range(1, mp.n_branches + 1):
        d = p.dist(mp.branch(i).q_point)
        if d < best_d:
            best, best_d = i, d
    if best_d > mp.v_radius:
        raise DomainError(
            f"point ({p.a:.6g}, {p.b:.6g}, {p.c:.6g}) lies outside every V_i")
    return best


def _branch_image(b, u1, u2, du):
    """Affine (plus optional quadratic) image of exit coordinates."""
    A = b.linear_part
    x = b.q_sigma[0] + A[0, 0] * u1 + A[0, 1] * u2 + A[0, 2] * du
    y = b.q_sigma[1] + A[1, 0] * u1 + A[1, 1] * u2 + A[1, 2] * du
    z = A[2, 0] * u1 + A[2, 1] * u2 + A[2, 2] * du
    if b.quad_part is not None:
        u = np.array([u1, u2, du])
        corr = 0.5 * np.einsum("ijk,j,k->i", b.quad_part, u, u)
        x, y, z = x + corr[0], y + corr[1], z + corr[2]
    return x, y, z


def global_map_u(p: OutPoint, i, mp: ModelParams) -> SigmaPoint:
    """Pi_u_i, defined on the landing set C_i^out only."""
    b = mp.branch(i)
    r_s = np.hypot(p.u1, p.u2)
    if r_s > mp.c_radius:
        raise DomainError(f"exit radius {float(r_s):.6g} outside C_{i}^out")
    du = wrap_pm(p.phi_u - b.phi_u_anchor)
    if abs(du) > mp.c_radius:
        raise DomainError(
            f"angular offset {float(du):.6g} outside C_{i}^out sector")
    x, y, z = _branch_image(b, p.u1, p.u2, du)
    return SigmaPoint(a=x, b=y, c=z, branch_hint=i)


def global_map_u_inverse(p: SigmaPoint, i, mp: ModelParams) -> OutPoint:
    """Inverse of the outgoing map; Newton-corrected when the quadratic
    perturbation hook is active."""
    b = mp.branch(i)
    if b.inv_linear is None:
        raise DomainError(f"branch {i} linear part is singular")
    rhs = np.array([p.a - b.q_sigma[0], p.b - b.q_sigma[1], p.c])
    u = b.inv_linear @ rhs
    if b.quad_part is not None:
        for _ in range(8):
            res = np.array(_branch_image(b, u[0], u[1], u[2]))
            res[0] -= p.a
            res[1] -= p.b
            res[2] -= p.c
            jac = b.linear_part + np.einsum("ijk,k->ij", b.quad_part, u)
            u = u - np.linalg.solve(jac, res)
    return OutPoint(u1=u[0], u2=u[1],
                    phi_u=wrap_angle(b.phi_u_anchor + u[2]))


# ======================================================================
# the incoming map and entry bookkeeping
# ======================================================================

@dataclass
class EntryState:
    """Entry-section data of a forward passage, with raw angles.

    phi_s_raw and phi_u_raw are not reduced mod 2*pi, so quantities built
    from them (the unwrapped exit angle in particular) are smooth along
    continuous families of start points.
    """

    branch: int
    inpoint: InPoint
    r_u: float
    phi_s_raw: float
    phi_u_raw: float


def entry_state(p: SigmaPoint, mp: ModelParams, branch=None) -> EntryState:
    """Where a section point enters the local tube: Pi_s with bookkeeping."""
    i = branch if branch is not None else resolve_branch(p, mp)
    b = mp.branch(i)
    if b.inv_linear is None:
        raise DomainError(f"branch {i} linear part is singular")
    rp = sigma_involution(p)
    if b.quad_part is None:
        v0 = b.inv_linear[0, 0] * (rp.a - b.q_sigma[0]) \
            + b.inv_linear[0, 1] * (rp.b - b.q_sigma[1]) \
            + b.inv_linear[0, 2] * rp.c
        v1 = b.inv_linear[1, 0] * (rp.a - b.q_sigma[0]) \
            + b.inv_linear[1, 1] * (rp.b - b.q_sigma[1]) \
            + b.inv_linear[1, 2] * rp.c
        v2 = b.inv_linear[2, 0] * (rp.a - b.q_sigma[0]) \
            + b.inv_linear[2, 1] * (rp.b - b.q_sigma[1]) \
            + b.inv_linear[2, 2] * rp.c
    else:
        w = global_map_u_inverse(rp, i, mp)
        v0, v1 = w.u1, w.u2
        v2 = wrap_pm(w.phi_u - b.phi_u_anchor)
    phi_s_raw = b.phi_u_anchor + v2
    r_u = np.hypot(v0, v1)
    phi_u_raw = np.arctan2(v1, v0)
    ip = InPoint(phi_s=wrap_angle(phi_s_raw), u3=v0, u4=v1)
    return EntryState(branch=i, inpoint=ip, r_u=r_u,
                      phi_s_raw=phi_s_raw, phi_u_raw=phi_u_raw)


def global_map_s(p: SigmaPoint, mp: ModelParams) -> InPoint:
    """Pi_s = R o Pi_u^{-1} o R on the resolved branch's ball."""
    return entry_state(p, mp).inpoint


@dataclass
class RawPassage:
    """Ungated passage data used by the search routines.

    ``image`` is the formal continuation of the branch-j outgoing chart:
    q_j + A_j (u1, u2, delta) with delta = wrap_pm(phi_u_out - anchor_j),
    evaluated whether or not the passage threads the C gates.  Root
    finders iterate on this smooth continuation and re-check the gated
    ``return_map`` once converged.
    """

    entry: EntryState
    flight: float
    windings: int
    u1: float
    u2: float
    delta: float
    phi_s_out_raw: float
    phi_u_out_raw: float
    image: SigmaPoint


def raw_passage(p: SigmaPoint, i, j, mp: ModelParams) -> RawPassage:
    """Passage from V_i through the local tube into branch j's chart,
    with every gate check suppressed.

    Raises StableManifoldHit when the entry radius is below the stable
    threshold (the continuation itself is singular there).
    """
    est = entry_state(p, mp, branch=i)
    if est.r_u < mp.stable_tol:
        raise StableManifoldHit(
            f"entry radius {float(est.r_u):.3g} below resolution threshold",
            radius=float(est.r_u))
    lp = local_passage(est.inpoint, mp)
    b = mp.branch(j)
    delta = wrap_pm(lp.out.phi_u - b.phi_u_anchor)
    x, y, z = _branch_image(b, lp.out.u1, lp.out.u2, delta)
    return RawPassage(entry=est, flight=lp.flight, windings=lp.windings,
                      u1=lp.out.u1, u2=lp.out.u2, delta=delta,
                      phi_s_out_raw=lp.phi_s_out_raw,
                      phi_u_out_raw=lp.phi_u_out_raw,
                      image=SigmaPoint(a=x, b=y, c=z, branch_hint=j))


# ======================================================================
# the first-return map
# ======================================================================

@dataclass
class ReturnResult:
    """Outcome of one application of the return map.

    On a completed passage ``point`` lies in V_symbol and ``windings`` is
    the net full-turn count floor(omega*T / 2*pi) of the passage.  On an
    escape, ``escaped`` is True, ``point``/``symbol`` are None,
    ``escape_stage`` says whether the tube was left entering ("entry") or
    leaving ("exit") the local neighbourhood, and ``exit_point`` records
    the exit-section point when one was reached.
    """

    point: Optional[SigmaPoint]
    symbol: Optional[int]
    windings: Optional[int]
    escaped: bool = False
    escape_stage: Optional[str] = None
    exit_point: Optional[OutPoint] = None
    entry_radius: Optional[float] = None
    flight: Optional[float] = None


def landing_branch(out: OutPoint, mp: ModelParams) -> Optional[int]:
    """Which landing sector C_j^out, if any, an exit point falls into."""
    if np.hypot(out.u1, out.u2) > mp.c_radius:
        return None
    for j in range(1, mp.n_branches + 1):
        if circle_dist(out.phi_u, mp.branch(j).phi_u_anchor) <= mp.c_radius:
            return j
    return None


def return_map(p: SigmaPoint, mp: ModelParams) -> ReturnResult:
    """One forward return Pi = Pi_u o Pi_O o Pi_s.

    The passage must thread the incoming set C_i^in = R(C_i^out) as well as
    land in some C_j^out; gating both ends keeps the domain of Pi symmetric
    under R, which is what makes Pi^{-1} = R o Pi o R hold on the nose.
    """
    est = entry_state(p, mp)
    if est.r_u < mp.stable_tol:
        raise StableManifoldHit(
            f"entry radius {float(est.r_u):.3g} below resolution threshold",
            radius=float(est.r_u))
    anchor_in = mp.branch(est.branch).phi_u_anchor
    if est.r_u > mp.c_radius \
            or circle_dist(est.phi_s_raw, anchor_in) > mp.c_radius:
        return ReturnResult(point=None, symbol=None, windings=None,
                            escaped=True, escape_stage="entry",
                            entry_radius=float(est.r_u))
    lp = local_passage(est.inpoint, mp)
    j = landing_branch(lp.out, mp)
    if j is None:
        return ReturnResult(point=None, symbol=None, windings=lp.windings,
                            escaped=True, escape_stage="exit", exit_point=lp.out,
                            entry_radius=float(est.r_u), flight=float(lp.flight))
    b = mp.branch(j)
    du = wrap_pm(lp.out.phi_u - b.phi_u_anchor)
    x, y, z = _branch_image(b, lp.out.u1, lp.out.u2, du)
    img = SigmaPoint(a=x, b=y, c=z, branch_hint=j)
    if img.dist(b.q_point) > mp.v_radius:
        return ReturnResult(point=None, symbol=None, windings=lp.windings,
                            escaped=True, escape_stage="exit", exit_point=lp.out,
                            entry_radius=float(est.r_u), flight=float(lp.flight))
    return ReturnResult(point=img, symbol=j, windings=lp.windings,
                        escaped=False, exit_point=lp.out,
                        entry_radius=float(est.r_u), flight=float(lp.flight))


def return_map_inverse(p: SigmaPoint, mp: ModelParams) -> ReturnResult:
    """One backward return, implemented as R o Pi o R."""
    try:
        res = return_map(sigma_involution(p), mp)
    except StableManifoldHit as err:
        raise UnstableManifoldHit(
            "backward passage entered the local unstable manifold",
            radius=err.radius) from None
    if res.escaped:
        stage = {"entry": "exit", "exit": "entry"}.get(res.escape_stage)
        return ReturnResult(point=None, symbol=None, windings=res.windings,
                            escaped=True, escape_stage=stage,
                            exit_point=res.exit_point,
                            entry_radius=res.entry_radius, flight=res.flight)
    return ReturnResult(point=sigma_involution(res.point), symbol=res.symbol,
                        windings=res.windings, escaped=False,
                        exit_point=res.exit_point,
                        entry_radius=res.entry_radius, flight=res.flight)


def iterate_return(p: SigmaPoint, n_steps, mp: ModelParams, backward=False):
    """Apply the return map up to ``n_steps`` times, collecting results.

    Stops early on an escape; a stable/unstable-manifold hit propagates to
    the caller, who decides whether that terminates an orbit or certifies a
    homoclinic connection.
    """
    step = return_map_inverse if backward else return_map
    results = []
    cur = p
    for _ in range(n_steps):
        res = step(cur, mp)
        results.append(res)
        if res.escaped:
            break
        cur = res.point
    return results
