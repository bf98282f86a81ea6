"""Passage through the linear neighbourhood of the bifocus.

With entry section {r_s = r} and exit section {r_u = r} the linear flow is
solvable in closed form,

    r_s(t) = r_s(0) e^{-alpha t},   phi_s(t) = phi_s(0) + omega t,
    r_u(t) = r_u(0) e^{ alpha t},   phi_u(t) = phi_u(0) - omega t,

so a point entering with unstable radius r_u_in leaves after the flight time

    T = ln(r / r_u_in) / alpha

and the passage exchanges the radii exactly (r_s_out = r_u_in, because the
saddle index of the reversible bifocus is 1) while twisting both angles by
omega*T with opposite signs.  All maps here are algebraic consequences of
these formulas; no integration happens outside the test oracles.

Computations run in the floating type of their inputs (pass numpy
longdouble scalars to work in extended precision).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StableManifoldHit, UnstableManifoldHit
from .geometry import InPoint, OutPoint, TWO_PI, wrap_angle


def flight_time(r_u_in, mp):
    """Time spent between the sections by a trajectory entering with
    unstable radius ``r_u_in``.

    Strictly decreasing in r_u_in and unbounded as r_u_in -> 0+.
    """
    if r_u_in < 0.0:
        raise DomainError(f"negative unstable radius {r_u_in}")
    if r_u_in == 0.0:
        raise StableManifoldHit("entry point lies on the local stable plane",
                                radius=0.0)
    if r_u_in > mp.section_radius:
        raise DomainError(
            f"entry radius {r_u_in} exceeds section radius {mp.section_radius}")
    return np.log(mp.section_radius / r_u_in) / mp.alpha


@dataclass
class LocalPassage:
    """Full bookkeeping of one local passage, with raw (unwrapped) angles."""

    out: OutPoint
    flight: float
    windings: int
    phi_s_out_raw: float     # phi_s_in + omega*T, not reduced
    phi_u_out_raw: float     # phi_u_in - omega*T, not reduced


def local_passage(p: InPoint, mp) -> LocalPassage:
    """Closed-form passage map with flight time and winding count."""
    r_u = np.hypot(p.u3, p.u4)
    T = flight_time(r_u, mp)
    twist = mp.omega * T
    phi_s_out = p.phi_s + twist
    phi_u_out = np.arctan2(p.u4, p.u3) - twist
    out = OutPoint(u1=r_u * np.cos(phi_s_out),
                   u2=r_u * np.sin(phi_s_out),
                   phi_u=wrap_angle(phi_u_out))
    return LocalPassage(out=out, flight=T, windings=int(np.floor(twist / TWO_PI)),
                        phi_s_out_raw=phi_s_out, phi_u_out_raw=phi_u_out)


def local_map(p: InPoint, mp) -> OutPoint:
    """Pi_O : Sigma_in \\ {stable plane} -> Sigma_out."""
    return local_passage(p, mp).out


def local_map_inverse(p: OutPoint, mp) -> InPoint:
    """Inverse passage; satisfies Pi_O^{-1} = R o Pi_O o R."""
    r_s = np.hypot(p.u1, p.u2)
    if r_s < 0.0:
        raise DomainError(f"negative stable radius {r_s}")
    if r_s == 0.0:
        raise UnstableManifoldHit("exit point lies on the local unstable plane",
                                  radius=0.0)
    if r_s > mp.section_radius:
        raise DomainError(
            f"exit radius {r_s} exceeds section radius {mp.section_radius}")
    T = np.log(mp.section_radius / r_s) / mp.alpha
    twist = mp.omega * T
    phi_s_in = np.arctan2(p.u2, p.u1) - twist
    phi_u_in = p.phi_u + twist
    return InPoint(phi_s=wrap_angle(phi_s_in),
                   u3=r_s * np.cos(phi_u_in),
                   u4=r_s * np.sin(phi_u_in))


@dataclass
class Trajectory4:
    """Sampled trajectory segment in the ambient R^4 coordinates."""

    ts: np.ndarray        # (n,)
    xs: np.ndarray        # (n, 4)
    total_time: float

    @property
    def samples(self):
        return list(zip(self.ts, self.xs))


def trajectory_through_VO(p: InPoint, n_samples, mp) -> Trajectory4:
    """Sample the closed-form trajectory from the entry section to the exit
    section at ``n_samples`` equally spaced times."""
    if n_samples < 2:
        raise DomainError("need at least two samples")
    r_u0 = np.hypot(p.u3, p.u4)
    T = flight_time(r_u0, mp)
    phi_u0 = np.arctan2(p.u4, p.u3)
    ts = np.linspace(0.0, float(T), n_samples)
    r_s = mp.section_radius * np.exp(-mp.alpha * ts)
    phi_s = p.phi_s + mp.omega * ts
    r_u = r_u0 * np.exp(mp.alpha * ts)
    phi_u = phi_u0 - mp.omega * ts
    xs = np.column_stack([r_s * np.cos(phi_s), r_s * np.sin(phi_s),
                          r_u * np.cos(phi_u), r_u * np.sin(phi_u)])
    return Trajectory4(ts=ts, xs=xs, total_time=float(T))
