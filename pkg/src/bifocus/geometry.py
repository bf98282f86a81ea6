"""Coordinate charts, the reversing involution, and parameter validation.

The model lives in R^4 near a bifocus equilibrium O whose linearisation has
eigenvalues -alpha +- i*omega and alpha -+ i*omega (alpha, omega > 0).  The
reversing involution is

    R(x1, x2, x3, x4) = (x3, x4, x1, x2),

a linear map with R^2 = id and a two-dimensional fixed plane.  In bipolar
coordinates

    x1 = r_s cos(phi_s),  x2 = r_s sin(phi_s),
    x3 = r_u cos(phi_u),  x4 = r_u sin(phi_u),

the linearised flow reads r_s' = -alpha r_s, phi_s' = omega, r_u' = alpha r_u,
phi_u' = -omega, so {r_u = 0} is the local stable plane and {r_s = 0} the
local unstable one, and Fix(R) = {r_s = r_u, phi_s = phi_u}.

Two solid-torus cross-sections bound the linear neighbourhood:

    Sigma_in  = {r_s = r},  chart (phi_s, u3, u4), u3 + i u4 = r_u e^{i phi_u},
    Sigma_out = {r_u = r},  chart (u1, u2, phi_u), u1 + i u2 = r_s e^{i phi_s},

with R(Sigma_in) = Sigma_out.  The disc factors are kept Cartesian so the
charts have no polar singularity on the invariant manifolds.

A third, R-invariant section Sigma carries the global return dynamics.  Per
branch it is an R^3 chart with coordinates (a, b, c) in which the involution
acts as (a, b, c) |-> (a, b, -c); the symmetry plane is {c = 0} and each
branch owns a ball V_i of radius ``v_radius`` centred on a point q_i of that
plane.

Angles stored in chart objects are normalised to [0, 2*pi).  Internal
computations keep raw (unwrapped) angle values and reduce only at chart
boundaries.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


# ======================================================================
# angle helpers (work on python floats and numpy scalars of any precision)
# ======================================================================

def wrap_angle(x):
    """Reduce an angle to [0, 2*pi)."""
    y = x % TWO_PI
    if y < 0.0:
        y = y + TWO_PI
    if y >= TWO_PI:
        y = y - TWO_PI
    return y


def wrap_pm(x):
    """Reduce an angle to [-pi, pi)."""
    return wrap_angle(x + math.pi) - math.pi


def circle_dist(a, b):
    """Shorter arc length between two angles."""
    return abs(wrap_pm(a - b))


# ======================================================================
# ambient space and bipolar coordinates
# ======================================================================

def involution_R(p):
    """The reversing involution R(x1,x2,x3,x4) = (x3,x4,x1,x2)."""
    p = np.asarray(p)
    return p[..., [2, 3, 0, 1]]


@dataclass
class BipolarPoint:
    """Point of R^4 in the double-polar coordinates of the bifocus frame."""

    r_s: float
    phi_s: float
    r_u: float
    phi_u: float

    @property
    def on_stable_plane(self):
        return self.r_u == 0.0

    @property
    def on_unstable_plane(self):
        return self.r_s == 0.0


def bipolar(p):
    """Cartesian -> bipolar.  On either invariant plane the undefined angle
    is set to 0 by convention (flagged via the ``on_*_plane`` properties)."""
    p = np.asarray(p)
    r_s = np.hypot(p[0], p[1])
    r_u = np.hypot(p[2], p[3])
    phi_s = wrap_angle(np.arctan2(p[1], p[0])) if r_s > 0 else 0.0
    phi_u = wrap_angle(np.arctan2(p[3], p[2])) if r_u > 0 else 0.0
    return BipolarPoint(r_s=float(r_s), phi_s=float(phi_s),
                        r_u=float(r_u), phi_u=float(phi_u))


def cartesian(bp):
    """Bipolar -> Cartesian, inverse of :func:`bipolar`."""
    return np.array([bp.r_s * np.cos(bp.phi_s), bp.r_s * np.sin(bp.phi_s),
                     bp.r_u * np.cos(bp.phi_u), bp.r_u * np.sin(bp.phi_u)])


# ======================================================================
# section charts
# ======================================================================

@dataclass
class InPoint:
    """Point of the entry section Sigma_in = {r_s = r}."""

    phi_s: float
    u3: float
    u4: float

    @property
    def r_u(self):
        return np.hypot(self.u3, self.u4)

    @property
    def phi_u(self):
        return wrap_angle(np.arctan2(self.u4, self.u3))


@dataclass
class OutPoint:
    """Point of the exit section Sigma_out = {r_u = r}."""

    u1: float
    u2: float
    phi_u: float

    @property
    def r_s(self):
        return np.hypot(self.u1, self.u2)

    @property
    def phi_s(self):
        return wrap_angle(np.arctan2(self.u2, self.u1))


@dataclass
class SigmaPoint:
    """Point of the R-invariant global section in a per-branch chart.

    ``branch_hint`` records which V_i the point is known to belong to, if
    any; branch resolution falls back to the nearest q_i otherwise.
    """

    a: float
    b: float
    c: float
    branch_hint: Optional[int] = None

    def as_array(self):
        return np.array([self.a, self.b, self.c])

    def dist(self, other):
        return float(np.sqrt((self.a - other.a) ** 2
                             + (self.b - other.b) ** 2
                             + (self.c - other.c) ** 2))


def section_involution_in(p: OutPoint) -> InPoint:
    """R restricted to Sigma_out -> Sigma_in: swaps the focus pairs, so the
    exit disc coordinates become the entry disc coordinates."""
    return InPoint(phi_s=wrap_angle(p.phi_u), u3=p.u1, u4=p.u2)


def section_involution_out(p: InPoint) -> OutPoint:
    """R restricted to Sigma_in -> Sigma_out."""
    return OutPoint(u1=p.u3, u2=p.u4, phi_u=wrap_angle(p.phi_s))


def sigma_involution(p: SigmaPoint) -> SigmaPoint:
    """R on the global section chart: (a, b, c) |-> (a, b, -c)."""
    return SigmaPoint(a=p.a, b=p.b, c=-p.c, branch_hint=p.branch_hint)


# ======================================================================
# model parameters
# ======================================================================

@dataclass
class BranchParams:
    """Data of one homoclinic branch.

    phi_u_anchor : angle on the exit core circle the branch leaves from
    q_sigma      : (a, b) coordinates of q_i on the symmetry plane of Sigma
    linear_part  : 3x3 matrix A_i of the affine outgoing global map
    quad_part    : optional (3,3,3) tensor; adds 0.5 * u.Q.u to the image
                   (perturbation hook, zero by default)

    Derived quantities (unstable/stable tangents at q_i, the alignment
    vector k = A^{-1} t_s and its polar split) are computed once here;
    treat instances as immutable.
    """

    phi_u_anchor: float
    q_sigma: np.ndarray
    linear_part: np.ndarray
    quad_part: Optional[np.ndarray] = None

    def __post_init__(self):
        self.phi_u_anchor = float(wrap_angle(self.phi_u_anchor))
        self.q_sigma = np.asarray(self.q_sigma, dtype=float).reshape(2)
        self.linear_part = np.asarray(self.linear_part, dtype=float).reshape(3, 3)
        if self.quad_part is not None:
            self.quad_part = np.asarray(self.quad_part, dtype=float).reshape(3, 3, 3)
        self.det = float(np.linalg.det(self.linear_part))
        self.inv_linear = np.linalg.inv(self.linear_part) if self.det != 0.0 else None
        # tangent of W^u_i at q_i is the image of the core-circle direction
        self.t_u = self.linear_part[:, 2].copy()
        # reversibility sends it to the tangent of W^s_i
        self.t_s = self.t_u * np.array([1.0, 1.0, -1.0])
        if self.inv_linear is not None:
            self.k_align = self.inv_linear @ self.t_s
            self.k_perp = float(np.hypot(self.k_align[0], self.k_align[1]))
            self.beta = float(wrap_angle(math.atan2(self.k_align[1], self.k_align[0])))
        else:
            self.k_align = None
            self.k_perp = 0.0
            self.beta = 0.0

    @property
    def q_point(self):
        return SigmaPoint(a=float(self.q_sigma[0]), b=float(self.q_sigma[1]), c=0.0)


@dataclass
class ModelParams:
    """Full parameter set of the return-map model.

    alpha, omega     : positive linearisation constants
    section_radius   : radius r of the solid-torus sections
    branches         : one BranchParams per homoclinic loop
    v_radius         : radius of the balls V_i on the global section
    c_radius         : radial and angular half-extent of the landing sets
                       C_i^out on Sigma_out
    stable_tol       : entry radii below this count as a stable-manifold hit
                       (defaults to 1e-9 * section_radius)
    """

    alpha: float
    omega: float
    section_radius: float
    branches: List[BranchParams]
    v_radius: float
    c_radius: float
    stable_tol: Optional[float] = None

    def __post_init__(self):
        if self.stable_tol is None:
            self.stable_tol = 1e-9 * self.section_radius

    @property
    def n_branches(self):
        return len(self.branches)

    @property
    def delta_saddle(self):
        """Saddle index of the bifocus; identically 1 for a reversible one."""
        return self.alpha / self.alpha

    def branch(self, i):
        """Branch data for 1-based branch index i."""
        if not 1 <= i <= self.n_branches:
            raise DomainError(f"branch index {i} outside 1..{self.n_branches}")
        return self.branches[i - 1]

    # ------------------------------------------------------------------
    # serialisation
    # ------------------------------------------------------------------

    def to_json_dict(self):
        out = {
            "alpha": self.alpha,
            "branches": [
                {
                    "linear_part": [[float(v) for v in row] for row in b.linear_part],
                    "phi_u_anchor": float(b.phi_u_anchor),
                    "q_sigma": [float(v) for v in b.q_sigma],
                }
                | ({"quad_part": np.asarray(b.quad_part).tolist()}
                   if b.quad_part is not None else {})
                for b in self.branches
            ],
            "c_radius": self.c_radius,
            "omega": self.omega,
            "section_radius": self.section_radius,
            "stable_tol": self.stable_tol,
            "v_radius": self.v_radius,
        }
        return out

    @classmethod
    def from_json_dict(cls, d):
        branches = [
            BranchParams(
                phi_u_anchor=bd["phi_u_anchor"],
                q_sigma=bd["q_sigma"],
                linear_part=bd["linear_part"],
                quad_part=bd.get("quad_part"),
            )
            for bd in d["branches"]
        ]
        return cls(alpha=float(d["alpha"]), omega=float(d["omega"]),
                   section_radius=float(d["section_radius"]), branches=branches,
                   v_radius=float(d["v_radius"]), c_radius=float(d["c_radius"]),
                   stable_tol=d.get("stable_tol"))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


# ======================================================================
# defaults
# ======================================================================

# Landing sectors must stay pairwise disjoint (angular spacing 2*pi/N), and
# the alignment geometry must leave the first full spiral turn inside the
# landing gates; these extents were tuned for that jointly with t_u below.
_C_RADIUS = {1: 1.42, 2: 1.42, 3: 0.88, 4: 0.66}
_V_RADIUS = {1: 1.9, 2: 1.9, 3: 1.3, 4: 1.0}
_Q_RING = 2.6
_T_U = (0.3, 0.37)


def default_params(n_branches=2, alpha=1.0, omega=6.0):
    """Reference parameter set with ``n_branches`` symmetric branches.

    The anchors are equally spaced on the exit core circle and the q_i sit
    on a matching ring in the symmetry plane.  All branches share one
    shear matrix whose third column fixes the unstable tangent (p, q, 1);
    its mirror (p, q, -1) is then the stable tangent, so every branch is
    quasi-transversal.
    """
    if n_branches not in _C_RADIUS:
        raise DomainError(f"no default geometry for n_branches={n_branches}")
    a_mat = np.array([[1.0, 0.0, _T_U[0]],
                      [0.0, 1.0, _T_U[1]],
                      [0.0, 0.0, 1.0]])
    branches = []
    for i in range(n_branches):
        ang = TWO_PI * i / n_branches
        branches.append(BranchParams(
            phi_u_anchor=ang,
            q_sigma=[_Q_RING * math.cos(ang), _Q_RING * math.sin(ang)],
            linear_part=a_mat,
        ))
    return ModelParams(alpha=alpha, omega=omega, section_radius=4.0,
                       branches=branches, v_radius=_V_RADIUS[n_branches],
                       c_radius=_C_RADIUS[n_branches])


# ======================================================================
# validation
# ======================================================================

@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, margin, detail=""):
        self.checks.append(Check(name=name, passed=bool(passed),
                                 margin=float(margin), detail=detail))

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self):
        lines = []
        for c in self.checks:
            status = "ok " if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name:30s} margin={c.margin:.6g} {c.detail}")
        return "\n".join(lines)


def validate_params(mp: ModelParams) -> ValidationReport:
    """Check every structural requirement of a parameter set.

    Never raises on a bad value; each failed requirement becomes a failed
    check with a (possibly negative) margin so a caller can report all
    problems at once.
    """
    rep = ValidationReport()
    rep.add("alpha_positive", mp.alpha > 0.0, mp.alpha,
            "linearisation must expand/contract at equal rates alpha > 0")
    rep.add("omega_positive", mp.omega > 0.0, mp.omega,
            "focus rotation must be nonzero")
    rep.add("section_radius_positive", mp.section_radius > 0.0, mp.section_radius)
    rep.add("v_radius_positive", mp.v_radius > 0.0, mp.v_radius)
    rep.add("c_radius_positive", mp.c_radius > 0.0, mp.c_radius)
    rep.add("has_branches", mp.n_branches >= 1, mp.n_branches)

    for idx, b in enumerate(mp.branches, start=1):
        rep.add(f"branch{idx}_invertible", b.det != 0.0, abs(b.det),
                "det A_i must be nonzero")
        # quasi-transversality: t_u and t_s = (p, q, -c0) independent, which
        # for the mirrored pair means c0 != 0 and (p, q) != 0
        c0 = abs(float(b.t_u[2]))
        pq = float(np.hypot(b.t_u[0], b.t_u[1]))
        rep.add(f"branch{idx}_quasi_transversal", c0 > 0.0 and pq > 0.0,
                min(c0, pq),
                "W^u_i and W^s_i must meet q_i along independent tangents")

    # landing sectors around distinct anchors must not overlap in angle
    worst = math.inf
    for i in range(mp.n_branches):
        for j in range(i + 1, mp.n_branches):
            gap = circle_dist(mp.branches[i].phi_u_anchor,
                              mp.branches[j].phi_u_anchor) - 2.0 * mp.c_radius
            worst = min(worst, gap)
    if mp.n_branches >= 2:
        rep.add("c_out_disjoint", worst > 0.0, worst,
                "angular landing sectors C_i^out must be pairwise disjoint")

    # the balls V_i must be pairwise disjoint
    worst = math.inf
    for i in range(mp.n_branches):
        for j in range(i + 1, mp.n_branches):
            d = float(np.linalg.norm(mp.branches[i].q_sigma
                                     - mp.branches[j].q_sigma))
            worst = min(worst, d - 2.0 * mp.v_radius)
    if mp.n_branches >= 2:
        rep.add("v_disjoint", worst > 0.0, worst,
                "the balls V_i must be pairwise disjoint")

    return rep
