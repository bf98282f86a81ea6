"""Small root-finding helpers shared by the search modules.

All routines are scalar or two-dimensional, derivative-free or
finite-difference based, and work with any numpy floating scalar type
(float64 by default, longdouble when the caller passes longdouble
inputs).  They deliberately avoid global state so sweeps can run them
in parallel over independent problems.
"""

from __future__ import annotations

import numpy as np

from .errors import RootNotConverged

__all__ = [
    "secant",
    "sign_change_brackets",
    "newton2d",
]


def secant(f, x0, x1, *, tol=1e-12, max_iter=80, f0=None, f1=None):
    """Secant iteration for a scalar root of ``f``.

    Parameters
    ----------
    f : callable
        Scalar function.  May return ``None`` to signal that the point
        left the domain; the step is then halved toward the last valid
        iterate.
    x0, x1 : float
        Initial pair.  ``f(x0)`` and ``f(x1)`` should have opposite
        signs for guaranteed progress, though the iteration also works
        from a one-sided start when the function is near-linear.
    tol : float
        Convergence threshold on the parameter increment.
    f0, f1 : float, optional
        Pre-computed values of ``f`` at ``x0`` and ``x1``.

    Returns
    -------
    (x, fx) : pair of floats
        Final iterate and residual.

    Raises
    ------
    RootNotConverged
        If the increment never drops below ``tol``.
    """
    if f0 is None:
        f0 = f(x0)
    if f1 is None:
        f1 = f(x1)
    if f0 is None or f1 is None:
        raise RootNotConverged("secant start outside domain", best_residual=np.inf)
    for _ in range(max_iter):
        denom = f1 - f0
        if denom == 0:
            break
        x2 = x1 - f1 * (x1 - x0) / denom
        f2 = f(x2)
        if f2 is None:
            # Domain edge: retreat halfway toward the last valid point.
            x2 = 0.5 * (x1 + x2)
            f2 = f(x2)
            if f2 is None:
                raise RootNotConverged(
                    "secant iterate left the domain", best_residual=abs(float(f1))
                )
        x0, f0, x1, f1 = x1, f1, x2, f2
        if abs(x1 - x0) <= tol * max(1.0, abs(x1)):
            return x1, f1
    if abs(f1) <= tol:
        return x1, f1
    raise RootNotConverged(
        "secant did not converge", best_residual=abs(float(f1))
    )


def sign_change_brackets(xs, fs, *, jump_limit=None):
    """Indices ``a`` such that ``fs[a]`` and ``fs[a+1]`` straddle zero.

    ``None``/NaN entries break bracketing.  When ``jump_limit`` is set,
    pairs whose values differ by more than the limit are skipped; this
    filters artificial sign flips across a branch cut of a wrapped
    angle.
    """
    out = []
    for a in range(len(xs) - 1):
        fa, fb = fs[a], fs[a + 1]
        if fa is None or fb is None:
            continue
        if np.isnan(fa) or np.isnan(fb):
            continue
        if jump_limit is not None and abs(fb - fa) > jump_limit:
            continue
        if fa == 0.0 or (fa < 0.0) != (fb < 0.0):
            out.append(a)
    return out


def newton2d(f, x0, *, tol=1e-13, max_iter=40, fd_step=1e-7, damping=True):
    """Newton iteration for a two-component residual on the plane.

    The Jacobian is estimated by forward differences with step
    ``fd_step`` scaled by the coordinate magnitude.  A simple
    step-halving line search keeps the residual norm from growing when
    ``damping`` is on.

    Parameters
    ----------
    f : callable
        Maps a length-2 numpy array to a length-2 array, or ``None``
        when outside the domain.
    x0 : array-like, shape (2,)
        Starting point.

    Returns
    -------
    (x, r) : final iterate and residual norm.

    Raises
    ------
    RootNotConverged
        If the residual norm does not drop below ``tol``.
    """
    x = np.array(x0, dtype=np.asarray(x0).dtype if hasattr(x0, "dtype") else float)
    fx = f(x)
    if fx is None:
        raise RootNotConverged("newton2d start outside domain", best_residual=np.inf)
    fx = np.asarray(fx)
    best = float(np.hypot(fx[0], fx[1]))
    for _ in range(max_iter):
        rnorm = float(np.hypot(fx[0], fx[1]))
        if rnorm <= tol:
            return x, rnorm
        jac = np.empty((2, 2), dtype=fx.dtype)
        ok = True
        for col in range(2):
            h = fd_step * max(1.0, abs(float(x[col])))
            xp = x.copy()
            xp[col] = xp[col] + h
            fp = f(xp)
            if fp is None:
                ok = False
                break
            jac[:, col] = (np.asarray(fp) - fx) / h
        if not ok:
            raise RootNotConverged(
                "newton2d jacobian stencil left the domain", best_residual=rnorm
            )
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if det == 0:
            raise RootNotConverged("newton2d singular jacobian", best_residual=rnorm)
        step = np.empty_like(x)
        step[0] = (jac[1, 1] * fx[0] - jac[0, 1] * fx[1]) / det
        step[1] = (-jac[1, 0] * fx[0] + jac[0, 0] * fx[1]) / det
        scale = 1.0
        for _ in range(8 if damping else 1):
            xn = x - scale * step
            fn = f(xn)
            if fn is not None:
                fn = np.asarray(fn)
                nn = float(np.hypot(fn[0], fn[1]))
                if nn < rnorm or not damping:
                    x, fx = xn, fn
                    best = min(best, nn)
                    break
            scale *= 0.5
        else:
            raise RootNotConverged(
                "newton2d line search stalled", best_residual=rnorm
            )
    rnorm = float(np.hypot(fx[0], fx[1]))
    if rnorm <= tol:
        return x, rnorm
    raise RootNotConverged("newton2d did not converge", best_residual=rnorm)
