"""Distributed state predictor and the transition matrices of its
linearization.

The predictor solves dp/dx = Dhat f(p, uhat(x)) from p(0) = X by classical
fourth-order steps over the grid, with the actuator estimate interpolated
between nodes by a cubic spline of its profile.  The transition field
collects Phi(x_i, 0) for the space-varying equation
dr/dx = Dhat (df/dX)(p(x), uhat(x)) r, from which Phi(x, y) is composed as
Phi(x, 0) Phi(y, 0)^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import BlowUpError, IllConditionedTransitionError, UsageError
from .grid import GridProfile, grid_nodes

BLOWUP_LIMIT = 1e8
COND_LIMIT = 1e12


def _march(rhs, y0, num_intervals, blowup_x=True):
    """RK4 march of dy/dx = rhs(i_half, x, y) over the unit grid.

    `rhs` receives the x position so node/midpoint samples can be looked up
    from precomputed arrays; `i_half` indexes the half-grid (2M+1 points).
    """
    h = 1.0 / num_intervals
    y = np.empty((num_intervals + 1,) + np.shape(y0))
    y[0] = y0
    for i in range(num_intervals):
        x = i * h
        yi = y[i]
        k1 = rhs(2 * i, x, yi)
        k2 = rhs(2 * i + 1, x + 0.5 * h, yi + 0.5 * h * k1)
        k3 = rhs(2 * i + 1, x + 0.5 * h, yi + 0.5 * h * k2)
        k4 = rhs(2 * i + 2, x + h, yi + h * k3)
        y[i + 1] = yi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if blowup_x and (not np.all(np.isfinite(y[i + 1]))
                         or np.max(np.abs(y[i + 1])) > BLOWUP_LIMIT):
            raise BlowUpError(
                f"predictor march escaped near x={(i + 1) * h:.4f}",
                x=(i + 1) * h)
    return y


def _half_grid_values(profile):
    """Profile values on the doubled grid (nodes and midpoints) via spline."""
    m = profile.num_intervals
    xs = np.linspace(0.0, 1.0, 2 * m + 1)
    return profile.interpolant()(xs)


def compute_predictor(model, X, uhat, dhat):
    """March the predictor profile from the state and the actuator estimate."""
    if dhat <= 0.0:
        raise UsageError("delay estimate must be positive")
    X = np.atleast_1d(np.asarray(X, dtype=float))
    uh = _half_grid_values(uhat)
    m = uhat.num_intervals

    def rhs(ih, x, p):
        return dhat * model.f(p, uh[ih])

    return GridProfile(_march(rhs, X, m))


def predictor_spatial_derivative(model, phat, uhat, dhat):
    """p_x(x) = Dhat f(p(x), uhat(x)) nodewise (the marched equation itself)."""
    vals = np.stack([
        dhat * model.f(np.atleast_1d(phat.values[i]), uhat.values[i])
        for i in range(phat.values.shape[0])
    ])
    if phat.values.ndim == 1:
        vals = vals[:, 0]
    return GridProfile(vals)


@dataclass
class TransitionField:
    """Phi(x_i, 0) at every node, plus cached inverses for composition."""

    matrices: np.ndarray  # (M+1, n, n)
    dhat: float
    _inverses: np.ndarray = field(default=None, repr=False)

    @property
    def num_intervals(self):
        return self.matrices.shape[0] - 1

    @property
    def dim(self):
        return self.matrices.shape[1]

    @property
    def inverses(self):
        if self._inverses is None:
            conds = np.linalg.cond(self.matrices)
            worst = float(np.max(conds))
            if not np.isfinite(worst) or worst > COND_LIMIT:
                raise IllConditionedTransitionError(
                    f"transition matrix condition number {worst:.3e}")
            self._inverses = np.linalg.inv(self.matrices)
        return self._inverses

    def between(self, i, j):
        """Phi(x_i, x_j) by semigroup composition."""
        return self.matrices[i] @ self.inverses[j]


def compute_transition_field(model, phat, uhat, dhat):
    """March dPhi/dx = Dhat (df/dX)(p, uhat) Phi from the identity."""
    n = model.dim
    ph = _half_grid_values(phat)
    uh = _half_grid_values(uhat)
    m = uhat.num_intervals

    def rhs(ih, x, Phi):
        A = np.asarray(model.df_dX(np.atleast_1d(ph[ih]), uh[ih]), dtype=float)
        return dhat * (A @ Phi)

    mats = _march(rhs, np.eye(n), m)
    return TransitionField(matrices=mats, dhat=float(dhat))


def transition_between(fieldobj, i, j):
    return fieldobj.between(i, j)


def forcing_integral(model, controller, phat, uhat, what_x, fieldobj, dhat):
    """I(x_i) = int_0^{x_i} Phi(x_i, y) G(y) dy by composite trapezoid, where
    G(y) = f(p, uhat) + (df/du)(p, uhat) (y - 1) uhat_x(y) and
    uhat_x = what_x + Dhat (dkappa/dX) f."""
    m = uhat.num_intervals
    x = grid_nodes(m)
    nodes = phat.values.shape[0]
    fv = np.empty((nodes, model.dim))
    bv = np.empty((nodes, model.dim))
    k1 = np.empty((nodes, model.dim))
    for i in range(nodes):
        p = np.atleast_1d(phat.values[i])
        u = uhat.values[i]
        fv[i] = model.f(p, u)
        bv[i] = model.df_du(p, u)
        k1[i] = controller.dkappa_dX(p)
    B = what_x.values + dhat * np.einsum("ij,ij->i", k1, fv)
    G = fv + bv * ((x - 1.0) * B)[:, None]
    J = np.einsum("iab,ib->ia", fieldobj.inverses, G)
    ct = cumulative_trapezoid(J, dx=1.0 / m, axis=0, initial=0.0)
    return np.einsum("iab,ib->ia", fieldobj.matrices, ct)


def compute_predictor_time_derivative(model, controller, phat, uhat, what_x,
                                      fieldobj, dhat, dhat_dot, f_mismatch):
    """Predictor rate from the transport identity with transition forcing:

        p_t = (p_x + Dhat Phi(x,0) f_mismatch + Dhat_dot Dhat I(x)) / Dhat

    where f_mismatch is the drift difference driven by the actuator
    estimation error at x = 0 and I is the composed forcing integral.
    """
    f_mismatch = np.atleast_1d(np.asarray(f_mismatch, dtype=float))
    px = predictor_spatial_derivative(model, phat, uhat, dhat).values
    if px.ndim == 1:
        px = px[:, None]
    drive = np.einsum("iab,b->ia", fieldobj.matrices, f_mismatch)
    I = forcing_integral(model, controller, phat, uhat, what_x, fieldobj, dhat)
    vals = (px + dhat * drive + dhat_dot * dhat * I) / dhat
    if phat.values.ndim == 1:
        vals = vals[:, 0]
    return GridProfile(vals)
