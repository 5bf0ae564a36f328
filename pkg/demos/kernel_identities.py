"""Kernel cross-checks on a synthetic actuator history.

A smooth input signal is recorded sample by sample, sliced into the
distributed fields, and the source kernels of the transformed systems
are evaluated.  Two kinds of identities are then verified:

  1. each higher kernel equals the spatial derivative of its parent
     (checked against wide finite-difference stencils), and
  2. the transformation uhat -> what is inverted exactly by marching the
     predictor back through the profile.

Run:  python demos/kernel_identities.py
"""

import numpy as np

from delaycomp import ControlHistory, GridProfile, fd_x_wide, \
    forward_transform, grid_nodes, inverse_transform, make_plant, \
    materialize_slice, snapshot_kernels

PAIRS = [("p1", "p3"), ("p2", "p4"), ("q1", "q3"), ("q2", "q4"),
         ("q3", "q5"), ("q4", "q6")]


def synthetic_history(dt=1e-3, t_end=3.5):
    hist = ControlHistory(dt)
    n = int(round(t_end / dt))
    for k in range(n + 1):
        t = k * dt
        hist.append(t, 0.25 * np.sin(1.3 * t) + 0.1 * np.cos(0.7 * t))
    return hist


def main():
    m = 200
    hist = synthetic_history()
    for plant, X in (("linear", [0.4]), ("cubic", [0.5]),
                     ("double_integrator", [0.3, -0.2])):
        bundle = make_plant(plant)
        snap = materialize_slice(bundle.model, bundle.controller, hist,
                                 3.0, X, 0.6, 0.45, 0.07, -0.04, m)
        ks = snapshot_kernels(bundle.model, bundle.controller, 0.6, snap)
        print(f"{plant}: kernel pairs (child vs d/dx of parent, "
              f"tolerance {50.0 / m ** 2:.1e})")
        for parent, child in PAIRS:
            err = np.max(np.abs(getattr(ks, child)
                                - fd_x_wide(getattr(ks, parent), m, 1)))
            print(f"  {child} = d({parent})/dx   max error {err:.3e}")

    print("\nround trip of the transformation (what -> uhat -> what):")
    rng = np.random.default_rng(7)
    x = grid_nodes(m)
    for plant in ("integrator", "linear", "cubic", "double_integrator"):
        bundle = make_plant(plant)
        worst = 0.0
        for _ in range(20):
            w = sum(rng.uniform(-1.0, 1.0)
                    * np.sin((j + 1) * np.pi * x / 2.0
                             + rng.uniform(0.0, np.pi)) for j in range(4))
            peak = np.max(np.abs(w))
            prof = GridProfile(w / peak if peak > 1.0 else w)
            X = rng.uniform(-1.0, 1.0, size=bundle.model.dim)
            uhat, phat = inverse_transform(bundle.model, bundle.controller,
                                           X, prof, rng.uniform(0.3, 0.8))
            back = forward_transform(bundle.controller, uhat, phat)
            worst = max(worst, np.max(np.abs(back.values - prof.values)))
        print(f"  {plant}: worst error over 20 profiles {worst:.3e}")


if __name__ == "__main__":
    main()
