#!/usr/bin/env python3
"""Convergence studies: elliptic MMS in space, stepper consistency in time."""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dataclasses import replace

from bscch import (
    CouplingParams,
    InitialDataSpec,
    RunConfig,
    RunParams,
    make_potential,
    manufactured_errors,
    run,
)


def elliptic_study():
    print("elliptic manufactured solutions, combined L2 errors:")
    for K in (0.0, 1.0, np.inf):
        errs = manufactured_errors(K)
        ratios = " ".join(f"{a / b:.2f}" for a, b in zip(errs, errs[1:]))
        print(f"  K={K:<4g} " + " ".join(f"{e:.3e}" for e in errs) + f"  ratios {ratios}")


def time_study():
    log = make_potential("log")
    base = RunParams(
        tau=4e-4, t_final=8e-3, eps=0.05,
        coupling=CouplingParams(K=1.0, L=1.0, alpha=1.0, beta=1.0),
        pot_bulk=log, pot_surf=log,
        init=InitialDataSpec(mode="bubbles"),
    )
    finals = []
    taus = [4e-4, 2e-4, 1e-4]
    mesh = None
    for tau in taus:
        res = run(RunConfig(nb=32, nr=8, params=replace(base, tau=tau),
                            keep_states=False), mesh=mesh)
        mesh, forms = res.mesh, res.forms
        finals.append(res.final_state.phi)
    print("time consistency, final-state L2 gaps between tau levels:")
    gaps = []
    for a, b in zip(finals, finals[1:]):
        d = a - b
        gaps.append(float(np.sqrt(d @ (forms.M_bulk @ d))))
    for tau, g in zip(taus, gaps):
        print(f"  tau={tau:g} vs tau/2: {g:.4e}")
    print(f"  ratio {gaps[0] / gaps[1]:.2f} (first order ~ 2)")


if __name__ == "__main__":
    elliptic_study()
    time_study()
