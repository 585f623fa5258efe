#!/usr/bin/env python3
"""Coupling and regularization limit sweeps plus continuous dependence."""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dataclasses import replace

from bscch import (
    CouplingParams,
    InitialDataSpec,
    RunConfig,
    RunParams,
    VelocityField,
    continuous_dependence_experiment,
    limit_study,
    make_potential,
)


def main():
    log = make_potential("log")
    params = RunParams(
        tau=1e-4, t_final=5e-3, eps=0.05,
        coupling=CouplingParams(K=1.0, L=1.0, alpha=1.0, beta=1.0),
        pot_bulk=log, pot_surf=log,
        init=InitialDataSpec(mode="random", mean=0.0, amplitude=0.2, seed=7),
    )
    cfg = RunConfig(nb=32, nr=8, params=params, keep_states=False)

    for parameter, schedule in (
        ("L->0", (1, 0.5, 0.25)),
        ("L->inf", (1, 2, 4)),
        ("K->0", (1, 0.5, 0.25)),
        ("K->inf", (1, 2, 4)),
        ("eps->0", (0.1, 0.05, 0.025)),
    ):
        rep = limit_study(cfg, parameter, schedule)
        obs = " ".join(f"{v:.3e}" for v in rep.values)
        print(f"{parameter:<8} observables: {obs}  decreasing: {rep.decreasing}")

    cd_cfg = replace(cfg, keep_states=True, params=replace(
        params, velocity=VelocityField(bulk_kind="rigid_rotation", omega=1.0),
        init=InitialDataSpec(mode="bubbles")))
    rep = continuous_dependence_experiment(cd_cfg, [0.0, 1e-3, 2e-3])
    print(f"cont-dep max distances: "
          + " ".join(f"{d:.3e}" for d in rep.max_distances)
          + f"  first-order ratio {rep.first_order_ratio:.3f}")


if __name__ == "__main__":
    main()
