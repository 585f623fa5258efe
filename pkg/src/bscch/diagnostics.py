"""Observables of the coupled system: energy, masses, dissipation budget,
separation margins, and the continuous-dependence and limit experiments."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace, fields as dc_fields

import numpy as np

from .assembly import CouplingParams, FormsBundle
from .elliptic import InverseCoupledOperator, BulkSurfacePair
from .errors import InvalidArgument
from .potentials import eval_regularized

CSV_FIELDS = (
    "t", "mass_bulk", "mass_surf", "mass_combined", "energy",
    "diss_bulk", "diss_surf", "diss_robin",
    "conv_power_bulk", "conv_power_surf", "energy_residual",
    "sep_margin_bulk", "sep_margin_surf", "newton_iters",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass_bulk: float
    mass_surf: float
    mass_combined: float
    energy: float
    diss_bulk: float
    diss_surf: float
    diss_robin: float
    conv_power_bulk: float
    conv_power_surf: float
    energy_residual: float
    sep_margin_bulk: float
    sep_margin_surf: float
    newton_iters: int

    def as_row(self):
        return [getattr(self, f) for f in CSV_FIELDS]


assert tuple(f.name for f in dc_fields(DiagnosticsRecord)) == CSV_FIELDS


def masses(phi, psi, forms: FormsBundle, cp: CouplingParams):
    mass_bulk = float(forms.lump_bulk @ phi)
    mass_surf = float(forms.lump_surf @ psi)
    return mass_bulk, mass_surf, cp.beta * mass_bulk + mass_surf


def energy(phi, psi, forms: FormsBundle, params) -> float:
    """Discrete regularized energy with lumped potential terms."""
    cp = params.coupling
    e = params.eps
    F, _, _ = eval_regularized(params.pot_bulk, e, phi)
    G, _, _ = eval_regularized(params.pot_surf, e, psi)
    val = 0.5 * float(phi @ (forms.A_bulk @ phi)) + float(forms.lump_bulk @ F)
    val += 0.5 * float(psi @ (forms.A_surf @ psi)) + float(forms.lump_surf @ G)
    if cp.sigma_K > 0.0:
        gap = cp.alpha * psi - forms.trace @ phi
        val += 0.5 * cp.sigma_K * float(gap @ (forms.M_surf @ gap))
    return val


def separation_margin(phi, psi):
    return 1.0 - float(np.abs(phi).max()), 1.0 - float(np.abs(psi).max())


def energy_residual(e_new, e_old, tau, report) -> float:
    """Discrete energy-identity defect; <= 0 means dissipation holds."""
    return (
        (e_new - e_old) / tau
        + report.diss_bulk + report.diss_surf + report.diss_robin
        - report.conv_power_bulk - report.conv_power_surf
    )


def make_record(state, forms: FormsBundle, params, report, prev_energy, tau) -> DiagnosticsRecord:
    mb, ms, mc = masses(state.phi, state.psi, forms, params.coupling)
    en = energy(state.phi, state.psi, forms, params)
    resid = 0.0 if prev_energy is None else energy_residual(en, prev_energy, tau, report)
    db, ds = separation_margin(state.phi, state.psi)
    return DiagnosticsRecord(
        t=state.t, mass_bulk=mb, mass_surf=ms, mass_combined=mc, energy=en,
        diss_bulk=report.diss_bulk, diss_surf=report.diss_surf,
        diss_robin=report.diss_robin,
        conv_power_bulk=report.conv_power_bulk,
        conv_power_surf=report.conv_power_surf,
        energy_residual=resid, sep_margin_bulk=db, sep_margin_surf=ds,
        newton_iters=report.newton_iters,
    )


# -- experiments -----------------------------------------------------------

def _map_runs(fn, items):
    """Run independent member simulations, optionally in parallel.

    BSCCH_THREADS caps the worker count (default 1 = sequential); results
    keep the order of ``items`` either way.
    """
    workers = max(1, int(os.environ.get("BSCCH_THREADS", "1")))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class CDReport:
    amplitudes: tuple
    max_distances: tuple
    zero_is_zero: bool
    monotone: bool
    first_order_ratio: float | None


def continuous_dependence_experiment(config_base, perturbation_amplitudes) -> CDReport:
    """Perturb the rigid-rotation speed and measure trajectory divergence.

    Each member run uses the same initial data and omega + a; distances are
    dual norms of the pair differences against the unperturbed trajectory,
    maximized over the recorded times.
    """
    from .stepper import run  # local import to avoid a cycle

    params = config_base.params
    for mob in (params.mob_bulk, params.mob_surf):
        if mob.kind != "constant":
            raise InvalidArgument("continuous dependence experiment requires constant mobilities")
    vel = params.velocity
    if vel.bulk_kind != "rigid_rotation":
        raise InvalidArgument("continuous dependence experiment requires a rigid_rotation velocity")
    amps = [float(a) for a in perturbation_amplitudes]
    if sorted(amps) != amps:
        raise InvalidArgument("perturbation amplitudes must be sorted ascending")

    base = run(config_base)
    op = InverseCoupledOperator(base.mesh, params.coupling, forms=base.forms)

    def member(a):
        cfg = replace(
            config_base,
            params=replace(params, velocity=replace(vel, omega=vel.omega + a)),
        )
        res = run(cfg, mesh=base.mesh)
        dmax = 0.0
        for s_base, s_pert in zip(base.states, res.states):
            pair = BulkSurfacePair(s_pert.phi - s_base.phi, s_pert.psi - s_base.psi)
            dmax = max(dmax, op.dual_norm(pair))
        return dmax

    maxima = _map_runs(member, amps)

    zero_ok = all(d <= 1e-12 for a, d in zip(amps, maxima) if a == 0.0)
    monotone = all(d1 <= d2 + 1e-14 for d1, d2 in zip(maxima, maxima[1:]))
    nonzero = [(a, d) for a, d in zip(amps, maxima) if a > 0.0]
    ratio = None
    if len(nonzero) >= 2:
        (a1, d1), (a2, d2) = nonzero[0], nonzero[1]
        if d1 > 0.0:
            ratio = (d2 / a2) / (d1 / a1)
    return CDReport(tuple(amps), tuple(maxima), zero_ok, monotone, ratio)


@dataclass(frozen=True)
class LimitReport:
    parameter: str
    schedule: tuple
    values: tuple        # primary observable per schedule entry
    extra: tuple         # secondary observable (mass drift for L->inf), else empty
    decreasing: bool


def _mass_drift(result):
    recs = result.records
    db = max(abs(r.mass_bulk - recs[0].mass_bulk) for r in recs)
    ds = max(abs(r.mass_surf - recs[0].mass_surf) for r in recs)
    return max(db, ds)


def limit_study(config_base, parameter: str, schedule) -> LimitReport:
    """Trend check for the coupling and regularization limits.

    parameter is one of "L->0", "L->inf", "K->0", "K->inf", "eps->0"; the
    schedule must move monotonically toward the limit.  The report carries
    the observable named in the corresponding convergence statement.
    """
    from .stepper import run, epsilon_continuation  # local import to avoid a cycle

    schedule = [float(v) for v in schedule]
    toward_zero = parameter in ("L->0", "K->0", "eps->0")
    if parameter not in ("L->0", "L->inf", "K->0", "K->inf", "eps->0"):
        raise InvalidArgument(f"unknown limit parameter {parameter!r}")
    steps_ok = all(
        (b < a) if toward_zero else (b > a) for a, b in zip(schedule, schedule[1:])
    )
    if not steps_ok:
        raise InvalidArgument("schedule must be monotone toward the limit")

    if parameter == "eps->0":
        _, distances = epsilon_continuation(config_base, schedule)
        dec = all(d2 <= d1 for d1, d2 in zip(distances, distances[1:]))
        return LimitReport(parameter, tuple(schedule), tuple(distances), (), dec)

    params = config_base.params

    def member(v):
        cp = params.coupling
        cp = replace(cp, L=v) if parameter.startswith("L") else replace(cp, K=v)
        res = run(replace(config_base, params=replace(params, coupling=cp)))
        final = res.final_state
        forms = res.forms
        if parameter == "L->0":
            return res.robin_gap_sq_integral, None
        if parameter == "L->inf":
            return cp.sigma_L**2 * res.robin_gap_sq_integral, _mass_drift(res)
        gap = cp.alpha * final.psi - forms.trace @ final.phi
        gap_norm = float(np.sqrt(gap @ (forms.M_surf @ gap)))
        if parameter == "K->0":
            return gap_norm, None
        return 0.5 * cp.sigma_K * gap_norm**2, None

    members = _map_runs(member, schedule)
    values = [v for v, _ in members]
    extra = [e for _, e in members if e is not None]

    seq = extra if parameter == "L->inf" else values
    dec = all(b < a for a, b in zip(seq, seq[1:])) if len(seq) > 1 else True
    return LimitReport(parameter, tuple(schedule), tuple(values), tuple(extra), dec)
