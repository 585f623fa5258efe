import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bscch.assembly import (
    CouplingParams,
    Mobility,
    VelocityField,
    assemble_convection,
    assemble_core,
    assemble_mobility_stiffness,
    build_case_spaces,
    sigma,
)
from bscch.errors import InvalidArgument
from bscch.mesh import generate_disk_mesh


@pytest.fixture(scope="module")
def mesh():
    return generate_disk_mesh(32, 8)


@pytest.fixture(scope="module")
def forms(mesh):
    return assemble_core(mesh)


def test_sigma_values():
    assert sigma(0.0) == 0.0
    assert sigma(np.inf) == 0.0
    assert sigma(2.0) == pytest.approx(0.5, rel=1e-15)
    assert sigma(0.25) == pytest.approx(4.0, rel=1e-15)


def test_coupling_params_validation():
    with pytest.raises(InvalidArgument):
        CouplingParams(K=-1.0, L=1.0, alpha=1.0, beta=1.0)
    # alpha*beta*|Omega| + |Gamma| = 0 is the degenerate measure combination
    cp = CouplingParams(K=1.0, L=1.0, alpha=1.0, beta=1.0)
    assert cp.sigma_K == 1.0 and cp.sigma_L == 1.0


def test_stiffness_annihilates_constants(forms):
    one_b = np.ones(forms.n_bulk)
    one_s = np.ones(forms.n_surf)
    assert np.abs(forms.A_bulk @ one_b).max() < 1e-13
    assert np.abs(forms.A_surf @ one_s).max() < 1e-13


def test_mass_matrices_integrate_one(mesh, forms):
    one_b = np.ones(forms.n_bulk)
    one_s = np.ones(forms.n_surf)
    assert one_b @ (forms.M_bulk @ one_b) == pytest.approx(forms.area, rel=1e-14)
    assert one_s @ (forms.M_surf @ one_s) == pytest.approx(forms.perimeter, rel=1e-14)
    # odd moments vanish by symmetry of the polar mesh
    x = mesh.vertices[:, 0]
    assert abs(one_b @ (forms.M_bulk @ x)) < 1e-13


def test_bulk_stiffness_linear_exact(mesh, forms):
    # energy of u = x is area: int |grad x|^2 = |Omega|
    u = mesh.vertices[:, 0]
    assert u @ (forms.A_bulk @ u) == pytest.approx(forms.area, rel=1e-13)


def test_lumped_masses_match_row_sums(forms):
    np.testing.assert_allclose(forms.lump_bulk,
                               np.asarray(forms.M_bulk.sum(axis=1)).ravel(),
                               rtol=0, atol=1e-15)
    assert forms.lump_bulk.sum() == pytest.approx(forms.area, rel=1e-14)


def test_constant_mobility_reduces_to_stiffness(mesh, forms):
    phi = np.linspace(-0.5, 0.5, forms.n_bulk)
    K = assemble_mobility_stiffness(mesh, Mobility(kind="constant", m0=2.5), phi)
    assert abs(K - 2.5 * forms.A_bulk).max() < 1e-13


def test_degenerate_mobility_at_pure_phase(mesh, forms):
    # m(+-1) = m0: degenerate part vanishes at the pure states
    phi = np.ones(forms.n_bulk)
    K = assemble_mobility_stiffness(mesh, Mobility(kind="degenerate", m0=1.0, m1=3.0), phi)
    assert abs(K - forms.A_bulk).max() < 1e-13


def test_surface_mobility_dispatch(mesh, forms):
    psi = np.zeros(forms.n_surf)
    K = assemble_mobility_stiffness(mesh, Mobility(kind="degenerate", m0=1.0, m1=1.0), psi)
    assert abs(K - 2.0 * forms.A_surf).max() < 1e-13


@settings(max_examples=50, deadline=None)
@given(s=st.floats(min_value=-2, max_value=2))
def test_mobility_bounds(s):
    mob = Mobility(kind="degenerate", m0=0.5, m1=2.0)
    assert 0.5 - 1e-15 <= mob(s) <= 2.5 + 1e-15


def test_convection_mass_neutral(mesh):
    vel = VelocityField(bulk_kind="rigid_rotation", omega=1.3,
                        surf_kind="rotation", speed=0.7)
    C_b, C_s = assemble_convection(mesh, vel, t=0.0)
    one_b = np.ones(C_b.shape[0])
    one_s = np.ones(C_s.shape[0])
    rng = np.random.default_rng(3)
    phi = rng.standard_normal(C_b.shape[0])
    psi = rng.standard_normal(C_s.shape[0])
    # 1^T C = 0: transport moves mass around, never creates it
    assert abs(one_b @ (C_b @ phi)) < 1e-12
    assert abs(one_s @ (C_s @ psi)) < 1e-12


def test_convection_radial_orthogonality_converges():
    # rigid rotation is orthogonal to radial gradients: mu = r^2 test field
    errs = []
    for nb, nr in [(32, 8), (64, 16)]:
        mesh = generate_disk_mesh(nb, nr)
        vel = VelocityField(bulk_kind="rigid_rotation", omega=1.0)
        C_b, _ = assemble_convection(mesh, vel, t=0.0)
        r4 = (mesh.vertices**2).sum(axis=1) ** 2
        phi = np.exp(mesh.vertices[:, 0])
        errs.append(abs(r4 @ (C_b @ phi)))
    assert errs[0] / errs[1] > 3.0


def test_case_space_dirichlet_phase_constraint(mesh, forms):
    cp = CouplingParams(K=0.0, L=1.0, alpha=2.0, beta=1.0)
    spaces = build_case_spaces(mesh, cp, forms)
    rng = np.random.default_rng(0)
    x_red = rng.standard_normal(spaces.P_phase.shape[1])
    full = spaces.P_phase @ x_red
    phi, psi = full[: forms.n_bulk], full[forms.n_bulk :]
    np.testing.assert_allclose(phi[mesh.boundary_loop], cp.alpha * psi, atol=1e-14)


def test_coupling_block_kernel(mesh, forms):
    cp = CouplingParams(K=2.0, L=np.inf, alpha=1.5, beta=1.0)
    spaces = build_case_spaces(mesh, cp, forms)
    psi = np.cos(3 * np.linspace(0, 2 * np.pi, forms.n_surf, endpoint=False))
    phi = np.zeros(forms.n_bulk)
    phi[mesh.boundary_loop] = cp.alpha * psi
    x = np.concatenate([phi, psi])
    # compliant pairs are in the kernel of the Robin penalty block
    assert np.abs(spaces.B_K @ x).max() < 1e-13


def test_velocity_ramp():
    vel = VelocityField(bulk_kind="rigid_rotation", omega=2.0, ramp=0.5)
    assert vel.factor(0.0) == 0.0
    assert vel.factor(0.25) == pytest.approx(0.5)
    assert vel.factor(10.0) == 1.0
