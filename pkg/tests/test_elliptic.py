import numpy as np
import pytest

from bscch.assembly import CouplingParams, assemble_core
from bscch.elliptic import (
    BulkSurfacePair,
    InverseCoupledOperator,
    estimate_poincare_constant,
    manufactured_case,
    manufactured_errors,
    solve_coupled_poisson,
)
from bscch.errors import InvalidArgument
from bscch.mesh import generate_disk_mesh


@pytest.fixture(scope="module")
def mesh():
    return generate_disk_mesh(64, 16)


@pytest.fixture(scope="module")
def forms(mesh):
    return assemble_core(mesh)


def _mean_free_pair(forms, cp, rng):
    f = rng.standard_normal(forms.n_bulk)
    g = rng.standard_normal(forms.n_surf)
    if np.isinf(cp.L):
        f -= (forms.lump_bulk @ f) / forms.area
        g -= (forms.lump_surf @ g) / forms.perimeter
    else:
        total = cp.beta * (forms.lump_bulk @ f) + forms.lump_surf @ g
        shift = total / (cp.beta**2 * forms.area + forms.perimeter)
        f -= cp.beta * shift
        g -= shift
    return BulkSurfacePair(f, g)


@pytest.mark.parametrize("L", [0.0, 1.0, np.inf])
def test_dual_norm_defining_identity(mesh, forms, L):
    # <S(x), S(x)>_{L,beta} = -<x, S(x)>_{L2} for 20 random mean-free pairs
    cp = CouplingParams(K=1.0, L=L, alpha=1.0, beta=1.0)
    op = InverseCoupledOperator(mesh, cp, forms=forms)
    rng = np.random.default_rng(42)
    for _ in range(20):
        x = _mean_free_pair(forms, cp, rng)
        s = op.apply(x)
        lhs = op.energy_product(s, s)
        rhs = x.bulk @ (forms.M_bulk @ s.bulk) + x.surf @ (forms.M_surf @ s.surf)
        norm2 = x.bulk @ (forms.M_bulk @ x.bulk) + x.surf @ (forms.M_surf @ x.surf)
        assert abs(lhs + rhs) <= 1e-9 * norm2


def test_inverse_operator_linearity(mesh, forms):
    cp = CouplingParams(K=1.0, L=1.0, alpha=1.0, beta=1.0)
    op = InverseCoupledOperator(mesh, cp, forms=forms)
    rng = np.random.default_rng(1)
    x = _mean_free_pair(forms, cp, rng)
    y = _mean_free_pair(forms, cp, rng)
    s1 = op.apply(BulkSurfacePair(2 * x.bulk - y.bulk, 2 * x.surf - y.surf))
    sx, sy = op.apply(x), op.apply(y)
    np.testing.assert_allclose(s1.bulk, 2 * sx.bulk - sy.bulk, atol=1e-11)
    np.testing.assert_allclose(s1.surf, 2 * sx.surf - sy.surf, atol=1e-11)


def test_non_mean_free_rejected(mesh, forms):
    cp = CouplingParams(K=1.0, L=1.0, alpha=1.0, beta=1.0)
    op = InverseCoupledOperator(mesh, cp, forms=forms)
    with pytest.raises(InvalidArgument):
        op.apply(BulkSurfacePair(np.ones(forms.n_bulk), np.ones(forms.n_surf)))


@pytest.mark.parametrize("K", [0.0, 1.0, np.inf])
def test_mms_convergence_order(K):
    errors = manufactured_errors(K, mesh_sizes=((32, 8), (64, 16), (128, 32)))
    for e1, e2 in zip(errors, errors[1:]):
        assert e1 / e2 >= 3.4


def test_mms_exact_pair_satisfies_interface_condition():
    # Robin case: K d_n u* = alpha v* - u* on r=1 with d_n u* = 2 cos 2t
    alpha, u_ex, v_ex, _, _ = manufactured_case(1.0)
    t = np.linspace(0, 2 * np.pi, 17)
    x, y = np.cos(t), np.sin(t)
    lhs = 1.0 * 2.0 * np.cos(2 * t)           # K * d_n u*
    rhs = alpha * v_ex(t) - u_ex(x, y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_coupled_poisson_incompatible_data(mesh, forms):
    f = np.ones(forms.n_bulk)
    g = np.zeros(forms.n_surf)
    with pytest.raises(InvalidArgument):
        solve_coupled_poisson(mesh, np.inf, 1.0, f, g, forms=forms)


@pytest.mark.parametrize("K", [0.0, 1.0])
def test_poincare_inequality_and_mesh_stability(K):
    cps = []
    for nb, nr in [(32, 8), (64, 16)]:
        m = generate_disk_mesh(nb, nr)
        cps.append(estimate_poincare_constant(m, K, alpha=1.0, beta=1.0))
    assert abs(cps[0] - cps[1]) / cps[1] < 0.05

    m = generate_disk_mesh(32, 8)
    f = assemble_core(m)
    cp = CouplingParams(K=K, L=np.inf, alpha=1.0, beta=1.0)
    from bscch.assembly import build_case_spaces

    spaces = build_case_spaces(m, cp, f)
    P = spaces.P_phase
    A = (P.T @ (f.A_pair + spaces.B_K) @ P).tocsr()
    M = (P.T @ f.M_pair @ P).tocsr()
    c = P.T @ np.concatenate([f.lump_bulk, f.lump_surf])
    rng = np.random.default_rng(7)
    C_P = cps[0]
    for _ in range(100):
        x = rng.standard_normal(A.shape[0])
        x -= c * (c @ x) / (c @ c)
        l2 = np.sqrt(x @ (M @ x))
        energy = np.sqrt(x @ (A @ x))
        assert l2 <= C_P * energy * (1 + 1e-10)
