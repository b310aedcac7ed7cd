"""Linearized solver: coefficient algebra, two solution paths, diagnostics."""
import numpy as np
import pytest

from bishopdisc.grid import DiscGrid, DiscFn, BoundaryFn
from bishopdisc import bishop as bi
from bishopdisc import hypersurfaces as hs
from bishopdisc import linearized as lz
from bishopdisc import structures as st

EPS = 0.1


def _pert(scale):
    def gen(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = scale * (0.3 * w + 0.2 * np.conj(z))
        out[..., 0, 1] = scale * 0.4 * z
        out[..., 1, 0] = scale * (0.1 + 0.5 * np.conj(w))
        out[..., 1, 1] = scale * (0.2 * z * np.conj(w) - 0.3)
        return out
    return st.AField(gen)


def _odd_normalized(scale):
    # entries odd in conj coordinates: vanish with their z/w derivatives
    # at the origin, so the field is its own normalization there
    def gen(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = scale * 0.2 * np.conj(z)
        out[..., 0, 1] = scale * 0.3 * np.conj(w)
        out[..., 1, 0] = scale * 0.3 * np.conj(z)
        out[..., 1, 1] = scale * (0.1 * np.conj(z) + 0.4 * np.conj(w))
        return out
    return st.AField(gen)


def _ref_disc(E, structure, grid):
    data = bi.BoundaryData(w_hat=lambda zeta: EPS * (zeta - 1.0))
    return bi.solve_bishop(E, structure, data=data, mode="pinned",
                           attachment=(0.0 + 0.0j, 0.0 + 0.0j), grid=grid)


@pytest.fixture(scope="module")
def grid():
    return DiscGrid(32, 64)


@pytest.fixture(scope="module")
def e_quad():
    return hs.quadric(1.0)


@pytest.fixture(scope="module")
def e_flat():
    return hs.flat_hypersurface()


@pytest.fixture(scope="module")
def d_quad(e_quad, grid):
    return _ref_disc(e_quad, st.standard_structure(), grid)


@pytest.fixture(scope="module")
def d_flat(e_flat, grid):
    return _ref_disc(e_flat, st.standard_structure(), grid)


@pytest.fixture(scope="module")
def d_quad_pert(e_quad, grid):
    return _ref_disc(e_quad, _pert(0.02), grid)


@pytest.fixture(scope="module")
def co_quad(e_quad, d_quad):
    return lz.assemble(e_quad, st.standard_structure(), d_quad)


@pytest.fixture(scope="module")
def co_quad_pert(e_quad, d_quad_pert):
    return lz.assemble(e_quad, _pert(0.02), d_quad_pert)


# ---- coefficient assembly ----

def test_assemble_flat_trivial(e_flat, d_flat):
    co = lz.assemble(e_flat, st.standard_structure(), d_flat)
    assert np.abs(co.lam[..., 0] - 0.5).max() < 1e-13
    assert np.abs(co.lam[..., 1]).max() < 1e-13
    assert np.abs(co.A1).max() < 1e-13
    assert np.abs(co.A2).max() < 1e-13
    assert np.abs(co.B1).max() < 1e-11
    assert np.abs(co.B2).max() == 0.0


def test_assemble_quadric_closed_form(co_quad, grid):
    # lam = (1/2, conj(w)) along w = eps (zeta - 1); B1 has the single
    # entry dbar lam2 / lam1's cofactor = eps at (1, 2)
    lam2 = EPS * (np.conj(grid.nodes) - 1.0)
    assert np.abs(co_quad.lam[..., 0] - 0.5).max() < 1e-12
    assert np.abs(co_quad.lam[..., 1] - lam2).max() < 1e-11
    b1 = np.zeros(grid.nodes.shape + (2, 2), dtype=complex)
    b1[..., 0, 1] = EPS
    assert np.abs(co_quad.B1 - b1).max() < 1e-11
    assert np.abs(co_quad.B2).max() < 1e-14
    assert np.abs(co_quad.B1_b[..., 0, 1] - EPS).max() < 1e-11
    assert np.abs(co_quad.B1_b[..., 1, 0]).max() < 1e-13


def test_assemble_ambient_extension_matches(e_quad, d_quad, grid):
    co = lz.assemble(e_quad, st.standard_structure(), d_quad,
                     extension="ambient")
    lam2 = EPS * (np.conj(grid.nodes) - 1.0)
    assert np.abs(co.lam[..., 1] - lam2).max() < 1e-11
    assert co.extension == "ambient"


def test_assemble_rejects_unknown_extension(e_quad, d_quad):
    with pytest.raises(ValueError, match="extension"):
        lz.assemble(e_quad, st.standard_structure(), d_quad,
                    extension="radial")


def test_assemble_degenerate_boundary_raises(grid):
    # rho_z vanishes along the disc z = 0, so lam_1 degenerates
    E = hs.Hypersurface(lambda z, w: np.imag(w) + np.real(z) ** 2)
    zf = DiscFn(grid, np.zeros_like(grid.nodes),
                BoundaryFn(grid.boundary, np.zeros(grid.boundary.n)))
    wf = DiscFn(grid, EPS * (grid.nodes - 1.0),
                BoundaryFn(grid.boundary, EPS * (grid.boundary.nodes - 1.0)))
    d = bi.BishopDisc(zf, wf, grid, (0.0 + 0.0j, 0.0 + 0.0j),
                      0.0, 0.0, 1, "pinned")
    with pytest.raises(ValueError, match="degenerate"):
        lz.assemble(E, st.standard_structure(), d)


def test_change_of_variables_identity(e_quad, e_flat, grid):
    # dbar Z1 - A1 Z1 - A2 conj(Z1) must equal the direct linearized
    # operator for arbitrary smooth perturbations, not just solutions
    rng = np.random.default_rng(7)
    A = _pert(0.02)
    for E in (e_quad, e_flat):
        d = _ref_disc(E, A, grid)
        co = lz.assemble(E, A, d)
        zd = np.zeros((2,) + grid.nodes.shape, dtype=complex)
        for c in range(2):
            coef = rng.normal(size=6) + 1j * rng.normal(size=6)
            for k in range(3):
                zd[c] += 0.2 * coef[k] * grid.nodes ** k
                zd[c] += 0.1 * coef[k + 3] * np.conj(grid.nodes) ** (k + 1)
        z1 = zd - np.einsum("...ij,j...->i...", co.a_on_disc, np.conj(zd))
        lhs = np.stack([grid.dbar(z1[0]), grid.dbar(z1[1])]) \
            - np.einsum("...ij,j...->i...", co.A1, z1) \
            - np.einsum("...ij,j...->i...", co.A2, np.conj(z1))
        rhs = lz.apply_linearization(A, d, zd)
        assert np.abs(lhs - rhs).max() < 1e-10


def test_frechet_defect_scenario_matrix(e_quad, e_flat, grid):
    rng = np.random.default_rng(5)
    zd = np.zeros((2,) + grid.nodes.shape, dtype=complex)
    for c in range(2):
        coef = rng.normal(size=4) + 1j * rng.normal(size=4)
        for k in range(2):
            zd[c] += 0.2 * coef[k] * grid.nodes ** k
            zd[c] += 0.1 * coef[k + 2] * np.conj(grid.nodes) ** (k + 1)
    for E in (e_quad, e_flat):
        for A in (st.standard_structure(), _pert(0.02)):
            d = _ref_disc(E, A, grid)
            assert lz.frechet_defect(A, d, zd) < 1e-5


# ---- solve_rh ----

def test_solve_rh_quadric_generator_closed_form(co_quad, grid):
    # for phi = zeta - 1 the fixed point closes after one correction:
    # V1 = eps P1[phi], zdot = 4 eps (zeta - 1)
    p = lz.perturbation_from_generator(co_quad, lambda z: z - 1.0)
    assert p.iterations <= 3
    v1 = EPS * (np.abs(grid.nodes) ** 2 + grid.nodes
                - np.conj(grid.nodes) - 1.0)
    assert np.abs(p.v[0].samples - v1).max() < 1e-11
    zd = 4.0 * EPS * (grid.nodes - 1.0)
    assert np.abs(p.z_dot.samples - zd).max() < 1e-10
    zdb = 4.0 * EPS * (grid.boundary.nodes - 1.0)
    assert np.abs(p.z_dot.boundary.samples - zdb).max() < 1e-10
    assert np.abs(p.w_dot.samples - (grid.nodes - 1.0)).max() < 1e-12
    assert p.v_at_one < 1e-12
    assert p.generator is not None


def test_solve_rh_flat_trivial(e_flat, d_flat, grid):
    co = lz.assemble(e_flat, st.standard_structure(), d_flat)
    p = lz.perturbation_from_generator(co, lambda z: z - 1.0)
    assert np.abs(p.v[0].samples).max() < 1e-13
    assert np.abs(p.z_dot.samples).max() < 1e-13
    assert np.abs(p.w_dot.samples - (grid.nodes - 1.0)).max() < 1e-12


def test_solve_rh_rejects_nonvanishing_datum(co_quad, grid):
    gam = (np.zeros(grid.boundary.n), np.ones(grid.boundary.n))
    with pytest.raises(ValueError, match="vanish"):
        lz.solve_rh(co_quad, gam)


def test_solve_rh_manufactured_recovery(grid):
    # forcing folded into B1 on a known target; includes an entire
    # (non-polynomial) holomorphic part and conj-polynomial defects
    eta = 0.01
    rng = np.random.default_rng(11)

    def vstar(zeta):
        hol = 0.05 * (np.exp(0.3 * zeta) - np.exp(0.3))
        v1 = 0.15 * (zeta ** 2 - 1.0) + hol \
            + eta * 0.5 * (zeta - 1.0) ** 2 * np.conj(zeta)
        v2 = 0.2 * (zeta - 1.0) \
            + eta * 0.3j * (zeta - 1.0) ** 2 * np.conj(zeta) ** 2
        return np.stack([v1, v2])

    def dbar_vstar(zeta):
        return np.stack([eta * 0.5 * (zeta - 1.0) ** 2,
                         eta * 0.6j * (zeta - 1.0) ** 2 * np.conj(zeta)])

    vsi, vsb = vstar(grid.nodes), vstar(grid.boundary.nodes)
    dbi, dbb = dbar_vstar(grid.nodes), dbar_vstar(grid.boundary.nodes)
    b2 = np.zeros(grid.nodes.shape + (2, 2), dtype=complex)
    b2b = np.zeros((grid.boundary.n, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            c = rng.normal(size=2) + 1j * rng.normal(size=2)
            b2[..., i, j] = 0.01 * (c[0] + c[1] * grid.nodes)
            b2b[..., i, j] = 0.01 * (c[0] + c[1] * grid.boundary.nodes)
    ui = dbi - np.einsum("...ij,j...->i...", b2, np.conj(vsi))
    ub = dbb - np.einsum("...ij,j...->i...", b2b, np.conj(vsb))
    # rank-one division floor only matters at zeta = 1 where u = 0 too
    den_i = np.maximum((np.abs(vsi) ** 2).sum(axis=0), 1e-8)
    den_b = np.maximum((np.abs(vsb) ** 2).sum(axis=0), 1e-8)
    b1 = np.einsum("i...,k...->...ik", ui, np.conj(vsi)) \
        / den_i[..., None, None]
    b1b = np.einsum("i...,k...->...ik", ub, np.conj(vsb)) \
        / den_b[..., None, None]
    co = lz.LinearizedCoefficients.from_b_fields(grid, b1, b2, b1b, b2b)
    p = lz.solve_rh(co, (np.real(vsb[0]), np.real(vsb[1])),
                    pde_tol=1e-3, bc_tol=1e-4)
    err = max(np.abs(p.v[0].samples - vsi[0]).max(),
              np.abs(p.v[1].samples - vsi[1]).max())
    assert err < 1e-4


def test_solve_rh_large_coefficients_rejected(grid):
    b1 = np.zeros(grid.nodes.shape + (2, 2), dtype=complex)
    b1[..., 0, 0] = 1.5
    b1[..., 1, 1] = 1.5
    co = lz.LinearizedCoefficients.from_b_fields(grid, b1, 0.0 * b1)
    gam = (np.zeros(grid.boundary.n),
           np.real(grid.boundary.nodes - 1.0))
    with pytest.raises(ValueError):
        lz.solve_rh(co, gam)
    with pytest.raises(ValueError):
        lz.resolvent_apply(co, lz.schwarz_datum(grid, gam))


def test_perturbation_invariants_clean_scenario(co_quad):
    # every generator solution: holomorphic-defect residual, vanishing
    # real part of the first component, exact pin at 1
    worst_v1 = 0.0
    for phi in lz.generator_basis(16):
        p = lz.perturbation_from_generator(co_quad, phi)
        assert p.residual_pde < 1e-5
        assert p.residual_bc < 1e-6
        assert p.v_at_one < 1e-10
        worst_v1 = max(worst_v1,
                       np.abs(np.real(p.v[0].boundary.samples)).max())
    assert worst_v1 < 1e-10


# ---- resolvent path ----

def test_schwarz_datum_properties(grid):
    gam = (np.zeros(grid.boundary.n),
           np.real((grid.boundary.nodes - 1.0)
                   * (0.7 + 0.3 * grid.boundary.nodes)))
    v0 = lz.schwarz_datum(grid, gam)
    assert np.abs(grid.dbar(v0[1].samples)).max() < 1e-9
    assert np.abs(np.real(v0[1].boundary.samples) - gam[1]).max() < 1e-12
    assert abs(v0[1].boundary.samples[0]) < 1e-13


def test_resolvent_zero_coefficients_identity(grid):
    zero = np.zeros(grid.nodes.shape + (2, 2), dtype=complex)
    co = lz.LinearizedCoefficients.from_b_fields(grid, zero, zero)
    gam = (np.zeros(grid.boundary.n),
           np.real(grid.boundary.nodes - 1.0))
    v0 = lz.schwarz_datum(grid, gam)
    p = lz.resolvent_apply(co, v0)
    assert np.abs(p.v[0].samples - v0[0].samples).max() == 0.0
    assert np.abs(p.v[1].samples - v0[1].samples).max() == 0.0


def test_resolvent_agrees_with_picard(co_quad_pert, grid):
    gam = (np.zeros(grid.boundary.n),
           np.real((grid.boundary.nodes - 1.0)
                   * (0.7 + 0.3 * grid.boundary.nodes)))
    pa = lz.solve_rh(co_quad_pert, gam)
    pb = lz.resolvent_apply(co_quad_pert, lz.schwarz_datum(grid, gam))
    gap = max(np.abs(pa.v[0].samples - pb.v[0].samples).max(),
              np.abs(pa.v[1].samples - pb.v[1].samples).max())
    assert gap < 1e-10
    gap_b = max(np.abs(pa.v[0].boundary.samples
                       - pb.v[0].boundary.samples).max(),
                np.abs(pa.v[1].boundary.samples
                       - pb.v[1].boundary.samples).max())
    assert gap_b < 1e-10


def test_resolvent_correction_is_second_order(grid):
    # R1 - L1 shrinks like the square of the coefficient size
    rng = np.random.default_rng(3)
    b1 = np.zeros(grid.nodes.shape + (2, 2), dtype=complex)
    b2 = np.zeros_like(b1)
    for i in range(2):
        for j in range(2):
            c = rng.normal(size=4) + 1j * rng.normal(size=4)
            b1[..., i, j] = 0.25 * (c[0] + c[1] * grid.nodes
                                    + c[2] * np.conj(grid.nodes)
                                    + c[3] * grid.nodes ** 2)
            c = rng.normal(size=4) + 1j * rng.normal(size=4)
            b2[..., i, j] = 0.25 * (c[0] + c[1] * grid.nodes
                                    + c[2] * np.conj(grid.nodes)
                                    + c[3] * grid.nodes ** 2)
    gam = (np.zeros(grid.boundary.n),
           np.real((grid.boundary.nodes - 1.0)
                   * (0.7 + 0.3 * grid.boundary.nodes)))
    v0 = lz.schwarz_datum(grid, gam)
    v0i = np.stack([v0[0].samples, v0[1].samples])
    v0b = np.stack([v0[0].boundary.samples, v0[1].boundary.samples])
    scales = [0.2, 0.1, 0.05]
    gaps = []
    for s in scales:
        co = lz.LinearizedCoefficients.from_b_fields(grid, s * b1, s * b2)
        (r1i, _), _ = lz.resolvent_parts(co, v0i, v0b)
        gi, gb = lz._mat_vec(co.B1, co.B1_b, v0i, v0b)
        l1i, _ = lz._p1_pair(grid, gi, gb)
        gaps.append(np.abs(r1i - l1i).max())
    slope = np.polyfit(np.log(scales), np.log(gaps), 1)[0]
    assert 1.7 < slope < 2.3


def test_resolvent_rejects_mismatched_grid(co_quad):
    other = DiscGrid(16, 32)
    gam = (np.zeros(other.boundary.n),
           np.real(other.boundary.nodes - 1.0))
    v0 = lz.schwarz_datum(other, gam)
    with pytest.raises(ValueError, match="grid"):
        lz.resolvent_apply(co_quad, v0)


# ---- diagnostics ----

def test_extension_choices_agree_on_diagnostics(e_quad, d_quad_pert):
    A = _pert(0.02)
    gens = lz.generator_basis(8)
    rep_h = lz.tangency_diagnostic(e_quad, A, d_quad_pert, generators=gens,
                                   extension="harmonic")
    rep_a = lz.tangency_diagnostic(e_quad, A, d_quad_pert, generators=gens,
                                   extension="ambient")
    gap = np.abs(np.array(rep_h["d1_zdot"])
                 - np.array(rep_a["d1_zdot"])).max()
    assert gap < 1e-8


def test_tangency_dichotomy_matrix(e_quad, e_flat, grid):
    e_ft = hs.finite_type(2, [1.0])
    for E in (e_flat, e_quad, e_ft):
        for A in (st.standard_structure(), _odd_normalized(0.02)):
            d = _ref_disc(E, A, grid)
            rep = lz.tangency_diagnostic(E, A, d)
            assert rep["consistent"]
            if rep["levi_small"]:
                assert rep["max_d1_zdot"] < 1e-4
            else:
                assert rep["max_d1_zdot"] > 0.3
                assert rep["levi_sup"] > 0.2


def test_tangency_report_fields(e_quad, d_quad, co_quad):
    gens = lz.generator_basis(2)
    rep = lz.tangency_diagnostic(e_quad, st.standard_structure(), d_quad,
                                 generators=gens, coeffs=co_quad)
    assert len(rep["d1_zdot"]) == 4
    assert len(rep["levi_trace"]) == 64
    assert rep["disc_scale"] == pytest.approx(2.0 * EPS, rel=1e-6)
    assert not rep["tangential"]
    # the k = 0 generator attains the closed-form slope 4 eps
    assert rep["max_d1_zdot"] == pytest.approx(0.4, abs=1e-6)


def test_leading_functional_correlates(e_quad, e_flat, grid):
    A = _odd_normalized(0.02)
    d_t = _ref_disc(e_flat, A, grid)
    rep_t = lz.tangency_diagnostic(e_flat, A, d_t,
                                   generators=lz.generator_basis(2))
    d_x = _ref_disc(e_quad, A, grid)
    rep_x = lz.tangency_diagnostic(e_quad, A, d_x,
                                   generators=lz.generator_basis(2))
    assert rep_t["functional_sup"] < 1e-5
    assert rep_x["functional_sup"] > 1e-2


def test_b_field_smallness_on_reference(co_quad, e_quad, grid):
    assert np.abs(co_quad.B1).max() <= 0.1 + 1e-9
    assert np.abs(co_quad.B2).max() == 0.0
    d = _ref_disc(e_quad, _odd_normalized(0.02), grid)
    co = lz.assemble(e_quad, _odd_normalized(0.02), d)
    assert np.abs(co.B1).max() < 0.11
    assert np.abs(co.B2).max() < 0.01


def test_evaluation_rank_flat(e_flat, d_flat):
    r = lz.evaluation_rank(e_flat, st.standard_structure(), d_flat)
    assert r["rank"] == 2
    assert max(r["tangency_residuals"]) < 1e-6
    sv = r["singular_values"]
    assert sv[2] < 1e-6 * sv[0]


def test_evaluation_rank_quadric(e_quad, d_quad, co_quad):
    r = lz.evaluation_rank(e_quad, st.standard_structure(), d_quad,
                           coeffs=co_quad)
    assert r["rank"] >= 3


def test_evaluation_rank_validations(e_quad, d_quad, co_quad):
    A = st.standard_structure()
    with pytest.raises(ValueError, match="circle"):
        lz.evaluation_rank(e_quad, A, d_quad, zeta0=0.5, coeffs=co_quad)
    with pytest.raises(ValueError, match="close to 1"):
        lz.evaluation_rank(e_quad, A, d_quad,
                           zeta0=np.exp(0.01j), coeffs=co_quad)
    with pytest.raises(ValueError, match="basis too small"):
        lz.evaluation_rank(e_quad, A, d_quad,
                           generators=lz.generator_basis(3),
                           coeffs=co_quad)


def test_evaluation_rank_peak_generators_keep_w_rank(e_flat, e_quad,
                                                     d_flat, d_quad):
    # generators concentrating at the evaluation point: the w-component
    # of the value map never degenerates
    zeta0 = -1.0 + 0.0j

    def peak(n):
        gens = []
        for k in range(n):
            gens.append(lambda z, k=k: (z - 1.0)
                        * ((1.0 + z * np.conj(zeta0)) / 2.0) ** k)
            gens.append(lambda z, k=k: 1j * (z - 1.0)
                        * ((1.0 + z * np.conj(zeta0)) / 2.0) ** k)
        return gens

    for E, d in ((e_flat, d_flat), (e_quad, d_quad)):
        r = lz.evaluation_rank(E, st.standard_structure(), d,
                               zeta0=zeta0, generators=peak(6))
        vals = r["values"]
        mw = np.stack([vals[:, 1].real, vals[:, 1].imag])
        sw = np.linalg.svd(mw, compute_uv=False)
        assert int(np.sum(sw > 1e-6 * sw[0])) == 2
