"""Structure encodings, coordinate changes, normalization, dilations."""
import numpy as np
import pytest

from bishopdisc.grid import DiscFn, DiscGrid
from bishopdisc import operators as ops
from bishopdisc import structures as st


@pytest.fixture(scope="module")
def disc():
    return DiscGrid(64, 128)


def random_contraction(rng, scale=0.3):
    A = scale * (rng.standard_normal((2, 2))
                 + 1j * rng.standard_normal((2, 2)))
    n = np.linalg.norm(A, ord=2)
    if n >= 0.9:
        A *= 0.85 / n
    return A


# ---- pointwise conversions ----

def test_j_from_a_squares_to_minus_identity():
    rng = np.random.default_rng(11)
    for _ in range(20):
        J = st.j_from_a(random_contraction(rng))
        assert np.abs(J @ J + np.eye(4)).max() < 1e-12


def test_a_j_round_trip():
    rng = np.random.default_rng(12)
    for _ in range(20):
        A = random_contraction(rng)
        back = st.a_from_j(st.j_from_a(A), (0.0, 0.0))
        assert np.abs(back - A).max() < 1e-12


def test_j_a_round_trip():
    rng = np.random.default_rng(13)
    for _ in range(10):
        J0 = st.j_from_a(random_contraction(rng, 0.4))
        J1 = st.j_from_a(st.a_from_j(J0, (0.0, 0.0)))
        assert np.abs(J1 - J0).max() < 1e-12


def test_standard_structure_converts_to_zero():
    assert np.abs(st.a_from_j(st.J_ST, (0.3, -0.2j))).max() == 0.0
    assert np.abs(st.a_from_j(st.standard_j(), (0.1, 0.4))).max() == 0.0


def test_j_from_a_rejects_expansion():
    with pytest.raises(ValueError):
        st.j_from_a(np.array([[1.2, 0.0], [0.0, 0.0]]))


def test_a_from_j_rejects_non_structure():
    rng = np.random.default_rng(14)
    J = st.J_ST + 1e-2 * rng.standard_normal((4, 4))
    with pytest.raises(ValueError):
        st.a_from_j(J, (0.0, 0.0))


def test_jstructure_validates_square():
    bad = st.JStructure(lambda z, w: st.J_ST + 0.05)
    with pytest.raises(ValueError):
        bad(0.0, 0.0)


def test_conjugated_structure_has_unit_slope():
    # conjugating the standard structure by I + eps*S keeps J^2 = -I
    # exactly while producing a deformation of genuine size eps
    rng = np.random.default_rng(15)
    S = rng.standard_normal((4, 4))
    epss = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    norms = []
    for eps in epss:
        M = np.eye(4) + eps * S
        J = M @ st.J_ST @ np.linalg.inv(M)
        norms.append(np.linalg.norm(st.a_from_j(J, (0, 0)), ord=2))
    slopes = np.diff(np.log(norms)) / np.diff(np.log(epss))
    assert np.all(slopes > 0.9) and np.all(slopes < 1.05)


def test_afield_rejects_expansion():
    f = st.AField(lambda z, w: np.broadcast_to(
        np.eye(2, dtype=complex) * 1.5,
        np.broadcast(np.asarray(z), np.asarray(w)).shape + (2, 2)))
    with pytest.raises(ValueError):
        f(0.0, 0.0)


# ---- transformation law ----

def _a_const(A):
    A = np.asarray(A, dtype=complex)

    def a(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        return np.broadcast_to(A, shape + (2, 2)).copy()
    return a


def test_transform_identity_change():
    rng = np.random.default_rng(16)
    A = random_contraction(rng)
    out = st.transform_a(_a_const(A), st.identity_change(), (0.1, 0.2))
    assert np.abs(out - A).max() < 1e-15


def test_transform_linear_closed_form():
    rng = np.random.default_rng(17)
    A = random_contraction(rng, 0.2)
    C = np.array([[1.3 + 0.2j, 0.4 - 0.1j], [-0.2j, 0.9 + 0.05j]])
    out = st.transform_a(_a_const(A), st.linear_change(C), (0.3, -0.2j))
    closed = C @ A @ np.linalg.inv(np.conj(C))
    assert np.abs(out - closed).max() < 1e-13


def test_transform_pushes_tangent_pairs():
    # a vector pair (v, A conj v) is tangent to a structure-holomorphic
    # jet; its image under a holomorphic linear map must be tangent for
    # the transformed structure
    rng = np.random.default_rng(18)
    A = random_contraction(rng, 0.25)
    C = np.array([[1.1, 0.3j], [0.2, 0.8 - 0.4j]])
    out = st.transform_a(_a_const(A), st.linear_change(C), (0.0, 0.0))
    for _ in range(5):
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        lhs = C @ (A @ np.conj(v))
        rhs = out @ np.conj(C @ v)
        assert np.abs(lhs - rhs).max() < 1e-13


def _quadratic_change(c1, c2, c3):
    def fwd(z, w):
        return z + c1 * w ** 2 + c2 * z * np.conj(w), w + c3 * z ** 2

    def jz(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = 1.0 + c2 * np.conj(w)
        out[..., 0, 1] = 2.0 * c1 * w
        out[..., 1, 0] = 2.0 * c3 * z
        out[..., 1, 1] = 1.0
        return out

    def jzb(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        out[..., 0, 1] = c2 * z
        return out

    return st.CoordinateChange(fwd, jz, jzb)


def _smooth_afield():
    def a(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = 0.1 * z + 0.05 * np.conj(w)
        out[..., 0, 1] = 0.07 * w ** 2
        out[..., 1, 0] = 0.02 * np.conj(z)
        out[..., 1, 1] = 0.06 * w + 0.03 * z * np.conj(z)
        return out
    return a


def test_transform_functoriality():
    # transforming through ch1 then ch2 equals transforming once
    # through the composition, at matching source points
    ch1 = _quadratic_change(0.1 + 0.05j, 0.08j, -0.07)
    ch2 = _quadratic_change(-0.06, 0.04, 0.09 + 0.02j)
    afun = _smooth_afield()
    rng = np.random.default_rng(19)
    pts = (0.3 * (rng.standard_normal(7) + 1j * rng.standard_normal(7)),
           0.3 * (rng.standard_normal(7) + 1j * rng.standard_normal(7)))

    step1 = st.transform_field(afun, ch1)

    def reparam_fwd(z, w):
        return ch2.forward(*ch1.forward(z, w))

    def reparam_jz(z, w):
        zi, wi = ch1.forward(z, w)
        return ch2.jac_z(zi, wi)

    def reparam_jzb(z, w):
        zi, wi = ch1.forward(z, w)
        return ch2.jac_zbar(zi, wi)

    chained = st.transform_a(
        step1, st.CoordinateChange(reparam_fwd, reparam_jz, reparam_jzb),
        pts)
    composite = st.transform_a(afun, st.compose_changes(ch2, ch1), pts)
    assert np.abs(chained - composite).max() < 1e-12


def test_transform_degenerate_change_raises():
    C = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        st.transform_a(_a_const(np.zeros((2, 2))), st.linear_change(C),
                       (0.1, 0.1))


# ---- normalization along the disc z = 0 ----

def test_normalize_flat_structure_is_identity(disc):
    ch = st.normalize_along_disc(st.standard_structure(), grid=disc)
    z0, w0 = np.array([0.3 + 0.1j]), np.array([0.2 - 0.4j])
    zp, wp = ch.forward(z0, w0)
    assert np.abs(zp - z0).max() < 1e-14
    assert np.abs(wp - w0).max() < 1e-14
    r0, rZ = st.normalization_residuals(st.standard_structure(), ch,
                                        grid=disc)
    assert r0 < 1e-12 and rZ < 1e-10


def _pure_normal_derivative(dfun):
    # A = z * [[0, 0], [0, d(w)]]: the disc z = 0 stays invariant and
    # only the normal scaling equation is active
    def a(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        out[..., 1, 1] = z * dfun(w)
        return out
    return a


def test_normalize_pure_normal_derivative(disc):
    def dfun(w):
        return 0.3 * np.exp(0.4 * np.conj(w)) + 0.2 * w

    ch = st.normalize_along_disc(_pure_normal_derivative(dfun), grid=disc)
    a10 = ch.coefficients["a10"]
    b10 = ch.coefficients["b10"]
    assert np.abs(a10.interior - 1.0).max() < 1e-14
    td = ops.cauchy_green(DiscFn.from_callable(disc, dfun))
    assert np.abs(b10.interior + td.samples).max() < 1e-12
    assert np.abs(b10.boundary + td.boundary.samples).max() < 1e-12
    r0, rZ = st.normalization_residuals(_pure_normal_derivative(dfun), ch,
                                        grid=disc)
    assert r0 < 1e-12
    assert rZ < 1e-4


def _generic_structure(eps):
    def a(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        al = 0.5 * np.conj(w) + 0.3 * w ** 2
        be = 0.4 * np.exp(0.3 * np.conj(w)) - 0.2
        out[..., 0, 0] = eps * (al + z * (0.6 * w + 0.2 * np.conj(z)))
        out[..., 0, 1] = eps * z * (0.5 - 0.3 * np.conj(w) * z)
        out[..., 1, 0] = eps * (be + z * np.conj(w) * 0.7)
        out[..., 1, 1] = eps * z * (0.8 * w + 0.1)
        return out
    return a


def test_normalize_generic_small_structure(disc):
    af = _generic_structure(0.05)
    ch = st.normalize_along_disc(af, grid=disc)
    r0, rZ = st.normalization_residuals(af, ch, grid=disc)
    assert r0 < 1e-12
    assert rZ < 2e-3


def test_normalize_residual_is_second_order(disc):
    epss = [0.05, 0.02, 0.005]
    res = []
    for eps in epss:
        af = _generic_structure(eps)
        ch = st.normalize_along_disc(af, grid=disc)
        res.append(st.normalization_residuals(af, ch, grid=disc)[1])
    slopes = np.diff(np.log(res)) / np.diff(np.log(epss))
    assert np.all(slopes > 1.7) and np.all(slopes < 2.3)


def test_normalize_rejects_non_invariant_disc(disc):
    def a(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        out[..., 0, 1] = 0.1
        return out
    with pytest.raises(ValueError):
        st.normalize_along_disc(a, grid=disc)


def test_normalized_base_disc_is_pseudoholomorphic(disc):
    af = st.AField(_generic_structure(0.05))
    ch = st.normalize_along_disc(af, grid=disc)
    img = st.transform_field(af, ch)
    zf = DiscFn(disc, np.zeros_like(disc.nodes))
    wfn = DiscFn(disc, disc.nodes)
    assert st.jholo_residual(img, (zf, wfn)) < 1e-6


# ---- pseudoholomorphy residual ----

def test_jholo_flat_holomorphic_disc(disc):
    zf = DiscFn(disc, disc.nodes ** 2)
    wfn = DiscFn(disc, 3.0 * disc.nodes)
    assert st.jholo_residual(st.standard_structure(), (zf, wfn)) < 1e-10


def test_jholo_antiholomorphic_disc(disc):
    zf = DiscFn(disc, np.conj(disc.nodes))
    wfn = DiscFn(disc, np.zeros_like(disc.nodes))
    r = st.jholo_residual(st.standard_structure(), (zf, wfn))
    assert abs(r - 1.0) < 1e-10


def test_jholo_requires_grid_for_raw_samples(disc):
    with pytest.raises(ValueError):
        st.jholo_residual(st.standard_structure(),
                          (disc.nodes, disc.nodes))


# ---- dilations ----

def _ball_sample(seed=3, n=120):
    rng = np.random.default_rng(seed)
    zs = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    ws = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    keep = (np.abs(zs) <= 1) & (np.abs(ws) <= 1)
    return zs[keep], ws[keep]


def test_isotropic_dilation_linear_decay():
    af = st.block_diagonal(0.3)
    zs, ws = _ball_sample()
    deltas = np.array([0.3, 0.1, 0.03, 0.01])
    sups = [np.abs(st.dilate(af, d, mode="isotropic")(zs, ws)).max()
            for d in deltas]
    slopes = np.diff(np.log(sups)) / np.diff(np.log(deltas))
    assert np.all(np.abs(slopes - 1.0) < 0.2)
    assert sups[-1] < 0.01


def test_anisotropic_dilation_block_diagonal():
    af = st.block_diagonal(0.3)
    zs, ws = _ball_sample()
    deltas = np.array([0.3, 0.1, 0.03, 0.01])
    sups = [np.abs(st.dilate(af, d, mode="anisotropic", m=2)(zs, ws)).max()
            for d in deltas]
    slopes = np.diff(np.log(sups)) / np.diff(np.log(deltas))
    assert np.all(slopes > 0.3)
    assert sups[-1] < 0.05


def test_isotropic_dilation_second_order_family():
    af = st.diagonal_perturbation(0.3)
    zs, ws = _ball_sample()
    deltas = np.array([0.3, 0.1, 0.03])
    sups = [np.abs(st.dilate(af, d, mode="isotropic")(zs, ws)).max()
            for d in deltas]
    slopes = np.diff(np.log(sups)) / np.diff(np.log(deltas))
    assert np.all(np.abs(slopes - 2.0) < 0.1)


def test_dilate_accepts_j_structure():
    out = st.dilate(st.standard_j(), 0.5)
    assert np.abs(out(np.array([0.1 + 0.2j]), np.array([0.3]))).max() == 0.0


def test_dilate_rejects_bad_parameters():
    af = st.standard_structure()
    with pytest.raises(ValueError):
        st.dilate(af, 0.0)
    with pytest.raises(ValueError):
        st.dilate(af, -1.0)
    with pytest.raises(ValueError):
        st.dilate(af, 0.5, mode="sideways")


def test_dilate_defining_function():
    def rho(z, w):
        return np.real(z) + np.abs(w) ** 2
    r2 = st.dilate_defining(rho, 0.5)
    # delta^{-1} rho(delta Z): the quadratic part shrinks linearly
    assert abs(r2(0.2, 0.4) - (0.2 + 0.5 * 0.16)) < 1e-14


# ---- structure families ----

def test_family_lookup():
    flat = st.structure_family("standard")
    assert np.abs(flat(0.2, 0.3j)).max() == 0.0
    for name in ("diagonal-perturbation", "block-diagonal"):
        f = st.structure_family(name, eps=0.1)
        assert np.abs(f(0.3, 0.4)).max() > 0.0
    with pytest.raises(ValueError):
        st.structure_family("frobnicate")
    with pytest.raises(ValueError):
        st.structure_family("custom", entries=("z",))


def test_custom_structure_expressions():
    f = st.structure_family(
        "custom", entries=("0.1*z*conj(w)", "0", "0.2*w", "0.05*exp(z)"))
    z, w = 0.3 + 0.1j, -0.2 + 0.4j
    A = f(z, w)
    assert abs(A[0, 0] - 0.1 * z * np.conj(w)) < 1e-15
    assert A[0, 1] == 0.0
    assert abs(A[1, 0] - 0.2 * w) < 1e-15
    assert abs(A[1, 1] - 0.05 * np.exp(z)) < 1e-15
