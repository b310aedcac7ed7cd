"""Linearization of the attached-disc problem along a converged disc.

An infinitesimal perturbation Zdot of a disc Z satisfies

    dbar Zdot = Adot(Zdot) conj(d Z) + A(Z) conj(d Zdot),
    Re <grad rho, Zdot> = given on the circle,

where Adot is the derivative of the structure field along the
perturbation.  The substitution Z1 = Zdot - A conj(Zdot) turns the
equation into dbar Z1 = A1 Z1 + A2 conj(Z1) with multiplication
coefficients only, and the row vector lam turns the boundary condition
into Re(lam . Z1) = 0.  Packaging lam into the triangular matrix Lambda
and setting V = Lambda Z1 gives the standard-form problem

    dbar V = B1 V + B2 conj(V),   Re V = Gamma on the circle,  V(1) = 0,

solved by Picard iteration on the pinned Schwarz representation, or
equivalently through Neumann series for the resolvent operators.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import DiscGrid, DiscFn, BoundaryFn
from . import operators as ops
from .structures import as_structure
from .hypersurfaces import levi_determinant_along

__all__ = [
    "LinearizedCoefficients", "Perturbation", "assemble",
    "apply_linearization", "frechet_defect", "schwarz_datum", "solve_rh",
    "resolvent_apply", "resolvent_parts", "generator_basis",
    "perturbation_from_generator", "tangency_diagnostic",
    "evaluation_rank",
]


@dataclass
class LinearizedCoefficients:
    """Coefficient fields of the linearized problem along one disc.

    Matrix-valued samples carry the grid shape first and the 2x2 indices
    last; _b variants hold the boundary traces.  lam/Lambda/A1/A2 are
    None when the coefficients were built directly from B-fields.
    """

    grid: DiscGrid
    B1: np.ndarray
    B1_b: np.ndarray
    B2: np.ndarray
    B2_b: np.ndarray
    lam: Optional[np.ndarray] = None
    Lambda: Optional[np.ndarray] = None
    Lambda_b: Optional[np.ndarray] = None
    A1: Optional[np.ndarray] = None
    A2: Optional[np.ndarray] = None
    iprime: Optional[np.ndarray] = None
    iprime_b: Optional[np.ndarray] = None
    a_on_disc: Optional[np.ndarray] = None
    a_on_disc_b: Optional[np.ndarray] = None
    extension: str = "none"

    @classmethod
    def from_b_fields(cls, grid, B1, B2, B1_b=None, B2_b=None):
        """Wrap raw B-coefficient samples (testing and model problems)."""
        def trace(M):
            out = np.empty((grid.boundary.n, 2, 2), dtype=complex)
            for i in range(2):
                for j in range(2):
                    out[:, i, j] = grid.boundary_trace(M[..., i, j])
            return out

        B1 = np.asarray(B1, dtype=complex)
        B2 = np.asarray(B2, dtype=complex)
        if B1_b is None:
            B1_b = trace(B1)
        if B2_b is None:
            B2_b = trace(B2)
        return cls(grid, B1, B1_b, B2, B2_b)


@dataclass
class Perturbation:
    """A solution of the linearized problem with its certificates."""

    v: tuple
    z1: Optional[tuple]
    zdot: Optional[tuple]
    residual_pde: float
    residual_bc: float
    v_at_one: float
    iterations: int
    generator: object = None

    @property
    def z_dot(self):
        return None if self.zdot is None else self.zdot[0]

    @property
    def w_dot(self):
        return None if self.zdot is None else self.zdot[1]


def _entry_dbar(grid, M):
    out = np.empty_like(M)
    for i in range(2):
        for j in range(2):
            out[..., i, j] = grid.dbar(M[..., i, j])
    return out


def _entry_trace(grid, M):
    out = np.empty((grid.boundary.n, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[:, i, j] = grid.boundary_trace(M[..., i, j])
    return out


def _inv22(M):
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    out = np.empty_like(M)
    out[..., 0, 0] = M[..., 1, 1] / det
    out[..., 1, 1] = M[..., 0, 0] / det
    out[..., 0, 1] = -M[..., 0, 1] / det
    out[..., 1, 0] = -M[..., 1, 0] / det
    return out


def _harmonic_extension(grid, fb):
    """Interior harmonic samples matching complex boundary data."""
    bg = grid.boundary
    re = ops.schwarz(BoundaryFn(bg, np.real(fb) + 0j), grid=grid)
    im = ops.schwarz(BoundaryFn(bg, np.imag(fb) + 0j), grid=grid)
    return np.real(re.samples) + 1j * np.real(im.samples)


def _disc_arrays(disc):
    g = disc.grid
    Zi = np.stack([disc.z.samples, disc.w.samples])
    Zb = np.stack([disc.z.boundary.samples, disc.w.boundary.samples])
    dZi = np.stack([g.dz(Zi[0]), g.dz(Zi[1])])
    dZb = np.stack([g.boundary_trace(g.dz(Zi[0])),
                    g.boundary_trace(g.dz(Zi[1]))])
    return Zi, Zb, dZi, dZb


def assemble(E, structure, disc, extension="harmonic", lam_floor=1e-3):
    """Coefficients of the linearized problem along a converged disc.

    extension selects how the boundary row lam is carried into the
    interior: "harmonic" extends each coefficient harmonically,
    "ambient" evaluates the defining formula at the interior points of
    the disc.  The boundary diagnostics must not depend on the choice.
    """
    if extension not in ("harmonic", "ambient"):
        raise ValueError("extension must be 'harmonic' or 'ambient'")
    a = as_structure(structure)
    g = disc.grid
    Zi, Zb, dZi, dZb = _disc_arrays(disc)

    Ai, Azi, Azbi = a.jets(Zi[0], Zi[1])
    Ab, Azb, Azbb = a.jets(Zb[0], Zb[1])

    # conjugate-linear change of variables: coefficients of the
    # first-order system for Z1
    def a1a2(A, Az, Azb, dZc, G):
        N1 = np.einsum("...ijk,j...->...ik", Az, dZc)
        N2 = np.einsum("...ijk,j...->...ik", Azb, dZc)
        ipr = _inv22(np.eye(2) - A @ np.conj(A))
        ibar = np.conj(ipr)
        Abar = np.conj(A)
        A1 = N1 @ ipr + (N2 - G) @ ibar @ Abar
        A2 = N1 @ ipr @ A + (N2 - G) @ ibar
        return A1, A2, ipr

    Gi = _entry_dbar(g, Ai)
    Gb = _entry_trace(g, Gi)
    A1i, A2i, ipr_i = a1a2(Ai, Azi, Azbi, np.conj(dZi), Gi)
    A1b, A2b, ipr_b = a1a2(Ab, Azb, Azbb, np.conj(dZb), Gb)

    def lam_at(Z, ipr, A):
        rz, rw = E.grad(Z[0], Z[1])
        rho_z = np.stack([rz, rw], axis=-1)
        return (np.einsum("...i,...ik->...k", rho_z, ipr)
                + np.einsum("...i,...ik->...k", np.conj(rho_z),
                            np.conj(ipr) @ np.conj(A)))

    lam_b = lam_at(Zb, ipr_b, Ab)
    if extension == "ambient":
        lam_i = lam_at(Zi, ipr_i, Ai)
    else:
        lam_i = np.stack([_harmonic_extension(g, lam_b[..., 0]),
                          _harmonic_extension(g, lam_b[..., 1])], axis=-1)

    if min(np.abs(lam_i[..., 0]).min(), np.abs(lam_b[..., 0]).min()) \
            < lam_floor:
        raise ValueError("degenerate boundary coefficient: |lam_1| too "
                         "small on the disc")

    def lam_matrix(lam):
        L = np.zeros(lam.shape[:-1] + (2, 2), dtype=complex)
        L[..., 0, 0] = lam[..., 0]
        L[..., 0, 1] = lam[..., 1]
        L[..., 1, 1] = 1.0
        return L

    Li = lam_matrix(lam_i)
    Lb = lam_matrix(lam_b)
    Li_inv = _inv22(Li)
    Lb_inv = _inv22(Lb)
    dLi = _entry_dbar(g, Li)
    dLb = _entry_trace(g, dLi)

    B1i = dLi @ Li_inv + Li @ A1i @ Li_inv
    B1b = dLb @ Lb_inv + Lb @ A1b @ Lb_inv
    B2i = Li @ A2i @ np.conj(Li_inv)
    B2b = Lb @ A2b @ np.conj(Lb_inv)

    return LinearizedCoefficients(
        g, B1i, B1b, B2i, B2b, lam=lam_i, Lambda=Li, Lambda_b=Lb,
        A1=A1i, A2=A2i, iprime=ipr_i, iprime_b=ipr_b,
        a_on_disc=Ai, a_on_disc_b=Ab, extension=extension)


def apply_linearization(structure, disc, zdot_i):
    """Direct linearized operator L(Zdot) on interior samples.

    zdot_i: array (2, n_rad, n_ang).  Returns dbar Zdot
    - Adot conj(d Z) - A conj(d Zdot) with Adot the chain-rule
    derivative of the structure along the perturbation.
    """
    a = as_structure(structure)
    g = disc.grid
    Zi, _, dZi, _ = _disc_arrays(disc)
    Ai, Azi, Azbi = a.jets(Zi[0], Zi[1])
    adot = (np.einsum("...ijk,k...->...ij", Azi, zdot_i)
            + np.einsum("...ijk,k...->...ij", Azbi, np.conj(zdot_i)))
    dbar_dot = np.stack([g.dbar(zdot_i[0]), g.dbar(zdot_i[1])])
    dz_dot = np.stack([g.dz(zdot_i[0]), g.dz(zdot_i[1])])
    return (dbar_dot
            - np.einsum("...ij,j...->i...", adot, np.conj(dZi))
            - np.einsum("...ij,j...->i...", Ai, np.conj(dz_dot)))


def frechet_defect(structure, disc, zdot_i, h=1e-5):
    """Relative gap between L(Zdot) and the differenced nonlinear residual.

    The nonlinear residual R(Z) = dbar Z - A(Z) conj(d Z) is evaluated
    at Z and Z + h Zdot; the forward difference divided by h is compared
    against the assembled operator in the sup norm, relative to the
    difference's own size.
    """
    a = as_structure(structure)
    g = disc.grid
    Zi, _, _, _ = _disc_arrays(disc)

    def residual(Z):
        dZ = np.stack([g.dz(Z[0]), g.dz(Z[1])])
        dbZ = np.stack([g.dbar(Z[0]), g.dbar(Z[1])])
        A = a(Z[0], Z[1])
        return dbZ - np.einsum("...ij,j...->i...", A, np.conj(dZ))

    fd = (residual(Zi + h * zdot_i) - residual(Zi)) / h
    lin = apply_linearization(structure, disc, zdot_i)
    scale = max(np.abs(fd).max(), 1e-300)
    return float(np.abs(lin - fd).max() / scale)


def _mat_vec(M, Mb, Vi, Vb):
    return (np.einsum("...ij,j...->i...", M, Vi),
            np.einsum("...ij,j...->i...", Mb, Vb))


def _p1_pair(grid, Gi, Gb):
    bg = grid.boundary
    outs_i = np.empty_like(Gi)
    outs_b = np.empty_like(Gb)
    for c in range(2):
        pf = ops.p_transform(DiscFn(grid, Gi[c], BoundaryFn(bg, Gb[c])),
                             pinned=True)
        outs_i[c] = pf.samples
        outs_b[c] = pf.boundary.samples
    return outs_i, outs_b


def _gamma_samples(gamma, bg):
    out = np.empty((2, bg.n))
    for c in range(2):
        comp = gamma[c]
        if callable(comp):
            out[c] = np.asarray(comp(bg.theta), dtype=float)
        elif isinstance(comp, BoundaryFn):
            out[c] = np.real(comp.samples)
        elif np.isscalar(comp):
            out[c] = float(comp)
        else:
            out[c] = np.asarray(comp, dtype=float)
    return out


def _finish(coeffs, Vi, Vb, gam, it):
    g = coeffs.grid
    bg = g.boundary
    rhs_i, _ = _mat_vec(coeffs.B1, coeffs.B1_b, Vi, Vb)
    rhs2_i, _ = _mat_vec(coeffs.B2, coeffs.B2_b, np.conj(Vi), np.conj(Vb))
    pde = max(np.abs(g.dbar(Vi[c]) - rhs_i[c] - rhs2_i[c]).max()
              for c in range(2))
    bc = float(np.abs(np.real(Vb) - gam).max())
    v1 = float(np.abs(Vb[:, 0]).max())

    v = (DiscFn(g, Vi[0], BoundaryFn(bg, Vb[0])),
         DiscFn(g, Vi[1], BoundaryFn(bg, Vb[1])))
    z1 = zdot = None
    if coeffs.Lambda is not None:
        Li_inv = _inv22(coeffs.Lambda)
        Lb_inv = _inv22(coeffs.Lambda_b)
        Z1i, Z1b = _mat_vec(Li_inv, Lb_inv, Vi, Vb)
        z1 = (DiscFn(g, Z1i[0], BoundaryFn(bg, Z1b[0])),
              DiscFn(g, Z1i[1], BoundaryFn(bg, Z1b[1])))
        rhs = Z1i + np.einsum("...ij,j...->i...", coeffs.a_on_disc,
                              np.conj(Z1i))
        rhs_b = Z1b + np.einsum("...ij,j...->i...", coeffs.a_on_disc_b,
                                np.conj(Z1b))
        Zdi = np.einsum("...ij,j...->i...", coeffs.iprime, rhs)
        Zdb = np.einsum("...ij,j...->i...", coeffs.iprime_b, rhs_b)
        zdot = (DiscFn(g, Zdi[0], BoundaryFn(bg, Zdb[0])),
                DiscFn(g, Zdi[1], BoundaryFn(bg, Zdb[1])))
    return Perturbation(v, z1, zdot, float(pde), bc, v1, it)


def solve_rh(coeffs, gamma, tol=1e-13, max_iter=200,
             pde_tol=1e-5, bc_tol=1e-6, one_tol=1e-10):
    """Solve dbar V = B1 V + B2 conj(V), Re V = Gamma, V(1) = 0.

    gamma: pair of real boundary data (arrays on the boundary grid,
    callables of the angle, or scalars), each vanishing at angle 0.
    Picard iteration on the pinned Schwarz representation; divergence is
    reported with the last step size.
    """
    g = coeffs.grid
    bg = g.boundary
    gam = _gamma_samples(gamma, bg)
    if np.abs(gam[:, 0]).max() > 1e-10:
        raise ValueError("gamma must vanish at the boundary point 1")

    V0i = np.empty((2,) + g.nodes.shape, dtype=complex)
    V0b = np.empty((2, bg.n), dtype=complex)
    for c in range(2):
        s = ops.schwarz(BoundaryFn(bg, gam[c] + 0j), pinned=True, grid=g)
        V0i[c] = s.samples
        V0b[c] = s.boundary.samples

    Vi, Vb = V0i.copy(), V0b.copy()
    step_prev = np.inf
    for it in range(1, max_iter + 1):
        Gi, Gb = _mat_vec(coeffs.B1, coeffs.B1_b, Vi, Vb)
        G2i, G2b = _mat_vec(coeffs.B2, coeffs.B2_b, np.conj(Vi),
                            np.conj(Vb))
        Pi, Pb = _p1_pair(g, Gi + G2i, Gb + G2b)
        Ni, Nb = V0i + Pi, V0b + Pb
        step = max(np.abs(Ni - Vi).max(), np.abs(Nb - Vb).max())
        if not np.isfinite(step) or step > 1e3:
            raise ValueError("linearized iteration diverged: step %.3e"
                             % step)
        Vi, Vb = Ni, Nb
        if step < tol:
            break
        if step > 2.0 * step_prev and step_prev < 1e-11:
            break
        step_prev = step
    else:
        raise ValueError("linearized iteration did not contract: last "
                         "step %.3e" % step)

    pert = _finish(coeffs, Vi, Vb, gam, it)
    if pert.residual_pde > pde_tol or pert.residual_bc > bc_tol \
            or pert.v_at_one > one_tol:
        raise ValueError(
            "linearized solution failed its residual checks: pde %.3e "
            "bc %.3e at-one %.3e" % (pert.residual_pde, pert.residual_bc,
                                     pert.v_at_one))
    return pert


def _neumann(apply_op, y_i, y_b, tol, max_iter):
    xi, xb = y_i.copy(), y_b.copy()
    ti, tb = y_i, y_b
    for _ in range(max_iter):
        ti, tb = apply_op(ti, tb)
        xi = xi + ti
        xb = xb + tb
        if max(np.abs(ti).max(), np.abs(tb).max()) < tol:
            return xi, xb
    raise ValueError("resolvent Neumann series did not converge")


def resolvent_parts(coeffs, V0i, V0b, tol=1e-13, max_iter=200):
    """The two resolvent corrections (R1 V0, R2 conj(V0)).

    Realized as nested Neumann series for the block elimination of the
    conjugate half of the fixed-point system.
    """
    g = coeffs.grid

    def L1(xi, xb):
        gi, gb = _mat_vec(coeffs.B1, coeffs.B1_b, xi, xb)
        return _p1_pair(g, gi, gb)

    def L2(xi, xb):
        gi, gb = _mat_vec(coeffs.B2, coeffs.B2_b, xi, xb)
        return _p1_pair(g, gi, gb)

    def L1c(xi, xb):
        yi, yb = L1(np.conj(xi), np.conj(xb))
        return np.conj(yi), np.conj(yb)

    def L2c(xi, xb):
        yi, yb = L2(np.conj(xi), np.conj(xb))
        return np.conj(yi), np.conj(yb)

    def inner_inv(xi, xb):
        return _neumann(L1c, xi, xb, tol, max_iter)

    def m_op(xi, xb):
        ai, ab = L1(xi, xb)
        bi, bb = L2c(xi, xb)
        ci, cb = inner_inv(bi, bb)
        di, db = L2(ci, cb)
        return ai + di, ab + db

    def m_inv(xi, xb):
        return _neumann(m_op, xi, xb, tol, max_iter)

    r1i, r1b = m_inv(V0i, V0b)
    r1i, r1b = r1i - V0i, r1b - V0b
    ci, cb = inner_inv(np.conj(V0i), np.conj(V0b))
    di, db = L2(ci, cb)
    r2i, r2b = m_inv(di, db)
    return (r1i, r1b), (r2i, r2b)


def schwarz_datum(grid, gamma):
    """Pinned holomorphic seed V0 from real boundary data: V0 = 2 K1 Gamma."""
    bg = grid.boundary
    gam = _gamma_samples(gamma, bg)
    if np.abs(gam[:, 0]).max() > 1e-10:
        raise ValueError("gamma must vanish at the boundary point 1")
    v0 = []
    for c in range(2):
        v0.append(ops.schwarz(BoundaryFn(bg, gam[c] + 0j), pinned=True,
                              grid=grid))
    return tuple(v0)


def _v0_arrays(coeffs, v0):
    g = coeffs.grid
    V0i = np.stack([np.asarray(v0[0].samples, dtype=complex),
                    np.asarray(v0[1].samples, dtype=complex)])
    V0b = np.stack([np.asarray(v0[0].boundary.samples, dtype=complex),
                    np.asarray(v0[1].boundary.samples, dtype=complex)])
    if V0i.shape != (2,) + g.nodes.shape:
        raise ValueError("seed samples do not match the coefficient grid")
    return V0i, V0b


def resolvent_apply(coeffs, v0, tol=1e-13, max_iter=200, pde_tol=1e-5,
                    bc_tol=1e-6, one_tol=1e-10):
    """Solve the standard-form problem through the resolvent series.

    v0: DiscFn pair, the holomorphic seed carrying the boundary data
    (build one with schwarz_datum).  Independent of solve_rh's Picard
    path; the two must agree to quadrature accuracy.
    """
    V0i, V0b = _v0_arrays(coeffs, v0)
    (r1i, r1b), (r2i, r2b) = resolvent_parts(coeffs, V0i, V0b, tol,
                                             max_iter)
    Vi = V0i + r1i + r2i
    Vb = V0b + r1b + r2b
    pert = _finish(coeffs, Vi, Vb, np.real(V0b), 0)
    if pert.residual_pde > pde_tol or pert.residual_bc > bc_tol \
            or pert.v_at_one > one_tol:
        raise ValueError(
            "linearized solution failed its residual checks: pde %.3e "
            "bc %.3e at-one %.3e" % (pert.residual_pde, pert.residual_bc,
                                     pert.v_at_one))
    return pert


def generator_basis(n_generators=16):
    """Holomorphic generators vanishing at 1: (z-1) z^k and i (z-1) z^k."""
    gens = []
    for k in range(n_generators):
        gens.append(lambda z, k=k: (z - 1.0) * z ** k)
        gens.append(lambda z, k=k: 1j * (z - 1.0) * z ** k)
    return gens


def _d1_at_one(grid, interior, bnd):
    """One-sided radial derivative at the boundary point 1."""
    def at(r):
        if r >= 1.0:
            return bnd[0]
        return grid.eval_at(interior, np.array([r + 0.0j]))[0]

    f = [at(r) for r in (1.0, 0.975, 0.95, 0.9)]
    d_fine = (3.0 * f[0] - 4.0 * f[1] + f[2]) / 0.05
    d_coarse = (3.0 * f[0] - 4.0 * f[2] + f[3]) / 0.1
    return (4.0 * d_fine - d_coarse) / 3.0


def perturbation_from_generator(coeffs, phi, **solve_kw):
    """Linearized solution whose free datum is the generator phi."""
    bg = coeffs.grid.boundary
    gam = (np.zeros(bg.n), np.real(phi(bg.nodes)))
    pert = solve_rh(coeffs, gam, **solve_kw)
    pert.generator = phi
    return pert


# diagnostics tolerate residuals well below their decision scale but
# above the strict per-solve defaults (broad-spectrum generators on the
# default grid carry quadrature error near 1e-5)
_DIAG_KW = dict(pde_tol=2e-4, bc_tol=2e-5)


def tangency_diagnostic(E, structure, disc, generators=None,
                        extension="harmonic", tangent_tol=1e-4,
                        levi_tol=1e-3, coeffs=None):
    """Transversality report for the generator family along one disc.

    For each generator the linearized solution is computed and the
    radial derivative of its first component at the boundary point 1 is
    recorded; the Levi determinant is traced along the attachment circle
    for comparison.  The report states whether the two verdicts
    (all generators tangential / determinant small) agree.
    """
    if coeffs is None:
        coeffs = assemble(E, structure, disc, extension=extension)
    if generators is None:
        generators = generator_basis()
    g = disc.grid
    d1 = []
    scale = 1.0
    for phi in generators:
        pert = perturbation_from_generator(coeffs, phi, **_DIAG_KW)
        zd = pert.zdot[0]
        d1.append(complex(_d1_at_one(g, zd.samples, zd.boundary.samples)))
        scale = max(scale, float(np.abs(zd.samples).max()))
    d1 = np.array(d1)
    max_d1 = float(np.abs(d1).max())
    tangential = max_d1 <= tangent_tol

    nb = g.boundary.n
    sel = np.arange(0, nb, max(1, nb // 64))
    Zb = np.stack([disc.z.boundary.samples, disc.w.boundary.samples])
    trace = levi_determinant_along(E, Zb[0][sel], Zb[1][sel])
    levi_sup = float(np.abs(trace).max())

    mu = ops.MuWeight().disc_fn(g)
    func = coeffs.B1[..., 0, 1] + np.conj(coeffs.B2[..., 0, 1]) \
        * mu.samples
    func_b = coeffs.B1_b[..., 0, 1] + np.conj(coeffs.B2_b[..., 0, 1]) \
        * mu.boundary.samples
    tf = ops.cauchy_green(DiscFn(g, func, BoundaryFn(g.boundary, func_b)))
    functional_sup = float(np.abs(tf.boundary.samples).max())

    disc_scale = float(max(np.abs(disc.z.samples).max(),
                           np.abs(disc.w.samples).max(),
                           np.abs(disc.z.boundary.samples).max(),
                           np.abs(disc.w.boundary.samples).max()))
    return {
        "d1_zdot": [[c.real, c.imag] for c in d1],
        "max_d1_zdot": max_d1,
        "scale": scale,
        "disc_scale": disc_scale,
        "tangential": bool(tangential),
        "levi_trace": trace.tolist(),
        "levi_sup": levi_sup,
        "levi_small": bool(levi_sup <= levi_tol),
        "consistent": bool(tangential == (levi_sup <= levi_tol)),
        "functional_sup": functional_sup,
    }


def evaluation_rank(E, structure, disc, zeta0=-1.0 + 0.0j,
                    generators=None, extension="harmonic",
                    rank_tol=1e-6, coeffs=None):
    """Rank of the generator-to-value map Zdot -> Zdot(zeta0).

    Assembles the real-linear map from the generator family to C^2 at a
    boundary point away from 1 and returns its numerical rank, singular
    values, raw values, and the per-generator tangency residuals
    rho_z zdot + rho_w wdot at zeta0.
    """
    zeta0 = complex(zeta0)
    if abs(abs(zeta0) - 1.0) > 1e-12:
        raise ValueError("evaluation point must lie on the circle")
    if abs(zeta0 - 1.0) < 0.1:
        raise ValueError("evaluation point too close to 1")
    if generators is None:
        generators = generator_basis()
    if len(generators) < 8:
        raise ValueError("generator basis too small (need at least 8)")
    if coeffs is None:
        coeffs = assemble(E, structure, disc, extension=extension)
    bg = disc.grid.boundary

    vals = []
    for phi in generators:
        pert = perturbation_from_generator(coeffs, phi, **_DIAG_KW)
        zd = complex(BoundaryFn(bg, pert.zdot[0].boundary.samples)(
            np.array([zeta0]))[0])
        wd = complex(BoundaryFn(bg, pert.zdot[1].boundary.samples)(
            np.array([zeta0]))[0])
        vals.append((zd, wd))
    vals = np.array(vals)

    M = np.empty((4, len(vals)))
    M[0] = vals[:, 0].real
    M[1] = vals[:, 0].imag
    M[2] = vals[:, 1].real
    M[3] = vals[:, 1].imag
    svals = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(svals > rank_tol * svals[0])) if svals[0] > 0 else 0

    z0 = complex(BoundaryFn(bg, disc.z.boundary.samples)(
        np.array([zeta0]))[0])
    w0 = complex(BoundaryFn(bg, disc.w.boundary.samples)(
        np.array([zeta0]))[0])
    rz, rw = E.grad(z0, w0)
    tang = np.abs(rz * vals[:, 0] + rw * vals[:, 1])

    return {
        "rank": rank,
        "singular_values": svals.tolist(),
        "values": vals,
        "tangency_residuals": tang.tolist(),
        "point": [zeta0.real, zeta0.imag],
    }
