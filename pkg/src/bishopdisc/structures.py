"""Almost complex structures on domains in C^2.

Two encodings: a real 4x4 field J with J^2 = -I acting on
(Re z, Im z, Re w, Im w), and the complex 2x2 field A of the equivalent
anti-linear deformation, related by

    A(Z) v = (J_st + J(Z))^{-1} (J_st - J(Z)) (conj v).

The A-field is canonical here; J-fields are converted on ingestion.
All structure callables are vectorized: they accept broadcasting arrays
(z, w) and return arrays with trailing matrix axes (..., 2, 2).

The coordinate-change transformation law, the normalization of a
structure along the disc z = 0 (Vekua-type integral equations in the
w-variable), and isotropic/non-isotropic dilation pushforwards live
here as well.
"""
from __future__ import annotations

import numpy as np

from .grid import DiscFn, DiscGrid, Point2C
from . import operators as ops


J_ST = np.array([[0.0, -1.0, 0.0, 0.0],
                 [1.0, 0.0, 0.0, 0.0],
                 [0.0, 0.0, 0.0, -1.0],
                 [0.0, 0.0, 1.0, 0.0]])


def real_vector(z, w):
    """(z, w) complex pair -> real 4-vector components, stacked last."""
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    return np.stack([z.real, z.imag, w.real, w.imag], axis=-1)


def complex_pair(x):
    """Real 4-vector (last axis) -> complex pair (z, w)."""
    x = np.asarray(x, dtype=float)
    return x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]


def _point(Z):
    if isinstance(Z, Point2C):
        return Z.z, Z.w
    z, w = Z
    return z, w


class JStructure:
    """Real 4x4 structure field with J(Z)^2 = -I.

    j_field maps (z, w) arrays to (..., 4, 4) real arrays.
    """

    def __init__(self, j_field):
        self.j_field = j_field

    def __call__(self, z, w):
        J = np.asarray(self.j_field(z, w), dtype=float)
        JJ = J @ J
        eye = np.eye(4)
        if np.abs(JJ + eye).max() > 1e-10:
            raise ValueError("field is not an almost complex structure: "
                             "J^2 != -I")
        return J


def standard_j():
    return JStructure(lambda z, w: np.broadcast_to(
        J_ST, np.broadcast(np.asarray(z), np.asarray(w)).shape + (4, 4)
    ).copy())


class AField:
    """Complex 2x2 structure field with ||A(Z)|| < 1.

    Derivative fields a_z, a_zbar (each (..., 2, 2, 2), last axis the
    coordinate z, w being differentiated against) come from analytic
    callables when supplied, else central differences of step fd_step.
    """

    def __init__(self, a, a_z=None, a_zbar=None, fd_step=1e-5):
        self._a = a
        self._a_z = a_z
        self._a_zbar = a_zbar
        self.fd_step = fd_step

    def __call__(self, z, w):
        A = np.asarray(self._a(z, w), dtype=np.complex128)
        norms = np.linalg.norm(A, ord=2, axis=(-2, -1))
        if np.any(norms >= 1.0):
            raise ValueError("structure too far from standard: ||A|| >= 1")
        return A

    def _fd_jets(self, z, w):
        h = self.fd_step
        a = self._a

        def wirtinger(fp, fm, fip, fim):
            dx = (fp - fm) / (2.0 * h)
            dy = (fip - fim) / (2.0 * h)
            return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)

        dz, dzb = wirtinger(a(z + h, w), a(z - h, w),
                            a(z + 1j * h, w), a(z - 1j * h, w))
        dw, dwb = wirtinger(a(z, w + h), a(z, w - h),
                            a(z, w + 1j * h), a(z, w - 1j * h))
        Az = np.stack([dz, dw], axis=-1)
        Azbar = np.stack([dzb, dwb], axis=-1)
        return Az, Azbar

    def jets(self, z, w):
        """(A, A_Z, A_Zbar) with derivative index last: 0 = z, 1 = w."""
        A = self(z, w)
        if self._a_z is not None and self._a_zbar is not None:
            return (A, np.asarray(self._a_z(z, w), dtype=np.complex128),
                    np.asarray(self._a_zbar(z, w), dtype=np.complex128))
        Az, Azbar = self._fd_jets(z, w)
        return A, Az, Azbar


def standard_structure():
    """A = 0: the integrable flat structure."""
    def a(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        return np.zeros(shape + (2, 2), dtype=np.complex128)
    return AField(a, a_z=lambda z, w: np.zeros(
        np.broadcast(np.asarray(z), np.asarray(w)).shape + (2, 2, 2),
        dtype=np.complex128),
        a_zbar=lambda z, w: np.zeros(
        np.broadcast(np.asarray(z), np.asarray(w)).shape + (2, 2, 2),
        dtype=np.complex128))


def diagonal_perturbation(eps):
    """Normalized diagonal deformation: entries quadratic at the origin.

    Vanishes to second order, so it is its own normalization along any
    disc through 0 up to the stated tolerances.
    """
    def a(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=np.complex128)
        out[..., 0, 0] = eps * z * w
        out[..., 1, 1] = eps * w ** 2
        return out
    return AField(a)


def block_diagonal(eps):
    """Diagonal A whose tangent entry vanishes on the disc z = 0.

    The matching J is block diagonal; the normal entry scales linearly
    under the non-isotropic weight and the tangent entry carries the
    half power, giving the m = 2 convergence rate.
    """
    def a(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=np.complex128)
        out[..., 0, 0] = eps * (z + 0.5 * w)
        out[..., 1, 1] = eps * z
        return out
    return AField(a)


_EXPR_NAMES = {"conj": np.conj, "exp": np.exp, "cos": np.cos, "sin": np.sin,
               "abs": np.abs, "sqrt": np.sqrt, "re": np.real, "im": np.imag,
               "pi": np.pi, "j": 1j}


def custom_structure(e11, e12, e21, e22):
    """A-field from four expression strings in the variables z, w."""
    codes = [compile(e, "<structure>", "eval") for e in (e11, e12, e21, e22)]

    def a(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        env = dict(_EXPR_NAMES, z=z, w=w)
        out = np.zeros(z.shape + (2, 2), dtype=np.complex128)
        for idx, code in enumerate(codes):
            val = eval(code, {"__builtins__": {}}, env)
            out[..., idx // 2, idx % 2] = val
        return out
    return AField(a)


def structure_family(name, eps=0.0, entries=None):
    """Structure lookup used by configuration files."""
    if name == "standard":
        return standard_structure()
    if name == "diagonal-perturbation":
        return diagonal_perturbation(eps)
    if name == "block-diagonal":
        return block_diagonal(eps)
    if name == "custom":
        if entries is None or len(entries) != 4:
            raise ValueError("custom structure needs 4 entry expressions")
        return custom_structure(*entries)
    raise ValueError("unknown structure family: %r" % name)


def as_structure(field):
    """Coerce an AField, JStructure, or plain callable into an AField."""
    if isinstance(field, AField):
        return field
    if isinstance(field, JStructure):
        def a(z, w):
            z = np.asarray(z, dtype=np.complex128)
            w = np.asarray(w, dtype=np.complex128)
            z, w = np.broadcast_arrays(z, w)
            out = np.empty(z.shape + (2, 2), dtype=np.complex128)
            for idx in np.ndindex(z.shape):
                out[idx] = a_from_j(field, (z[idx], w[idx]))
            return out
        return AField(a)
    return AField(field)


# ---- pointwise conversions ----

def _q_matrix(A):
    """Real 4x4 of the anti-linear map v -> A conj(v)."""
    A = np.asarray(A, dtype=np.complex128)
    cols = []
    for basis in ((1.0, 0.0), (-1j, 0.0), (0.0, 1.0), (0.0, -1j)):
        v = A @ np.array(basis, dtype=np.complex128)
        cols.append([v[0].real, v[0].imag, v[1].real, v[1].imag])
    return np.array(cols).T


def a_from_j(J, Z):
    """Complex 2x2 matrix of the structure at the point Z.

    Raises when J_st + J(Z) is singular (structure too far from
    standard) or when the resulting real map fails to be anti-linear
    (input was not an almost complex structure).
    """
    z, w = _point(Z)
    Jm = np.asarray(J(z, w) if callable(J) else J, dtype=float)
    if Jm.shape != (4, 4):
        raise ValueError("expected a single 4x4 matrix")
    try:
        M = np.linalg.solve(J_ST + Jm, J_ST - Jm)
    except np.linalg.LinAlgError:
        raise ValueError("structure too far from standard: "
                         "J_st + J singular")
    skew = M @ J_ST + J_ST @ M
    if np.abs(skew).max() > 1e-8 * max(1.0, np.abs(M).max()):
        raise ValueError("map is not anti-linear; J is not an almost "
                         "complex structure compatible with conversion")
    c1z, c1w = complex_pair(M @ np.array([1.0, 0.0, 0.0, 0.0]))
    c2z, c2w = complex_pair(M @ np.array([0.0, 0.0, 1.0, 0.0]))
    return np.array([[c1z, c2z], [c1w, c2w]], dtype=np.complex128)


def j_from_a(A):
    """Real 4x4 structure matrix from the complex 2x2 encoding."""
    A = np.asarray(A, dtype=np.complex128)
    if np.linalg.norm(A, ord=2) >= 1.0:
        raise ValueError("invalid structure: ||A|| >= 1")
    Q = _q_matrix(A)
    eye = np.eye(4)
    J = J_ST @ (eye - Q) @ np.linalg.inv(eye + Q)
    return J


# ---- coordinate changes ----

class CoordinateChange:
    """Diffeomorphism Z -> Z' with complex jacobian fields.

    forward(z, w) -> (z', w'); jac_z and jac_zbar map (z, w) to
    (..., 2, 2) holomorphic/anti-holomorphic derivative blocks.
    """

    def __init__(self, forward, jac_z, jac_zbar):
        self.forward = forward
        self.jac_z = jac_z
        self.jac_zbar = jac_zbar


def identity_change():
    def fwd(z, w):
        return z, w

    def jz(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        return np.broadcast_to(np.eye(2, dtype=np.complex128),
                               shape + (2, 2)).copy()

    def jzb(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        return np.zeros(shape + (2, 2), dtype=np.complex128)

    return CoordinateChange(fwd, jz, jzb)


def linear_change(C):
    """Z' = C Z for a constant complex 2x2 matrix C."""
    C = np.asarray(C, dtype=np.complex128)

    def fwd(z, w):
        zp = C[0, 0] * z + C[0, 1] * w
        wp = C[1, 0] * z + C[1, 1] * w
        return zp, wp

    def jz(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        return np.broadcast_to(C, shape + (2, 2)).copy()

    def jzb(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        return np.zeros(shape + (2, 2), dtype=np.complex128)

    return CoordinateChange(fwd, jz, jzb)


def compose_changes(outer, inner):
    """The change Z -> outer(inner(Z)) with chain-rule jacobians."""
    def fwd(z, w):
        return outer.forward(*inner.forward(z, w))

    def jz(z, w):
        zi, wi = inner.forward(z, w)
        return (outer.jac_z(zi, wi) @ inner.jac_z(z, w)
                + outer.jac_zbar(zi, wi) @ np.conj(inner.jac_zbar(z, w)))

    def jzb(z, w):
        zi, wi = inner.forward(z, w)
        return (outer.jac_z(zi, wi) @ inner.jac_zbar(z, w)
                + outer.jac_zbar(zi, wi) @ np.conj(inner.jac_z(z, w)))

    return CoordinateChange(fwd, jz, jzb)


def transform_a(a_field, change, Z):
    """A' at the image of Z under the change.

    A'(Z') = (Z'_Z A + Z'_Zbar)(conj(Z'_Z) + conj(Z'_Zbar) A)^{-1},
    everything evaluated at the source point Z; the result is the
    structure matrix attached to Z' = change.forward(Z).
    """
    z, w = _point(Z)
    A = a_field(z, w) if callable(a_field) else np.asarray(a_field)
    Jz = change.jac_z(z, w)
    Jzb = change.jac_zbar(z, w)
    num = Jz @ A + Jzb
    den = np.conj(Jz) + np.conj(Jzb) @ A
    try:
        # num @ den^{-1} via the transposed system
        X = np.linalg.solve(np.swapaxes(den, -1, -2),
                            np.swapaxes(num, -1, -2))
    except np.linalg.LinAlgError:
        raise ValueError("degenerate coordinate change at the queried "
                         "point")
    return np.swapaxes(X, -1, -2)


def transform_field(a_field, change):
    """The transformed structure, parameterized by source coordinates.

    Returns an AField whose value at Z is A' at change.forward(Z).
    """
    def a(z, w):
        return transform_a(a_field, change,
                           (np.asarray(z, dtype=np.complex128),
                            np.asarray(w, dtype=np.complex128)))
    return AField(a)


# ---- normalization along the disc z = 0 ----

class _WFun:
    """A function of w sampled on a DiscGrid, evaluable off-grid."""

    def __init__(self, grid, interior, boundary):
        self.grid = grid
        self.interior = interior
        self.boundary = boundary

    @classmethod
    def constant(cls, grid, value):
        return cls(grid,
                   np.full((grid.n_rad, grid.n_ang), value, np.complex128),
                   np.full(grid.boundary.n, value, np.complex128))

    @classmethod
    def from_discfn(cls, f: DiscFn):
        return cls(f.grid, f.samples, f.boundary_or_trace())

    def d_w(self):
        # boundary values of the derivative come from the interior
        # interpolant; the angular derivative of the trace alone cannot
        # separate the two Wirtinger parts
        d = self.grid.dz(self.interior)
        return _WFun(self.grid, d, self.grid.boundary_trace(d))

    def d_wbar(self):
        d = self.grid.dbar(self.interior)
        return _WFun(self.grid, d, self.grid.boundary_trace(d))

    def __call__(self, w):
        w = np.asarray(w, dtype=np.complex128)
        flat = w.ravel()
        out = np.empty(flat.shape, dtype=np.complex128)
        on_b = np.abs(np.abs(flat) - 1.0) < 1e-13
        if on_b.any():
            out[on_b] = self.grid.boundary.eval(self.boundary, flat[on_b])
        if (~on_b).any():
            out[~on_b] = self.grid.eval_at(self.interior, flat[~on_b])
        return out.reshape(w.shape)


def normalize_along_disc(a_field, grid=None, pre_tol=1e-8):
    """Quadratic-in-(z, zbar) change flattening A along the disc z = 0.

    Requires the disc zeta -> (0, zeta) to be a pseudoholomorphic curve
    of the structure: the second column of A(0, w) must vanish.  The
    six coefficient functions of w come from two algebraic relations
    killing A'(0, w) and two Vekua-type integral equations (solved with
    the area transform) killing A'_z(0, w); the multiplicative constant
    of the homogeneous Vekua solution is fixed so the z-scaling at
    w = 0 is exactly 1.
    """
    if grid is None:
        grid = DiscGrid(64, 128)
    a_field = as_structure(a_field)

    zeros = np.zeros_like(grid.nodes)
    A0, Az0, _ = a_field.jets(zeros, grid.nodes)
    zeros_b = np.zeros_like(grid.boundary.nodes)
    A0b, Az0b, _ = a_field.jets(zeros_b, grid.boundary.nodes)
    col2 = max(np.abs(A0[..., :, 1]).max(), np.abs(A0b[..., :, 1]).max())
    if col2 > pre_tol:
        raise ValueError("the disc z = 0 is not pseudoholomorphic for "
                         "this structure (|A(0,w) col 2| = %.2e)" % col2)

    def wf(interior, boundary):
        return _WFun(grid, interior, boundary)

    alpha = wf(A0[..., 0, 0], A0b[..., 0, 0])
    beta = wf(A0[..., 1, 0], A0b[..., 1, 0])
    # entries of A_z(0, w); the z-derivative index is the last axis
    at11 = wf(Az0[..., 0, 0, 0], Az0b[..., 0, 0, 0])
    bt12 = wf(Az0[..., 0, 1, 0], Az0b[..., 0, 1, 0])
    gt21 = wf(Az0[..., 1, 0, 0], Az0b[..., 1, 0, 0])
    dt22 = wf(Az0[..., 1, 1, 0], Az0b[..., 1, 1, 0])

    t_beta = ops.cauchy_green(DiscFn(grid, bt12.interior), grid=grid)
    a10_i = np.exp(-t_beta.samples)
    a10_b = np.exp(-t_beta.boundary.samples)
    # scale the homogeneous solution so a10(0) = 1
    t0 = ops.cauchy_green(DiscFn(grid, bt12.interior),
                          targets=np.array([0.0 + 0.0j]))[0]
    scale = np.exp(t0)
    a10 = wf(scale * a10_i, scale * a10_b)
    rhs = DiscFn(grid, dt22.interior / a10.interior)
    t_rhs = ops.cauchy_green(rhs, grid=grid)
    b10 = wf(-a10.interior * t_rhs.samples,
             -a10.boundary * t_rhs.boundary.samples)

    a01 = wf(-alpha.interior * a10.interior,
             -alpha.boundary * a10.boundary)
    b01 = wf(-alpha.interior * b10.interior - beta.interior,
             -alpha.boundary * b10.boundary - beta.boundary)
    a11 = wf(-a10.interior * at11.interior,
             -a10.boundary * at11.boundary)
    b11 = wf(-(b10.interior * at11.interior + gt21.interior),
             -(b10.boundary * at11.boundary + gt21.boundary))

    coeffs = {"a10": a10, "a01": a01, "a11": a11,
              "b10": b10, "b01": b01, "b11": b11}
    derivs = {}
    for name, c in coeffs.items():
        derivs[name + "_w"] = c.d_w()
        derivs[name + "_wb"] = c.d_wbar()

    def fwd(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        a10v, a01v, a11v = (coeffs["a10"](w), coeffs["a01"](w),
                            coeffs["a11"](w))
        b10v, b01v, b11v = (coeffs["b10"](w), coeffs["b01"](w),
                            coeffs["b11"](w))
        zb = np.conj(z)
        zp = a10v * z + a01v * zb + a11v * z * zb
        wp = w + b10v * z + b01v * zb + b11v * z * zb
        return zp, wp

    def jz(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        zb = np.conj(z)
        out = np.empty(z.shape + (2, 2), dtype=np.complex128)
        out[..., 0, 0] = coeffs["a10"](w) + coeffs["a11"](w) * zb
        out[..., 0, 1] = (derivs["a10_w"](w) * z + derivs["a01_w"](w) * zb
                          + derivs["a11_w"](w) * z * zb)
        out[..., 1, 0] = coeffs["b10"](w) + coeffs["b11"](w) * zb
        out[..., 1, 1] = 1.0 + (derivs["b10_w"](w) * z
                                + derivs["b01_w"](w) * zb
                                + derivs["b11_w"](w) * z * zb)
        return out

    def jzb(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        zb = np.conj(z)
        out = np.empty(z.shape + (2, 2), dtype=np.complex128)
        out[..., 0, 0] = coeffs["a01"](w) + coeffs["a11"](w) * z
        out[..., 0, 1] = (derivs["a10_wb"](w) * z + derivs["a01_wb"](w) * zb
                          + derivs["a11_wb"](w) * z * zb)
        out[..., 1, 0] = coeffs["b01"](w) + coeffs["b11"](w) * z
        out[..., 1, 1] = (derivs["b10_wb"](w) * z + derivs["b01_wb"](w) * zb
                          + derivs["b11_wb"](w) * z * zb)
        return out

    change = CoordinateChange(fwd, jz, jzb)
    change.coefficients = coeffs
    return change


def _entrywise(op, F):
    cols = [[op(F[..., i, j]) for j in range(2)] for i in range(2)]
    return np.stack([np.stack(row, axis=-1) for row in cols], axis=-2)


def normalization_residuals(a_field, change, grid=None, n_sample=16,
                            fd_step=1e-5):
    """(sup |A'(0,zeta)|, sup |A'_Z(0,zeta)|) over the disc z = 0.

    A'_Z is the holomorphic derivative pair (d/dz', d/dw').  The disc
    is invariant under the change, so the w-derivative is the spectral
    derivative of the on-grid restriction; probing w off the grid would
    leave the closed disc at boundary points and spoil the coefficient
    identities.  The z-derivative comes from z-probes (which keep w
    fixed) resolved through the chain-rule system at each sample point.
    """
    if grid is None:
        grid = DiscGrid(64, 128)
    a_field = as_structure(a_field)

    zeros_g = np.zeros_like(grid.nodes)
    F = transform_a(a_field, change, (zeros_g, grid.nodes))
    zeros_b = np.zeros_like(grid.boundary.nodes)
    Fb = transform_a(a_field, change, (zeros_b, grid.boundary.nodes))
    r0 = max(np.abs(F).max(), np.abs(Fb).max())

    gw_g = _entrywise(grid.dz, F)
    gwb_g = _entrywise(grid.dbar, F)
    rW = max(np.abs(gw_g).max(), np.abs(gwb_g).max())

    bstep = max(1, grid.boundary.n // n_sample)
    astep = max(1, grid.n_ang // n_sample)
    mid = grid.n_rad // 2
    ws = np.concatenate([grid.boundary.nodes[::bstep],
                         grid.nodes[mid, ::astep]])
    gw_s = np.concatenate([_entrywise(grid.boundary_trace, gw_g)[::bstep],
                           gw_g[mid, ::astep]], axis=0)
    gwb_s = np.concatenate([_entrywise(grid.boundary_trace, gwb_g)[::bstep],
                            gwb_g[mid, ::astep]], axis=0)
    zs = np.zeros_like(ws)
    h = fd_step
    gz, gzb = _wirtinger_pair(
        lambda t: transform_a(a_field, change, (zs + t, ws)), h)

    # chain: rows are source derivatives, columns the primed ones
    a10 = change.coefficients["a10"](ws)
    a01 = change.coefficients["a01"](ws)
    b10 = change.coefficients["b10"](ws)
    b01 = change.coefficients["b01"](ws)
    n = ws.size
    M = np.zeros((n, 4, 4), dtype=np.complex128)
    M[:, 0] = np.stack([a10, np.conj(a01), b10, np.conj(b01)], axis=-1)
    M[:, 1] = np.stack([a01, np.conj(a10), b01, np.conj(b10)], axis=-1)
    M[:, 2, 2] = 1.0
    M[:, 3, 3] = 1.0
    rhs = np.stack([gz, gzb, gw_s, gwb_s], axis=1).reshape(n, 4, 4)
    primed = np.linalg.solve(M, rhs)
    # primed rows: d/dz', d/dzbar', d/dw', d/dwbar'
    rZ = max(np.abs(primed[:, 0]).max(), np.abs(primed[:, 2]).max(), rW)
    return r0, rZ


def _wirtinger_pair(f, h):
    dx = (f(h) - f(-h)) / (2.0 * h)
    dy = (f(1j * h) - f(-1j * h)) / (2.0 * h)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


# ---- dilations ----

def dilate(a_field, delta, mode="isotropic", m=2):
    """Pushforward of the structure under a dilation.

    Isotropic: Z -> Z/delta sends A to A_delta(Z) = A(delta Z).
    Anisotropic weight (delta, m): (z, w) -> (z/delta, w/delta^{1/m}),
    which conjugates A by the diagonal scaling.
    """
    if delta <= 0:
        raise ValueError("dilation parameter must be positive")
    a_field = as_structure(a_field)
    if mode == "isotropic":
        def a(z, w):
            return a_field(delta * np.asarray(z), delta * np.asarray(w))
        return AField(a)
    if mode == "anisotropic":
        s = delta ** (1.0 / m)

        def a(z, w):
            A = a_field(delta * np.asarray(z), s * np.asarray(w))
            out = np.array(A, copy=True)
            out[..., 0, 1] *= s / delta
            out[..., 1, 0] *= delta / s
            return out
        return AField(a)
    raise ValueError("unknown dilation mode: %r" % mode)


def dilate_defining(rho, delta):
    """Companion rescaling of a defining function: delta^{-1} rho(delta Z)."""
    if delta <= 0:
        raise ValueError("dilation parameter must be positive")

    def r(z, w):
        return rho(delta * np.asarray(z), delta * np.asarray(w)) / delta
    return r


# ---- pseudoholomorphy residual ----

def jholo_residual(a_field, Z, grid=None):
    """sup over interior nodes of |dbar Z - A(Z) conj(dz Z)|.

    Z is a pair of DiscFn (or plain sample arrays with an explicit
    grid): the two complex components of the disc map.
    """
    a_field = as_structure(a_field)
    zf, wfn = Z
    if isinstance(zf, DiscFn):
        grid = zf.grid
        zs, ws = zf.samples, wfn.samples
    else:
        zs, ws = zf, wfn
        if grid is None:
            raise ValueError("grid required for raw sample input")
    dbz = grid.dbar(zs)
    dbw = grid.dbar(ws)
    dzz = np.conj(grid.dz(zs))
    dzw = np.conj(grid.dz(ws))
    A = a_field(zs, ws)
    rz = dbz - (A[..., 0, 0] * dzz + A[..., 0, 1] * dzw)
    rw = dbw - (A[..., 1, 0] * dzz + A[..., 1, 1] * dzw)
    return float(np.sqrt(np.abs(rz) ** 2 + np.abs(rw) ** 2).max())
