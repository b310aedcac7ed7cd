"""Real hypersurfaces in C^2 and Levi-form evaluation.

A hypersurface carries a real defining function with gradient and
mixed-Hessian oracles, an optional graph form x = h(y, w), and an
optional parametric form Re Z = h(Im Z, t) used by the boundary-value
solver.  The Levi form is computed by two independent routes: the
disc-Laplacian route (mean-value Laplacian of rho along a small
structure-holomorphic disc) and a vector-field bracket route.  They are
tied together by a single conversion constant calibrated on the
quadric.  The Levi determinant is the standard border expression in the
mixed Hessian.
"""
from __future__ import annotations

import numpy as np

from .grid import DiscFn, DiscGrid, Point2C
from . import operators as ops
from . import structures as st


def _point(p):
    if isinstance(p, Point2C):
        return complex(p.z), complex(p.w)
    z, w = p
    return complex(z), complex(w)


class Hypersurface:
    """Defining function rho with derivative oracles.

    rho maps broadcasting (z, w) arrays to real values; E is the zero
    set.  grad returns (rho_z, rho_w); hess returns the mixed complex
    Hessian [[rho_zzbar, rho_zwbar], [rho_wzbar, rho_wwbar]].  Missing
    oracles fall back to central finite differences (steps 1e-5 for the
    gradient, 1e-4 for the Hessian).
    """

    def __init__(self, rho, grad=None, hess=None, graph_h=None,
                 parametric_h=None, name="custom",
                 grad_step=1e-5, hess_step=1e-4):
        self.rho = rho
        self._grad = grad
        self._hess = hess
        self.graph_h = graph_h
        self.parametric_h = parametric_h
        self.name = name
        self.grad_step = grad_step
        self.hess_step = hess_step

    def grad(self, z, w):
        if self._grad is not None:
            return self._grad(z, w)
        h = self.grad_step
        r = self.rho
        rho_z = ((r(z + h, w) - r(z - h, w))
                 - 1j * (r(z + 1j * h, w) - r(z - 1j * h, w))) / (4 * h)
        rho_w = ((r(z, w + h) - r(z, w - h))
                 - 1j * (r(z, w + 1j * h) - r(z, w - 1j * h))) / (4 * h)
        return rho_z, rho_w

    def hess(self, z, w):
        if self._hess is not None:
            return self._hess(z, w)
        h = self.hess_step

        def dbar_of(fidx, var):
            def g(zz, ww):
                return self.grad(zz, ww)[fidx]
            if var == 0:
                return ((g(z + h, w) - g(z - h, w))
                        + 1j * (g(z + 1j * h, w) - g(z - 1j * h, w))) / (4 * h)
            return ((g(z, w + h) - g(z, w - h))
                    + 1j * (g(z, w + 1j * h) - g(z, w - 1j * h))) / (4 * h)

        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        out = np.empty(z.shape + (2, 2), dtype=np.complex128)
        out[..., 0, 0] = dbar_of(0, 0)
        out[..., 0, 1] = dbar_of(0, 1)
        out[..., 1, 0] = dbar_of(1, 0)
        out[..., 1, 1] = dbar_of(1, 1)
        return out

    def real_gradient(self, z, w):
        """d rho as a real 4-vector on (Re z, Im z, Re w, Im w)."""
        rho_z, rho_w = self.grad(z, w)
        return np.stack([2 * np.real(rho_z), -2 * np.imag(rho_z),
                         2 * np.real(rho_w), -2 * np.imag(rho_w)], axis=-1)

    def on_surface(self, z, w, tol=1e-8):
        return np.all(np.abs(self.rho(z, w)) <= tol)


# ---- built-in families ----

def flat_hypersurface():
    """E: Re z = 0."""
    def rho(z, w):
        return np.real(z) + 0.0 * np.real(w)

    def grad(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        return (np.full(z.shape, 0.5, dtype=np.complex128),
                np.zeros(z.shape, dtype=np.complex128))

    def hess(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        return np.zeros(shape + (2, 2), dtype=np.complex128)

    def parametric_h(y1, y2, t):
        shape = np.broadcast(np.asarray(y1), np.asarray(y2),
                             np.asarray(t)).shape
        return np.zeros(shape), np.broadcast_to(
            np.asarray(t, dtype=float), shape).copy()

    return Hypersurface(rho, grad, hess,
                        graph_h=lambda y, w: np.zeros_like(np.real(w) + y),
                        parametric_h=parametric_h, name="flat")


def quadric(sigma=1.0):
    """E: Re z + sigma |w|^2 = 0."""
    def rho(z, w):
        return np.real(z) + sigma * np.abs(w) ** 2

    def grad(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        return (np.full(z.shape, 0.5, dtype=np.complex128),
                sigma * np.conj(w))

    def hess(z, w):
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        out = np.zeros(shape + (2, 2), dtype=np.complex128)
        out[..., 1, 1] = sigma
        return out

    def parametric_h(y1, y2, t):
        t = np.asarray(t, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        x1 = -sigma * (t ** 2 + y2 ** 2)
        return np.broadcast_to(x1, np.broadcast(np.asarray(y1), y2, t).shape
                               ).copy(), \
            np.broadcast_to(t, np.broadcast(np.asarray(y1), y2, t).shape
                            ).copy()

    return Hypersurface(rho, grad, hess,
                        graph_h=lambda y, w: -sigma * np.abs(w) ** 2,
                        parametric_h=parametric_h,
                        name="quadric(%g)" % sigma)


def finite_type(m, coeffs):
    """E: Re z + p_m(w, wbar) = 0 with p_m = sum q_k w^k wbar^(m-k).

    coeffs lists q_1 .. q_(m-1); reality of p_m requires the Hermitian
    symmetry q_k = conj(q_(m-k)).
    """
    q = np.asarray(coeffs, dtype=np.complex128)
    if q.size != m - 1:
        raise ValueError("need %d coefficients for type %d" % (m - 1, m))
    if np.abs(q - np.conj(q[::-1])).max() > 1e-12:
        raise ValueError("coefficients must satisfy the Hermitian "
                         "symmetry q_k = conj(q_(m-k))")
    ks = np.arange(1, m)

    def pm(w):
        w = np.asarray(w, dtype=np.complex128)
        wb = np.conj(w)
        return np.real(sum(q[i] * w ** k * wb ** (m - k)
                           for i, k in enumerate(ks)))

    def pm_w(w):
        w = np.asarray(w, dtype=np.complex128)
        wb = np.conj(w)
        return sum(q[i] * k * w ** (k - 1) * wb ** (m - k)
                   for i, k in enumerate(ks))

    def pm_wwb(w):
        w = np.asarray(w, dtype=np.complex128)
        wb = np.conj(w)
        return sum(q[i] * k * (m - k) * w ** (k - 1) * wb ** (m - k - 1)
                   for i, k in enumerate(ks))

    def rho(z, w):
        return np.real(z) + pm(w)

    def grad(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        return np.full(z.shape, 0.5, dtype=np.complex128), pm_w(w)

    def hess(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape + (2, 2), dtype=np.complex128)
        out[..., 1, 1] = pm_wwb(w)
        return out

    def parametric_h(y1, y2, t):
        t = np.asarray(t, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        x1 = -pm(t + 1j * y2)
        shape = np.broadcast(np.asarray(y1), y2, t).shape
        return np.broadcast_to(x1, shape).copy(), \
            np.broadcast_to(t, shape).copy()

    E = Hypersurface(rho, grad, hess,
                     graph_h=lambda y, w: -pm(w),
                     parametric_h=parametric_h,
                     name="finite-type(%d)" % m)
    E.model_degree = m
    E.model_coeffs = q
    return E


_EXPR_NAMES = {"conj": np.conj, "exp": np.exp, "cos": np.cos, "sin": np.sin,
               "abs": np.abs, "sqrt": np.sqrt, "re": np.real, "im": np.imag,
               "log": np.log, "pi": np.pi, "j": 1j}


def custom_hypersurface(expr):
    """Hypersurface from a real-valued expression in z and w."""
    code = compile(expr, "<rho>", "eval")

    def rho(z, w):
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        z, w = np.broadcast_arrays(z, w)
        env = dict(_EXPR_NAMES, z=z, w=w)
        val = eval(code, {"__builtins__": {}}, env)
        val = np.asarray(val)
        if val.dtype.kind == "c":
            if np.abs(val.imag).max() > 1e-10 * (1 + np.abs(val).max()):
                raise ValueError("defining expression must be real-valued")
            val = val.real
        return val + np.zeros(z.shape)

    return Hypersurface(rho, name="custom")


def hypersurface_family(name, sigma=1.0, m=2, coeffs=None, expr=None):
    """Hypersurface lookup used by configuration files."""
    if name == "flat":
        return flat_hypersurface()
    if name == "quadric":
        return quadric(sigma)
    if name == "finite-type":
        if coeffs is None:
            raise ValueError("finite-type needs coefficients")
        return finite_type(m, coeffs)
    if name == "custom":
        if expr is None:
            raise ValueError("custom hypersurface needs an expression")
        return custom_hypersurface(expr)
    raise ValueError("unknown hypersurface family: %r" % name)


# ---- tangent data ----

class TangentData:
    """A point of E with a structure-complex tangent direction."""

    def __init__(self, point, holomorphic_tangent, normal):
        self.point = point
        self.holomorphic_tangent = holomorphic_tangent
        self.normal = normal


def _constraint_rows(E, j_call, z, w):
    g = E.real_gradient(z, w)
    J = j_call(z, w)
    return g, J.T @ g


def holomorphic_tangent(E, structure, p):
    """Tangent direction spanning the structure-complex tangent plane.

    The plane is the kernel of the two real constraints d rho(u) = 0,
    d rho(J u) = 0; the returned direction is a unit kernel vector as a
    complex pair.
    """
    z, w = _point(p)
    j_call = _j_callable(structure)
    c1, c2 = _constraint_rows(E, j_call, z, w)
    scale = np.linalg.norm(c1)
    if scale < 1e-6:
        raise ValueError("degenerate gradient on the hypersurface")
    C = np.stack([c1, c2])
    _, s, vt = np.linalg.svd(C)
    if s[1] < 1e-10 * scale:
        raise ValueError("tangency constraints are degenerate")
    v = vt[2]
    vz, vw = st.complex_pair(v)
    return TangentData(Point2C(z, w), np.array([vz, vw]), c1 / scale)


def _j_callable(structure):
    """Pointwise real 4x4 evaluator from any structure encoding."""
    if isinstance(structure, st.JStructure):
        return lambda z, w: structure(z, w)
    a_field = st.as_structure(structure)
    return lambda z, w: st.j_from_a(a_field(z, w))


# ---- Levi form, disc route ----

def local_disc(a_field, p, v, grid=None, r0=1e-2, tol=1e-12, max_iter=80):
    """Small structure-holomorphic disc with centre p and x-velocity v.

    Returns DiscFn pair (scaled to the unit grid; the physical disc is
    zeta -> F(zeta / r0)).  The interior fixed point keeps the zeroth
    and holomorphic first jet of the correction at 0 equal to zero, so
    F(0) = p and dF(0) applied to the Re-axis direction is r0 * v.
    """
    a_field = st.as_structure(a_field)
    if grid is None:
        grid = DiscGrid(32, 64)
    z0, w0 = _point(p)
    v = np.asarray(v, dtype=np.complex128)
    Ap = a_field(z0, w0)
    lam = np.linalg.solve(np.eye(2) - Ap @ np.conj(Ap), v - Ap @ np.conj(v))
    jet = (np.array([z0, w0])[:, None, None]
           + r0 * lam[:, None, None] * grid.nodes[None, :, :])
    F = jet.copy()
    cg = ops.get_transform(grid)
    # differentiation amplifies rounding noise faster than the smoothing
    # transform damps it, so the step bottoms out near 1e-10 and then
    # creeps back up; accept the bottom as converged
    noise_floor = 1e-10
    step_prev = np.inf
    for it in range(max_iter):
        dF = np.stack([grid.dz(F[0]), grid.dz(F[1])])
        try:
            A = a_field(F[0], F[1])
        except ValueError:
            raise ValueError("local disc iteration did not contract; "
                             "structure too large near the centre")
        g = np.stack([
            A[..., 0, 0] * np.conj(dF[0]) + A[..., 0, 1] * np.conj(dF[1]),
            A[..., 1, 0] * np.conj(dF[0]) + A[..., 1, 1] * np.conj(dF[1])])
        Fn = np.empty_like(F)
        for c in range(2):
            tg, _ = cg.apply(g[c], boundary=False)
            t0 = grid.eval_at(tg, np.array([0.0 + 0.0j]))[0]
            d0 = grid.eval_at(grid.dz(tg), np.array([0.0 + 0.0j]))[0]
            Fn[c] = jet[c] + tg - t0 - grid.nodes * d0
        step = np.abs(Fn - F).max()
        if not np.isfinite(step) or step > 1.0:
            raise ValueError("local disc iteration did not contract; "
                             "structure too large near the centre")
        if step >= step_prev and step_prev < noise_floor:
            break
        F = Fn
        if step < tol:
            break
        step_prev = step
    else:
        raise ValueError("local disc iteration did not contract; "
                         "structure too large near the centre")
    return DiscFn(grid, F[0]), DiscFn(grid, F[1]), r0


def levi_form_disc(E, a_field, p, v, grid=None, r0=1e-2):
    """Levi form at (p, v) as the Laplacian of rho along a local disc.

    Mean-value estimate: the average of rho over the circle of radius s
    minus the centre value is s^2/4 times the Laplacian, up to O(s^4);
    two radii and Richardson extrapolation remove the leading error.
    """
    z0, w0 = _point(p)
    if abs(E.rho(z0, w0)) > 1e-8:
        raise ValueError("point does not lie on the hypersurface")
    _check_tangent(E, a_field, z0, w0, v)
    zf, wf, r0 = local_disc(a_field, p, v, grid=grid, r0=r0)
    g = zf.grid
    u = E.rho(zf.samples, wf.samples)
    profile = u.mean(axis=1)
    centre = (g.radial_matrix(np.array([0.0])) @ profile)[0]

    def mean_lap(s):
        ring = (g.radial_matrix(np.array([s])) @ profile)[0]
        return 4.0 * (ring - centre) / s ** 2

    m1, m2 = mean_lap(0.8), mean_lap(0.4)
    lap = (4.0 * m2 - m1) / 3.0
    return float(lap) / r0 ** 2


def _check_tangent(E, structure, z0, w0, v, tol=1e-8):
    v = np.asarray(v, dtype=np.complex128)
    j_call = _j_callable(structure)
    c1, c2 = _constraint_rows(E, j_call, z0, w0)
    scale = max(1.0, np.linalg.norm(c1)) * max(1.0, np.linalg.norm(v))
    u = st.real_vector(v[0], v[1])
    if abs(c1 @ u) > tol * scale or abs(c2 @ u) > tol * scale:
        raise ValueError("direction is not a structure-complex tangent "
                         "of the hypersurface")


# ---- Levi form, bracket route ----

# conversion between the bracket expression and the Laplacian
# convention, calibrated once on the quadric with the flat structure
_BRACKET_SCALE = 1.0


def levi_form_bracket(E, structure, p, v, h=1e-4):
    """Levi form at (p, v) via the bracket of tangent sections.

    A section X of the structure-complex tangent bundle through v is
    built by projecting the constant extension of v onto the kernel of
    the two tangency constraints; the value is the rho-gradient paired
    with J[X, JX] at p, times the calibrated conversion constant.
    """
    z0, w0 = _point(p)
    if abs(E.rho(z0, w0)) > 1e-8:
        raise ValueError("point does not lie on the hypersurface")
    _check_tangent(E, structure, z0, w0, v, tol=1e-6)
    j_call = _j_callable(structure)
    v = np.asarray(v, dtype=np.complex128)
    X0 = st.real_vector(v[0], v[1])

    def section(q):
        z, w = st.complex_pair(q)
        c1, c2 = _constraint_rows(E, j_call, z, w)
        n1 = np.linalg.norm(c1)
        if n1 < 1e-10:
            raise ValueError("degenerate tangent projection")
        e1 = c1 / n1
        c2p = c2 - (c2 @ e1) * e1
        n2 = np.linalg.norm(c2p)
        if n2 < 1e-10:
            raise ValueError("degenerate tangent projection")
        e2 = c2p / n2
        return X0 - (X0 @ e1) * e1 - (X0 @ e2) * e2

    def jsection(q):
        z, w = st.complex_pair(q)
        return j_call(z, w) @ section(q)

    q0 = st.real_vector(z0, w0)
    Xp = section(q0)
    JXp = jsection(q0)

    def bracket(f1, f2, v1, v2):
        d2 = (f2(q0 + h * v1) - f2(q0 - h * v1)) / (2 * h)
        d1 = (f1(q0 + h * v2) - f1(q0 - h * v2)) / (2 * h)
        return d2 - d1

    br = bracket(section, jsection, Xp, JXp)
    g0 = E.real_gradient(z0, w0)
    J0 = j_call(z0, w0)
    return _BRACKET_SCALE * float(g0 @ (J0 @ br))


# ---- Levi determinant ----

def levi_determinant(E, p):
    """The border expression in the mixed Hessian of rho at p.

    (-rho_wbar, rho_zbar) . H . (-rho_w, rho_z)^T with
    H = [[rho_zzbar, rho_zwbar], [rho_wzbar, rho_wwbar]]; real for real
    rho, positive at strictly pseudoconvex points, zero where the Levi
    form of the zero set degenerates.
    """
    z0, w0 = _point(p)
    rho_z, rho_w = E.grad(z0, w0)
    H = np.asarray(E.hess(z0, w0), dtype=np.complex128)
    left = np.array([-np.conj(rho_w), np.conj(rho_z)])
    right = np.array([-rho_w, rho_z])
    val = left @ H @ right
    return float(np.real(val))


def levi_determinant_along(E, zs, ws):
    """levi_determinant vectorized along a sampled curve."""
    rho_z, rho_w = E.grad(zs, ws)
    H = np.asarray(E.hess(zs, ws), dtype=np.complex128)
    left = np.stack([-np.conj(rho_w), np.conj(rho_z)], axis=-1)
    right = np.stack([-rho_w, rho_z], axis=-1)
    val = np.einsum("...i,...ij,...j->...", left, H, right)
    return np.real(val)


# ---- cross-structure consistency ----

def normalized_levi_agreement(E, a_field, p, v, grid=None, tol_pre=1e-6):
    """|Levi(structure) - Levi(flat)| at (p, v) for a normalized field.

    Requires A and its holomorphic derivative to vanish at p; without
    that the disc-route values genuinely differ and the comparison is
    refused.
    """
    a_field = st.as_structure(a_field)
    z0, w0 = _point(p)
    A, Az, _ = a_field.jets(np.asarray(z0), np.asarray(w0))
    if np.abs(A).max() > tol_pre or np.abs(Az).max() > tol_pre:
        raise ValueError("structure is not normalized at the point: "
                         "A or its holomorphic derivative is nonzero")
    lj = levi_form_disc(E, a_field, p, v, grid=grid)
    l0 = levi_form_disc(E, st.standard_structure(), p, v, grid=grid)
    return abs(lj - l0)
