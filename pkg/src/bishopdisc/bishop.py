"""Attached-disc solver for the coupled boundary problem.

A disc Z : closed unit disc -> C^2 is attached to a hypersurface E when
its boundary circle lands in E, and is compatible with a structure field
A when dbar Z = A(Z) conj(d Z) in the interior.  With E in the graph
form Re Z = h(Im Z, t) both requirements combine into the fixed point
problem

    Z = S[h(Im Z, t)] + i c0 + P[A(Z) conj(d Z)]

where S is the Schwarz integral and P the Cauchy-Green variant whose
real part vanishes on the circle.  Damped Picard iteration solves it for
small data.  The pinned variant anchors Z(1) at a chosen attachment
point exactly at every iterate by using the operators pinned at the
boundary point 1.
"""
import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import DiscGrid, DiscFn, BoundaryFn
from . import operators as ops
from .structures import as_structure, jholo_residual
from .hypersurfaces import local_disc

__all__ = [
    "BoundaryData", "BishopDisc", "FamilyMember", "solve_bishop",
    "transversality", "disc_family", "holomorphic_defect", "local_disc",
    "write_disc_csv", "disc_report",
]


@dataclass
class BoundaryData:
    """Free data of an attached disc.

    t supplies the graph parameter on the boundary circle: a real array
    on the boundary grid, a callable of the angle array, or None.  When
    t is None it is derived from w_hat, the holomorphic datum of the
    tangential component, which must vanish at 1.  c0 sets the imaginary
    integration constants (free mode only).
    """

    t: object = None
    c0: tuple = (0.0, 0.0)
    w_hat: object = None

    def t_samples(self, bgrid, base=0.0):
        if self.t is not None:
            if callable(self.t):
                vals = np.asarray(self.t(bgrid.theta), dtype=float)
            elif isinstance(self.t, BoundaryFn):
                vals = np.real(self.t.samples)
            else:
                vals = np.asarray(self.t, dtype=float)
            if vals.shape != (bgrid.n,):
                raise ValueError("t samples do not match the boundary grid")
            return vals
        if self.w_hat is not None:
            w1 = complex(np.asarray(self.w_hat(1.0 + 0.0j)).reshape(()))
            if abs(w1) > 1e-10:
                raise ValueError("w_hat must vanish at the point 1")
            return np.real(self.w_hat(bgrid.nodes)) + base
        return np.full(bgrid.n, base)


@dataclass
class BishopDisc:
    """A converged attached disc with its certificates."""

    z: DiscFn
    w: DiscFn
    grid: DiscGrid
    attachment: tuple
    residual_pde: float
    residual_bc: float
    iterations: int
    mode: str = "free"


@dataclass
class FamilyMember:
    point: tuple
    disc: Optional[BishopDisc]
    status: str = "converged"


def _as_point(p):
    arr = np.asarray(p, dtype=complex).reshape(2)
    return complex(arr[0]), complex(arr[1])


def solve_bishop(E, structure, data=None, mode="free", attachment=None,
                 grid=None, omega=0.8, tol=1e-11, max_iter=200,
                 pde_tol=1e-6, bc_tol=1e-8):
    """Solve the attached-disc problem on E for the structure field.

    mode is "free" (imaginary constants set by data.c0) or "pinned"
    (Z(1) held at the attachment point).  Raises ValueError when E has
    no parametric graph form, when pinned data are inconsistent with the
    attachment point, or when the iteration fails to contract.
    """
    if E.parametric_h is None:
        raise ValueError("hypersurface lacks a parametric graph form")
    if mode not in ("free", "pinned"):
        raise ValueError("mode must be 'free' or 'pinned'")
    a = as_structure(structure)
    if grid is None:
        grid = DiscGrid(32, 64)
    bg = grid.boundary
    pinned = mode == "pinned"

    if pinned:
        if attachment is None:
            raise ValueError("pinned mode needs an attachment point")
        z0, w0 = _as_point(attachment)
        data = data or BoundaryData()
        t = data.t_samples(bg, base=np.real(w0))
        h1, h2 = E.parametric_h(np.imag(z0), np.imag(w0), t[0])
        if abs(h1 - np.real(z0)) > 1e-9 or abs(h2 - np.real(w0)) > 1e-9:
            raise ValueError(
                "attachment point is not consistent with the boundary data")
        base = np.array([z0, w0])
    else:
        data = data or BoundaryData()
        t = data.t_samples(bg, base=0.0)
        base = np.zeros(2, dtype=complex)

    shape_i = grid.nodes.shape
    Zi = np.zeros((2,) + shape_i, dtype=complex)
    Zb = np.zeros((2, bg.n), dtype=complex)
    if pinned:
        Zi += base[:, None, None]
        Zb += base[:, None]

    step = np.inf
    for it in range(1, max_iter + 1):
        x1, x2 = E.parametric_h(np.imag(Zb[0]), np.imag(Zb[1]), t)
        if pinned:
            x1 = x1 - np.real(z0)
            x2 = x2 - np.real(w0)
        sz = ops.schwarz(BoundaryFn(bg, x1 + 0j), pinned=pinned, grid=grid)
        sw = ops.schwarz(BoundaryFn(bg, x2 + 0j), pinned=pinned, grid=grid)

        dZi = np.stack([grid.dz(Zi[0]), grid.dz(Zi[1])])
        dZb = np.stack([grid.boundary_trace(grid.dz(Zi[0])),
                        grid.boundary_trace(grid.dz(Zi[1]))])
        Ai = a(Zi[0], Zi[1])
        Ab = a(Zb[0], Zb[1])
        Gi = np.einsum("...ij,j...->i...", Ai, np.conj(dZi))
        Gb = np.einsum("...ij,j...->i...", Ab, np.conj(dZb))

        Ni = np.empty_like(Zi)
        Nb = np.empty_like(Zb)
        for c, sfun in ((0, sz), (1, sw)):
            pf = ops.p_transform(
                DiscFn(grid, Gi[c], BoundaryFn(bg, Gb[c])), pinned=pinned)
            Ni[c] = sfun.samples + pf.samples
            Nb[c] = sfun.boundary.samples + pf.boundary.samples
        if pinned:
            Ni += base[:, None, None]
            Nb += base[:, None]
        else:
            Ni += 1j * np.asarray(data.c0, dtype=float)[:, None, None]
            Nb += 1j * np.asarray(data.c0, dtype=float)[:, None]

        Ui = (1.0 - omega) * Zi + omega * Ni
        Ub = (1.0 - omega) * Zb + omega * Nb
        step = max(np.abs(Ui - Zi).max(), np.abs(Ub - Zb).max())
        Zi, Zb = Ui, Ub
        if step < tol:
            break
    else:
        raise ValueError(
            "attached-disc iteration did not contract: last step %.3e "
            "after %d iterations" % (step, max_iter))

    zfn = DiscFn(grid, Zi[0], BoundaryFn(bg, Zb[0]))
    wfn = DiscFn(grid, Zi[1], BoundaryFn(bg, Zb[1]))
    res_pde = jholo_residual(a, (zfn, wfn))
    res_bc = float(np.abs(E.rho(Zb[0], Zb[1])).max())
    if res_pde > pde_tol or res_bc > bc_tol:
        raise ValueError(
            "attached-disc iteration stalled: pde residual %.3e, "
            "boundary residual %.3e" % (res_pde, res_bc))
    return BishopDisc(zfn, wfn, grid, (complex(Zb[0, 0]), complex(Zb[1, 0])),
                      res_pde, res_bc, it, mode)


def _radial_profile(disc, radii):
    """Z along the ray of angle 0 at the given radii (1 from the trace)."""
    g = disc.grid
    out = np.empty((2, len(radii)), dtype=complex)
    for c, comp in enumerate((disc.z, disc.w)):
        for k, r in enumerate(radii):
            if r >= 1.0:
                out[c, k] = comp.boundary.samples[0]
            else:
                out[c, k] = g.eval_at(comp.samples,
                                      np.array([r + 0.0j]))[0]
    return out


def transversality(disc, E, flag_tol=1e-6):
    """Normal component of the radial exit velocity at the point 1.

    One-sided second order differencing of Z along [0.9, 1] extrapolated
    once; values at or below flag_tol collapse to exactly 0 (tangential
    disc).
    """
    prof = _radial_profile(disc, [1.0, 0.975, 0.95, 0.9])

    def oneside(f0, f1, f2, h):
        return (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h)

    d_fine = oneside(prof[:, 0], prof[:, 1], prof[:, 2], 0.025)
    d_coarse = oneside(prof[:, 0], prof[:, 2], prof[:, 3], 0.05)
    dz = (4.0 * d_fine - d_coarse) / 3.0
    vec = np.array([np.real(dz[0]), np.imag(dz[0]),
                    np.real(dz[1]), np.imag(dz[1])])
    gradp = E.real_gradient(*disc.attachment)
    val = float(np.dot(gradp, vec))
    if abs(val) <= flag_tol:
        return 0.0
    return val


def disc_family(E, structure, w_hat, attachment_points, grid=None, **kw):
    """Pinned discs with the shared datum w_hat over the listed points.

    Solver failures are recorded per point; the converged members are
    returned alongside them.
    """
    members = []
    for p in attachment_points:
        data = BoundaryData(w_hat=w_hat)
        try:
            d = solve_bishop(E, structure, data, mode="pinned",
                             attachment=p, grid=grid, **kw)
        except ValueError as e:
            members.append(FamilyMember(_as_point(p), None,
                                        "failed: %s" % e))
        else:
            members.append(FamilyMember(_as_point(p), d))
    return members


def holomorphic_defect(disc, structure):
    """Relative negative-frequency energy of Z - T[A(Z) conj(d Z)].

    Subtracting the transform of the compatibility term from a converged
    disc must leave a holomorphic map; the boundary Fourier coefficients
    at negative frequencies measure the defect.  Returns the worst
    component ratio (0 for an identically zero component).
    """
    a = as_structure(structure)
    g = disc.grid
    bg = g.boundary
    Zi = np.stack([disc.z.samples, disc.w.samples])
    Zb = np.stack([disc.z.boundary.samples, disc.w.boundary.samples])
    dZi = np.stack([g.dz(Zi[0]), g.dz(Zi[1])])
    dZb = np.stack([g.boundary_trace(g.dz(Zi[0])),
                    g.boundary_trace(g.dz(Zi[1]))])
    Gi = np.einsum("...ij,j...->i...", a(Zi[0], Zi[1]), np.conj(dZi))
    Gb = np.einsum("...ij,j...->i...", a(Zb[0], Zb[1]), np.conj(dZb))
    worst = 0.0
    for c in range(2):
        tg = ops.cauchy_green(DiscFn(g, Gi[c], BoundaryFn(bg, Gb[c])))
        hb = Zb[c] - tg.boundary.samples
        coeff = bg.analyze(hb)
        total = float(np.sum(np.abs(coeff) ** 2))
        if total == 0.0:
            continue
        neg = float(np.sum(np.abs(coeff[bg.freqs < 0]) ** 2))
        worst = max(worst, np.sqrt(neg / total))
    return worst


def write_disc_csv(disc, path):
    """Disc samples as CSV rows (r, theta, Re z, Im z, Re w, Im w)."""
    g = disc.grid
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "theta", "re_z", "im_z", "re_w", "im_w"])
        rr = np.broadcast_to(np.reshape(g.r, (-1, 1)), g.nodes.shape).ravel()
        tt = np.angle(g.nodes).ravel()
        zz = disc.z.samples.ravel()
        ww = disc.w.samples.ravel()
        for k in range(rr.size):
            wr.writerow([rr[k], tt[k], zz[k].real, zz[k].imag,
                         ww[k].real, ww[k].imag])
        for k in range(g.boundary.n):
            zb = disc.z.boundary.samples[k]
            wb = disc.w.boundary.samples[k]
            wr.writerow([1.0, g.boundary.theta[k], zb.real, zb.imag,
                         wb.real, wb.imag])


def disc_report(disc, E=None):
    """JSON-ready summary of a converged disc."""
    rep = {
        "mode": disc.mode,
        "iterations": disc.iterations,
        "residual_pde": disc.residual_pde,
        "residual_bc": disc.residual_bc,
        "attachment": [disc.attachment[0].real, disc.attachment[0].imag,
                       disc.attachment[1].real, disc.attachment[1].imag],
    }
    if E is not None:
        rep["transversality"] = transversality(disc, E)
    return rep
