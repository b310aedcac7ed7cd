"""Discretization of the closed unit disc and its boundary circle.

Two coupled grids:

* ``BoundaryGrid``: n equispaced angles on the circle, trigonometric
  (FFT) analysis and synthesis.
* ``DiscGrid``: tensor polar grid with Gauss-Legendre radii on (0, 1)
  and equispaced sample angles.  Quadrature nodes sit half an angular
  step from the sample angles so no quadrature node touches the theta=0
  ray, where several kernels are singular.  Area weights sum to pi.

Grid functions are plain complex arrays of shape (n_rad, n_ang) for the
disc and (n,) for the boundary; ``DiscFn``/``BoundaryFn`` are thin
wrappers used at API edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Point2C:
    """A point (z, w) in C^2."""
    z: complex
    w: complex

    def as_array(self):
        return np.array([self.z, self.w], dtype=np.complex128)


def _barycentric_weights(x):
    """Barycentric interpolation weights for nodes x, normalized to max 1."""
    n = x.size
    w = np.ones(n)
    for j in range(n):
        d = x[j] - np.delete(x, j)
        w[j] = 1.0 / np.prod(d * 4.0)  # scale factor tames overflow
    return w / np.abs(w).max()


class BoundaryGrid:
    """Equispaced angular grid on the unit circle.

    Parameters
    ----------
    n : int
        Number of nodes, even.  Node k sits at angle 2 pi k / n, so node 0
        is the point 1.
    """

    def __init__(self, n=256):
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("boundary grid size must be a power of two")
        self.n = n
        self.theta = 2.0 * np.pi * np.arange(n) / n
        self.nodes = np.exp(1j * self.theta)
        self.freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)

    def analyze(self, samples):
        """Fourier coefficients c_k with samples[l] = sum_k c_k e^{i k theta_l}.

        Coefficient order follows numpy fft frequencies (self.freqs).
        """
        return np.fft.fft(samples) / self.n

    def synthesize(self, coeffs):
        return np.fft.ifft(coeffs * self.n)

    def eval(self, samples, points):
        """Evaluate the trigonometric interpolant at unit-modulus points."""
        c = self.analyze(np.asarray(samples, dtype=np.complex128))
        points = np.asarray(points, dtype=np.complex128)
        out = np.zeros(points.shape, dtype=np.complex128)
        for k, ck in zip(self.freqs, c):
            if ck == 0:
                continue
            out += ck * points ** k
        return out

    def resample(self, samples, m):
        """Resample to an m-point grid by spectral zero padding/truncation."""
        c = np.fft.fft(samples)
        half = min(self.n, m) // 2
        cm = np.zeros(m, dtype=np.complex128)
        cm[:half] = c[:half]
        cm[-half:] = c[-half:]
        return np.fft.ifft(cm) * (m / self.n)

    def derivative(self, samples):
        """d/dtheta by Fourier multiplier."""
        c = np.fft.fft(samples)
        c *= 1j * self.freqs
        return np.fft.ifft(c)


class BoundaryFn:
    """Samples of a function on a BoundaryGrid."""

    def __init__(self, grid: BoundaryGrid, samples):
        samples = np.asarray(samples)
        if samples.shape != (grid.n,):
            raise ValueError("sample shape does not match grid")
        self.grid = grid
        self.samples = np.array(samples, dtype=np.complex128)

    @classmethod
    def from_callable(cls, grid, f):
        return cls(grid, f(grid.nodes))

    def coefficients(self):
        return self.grid.analyze(self.samples)

    def __call__(self, points):
        return self.grid.eval(self.samples, points)


def eval_boundary(fn: BoundaryFn, points):
    """Evaluate a boundary function at unit-modulus points."""
    p = np.asarray(points, dtype=np.complex128)
    if np.any(np.abs(np.abs(p) - 1.0) > 1e-12):
        raise ValueError("evaluation points must lie on the unit circle")
    return fn(points)


def fourier_analyze(fn: BoundaryFn):
    """Fourier coefficients of a boundary function, numpy fft order."""
    return fn.coefficients()


class DiscGrid:
    """Polar grid on the unit disc with Gauss-Legendre radii.

    Parameters
    ----------
    n_rad : int
        Number of radial nodes (Gauss-Legendre on (0, 1)).
    n_ang : int
        Number of sample angles, even.
    n_bdry : int
        Number of boundary-circle nodes, even; defaults to 2*n_ang.

    Sample angles are theta_l = 2 pi l / n_ang; quadrature angles sit at
    theta_l + pi / n_ang.  The area weight per quadrature node is
    glw * r * 2 pi / n_ang and the weights sum to pi (area of the disc).
    """

    def __init__(self, n_rad=64, n_ang=128, n_bdry=None):
        if n_ang < 2 or (n_ang & (n_ang - 1)) != 0:
            raise ValueError("n_ang must be a power of two")
        if n_bdry is None:
            n_bdry = 2 * n_ang
        x, gw = np.polynomial.legendre.leggauss(n_rad)
        self.n_rad = n_rad
        self.n_ang = n_ang
        self.r = (x + 1.0) / 2.0
        self.glw = gw / 2.0
        self.theta = 2.0 * np.pi * np.arange(n_ang) / n_ang
        self.theta_q = self.theta + np.pi / n_ang
        self.eith = np.exp(1j * self.theta)
        self.eith_q = np.exp(1j * self.theta_q)
        self.nodes = self.r[:, None] * self.eith[None, :]
        self.nodes_quad = self.r[:, None] * self.eith_q[None, :]
        self.ring_w = self.glw * self.r * (2.0 * np.pi / n_ang)
        self.weights = np.broadcast_to(self.ring_w[:, None],
                                       (n_rad, n_ang)).copy()
        self.boundary = BoundaryGrid(n_bdry)
        self.freqs = np.fft.fftfreq(n_ang, d=1.0 / n_ang).astype(int)
        # half-step phase, exact for the trigonometric interpolant
        self._shift = np.exp(1j * self.freqs * (np.pi / n_ang))
        self._bary = _barycentric_weights(self.r)
        lam = self._bary / (1.0 - self.r)
        self.extrap_w = lam / lam.sum()   # row extrapolating to r = 1
        self._dr = self._diff_matrix()

    def _diff_matrix(self):
        r, w = self.r, self._bary
        D = np.zeros((self.n_rad, self.n_rad))
        for i in range(self.n_rad):
            for j in range(self.n_rad):
                if i != j:
                    D[i, j] = (w[j] / w[i]) / (r[i] - r[j])
            D[i, i] = -D[i].sum()
        return D

    # ---- angular resampling ----

    def to_quad(self, samples):
        """Shift samples from sample angles to quadrature angles."""
        c = np.fft.fft(samples, axis=-1)
        return np.fft.ifft(c * self._shift, axis=-1)

    def from_quad(self, samples):
        c = np.fft.fft(samples, axis=-1)
        return np.fft.ifft(c / self._shift, axis=-1)

    def quadrature(self, samples):
        """Area integral over the disc of the trig interpolant."""
        q = self.to_quad(np.asarray(samples, dtype=np.complex128))
        return (self.ring_w[:, None] * q).sum()

    # ---- differentiation ----

    def dtheta(self, samples):
        c = np.fft.fft(samples, axis=1)
        return np.fft.ifft(c * (1j * self.freqs), axis=1)

    def drad(self, samples):
        return self._dr @ samples

    def dbar(self, samples):
        """d/d zbar = e^{i theta}/2 (d_r + (i/r) d_theta)."""
        fr = self.drad(samples)
        ft = self.dtheta(samples)
        return 0.5 * self.eith[None, :] * (fr + 1j * ft / self.r[:, None])

    def dz(self, samples):
        """d/d z = e^{-i theta}/2 (d_r - (i/r) d_theta)."""
        fr = self.drad(samples)
        ft = self.dtheta(samples)
        return 0.5 * np.conj(self.eith)[None, :] * (fr - 1j * ft / self.r[:, None])

    # ---- radial interpolation ----

    def radial_matrix(self, r_targets):
        """Barycentric interpolation matrix from grid radii to r_targets.

        Targets equal to 1 get the extrapolation row; targets hitting a
        node exactly get a unit row.
        """
        r_targets = np.atleast_1d(np.asarray(r_targets, dtype=float))
        M = np.zeros((r_targets.size, self.n_rad))
        for i, rt in enumerate(r_targets):
            if rt >= 1.0:
                M[i] = self.extrap_w
                continue
            d = rt - self.r
            hit = np.argmin(np.abs(d))
            if abs(d[hit]) < 1e-14:
                M[i, hit] = 1.0
            else:
                lam = self._bary / d
                M[i] = lam / lam.sum()
        return M

    def radial_eval(self, samples, r_targets):
        """Interpolate samples (n_rad, n_ang) to rows at r_targets."""
        return self.radial_matrix(r_targets) @ samples

    def boundary_trace(self, samples):
        """Extrapolate to r=1 and resample to the boundary grid."""
        ring = self.extrap_w @ samples
        small = BoundaryGrid(self.n_ang)
        return small.resample(ring, self.boundary.n)

    def eval_at(self, samples, points):
        """Evaluate the interpolant at arbitrary points of the closed disc.

        Radial barycentric interpolation of each angular Fourier mode.
        Accurate for grid functions with resolved angular spectrum.
        """
        points = np.asarray(points, dtype=np.complex128)
        flat = points.ravel()
        rr = np.abs(flat)
        th = np.angle(flat)
        modes = np.fft.fft(samples, axis=1) / self.n_ang
        prof = self.radial_matrix(rr) @ modes      # (npts, n_ang)
        phase = np.exp(1j * np.outer(th, self.freqs))
        vals = (prof * phase).sum(axis=1)
        return vals.reshape(points.shape)


class DiscFn:
    """Samples of a function on a DiscGrid, with optional boundary trace."""

    def __init__(self, grid: DiscGrid, samples, boundary=None):
        samples = np.asarray(samples)
        if samples.shape != (grid.n_rad, grid.n_ang):
            raise ValueError("sample shape does not match grid")
        self.grid = grid
        self.samples = np.array(samples, dtype=np.complex128)
        if boundary is not None and not isinstance(boundary, BoundaryFn):
            boundary = BoundaryFn(grid.boundary, boundary)
        self.boundary = boundary

    @classmethod
    def from_callable(cls, grid, f, with_boundary=True):
        b = None
        if with_boundary:
            b = BoundaryFn(grid.boundary, f(grid.boundary.nodes))
        return cls(grid, f(grid.nodes), b)

    def boundary_or_trace(self):
        """Stored boundary samples, or the extrapolated trace."""
        if self.boundary is not None:
            return self.boundary.samples
        return self.grid.boundary_trace(self.samples)

    def __call__(self, points):
        return self.grid.eval_at(self.samples, points)
