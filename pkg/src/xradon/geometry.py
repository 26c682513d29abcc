"""Unit directions, orthogonal frames, spherical quadrature and Cartesian volume grids.

Shared geometric substrate for the forward transforms and the
reconstruction formulas.  Directions are plain numpy unit vectors of
shape ``(3,)``; quadrature rules carry unnormalized surface weights
summing to the full sphere area ``4*pi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FULL_SPHERE = 4.0 * np.pi
GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0

_UNIT_TOL = 1e-9


def normalize(v):
    """Return v / |v| as a float array."""
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / nrm


def as_direction(v, tol=_UNIT_TOL):
    """Validate and return a unit 3-vector.

    Raises ValueError if the shape is not (3,) or the norm deviates
    from 1 by more than `tol`.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"direction must have shape (3,), got {v.shape}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"direction norm {nrm!r} deviates from 1 by more than {tol}")
    return v


@dataclass(frozen=True)
class Frame:
    """A unit direction together with one perpendicular unit direction."""

    n: np.ndarray
    n_perp: np.ndarray

    def __post_init__(self):
        n = as_direction(self.n, tol=1e-12)
        p = as_direction(self.n_perp, tol=1e-12)
        if abs(float(np.dot(n, p))) > 1e-12:
            raise ValueError("frame vectors are not orthogonal")


def make_frame(n):
    """Build a deterministic orthogonal frame for a unit direction.

    The perpendicular is obtained by the smallest-component rule: take
    the coordinate axis e_k with minimal |n . e_k| and project out the
    component along n.  Equal inputs give bitwise-equal outputs.
    """
    n = as_direction(n)
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    perp = e - n[k] * n
    perp = perp / np.linalg.norm(perp)
    return Frame(n=n, n_perp=perp)


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and weights approximating the surface integral over the unit sphere.

    Attributes
    ----------
    nodes : ndarray, shape (count, 3)
        Unit direction vectors.
    weights : ndarray, shape (count,)
        Positive weights in steradians, summing to 4*pi.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise ValueError("nodes must have shape (count, 3)")
        if weights.shape != (nodes.shape[0],):
            raise ValueError("weights length must match node count")
        if np.any(weights <= 0.0):
            raise ValueError("all quadrature weights must be positive")
        if abs(weights.sum() - FULL_SPHERE) > 1e-6:
            raise ValueError("quadrature weights must sum to 4*pi")
        norms = np.linalg.norm(nodes, axis=1)
        if np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
            raise ValueError("all quadrature nodes must be unit vectors")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def count(self):
        return self.nodes.shape[0]


def fibonacci_sphere(count):
    """Near-uniform spherical quadrature from the golden-angle lattice.

    Parameters
    ----------
    count : int
        Number of nodes, at least 2.

    Returns
    -------
    SphereQuadrature
        Equal weights 4*pi / count.
    """
    count = int(count)
    if count < 2:
        raise ValueError("fibonacci_sphere requires count >= 2")
    indices = np.arange(count, dtype=float) + 0.5
    polar = np.arccos(1.0 - 2.0 * indices / count)
    azimuth = 2.0 * np.pi * indices / GOLDEN_RATIO
    sin_polar = np.sin(polar)
    nodes = np.column_stack(
        (np.cos(azimuth) * sin_polar, np.sin(azimuth) * sin_polar, np.cos(polar))
    )
    # arccos/trig round-off can leave norms off by a few ulp
    nodes /= np.linalg.norm(nodes, axis=1)[:, None]
    weights = np.full(count, FULL_SPHERE / count)
    return SphereQuadrature(nodes=nodes, weights=weights)


def sphere_integrate(quadrature, f):
    """Integrate a function of direction over the sphere.

    Parameters
    ----------
    quadrature : SphereQuadrature
    f : callable or ndarray
        Either a callable taking a unit 3-vector, or precomputed node
        values of shape (count,).

    Returns
    -------
    float
        sum_k w_k f(n_k), accumulated in fixed node order.
    """
    if callable(f):
        values = np.array([f(node) for node in quadrature.nodes], dtype=float)
    else:
        values = np.asarray(f, dtype=float)
        if values.shape != (quadrature.count,):
            raise ValueError("value array length must match node count")
    return float(np.dot(quadrature.weights, values))


@dataclass(frozen=True)
class VolumeGrid:
    """Uniform 3D scalar field.

    Samples are stored flat in x-fastest order:
    ``index = ix + nx * (iy + ny * iz)``.
    """

    origin: np.ndarray
    spacing: np.ndarray
    dims: tuple
    samples: np.ndarray = field(default=None)

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        spacing = np.asarray(self.spacing, dtype=float).reshape(3)
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise ValueError("dims must be three positive integers")
        if np.any(spacing <= 0.0):
            raise ValueError("spacing must be positive")
        total = dims[0] * dims[1] * dims[2]
        samples = self.samples
        if samples is None:
            samples = np.zeros(total)
        samples = np.asarray(samples, dtype=float).reshape(-1)
        if samples.size != total:
            raise ValueError(f"samples length {samples.size} != prod(dims) {total}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "samples", samples)

    @property
    def upper(self):
        """Position of the last sample along each axis."""
        return self.origin + (np.array(self.dims) - 1) * self.spacing

    def axis_coords(self, axis):
        d = self.dims[axis]
        return self.origin[axis] + self.spacing[axis] * np.arange(d)

    def points(self):
        """All sample positions, shape (N, 3), in storage (x-fastest) order."""
        x = self.axis_coords(0)
        y = self.axis_coords(1)
        z = self.axis_coords(2)
        zz, yy, xx = np.meshgrid(z, y, x, indexing="ij")
        return np.column_stack((xx.ravel(), yy.ravel(), zz.ravel()))

    def values3d(self):
        """Samples reshaped to (nx, ny, nz) with axes in (x, y, z) order."""
        nx, ny, nz = self.dims
        return self.samples.reshape(nz, ny, nx).transpose(2, 1, 0)

    def with_samples(self, samples):
        return VolumeGrid(self.origin, self.spacing, self.dims, samples)


def cube_grid(half_extent, dims_per_axis):
    """Convenience constructor: cubic grid on [-half_extent, half_extent]^3."""
    d = int(dims_per_axis)
    if d < 2:
        raise ValueError("need at least 2 samples per axis")
    spacing = 2.0 * half_extent / (d - 1)
    return VolumeGrid(
        origin=(-half_extent, -half_extent, -half_extent),
        spacing=(spacing, spacing, spacing),
        dims=(d, d, d),
    )
