"""Forward operators: divergent-beam X-ray, full-line and planar Radon transforms.

Analytic paths delegate to the phantom closed forms; the numeric path
ray-marches a sampled volume with trilinear interpolation so the same
machinery applies to measured data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from . import phantom as ph_mod
from .geometry import as_direction
from .hilbert import Profile1D


@dataclass(frozen=True)
class XRayDatum:
    """One divergent-beam measurement: source point, direction, value."""

    x: np.ndarray
    n: np.ndarray
    value: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(3)
        n = as_direction(self.n)
        if not np.isfinite(self.value):
            raise ValueError("x-ray value must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class RadonProfile:
    """Sampled plane-integral profile s -> Rf(n, s) for one plane normal n."""

    n: np.ndarray
    s_min: float
    s_max: float
    values: np.ndarray

    def __post_init__(self):
        n = as_direction(self.n)
        profile = Profile1D(self.s_min, self.s_max, self.values)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "s_min", profile.s_min)
        object.__setattr__(self, "s_max", profile.s_max)
        object.__setattr__(self, "values", profile.values)

    @property
    def count(self):
        return self.values.size

    def profile(self):
        return Profile1D(self.s_min, self.s_max, self.values)

    def s_grid(self):
        return np.linspace(self.s_min, self.s_max, self.count)


def xray(ph, x, n):
    """Divergent-beam transform: integral of the density over t >= 0 from x along n."""
    return ph_mod.halfline_integral(ph, x, n)


def line_transform(ph, x, n):
    """Full-line transform, the sum of the two opposite half-line integrals."""
    return ph_mod.halfline_integral(ph, x, n) + ph_mod.halfline_integral(ph, x, -np.asarray(n, dtype=float))


def directional_derivative_xray(ph, x, n, h=1e-4):
    """Central difference of the x-ray data along its own direction.

    [X(x + h n, n) - X(x - h n, n)] / (2 h); for smooth densities this
    equals -density(x) up to O(h^2).
    """
    if not h > 0.0:
        raise ValueError("step h must be positive")
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    fwd = ph_mod.halfline_integral(ph, x + h * n, n)
    bwd = ph_mod.halfline_integral(ph, x - h * n, n)
    return (fwd - bwd) / (2.0 * h)


def radon_profile(ph, n, s_min, s_max, count):
    """Plane integrals on a uniform offset grid for one plane normal."""
    count = int(count)
    if count < 2:
        raise ValueError("radon_profile requires count >= 2")
    n = as_direction(n)
    s = np.linspace(s_min, s_max, count)
    values = ph_mod.plane_integral(ph, n, s)
    return RadonProfile(n=n, s_min=s_min, s_max=s_max, values=values)


def _ray_box_range(origin, upper, x, n):
    """Parameter range [t0, t1] of {x + t n} inside the box, clipped to t >= 0."""
    t0 = 0.0
    t1 = np.inf
    for axis in range(3):
        if abs(n[axis]) < 1e-300:
            if x[axis] < origin[axis] or x[axis] > upper[axis]:
                return None
            continue
        ta = (origin[axis] - x[axis]) / n[axis]
        tb = (upper[axis] - x[axis]) / n[axis]
        lo, hi = (ta, tb) if ta <= tb else (tb, ta)
        t0 = max(t0, lo)
        t1 = min(t1, hi)
    if t1 <= t0:
        return None
    return t0, t1


def xray_numeric(vol, x, n, step):
    """Midpoint-rule ray marching of a sampled volume with trilinear interpolation.

    The half-line from x in direction n is clipped to the grid box; the
    integral is approximated with m = ceil(length / step) equal
    midpoint steps.  Rays that never enter the grid give 0.
    """
    if not step > 0.0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float).reshape(3)
    n = as_direction(n)
    rng = _ray_box_range(vol.origin, vol.upper, x, n)
    if rng is None:
        return 0.0
    t0, t1 = rng
    length = t1 - t0
    m = max(int(np.ceil(length / step)), 1)
    dt = length / m
    t = t0 + (np.arange(m) + 0.5) * dt
    pts = x[None, :] + t[:, None] * n[None, :]
    coords = (pts - vol.origin) / vol.spacing
    samples = map_coordinates(
        vol.values3d(), coords.T, order=1, mode="constant", cval=0.0
    )
    return float(np.sum(samples) * dt)


# --- CSV export -------------------------------------------------------------


def write_xray_csv(path, xs, ns, values):
    """Batch x-ray data export: columns x1,x2,x3,n1,n2,n3,value."""
    xs = np.asarray(xs, dtype=float)
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if xs.shape != ns.shape or xs.shape[:-1] != values.shape or xs.shape[-1] != 3:
        raise ValueError("inconsistent x-ray batch shapes")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x1,x2,x3,n1,n2,n3,value\n")
        for p, d, v in zip(xs, ns, values):
            fh.write(
                f"{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},"
                f"{d[0]:.17g},{d[1]:.17g},{d[2]:.17g},{v:.17g}\n"
            )


def write_profile_csv(path, rp):
    """RadonProfile export: normal header, then s,value rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n1,n2,n3\n")
        fh.write(f"{rp.n[0]:.17g},{rp.n[1]:.17g},{rp.n[2]:.17g}\n")
        fh.write("s,value\n")
        for s, v in zip(rp.s_grid(), rp.values):
            fh.write(f"{s:.17g},{v:.17g}\n")


def read_profile_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != "n1,n2,n3" or lines[2] != "s,value":
        raise ValueError(f"{path}: not a radon profile CSV")
    n = np.array([float(v) for v in lines[1].split(",")])
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[3:]])
    s = rows[:, 0]
    return RadonProfile(n=n, s_min=float(s[0]), s_max=float(s[-1]), values=rows[:, 1])
