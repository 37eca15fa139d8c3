"""Sampled field types.

LogRadialField stores a radial function u on the plane through
v(s) = u(e^{-s}) on a uniform s-grid: s = -log|x|, so s -> -inf is the
far field and s -> +inf is the origin.  Outside the grid the field is
v = 0 below s_min (u compactly supported in x) and v = values[-1] above
s_max (u levels off to a constant near the origin, which keeps the
support of u compact).  All integral operations add the plateau tail in
closed form, so builders only need to extend the grid far enough that
the tail is controlled, not zero.

Field2D is a plain Cartesian sample used by the rearrangement path and
the core finder.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .quadrature import dirichlet_sum

GRID_TOL_FACTOR = 1e-12  # uniform-spacing validation on load


class FieldFormatError(ValueError):
    """Raised when a field file violates its format contract."""


@dataclass
class LogRadialField:
    s_min: float
    ds: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("LogRadialField needs a 1D array with >= 2 samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("LogRadialField values must be finite")
        if not (self.ds > 0.0):
            raise ValueError("grid step must be positive")

    @property
    def n(self):
        return self.values.size

    @property
    def s_max(self):
        return self.s_min + self.ds * (self.n - 1)

    @property
    def s(self):
        return self.s_min + self.ds * np.arange(self.n)

    @property
    def plateau(self):
        return float(self.values[-1])

    def __call__(self, s):
        """Evaluate the piecewise-linear interpolant with the extension
        conventions (0 on the left, plateau on the right)."""
        return np.interp(s, self.s, self.values, left=0.0, right=self.plateau)

    def boundary_report(self):
        v = self.values
        slope_out = abs(v[-1] - v[-2]) / self.ds
        return {
            "v_at_s_min": float(abs(v[0])),
            "plateau_slope": float(slope_out),
            "plateau": abs(self.plateau),
        }

    def validate_decay(self, tol=1e-10):
        """Builders of smooth fields call this; the disk field, whose
        support is exactly the grid start, is the documented exception."""
        rep = self.boundary_report()
        ref = float(np.max(np.abs(self.values))) + 1e-300
        if rep["v_at_s_min"] > tol * ref or rep["plateau_slope"] > tol * ref / self.ds:
            raise ValueError(f"field does not decay at the grid boundary: {rep}")

    def dirichlet(self):
        """sum (dv/ds)^2 ds over cells (the plateau adds nothing)."""
        return dirichlet_sum(self.values, self.ds)

    def resampled(self, s_min, ds, n):
        s_new = s_min + ds * np.arange(n)
        return LogRadialField(s_min, ds, self(s_new))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    def to_csv(self):
        buf = io.StringIO()
        buf.write("s,v\n")
        for s, v in zip(self.s, self.values):
            buf.write(f"{s:.17g},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_csv(fh.read())

    @classmethod
    def from_csv(cls, text):
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "s,v":
            raise FieldFormatError("expected header 's,v'")
        try:
            rows = np.array([[float(t) for t in ln.split(",")] for ln in lines[1:]])
        except ValueError as exc:
            raise FieldFormatError(f"bad row in field file: {exc}") from None
        if rows.ndim != 2 or rows.shape[1] != 2 or rows.shape[0] < 2:
            raise FieldFormatError("expected at least two 's,v' rows")
        s, v = rows[:, 0], rows[:, 1]
        ds = s[1] - s[0]
        if ds <= 0 or np.max(np.abs(np.diff(s) - ds)) > GRID_TOL_FACTOR * abs(ds) * rows.shape[0]:
            raise FieldFormatError("s-grid is not uniformly increasing")
        return cls(float(s[0]), float(ds), v)


def crop_live_support(field, grad_tol=1e-3, mass_tol=1e-9, pad_cells=8):
    """Drop a trailing stretch that carries a negligible share of the
    gradient and of the e^{-2s}-weighted mass; used between extraction
    levels so residual grids can be regridded finely."""
    v = field.values
    dv2 = np.diff(v) ** 2 / field.ds
    w = v * v * np.exp(np.clip(-2.0 * field.s, -700, 50.0))
    grad_tail = np.cumsum(dv2[::-1])[::-1]
    mass_tail = np.cumsum(w[::-1])[::-1]
    g_tot = grad_tail[0] + 1e-300
    m_tot = mass_tail.max() + 1e-300
    keep = np.nonzero((grad_tail > grad_tol * g_tot) | (mass_tail[:-1] > mass_tol * m_tot))[0]
    if keep.size == 0:
        last = min(1, field.n - 2)
    else:
        last = min(int(keep[-1]) + pad_cells, field.n - 2)
    return LogRadialField(field.s_min, field.ds, v[: last + 2].copy())


def regrid(field, ds_target, cap=2 ** 22):
    """Resample onto a finer uniform grid when the current step is much
    coarser than wanted; piecewise-linear data survive this exactly."""
    span = field.s_max - field.s_min
    ds_new = max(ds_target, span / cap)
    if ds_new >= field.ds / 1.5:
        return field
    n = int(np.floor(span / ds_new)) + 1
    return field.resampled(field.s_min, ds_new, n)


# ---------------------------------------------------------------------------
# Field builders.  Each one places enough grid behind the interesting part
# that the implied tails are negligible for every weighted integral.
# ---------------------------------------------------------------------------

def disk_field(a, s_max=40.0, ds=1.0 / 256):
    """u = a on the unit disk, 0 outside: v = a for s >= 0.  The jump
    sits exactly at the grid start, so weighted integrals reproduce the
    closed forms to machine precision."""
    n = int(round(s_max / ds)) + 1
    return LogRadialField(0.0, ds, np.full(n, float(a)))


def gaussian_field(amplitude=1.0, width=1.0, ds=1.0 / 256, s_max=None):
    """u(r) = A exp(-(r/w)^2) sampled in log-radial coordinates."""
    s_min = -(0.5 * np.log(760.0) + np.log(width))
    if s_max is None:
        s_max = max(40.0, 8.0 * amplitude * amplitude + 40.0)
    n = int(np.ceil((s_max - s_min) / ds)) + 1
    s = s_min + ds * np.arange(n)
    r2 = np.exp(-2.0 * s)
    return LogRadialField(s_min, ds, amplitude * np.exp(-r2 / (width * width)))


def bump_field(amplitude=1.0, width=1.0, ds=1.0 / 256, s_max=None):
    """Compactly supported C^inf bump u(r) = A e * exp(-1/(1-(r/w)^2))."""
    s_min = -np.log(width) - ds  # support edge r = w, one cell of margin
    if s_max is None:
        s_max = max(40.0, 8.0 * amplitude * amplitude + 40.0)
    n = int(np.ceil((s_max - s_min) / ds)) + 1
    s = s_min + ds * np.arange(n)
    rho2 = np.exp(-2.0 * s) / (width * width)
    vals = np.zeros(n)
    inside = rho2 < 1.0
    vals[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return LogRadialField(s_min, ds, vals)


def radial_profile_to_log(r, u, ds=1.0 / 256, s_max=None):
    """Convert a sampled radial function (uniform r-grid from 0) to a
    LogRadialField.  u beyond the last radius is treated as 0; u below
    the first positive radius is the value at r=0 (plateau)."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if r[0] != 0.0:
        raise ValueError("radial grid must start at r = 0")
    r_pos = r[1:]
    s_hi = -np.log(r_pos[0])
    if s_max is None:
        s_max = s_hi
    s_min = -np.log(r_pos[-1])
    n = int(np.ceil((s_max - s_min) / ds)) + 1
    s = s_min + ds * np.arange(n)
    rr = np.exp(-s)
    vals = np.interp(rr, r, u)
    return LogRadialField(float(s_min), ds, vals)


# ---------------------------------------------------------------------------
# Cartesian samples
# ---------------------------------------------------------------------------

@dataclass
class Field2D:
    h: float
    origin: tuple
    values: np.ndarray  # shape (nx, ny); values[i, j] at origin + h*(i, j)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("Field2D needs a 2D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Field2D values must be finite")
        if not (self.h > 0.0):
            raise ValueError("grid spacing must be positive")

    @property
    def nx(self):
        return self.values.shape[0]

    @property
    def ny(self):
        return self.values.shape[1]

    def grids(self):
        ox, oy = self.origin
        x = ox + self.h * np.arange(self.nx)
        y = oy + self.h * np.arange(self.ny)
        return x, y

    def boundary_ring_max(self):
        v = np.abs(self.values)
        return float(max(v[0, :].max(), v[-1, :].max(), v[:, 0].max(), v[:, -1].max()))

    def validate_support(self, tol=1e-12):
        ref = float(np.max(np.abs(self.values))) + 1e-300
        if self.boundary_ring_max() > tol * ref:
            raise ValueError("Field2D support touches the grid boundary")

    def save(self, path):
        with open(path, "w") as fh:
            fh.write("nx,ny,h,ox,oy\n")
            fh.write(f"{self.nx},{self.ny},{self.h:.17g},"
                     f"{self.origin[0]:.17g},{self.origin[1]:.17g}\n")
            for i in range(self.nx):
                fh.write(",".join(f"{v:.17g}" for v in self.values[i]) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "nx,ny,h,ox,oy":
            raise FieldFormatError("expected header 'nx,ny,h,ox,oy'")
        meta = lines[1].split(",")
        if len(meta) != 5:
            raise FieldFormatError("expected meta row 'nx,ny,h,ox,oy'")
        nx, ny = int(meta[0]), int(meta[1])
        h, ox, oy = float(meta[2]), float(meta[3]), float(meta[4])
        rows = [np.fromstring(ln, sep=",") for ln in lines[2:]]
        vals = np.vstack(rows)
        if vals.shape != (nx, ny):
            raise FieldFormatError(f"value block {vals.shape} != ({nx},{ny})")
        return cls(h, (ox, oy), vals)


def gaussian_field2d(amplitude=1.0, width=0.5, center=(0.0, 0.0),
                     extent=2.0, h=1.0 / 64):
    n = int(round(2 * extent / h)) + 1
    x = -extent + h * np.arange(n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    r2 = (xx - center[0]) ** 2 + (yy - center[1]) ** 2
    vals = amplitude * np.exp(-r2 / (width * width))
    vals[r2 > (0.98 * extent) ** 2] = 0.0  # keep the boundary ring clean
    return Field2D(h, (-extent, -extent), vals)


def disk_field2d(amplitude=1.0, radius=0.5, center=(0.0, 0.0),
                 extent=2.0, h=1.0 / 64):
    n = int(round(2 * extent / h)) + 1
    x = -extent + h * np.arange(n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    r2 = (xx - center[0]) ** 2 + (yy - center[1]) ** 2
    vals = np.where(r2 <= radius * radius, float(amplitude), 0.0)
    return Field2D(h, (-extent, -extent), vals)


def two_bump_field2d(amplitude=1.0, width=0.35, separation=1.6,
                     extent=2.0, h=1.0 / 64):
    half = separation / 2.0
    f1 = gaussian_field2d(amplitude, width, (-half, 0.0), extent, h)
    f2 = gaussian_field2d(amplitude, width, (half, 0.0), extent, h)
    return Field2D(h, f1.origin, f1.values + f2.values)
