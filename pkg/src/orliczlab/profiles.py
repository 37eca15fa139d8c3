"""Concentration profiles and elementary concentrations.

A profile is a function psi with psi = 0 on (-inf, 0], psi' in L^2 and
psi in L^2(e^{-2s} ds); it is automatically Holder-1/2.  A triplet
(scale alpha_n -> inf, core x_n, profile psi) generates the bubbles

    g_n(x) = sqrt(alpha_n / 2 pi) psi(-log|x - x_n| / alpha_n),

whose gradient norm equals ||psi'||_{L^2} for every n while every L^q
norm vanishes and the Orlicz norm converges to

    (1 / sqrt(4 pi)) max_{s>0} |psi(s)| / sqrt(s).

Bubbles with origin cores materialize as LogRadialField on grids whose
step divides alpha * dsig, so every breakpoint of the rescaled profile
lands on a grid node and the gradient identity is exact in floating
point.  Translated cores materialize only on Field2D (for the core
finder).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import Field2D, FieldFormatError, LogRadialField
from .orlicz import FOUR_PI, luxemburg_norm
from .quadrature import dirichlet_sum, power_exp_integral

DEFAULT_DSIG = 1.0 / 512
GRID_CAP = 2 ** 22  # default sample budget for materialized bubbles


class GridBudgetError(RuntimeError):
    """Materializing a bubble would exceed the configured sample cap."""


@dataclass
class Profile:
    dsig: float
    psi: np.ndarray  # samples on [0, S_max]; 0 below, constant above

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        if self.psi.ndim != 1 or self.psi.size < 3:
            raise ValueError("Profile needs a 1D array with >= 3 samples")
        if not np.all(np.isfinite(self.psi)):
            raise ValueError("Profile samples must be finite")

    @property
    def S_max(self):
        return self.dsig * (self.psi.size - 1)

    @property
    def s(self):
        return self.dsig * np.arange(self.psi.size)

    def __call__(self, y):
        return np.interp(y, self.s, self.psi, left=0.0, right=float(self.psi[-1]))

    def dpsi_l2_sq(self):
        return dirichlet_sum(self.psi, self.dsig)

    def weighted_l2_sq(self):
        """int psi^2 e^{-2s} ds including the constant tail."""
        return power_exp_integral(self.psi, 0.0, self.dsig, 2.0, 2.0,
                                  tail_value=float(self.psi[-1]))

    def max_sqrt_ratio(self):
        """max over the grid of |psi(s)| / sqrt(s), s > 0.  The profile
        class is Holder-1/2, so the grid maximum is O(sqrt(dsig)) exact."""
        s = self.s[1:]
        return float(np.max(np.abs(self.psi[1:]) / np.sqrt(s)))

    def slope_support_end(self):
        """Largest s below which psi still varies (the 'knee' for Moser
        profiles); the constant stretch past it carries no gradient."""
        dpsi = np.abs(np.diff(self.psi))
        big = np.nonzero(dpsi > 1e-13 * (dpsi.max() + 1e-300))[0]
        if big.size == 0:
            return self.dsig
        return float(self.dsig * (big[-1] + 1))

    def diagnostics(self):
        s = self.s[1:]
        ratio = np.abs(self.psi[1:]) / np.sqrt(s)
        interior = float(ratio.max()) + 1e-300
        dn = np.sqrt(self.dpsi_l2_sq())
        return {
            "psi_at_0": float(abs(self.psi[0])),
            "dpsi_l2": float(dn),
            "weighted_l2": float(np.sqrt(self.weighted_l2_sq())),
            "left_ratio": float(ratio[0] / interior),
            "right_ratio": float(ratio[-1] / interior),
            "max_sqrt_ratio": float(interior),
        }

    def validate(self, strict=True):
        """Hard invariants always; endpoint smallness of psi/sqrt(s)
        only when strict (synthetic profiles).  Recovered profiles keep
        the numbers in diagnostics() instead."""
        d = self.diagnostics()
        if d["psi_at_0"] > 1e-9 * (np.max(np.abs(self.psi)) + 1e-300):
            raise ValueError("profile must vanish at s = 0")
        if not np.isfinite(d["dpsi_l2"]) or not np.isfinite(d["weighted_l2"]):
            raise ValueError("profile norms must be finite")
        if strict and (d["left_ratio"] >= 0.1 or d["right_ratio"] >= 0.1):
            raise ValueError(
                f"psi/sqrt(s) endpoint ratios {d['left_ratio']:.3g}, "
                f"{d['right_ratio']:.3g} not below 0.1 x interior max")
        return d

    def holder_check(self, max_pairs=1500):
        """|psi(s) - psi(t)| <= ||psi'|| |s - t|^{1/2} on grid pairs
        (Cauchy-Schwarz makes this an identity for sampled data; the
        check guards the implementation).  Returns the worst quotient
        relative to ||psi'||."""
        stride = max(1, self.psi.size // max_pairs)
        psi = self.psi[::stride]
        s = self.s[::stride]
        dn = np.sqrt(self.dpsi_l2_sq()) + 1e-300
        dpsi = np.abs(psi[:, None] - psi[None, :])
        dist = np.sqrt(np.abs(s[:, None] - s[None, :]))
        np.fill_diagonal(dist, np.inf)
        return float(np.max(dpsi / dist) / dn)

    def scaled(self, c):
        return Profile(self.dsig, c * self.psi)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write("s,psi\n")
            for s, v in zip(self.s, self.psi):
                fh.write(f"{s:.17g},{v:.17g}\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "s,psi":
            raise FieldFormatError("expected header 's,psi'")
        rows = np.array([[float(t) for t in ln.split(",")] for ln in lines[1:]])
        s, psi = rows[:, 0], rows[:, 1]
        dsig = s[1] - s[0]
        if abs(s[0]) > 1e-12 or np.max(np.abs(np.diff(s) - dsig)) > 1e-9 * dsig:
            raise FieldFormatError("profile grid must be uniform from s = 0")
        return cls(float(dsig), psi)


def moser_profile(a, dsig=DEFAULT_DSIG, S_max=None):
    """psi(s) = min(s, a) / sqrt(a): unit derivative norm, maximal
    psi/sqrt(s) ratio 1 attained at the knee s = a.  The default window
    S_max = 101 a keeps the right endpoint of psi/sqrt(s) under the
    0.1 x interior-max validation bound."""
    if a <= 0:
        raise ValueError("knee location must be positive")
    a = round(a / dsig) * dsig  # knee exactly on a profile node
    if S_max is None:
        S_max = 101.0 * a
    n = int(round(S_max / dsig)) + 1
    s = dsig * np.arange(n)
    return Profile(dsig, np.minimum(s, a) / np.sqrt(a))


def moser_field(a, alpha=1.0, amplitude=1.0, ds=1.0 / 256, cap=GRID_CAP):
    """Moser bubble as a LogRadialField; at alpha = 1 this is the
    classical Moser function with ||grad u||_{L^2} = amplitude."""
    return elementary_concentration_profile(
        moser_profile(a).scaled(amplitude), alpha, ds=ds, cap=cap)


# ---------------------------------------------------------------------------
# Scales and cores
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleDescriptor:
    """alpha_n = c n^gamma (power) or c beta^n (geometric); parametric
    so that orthogonality, an asymptotic statement, stays decidable."""
    form: str
    c: float = 1.0
    gamma: float = 1.0
    beta: float = 2.0

    def __post_init__(self):
        if self.form not in ("power", "geometric"):
            raise ValueError(f"unknown scale form {self.form!r}")
        if self.c <= 0:
            raise ValueError("scale prefactor must be positive")
        if self.form == "power" and self.gamma <= 0:
            raise ValueError("power scales need gamma > 0 to diverge")
        if self.form == "geometric" and self.beta <= 1:
            raise ValueError("geometric scales need beta > 1 to diverge")

    def __call__(self, n):
        if self.form == "power":
            return self.c * float(n) ** self.gamma
        return self.c * self.beta ** float(n)

    def log_alpha(self, n):
        if self.form == "power":
            return np.log(self.c) + self.gamma * np.log(n)
        return np.log(self.c) + np.asarray(n, dtype=float) * np.log(self.beta)

    def to_dict(self):
        d = {"form": self.form, "c": self.c}
        d["gamma" if self.form == "power" else "beta"] = (
            self.gamma if self.form == "power" else self.beta)
        return d

    @classmethod
    def from_dict(cls, d):
        if d["form"] == "power":
            return cls("power", float(d["c"]), gamma=float(d["gamma"]))
        return cls("geometric", float(d["c"]), beta=float(d["beta"]))


@dataclass(frozen=True)
class CoreDescriptor:
    """x_n = point + direction * e^{-rate n}; rate = 0 is a constant
    core.  The exponential form realizes the core-orthogonality branch
    -log|x_n - x~_n| / alpha_n -> a."""
    point: tuple = (0.0, 0.0)
    rate: float = 0.0
    direction: tuple = (0.0, 0.0)

    def __call__(self, n):
        if self.rate == 0.0:
            return np.array(self.point, dtype=float)
        return np.array(self.point, dtype=float) + \
            np.exp(-self.rate * float(n)) * np.array(self.direction, dtype=float)

    def is_constant(self):
        return self.rate == 0.0 or (self.direction[0] == 0.0 and self.direction[1] == 0.0)

    def to_dict(self):
        if self.is_constant():
            return [self.point[0], self.point[1]]
        return {"form": "exp", "point": list(self.point), "rate": self.rate,
                "direction": list(self.direction)}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, (list, tuple)):
            return cls(point=(float(d[0]), float(d[1])))
        if d.get("form") != "exp":
            raise ValueError(f"unknown core form {d!r}")
        return cls(point=tuple(map(float, d["point"])), rate=float(d["rate"]),
                   direction=tuple(map(float, d["direction"])))


@dataclass
class ConcentrationTriplet:
    scale: ScaleDescriptor
    profile: Profile
    core: CoreDescriptor = dc_field(default_factory=CoreDescriptor)

    def to_json_dict(self, profile_path):
        return {"scale": self.scale.to_dict(), "core": self.core.to_dict(),
                "profile": str(profile_path)}

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        prof_spec = d["profile"]
        if isinstance(prof_spec, str) and prof_spec.startswith("moser:"):
            a = float(prof_spec.split("=", 1)[1])
            profile = moser_profile(a)
        else:
            profile = Profile.load(prof_spec)
        return cls(ScaleDescriptor.from_dict(d["scale"]), profile,
                   CoreDescriptor.from_dict(d.get("core", [0.0, 0.0])))


# ---------------------------------------------------------------------------
# Elementary concentrations
# ---------------------------------------------------------------------------

def _bubble_grid(alpha, profile, ds, cap):
    """Grid step alpha*dsig/m (breakpoints on nodes) over
    [-1, 2*alpha*knee + 45]; the constant stretch beyond it is the
    implied plateau, its weighted tails handled in closed form."""
    knee = profile.slope_support_end()
    s_end = 2.0 * alpha * knee + 45.0
    base = alpha * profile.dsig
    m = max(1, round(base / ds))
    ds_eff = base / m
    if (s_end + 1.0) / ds_eff > cap:
        m_max = int(cap * base / (s_end + 1.0))
        if m_max < 1:
            raise GridBudgetError(
                f"bubble at alpha={alpha:.3g} needs more than {cap} samples")
        ds_eff = base / m_max
    n_down = int(np.ceil(1.0 / ds_eff))
    n = n_down + int(np.ceil(s_end / ds_eff)) + 1
    return -n_down * ds_eff, ds_eff, n


def elementary_concentration_profile(profile, alpha, ds=1.0 / 256, cap=GRID_CAP):
    """v(s) = sqrt(alpha / 2 pi) psi(s / alpha) on an aligned grid."""
    if alpha <= 0:
        raise ValueError("scale must be positive")
    s_min, ds_eff, n = _bubble_grid(alpha, profile, ds, cap)
    s = s_min + ds_eff * np.arange(n)
    vals = np.sqrt(alpha / (2.0 * np.pi)) * profile(s / alpha)
    return LogRadialField(s_min, ds_eff, vals)


def elementary_concentration(triplet, n, ds=1.0 / 256, cap=GRID_CAP):
    """Bubble at index n as a LogRadialField; requires an origin core
    (translated cores only materialize on Field2D)."""
    core = triplet.core(n)
    if core[0] != 0.0 or core[1] != 0.0:
        raise ValueError("log-radial materialization needs the core at the origin")
    return elementary_concentration_profile(triplet.profile, triplet.scale(n),
                                            ds=ds, cap=cap)


def superpose_concentrations(triplets, n, ds=1.0 / 256, cap=GRID_CAP):
    """sum_j g_n^{(j)} on one shared grid, step tied to the smallest
    scale so integer scale ratios keep every breakpoint on a node."""
    alphas = [t.scale(n) for t in triplets]
    knees = [t.profile.slope_support_end() for t in triplets]
    for t in triplets:
        c = t.core(n)
        if c[0] != 0.0 or c[1] != 0.0:
            raise ValueError("log-radial superposition needs origin cores")
    s_end = 2.0 * max(a * k for a, k in zip(alphas, knees)) + 45.0
    base = min(alphas) * triplets[0].profile.dsig
    m = max(1, round(base / ds))
    ds_eff = base / m
    if (s_end + 1.0) / ds_eff > cap:
        ds_eff = (s_end + 1.0) / cap
    n_down = int(np.ceil(1.0 / ds_eff))
    npts = n_down + int(np.ceil(s_end / ds_eff)) + 1
    s = -n_down * ds_eff + ds_eff * np.arange(npts)
    vals = np.zeros(npts)
    for t, a in zip(triplets, alphas):
        vals += np.sqrt(a / (2.0 * np.pi)) * t.profile(s / a)
    return LogRadialField(float(s[0]), ds_eff, vals)


def concentration_field2d(triplet, n, extent=2.0, h=1.0 / 128):
    """Bubble materialized on a Cartesian grid around its core; used by
    the core finder.  The cell containing the core takes the plateau."""
    alpha = triplet.scale(n)
    x0 = triplet.core(n)
    npts = int(round(2 * extent / h)) + 1
    x = -extent + h * np.arange(npts)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    r = np.hypot(xx - x0[0], yy - x0[1])
    with np.errstate(divide="ignore"):
        y = np.where(r > 0, -np.log(np.where(r > 0, r, 1.0)) / alpha, np.inf)
    vals = np.sqrt(alpha / (2.0 * np.pi)) * np.where(
        np.isinf(y), float(triplet.profile.psi[-1]), triplet.profile(np.where(np.isinf(y), 0.0, y)))
    return Field2D(h, (-extent, -extent), vals)


# ---------------------------------------------------------------------------
# Asymptotic formulas
# ---------------------------------------------------------------------------

def concentration_limit_norm(profile):
    """Limit of ||g_n||_{L^{phi_p}}: (1/sqrt(4 pi)) max_{s>0} |psi|/sqrt(s);
    independent of kappa and of p."""
    return profile.max_sqrt_ratio() / np.sqrt(FOUR_PI)


def profile_lq_power(profile, alpha, q):
    """Right side of the change-of-variables identity:

        ||g_n||_{L^q}^q = (2 pi)^{1-q/2} alpha^{q/2+1}
                          int_0^inf |psi|^q e^{-2 alpha s} ds,

    integrated in the substituted variable t = 2 alpha s so the weight
    is resolved independently of alpha."""
    c = 2.0 * alpha
    t_cut = min(60.0, c * profile.S_max)
    n = max(2048, int(t_cut / (c * profile.dsig) * 8) + 2)
    n = min(n, 2 ** 21)
    t = np.linspace(0.0, t_cut, n)
    vals = profile(t / c)
    dt = t[1] - t[0]
    integral = power_exp_integral(vals, 0.0, dt, q, 1.0) / c
    if c * profile.S_max > t_cut:
        # constant stretch between t_cut and the profile window end
        tail = power_exp_integral(
            np.array([profile(t_cut / c), float(profile.psi[-1])]),
            t_cut, c * profile.S_max - t_cut, q, 1.0,
            tail_value=float(profile.psi[-1])) / c
        integral += tail
    else:
        integral += abs(float(profile.psi[-1])) ** q * np.exp(-t_cut) / c
    return float((2.0 * np.pi) ** (1.0 - q / 2.0) * alpha ** (q / 2.0 + 1.0) * integral)


# ---------------------------------------------------------------------------
# Orthogonality of triplets
# ---------------------------------------------------------------------------

ORTH_SCALE = "orthogonal-by-scale"
ORTH_CORE = "orthogonal-by-core"
SAME = "same"
UNDETERMINED = "undetermined"

LOG_RATIO_THRESHOLD = 5.0  # |log(alpha~/alpha)| at n_max, with growth


def _profile_null_below(profile, a, tol=1e-12):
    if a <= 0:
        return False
    mask = profile.s < a - 1e-12
    if not np.any(mask):
        return False
    return bool(np.max(np.abs(profile.psi[mask])) <= tol * (np.max(np.abs(profile.psi)) + 1e-300))


def orthogonality_test(t1, t2, n_range=(10, 30, 100, 300, 1000)):
    """Decide Def-style orthogonality of two triplets on a finite index
    ladder.  Asymptotic statements forced through finite n stay
    heuristic, hence the 'undetermined' verdict."""
    n_arr = np.asarray(sorted(n_range), dtype=float)
    lr = np.abs(t1.scale.log_alpha(n_arr) - t2.scale.log_alpha(n_arr))
    if lr[-1] >= LOG_RATIO_THRESHOLD and lr[-1] > lr[0] + 1e-9:
        return ORTH_SCALE
    if np.max(lr) > 1e-9:
        return UNDETERMINED  # scales differ but do not separate
    # equal scales: compare cores
    seps = np.array([np.linalg.norm(t1.core(n) - t2.core(n)) for n in n_arr])
    if np.all(seps == 0.0):
        return SAME
    alphas = np.array([t1.scale(n) for n in n_arr])
    with np.errstate(divide="ignore"):
        a_seq = -np.log(seps) / alphas
    if not np.all(np.isfinite(a_seq)):
        return UNDETERMINED
    a_lim = a_seq[-1]
    converged = abs(a_seq[-1] - a_seq[-2]) <= 0.05 * (1.0 + abs(a_lim))
    if converged and a_lim >= -1e-9:
        a_lim = max(a_lim, 0.0)
        if _profile_null_below(t1.profile, a_lim) or _profile_null_below(t2.profile, a_lim):
            return ORTH_CORE
    return UNDETERMINED


def sum_norm_limit(triplets, n, params, ds=1.0 / 256, cap=GRID_CAP):
    """Luxemburg norm of sum_j g_n^{(j)} at index n.  With pairwise
    scale-orthogonal triplets this converges to the maximum of the
    individual limit norms; same-scale different-core superpositions
    are constructible but carry no such convergence."""
    verdicts = [orthogonality_test(a, b)
                for i, a in enumerate(triplets) for b in triplets[i + 1:]]
    if any(v != ORTH_SCALE for v in verdicts):
        raise ValueError(f"triplets are not pairwise scale-orthogonal: {verdicts}")
    field = superpose_concentrations(triplets, n, ds=ds, cap=cap)
    return luxemburg_norm(field, params)
