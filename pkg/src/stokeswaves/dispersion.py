"""Linear dispersion relation, phase speed and kernel classification.

Gravity-capillary waves on a flow of constant vorticity, wavelength 2*pi.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ResonanceSearchError, UnsupportedConfigurationError
from .formats import fmt

RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class PhysicalParams:
    """Gravity, depth (``math.inf`` for deep water), surface tension, vorticity."""

    g: float = 1.0
    depth: float = math.inf
    kappa: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("g", "depth", "kappa", "gamma"):
            value = float(getattr(self, name))
            if math.isnan(value):
                raise DomainError(f"{name} is NaN")
            object.__setattr__(self, name, value)
        if not self.g > 0:
            raise DomainError("gravity must be positive")
        if not self.depth > 0:
            raise DomainError("depth must be positive or inf")
        if not self.kappa >= 0 or math.isinf(self.kappa):
            raise DomainError("surface tension must be finite and non-negative")
        if math.isinf(self.gamma):
            raise DomainError("vorticity must be finite")

    @property
    def deep(self) -> bool:
        return math.isinf(self.depth)

    def replace(self, **changes) -> "PhysicalParams":
        values = dict(g=self.g, depth=self.depth, kappa=self.kappa, gamma=self.gamma)
        values.update(changes)
        return PhysicalParams(**values)

    def as_dict(self) -> dict:
        return dict(g=self.g, depth=self.depth, kappa=self.kappa, gamma=self.gamma)


def _check_nonzero(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise DomainError("wavenumber must be nonzero")
    return xi


def _tanh_ratio(params, xi):
    # tanh(h xi) / xi, the flat Dirichlet-Neumann symbol divided by xi**2
    if params.deep:
        return 1.0 / np.abs(xi)
    return np.tanh(params.depth * xi) / xi


def _plus_sqrt(a, x):
    # a + sqrt(x + a**2) without cancellation when a < 0
    r = np.sqrt(x + a * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a >= 0, a + r, x / (r - a))
    return out


def omega(params: PhysicalParams, xi):
    """Dispersion relation Omega_xi (vectorized over ``xi``)."""
    xi = _check_nonzero(xi)
    t = np.sign(xi) if params.deep else np.tanh(params.depth * xi)
    a = 0.5 * params.gamma * t
    x = (params.g + params.kappa * xi * xi) * xi * t
    out = _plus_sqrt(a, x)
    return out if out.ndim else float(out)


def phase_speed(params: PhysicalParams, xi=None, limit: str | None = None):
    """Phase speed f(xi) = Omega_xi / xi.

    With ``limit="+"`` or ``limit="-"`` the one-sided limit at xi = 0 is
    returned instead (possibly infinite).
    """
    if limit is not None:
        return _limit_at_zero(params, limit)
    xi = _check_nonzero(xi)
    s = np.sign(xi)
    r = _tanh_ratio(params, xi)
    a = 0.5 * params.gamma * r
    x = (params.g + params.kappa * xi * xi) * r
    # f = a + s*sqrt(x + a^2); rewrite the cancelling branch
    root = np.sqrt(x + a * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a * s >= 0, a + s * root, s * x / (root - s * a))
    return out if out.ndim else float(out)


def _limit_at_zero(params, side):
    if side not in ("+", "-"):
        raise DomainError("limit must be '+' or '-'")
    g, h, gamma = params.g, params.depth, params.gamma
    sgn = 1.0 if side == "+" else -1.0
    if not params.deep:
        return 0.5 * gamma * h + sgn * math.sqrt((g + 0.25 * gamma * gamma * h) * h)
    # deep water: finite only on the side opposite to the vorticity sign
    if gamma * sgn < 0:
        return sgn * g / abs(gamma)
    return sgn * math.inf


def bond_numbers(params: PhysicalParams) -> tuple[float, float]:
    """Vorticity-modified Bond numbers (B_plus, B_minus); finite depth only."""
    if params.deep:
        raise UnsupportedConfigurationError("Bond numbers need a finite depth")
    g, h, kappa, gamma = params.g, params.depth, params.kappa, params.gamma
    base = kappa / (g * h * h) - h * gamma * gamma / (6.0 * g)
    # h g^2/(6g) * sqrt(1 + 4g/(h g^2)) written so that gamma = 0 is regular
    spread = abs(gamma) * math.sqrt(h * (h * gamma * gamma + 4.0 * g)) / (6.0 * g)
    return base - spread, base + spread


def curvature_scale(params: PhysicalParams) -> float:
    """The factor alpha in lim f''(0+-) = +-alpha (B_+- - 1/3)."""
    g, h, gamma = params.g, params.depth, params.gamma
    return 2.0 * g * h**3 / math.sqrt((4.0 * g + gamma * gamma * h) * h)


def bifurcation_speed(params: PhysicalParams, j_star: int) -> float:
    j_star = int(j_star)
    if j_star == 0:
        raise DomainError("j_star must be nonzero")
    return float(omega(params, j_star)) / j_star


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    bond_plus: float | None
    bond_minus: float | None
    # shape of f on each half line: "increasing", "decreasing", "minimum", "maximum"
    positive_side: str
    negative_side: str

    def side(self, sign: int) -> str:
        return self.positive_side if sign > 0 else self.negative_side


def kernel_regime(params: PhysicalParams) -> RegimeReport:
    """Monotonicity regime of f on both half lines."""
    if params.deep:
        if params.kappa > 0:
            return RegimeReport("2a", None, None, "minimum", "maximum")
        return RegimeReport("2b", None, None, "decreasing", "decreasing")
    b_plus, b_minus = bond_numbers(params)
    if params.kappa == 0:
        return RegimeReport("1b", b_plus, b_minus, "decreasing", "decreasing")
    # the formula for f'' holds for gamma >= 0; negative vorticity mirrors the sides
    b_pos, b_neg = (b_plus, b_minus) if params.gamma >= 0 else (b_minus, b_plus)
    pos = "increasing" if b_pos >= 1.0 / 3.0 else "minimum"
    neg = "increasing" if b_neg >= 1.0 / 3.0 else "maximum"
    return RegimeReport("1a", b_plus, b_minus, pos, neg)


@dataclass(frozen=True)
class ClassificationRecord:
    params: PhysicalParams
    j_star: int
    c_star: float
    kernel_dim: int
    partner: int | None
    bond_plus: float | None
    bond_minus: float | None
    regime: str
    partner_residual: float | None = None
    nearest_residual: float | None = None

    def as_dict(self) -> dict:
        out = self.params.as_dict()
        out.update(
            j_star=self.j_star,
            c_star=self.c_star,
            kernel_dim=self.kernel_dim,
            partner=self.partner,
            bond_plus=self.bond_plus,
            bond_minus=self.bond_minus,
            regime=self.regime,
            partner_residual=self.partner_residual,
            nearest_residual=self.nearest_residual,
        )
        return out


def resonance_threshold(c_star: float, j, tol: float = RESONANCE_TOL):
    return tol * np.maximum(1.0, np.abs(c_star * np.asarray(j, dtype=float)))


def classify_kernel(
    params: PhysicalParams, j_star: int, j_max: int = 256, tol: float = RESONANCE_TOL
) -> ClassificationRecord:
    """Kernel dimension of the linearized operator at the bifurcation speed.

    A partner j (same sign as ``j_star``, ``|j| <= j_max``) is resonant when
    ``|Omega_j - c* j| <= tol * max(1, |c* j|)``.
    """
    j_star = int(j_star)
    if j_star == 0:
        raise DomainError("j_star must be nonzero")
    if j_max < abs(j_star):
        raise DomainError("j_max must be at least |j_star|")
    if not tol > 0:
        raise DomainError("tol must be positive")
    c_star = bifurcation_speed(params, j_star)
    report = kernel_regime(params)
    sign = 1 if j_star > 0 else -1
    base = dict(
        params=params,
        j_star=j_star,
        c_star=c_star,
        bond_plus=report.bond_plus,
        bond_minus=report.bond_minus,
        regime=report.regime,
    )
    if report.side(sign) in ("increasing", "decreasing"):
        # f is strictly monotone on this half line: no other integer shares c*
        return ClassificationRecord(kernel_dim=2, partner=None, **base)
    js = sign * np.arange(1, j_max + 1)
    js = js[js != j_star]
    if js.size == 0:
        return ClassificationRecord(kernel_dim=2, partner=None, **base)
    res = np.abs(omega(params, js) - c_star * js)
    ratio = res / resonance_threshold(c_star, js, 1.0)
    best = int(np.argmin(ratio))
    if res[best] <= resonance_threshold(c_star, js[best], tol):
        return ClassificationRecord(
            kernel_dim=4,
            partner=int(js[best]),
            partner_residual=float(res[best]),
            nearest_residual=float(res[best]),
            **base,
        )
    return ClassificationRecord(
        kernel_dim=2, partner=None, nearest_residual=float(res[best]), **base
    )


@dataclass
class ResonanceSearch:
    kappa: float
    roots: list = field(default_factory=list)
    residual: float = 0.0
    bracket_hi: float = 0.0


def find_resonant_kappa(
    g: float,
    depth: float,
    gamma: float,
    j_star: int,
    j: int,
    kappa_max: float = 1e8,
    samples: int = 400,
    full_output: bool = False,
):
    """Smallest surface tension at which modes ``j_star`` and ``j`` share a phase speed."""
    j_star, j = int(j_star), int(j)
    if j_star == 0 or j == 0 or abs(j) <= abs(j_star) or (j > 0) != (j_star > 0):
        raise DomainError("need 1 <= |j_star| < |j| with equal signs")
    sign = 1.0 if j_star > 0 else -1.0

    def gap(kappa):
        p = PhysicalParams(g, depth, kappa, gamma)
        return sign * (phase_speed(p, float(j)) - phase_speed(p, float(j_star)))

    lo_value = gap(0.0)
    if lo_value >= 0:
        raise ResonanceSearchError(
            "phase-speed gap is not negative at zero surface tension",
            {"gap_at_zero": lo_value},
        )
    hi = min(1.0, kappa_max)
    while gap(hi) <= 0:
        if hi >= kappa_max:
            raise ResonanceSearchError(
                "no sign change below the surface-tension cap",
                {"kappa_max": kappa_max, "gap_at_cap": gap(kappa_max)},
            )
        hi = min(2.0 * hi, kappa_max)
    # scan for every sign change inside the bracket, smallest first
    grid = np.concatenate(([0.0], np.geomspace(hi * 1e-9, hi, samples)))
    values = np.array([gap(k) for k in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(brentq(gap, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
    if values[-1] == 0:
        roots.append(float(grid[-1]))
    kappa = roots[0]
    result = ResonanceSearch(kappa=kappa, roots=roots, residual=abs(gap(kappa)), bracket_hi=hi)
    return result if full_output else kappa


def atlas_scan(grid: dict, j_star=None, j_max: int = 256, tol: float = RESONANCE_TOL, threads: int = 1):
    """Classify every point of a Cartesian parameter grid, in grid order.

    ``grid`` maps ``g``, ``depth``, ``kappa``, ``gamma`` and ``j_star`` to a
    value or a list of values. ``j_star`` may also be passed separately.
    """
    axes = []
    for name in ("g", "depth", "kappa", "gamma", "j_star"):
        value = grid.get(name, j_star if name == "j_star" else None)
        if value is None:
            raise DomainError(f"grid is missing '{name}'")
        values = list(value) if isinstance(value, (list, tuple, np.ndarray)) else [value]
        if not values:
            raise DomainError(f"grid axis '{name}' is empty")
        axes.append(values)
    points = list(itertools.product(*axes))

    def one(point):
        g, depth, kappa, gamma, js = point
        return classify_kernel(PhysicalParams(g, depth, kappa, gamma), int(js), j_max, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, points))
    return [one(p) for p in points]


ATLAS_COLUMNS = (
    "g", "depth", "kappa", "gamma", "j_star", "c_star",
    "kernel_dim", "partner", "bond_plus", "bond_minus", "regime",
)


def write_atlas(records, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(ATLAS_COLUMNS)
    for r in records:
        p = r.params
        writer.writerow([
            fmt(p.g), fmt(p.depth), fmt(p.kappa), fmt(p.gamma), fmt(r.j_star),
            fmt(r.c_star), fmt(r.kernel_dim), fmt(r.partner),
            fmt(r.bond_plus), fmt(r.bond_minus), r.regime,
        ])
