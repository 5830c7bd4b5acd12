"""Truncated Fourier surface states and the water-wave vector field.

A function on the circle is stored as its half spectrum ``c[k]``, k = 0..N,
so that f(x) = c[0] + 2 Re sum_k c[k] exp(ikx).  States hold (eta, zeta)
in Wahlen variables; zeta has zero mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from .dispersion import PhysicalParams
from .errors import DomainError, ExpansionDivergenceError, GridTooSmallError

TWO_PI = 2.0 * math.pi
ROUNDOFF_FLOOR = 1e-8


@dataclass(frozen=True)
class SpectralGrid:
    """N retained modes, P collocation points (P >= 3N), DNO series order M."""

    n_modes: int
    n_collocation: int | None = None
    dno_order: int = 6
    dno_tol: float = 1e-13
    dno_max_order: int = 60

    def __post_init__(self):
        if int(self.n_modes) < 1:
            raise GridTooSmallError("need at least one Fourier mode")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        if self.n_collocation is None:
            object.__setattr__(self, "n_collocation", 4 * self.n_modes)
        if self.n_collocation < 3 * self.n_modes:
            raise GridTooSmallError("n_collocation must be at least 3 * n_modes")
        if self.dno_order < 0:
            raise DomainError("dno_order must be non-negative")

    @property
    def x(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_collocation) / self.n_collocation

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.n_modes + 1, dtype=float)


def to_grid(coef, n_points: int) -> np.ndarray:
    coef = np.asarray(coef)
    full = np.zeros(n_points // 2 + 1, dtype=complex)
    m = min(len(coef), len(full))
    full[:m] = coef[:m]
    return irfft(full, n_points) * n_points


def to_coef(values, n_modes: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    c = rfft(values) / len(values)
    out = np.zeros(n_modes + 1, dtype=complex)
    m = min(n_modes + 1, len(c))
    out[:m] = c[:m]
    out[0] = out[0].real
    return out


def inner(a, b) -> float:
    """Normalized L2 product (1/2pi) int f g dx of two half spectra."""
    return float((a[0] * np.conj(b[0])).real + 2.0 * np.sum((a[1:] * np.conj(b[1:])).real))


def ddx(coef) -> np.ndarray:
    return 1j * np.arange(len(coef)) * coef


def antiderivative(coef) -> np.ndarray:
    """Zero-mean primitive of the mean-free part."""
    k = np.arange(len(coef), dtype=float)
    out = np.zeros(len(coef), dtype=complex)
    out[1:] = coef[1:] / (1j * k[1:])
    return out


def flat_dno_symbol(params: PhysicalParams, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if params.deep:
        return np.abs(k)
    return k * np.tanh(params.depth * k)


def flat_dno_apply(params: PhysicalParams, grid: SpectralGrid | None, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return flat_dno_symbol(params, np.arange(len(psi))) * psi


def _vertical_table(params, k, m_max):
    # row m: m-th vertical derivative at y = 0 of the harmonic extension of exp(ikx)
    g0 = flat_dno_symbol(params, k)
    m = np.arange(m_max + 1)[:, None]
    even = k[None, :] ** m
    odd = k[None, :] ** np.maximum(m - 1, 0) * g0[None, :]
    return np.where(m % 2 == 0, even, odd)


def dno_terms(
    params: PhysicalParams,
    eta,
    psi,
    order: int,
    tol: float = 0.0,
    max_order: int | None = None,
    n_out: int | None = None,
):
    """Homogeneous terms G_n(eta) psi of the Taylor series in eta.

    Returns the list of half spectra with ``n_out`` modes (default: those of
    ``psi``).
    With ``tol > 0`` terms are added beyond ``order`` until the last one is
    below ``tol`` times the first (or ``max_order`` is reached).
    """
    eta = np.asarray(eta, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    n_eta, n_psi = len(eta) - 1, len(psi) - 1
    n_out = n_psi if n_out is None else n_out
    max_order = order if max_order is None else max(order, max_order)
    q = [psi.copy()]  # coefficient arrays of the harmonic trace at y = 0
    terms = []
    norms = []
    rising = 0
    cap = -1
    n = 0

    def traces(s):
        # L_m q_{s-m}, m = 1..s, on the grid, stacked with d/dx of each
        m = np.arange(1, s + 1)
        rows = symbols[m] * padded[s - m]
        both = irfft(np.concatenate([rows, 1j * k * rows]), size, axis=-1) * size
        return both[:s], both[s:]

    while True:
        if n > cap:
            # products up to order cap are exact (alias free) on this grid
            cap = max(cap + max(4, cap // 2), order)
            size = next_fast_len(2 * (n_psi + (cap + 2) * n_eta) + 2)
            half = size // 2 + 1
            k = np.arange(half, dtype=float)
            symbols = _vertical_table(params, k, cap + 2)
            x_eta = to_grid(eta, size)
            x_eta_x = to_grid(ddx(eta), size)
            powers = np.empty((cap + 3, size))
            powers[0] = 1.0
            for m in range(1, cap + 3):
                powers[m] = powers[m - 1] * x_eta / m
            padded = np.zeros((cap + 3, half), dtype=complex)
            for i, qi in enumerate(q):
                padded[i, : len(qi)] = qi
            # fields[s]: L_m q_{s-m} for m = 1..s and their x-derivatives
            fields = {}

        # G_n psi = sum_{m=0}^{n} eta^m/m! L_{m+1} q_{n-m}
        #           - eta_x sum_{m=0}^{n-1} eta^m/m! d/dx L_m q_{n-1-m}
        # q_{n+1} = -sum_{m=1}^{n+1} eta^m/m! L_m q_{n+1-m}
        # m = 0 in the derivative sum is d/dx q_{n-1} (L_0 = identity)
        fields[n + 1] = traces(n + 1)
        vals = fields[n + 1][0]
        acc_g = np.einsum("ij,ij->j", powers[: n + 1], vals)
        if n:
            deriv = [to_grid(ddx(q[n - 1]), size)[None, :]]
            if n >= 2:
                if n - 1 not in fields:
                    fields[n - 1] = traces(n - 1)
                deriv.append(fields[n - 1][1])
            acc_g -= x_eta_x * np.einsum("ij,ij->j", powers[:n], np.concatenate(deriv))
        acc_q = -np.einsum("ij,ij->j", powers[1 : n + 2], vals)
        spectra = rfft(np.stack([acc_g, acc_q]), axis=-1) / size
        fields.pop(n - 1, None)
        term = np.zeros(n_out + 1, dtype=complex)
        m_keep = min(n_out, n_psi + n * n_eta) + 1
        term[1:m_keep] = spectra[0, 1:m_keep]
        terms.append(term)
        # next trace correction q_{n+1}, needed for the following order
        q_next = spectra[1, : n_psi + (n + 1) * n_eta + 1].copy()
        q_next[0] = q_next[0].real
        q.append(q_next)
        if n + 1 <= cap:
            padded[n + 1, : len(q_next)] = q_next

        norms.append(float(np.linalg.norm(terms[-1])))
        if n >= 2 and norms[-1] > 0 and norms[-1] >= norms[-2]:
            rising += 1
        else:
            rising = 0
        if rising >= 2:
            # growth at round-off level is a noise floor, not divergence
            if norms[-3] > ROUNDOFF_FLOOR * max(norms):
                raise ExpansionDivergenceError(
                    "Dirichlet-Neumann series diverges", {"term_norms": norms}
                )
            del terms[-2:]
            break
        if n >= order:
            if tol <= 0 or n >= max_order:
                break
            scale = max(norms[0], max(norms))
            if norms[-1] <= tol * scale:
                break
        n += 1
    return terms


def dno_apply(
    params: PhysicalParams,
    grid: SpectralGrid,
    eta,
    psi,
    order: int | None = None,
    n_out: int | None = None,
) -> np.ndarray:
    """Dirichlet-Neumann operator G(eta) psi by its Taylor series in eta.

    The series runs to at least ``grid.dno_order`` and grows until the last
    term is below ``grid.dno_tol`` relative to the largest.
    """
    if order is None:
        terms = dno_terms(
            params, eta, psi, grid.dno_order, grid.dno_tol, grid.dno_max_order, n_out
        )
    else:
        terms = dno_terms(params, eta, psi, order, n_out=n_out)
    out = np.sum(terms, axis=0)
    out[0] = 0.0
    return out


def dno_collocation(params: PhysicalParams, eta, psi, n_basis: int | None = None) -> np.ndarray:
    """G(eta) psi by a direct Laplace solve, independent of the series.

    The potential is expanded in the harmonic functions exp(ky) cos kx,
    exp(ky) sin kx (cosh(k(y + h)) / cosh(kh) in finite depth), fitted to
    psi at 2K + 1 points of the surface and differentiated along its normal.
    """
    eta = np.asarray(eta, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    n = len(psi) - 1
    n_basis = n_basis or 4 * max(n, len(eta) - 1)
    size = 2 * n_basis + 1
    x = TWO_PI * np.arange(size) / size
    y = to_grid(eta, size)
    slope = to_grid(ddx(eta), size)
    k = np.arange(1, n_basis + 1, dtype=float)
    if params.deep:
        vert = np.exp(np.outer(y, k))
        vert_y = vert * k
    else:
        h = params.depth
        vert = np.cosh(np.outer(y + h, k)) / np.cosh(k * h)
        vert_y = k * np.sinh(np.outer(y + h, k)) / np.cosh(k * h)
    cs, sn = np.cos(np.outer(x, k)), np.sin(np.outer(x, k))
    matrix = np.hstack([np.ones((size, 1)), cs * vert, sn * vert])
    sol = np.linalg.solve(matrix, to_grid(psi, size))
    b, c = sol[1 : n_basis + 1], sol[n_basis + 1 :]
    phi_y = (cs * vert_y) @ b + (sn * vert_y) @ c
    phi_x = (-sn * vert * k) @ b + (cs * vert * k) @ c
    return to_coef(phi_y - slope * phi_x, n)


@dataclass(frozen=True, eq=False)
class SurfaceState:
    """Half spectra of (eta, zeta); residuals share this shape."""

    eta: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        eta = np.array(self.eta, dtype=complex)
        zeta = np.array(self.zeta, dtype=complex)
        if eta.shape != zeta.shape or eta.ndim != 1 or len(eta) < 2:
            raise DomainError("eta and zeta must be 1-d spectra of equal length")
        if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(zeta))):
            raise DomainError("state coefficients must be finite")
        eta[0] = eta[0].real
        zeta[0] = zeta[0].real
        eta.flags.writeable = False
        zeta.flags.writeable = False
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "zeta", zeta)

    @classmethod
    def zeros(cls, n_modes: int) -> "SurfaceState":
        return cls(np.zeros(n_modes + 1), np.zeros(n_modes + 1))

    @classmethod
    def from_grid(cls, eta, zeta, n_modes: int) -> "SurfaceState":
        return cls(to_coef(eta, n_modes), to_coef(zeta, n_modes))

    @property
    def n_modes(self) -> int:
        return len(self.eta) - 1

    def __add__(self, other):
        return SurfaceState(self.eta + other.eta, self.zeta + other.zeta)

    def __sub__(self, other):
        return SurfaceState(self.eta - other.eta, self.zeta - other.zeta)

    def __mul__(self, s):
        return SurfaceState(s * self.eta, s * self.zeta)

    __rmul__ = __mul__

    def __neg__(self):
        return SurfaceState(-self.eta, -self.zeta)

    def dot(self, other) -> float:
        return inner(self.eta, other.eta) + inner(self.zeta, other.zeta)

    def norm(self) -> float:
        """L2 norm with the normalized measure dx / 2pi."""
        return math.sqrt(max(self.dot(self), 0.0))

    def mean_free(self) -> "SurfaceState":
        z = self.zeta.copy()
        z[0] = 0.0
        return SurfaceState(self.eta, z)

    def translate(self, theta: float) -> "SurfaceState":
        """u(x - theta)."""
        phase = np.exp(-1j * np.arange(self.n_modes + 1) * theta)
        return SurfaceState(self.eta * phase, self.zeta * phase)

    def reflect(self) -> "SurfaceState":
        """(eta(-x), -zeta(-x))."""
        return SurfaceState(np.conj(self.eta), -np.conj(self.zeta))

    def resize(self, n_modes: int) -> "SurfaceState":
        eta = np.zeros(n_modes + 1, dtype=complex)
        zeta = np.zeros(n_modes + 1, dtype=complex)
        m = min(n_modes, self.n_modes) + 1
        eta[:m] = self.eta[:m]
        zeta[:m] = self.zeta[:m]
        return SurfaceState(eta, zeta)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.eta.real, self.eta.imag, self.zeta.real, self.zeta.imag])

    @classmethod
    def from_vector(cls, v) -> "SurfaceState":
        n = len(v) // 4
        return cls(v[:n] + 1j * v[n : 2 * n], v[2 * n : 3 * n] + 1j * v[3 * n :])

    def physical(self, n_points: int | None = None):
        n_points = n_points or 4 * self.n_modes
        return to_grid(self.eta, n_points), to_grid(self.zeta, n_points)

    def to_json_obj(self) -> dict:
        def rows(c):
            return [[k, float(v.real), float(v.imag)] for k, v in enumerate(c)]

        return {"N": self.n_modes, "eta": rows(self.eta), "zeta": rows(self.zeta)}

    @classmethod
    def from_json_obj(cls, obj) -> "SurfaceState":
        n = int(obj["N"])
        out = []
        for key in ("eta", "zeta"):
            c = np.zeros(n + 1, dtype=complex)
            for k, re, im in obj[key]:
                k = int(k)
                if not 0 <= k <= n:
                    raise DomainError(f"mode {k} outside 0..{n}")
                c[k] = complex(re, im)
            out.append(c)
        return cls(*out)


def wahlen_forward(params: PhysicalParams, grid, eta, psi) -> SurfaceState:
    """(eta, psi) -> (eta, zeta) with zeta = psi - gamma/2 * primitive of eta."""
    eta = np.asarray(eta, dtype=complex)
    zeta = np.asarray(psi, dtype=complex) - 0.5 * params.gamma * antiderivative(eta)
    zeta = zeta.copy()
    zeta[0] = 0.0
    return SurfaceState(eta, zeta)


def wahlen_backward(params: PhysicalParams, grid, state: SurfaceState):
    psi = state.zeta + 0.5 * params.gamma * antiderivative(state.eta)
    return state.eta.copy(), psi


def _collocation_size(grid, n_modes):
    if grid is None:
        return 4 * n_modes
    return max(grid.n_collocation, 3 * n_modes)


def hamiltonian(params: PhysicalParams, grid: SpectralGrid, eta, psi) -> float:
    """Energy integral over one period (plain measure dx)."""
    eta = np.asarray(eta, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    n = len(eta) - 1
    size = _collocation_size(grid, n)
    g_psi = dno_apply(params, grid, eta, psi)
    x_eta = to_grid(eta, size)
    x_eta_x = to_grid(ddx(eta), size)
    x_psi_x = to_grid(ddx(psi), size)
    kinetic = 0.5 * TWO_PI * inner(psi, g_psi)
    density = (
        0.5 * params.g * x_eta**2
        + params.kappa * (np.sqrt(1.0 + x_eta_x**2) - 1.0)
        + 0.5 * params.gamma * (-x_psi_x * x_eta**2 + params.gamma / 3.0 * x_eta**3)
    )
    return kinetic + TWO_PI * float(np.mean(density))


def hamiltonian_wahlen(params: PhysicalParams, grid: SpectralGrid, state: SurfaceState) -> float:
    eta, psi = wahlen_backward(params, grid, state)
    return hamiltonian(params, grid, eta, psi)


def momentum(grid, state: SurfaceState) -> float:
    """Momentum (1/2pi) int eta_x zeta dx."""
    return inner(ddx(state.eta), state.zeta)


def time_derivative(params: PhysicalParams, grid: SpectralGrid, state: SurfaceState) -> SurfaceState:
    """(eta_t, zeta_t) of the water-wave system in Wahlen variables."""
    n = state.n_modes
    size = _collocation_size(grid, n)
    gamma = params.gamma
    eta, psi = wahlen_backward(params, grid, state)
    # G(eta) psi is kept up to the collocation band: its modes above N enter
    # the quadratic terms of the psi equation
    g_wide = dno_apply(params, grid, eta, psi, n_out=(size - 1) // 2)
    g_psi = g_wide[: n + 1]
    x_eta = to_grid(eta, size)
    x_eta_x = to_grid(ddx(eta), size)
    x_psi_x = to_grid(ddx(psi), size)
    x_gpsi = to_grid(g_wide, size)

    eta_t = g_psi + to_coef(gamma * x_eta * x_eta_x, n)
    eta_t[0] = 0.0
    slope = x_eta_x / np.sqrt(1.0 + x_eta_x**2)
    pointwise = (
        -params.g * x_eta
        - 0.5 * x_psi_x**2
        + (x_eta_x * x_psi_x + x_gpsi) ** 2 / (2.0 * (1.0 + x_eta_x**2))
        + gamma * x_eta * x_psi_x
    )
    psi_t = to_coef(pointwise, n) + params.kappa * ddx(to_coef(slope, n)) + gamma * antiderivative(g_psi)
    # Bernoulli gauge of the Hamiltonian vector field: the explicit equation
    # omits the constant -(gamma^2/2) <eta^2>, which only shifts the mean
    psi_t[0] -= 0.5 * gamma**2 * float(np.mean(x_eta**2))
    zeta_t = psi_t - 0.5 * gamma * antiderivative(eta_t)
    return SurfaceState(eta_t, zeta_t)


def residual(params: PhysicalParams, grid: SpectralGrid, c: float, state: SurfaceState) -> SurfaceState:
    """Traveling-wave map F(c, u) = c u_x + J grad H(u)."""
    rate = time_derivative(params, grid, state)
    return SurfaceState(c * ddx(state.eta) + rate.eta, c * ddx(state.zeta) + rate.zeta)


def linear_symbols(params: PhysicalParams, c: float, k):
    """Entries (theta, g0, a) of the mode-k block [[i theta, g0], [-a, i theta]].

    Mode 0 is returned with theta = g0 = 0 and a = g.
    """
    k = np.asarray(k, dtype=float)
    g0 = flat_dno_symbol(params, k)
    safe = np.where(k == 0, 1.0, k)
    theta = np.where(k == 0, 0.0, c * k - 0.5 * params.gamma * g0 / safe)
    a = np.where(
        k == 0, params.g,
        params.g + params.kappa * k * k + 0.25 * params.gamma**2 * g0 / safe**2,
    )
    return theta, g0, a


def linearized_apply(params: PhysicalParams, grid, c: float, direction: SurfaceState) -> SurfaceState:
    """Linearization L_c of F(c, .) at the flat state."""
    theta, g0, a = linear_symbols(params, c, np.arange(direction.n_modes + 1))
    eta, zeta = direction.eta, direction.zeta.copy()
    zeta[0] = 0.0
    return SurfaceState(1j * theta * eta + g0 * zeta, -a * eta + 1j * theta * zeta)


def decay_rate(state: SurfaceState, floor: float = 1e-14) -> float:
    """Fitted exponential decay rate of |eta_k| + |zeta_k| (analyticity diagnostic)."""
    mag = np.abs(state.eta[1:]) + np.abs(state.zeta[1:])
    k = np.arange(1, len(mag) + 1)
    keep = mag > floor * max(mag.max(initial=0.0), 1e-300)
    if keep.sum() < 2:
        return math.inf
    slope = np.polyfit(k[keep], np.log(mag[keep]), 1)[0]
    return float(-slope)
