"""Symplectic splitting over the kernel and the reduced functional.

Kernel coordinates follow u = sum_j alpha_j v_j1 + beta_j v_j2 with
v_j1 = (M_j cos jx, sin jx / M_j) and v_j2 = (-M_j sin jx, cos jx / M_j).
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .dispersion import RESONANCE_TOL, PhysicalParams, bifurcation_speed, classify_kernel, omega
from .errors import (
    DomainError,
    ExpansionDivergenceError,
    GridTooSmallError,
    NonConvergenceError,
    ProjectionLeakError,
)
from .wavefield import (
    TWO_PI,
    SpectralGrid,
    SurfaceState,
    hamiltonian_wahlen,
    inner,
    linear_symbols,
    momentum,
    residual,
)

V_GUARD = 0.2
C_GUARD = 0.5


def m_symbol(params: PhysicalParams, j) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    _, g0, a = linear_symbols(params, 0.0, np.abs(j))
    return (g0 / a) ** 0.25


@dataclass(frozen=True)
class KernelData:
    params: PhysicalParams
    grid: SpectralGrid
    j_star: int
    modes: tuple
    c_star: float
    m_symbols: dict
    resonance_tol: float = RESONANCE_TOL

    @property
    def dim(self) -> int:
        return 2 * len(self.modes)

    @property
    def partner(self):
        return self.modes[1] if len(self.modes) > 1 else None


def kernel_basis(
    params: PhysicalParams, grid: SpectralGrid, j_star: int, tol: float = RESONANCE_TOL, modes=None
) -> KernelData:
    """Kernel of L_{c*}: resonant modes, speed and scaling symbols.

    ``modes`` forces the mode set (e.g. to treat a resonant case as if it
    were not); by default it is found by scanning ``|j| <= N``.
    """
    j_star = int(j_star)
    n = grid.n_modes
    if j_star == 0:
        raise DomainError("j_star must be nonzero")
    if abs(j_star) > n:
        raise GridTooSmallError(f"|j_star| = {abs(j_star)} exceeds N = {n}")
    c_star = bifurcation_speed(params, j_star)
    if modes is None:
        record = classify_kernel(params, j_star, max(256, n), tol)
        modes = (j_star,) if record.partner is None else (j_star, record.partner)
        if record.partner is not None and abs(record.partner) > n:
            raise GridTooSmallError(
                f"resonant partner {record.partner} is not resolved by N = {n}"
            )
    modes = tuple(int(j) for j in modes)
    if modes[0] != j_star or any((j > 0) != (j_star > 0) for j in modes):
        raise DomainError("mode set must start with j_star and share its sign")
    ms = {j: float(m_symbol(params, j)) for j in modes}
    return KernelData(params, grid, j_star, modes, c_star, ms, tol)


@lru_cache(maxsize=256)
def basis_vectors(params: PhysicalParams, n_modes: int, j: int):
    """(v_j1, v_j2) as states with ``n_modes`` modes."""
    k, s = abs(int(j)), (1 if j > 0 else -1)
    m = float(m_symbol(params, j))
    e1, z1, e2, z2 = (np.zeros(n_modes + 1, dtype=complex) for _ in range(4))
    e1[k] = 0.5 * m
    z1[k] = -0.5j * s / m
    e2[k] = 0.5j * s * m
    z2[k] = 0.5 / m
    return SurfaceState(e1, z1), SurfaceState(e2, z2)


def sympl_form(grid, u1: SurfaceState, u2: SurfaceState) -> float:
    """W(u1, u2) = (1/2pi) int (eta1 zeta2 - eta2 zeta1) dx."""
    return inner(u1.eta, u2.zeta) - inner(u2.eta, u1.zeta)


class ReducedVector:
    """Kernel coordinates (alpha_j, beta_j), one row per mode of the kernel."""

    def __init__(self, kernel: KernelData, values):
        if isinstance(values, dict):
            if set(values) != set(kernel.modes):
                raise DomainError("coordinate keys must equal the kernel mode set")
            values = [values[j] for j in kernel.modes]
        arr = np.array(values, dtype=float).reshape(len(kernel.modes), 2)
        self.kernel = kernel
        self.coords = arr

    @property
    def flat(self) -> np.ndarray:
        return self.coords.ravel().copy()

    def as_dict(self) -> dict:
        return {j: (float(a), float(b)) for j, (a, b) in zip(self.kernel.modes, self.coords)}

    def __repr__(self):
        return f"ReducedVector({self.as_dict()})"


def as_flat(kernel: KernelData, v) -> np.ndarray:
    if isinstance(v, ReducedVector):
        return v.flat
    if isinstance(v, dict):
        return ReducedVector(kernel, v).flat
    v = np.asarray(v, dtype=float).ravel()
    if v.size != kernel.dim:
        raise DomainError(f"expected {kernel.dim} kernel coordinates, got {v.size}")
    return v


def _mode_array(kernel) -> np.ndarray:
    return np.repeat(np.asarray(kernel.modes, dtype=float), 2)


def star_norm_sq(kernel: KernelData, v) -> float:
    """||v||_*^2 = 1/2 sum |j| (alpha_j^2 + beta_j^2)."""
    v = as_flat(kernel, v)
    return 0.5 * float(np.sum(np.abs(_mode_array(kernel)) * v * v))


def quadratic_momentum(kernel: KernelData, v) -> float:
    """Momentum of the kernel vector itself: -1/2 sum j (alpha_j^2 + beta_j^2)."""
    v = as_flat(kernel, v)
    return -0.5 * float(np.sum(_mode_array(kernel) * v * v))


def rotate(kernel: KernelData, v, theta: float) -> np.ndarray:
    """Coordinates of the translate tau_theta u."""
    v = as_flat(kernel, v).reshape(-1, 2)
    out = np.empty_like(v)
    for i, j in enumerate(kernel.modes):
        cs, sn = math.cos(j * theta), math.sin(j * theta)
        out[i] = (cs * v[i, 0] + sn * v[i, 1], -sn * v[i, 0] + cs * v[i, 1])
    return out.ravel()


def reflect(kernel: KernelData, v) -> np.ndarray:
    v = as_flat(kernel, v).reshape(-1, 2).copy()
    v[:, 1] *= -1.0
    return v.ravel()


def coords(kernel: KernelData, state: SurfaceState) -> ReducedVector:
    n = state.n_modes
    rows = []
    for j in kernel.modes:
        v1, v2 = basis_vectors(kernel.params, n, j)
        rows.append((sympl_form(None, state, v2), -sympl_form(None, state, v1)))
    return ReducedVector(kernel, rows)


def embed(kernel: KernelData, v, n_modes: int | None = None) -> SurfaceState:
    n = kernel.grid.n_modes if n_modes is None else n_modes
    v = as_flat(kernel, v).reshape(-1, 2)
    out = SurfaceState.zeros(n)
    for (alpha, beta), j in zip(v, kernel.modes):
        v1, v2 = basis_vectors(kernel.params, n, j)
        out = out + alpha * v1 + beta * v2
    return out


def project_V(kernel: KernelData, state: SurfaceState) -> SurfaceState:
    return embed(kernel, coords(kernel, state), state.n_modes)


def project_W(kernel: KernelData, state: SurfaceState) -> SurfaceState:
    return state - project_V(kernel, state)


def _mode_coordinates(params, state, k):
    # coordinates (p, q) of mode k of ``state`` on V_k and V_-k
    out = {}
    for j in (k, -k):
        v1, v2 = basis_vectors(params, state.n_modes, j)
        out[j] = (sympl_form(None, state, v2), -sympl_form(None, state, v1))
    return out


def preconditioner_symbols(params: PhysicalParams, c: float, k):
    """Multiplier entries (A11, A12, A21) built from c, Omega_{+-k} and M_k."""
    k = np.asarray(k, dtype=float)
    om_p = omega(params, k)
    om_m = omega(params, -k)
    m2 = m_symbol(params, k) ** 2
    denom = (c * k - om_p) * (c * k + om_m)
    a11 = 0.5 * (2.0 * c * k + om_m - om_p) / denom
    a12 = 0.5 * m2 * (om_p + om_m) / denom
    a21 = 0.5 / m2 * (om_p + om_m) / denom
    return a11, a12, a21


def preconditioner_apply(
    params: PhysicalParams, kernel: KernelData, r: SurfaceState, c: float | None = None, leak_tol: float = 1e-9
) -> SurfaceState:
    """Inverse of Pi_W L_c on W (c defaults to c*).

    On each wavenumber k the block [[i theta, g0], [-a, i theta]] is inverted
    by the multipliers [[-i A11, A12], [-A21, -i A11]] (same operator, real
    symbols); wavenumbers carrying a kernel mode are inverted on the
    complementary plane only.  The constant rule maps g v0_2 to -v0_1.
    """
    c = kernel.c_star if c is None else c
    n = r.n_modes
    scale = max(1.0, r.norm())
    resonant = {abs(j) for j in kernel.modes}
    eta = np.zeros(n + 1, dtype=complex)
    zeta = np.zeros(n + 1, dtype=complex)
    eta[0] = -r.zeta[0] / params.g
    plain = np.array([k for k in range(1, n + 1) if k not in resonant], dtype=int)
    if plain.size:
        a11, a12, a21 = preconditioner_symbols(params, c, plain.astype(float))
        re, rz = r.eta[plain], r.zeta[plain]
        eta[plain] = -1j * a11 * re + a12 * rz
        zeta[plain] = -a21 * re - 1j * a11 * rz
    out = SurfaceState(eta, zeta)
    for k in sorted(resonant):
        if k > n:
            continue
        parts = _mode_coordinates(params, r, k)
        for j, (p, q) in parts.items():
            if j in kernel.modes:
                if math.hypot(p, q) > leak_tol * scale:
                    raise ProjectionLeakError(
                        f"residual has a component {math.hypot(p, q):.3e} on kernel mode {j}"
                    )
                continue
            # L_c v_j1 = d v_j2 and L_c v_j2 = -d v_j1
            d = c * j - float(omega(params, j))
            v1, v2 = basis_vectors(params, n, j)
            out = out + (q / d) * v1 - (p / d) * v2
    return out


@dataclass
class RangeDiagnostics:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    contraction_factor: float = float("nan")
    achieved_tolerance: float = float("nan")
    converged: bool = False

    def as_dict(self) -> dict:
        return dict(
            iterations=self.iterations,
            residual_history=list(self.residual_history),
            contraction_factor=self.contraction_factor,
            achieved_tolerance=self.achieved_tolerance,
            converged=self.converged,
        )


def range_solve(
    params: PhysicalParams,
    kernel: KernelData,
    grid: SpectralGrid,
    c: float,
    v,
    newton_tol: float = 1e-13,
    max_iter: int = 50,
    w0: SurfaceState | None = None,
    v_guard: float = V_GUARD,
    c_guard: float = C_GUARD,
):
    """Solve Pi_W F(c, v + w) = 0 for w in W by preconditioned fixed point.

    Returns ``(w, diagnostics)``.
    """
    vf = as_flat(kernel, v)
    if math.sqrt(star_norm_sq(kernel, vf)) > v_guard:
        raise DomainError(f"kernel vector outside the guard radius {v_guard}")
    if abs(c - kernel.c_star) > c_guard:
        raise DomainError(f"speed farther than {c_guard} from c*")
    base = embed(kernel, vf, grid.n_modes)
    w = SurfaceState.zeros(grid.n_modes) if w0 is None else w0
    diag = RangeDiagnostics()
    floor = 0
    for it in range(max_iter + 1):
        try:
            r = project_W(kernel, residual(params, grid, c, base + w))
        except ExpansionDivergenceError as exc:
            details = diag.as_dict()
            details["dno"] = exc.details
            raise NonConvergenceError("range iteration left the DNO convergence region", details)
        res = r.norm()
        diag.residual_history.append(res)
        diag.iterations = it
        if res <= newton_tol:
            diag.converged = True
            break
        hist = diag.residual_history
        if res > 1e3 * hist[0] and res > 1e-8:
            break
        if len(hist) >= 4 and res >= 0.5 * hist[-2]:
            # stagnation at the round-off floor of the residual evaluation
            floor = floor + 1 if res <= 1e3 * newton_tol else 0
            if floor >= 3:
                diag.converged = True
                break
        if it == max_iter:
            break
        w = w - preconditioner_apply(params, kernel, r, c)
    hist = diag.residual_history
    diag.achieved_tolerance = hist[-1]
    ratios = [b / a for a, b in zip(hist[1:-1], hist[2:]) if a > 0]
    diag.contraction_factor = float(np.exp(np.mean(np.log(ratios)))) if ratios else 0.0
    if not diag.converged:
        raise NonConvergenceError("range equation did not converge", diag.as_dict())
    return w, diag


def _energy(params, grid, c, u):
    return hamiltonian_wahlen(params, grid, u) / TWO_PI + c * momentum(grid, u)


def corrected_state(params, kernel, grid, c, v, **kw) -> SurfaceState:
    w, _ = range_solve(params, kernel, grid, c, v, **kw)
    return embed(kernel, v, grid.n_modes) + w


def reduced_phi(params, kernel, grid, c, v, **kw) -> float:
    """Phi(c, v) = (H + c I)(v + w(c, v)) with the normalized energy."""
    u = corrected_state(params, kernel, grid, c, v, **kw)
    return _energy(params, grid, c, u)


def kernel_gradient(kernel: KernelData, F: SurfaceState) -> np.ndarray:
    """(dPhi/dalpha_j, dPhi/dbeta_j) = (W(F, v_j1), W(F, v_j2))."""
    out = []
    for j in kernel.modes:
        v1, v2 = basis_vectors(kernel.params, F.n_modes, j)
        out.extend((sympl_form(None, F, v1), sympl_form(None, F, v2)))
    return np.array(out)


def reduced_grad(params, kernel, grid, c, v, return_state: bool = False, **kw):
    u = corrected_state(params, kernel, grid, c, v, **kw)
    grad = kernel_gradient(kernel, residual(params, grid, c, u))
    if return_state:
        return grad, u
    return grad


@dataclass
class SpeedDiagnostics:
    iterations: int
    history: list
    state: SurfaceState | None = None


def c_of_v(
    params,
    kernel,
    grid,
    v,
    tol: float = 1e-14,
    max_iter: int = 40,
    c0: float | None = None,
    full_output: bool = False,
    w0: SurfaceState | None = None,
    **kw,
):
    """Speed c(v) at which the radial derivative dPhi(c, v)[v] vanishes.

    Fixed point Delta <- -(dPhi(c* + Delta, v)[v] - 2 Delta I2(v)) / (2 I2(v)),
    where I2 is the momentum of v alone.  ``c0`` and ``w0`` warm-start the
    speed and the range correction.
    """
    vf = as_flat(kernel, v)
    q2 = quadratic_momentum(kernel, vf)
    if q2 == 0.0:
        raise DomainError("c(v) is undefined at v = 0")
    delta = 0.0 if c0 is None else c0 - kernel.c_star
    history = []
    w = w0
    u = None
    for it in range(1, max_iter + 1):
        c = kernel.c_star + delta
        w, _ = range_solve(params, kernel, grid, c, vf, w0=w, **kw)
        u = embed(kernel, vf, grid.n_modes) + w
        radial = float(kernel_gradient(kernel, residual(params, grid, c, u)) @ vf)
        new = -(radial - 2.0 * delta * q2) / (2.0 * q2)
        history.append(new)
        step = abs(new - delta)
        delta = new
        if step <= tol * max(1.0, abs(kernel.c_star)):
            break
    else:
        raise NonConvergenceError("speed map c(v) did not converge", {"history": history})
    c = kernel.c_star + delta
    if full_output:
        return c, SpeedDiagnostics(it, history, u)
    return c


def reduced_momentum(params, kernel, grid, v, **kw) -> float:
    """I(v) = momentum of v + w(c(v), v); zero at v = 0."""
    vf = as_flat(kernel, v)
    if not np.any(vf):
        return 0.0
    c, info = c_of_v(params, kernel, grid, vf, full_output=True, **kw)
    return momentum(grid, info.state)
