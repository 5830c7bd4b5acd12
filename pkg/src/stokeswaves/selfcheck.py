"""Invariant suite run by ``stokeswaves selfcheck``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import PhysicalParams
from .reduction import (
    basis_vectors,
    coords,
    embed,
    kernel_basis,
    preconditioner_apply,
    project_V,
    project_W,
    reduced_grad,
    reduced_phi,
    reflect,
    rotate,
    sympl_form,
)
from .wavefield import (
    SpectralGrid,
    SurfaceState,
    ddx,
    dno_apply,
    dno_collocation,
    hamiltonian_wahlen,
    inner,
    linearized_apply,
    momentum,
    residual,
    TWO_PI,
)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tol": self.tol, "passed": self.passed}


def random_state(rng, n_modes: int, size: float, decay: float = 0.5) -> SurfaceState:
    """Random smooth state with ||eta|| = ||zeta|| = size and zero means."""
    k = np.arange(n_modes + 1)
    parts = []
    for _ in range(2):
        c = (rng.normal(size=n_modes + 1) + 1j * rng.normal(size=n_modes + 1)) * np.exp(-decay * k)
        c[0] = 0.0
        parts.append(c * size / math.sqrt(inner(c, c)))
    return SurfaceState(*parts)


def five_point(f, h: float) -> float:
    """Fourth-order central difference f'(0)."""
    return (8.0 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12.0 * h)


def run_selfcheck(params: PhysicalParams, grid: SpectralGrid, j_star: int, seed: int = 0, trials: int = 4) -> list:
    rng = np.random.default_rng(seed)
    kernel = kernel_basis(params, grid, j_star)
    n = grid.n_modes
    c = kernel.c_star
    checks = []

    def add(name, value, tol):
        checks.append(Check(name, float(value), tol))

    # kernel basis: null vectors of L_{c*} with W(v1, v2) = 1
    worst_null = worst_norm = 0.0
    for j in kernel.modes:
        v1, v2 = basis_vectors(params, n, j)
        worst_null = max(worst_null, linearized_apply(params, grid, c, v1).norm(),
                         linearized_apply(params, grid, c, v2).norm())
        worst_norm = max(worst_norm, abs(sympl_form(grid, v1, v2) - 1.0))
    add("kernel vectors annihilated by L_c*", worst_null, 1e-12)
    add("symplectic normalization of the kernel basis", worst_norm, 1e-14)

    # projector algebra and the preconditioner
    idem = cross = pre = 0.0
    for _ in range(trials):
        u = random_state(rng, n, 1.0)
        pv = project_V(kernel, u)
        idem = max(idem, (project_V(kernel, pv) - pv).norm())
        cross = max(cross, project_V(kernel, project_W(kernel, u)).norm())
        r = project_W(kernel, u)
        back = project_W(kernel, linearized_apply(params, grid, c, preconditioner_apply(params, kernel, r)))
        pre = max(pre, (back - r).norm())
    add("P_V idempotent", idem, 1e-12)
    add("P_V P_W = 0", cross, 1e-12)
    add("P_W L_c* A = identity on W", pre, 1e-10)

    # Dirichlet-Neumann operator: series against a direct Laplace solve
    dno_err = sym = mean = 0.0
    for _ in range(trials):
        eta = random_state(rng, n, 0.02).eta
        psi1, psi2 = random_state(rng, n, 1.0).eta, random_state(rng, n, 1.0).zeta
        g1 = dno_apply(params, grid, eta, psi1)
        g2 = dno_apply(params, grid, eta, psi2)
        dno_err = max(dno_err, float(np.abs(g1 - dno_collocation(params, eta, psi1)).max()))
        sym = max(sym, abs(inner(g1, psi2) - inner(psi1, g2)))
        mean = max(mean, abs(dno_collocation(params, eta, psi1)[0]))
    add("DNO series vs Laplace collocation", dno_err, 1e-8)
    add("DNO self-adjoint", sym, 1e-10)
    add("DNO zero mean", mean, 1e-10)

    # F(c, u) - c u_x is the symplectic gradient of H
    u = random_state(rng, n, 0.02)
    f = residual(params, grid, c, u)
    flow = SurfaceState(f.eta - c * ddx(u.eta), f.zeta - c * ddx(u.zeta))
    worst = 0.0
    h = 1e-6
    for _ in range(trials):
        d = random_state(rng, n, 1.0)
        fd = (hamiltonian_wahlen(params, grid, u + h * d) - hamiltonian_wahlen(params, grid, u - h * d)) / (2 * h)
        worst = max(worst, abs(fd / TWO_PI - sympl_form(grid, flow, d)) / max(1.0, abs(fd / TWO_PI)))
    add("vector field equals J grad H", worst, 1e-7)

    # reduced gradient against finite differences of Phi
    v = 0.01 * rng.normal(size=kernel.dim)
    cc = c + 1e-3
    g = reduced_grad(params, kernel, grid, cc, v)
    fd = np.array([
        five_point(lambda t: reduced_phi(params, kernel, grid, cc, v + t * e), 1e-4)
        for e in np.eye(kernel.dim)
    ])
    add("reduced gradient vs finite differences", np.abs(fd - g).max() / np.abs(g).max(), 1e-6)

    # O(2) equivariance of F and invariance of Phi; exact only up to aliasing,
    # so the states are resolved well inside the grid
    eq_t = eq_s = 0.0
    for _ in range(trials):
        u = random_state(rng, n, 0.02, decay=3.0)
        theta = rng.uniform(0.0, TWO_PI)
        f = residual(params, grid, c, u)
        eq_t = max(eq_t, (residual(params, grid, c, u.translate(theta)) - f.translate(theta)).norm())
        eq_s = max(eq_s, (residual(params, grid, c, u.reflect()) + f.reflect()).norm())
    add("F commutes with translations", eq_t, 1e-12)
    add("F anticommutes with the reflection", eq_s, 1e-12)
    theta = rng.uniform(0.0, TWO_PI)
    phi0 = reduced_phi(params, kernel, grid, cc, v)
    inv = max(
        abs(reduced_phi(params, kernel, grid, cc, rotate(kernel, v, theta)) - phi0),
        abs(reduced_phi(params, kernel, grid, cc, reflect(kernel, v)) - phi0),
    )
    add("Phi invariant under the group action", inv, 1e-12)
    rot = embed(kernel, rotate(kernel, v, theta))
    add("rotation of coordinates matches translation", (rot - embed(kernel, v).translate(theta)).norm(), 1e-14)
    add("coordinates round trip", np.abs(coords(kernel, embed(kernel, v)).flat - v).max(), 1e-15)
    add("momentum invariant under translation",
        abs(momentum(grid, u.translate(theta)) - momentum(grid, u)), 1e-15)
    return checks
