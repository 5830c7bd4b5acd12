"""Drivers that turn critical points of the reduced functional into Stokes waves.

Three programs share the machinery here: the non-resonant branch (one
kernel mode, a scalar equation for the speed), resonant waves at a fixed
speed (critical points of Phi(c, .) on a 4-d kernel, plus a string-method
mountain-pass search) and resonant waves at a fixed momentum (extrema of
the energy on the level set of the reduced momentum).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .dispersion import RESONANCE_TOL, PhysicalParams
from .errors import DomainError, GeometryError, MisuseError, NonConvergenceError, StokesError
from .reduction import (
    C_GUARD,
    V_GUARD,
    KernelData,
    ReducedVector,
    as_flat,
    c_of_v,
    coords,
    embed,
    kernel_basis,
    kernel_gradient,
    range_solve,
    reflect,
    rotate,
    star_norm_sq,
)
from .wavefield import TWO_PI, SpectralGrid, SurfaceState, hamiltonian_wahlen, momentum, residual

DISTINCT_TOL = 1e-6
A_GUARD = 0.25 * V_GUARD**2
GRAD_TOL = 1e-12
RANGE_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class BranchPoint:
    """A Stokes wave: speed, full state and the bookkeeping around it.

    ``amplitude`` is the kernel scale epsilon on non-resonant branches and
    the prescribed momentum a for fixed-momentum solutions.  ``energy`` is
    the Hamiltonian with the normalized measure dx / 2pi.
    """

    c: float
    state: SurfaceState
    amplitude: float
    momentum: float
    residual_norm: float
    orbit_tag: ReducedVector
    coords: np.ndarray
    energy: float

    @property
    def phi(self) -> float:
        return self.energy + self.c * self.momentum

    def harmonics(self, count: int) -> np.ndarray:
        """Amplitudes 2|eta_k| of the first ``count`` surface harmonics."""
        out = np.zeros(count)
        m = min(count, self.state.n_modes)
        out[:m] = 2.0 * np.abs(self.state.eta[1 : m + 1])
        return out


def _map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class _Reduced:
    """Phi(c, .) with range solves warm-started from the previous call."""

    def __init__(self, params, kernel, grid, c, newton_tol=RANGE_TOL):
        self.params, self.kernel, self.grid, self.c = params, kernel, grid, c
        self.newton_tol = newton_tol
        self.w = None

    def state(self, v, c=None, w0=None):
        c = self.c if c is None else c
        start = self.w if w0 is None else w0
        try:
            w, _ = range_solve(self.params, self.kernel, self.grid, c, v, self.newton_tol, w0=start)
        except NonConvergenceError:
            if start is None:
                raise
            w, _ = range_solve(self.params, self.kernel, self.grid, c, v, self.newton_tol)
        self.w = w
        return embed(self.kernel, v, self.grid.n_modes) + w

    def grad(self, v, c=None):
        c = self.c if c is None else c
        u = self.state(v, c)
        return kernel_gradient(self.kernel, residual(self.params, self.grid, c, u))

    def phi(self, v, c=None):
        c = self.c if c is None else c
        u = self.state(v, c)
        return _energy(self.params, self.grid, u) + c * momentum(self.grid, u)

    def phi_grad(self, v, w0=None):
        u = self.state(v, self.c, w0)
        value = _energy(self.params, self.grid, u) + self.c * momentum(self.grid, u)
        g = kernel_gradient(self.kernel, residual(self.params, self.grid, self.c, u))
        return value, g, self.w


def _energy(params, grid, u) -> float:
    return hamiltonian_wahlen(params, grid, u) / TWO_PI


def _newton(fun, x0, tol, max_iter=30, rel_step=1e-6, floor=None):
    """Damped Newton with a forward-difference Jacobian.

    Returns ``(x, |f|, iterations, converged)``.  A step that cannot reduce
    |f| ends the iteration; it counts as converged below ``floor``.
    """
    floor = 100.0 * tol if floor is None else floor
    x = np.array(x0, dtype=float)
    f = np.asarray(fun(x), dtype=float)
    nf = float(np.linalg.norm(f))
    for it in range(max_iter):
        if nf <= tol:
            return x, nf, it, True
        h = rel_step * max(float(np.linalg.norm(x)), 1e-3)
        jac = np.empty((f.size, x.size))
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            jac[:, i] = (np.asarray(fun(x + e)) - f) / h
        dx = np.linalg.lstsq(jac, -f, rcond=None)[0]
        lam = 1.0
        while lam >= 1.0 / 64.0:
            try:
                ft = np.asarray(fun(x + lam * dx), dtype=float)
            except StokesError:
                ft = None
            if ft is not None and np.linalg.norm(ft) < nf:
                break
            lam *= 0.5
        else:
            return x, nf, it, nf <= floor
        x, f = x + lam * dx, ft
        nf = float(np.linalg.norm(f))
    return x, nf, max_iter, nf <= tol


def _assemble(params, kernel, grid, c, u, amplitude, tol) -> BranchPoint:
    res = residual(params, grid, c, u).norm()
    if not res <= tol:
        raise NonConvergenceError(
            f"residual {res:.3e} exceeds the tolerance {tol:.1e}", {"c": c, "residual_norm": res}
        )
    v = coords(kernel, u).flat
    return BranchPoint(
        c=float(c),
        state=u,
        amplitude=float(amplitude),
        momentum=momentum(grid, u),
        residual_norm=float(res),
        orbit_tag=orbit_tag(kernel, v),
        coords=v,
        energy=_energy(params, grid, u),
    )


# ---------------------------------------------------------------- O(2) orbits


def orbit_tag(kernel: KernelData, v) -> ReducedVector:
    """Representative of the orbit of v under translations and reflection.

    The first nonzero block is rotated onto its positive alpha axis and the
    first remaining nonzero beta is made positive.
    """
    x = as_flat(kernel, v).reshape(-1, 2)
    scale = float(np.abs(x).max()) if x.size else 0.0
    if scale == 0.0:
        return ReducedVector(kernel, x)
    tiny = 1e-12 * scale
    i = next(i for i, row in enumerate(x) if math.hypot(*row) > tiny)
    theta = math.atan2(x[i, 1], x[i, 0]) / kernel.modes[i]
    y = rotate(kernel, x, theta).reshape(-1, 2)
    y[i, 1] = 0.0
    for row in y[i + 1 :]:
        if abs(row[1]) > tiny:
            if row[1] < 0:
                y[:, 1] *= -1.0
            break
    return ReducedVector(kernel, y)


def _best_rotation(kernel, v1, v2) -> float:
    # maximize <v1, tau_theta v2>_* = sum_j A_j cos(j theta) + B_j sin(j theta)
    a = v1.reshape(-1, 2)
    b = v2.reshape(-1, 2)
    j = np.asarray(kernel.modes, dtype=float)
    w = 0.5 * np.abs(j)
    big_a = w * (a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1])
    big_b = w * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    n = 64 * int(np.abs(j).max())
    th = TWO_PI * np.arange(n) / n
    vals = np.cos(np.outer(th, j)) @ big_a + np.sin(np.outer(th, j)) @ big_b
    t = th[int(np.argmax(vals))]
    for _ in range(30):
        cs, sn = np.cos(j * t), np.sin(j * t)
        d1 = np.sum(j * (big_b * cs - big_a * sn))
        d2 = -np.sum(j * j * (big_a * cs + big_b * sn))
        if d2 >= 0.0:
            break
        step = d1 / d2
        t -= step
        if abs(step) < 1e-16:
            break
    return float(t)


def orbit_distance(kernel: KernelData, v1, v2) -> float:
    """min over g in O(2) of ||v1 - g v2||_*."""
    v1 = as_flat(kernel, v1)
    v2 = as_flat(kernel, v2)
    best = math.inf
    for cand in (v2, reflect(kernel, v2)):
        t = _best_rotation(kernel, v1, cand)
        d = math.sqrt(star_norm_sq(kernel, v1 - rotate(kernel, cand, t)))
        best = min(best, d)
    return best


def orbit_distinct(kernel: KernelData, v1, v2, tol: float = DISTINCT_TOL) -> bool:
    return orbit_distance(kernel, v1, v2) > tol


# ---------------------------------------------------------- non-resonant branch


def nonresonant_branch(
    params: PhysicalParams,
    grid: SpectralGrid,
    j_star: int,
    epsilons,
    tol: float = 1e-10,
    max_iter: int = 40,
    threads: int = 1,
    resonance_tol: float = RESONANCE_TOL,
    range_tol: float = RANGE_TOL,
) -> list:
    """Points u = eps v_{j*,1} + w on the branch bifurcating from c*.

    For each eps the speed solves dPhi/dalpha(c, eps, 0) = 0 by secant
    iteration; beta = 0 by reflection symmetry.
    """
    kernel = kernel_basis(params, grid, j_star, resonance_tol)
    if kernel.dim != 2:
        raise MisuseError(
            f"mode {j_star} resonates with {kernel.partner}; use the resonant drivers",
            {"modes": list(kernel.modes)},
        )
    def one(eps):
        return _branch_point(params, kernel, grid, float(eps), tol, max_iter, range_tol)

    return _map(one, epsilons, threads)


def _branch_point(params, kernel, grid, eps, tol, max_iter, range_tol=RANGE_TOL):
    if eps == 0.0:
        return _assemble(params, kernel, grid, kernel.c_star, SurfaceState.zeros(grid.n_modes), 0.0, tol)
    v = np.array([eps, 0.0])
    if math.sqrt(star_norm_sq(kernel, v)) > V_GUARD:
        raise DomainError(f"|epsilon| = {abs(eps)} outside the guard radius")
    prob = _Reduced(params, kernel, grid, kernel.c_star, range_tol)

    def g(c):
        return prob.grad(v, c)[0] / eps

    # dPhi/dalpha / eps = -j* (c - c*) + O(eps^2) fixes the first step
    c0, g0 = kernel.c_star, g(kernel.c_star)
    c1 = c0 + g0 / kernel.j_star
    history = [c0]
    for _ in range(max_iter):
        g1 = g(c1)
        history.append(c1)
        if g1 == g0 or abs(c1 - c0) <= 4e-16 * max(1.0, abs(c1)):
            break
        c0, c1, g0 = c1, c1 - g1 * (c1 - c0) / (g1 - g0), g1
    else:
        raise NonConvergenceError("secant iteration for the speed did not converge", {"history": history})
    u = prob.state(v, c1)
    return _assemble(params, kernel, grid, c1, u, eps, tol)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log|y| against log|x|."""
    lx, ly = np.log(np.abs(x)), np.log(np.abs(y))
    return float(np.polyfit(lx, ly, 1)[0])


# -------------------------------------------------------- fixed-speed search


def _resonant_kernel(params, grid, j_star, partner_j, resonance_tol=RESONANCE_TOL):
    kernel = kernel_basis(params, grid, j_star, resonance_tol)
    if kernel.dim != 4:
        raise MisuseError(f"mode {j_star} is not resonant", {"modes": list(kernel.modes)})
    if partner_j is not None and kernel.partner != int(partner_j):
        raise MisuseError(
            f"resonant partner is {kernel.partner}, not {partner_j}", {"modes": list(kernel.modes)}
        )
    return kernel


def _phase_fixed(kernel, v):
    """Rotate v so its dominant block has beta = 0; return (v, frozen index)."""
    x = as_flat(kernel, v).reshape(-1, 2)
    weights = np.abs(np.asarray(kernel.modes)) * np.hypot(x[:, 0], x[:, 1])
    i = int(np.argmax(weights))
    theta = math.atan2(x[i, 1], x[i, 0]) / kernel.modes[i]
    y = rotate(kernel, x, theta)
    y[2 * i + 1] = 0.0
    return y, 2 * i + 1


def refine_critical_point(
    params, kernel, grid, c, v0, tol: float = GRAD_TOL, max_iter: int = 30, range_tol: float = RANGE_TOL
):
    """Newton polish of a critical point of Phi(c, .) with the phase fixed.

    Rotation invariance makes the frozen gradient component vanish with the
    others, so the full gradient is checked afterwards.
    Returns ``(v, gradient norm, converged)``.
    """
    prob = _Reduced(params, kernel, grid, c, range_tol)
    x0, frozen = _phase_fixed(kernel, v0)
    free = [i for i in range(kernel.dim) if i != frozen]

    def full(y):
        x = np.zeros(kernel.dim)
        x[free] = y
        return x

    def fun(y):
        return prob.grad(full(y))[free]

    y, _, _, ok = _newton(fun, x0[free], tol, max_iter)
    v = full(y)
    gnorm = float(np.linalg.norm(prob.grad(v)))
    return v, gnorm, ok and gnorm <= 100.0 * tol


def default_radius(kernel: KernelData, c: float) -> float:
    """Search radius (star norm) for fixed-speed critical points."""
    return min(0.5 * V_GUARD, max(0.01, 6.0 * abs(c - kernel.c_star)))


def _polar_starts(kernel, radius, count):
    # symmetric plane (alpha_j*, alpha_p) in normalized coordinates
    sj, sp = (math.sqrt(abs(j) / 2.0) for j in kernel.modes)
    out = []
    for i in range(count):
        r = radius * (i + 1) / count
        for k in range(count):
            phi = TWO_PI * k / count
            out.append((i, k, np.array([r * math.cos(phi) / sj, 0.0, r * math.sin(phi) / sp, 0.0])))
    return out


def _random_starts(kernel, radius, count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x = rng.normal(size=kernel.dim)
        r = radius * rng.uniform(0.2, 1.0)
        out.append(x * r / math.sqrt(star_norm_sq(kernel, x)))
    return out


def resonant_fixed_speed(
    params: PhysicalParams,
    grid: SpectralGrid,
    j_star: int,
    partner_j,
    c: float,
    multistart: int = 16,
    tol: float = 1e-10,
    seed: int = 0,
    n_random: int = 64,
    radius: float | None = None,
    distinct_tol: float = DISTINCT_TOL,
    threads: int = 1,
    range_tol: float = RANGE_TOL,
    full_output: bool = False,
):
    """Nontrivial critical points of Phi(c, .) on a 4-d kernel, one per orbit.

    Symmetric critical points come from Newton on the plane beta = 0, seeded
    by the local minima of |grad Phi| over a ``multistart`` x ``multistart``
    polar grid; ``n_random`` seeded 4-d starts look for the rest.  An empty
    list is a legitimate outcome on the side of c* without solutions.
    """
    kernel = _resonant_kernel(params, grid, j_star, partner_j)
    delta = c - kernel.c_star
    if delta == 0.0:
        raise MisuseError("c = c* gives only the trivial solution; pick c on either side")
    if abs(delta) > C_GUARD:
        raise DomainError(f"|c - c*| = {abs(delta):.3g} exceeds the guard {C_GUARD}")
    radius = default_radius(kernel, c) if radius is None else radius
    report = {"c": c, "radius": radius, "symmetric": [], "random": [], "rejected": []}

    starts = _polar_starts(kernel, radius, multistart)
    sym = [0, 2]

    def screen(ring):
        # relative gradient size around one ring, warm-started along it
        prob = _Reduced(params, kernel, grid, c, max(range_tol, 1e-9))
        out = []
        for _, _, v in ring:
            g = prob.grad(v)[sym]
            out.append(float(np.linalg.norm(g) / math.sqrt(star_norm_sq(kernel, v))))
        return out

    rings = [starts[i * multistart : (i + 1) * multistart] for i in range(multistart)]
    score = np.array(_map(screen, rings, threads))
    seeds = []
    for i in range(multistart):
        for k in range(multistart):
            nb = [score[ii, (k + dk) % multistart] for ii in (i - 1, i, i + 1) if 0 <= ii < multistart for dk in (-1, 0, 1)]
            if score[i, k] <= min(nb):
                seeds.append(starts[i * multistart + k][2])

    def symmetric(v0):
        prob = _Reduced(params, kernel, grid, c, range_tol)

        def fun(y):
            return prob.grad(np.array([y[0], 0.0, y[1], 0.0]))[sym]

        try:
            y, nf, it, ok = _newton(fun, v0[sym], GRAD_TOL)
        except StokesError as exc:
            return None, {"start": v0.tolist(), "error": str(exc)}
        v = np.array([y[0], 0.0, y[1], 0.0])
        return (v if ok else None), {"start": v0.tolist(), "iterations": it, "grad": nf, "converged": ok}

    def general(v0):
        try:
            v, gn, ok = refine_critical_point(params, kernel, grid, c, v0, max_iter=25, range_tol=range_tol)
        except StokesError as exc:
            return None, {"start": v0.tolist(), "error": str(exc)}
        return (v if ok else None), {"start": v0.tolist(), "grad": gn, "converged": ok}

    found = []
    for key, fn, items in (
        ("symmetric", symmetric, seeds),
        ("random", general, _random_starts(kernel, radius, n_random, seed)),
    ):
        for v, info in _map(fn, items, threads):
            report[key].append(info)
            if v is not None:
                found.append(v)

    points = []
    floor = 1e-6 * radius
    for v in found:
        if math.sqrt(star_norm_sq(kernel, v)) <= floor:
            continue
        if any(not orbit_distinct(kernel, v, p.coords, distinct_tol) for p in points):
            continue
        prob = _Reduced(params, kernel, grid, c, range_tol)
        try:
            points.append(_assemble(params, kernel, grid, c, prob.state(v), 0.0, tol))
        except StokesError as exc:
            report["rejected"].append({"coords": v.tolist(), "error": str(exc)})
    points.sort(key=lambda p: (p.phi, tuple(p.orbit_tag.flat)))
    if full_output:
        return points, report
    return points


# ------------------------------------------------------------- mountain pass


@dataclass
class MountainPassResult:
    """Level of the highest path node and that node; unpacks as (level, point)."""

    level: float
    point: np.ndarray
    path: np.ndarray
    values: np.ndarray
    iterations: int
    converged: bool
    gradient_norm: float
    levels: list = field(default_factory=list)

    def __iter__(self):
        yield self.level
        yield self.point


def _low_point(kernel, phi, base, radius, n_dirs=32, ratio=1.25):
    sj, sp = (math.sqrt(abs(j) / 2.0) for j in kernel.modes[:2])

    def direction(t):
        x = np.zeros(kernel.dim)
        x[0] = math.cos(t) / sj
        x[2] = math.sin(t) / sp
        return x

    # pick the ray that falls fastest relative to the quadratic part, then march
    probe = 0.05 * radius
    dirs = [direction(TWO_PI * k / n_dirs) for k in range(n_dirs)]
    vals = [phi(probe * d) for d in dirs]
    d = dirs[int(np.argmin(vals))]
    r = probe
    while r <= radius:
        val = phi(r * d)
        if val < base:
            return r * ratio * d if ratio * r <= radius and phi(ratio * r * d) < base else r * d
        r *= ratio
    raise GeometryError(
        "no point below the base level inside the search radius: no mountain-pass geometry",
        {"radius": radius},
    )


def _reparametrize(nodes, weights, fixed):
    """Equal star-arclength spacing on each side of the climbing node."""
    out = nodes.copy()
    for lo, hi in ((0, fixed), (fixed, len(nodes) - 1)):
        if hi - lo < 2:
            continue
        seg = nodes[lo : hi + 1]
        steps = np.sqrt(0.5 * np.sum(weights * np.diff(seg, axis=0) ** 2, axis=1))
        s = np.concatenate([[0.0], np.cumsum(steps)])
        if s[-1] == 0.0:
            continue
        target = np.linspace(0.0, s[-1], hi - lo + 1)
        for col in range(nodes.shape[1]):
            out[lo : hi + 1, col] = np.interp(target, s, seg[:, col])
    return out


def mountain_pass(
    params,
    grid,
    kernel: KernelData,
    c,
    path_nodes: int = 12,
    steps: int = 150,
    end=None,
    phi=None,
    grad=None,
    radius: float | None = None,
    step_size: float | None = None,
    grad_tol: float = 1e-7,
    range_tol: float = RANGE_TOL,
) -> MountainPassResult:
    """Climbing-image string search for the min-max level of Phi(c, .).

    The path joins 0 to a point below Phi(0); interior nodes follow the
    steepest descent in the star metric and the highest node climbs along
    the path tangent.  ``phi`` and ``grad`` replace the reduced functional
    (params, grid and c are then unused); both take flat kernel coordinates.
    Raises GeometryError when the path maximum falls to the base level.
    """
    if kernel.dim != 4 and phi is None:
        raise MisuseError("mountain-pass search needs a 4-d kernel")
    if path_nodes < 3:
        raise DomainError("a path needs at least 3 nodes")
    weights = np.abs(np.repeat(np.asarray(kernel.modes, dtype=float), 2))
    caches = {}
    if phi is None:
        if c == kernel.c_star:
            raise MisuseError("c = c* has no mountain-pass geometry")
        prob = _Reduced(params, kernel, grid, c, range_tol)

        def evaluate(i, x):
            val, g, w = prob.phi_grad(x, caches.get(i))
            caches[i] = w
            return val, g

        phi_only = prob.phi
        radius = default_radius(kernel, c) * 1.5 if radius is None else radius
    else:
        if grad is None:
            raise MisuseError("an injected phi needs its gradient")

        def evaluate(i, x):
            return float(phi(x)), np.asarray(grad(x), dtype=float)

        phi_only = phi
        radius = 1.0 if radius is None else radius

    zero = np.zeros(kernel.dim)
    base = float(phi_only(zero))
    end = _low_point(kernel, phi_only, base, radius) if end is None else as_flat(kernel, end)
    if float(phi_only(end)) >= base:
        raise GeometryError("path end is not below the base level", {"end_value": float(phi_only(end))})

    nodes = np.linspace(0.0, 1.0, path_nodes)[:, None] * end[None, :]
    values = np.empty(path_nodes)
    values[0], values[-1] = base, float(phi_only(end))
    grads = np.zeros_like(nodes)
    for i in range(1, path_nodes - 1):
        values[i], grads[i] = evaluate(i, nodes[i])
    def star(x):
        return np.sqrt(0.5 * np.sum(weights * x**2, axis=-1))

    def lipschitz(x, gs):
        # largest difference quotient of the star gradient between neighbours
        dx = star(np.diff(x, axis=0))
        dg = star(np.diff(gs, axis=0))
        ok = dx > 0
        return float(np.max(dg[ok] / dx[ok])) if np.any(ok) else 0.0

    scale = 2.0 / np.where(weights > 0, weights, 1.0)
    fixed_step = step_size is not None
    levels = []
    converged = False
    gnorm = math.inf
    it = 0
    for it in range(1, steps + 1):
        top = 1 + int(np.argmax(values[1:-1]))
        levels.append(float(values[top]))
        if values[top] <= base:
            raise GeometryError(
                "path maximum fell to the base level: no mountain-pass geometry",
                {"iteration": it, "level": float(values[top])},
            )
        gstar = grads * scale
        tangents = nodes[2:] - nodes[:-2]
        tangents /= star(tangents)[:, None]
        along = 0.5 * np.sum(weights * gstar[1:-1] * tangents, axis=1)
        # interior nodes move normal to the path; the top node climbs along it
        move = np.zeros_like(nodes)
        move[1:-1] = gstar[1:-1] - along[:, None] * tangents
        # nodes already below the base level cannot carry the maximum
        move[values < base] = 0.0
        climb = gstar[top] - 2.0 * along[top - 1] * tangents[top - 1]
        move[top] = climb
        gnorm = float(star(climb))
        if gnorm <= grad_tol * max(1.0, abs(values[top])) or (
            len(levels) > 10 and abs(levels[-1] - levels[-11]) <= 1e-12 * abs(levels[-1])
        ):
            converged = True
            break
        if not fixed_step:
            lip = lipschitz(nodes[1:-1], gstar[1:-1])
            step_size = 0.5 / lip if lip > 0 else 1.0
        while True:
            trial = nodes - step_size * move
            norms = star(trial)
            outside = norms > radius
            trial[outside] *= (radius / norms[outside])[:, None]
            trial = _reparametrize(trial, weights, top)
            try:
                evaluated = [evaluate(i, trial[i]) for i in range(1, path_nodes - 1)]
                break
            except StokesError:
                step_size *= 0.5
                if step_size * gnorm < 1e-14 * max(1.0, float(star(nodes[top]))):
                    raise
        nodes = trial
        for i, (val, g) in enumerate(evaluated, start=1):
            values[i], grads[i] = val, g
    top = 1 + int(np.argmax(values[1:-1]))
    return MountainPassResult(
        level=float(values[top]),
        point=nodes[top].copy(),
        path=nodes,
        values=values.copy(),
        iterations=it,
        converged=converged,
        gradient_norm=gnorm,
        levels=levels,
    )


# ------------------------------------------------------ fixed-momentum search


def _normalized_direction(kernel, x):
    scale = np.sqrt(np.abs(np.repeat(np.asarray(kernel.modes, dtype=float), 2)) / 2.0)
    return np.asarray(x, dtype=float) / scale


@dataclass
class _LevelPoint:
    v: np.ndarray
    c: float
    energy: float
    momentum: float


def _on_level(params, kernel, grid, direction, a, c0=None, rtol=1e-9, max_iter=30, range_tol=RANGE_TOL):
    """Scale t > 0 with I(t d) = a for a unit star-norm direction d.

    Works in s = t^2, where I is nearly linear; a secant iteration guarded
    by a bracket falls back to bisection.
    """
    cache = {}

    def level(s):
        v = math.sqrt(s) * direction
        c, info = c_of_v(
            params, kernel, grid, v, c0=cache.get("c", c0), full_output=True, newton_tol=range_tol
        )
        cache["c"] = c
        m = momentum(grid, info.state)
        cache[s] = _LevelPoint(v, c, _energy(params, grid, info.state), m)
        return m - a

    s0 = abs(a)
    f0 = level(s0)
    s1 = s0 * a / (f0 + a) if f0 + a != 0 else 2.0 * s0
    if s1 <= 0:
        s1 = 0.5 * s0
    f1 = level(s1)
    lo = hi = None
    for _ in range(max_iter):
        for s, f in ((s0, f0), (s1, f1)):
            if f < 0 if a > 0 else f > 0:
                lo = s if lo is None or s > lo else lo
            else:
                hi = s if hi is None or s < hi else hi
        if abs(f1) <= rtol * abs(a):
            return cache[s1]
        s2 = s1 - f1 * (s1 - s0) / (f1 - f0) if f1 != f0 else 0.5 * (s0 + s1)
        if lo is not None and hi is not None and not min(lo, hi) < s2 < max(lo, hi):
            s2 = 0.5 * (lo + hi)
        if s2 <= 0:
            s2 = 0.5 * s1
        s0, f0, s1 = s1, f1, s2
        f1 = level(s1)
    raise NonConvergenceError("could not place the direction on the momentum level set", {"a": a})


def resonant_fixed_momentum(
    params: PhysicalParams,
    grid: SpectralGrid,
    j_star: int,
    partner_j,
    a: float,
    multistart: int = 16,
    tol: float = 1e-10,
    grad_tol: float = 1e-8,
    n_phase: int = 2,
    threads: int = 1,
    range_tol: float = RANGE_TOL,
    full_output: bool = False,
):
    """Minimum and maximum of the energy over S_a = {I(v) = a}.

    Directions on the unit sphere of normalized coordinates are scanned
    (``multistart`` angles for each of ``n_phase`` relative phases between
    the two blocks), each placed on S_a; the lowest and highest are polished
    by Newton on the critical-point system with the momentum constraint and
    the speed as unknowns.  At a solution the multiplier vanishes, so the
    reduced gradient at c(v) is checked directly.
    Returns ``(min point, max point)``.
    """
    kernel = _resonant_kernel(params, grid, j_star, partner_j)
    if a == 0.0 or (a > 0) == (kernel.j_star > 0):
        raise MisuseError("the momentum must be nonzero with sign opposite to j_star")
    if abs(a) > A_GUARD:
        raise DomainError(f"|a| = {abs(a)} exceeds the guard {A_GUARD:.3g}")

    def direction(t, psi):
        x = np.array([math.cos(t), 0.0, math.sin(t) * math.cos(psi), math.sin(t) * math.sin(psi)])
        return _normalized_direction(kernel, x)

    angles = [(TWO_PI * k / multistart, math.pi * p / n_phase) for p in range(n_phase) for k in range(multistart)]

    def place(angle):
        try:
            return _on_level(params, kernel, grid, direction(*angle), a, range_tol=range_tol)
        except StokesError:
            return None

    scan = _map(place, angles, threads)
    good = [(ang, p) for ang, p in zip(angles, scan) if p is not None]
    if not good:
        raise NonConvergenceError("no direction could be placed on the momentum level set", {"a": a})
    energies = np.array([p.energy for _, p in good])

    def refine(index, sign):
        # bounded 1-d search over the scan angle around the best grid point
        (t0, psi), best = good[index]
        width = TWO_PI / multistart
        found = {}

        def objective(t):
            pt = _on_level(params, kernel, grid, direction(t, psi), a, c0=best.c, range_tol=range_tol)
            found[t] = pt
            return sign * pt.energy

        res = minimize_scalar(objective, bounds=(t0 - width, t0 + width), method="bounded",
                              options={"xatol": 1e-7})
        pt = found.get(res.x)
        return pt if pt is not None and sign * pt.energy <= sign * best.energy else best

    picks = (refine(int(np.argmin(energies)), 1.0), refine(int(np.argmax(energies)), -1.0))
    out = []
    report = {"a": a, "scan": [[float(p.c), float(p.energy)] for _, p in good], "polish": []}
    for start in picks:
        point, info = _polish_on_level(params, kernel, grid, start, a, tol, grad_tol, range_tol)
        report["polish"].append(info)
        out.append(point)
    result = (out[0], out[1]) if out[0].energy <= out[1].energy else (out[1], out[0])
    if full_output:
        return result, report
    return result


def _polish_on_level(params, kernel, grid, start, a, tol, grad_tol, range_tol=RANGE_TOL):
    v0, frozen = _phase_fixed(kernel, start.v)
    free = [i for i in range(kernel.dim) if i != frozen]
    prob = _Reduced(params, kernel, grid, start.c, range_tol)
    scale = abs(a)

    def full(y):
        x = np.zeros(kernel.dim)
        x[free] = y[1:]
        return x

    def fun(y):
        c = kernel.c_star + y[0]
        u = prob.state(full(y), c)
        g = kernel_gradient(kernel, residual(params, grid, c, u))
        return np.concatenate([g[free], [(momentum(grid, u) - a) / scale]])

    y0 = np.concatenate([[start.c - kernel.c_star], v0[free]])
    y, nf, it, ok = _newton(fun, y0, GRAD_TOL)
    c, v = kernel.c_star + y[0], full(y)
    u = prob.state(v, c)
    c_check = c_of_v(params, kernel, grid, v, c0=c, newton_tol=range_tol)
    g_check = float(np.linalg.norm(_Reduced(params, kernel, grid, c_check, range_tol).grad(v)))
    drift = abs(momentum(grid, u) - a)
    info = {
        "iterations": it,
        "system_norm": nf,
        "c": c,
        "c_of_v": c_check,
        "reduced_grad_norm": g_check,
        "momentum_error": drift,
    }
    if not (ok and g_check <= grad_tol and drift <= 1e-10):
        raise NonConvergenceError("fixed-momentum polish did not reach tolerance", info)
    return _assemble(params, kernel, grid, c, u, a, tol), info
