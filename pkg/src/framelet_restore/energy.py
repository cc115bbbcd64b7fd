"""Model energies: discrete, semi-discrete, and continuum forms.

``discrete_energy`` scores a restoration iterate: three isotropic weighted
l1 terms (smoothness against the edge field, edge-weighted low order
smoothness, edge-field regularity) plus a quadratic fidelity, all on the
periodic pixel grid with a uniform mesh weight ``h^2``.

The remaining functions form a numerical test bench for the claim that the
discrete energies converge to their continuum counterpart as the grid is
refined: continuous fields are sampled through the refinable function,
one-level frame coefficients are rescaled into derivative difference
quotients, and the resulting semi-discrete energy is compared against an
adaptive quadrature of the continuum functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .framelet import (
    FrameCoeffs,
    UnivariateBank,
    analysis,
    band_mass,
    refinable_values,
)
from .parallel import ordered_map

__all__ = [
    "BandWeights",
    "ModelWeights",
    "weighted_magnitude",
    "discrete_energy",
    "EnergySpec",
    "derivative_weights",
    "sample_field",
    "support_box",
    "interior_box",
    "continuous_energy",
    "convergence_experiment",
    "ConvergenceRow",
    "FieldPair",
    "FIELD_PAIRS",
]


# ---------------------------------------------------------------------------
# Discrete model energy (solver objective)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandWeights:
    """A transform together with nonnegative per-band weights.

    ``weight`` is a scalar applied to every band or a mapping from band
    labels to values.  Weights sit inside the isotropic root, so a uniform
    weight ``w`` scales the joint magnitude by ``sqrt(w)``.
    """

    bank: UnivariateBank
    levels: int
    weight: object = 1.0

    def weight_vector(self) -> np.ndarray:
        bands = self.bank.band_indices()
        if isinstance(self.weight, Mapping):
            vec = np.array([float(self.weight.get(b, 0.0)) for b in bands])
        else:
            vec = np.full(len(bands), float(self.weight))
        if np.any(vec < 0):
            raise ValueError("band weights must be nonnegative")
        return vec


@dataclass(frozen=True)
class ModelWeights:
    """The three transform terms of the restoration model."""

    smooth: BandWeights     # penalized where the edge field is small
    edge: BandWeights       # penalized on the edge set itself
    edge_reg: BandWeights   # regularity of the edge field planes


def weighted_magnitude(coeffs: FrameCoeffs, weights: BandWeights) -> np.ndarray:
    """Per level/pixel magnitude ``sqrt(sum_bands w_band |coef|^2)``."""
    vec = weights.weight_vector()
    return np.sqrt(np.einsum("b,lbij->lij", vec, np.square(coeffs.high)))


def discrete_energy(u, edge, f, op, model: ModelWeights, meshsize: float | None = None) -> float:
    """Objective value of a restoration iterate on the periodic grid.

    ``edge`` holds one plane per smoothness level, shape ``(levels, N, N)``.
    All four terms are weighted by ``meshsize**2`` (default ``1/N``), the
    fidelity enters as ``0.5 * h^2 ||A u - f||^2``.
    """
    u = np.asarray(u, dtype=np.float64)
    edge = np.asarray(edge, dtype=np.float64)
    levels = model.smooth.levels
    if edge.shape != (levels, u.shape[0], u.shape[1]):
        raise ValueError(
            f"edge field shape {edge.shape} does not match "
            f"{(levels, u.shape[0], u.shape[1])}"
        )
    if model.edge.levels != levels:
        raise ValueError("smooth and edge transforms must share the level count")
    h = 1.0 / u.shape[0] if meshsize is None else float(meshsize)

    g_smooth = weighted_magnitude(analysis(u, model.smooth.bank, levels), model.smooth)
    g_edge = weighted_magnitude(analysis(u, model.edge.bank, levels), model.edge)
    term1 = np.sum((1.0 - edge) * g_smooth)
    term2 = np.sum(edge * g_edge)
    term3 = 0.0
    for l in range(levels):
        reg = analysis(edge[l], model.edge_reg.bank, model.edge_reg.levels)
        term3 += np.sum(weighted_magnitude(reg, model.edge_reg))
    residual = op.apply(u) - np.asarray(f, dtype=np.float64)
    fidelity = 0.5 * np.sum(residual * residual)
    return float(h * h * (term1 + term2 + term3 + fidelity))


# ---------------------------------------------------------------------------
# Semi-discrete / continuum test bench
# ---------------------------------------------------------------------------

def _dominates(alpha, beta) -> bool:
    return alpha[0] >= beta[0] and alpha[1] >= beta[1] and alpha != beta


@dataclass(frozen=True)
class EnergySpec:
    """Configuration of the continuum functional and its discretization.

    ``smooth_orders`` / ``edge_orders`` / ``reg_orders`` are the derivative
    multi-indices of the three l1 terms.  Some smoothness order must
    strictly dominate every edge order componentwise (the edge term must be
    of lower order for the model to make sense); this is checked here.
    ``resolution`` is the dyadic grid exponent: meshsize ``2**-resolution``.
    """

    resolution: int
    smooth_orders: tuple = ((1, 0), (0, 1))
    edge_orders: tuple = ()
    reg_orders: tuple = ((1, 0), (0, 1))
    lam: float = 1.0
    gamma: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution must be a positive integer")
        if min(self.lam, self.gamma, self.rho) < 0:
            raise ValueError("term scalars must be nonnegative")
        for orders in (self.smooth_orders, self.edge_orders, self.reg_orders):
            for a in orders:
                if len(a) != 2 or min(a) < 0 or a == (0, 0):
                    raise ValueError(f"bad derivative order {a}")
        if self.edge_orders:
            if not any(
                all(_dominates(a, b) for b in self.edge_orders)
                for a in self.smooth_orders
            ):
                raise ValueError(
                    "no smoothness order dominates every edge order; "
                    "the edge term must be strictly lower order"
                )

    @property
    def meshsize(self) -> float:
        return 2.0 ** (-self.resolution)


def derivative_weights(bank: UnivariateBank, resolution: int, orders,
                       depth: int = 12) -> dict:
    """Band weights that turn one-level frame coefficients into derivative
    difference quotients at dyadic ``resolution`` n.

    Band ``alpha`` gets ``(2^(|alpha| (n-1)) / mass_alpha)^2`` where
    ``mass_alpha`` is the tensor antiderivative mass; bands outside
    ``orders`` get 0.  Successive resolutions scale by ``4^|alpha|``.
    """
    weights = {}
    for a in orders:
        if max(a) >= bank.n_filters:
            raise ValueError(f"order {a} outside bank {bank.name!r}")
        mass = band_mass(bank, a, depth)
        weights[a] = (2.0 ** ((a[0] + a[1]) * (resolution - 1)) / mass) ** 2
    return weights


def support_box(bank: UnivariateBank, resolution: int):
    """Index range (inclusive) of grid points whose scaled refinable bump is
    supported inside the unit square."""
    half = bank.order // 2
    lo, hi = half, (1 << resolution) - half
    if lo > hi:
        raise ValueError(f"resolution {resolution} too coarse for {bank.name} bank")
    return lo, hi


def interior_box(bank: UnivariateBank, resolution: int):
    """Subrange of :func:`support_box` where one-level filters stay inside it."""
    lo, hi = support_box(bank, resolution)
    half = bank.order // 2
    if lo + half > hi - half:
        raise ValueError(f"resolution {resolution} leaves no interior points")
    return lo + half, hi - half


def sample_field(fn: Callable, resolution: int, bank: UnivariateBank,
                 quad_depth: int = 6, check_depth: bool = False) -> np.ndarray:
    """Sample a continuous field through the refinable function.

    Returns ``2^n <fn, phi_{n,k}>`` (a unit-mass local average of ``fn``
    around ``k 2^-n``) for every ``k`` in the support box, as a 2-D array.
    The quadrature runs on the dyadic grid ``2^-quad_depth`` relative to the
    bump; Riemann weights are exact for constants by partition of unity.
    With ``check_depth`` the computation is repeated one level finer and a
    disagreement beyond 1e-6 raises.
    """
    if quad_depth < 4:
        raise ValueError("quad_depth must be at least 4")
    out = _sample_field_at(fn, resolution, bank, quad_depth)
    if check_depth:
        finer = _sample_field_at(fn, resolution, bank, quad_depth + 1)
        gap = float(np.max(np.abs(out - finer)))
        if gap > 1e-6:
            raise ValueError(
                f"field sampling unstable: depth {quad_depth} vs {quad_depth + 1} "
                f"differ by {gap:.3e}"
            )
    return out


def _sample_field_at(fn, resolution, bank, quad_depth):
    phi, phi_lo = refinable_values(bank, quad_depth)
    tau = 2.0 ** (-quad_depth)
    nodes = (phi_lo + np.arange(len(phi))) * tau      # quadrature abscissae
    w = phi * tau                                      # 1-D Riemann weights
    h = 2.0 ** (-resolution)
    lo, hi = support_box(bank, resolution)
    x = np.arange(lo, hi + 1) * h
    out = np.zeros((len(x), len(x)))
    x2 = x[None, :, None] + nodes[None, None, :] * h
    for w1, y1 in zip(w, nodes):
        if w1 == 0.0:
            continue
        vals = fn(x[:, None, None] + y1 * h, x2)
        out += w1 * (vals @ w)
    return out


def _valid_corr(plane: np.ndarray, bank: UnivariateBank, alpha) -> np.ndarray:
    """One-level band correlation without wrapping, shrunk to the interior."""
    half = bank.order // 2
    t1, t2 = bank.taps(alpha[0]), bank.taps(alpha[1])
    n1, n2 = plane.shape
    out = np.zeros((n1 - 2 * half, n2 - 2 * half))
    for i, a in enumerate(t1):
        if a == 0.0:
            continue
        sl1 = slice(i, i + n1 - 2 * half)
        for j, b in enumerate(t2):
            if b == 0.0:
                continue
            out += (a * b) * plane[sl1, j:j + n2 - 2 * half]
    return out


def _semi_discrete_terms(u_s, v_s, f_s, bank, spec: EnergySpec):
    """The four terms of the grid energy from sampled fields on the support box."""
    n = spec.resolution
    h2 = spec.meshsize ** 2
    half = bank.order // 2

    def iso(plane, orders):
        if not orders:
            return 0.0
        weights = derivative_weights(bank, n, orders)
        acc = None
        for a, w in weights.items():
            c = _valid_corr(plane, bank, a)
            acc = w * c * c if acc is None else acc + w * c * c
        return np.sqrt(acc)

    inner = slice(half, -half) if half else slice(None)
    g1 = iso(u_s, spec.smooth_orders)
    term1 = spec.lam * h2 * np.sum((1.0 - v_s[inner, inner]) * g1)
    g2 = iso(u_s, spec.edge_orders)
    term2 = spec.gamma * h2 * np.sum(v_s[inner, inner] * g2) if spec.edge_orders else 0.0
    g3 = iso(v_s, spec.reg_orders)
    term3 = spec.rho * h2 * np.sum(g3)
    resid = u_s if f_s is None else u_s - f_s
    fidelity = 0.5 * h2 * np.sum(resid * resid)
    return float(term1), float(term2), float(term3), float(fidelity)


# ---------------------------------------------------------------------------
# Continuum energy by adaptive composite quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldPair:
    """A continuous trial field pair with closed-form partial derivatives.

    ``u_partials`` and ``v_partials`` map derivative orders to vectorized
    callables of ``(x1, x2)``; order ``(0, 0)`` means the field itself."""

    name: str
    u_partials: Mapping
    v_partials: Mapping

    def u(self, x1, x2):
        return self.u_partials[(0, 0)](x1, x2)

    def v(self, x1, x2):
        return self.v_partials[(0, 0)](x1, x2)

    def u_partial(self, order) -> Callable:
        try:
            return self.u_partials[order]
        except KeyError:
            raise KeyError(f"pair {self.name!r} ships no u-partial {order}") from None

    def v_partial(self, order) -> Callable:
        try:
            return self.v_partials[order]
        except KeyError:
            raise KeyError(f"pair {self.name!r} ships no v-partial {order}") from None

    def validate(self, points: int = 100, step: float = 1e-4,
                 tol: float = 1e-5, seed: int = 0) -> None:
        """Check every shipped partial against a central finite difference of
        its parent order at random interior points."""
        rng = np.random.default_rng(seed)
        x1 = rng.uniform(0.05, 0.95, points)
        x2 = rng.uniform(0.05, 0.95, points)
        for partials in (self.u_partials, self.v_partials):
            for order, fn in partials.items():
                if order == (0, 0):
                    continue
                axis = 0 if order[0] > 0 else 1
                parent_order = (order[0] - 1, order[1]) if axis == 0 else (order[0], order[1] - 1)
                if parent_order not in partials:
                    raise ValueError(f"partial {order} has no parent {parent_order}")
                parent = partials[parent_order]
                if axis == 0:
                    fd = (parent(x1 + step, x2) - parent(x1 - step, x2)) / (2 * step)
                else:
                    fd = (parent(x1, x2 + step) - parent(x1, x2 - step)) / (2 * step)
                gap = np.max(np.abs(fd - fn(x1, x2)))
                if gap > tol:
                    raise ValueError(
                        f"pair {self.name!r}: partial {order} disagrees with "
                        f"finite differences by {gap:.3e}"
                    )


def _pair_sine() -> FieldPair:
    tp = 2.0 * math.pi

    def c(v):
        return lambda x1, x2: np.full(np.broadcast(x1, x2).shape, v)

    u = {
        (0, 0): lambda x1, x2: np.sin(tp * x1) * np.sin(tp * x2),
        (1, 0): lambda x1, x2: tp * np.cos(tp * x1) * np.sin(tp * x2),
        (0, 1): lambda x1, x2: tp * np.sin(tp * x1) * np.cos(tp * x2),
        (1, 1): lambda x1, x2: tp * tp * np.cos(tp * x1) * np.cos(tp * x2),
        (2, 0): lambda x1, x2: -tp * tp * np.sin(tp * x1) * np.sin(tp * x2),
        (0, 2): lambda x1, x2: -tp * tp * np.sin(tp * x1) * np.sin(tp * x2),
    }
    v = {(0, 0): c(0.5), (1, 0): c(0.0), (0, 1): c(0.0),
         (1, 1): c(0.0), (2, 0): c(0.0), (0, 2): c(0.0)}
    return FieldPair("sine", u, v)


def _pair_poly() -> FieldPair:
    u = {
        (0, 0): lambda x1, x2: 16 * x1 * (1 - x1) * x2 * (1 - x2),
        (1, 0): lambda x1, x2: 16 * (1 - 2 * x1) * x2 * (1 - x2),
        (0, 1): lambda x1, x2: 16 * x1 * (1 - x1) * (1 - 2 * x2),
        (1, 1): lambda x1, x2: 16 * (1 - 2 * x1) * (1 - 2 * x2),
        (2, 0): lambda x1, x2: -32 * x2 * (1 - x2) + 0 * x1,
        (0, 2): lambda x1, x2: -32 * x1 * (1 - x1) + 0 * x2,
    }
    v = {
        (0, 0): lambda x1, x2: x1 * x2,
        (1, 0): lambda x1, x2: x2 + 0 * x1,
        (0, 1): lambda x1, x2: x1 + 0 * x2,
        (1, 1): lambda x1, x2: np.ones(np.broadcast(x1, x2).shape),
        (2, 0): lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape),
        (0, 2): lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape),
    }
    return FieldPair("poly", u, v)


def _pair_constant() -> FieldPair:
    def c(v):
        return lambda x1, x2: np.full(np.broadcast(x1, x2).shape, v)

    orders = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
    u = {o: c(1.0 if o == (0, 0) else 0.0) for o in orders}
    v = {o: c(0.0) for o in orders}
    return FieldPair("constant", u, v)


FIELD_PAIRS = {
    "sine": _pair_sine,
    "poly": _pair_poly,
    "constant": _pair_constant,
}


def _composite_gauss(integrand, panels: int, order: int = 8,
                     chunk: int = 512) -> float:
    """Composite tensor Gauss-Legendre integral of ``integrand`` over the
    unit square with ``panels`` panels per axis, evaluated in row chunks."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 / panels
    centers = (edges[:-1] + edges[1:]) / 2.0
    x = (centers[:, None] + half * nodes[None, :]).ravel()
    w = np.tile(half * weights, panels)
    total = 0.0
    for start in range(0, len(x), chunk):
        xs = x[start:start + chunk]
        ws = w[start:start + chunk]
        vals = integrand(xs[:, None], x[None, :])
        total += ws @ vals @ w
    return float(total)


def continuous_energy(pair: FieldPair, spec: EnergySpec, *,
                      quad_order: int = 8, tol: float = 1e-8,
                      max_panels: int = 2048) -> float:
    """Continuum energy of a field pair, with identity measurement and zero
    data (fidelity ``0.5 * integral u^2``).

    Composite Gauss-Legendre panels are doubled until two successive values
    agree to ``tol`` relatively; failure to converge raises."""

    def iso(partial_of, orders):
        fns = [partial_of(a) for a in orders]

        def f(x1, x2):
            acc = np.square(fns[0](x1, x2))
            for g in fns[1:]:
                acc += np.square(g(x1, x2))
            return np.sqrt(acc)

        return f

    def integrand(x1, x2):
        total = np.zeros(np.broadcast(x1, x2).shape)
        if spec.lam and spec.smooth_orders:
            total += spec.lam * (1.0 - pair.v(x1, x2)) * iso(pair.u_partial, spec.smooth_orders)(x1, x2)
        if spec.gamma and spec.edge_orders:
            total += spec.gamma * pair.v(x1, x2) * iso(pair.u_partial, spec.edge_orders)(x1, x2)
        if spec.rho and spec.reg_orders:
            total += spec.rho * iso(pair.v_partial, spec.reg_orders)(x1, x2)
        total += 0.5 * np.square(pair.u(x1, x2))
        return total

    panels, previous = 8, None
    while panels <= max_panels:
        value = _composite_gauss(integrand, panels, order=quad_order)
        if previous is not None and abs(value - previous) <= tol * max(1.0, abs(value)):
            return value
        previous = value
        panels *= 2
    raise RuntimeError(
        f"quadrature did not stabilize to {tol} within {max_panels} panels"
    )


# ---------------------------------------------------------------------------
# Convergence experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    resolution: int
    grid_energy: float
    continuum_energy: float
    rel_error: float


def convergence_experiment(pair: FieldPair, n_list, bank: UnivariateBank,
                           spec_template: EnergySpec | None = None,
                           quad_depth: int = 6,
                           require_decrease: bool = True):
    """Grid energies against the continuum value over a resolution sweep.

    Returns one :class:`ConvergenceRow` per entry of ``n_list`` (ascending).
    With ``require_decrease`` the run raises unless the finest resolution
    attains the smallest relative error in the table.
    """
    n_list = sorted(int(n) for n in n_list)
    if not n_list:
        raise ValueError("n_list must not be empty")
    base = spec_template or EnergySpec(resolution=n_list[0])
    reference = continuous_energy(pair, base)
    if reference == 0.0:
        raise ValueError("continuum energy vanishes; relative error undefined")

    def one(n):
        spec = EnergySpec(
            resolution=n,
            smooth_orders=base.smooth_orders,
            edge_orders=base.edge_orders,
            reg_orders=base.reg_orders,
            lam=base.lam, gamma=base.gamma, rho=base.rho,
        )
        u_s = sample_field(pair.u, n, bank, quad_depth)
        v_s = sample_field(pair.v, n, bank, quad_depth)
        terms = _semi_discrete_terms(u_s, v_s, None, bank, spec)
        value = sum(terms)
        return ConvergenceRow(n, value, reference, abs(value - reference) / abs(reference))

    rows = ordered_map(one, n_list)
    if require_decrease:
        errors = [r.rel_error for r in rows]
        if errors[-1] != min(errors):
            raise RuntimeError(
                "grid energy did not approach the continuum value: "
                + ", ".join(f"n={r.resolution}: {r.rel_error:.3e}" for r in rows)
            )
    return rows
