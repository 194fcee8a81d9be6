"""Grid realization of the shifted multiplication-operator example.

The deformed pair acts on real-line functions through multiplication by
complex exponentials and the imaginary translation f(x) -> f(x + i alpha).
On the analytic family

    f(x) = sum_j P_j(x) exp(-x^2/2 + w_j x),        P_j polynomial, w_j complex,

both ingredients act by exact parameter substitution, so states are stored
symbolically and the grid enters only through inner products (trapezoid
rule, superalgebraically accurate for these Gaussian-localized analytic
integrands).

Conventions: alpha = sqrt(-log(q)/2) so that q = exp(-2 alpha^2); the
similarity between the shifted family and the undeformed one is the
multiplication operator exp(gamma x).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .qcore import BetaSequence, q_number_factorial

__all__ = [
    "SupportEscapeError",
    "PositionParams",
    "AnalyticState",
    "Grid",
    "GridFunction",
    "default_grid",
    "vacuum_phi",
    "vacuum_psi",
    "apply_a",
    "apply_b",
    "apply_a_dagger",
    "apply_b_dagger",
    "build_families",
    "phi_state",
    "psi_state",
    "CoefficientTable",
    "coefficient_recursion",
    "inner",
    "grid_norm",
    "qmutation_grid_check",
    "ladder_check",
    "vacuum_check",
    "similarity_check",
    "l_value",
    "norm_sq_formula",
    "norm_formula_check",
    "family_norms",
    "theta_conjugacy_check",
    "gram_condition",
    "state_to_csv",
]

BOUNDARY_DECAY_TOL = 1e-14
MERGE_TOL = 1e-9


class SupportEscapeError(ValueError):
    """A sampled state does not decay inside the grid window."""


@dataclass(frozen=True)
class PositionParams:
    """Deformation parameter q in (0, 1) and real shift gamma."""

    q: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise ValueError(f"q={self.q} outside (0, 1)")

    @property
    def alpha(self) -> float:
        return math.sqrt(-math.log(self.q) / 2.0)

    @property
    def sqrt_1mq(self) -> float:
        return math.sqrt(1.0 - self.q)


def _poly_shift(p: np.ndarray, c: complex) -> np.ndarray:
    """Coefficients of P(x + c) from those of P(x) (low to high order)."""
    n = len(p)
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        if p[k] == 0:
            continue
        binom = 1.0
        power = 1.0 + 0.0j
        for m in range(k, -1, -1):
            out[m] += p[k] * binom * power
            binom = binom * m / (k - m + 1)
            power *= c
    return out


class AnalyticState:
    """Finite sum of terms P(x) exp(-x^2/2 + w x)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[tuple[np.ndarray, complex]]):
        merged: list[tuple[np.ndarray, complex]] = []
        for poly, w in terms:
            poly = np.atleast_1d(np.asarray(poly, dtype=complex))
            for i, (p0, w0) in enumerate(merged):
                if abs(w - w0) < MERGE_TOL:
                    n = max(len(p0), len(poly))
                    acc = np.zeros(n, dtype=complex)
                    acc[:len(p0)] += p0
                    acc[:len(poly)] += poly
                    merged[i] = (acc, w0)
                    break
            else:
                merged.append((poly.copy(), complex(w)))
        self.terms = [(p, w) for p, w in merged if np.any(p != 0)]

    @classmethod
    def gaussian(cls, amplitude: complex, w: complex) -> "AnalyticState":
        return cls([(np.array([amplitude], dtype=complex), w)])

    def __add__(self, other: "AnalyticState") -> "AnalyticState":
        return AnalyticState(self.terms + other.terms)

    def __sub__(self, other: "AnalyticState") -> "AnalyticState":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "AnalyticState":
        return AnalyticState([(p * scalar, w) for p, w in self.terms])

    __rmul__ = __mul__

    def shift_exponent(self, c: complex) -> "AnalyticState":
        """Multiplication by exp(c x)."""
        return AnalyticState([(p, w + c) for p, w in self.terms])

    def translate(self, c: complex) -> "AnalyticState":
        """f(x) -> f(x + c): each term picks up exp(-c^2/2) exp(c w) and shifts w."""
        out = []
        for p, w in self.terms:
            scale = np.exp(-c * c / 2.0 + c * w)
            out.append((scale * _poly_shift(p, c), w - c))
        return AnalyticState(out)

    def sample(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = np.zeros(len(x), dtype=complex)
        env = -x * x / 2.0
        for p, w in self.terms:
            vals += np.polynomial.polynomial.polyval(x, p) * np.exp(env + w * x)
        return vals


@dataclass
class Grid:
    """Uniform sampling window for inner products."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 16 or self.x_max <= self.x_min:
            raise ValueError("grid must have at least 16 points and positive extent")
        self.x = np.linspace(self.x_min, self.x_max, self.n)
        self.dx = self.x[1] - self.x[0]


@dataclass
class GridFunction:
    """Sampled values of a state on a grid, with the decay check applied."""

    grid: Grid
    values: np.ndarray

    @classmethod
    def from_state(cls, state: AnalyticState, grid: Grid,
                   check_decay: bool = True) -> "GridFunction":
        vals = state.sample(grid.x)
        if check_decay and (abs(vals[0]) > BOUNDARY_DECAY_TOL
                            or abs(vals[-1]) > BOUNDARY_DECAY_TOL):
            raise SupportEscapeError(
                f"state magnitude at grid boundary is "
                f"{max(abs(vals[0]), abs(vals[-1])):.2e} > {BOUNDARY_DECAY_TOL}")
        return cls(grid, vals)


def default_grid(gamma: float = 0.0, n: int = 4096) -> Grid:
    half = 12.0 + abs(gamma)
    return Grid(-half, half, n)


def _trapezoid(y: np.ndarray, dx: float) -> complex:
    return complex(dx * (np.sum(y) - 0.5 * (y[0] + y[-1])))


def _as_values(f, grid: Grid) -> np.ndarray:
    if isinstance(f, AnalyticState):
        vals = f.sample(grid.x)
        # quadrature is only trustworthy when the state has decayed at the
        # window edges; the envelope makes this a factor ~exp(-70) normally
        peak = float(np.max(np.abs(vals), initial=0.0))
        if max(abs(vals[0]), abs(vals[-1])) > 1e-12 * (1.0 + peak):
            raise SupportEscapeError(
                f"state has not decayed at the grid boundary "
                f"(edge magnitude {max(abs(vals[0]), abs(vals[-1])):.2e})")
        return vals
    if isinstance(f, GridFunction):
        return f.values
    return np.asarray(f, dtype=complex)


def inner(grid: Grid, f, g) -> complex:
    """<f, g> by the trapezoid rule (conjugate-linear in the first slot)."""
    fv, gv = _as_values(f, grid), _as_values(g, grid)
    return _trapezoid(fv.conj() * gv, grid.dx)


def grid_norm(grid: Grid, f) -> float:
    fv = _as_values(f, grid)
    return math.sqrt(abs(_trapezoid(np.abs(fv) ** 2, grid.dx)))


# ---------------------------------------------------------------------------
# ladder operators
# ---------------------------------------------------------------------------

def vacuum_phi(params: PositionParams) -> AnalyticState:
    """Normalized vacuum annihilated by the lowering operator a."""
    w = params.gamma + 1.5j * params.alpha
    return AnalyticState.gaussian(math.pi ** -0.25, w)


def vacuum_psi(params: PositionParams) -> AnalyticState:
    """Vacuum of b^dag; the gamma -> -gamma mirror of the a vacuum."""
    w = -params.gamma + 1.5j * params.alpha
    return AnalyticState.gaussian(math.pi ** -0.25, w)


def _lowering(params: PositionParams, state: AnalyticState,
              gamma_sign: float) -> AnalyticState:
    """Exact action of a (gamma_sign=+1) or b^dag (gamma_sign=-1)."""
    al = params.alpha
    out: list[tuple[np.ndarray, complex]] = []
    pref = 1.0 / (-1j * params.sqrt_1mq)
    for p, w in state.terms:
        scale = np.exp(1.5 * al * al + 1j * al * (w - gamma_sign * params.gamma))
        out.append((pref * p, w - 2j * al))
        out.append((-pref * scale * _poly_shift(p, 1j * al), w - 2j * al))
    return AnalyticState(out)


def _raising(params: PositionParams, state: AnalyticState,
             gamma_sign: float) -> AnalyticState:
    """Exact action of b (gamma_sign=+1) or a^dag (gamma_sign=-1)."""
    al = params.alpha
    out: list[tuple[np.ndarray, complex]] = []
    pref = 1.0 / (1j * params.sqrt_1mq)
    for p, w in state.terms:
        scale = np.exp(0.5 * al * al + 1j * al * (w - gamma_sign * params.gamma))
        out.append((pref * p, w + 2j * al))
        out.append((-pref * scale * _poly_shift(p, 1j * al), w))
    return AnalyticState(out)


def apply_a(params: PositionParams, state: AnalyticState) -> AnalyticState:
    return _lowering(params, state, +1.0)


def apply_b_dagger(params: PositionParams, state: AnalyticState) -> AnalyticState:
    return _lowering(params, state, -1.0)


def apply_b(params: PositionParams, state: AnalyticState) -> AnalyticState:
    return _raising(params, state, +1.0)


def apply_a_dagger(params: PositionParams, state: AnalyticState) -> AnalyticState:
    return _raising(params, state, -1.0)


def build_families(params: PositionParams, n_max: int
                   ) -> tuple[list[AnalyticState], list[AnalyticState]]:
    """phi_n = b^n phi_0 / beta_{n-1}! and psi_n = (a^dag)^n psi_0 / beta_{n-1}!."""
    bs = BetaSequence(params.q, n_max + 1)
    phis = [vacuum_phi(params)]
    psis = [vacuum_psi(params)]
    for n in range(n_max):
        phis.append(apply_b(params, phis[-1]) * (1.0 / bs.beta(n)))
        psis.append(apply_a_dagger(params, psis[-1]) * (1.0 / bs.beta(n)))
    return phis, psis


# ---------------------------------------------------------------------------
# oscillatory-factor coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientTable:
    """Rows c^(n) of the oscillatory factor sum_k c_k^(n) exp(2 i alpha k x)."""

    q: float
    rows: list = field(repr=False)

    def row(self, n: int) -> np.ndarray:
        return self.rows[n]

    @property
    def n_max(self) -> int:
        return len(self.rows) - 1


def coefficient_recursion(params: PositionParams, n_max: int) -> CoefficientTable:
    """Coefficient rows from the raising operator acting on the factor.

    One application of b maps the factor coefficients by
    c_k^(n+1) = c_{k-1}^(n) - exp(-alpha^2) q^k c_k^(n); this is the exact
    symbolic action on exp(2 i alpha k x) terms, and it does not involve
    gamma, which is why the same table serves both families.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    damp = math.exp(-params.alpha ** 2)
    rows = [np.array([1.0 + 0.0j])]
    for n in range(n_max):
        c = rows[-1]
        nxt = np.zeros(n + 2, dtype=complex)
        nxt[1:] += c
        nxt[:n + 1] -= damp * (params.q ** np.arange(n + 1)) * c
        rows.append(nxt)
    return CoefficientTable(params.q, rows)


def phi_state(params: PositionParams, n: int,
              table: CoefficientTable | None = None) -> AnalyticState:
    """phi_n assembled from its coefficient row (closed-form route)."""
    return _state_from_row(params, n, params.gamma, table)


def psi_state(params: PositionParams, n: int,
              table: CoefficientTable | None = None) -> AnalyticState:
    return _state_from_row(params, n, -params.gamma, table)


def _state_from_row(params: PositionParams, n: int, gamma: float,
                    table: CoefficientTable | None) -> AnalyticState:
    if table is None or table.n_max < n:
        table = coefficient_recursion(params, n)
    bs = BetaSequence(params.q, n + 1)
    pref = math.pi ** -0.25 / bs.factorial(n - 1) * (-1j / params.sqrt_1mq) ** n
    al = params.alpha
    w0 = gamma + 1.5j * al
    return AnalyticState([
        (np.array([pref * c]), w0 + 2j * al * k)
        for k, c in enumerate(table.row(n))
    ])


# ---------------------------------------------------------------------------
# identity and formula checks
# ---------------------------------------------------------------------------

def qmutation_grid_check(params: PositionParams, states: Sequence[AnalyticState],
                         grid: Grid | None = None) -> float:
    """max grid-norm residual of (a b - q b a) f - f over the test states."""
    if grid is None:
        grid = default_grid(params.gamma)
    worst = 0.0
    for f in states:
        ab = apply_a(params, apply_b(params, f))
        ba = apply_b(params, apply_a(params, f))
        resid = ab - params.q * ba - f
        worst = max(worst, grid_norm(grid, resid))
    return worst


def ladder_check(params: PositionParams, n_max: int,
                 grid: Grid | None = None) -> dict:
    """Grid residuals of the four ladder relations for n <= n_max."""
    if grid is None:
        grid = default_grid(params.gamma)
    bs = BetaSequence(params.q, n_max + 2)
    phis, psis = build_families(params, n_max + 1)
    raise_phi = lower_phi = raise_psi = lower_psi = 0.0
    zero = AnalyticState([])
    for n in range(n_max + 1):
        raise_phi = max(raise_phi, grid_norm(
            grid, apply_b(params, phis[n]) - bs.beta(n) * phis[n + 1]))
        raise_psi = max(raise_psi, grid_norm(
            grid, apply_a_dagger(params, psis[n]) - bs.beta(n) * psis[n + 1]))
        below_phi = phis[n - 1] if n >= 1 else zero
        below_psi = psis[n - 1] if n >= 1 else zero
        lower_phi = max(lower_phi, grid_norm(
            grid, apply_a(params, phis[n]) - bs.beta(n - 1) * below_phi))
        lower_psi = max(lower_psi, grid_norm(
            grid, apply_b_dagger(params, psis[n]) - bs.beta(n - 1) * below_psi))
    report = {"raise_phi": raise_phi, "lower_phi": lower_phi,
              "raise_psi": raise_psi, "lower_psi": lower_psi, "n_max": n_max}
    report["max_residual"] = max(raise_phi, lower_phi, raise_psi, lower_psi)
    return report


def vacuum_check(params: PositionParams, grid: Grid | None = None) -> dict:
    """Annihilation residuals of the vacua and their mutual pairing."""
    if grid is None:
        grid = default_grid(params.gamma)
    phi0, psi0 = vacuum_phi(params), vacuum_psi(params)
    return {
        "a_phi0": grid_norm(grid, apply_a(params, phi0)),
        "bdag_psi0": grid_norm(grid, apply_b_dagger(params, psi0)),
        "pairing": inner(grid, phi0, psi0),
    }


def similarity_check(params: PositionParams, n_max: int,
                     grid: Grid | None = None) -> dict:
    """Pointwise check of the multiplication-similarity structure.

    phi_n with shift gamma must equal exp(gamma x) times the unshifted
    phi_n, psi_n must equal exp(-gamma x) times it, and the two families
    must be biorthogonal under the grid inner product.
    """
    if grid is None:
        grid = default_grid(params.gamma)
    base = PositionParams(params.q, 0.0)
    table = coefficient_recursion(params, n_max)
    egx = np.exp(params.gamma * grid.x)
    dev_phi = dev_psi = 0.0
    for n in range(n_max + 1):
        ref = phi_state(base, n, table).sample(grid.x)
        dev_phi = max(dev_phi, float(np.max(np.abs(
            phi_state(params, n, table).sample(grid.x) - egx * ref))))
        dev_psi = max(dev_psi, float(np.max(np.abs(
            psi_state(params, n, table).sample(grid.x) - ref / egx))))
    gram_dev = 0.0
    phis = [phi_state(params, n, table) for n in range(n_max + 1)]
    psis = [psi_state(params, n, table) for n in range(n_max + 1)]
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            val = inner(grid, phis[n], psis[m])
            gram_dev = max(gram_dev, abs(val - (1.0 if n == m else 0.0)))
    return {"similarity_phi": dev_phi, "similarity_psi": dev_psi,
            "biorthogonality": gram_dev, "n_max": n_max}


def l_value(params: PositionParams, n: int) -> complex:
    """Double sum entering the closed norm formula; real and <= (n+1)^2."""
    q, al, gamma = params.q, params.alpha, params.gamma
    facts = [q_number_factorial(q, m) for m in range(n + 1)]
    total = 0.0 + 0.0j
    for k in range(n + 1):
        for l in range(n + 1):
            total += (-1) ** (k + l) \
                * math.exp(-al * al * (k + l + (l - k) ** 2)) \
                * np.exp(2j * al * gamma * (l - k)) \
                / (facts[k] * facts[l] * facts[n - k] * facts[n - l])
    return complex(total)


def norm_sq_formula(params: PositionParams, n: int) -> float:
    """Closed form ||phi_n||^2 = [n]! e^{gamma^2} (1-q)^{-n} L_n."""
    lv = l_value(params, n)
    return q_number_factorial(params.q, n) * math.exp(params.gamma ** 2) \
        * (1.0 - params.q) ** (-n) * lv.real


def norm_formula_check(params: PositionParams, n_max: int,
                       grid: Grid | None = None) -> dict:
    """Grid-quadrature norms against the closed formula, plus its side claims."""
    if grid is None:
        grid = default_grid(params.gamma)
    table = coefficient_recursion(params, n_max)
    rows = []
    max_rel = symm_dev = l_imag = 0.0
    bound_ok = True
    for n in range(n_max + 1):
        nphi = grid_norm(grid, phi_state(params, n, table))
        npsi = grid_norm(grid, psi_state(params, n, table))
        lv = l_value(params, n)
        formula = norm_sq_formula(params, n)
        rel = abs(nphi ** 2 - formula) / abs(formula)
        max_rel = max(max_rel, rel)
        symm_dev = max(symm_dev, abs(nphi - npsi) / nphi)
        l_imag = max(l_imag, abs(lv.imag) / abs(lv))
        bound_ok = bound_ok and (lv.real <= (n + 1) ** 2 + 1e-12)
        rows.append({"n": n, "grid_norm_sq": nphi ** 2, "formula": formula,
                     "rel_err": rel, "L": lv.real})
    return {"rows": rows, "max_rel_err": max_rel, "norm_symmetry": symm_dev,
            "L_imag_rel": l_imag, "L_bound_ok": bound_ok}


def family_norms(params: PositionParams, n_max: int,
                 grid: Grid | None = None) -> np.ndarray:
    """Measured ||phi_n|| for n = 0..n_max (input to the radius machinery)."""
    if grid is None:
        grid = default_grid(params.gamma)
    table = coefficient_recursion(params, n_max)
    return np.array([grid_norm(grid, phi_state(params, n, table))
                     for n in range(n_max + 1)])


def theta_conjugacy_check(params: PositionParams,
                          states: Sequence[AnalyticState],
                          grid: Grid | None = None) -> float:
    """Residual of a f = Theta^{-1} b^dag Theta f with Theta = exp(-2 gamma x).

    Checked only on analytic states, whose decay keeps the unbounded
    multiplication operators harmless on the grid window.
    """
    if grid is None:
        grid = default_grid(params.gamma)
    worst = 0.0
    for f in states:
        lhs = apply_a(params, f)
        rhs = apply_b_dagger(params, f.shift_exponent(-2.0 * params.gamma)) \
            .shift_exponent(2.0 * params.gamma)
        worst = max(worst, grid_norm(grid, lhs - rhs))
    return worst


def gram_condition(params: PositionParams, n_max: int,
                   grid: Grid | None = None) -> float:
    """Condition number of the phi-family Gram matrix (basis-quality evidence)."""
    if grid is None:
        grid = default_grid(params.gamma)
    table = coefficient_recursion(params, n_max)
    states = [phi_state(params, n, table) for n in range(n_max + 1)]
    g = np.array([[inner(grid, fi, fj) for fj in states] for fi in states])
    return float(np.linalg.cond(g))


def state_to_csv(state: AnalyticState, grid: Grid, stream: IO[str]) -> None:
    writer = csv.writer(stream)
    writer.writerow(["x", "re", "im"])
    vals = state.sample(grid.x)
    for x, v in zip(grid.x, vals):
        writer.writerow([f"{x:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
