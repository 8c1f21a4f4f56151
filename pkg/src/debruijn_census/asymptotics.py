"""Singularity analysis of the nested-radical generating functions.

For either family the generating function of closed terms is
``(1 - sqrt(R_{k+1})) / 2z`` where the radicands form a chain

    R_1 = alpha_1(z, u),   R_m = alpha_m(z, u) + beta_m(z, u) * sqrt(R_{m-1})

Radicand ``m`` belongs to class ``i = k - m + 1`` of the counting recurrences.
The dominant singularity is the first positive ``z`` at which some radicand
vanishes; everything numeric in this module hangs off that location.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal, localcontext
from typing import Optional

from .series import Family, FamilySpec, InvalidMark, Mark, TOTAL_LEAVES, check_mark

ROOT_TOL = 1e-14
VANISH_TOL = 1e-9
RICHARDSON_STEP = 1e-4


class NoRootInRange(ValueError):
    pass


class DegenerateBound(ValueError):
    pass


class Unsupported(ValueError):
    pass


# ---------------------------------------------------------------------------
# integer sequences


def u_N_sequences(j: int) -> tuple[int, int]:
    """``(u_j, N_j)`` with ``u_0 = 0``, ``u_{i+1} = u_i^2 + i + 1``, ``N_i = u_i^2 - u_i + i``."""
    if j < 0:
        raise ValueError("j must be >= 0")
    u = 0
    for i in range(j):
        u = u * u + i + 1
    return u, u * u - u + j


def classify_bound(k: int) -> tuple[int, str]:
    """``(j, "boundary")`` if ``k == N_j``, else ``(j, "interior")`` with ``N_j < k < N_{j+1}``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    j = 0
    while True:
        _, nj = u_N_sequences(j)
        _, nj1 = u_N_sequences(j + 1)
        if k == nj:
            return j, "boundary"
        if nj < k < nj1:
            return j, "interior"
        j += 1


# ---------------------------------------------------------------------------
# radicand chains


@dataclass(frozen=True)
class RadicandSystem:
    """Radicand chain of a family, optionally with one marked level.

    The mark variable ``u`` enters every leaf weight for ``total`` marks, and
    only the productions of one class for level marks (leaves: leaf weight;
    unary: unary edge; binary: binary nodes, plus ``1/u`` on the parent edge).
    """

    spec: FamilySpec
    mark: Mark = TOTAL_LEAVES

    def __post_init__(self) -> None:
        if self.mark.kind == "none":
            raise InvalidMark("a radicand system needs a mark variable")
        check_mark(self.spec, self.mark)

    @property
    def length(self) -> int:
        return self.spec.k + 1

    def _powers(self, cls: int) -> tuple[int, int]:
        """Exponents of ``u`` in the leaf weight and in the unary edge of class ``cls``."""
        eL, eU, eB = self.mark.flags(cls)
        child = cls + 1
        eB_child = self.mark.flags(child)[2] if child <= self.spec.k else 0
        return eL + eB, eU + eB - eB_child

    def coefficients(self, m: int, z: float, u: float):
        """``(alpha, alpha_z, alpha_u, beta, beta_z, beta_u)`` for radicand ``m``."""
        k = self.spec.k
        cls = k - m + 1
        lp, kp = self._powers(cls)
        lam, lam_u = u ** lp, lp * u ** (lp - 1) if lp else 0.0
        kap, kap_u = u ** kp, kp * u ** (kp - 1) if kp else 0.0
        leaf = 4.0 * cls * z * z
        alpha = 1.0 - leaf * lam
        alpha_z = -8.0 * cls * z * lam
        alpha_u = -leaf * lam_u
        if m == 1:
            if self.spec.family is Family.INDEX:
                # class k keeps its unary self-loop: (1 - z)^2 - 4 k u z^2
                alpha += -2.0 * z + z * z
                alpha_z += -2.0 + 2.0 * z
            return alpha, alpha_z, alpha_u, 0.0, 0.0, 0.0
        alpha += -2.0 * z * kap
        alpha_z += -2.0 * kap
        alpha_u += -2.0 * z * kap_u
        if m == 2 and self.spec.family is Family.INDEX:
            # child class k carries the extra (1 - z) factor
            alpha += 2.0 * z * z * kap
            alpha_z += 4.0 * z * kap
            alpha_u += 2.0 * z * z * kap_u
        return alpha, alpha_z, alpha_u, 2.0 * z * kap, 2.0 * kap, 2.0 * z * kap_u


@dataclass(frozen=True)
class RadicandValues:
    values: list[float]
    status: str  # "all_positive", "vanishes_at", "invalid_beyond"
    index: Optional[int] = None  # 1-based radicand index for the last two statuses


def eval_radicands(system: RadicandSystem, z: float, u: float = 1.0,
                   tol: float = VANISH_TOL, upto: Optional[int] = None) -> RadicandValues:
    """Evaluate ``R_1 .. R_upto`` innermost-out.

    Values within ``tol`` of zero count as vanished and contribute a zero
    square root to the next radicand.  A value below ``-tol`` stops the walk.
    """
    values: list[float] = []
    vanished: Optional[int] = None
    root = 0.0
    for m in range(1, (upto or system.length) + 1):
        a, _, _, b, _, _ = system.coefficients(m, z, u)
        r = a + b * root
        values.append(r)
        if r < -tol:
            return RadicandValues(values, "invalid_beyond", m)
        if abs(r) <= tol:
            vanished = vanished or m
            root = 0.0
        else:
            root = math.sqrt(r)
    if vanished:
        return RadicandValues(values, "vanishes_at", vanished)
    return RadicandValues(values, "all_positive")


def _all_positive(system: RadicandSystem, z: float, u: float, upto: int) -> bool:
    root = 0.0
    for m in range(1, upto + 1):
        a, _, _, b, _, _ = system.coefficients(m, z, u)
        r = a + b * root
        if not r > 0.0:
            return False
        root = math.sqrt(r)
    return True


def _bisect(system: RadicandSystem, u: float, upto: int) -> float:
    lo, hi = 0.0, 0.5
    if _all_positive(system, hi, u, upto):
        hi = 1.0
        if _all_positive(system, hi, u, upto):
            raise NoRootInRange(f"radicands stay positive up to z=1 (u={u})")
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if _all_positive(system, mid, u, upto):
            lo = mid
        else:
            hi = mid
    return lo


def find_dominant_singularity(system: RadicandSystem, u: float = 1.0) -> tuple[float, list[int]]:
    """``(rho, vanishing radicand indices)``: first z > 0 where the chain stops being positive."""
    rho = _bisect(system, u, system.length)
    values = eval_radicands(system, rho, u).values
    return rho, [m for m, r in enumerate(values, 1) if abs(r) <= VANISH_TOL]


def radicand_root(system: RadicandSystem, m: int, u: float = 1.0) -> float:
    """First zero of radicand ``m`` with all inner radicands positive.

    Bisection brackets the root; a few Newton steps then take it to machine
    precision, which the finite differences of ``rho'(u)`` need.
    """
    z = _bisect(system, u, m)
    for _ in range(3):
        r, rz, _ = radicand_partials(system, m, z, u)
        if rz == 0.0:
            break
        step = r / rz
        if abs(step) > 10 * ROOT_TOL:
            break
        z -= step
    return z


def radicand_partials(system: RadicandSystem, m: int, z: float, u: float) -> tuple[float, float, float]:
    """``(R_m, dR_m/dz, dR_m/du)`` by forward chain rule through the radicand chain."""
    r = rz = ru = 0.0
    for idx in range(1, m + 1):
        a, az, au, b, bz, bu = system.coefficients(idx, z, u)
        if idx == 1:
            r, rz, ru = a, az, au
            continue
        s = math.sqrt(max(r, 0.0))
        if s == 0.0:
            raise ZeroDivisionError(f"radicand {idx - 1} vanishes inside the chain")
        sz, su = rz / (2 * s), ru / (2 * s)
        r, rz, ru = a + b * s, az + bz * s + b * sz, au + bu * s + b * su
    return r, rz, ru


def implicit_rho_prime(system: RadicandSystem, m: int, u: float = 1.0) -> float:
    """``d rho/du`` along ``R_m(rho(u), u) = 0``."""
    z = radicand_root(system, m, u)
    _, rz, ru = radicand_partials(system, m, z, u)
    return -ru / rz


# ---------------------------------------------------------------------------
# constants


@dataclass
class SingularityReport:
    spec: str
    mark: str
    u: float
    rho: float
    vanishing_indices: list[int]
    j: Optional[int]
    boundary: bool
    critical_index: int
    rho_prime: float
    rho_second: float
    B_prime_1: float
    sigma_sq: float
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def index_constants(k: int) -> tuple[float, float, list[float]]:
    """``(mu, sigma^2, [c_1 .. c_{k+2}])`` for the bounded-index family at ``u = 1``.

    The amplitude only needs ``c_2 .. c_{k+1}``; one more term is reported so
    that the list always extends past the last factor used.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rk = math.sqrt(k)
    mu = k / (rk + 2 * k)
    sigma_sq = k * k / (2 * rk * (rk + 2 * k) ** 2)
    return mu, sigma_sq, c_sequence(k + 1)


def c_sequence(k: int, u: float = 1.0) -> list[float]:
    """``[c_1 .. c_{k+1}]`` with ``c_1 = 1``, ``c_j = 4 (j-1) u - 1 + 2 sqrt(c_{j-1})``."""
    c = [1.0]
    for j in range(2, k + 2):
        c.append(4 * (j - 1) * u - 1 + 2 * math.sqrt(c[-1]))
    return c


def singularity_report(system: RadicandSystem, u: float = 1.0,
                       step: float = RICHARDSON_STEP) -> SingularityReport:
    """Locate rho, differentiate it in the mark variable, and assemble mean/variance constants.

    The critical radicand is the innermost vanishing one; at a double root
    (``k = N_j``) that is ``R_j``, whose inner radicands stay positive.
    """
    rho, vanishing = find_dominant_singularity(system, u)
    crit = min(vanishing)
    d1 = implicit_rho_prime(system, crit, u)

    def central(h: float) -> float:
        return (implicit_rho_prime(system, crit, u + h) - implicit_rho_prime(system, crit, u - h)) / (2 * h)

    d2 = (4 * central(step / 2) - central(step)) / 3
    # B(u) = rho(1)/rho(u) at u = 1
    b1 = -d1 / rho
    b2 = 2 * d1 * d1 / (rho * rho) - d2 / rho
    j, kind = (None, "interior")
    if system.spec.family is Family.LEVELS:
        j, kind = classify_bound(system.spec.k)
    return SingularityReport(
        spec=str(system.spec), mark=str(system.mark), u=u, rho=rho,
        vanishing_indices=vanishing, j=j, boundary=kind == "boundary",
        critical_index=crit, rho_prime=d1, rho_second=d2,
        B_prime_1=b1, sigma_sq=b2 + b1 - b1 * b1,
    )


def level_constants(k: int) -> SingularityReport:
    """Mean/variance constants of the total leaf count with at most ``k`` De Bruijn levels."""
    if k == 1:
        raise DegenerateBound("k=1 admits a single term shape per size; no Gaussian limit")
    if k < 1:
        raise ValueError("k must be >= 1")
    system = RadicandSystem(FamilySpec(Family.LEVELS, k))
    report = singularity_report(system)
    if not report.boundary:
        report.constants = expansion_constants(k, report.rho)
    return report


def expansion_constants(k: int, rho: float) -> dict:
    """``a_i``, ``b_i`` (``i = j+2 .. k+1``) and ``gamma_{j+1}`` at ``u = 1`` for interior ``k``."""
    j, kind = classify_bound(k)
    if kind != "interior":
        raise Unsupported("expansion constants are defined for interior bounds only")
    system = RadicandSystem(FamilySpec(Family.LEVELS, k))
    _, rz, _ = radicand_partials(system, j + 1, rho, 1.0)
    gamma = -rz
    a = {j + 2: 1 - 4 * (k - j - 1) * rho * rho - 2 * rho}
    b = {j + 2: 2 * rho * math.sqrt(gamma)}
    for i in range(j + 2, k + 1):
        a[i + 1] = 1 - 4 * (k - i) * rho * rho - 2 * rho + 2 * rho * math.sqrt(a[i])
        b[i + 1] = b[i] * rho / math.sqrt(a[i])
    return {"gamma": gamma, "a": a, "b": b}


# ---------------------------------------------------------------------------
# first-order count asymptotics


def log_asymptotic_count(spec: FamilySpec, n: int) -> float:
    """Natural log of the first-order asymptotic estimate of ``count_closed(spec, n)``."""
    k = spec.k
    if spec.family is Family.INDEX:
        rk = math.sqrt(k)
        prod_c = math.prod(c_sequence(k)[1:])
        amp = math.sqrt((rk + 2 * k) / (4 * math.pi * prod_c))
        return math.log(amp) + n * math.log(1 + 2 * rk) - 1.5 * math.log(n)
    j, kind = classify_bound(k)
    if kind == "boundary":
        raise Unsupported(f"k={k} is a boundary bound; its amplitude has no closed form")
    rho = radicand_root(RadicandSystem(spec), j + 1)
    consts = expansion_constants(k, rho)
    a, b = consts["a"][k + 1], consts["b"][k + 1]
    h = -b * math.sqrt(rho) / (4 * rho * math.sqrt(a))
    # 1/Gamma(-1/2) = -1/(2 sqrt(pi))
    return math.log(h / (-2 * math.sqrt(math.pi))) - n * math.log(rho) - 1.5 * math.log(n)


def asymptotic_count(spec: FamilySpec, n: int) -> Decimal:
    """First-order asymptotic estimate of the count; Decimal because it overflows binary64."""
    with localcontext() as ctx:
        ctx.prec = 30
        return Decimal(log_asymptotic_count(spec, n)).exp()


def growth_constant(spec: FamilySpec, u: float = 1.0) -> float:
    """``1/rho`` from the singularity solver."""
    rho, _ = find_dominant_singularity(RadicandSystem(spec), u)
    return 1.0 / rho
