import logging
import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .errors import ContractViolation
from .geometry import BallPoint, SpherePoint, moebius
from .lattice import CHUNK, Lattice
from .sampling import ball_array

logger = logging.getLogger("tentlab")

MAX_KHINCHINE_LEVEL = 16


def _complex_to_json(value: complex) -> List[float]:
    return [float(value.real), float(value.imag)]


def _complex_from_json(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def principal_power(base: np.ndarray, exponent: float) -> np.ndarray:
    """base^(-exponent) on the principal branch. Overflow gives inf instead of raising."""
    with np.errstate(over="ignore", invalid="ignore"):
        return np.exp(-exponent * np.log(base))


class HoloFunction(ABC):
    """
    A holomorphic function on the ball given in closed form.

    evaluate_array works on rows of points; focus lists the sphere points near which the function concentrates,
    so that quadrature can refine its angular sampling there.
    """

    variant = ""
    n: int = 0

    @abstractmethod
    def evaluate_array(self, points: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        pass

    @property
    def focus(self) -> List[np.ndarray]:
        return []

    def modulus_power(self, power: float):
        """The integrand z -> |f(z)|^power in the (points, omz2) calling convention of the quadrature engine."""

        def integrand(points: np.ndarray, omz2: np.ndarray) -> np.ndarray:
            with np.errstate(over="ignore"):
                return np.abs(self.evaluate_array(points)) ** power

        return integrand

    def _check(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[1] != self.n:
            raise ContractViolation(f"{self.variant} lives in dimension {self.n}, got points of dimension {points.shape[1]}")
        return points


class Polynomial(HoloFunction):
    """
    Class representing a polynomial sum c_m z^m over finitely many multi-indices m.
    Attributes:
        coefficients (dict): Multi-index tuple to complex coefficient
    """

    variant = "polynomial"

    def __init__(self, coefficients: Dict[Tuple[int, ...], complex], n: int):
        self.n = int(n)
        self.coefficients: Dict[Tuple[int, ...], complex] = {}
        for index, value in coefficients.items():
            index = tuple(int(m) for m in index)
            if len(index) != self.n or min(index) < 0:
                raise ContractViolation(f"Multi-index {index} does not fit dimension {self.n}")
            if value != 0:
                self.coefficients[index] = complex(value)

    @classmethod
    def constant(cls, value: complex, n: int) -> "Polynomial":
        return cls({(0,) * n: value}, n)

    @property
    def degree(self) -> int:
        return max((sum(index) for index in self.coefficients), default=0)

    def evaluate_array(self, points):
        points = self._check(points)
        total = np.zeros(points.shape[0], dtype=complex)
        for index, value in self.coefficients.items():
            monomial = np.ones(points.shape[0], dtype=complex)
            for j, power in enumerate(index):
                if power:
                    monomial *= points[:, j] ** power
            total += value * monomial
        return total

    def to_json(self):
        return {
            "variant": self.variant,
            "n": self.n,
            "coefficients": [[list(index), _complex_to_json(value)] for index, value in sorted(self.coefficients.items())],
        }


class KernelPower(HoloFunction):
    """f_a(z) = (1 - |a|^2)^theta / (1 - <z, a>)^exponent."""

    variant = "kernel_power_fa"

    def __init__(self, a: BallPoint, theta: float, exponent: float):
        if not theta > 0:
            raise ContractViolation(f"Kernel power needs theta > 0, got {theta}")
        self.a = a
        self.n = a.n
        self.theta = float(theta)
        self.exponent = float(exponent)

    def evaluate_array(self, points):
        points = self._check(points)
        scale = self.a.one_minus_norm_squared**self.theta
        return scale * principal_power(1.0 - points @ np.conj(self.a.coords), self.exponent)

    @property
    def focus(self):
        return [self.a.coords / self.a.norm] if self.a.norm > 0 else []

    def to_json(self):
        return {"variant": self.variant, "a": self.a.to_json(), "theta": self.theta, "exponent": self.exponent}


class BoundaryKernel(HoloFunction):
    """g_zeta(z) = (1 - <z, zeta>)^(-theta)."""

    variant = "boundary_kernel_g"

    def __init__(self, zeta: SpherePoint, theta: float):
        if not theta > 0:
            raise ContractViolation(f"Boundary kernel needs theta > 0, got {theta}")
        self.zeta = zeta
        self.n = zeta.n
        self.theta = float(theta)

    def evaluate_array(self, points):
        points = self._check(points)
        return principal_power(1.0 - points @ np.conj(self.zeta.coords), self.theta)

    @property
    def focus(self):
        return [self.zeta.coords]

    def to_json(self):
        return {"variant": self.variant, "zeta": self.zeta.to_json(), "theta": self.theta}


class LatticeSum(HoloFunction):
    """S(z) = sum_k lambda_k (1 - |a_k|^2)^theta / (1 - <z, a_k>)^(theta + (n+1+alpha)/q), truncated to the lattice."""

    variant = "lattice_sum"

    def __init__(self, lattice: Lattice, coefficients: Sequence[complex], theta: float, alpha: float, q: float):
        coefficients = np.asarray(coefficients, dtype=complex)
        if coefficients.shape != (len(lattice),):
            raise ContractViolation(f"Expected {len(lattice)} coefficients, got shape {coefficients.shape}")
        if not theta > 0 or not q > 0:
            raise ContractViolation(f"Lattice sums need theta > 0 and q > 0, got theta={theta}, q={q}")
        self.lattice = lattice
        self.n = lattice.n
        self.coefficients = coefficients
        self.theta = float(theta)
        self.alpha = float(alpha)
        self.q = float(q)

    @property
    def exponent(self) -> float:
        return self.theta + (self.n + 1 + self.alpha) / self.q

    def evaluate_array(self, points):
        points = self._check(points)
        active = np.flatnonzero(self.coefficients)
        atoms = self.lattice.points[active]
        weights = self.coefficients[active] * self.lattice.omz2[active] ** self.theta
        total = np.zeros(points.shape[0], dtype=complex)
        for start in range(0, points.shape[0], CHUNK):
            block = principal_power(1.0 - points[start : start + CHUNK] @ np.conj(atoms).T, self.exponent)
            total[start : start + block.shape[0]] = block @ weights
        return total

    def to_json(self):
        return {
            "variant": self.variant,
            "lattice": self.lattice.to_json(),
            "coefficients": [_complex_to_json(c) for c in self.coefficients],
            "theta": self.theta,
            "alpha": self.alpha,
            "q": self.q,
        }


class RademacherSum(LatticeSum):
    """F_tau: the lattice sum with coefficients lambda_k r_k(tau), k counted from 1."""

    variant = "rademacher_sum"

    def __init__(self, base: LatticeSum, tau: float):
        self.base = base
        self.tau = float(tau)
        signs = rademacher_signs(len(base.lattice), tau)
        super().__init__(base.lattice, base.coefficients * signs, base.theta, base.alpha, base.q)

    def to_json(self):
        return {"variant": self.variant, "sum": self.base.to_json(), "tau": self.tau}


class Composed(HoloFunction):
    """phi(f(z)) for a polynomial phi(u) = sum_j c_j u^j in one variable."""

    variant = "composed"

    def __init__(self, outer: Sequence[complex], inner: HoloFunction):
        if len(outer) == 0:
            raise ContractViolation("The outer polynomial needs at least one coefficient")
        self.outer = [complex(c) for c in outer]
        self.inner = inner
        self.n = inner.n

    @property
    def degree(self) -> int:
        nonzero = [j for j, c in enumerate(self.outer) if c != 0]
        return nonzero[-1] if nonzero else 0

    def evaluate_array(self, points):
        values = self.inner.evaluate_array(points)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.polyval(self.outer[::-1], values)

    @property
    def focus(self):
        return self.inner.focus

    def to_json(self):
        return {"variant": self.variant, "outer": [_complex_to_json(c) for c in self.outer], "inner": self.inner.to_json()}


def function_from_json(data: Dict[str, Any]) -> HoloFunction:
    variant = data.get("variant")
    if variant == "polynomial":
        coefficients = {tuple(index): _complex_from_json(value) for index, value in data["coefficients"]}
        return Polynomial(coefficients, data["n"])
    if variant == "kernel_power_fa":
        return KernelPower(BallPoint.from_json(data["a"]), data["theta"], data["exponent"])
    if variant == "boundary_kernel_g":
        return BoundaryKernel(SpherePoint.from_json(data["zeta"]), data["theta"])
    if variant == "lattice_sum":
        return LatticeSum(
            Lattice.from_json(data["lattice"]),
            [_complex_from_json(c) for c in data["coefficients"]],
            data["theta"],
            data["alpha"],
            data["q"],
        )
    if variant == "rademacher_sum":
        base = function_from_json(data["sum"])
        if not isinstance(base, LatticeSum):
            raise ContractViolation("A Rademacher sum needs a lattice sum")
        return RademacherSum(base, data["tau"])
    if variant == "composed":
        return Composed([_complex_from_json(c) for c in data["outer"]], function_from_json(data["inner"]))
    raise ContractViolation(f"Unknown function variant {variant!r}")


def evaluate(f: HoloFunction, z: BallPoint) -> complex:
    if z.n != f.n:
        raise ContractViolation(f"Dimension mismatch: function in dimension {f.n}, point in dimension {z.n}")
    value = complex(f.evaluate_array(z.coords[None, :])[0])
    if not np.isfinite(value):
        logger.warning("Evaluation of %s overflowed at %s", f.variant, z)
    return value


def test_function(a: BallPoint, theta: float, p: float, q: float, alpha: float) -> KernelPower:
    """The test family f_a with exponent theta + (n+1+alpha)/q + n/p."""
    n = a.n
    return KernelPower(a, theta, theta + (n + 1 + alpha) / q + n / p)


# not a pytest test
test_function.__test__ = False  # type: ignore[attr-defined]


def boundary_kernel(zeta: SpherePoint, theta: float) -> BoundaryKernel:
    return BoundaryKernel(zeta, theta)


def lattice_kernel(lattice: Lattice, coefficients: Sequence[complex], theta: float, alpha: float, q: float) -> LatticeSum:
    return LatticeSum(lattice, coefficients, theta, alpha, q)


def randomized(lattice_sum: LatticeSum, tau: float) -> RademacherSum:
    return RademacherSum(lattice_sum, tau)


def linear_monomial(delta: complex, n: int) -> Polynomial:
    """f(z) = delta z_1."""
    index = tuple(1 if j == 0 else 0 for j in range(n))
    return Polynomial({index: delta}, n)


def superpose(outer: Sequence[complex], f: HoloFunction) -> Composed:
    return Composed(outer, f)


def boundary_kernel_window(p: float, q: float, alpha: float, n: int) -> Tuple[float, float]:
    """Open interval of theta for which g_zeta lies in the Hardy type tent space."""
    low = (n + 1 + alpha) / q
    return low, low + n / p


def rademacher(k: int, tau: float) -> int:
    """r_k(tau) = sign sin(2^k pi tau), taken as +1 at the zeros."""
    if k < 1:
        raise ContractViolation(f"Rademacher index starts at 1, got {k}")
    if not 0 <= tau < 1:
        raise ContractViolation(f"tau must lie in [0, 1), got {tau}")
    phase = (Fraction(tau) * 2 ** (k - 1)) % 1
    return -1 if phase > Fraction(1, 2) else 1


def rademacher_signs(count: int, tau: float) -> np.ndarray:
    return np.array([rademacher(k, tau) for k in range(1, count + 1)], dtype=float)


def dyadic_grid(level: int) -> np.ndarray:
    """Numerators 2m+1 of the midpoints tau_m = (2m+1)/2^(level+2), m < 2^(level+1)."""
    if not 1 <= level <= MAX_KHINCHINE_LEVEL:
        raise ContractViolation(f"Dyadic level must lie in [1, {MAX_KHINCHINE_LEVEL}], got {level}")
    return 2 * np.arange(2 ** (level + 1), dtype=np.int64) + 1


def rademacher_table(level: int) -> np.ndarray:
    """Signs r_k(tau_m) for k = 1..level on the dyadic midpoint grid, one row per tau_m."""
    numerators = dyadic_grid(level)
    modulus = 2 ** (level + 2)
    table = np.empty((numerators.shape[0], level))
    for k in range(1, level + 1):
        phase = (numerators * 2 ** (k - 1)) % modulus
        table[:, k - 1] = np.where(phase > modulus // 2, -1.0, 1.0)
    return table


def cauchy_riemann_residual(f: HoloFunction, z: BallPoint, h: float = 1e-5) -> float:
    """max_j |d f/dy_j - i d f/dx_j| by central differences, relative to the size of the derivative."""
    residual = 0.0
    for j in range(f.n):
        step = np.zeros(f.n, dtype=complex)
        step[j] = h
        stencil = np.array([z.coords + step, z.coords - step, z.coords + 1j * step, z.coords - 1j * step])
        plus_x, minus_x, plus_y, minus_y = f.evaluate_array(stencil)
        dx = (plus_x - minus_x) / (2 * h)
        dy = (plus_y - minus_y) / (2 * h)
        residual = max(residual, abs(dy - 1j * dx) / max(1.0, abs(dx)))
    return float(residual)


def evaluation_radius_profile(f: HoloFunction, zeta: SpherePoint, radii: Sequence[float]) -> np.ndarray:
    """f along the radius r zeta, used to check branch continuity."""
    return f.evaluate_array(np.asarray(radii, dtype=float)[:, None] * zeta.coords[None, :])


def kernel_bracket(f: KernelPower, r: float, samples: int, rng: np.random.Generator) -> Tuple[float, float]:
    """min and max of |f_a| on sampled points of D(a, r), normalized by |f_a(a)|."""
    u = ball_array(rng, samples, f.n, radius=math.tanh(r))
    values = np.abs(f.evaluate_array(moebius(f.a.coords, u)))
    center = abs(evaluate(f, f.a))
    return float(values.min() / center), float(values.max() / center)

