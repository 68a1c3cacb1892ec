"""
Single-mode Gaussian states and the fiducial Gaussian channel.

States are kept in the frequency representation: a diagonal covariance matrix
(m + 1/2) * diag(1/omega, omega) is described by its thermal photons m and its
frequency omega. Entropies are in bits.
"""
import math
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)

# Relative slack allowed on the pure-environment floor y >= |1 - tau| / 2
FLOOR_RTOL = 1e-12


class GaussCapError(Exception):
    """Base class for every error raised by this project"""


class GaussianDomainError(GaussCapError, ValueError):
    """An argument lies outside the domain of the function"""


class UnphysicalChannelError(GaussianDomainError):
    """Channel parameters violate complete positivity"""

    def __init__(self, tau, y, deficit):
        self.tau = tau
        self.y = y
        self.deficit = deficit
        super().__init__(
            f"unphysical channel: y >= |1-tau|/2 violated for tau={tau:g}, y={y:g} "
            f"(deficit y - |1-tau|/2 = {deficit:.3e})"
        )


class DegenerateChannelError(GaussianDomainError):
    """The zero-transmission channel (tau = 0) reached a formula dividing by |tau|"""


class ChannelKind(str, Enum):
    PERFECT = "perfect"
    ZERO_TRANSMISSION = "zero_transmission"
    LOSSY = "lossy"
    ADDITIVE = "additive"
    AMPLIFIER = "amplifier"
    PHASE_CONJUGATING = "phase_conjugating"


def _check_photons(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise GaussianDomainError(f"{name} must be finite, got {x}")
    if np.any(arr < 0):
        raise GaussianDomainError(f"{name} must be >= 0, got {x}")
    return arr


def _as_result(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def g(x):
    """Von Neumann entropy in bits of a thermal state with x photons"""
    x = _check_photons(x)
    # g(x) = log2(x+1) + x*log2(1 + 1/x), stable for large x; xlog1py gives 0 at x = 0
    with np.errstate(divide="ignore"):
        inv = np.where(x > 0, 1.0 / np.where(x > 0, x, 1.0), np.inf)
    return _as_result((np.log1p(x) + special.xlog1py(x, inv)) / LN2)


def g_prime(x):
    """First derivative of g, log2((x+1)/x)"""
    arr = _check_photons(x)
    if np.any(arr <= 0):
        raise GaussianDomainError(f"g_prime is defined for x > 0, got {x}")
    return _as_result(np.log1p(1.0 / arr) / LN2)


def beta(m, omega):
    """
    Inverse temperature of a state with m thermal photons at frequency omega.

    Inverts the Bose-Einstein relation m = 1/(exp(omega*beta) - 1). The pure
    state m = 0 sits on the zero-temperature boundary and maps to +inf.
    """
    m_arr = _check_photons(m, "m")
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(~(omega_arr > 0)):
        raise GaussianDomainError(f"omega must be > 0, got {omega}")
    with np.errstate(divide="ignore"):
        result = np.where(m_arr > 0, np.log1p(1.0 / np.where(m_arr > 0, m_arr, 1.0)), np.inf) / omega_arr
    return _as_result(result)


def bose_einstein(beta_value, omega):
    """Thermal photons at inverse temperature beta_value and frequency omega"""
    if math.isinf(beta_value):
        return 0.0
    if beta_value <= 0 or omega <= 0:
        raise GaussianDomainError(f"beta and omega must be > 0, got beta={beta_value}, omega={omega}")
    return 1.0 / math.expm1(omega * beta_value)


@dataclass(frozen=True)
class CovMat2:
    """Single-mode covariance matrix [[vqq, vqp], [vqp, vpp]]"""

    vqq: float
    vpp: float
    vqp: float = 0.0

    def __post_init__(self):
        if not (self.vqq > 0 and self.vpp > 0):
            raise GaussianDomainError(f"covariance diagonal must be positive, got ({self.vqq}, {self.vpp})")

    @property
    def det(self):
        return self.vqq * self.vpp - self.vqp ** 2

    @property
    def trace(self):
        return self.vqq + self.vpp

    @property
    def is_diagonal(self):
        return self.vqp == 0.0

    @property
    def is_quantum(self):
        # Uncertainty principle det V >= 1/4, with rounding slack
        return self.det >= 0.25 * (1.0 - 1e-12)

    def as_array(self):
        return np.array([[self.vqq, self.vqp], [self.vqp, self.vpp]])

    @classmethod
    def from_array(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (2, 2):
            raise GaussianDomainError(f"expected a 2x2 matrix, got shape {matrix.shape}")
        if not np.isclose(matrix[0, 1], matrix[1, 0], rtol=0.0, atol=1e-12):
            raise GaussianDomainError("covariance matrix must be symmetric")
        return cls(vqq=float(matrix[0, 0]), vpp=float(matrix[1, 1]), vqp=float(matrix[0, 1]))


@dataclass(frozen=True)
class ModeState:
    """Diagonal single-mode Gaussian state in frequency representation"""

    m: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0):
            raise GaussianDomainError(f"thermal photons must be >= 0, got {self.m}")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise GaussianDomainError(f"frequency must be > 0, got {self.omega}")

    @property
    def is_pure(self):
        return self.m == 0

    def to_covariance(self):
        nu = self.m + 0.5
        return CovMat2(vqq=nu / self.omega, vpp=nu * self.omega)

    @classmethod
    def from_covariance(cls, cm):
        if not cm.is_diagonal:
            raise GaussianDomainError("frequency representation needs a diagonal covariance matrix")
        if not cm.is_quantum:
            raise GaussianDomainError(f"not a quantum covariance matrix: det={cm.det:.6g} < 1/4")
        nu = math.sqrt(cm.vqq * cm.vpp)
        return cls(m=max(nu - 0.5, 0.0), omega=math.sqrt(cm.vpp / cm.vqq))


@dataclass(frozen=True)
class EnergyBudget:
    """Mean photon number of the modulated input state"""

    n_bar: float

    def __post_init__(self):
        if not (math.isfinite(self.n_bar) and self.n_bar >= 0):
            raise GaussianDomainError(f"n_bar must be >= 0, got {self.n_bar}")

    @property
    def trace(self):
        """Trace of the modulated input covariance matrix, 2*n_bar + 1"""
        return 2.0 * self.n_bar + 1.0


def photon_number(state):
    """Mean photon number (Tr[V] - 1)/2 of a state"""
    return (state.m + 0.5) * (state.omega + 1.0 / state.omega) / 2.0 - 0.5


def von_neumann_entropy(state):
    return g(state.m)


def pure_floor(tau):
    """Smallest physical noise magnitude y for a given tau"""
    return abs(1.0 - tau) / 2.0


def _canonical_frequency(omega):
    if not (math.isfinite(omega) and omega > 0):
        raise GaussianDomainError(f"omega_env must be > 0, got {omega}")
    if omega > 1.0:
        return 1.0 / omega, True
    return float(omega), False


@dataclass(frozen=True)
class FiducialChannel:
    """
    Fiducial channel X_F = diag(sqrt|tau|, sgn(tau) sqrt|tau|), Y_F = y diag(1/omega_env, omega_env).

    omega_env is stored in canonical form (<= 1); quadrature_swapped records that
    the raw noise had its q-quadrature squeezed instead of p.
    """

    tau: float
    y: float
    omega_env: float = 1.0
    m_env: float = 0.0
    quadrature_swapped: bool = False

    def __post_init__(self):
        if not math.isfinite(self.tau):
            raise GaussianDomainError(f"tau must be finite, got {self.tau}")
        if not (math.isfinite(self.y) and self.y >= 0):
            raise GaussianDomainError(f"y must be >= 0, got {self.y}")
        if not (0 < self.omega_env <= 1):
            raise GaussianDomainError(f"omega_env must lie in (0, 1] after canonicalization, got {self.omega_env}")
        deficit = self.y - pure_floor(self.tau)
        if deficit < -FLOOR_RTOL * max(1.0, pure_floor(self.tau)):
            raise UnphysicalChannelError(self.tau, self.y, deficit)

    @classmethod
    def from_environment(cls, tau, m_env, omega_env=1.0, perfect_at_unity=False):
        """Build from environment photons, y = |1-tau|(m_env + 1/2) or y = m_env at tau = 1"""
        if not (math.isfinite(m_env) and m_env >= 0):
            raise GaussianDomainError(f"m_env must be >= 0, got {m_env}")
        omega, swapped = _canonical_frequency(omega_env)
        if tau == 1.0 and not perfect_at_unity:
            y = float(m_env)
        else:
            y = abs(1.0 - tau) * (m_env + 0.5)
        return cls(tau=float(tau), y=y, omega_env=omega, m_env=float(m_env), quadrature_swapped=swapped)

    @classmethod
    def from_noise(cls, tau, y, omega_env=1.0):
        """Build from the noise magnitude y, holding y fixed while tau varies"""
        omega, swapped = _canonical_frequency(omega_env)
        if tau == 1.0:
            m_env = float(y)
        else:
            m_env = max(y / abs(1.0 - tau) - 0.5, 0.0)
        return cls(tau=float(tau), y=float(y), omega_env=omega, m_env=m_env, quadrature_swapped=swapped)

    @property
    def is_perfect(self):
        return self.tau == 1.0 and self.y == 0.0

    @property
    def kind(self):
        if self.is_perfect:
            return ChannelKind.PERFECT
        if self.tau == 0.0:
            return ChannelKind.ZERO_TRANSMISSION
        if self.tau < 0:
            return ChannelKind.PHASE_CONJUGATING
        if self.tau < 1:
            return ChannelKind.LOSSY
        if self.tau == 1:
            return ChannelKind.ADDITIVE
        return ChannelKind.AMPLIFIER

    @property
    def floor_deficit(self):
        return self.y - pure_floor(self.tau)

    def noise(self):
        """Effective noise covariance Y_F in canonical orientation"""
        if self.y == 0.0:
            # Zero matrix is not a valid CovMat2; callers add it to a positive V
            return (0.0, 0.0)
        return (self.y / self.omega_env, self.y * self.omega_env)


def channel_matrices(ch):
    """Explicit (X_F, Y_F) matrices of a fiducial channel in the raw orientation"""
    root = math.sqrt(abs(ch.tau))
    x_mat = np.diag([root, math.copysign(root, ch.tau) if ch.tau != 0 else 0.0])
    nqq, npp = ch.noise()
    if ch.quadrature_swapped:
        nqq, npp = npp, nqq
    return x_mat, np.diag([nqq, npp])


def normalize_channel(x_mat, y_mat):
    """Reduce raw channel matrices (X, Y) to fiducial parameters (tau, y, omega_env)"""
    x_mat = np.asarray(x_mat, dtype=float)
    y_mat = np.asarray(y_mat, dtype=float)
    if x_mat.shape != (2, 2) or y_mat.shape != (2, 2):
        raise GaussianDomainError("channel matrices must be 2x2")
    if not np.allclose(y_mat, y_mat.T, rtol=0.0, atol=1e-12):
        raise GaussianDomainError("noise matrix Y must be symmetric")

    eigvals, eigvecs = np.linalg.eigh(y_mat)
    if eigvals[0] < -1e-12 * max(1.0, abs(eigvals[1])):
        raise GaussianDomainError(f"noise matrix Y must be positive semidefinite, eigenvalues {eigvals}")
    eigvals = np.clip(eigvals, 0.0, None)

    tau = float(np.linalg.det(x_mat))
    y = math.sqrt(eigvals[0] * eigvals[1])
    deficit = y - pure_floor(tau)
    if deficit < -FLOOR_RTOL * max(1.0, pure_floor(tau)):
        raise UnphysicalChannelError(tau, y, deficit)

    if eigvals[1] == 0.0 or math.isclose(eigvals[0], eigvals[1], rel_tol=1e-14):
        # Isotropic noise has no squeezed quadrature
        omega, swapped = 1.0, False
    else:
        # Ratio of principal standard deviations; canonical form squeezes p
        omega = math.sqrt(eigvals[0] / eigvals[1])
        # Large-variance axis closer to p than to q means the q-quadrature is the squeezed one
        major_axis = eigvecs[:, 1]
        swapped = bool(abs(major_axis[1]) > abs(major_axis[0]))

    if tau == 1.0:
        m_env = y
    else:
        m_env = max(y / abs(1.0 - tau) - 0.5, 0.0)
    logger.debug(f"normalized channel: tau={tau:.12g}, y={y:.12g}, omega_env={omega:.12g}, swapped={swapped}")
    return FiducialChannel(tau=tau, y=y, omega_env=omega, m_env=m_env, quadrature_swapped=swapped)


def apply_channel(ch, v):
    """Output covariance |tau| V + Y_F of a diagonal input, in the canonical (p-squeezed) frame"""
    if not v.is_diagonal:
        raise GaussianDomainError("apply_channel works on diagonal covariance matrices")
    nqq, npp = ch.noise()
    scale = abs(ch.tau)
    return CovMat2(vqq=scale * v.vqq + nqq, vpp=scale * v.vpp + npp)
