"""Benchmark model functions: toy, Ishigami and a Bouc-Wen shear frame."""

import logging
import threading
from typing import Callable, Dict, NamedTuple, Optional, Union

import numpy as np
from scipy import linalg

from app.config import settings
from app.exceptions import DimensionMismatch, DomainError, NonFiniteState, UnknownBenchmark
from app.models.benchmark import BenchmarkPreset, BoucWenFrame
from app.models.learning import TailMode
from app.models.sampling import RandomInputSpec
from app.services.sampling import std_normal_cdf

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]

ISHIGAMI_A = 7.0
ISHIGAMI_B = 0.1


def _as_points(x: np.ndarray, dimension: int) -> np.ndarray:
    points = np.atleast_2d(np.asarray(x, dtype=float))
    if points.shape[1] != dimension:
        raise DimensionMismatch(f"expected {dimension}-D input, got {points.shape[1]}-D")
    return points


def _match_input(x: np.ndarray, values: np.ndarray) -> Union[float, np.ndarray]:
    return float(values[0]) if np.ndim(x) == 1 else values


class ModelFunction:
    """Deterministic model Y = M(X) that counts its evaluations."""

    def __init__(self, name: str, dimension: int, evaluator: Evaluator, input_spec: RandomInputSpec):
        self.name = name
        self.dimension = dimension
        self.input_spec = input_spec
        self._evaluator = evaluator
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate an (m, n) array of inputs, returning m outputs."""
        points = _as_points(points, self.dimension)
        values = np.asarray(self._evaluator(points), dtype=float).ravel()
        with self._lock:
            self._calls += points.shape[0]
        return values

    def __repr__(self) -> str:
        return f"ModelFunction(name={self.name!r}, dimension={self.dimension}, calls={self._calls})"


# ---------------------------------------------------------------- toy


def toy_model(x: np.ndarray) -> Union[float, np.ndarray]:
    """min(x1 - x2, x1 + x2)."""
    points = _as_points(x, 2)
    values = np.minimum(points[:, 0] - points[:, 1], points[:, 0] + points[:, 1])
    return _match_input(x, values)


def toy_exact_cdf(y):
    """Exact CDF of the toy model under standard Gaussian inputs."""
    t = np.asarray(y, dtype=float) / np.sqrt(2.0)
    phi = std_normal_cdf(t)
    q = std_normal_cdf(-t)
    # complement form in the upper tail keeps rounding monotone
    values = np.where(t < 0.0, phi * (2.0 - phi), 1.0 - q * q)
    return values[()]


# ---------------------------------------------------------------- Ishigami


def ishigami(x: np.ndarray, a: float = ISHIGAMI_A, b: float = ISHIGAMI_B) -> Union[float, np.ndarray]:
    """sin(x1) + a sin^2(x2) + b x3^4 sin(x1)."""
    points = _as_points(x, 3)
    x1, x2, x3 = points[:, 0], points[:, 1], points[:, 2]
    values = np.sin(x1) + a * np.sin(x2) ** 2 + b * x3 ** 4 * np.sin(x1)
    return _match_input(x, values)


def ishigami_exact_mean_std(a: float = ISHIGAMI_A, b: float = ISHIGAMI_B):
    """Mean and standard deviation under Uniform(-pi, pi)^3 inputs."""
    variance = a ** 2 / 8.0 + b * np.pi ** 4 / 5.0 + b ** 2 * np.pi ** 8 / 18.0 + 0.5
    return a / 2.0, float(np.sqrt(variance))


# ---------------------------------------------------------------- Bouc-Wen frame


def shear_frame_matrices(frame: BoucWenFrame):
    """Initial stiffness and lumped mass matrices of the shear frame."""
    k = np.asarray(frame.stiffness, dtype=float)
    stories = frame.stories
    stiffness = np.zeros((stories, stories))
    for i in range(stories):
        stiffness[i, i] += k[i]
        if i + 1 < stories:
            stiffness[i, i] += k[i + 1]
            stiffness[i, i + 1] = -k[i + 1]
            stiffness[i + 1, i] = -k[i + 1]
    return stiffness, np.diag(np.asarray(frame.mass, dtype=float))


def linear_modal_frequencies(frame: BoucWenFrame) -> np.ndarray:
    """Natural circular frequencies of the initial linear system, ascending."""
    stiffness, mass = shear_frame_matrices(frame)
    eigenvalues = linalg.eigh(stiffness, mass, eigvals_only=True)
    return np.sqrt(eigenvalues)


def linear_modes(frame: BoucWenFrame):
    """Frequencies and mass-normalized mode shapes (columns)."""
    stiffness, mass = shear_frame_matrices(frame)
    eigenvalues, shapes = linalg.eigh(stiffness, mass)
    return np.sqrt(eigenvalues), shapes


def rayleigh_coefficients(frame: BoucWenFrame):
    """(a0, a1) giving the damping ratio on the first two modes."""
    omega = linear_modal_frequencies(frame)
    if omega.shape[0] == 1:
        return 2.0 * frame.damping_ratio * omega[0], 0.0
    w1, w2 = omega[0], omega[1]
    a0 = 2.0 * frame.damping_ratio * w1 * w2 / (w1 + w2)
    a1 = 2.0 * frame.damping_ratio / (w1 + w2)
    return a0, a1


def excitation(amplitudes: np.ndarray, t: float) -> np.ndarray:
    """Ground-free harmonic load shape per sample, before the m_i / 6 factor."""
    return (
        amplitudes[:, 0] * np.sin(2.0 * np.pi * t)
        + amplitudes[:, 1] * np.sin(4.0 * np.pi * t)
        + amplitudes[:, 2] * np.cos(8.0 * np.pi * t)
        + amplitudes[:, 3] * np.sin(16.0 * np.pi * t)
    )


class FrameResponse(NamedTuple):
    """Peak interstory drift per sample, plus optional time histories."""
    max_drift: np.ndarray
    time: Optional[np.ndarray] = None
    displacements: Optional[np.ndarray] = None
    velocities: Optional[np.ndarray] = None
    hysteretic: Optional[np.ndarray] = None


class _FrameDynamics:
    """Right-hand side of the first-order system for a batch of samples."""

    def __init__(self, frame: BoucWenFrame):
        stiffness, mass = shear_frame_matrices(frame)
        a0, a1 = rayleigh_coefficients(frame)
        self.damping = a0 * mass + a1 * stiffness
        self.mass = np.asarray(frame.mass, dtype=float)
        self.k = np.asarray(frame.stiffness, dtype=float)
        self.alpha = frame.alpha
        self.n_bar = frame.n_bar
        self.a_coef = frame.a_coef
        self.gamma = frame.gamma
        self.eta = frame.eta

    @staticmethod
    def interstory(u: np.ndarray) -> np.ndarray:
        return np.diff(u, axis=1, prepend=0.0)

    def rates(self, u: np.ndarray, v: np.ndarray, z: np.ndarray, load: np.ndarray):
        drift = self.interstory(u)
        drift_rate = self.interstory(v)
        restoring = self.k * (self.alpha * drift + (1.0 - self.alpha) * z)
        above = np.zeros_like(restoring)
        above[:, :-1] = restoring[:, 1:]
        acceleration = (load - v @ self.damping.T - restoring + above) / self.mass

        z_pow = np.abs(z) ** self.n_bar
        z_rate = (
            self.a_coef * drift_rate
            - self.gamma * np.abs(drift_rate) * np.sign(z) * z_pow
            - self.eta * z_pow * drift_rate
        )
        return v, acceleration, z_rate


def _step_count(duration: float, dt: float) -> int:
    if dt <= 0:
        raise DomainError("time step must be positive")
    steps = int(round(duration / dt))
    if steps < 1 or abs(steps * dt - duration) > 1e-9 * duration:
        raise DomainError(f"dt={dt} does not divide the {duration} s duration")
    return steps


def simulate_frame(
    amplitudes: np.ndarray,
    frame: Optional[BoucWenFrame] = None,
    dt: Optional[float] = None,
    record: bool = False,
    initial_displacement: Optional[np.ndarray] = None,
) -> FrameResponse:
    """
    Integrate the shear frame from rest with fixed-step RK4.

    Args:
        amplitudes: (B, 4) standard Gaussian load amplitudes
        frame: Structural properties, default frame when omitted
        dt: Time step dividing the duration
        record: Keep displacement, velocity and hysteretic histories
        initial_displacement: Floor displacements at t=0 (free vibration checks)

    Returns:
        FrameResponse with the maximum absolute interstory drift per sample
    """
    frame = frame or BoucWenFrame()
    dt = dt or settings.bouc_wen_dt
    amplitudes = _as_points(amplitudes, 4)
    steps = _step_count(frame.duration, dt)
    dynamics = _FrameDynamics(frame)

    batch, stories = amplitudes.shape[0], frame.stories
    u = np.zeros((batch, stories))
    if initial_displacement is not None:
        u = u + np.asarray(initial_displacement, dtype=float)
    v = np.zeros((batch, stories))
    z = np.zeros((batch, stories))
    load_scale = dynamics.mass / 6.0

    def load(t: float) -> np.ndarray:
        return excitation(amplitudes, t)[:, np.newaxis] * load_scale

    max_drift = np.abs(dynamics.interstory(u)).max(axis=1)
    if record:
        u_hist, v_hist, z_hist = (np.empty((steps + 1, batch, stories)) for _ in range(3))
        u_hist[0], v_hist[0], z_hist[0] = u, v, z

    half = 0.5 * dt
    for step in range(steps):
        t = step * dt
        f0, f_half, f1 = load(t), load(t + half), load(t + dt)
        k1 = dynamics.rates(u, v, z, f0)
        k2 = dynamics.rates(u + half * k1[0], v + half * k1[1], z + half * k1[2], f_half)
        k3 = dynamics.rates(u + half * k2[0], v + half * k2[1], z + half * k2[2], f_half)
        k4 = dynamics.rates(u + dt * k3[0], v + dt * k3[1], z + dt * k3[2], f1)
        u = u + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        v = v + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        z = z + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])

        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and np.all(np.isfinite(z))):
            raise NonFiniteState(f"non-finite state at t={t + dt:.4f} s; reduce dt={dt}")
        np.maximum(max_drift, np.abs(dynamics.interstory(u)).max(axis=1), out=max_drift)
        if record:
            u_hist[step + 1], v_hist[step + 1], z_hist[step + 1] = u, v, z

    if not record:
        return FrameResponse(max_drift)
    return FrameResponse(max_drift, np.arange(steps + 1) * dt, u_hist, v_hist, z_hist)


def bouc_wen_drift(
    x: np.ndarray,
    frame: Optional[BoucWenFrame] = None,
    dt: Optional[float] = None,
    batch_size: Optional[int] = None,
) -> Union[float, np.ndarray]:
    """Maximum absolute interstory drift over stories and time."""
    points = _as_points(x, 4)
    batch_size = batch_size or settings.bouc_wen_batch_size
    drifts = np.empty(points.shape[0])
    for start in range(0, points.shape[0], batch_size):
        stop = min(start + batch_size, points.shape[0])
        drifts[start:stop] = simulate_frame(points[start:stop], frame, dt).max_drift
    return _match_input(x, drifts)


# ---------------------------------------------------------------- registry


PRESETS: Dict[str, BenchmarkPreset] = {
    "toy": BenchmarkPreset(
        name="toy", dimension=2, y_min=-5.0, y_max=3.0, tail_mode=TailMode.BOTH,
        description="min(X1 - X2, X1 + X2) with standard Gaussian inputs",
    ),
    "ishigami": BenchmarkPreset(
        name="ishigami", dimension=3, y_min=-10.0, y_max=15.0, tail_mode=TailMode.BOTH,
        description="Ishigami function (a=7, b=0.1) with Uniform(-pi, pi) inputs",
    ),
    "bouc_wen": BenchmarkPreset(
        name="bouc_wen", dimension=4, y_min=0.0, y_max=0.12, tail_mode=TailMode.CCDF_ONLY,
        description="Peak interstory drift of a 3-story Bouc-Wen shear frame under harmonic loads",
    ),
}


def list_benchmarks():
    return list(PRESETS.values())


def get_preset(name: str) -> BenchmarkPreset:
    if name not in PRESETS:
        raise UnknownBenchmark(f"unknown benchmark '{name}'; choose from {sorted(PRESETS)}")
    return PRESETS[name]


def get_benchmark(name: str, frame: Optional[BoucWenFrame] = None, dt: Optional[float] = None) -> ModelFunction:
    """Build a fresh, call-counting model function by registered name."""
    preset = get_preset(name)
    if name == "toy":
        return ModelFunction(name, 2, toy_model, RandomInputSpec.gaussian(2))
    if name == "ishigami":
        return ModelFunction(name, 3, ishigami, RandomInputSpec.uniform(3, -np.pi, np.pi))

    frame = frame or BoucWenFrame()
    logger.debug(f"Bouc-Wen frame: {frame.stories} stories, alpha={frame.alpha}, dt={dt or settings.bouc_wen_dt}")
    return ModelFunction(
        preset.name, 4, lambda points: bouc_wen_drift(points, frame, dt), RandomInputSpec.gaussian(4)
    )
