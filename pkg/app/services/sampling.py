"""Monte Carlo pools, space-filling designs and standard normal primitives."""

import logging
import warnings
from typing import Union

import numpy as np
from scipy import special
from scipy.stats import qmc

from app.exceptions import DomainError
from app.models.sampling import CandidatePool, DesignMethod, MarginalKind, RandomInputSpec

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Independent random streams derived from one master seed
STREAM_DESIGN = 0
STREAM_POOL = 1
STREAM_OPTIMIZER = 2

_UNIT_EPS = 1e-15


def derive_rng(master_seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Return the generator for (stream, index) under a master seed."""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, index))
    return np.random.default_rng(sequence)


def std_normal_cdf(z: ArrayLike) -> ArrayLike:
    """Standard Gaussian CDF."""
    return special.ndtr(z)


def std_normal_inv_cdf(p: ArrayLike) -> ArrayLike:
    """Inverse of the standard Gaussian CDF on the open interval (0, 1)."""
    values = np.asarray(p, dtype=float)
    if np.any(~(values > 0.0) | ~(values < 1.0)):
        raise DomainError("inverse normal CDF is defined for 0 < p < 1 only")
    return special.ndtri(p)


def map_to_marginals(spec: RandomInputSpec, unit_points: np.ndarray) -> np.ndarray:
    """Map points of the unit hypercube through each marginal's inverse CDF."""
    unit_points = np.atleast_2d(np.asarray(unit_points, dtype=float))
    if unit_points.shape[1] != spec.dimension:
        raise DomainError(f"expected {spec.dimension} columns, got {unit_points.shape[1]}")
    unit_points = np.clip(unit_points, _UNIT_EPS, 1.0 - _UNIT_EPS)

    mapped = np.empty_like(unit_points)
    for j, marginal in enumerate(spec.marginals):
        if marginal.kind == MarginalKind.STANDARD_GAUSSIAN:
            mapped[:, j] = std_normal_inv_cdf(unit_points[:, j])
        else:
            mapped[:, j] = marginal.lower + (marginal.upper - marginal.lower) * unit_points[:, j]
    return mapped


def sample_pool(spec: RandomInputSpec, size: int, seed: int, generation: int = 0) -> CandidatePool:
    """Draw an i.i.d. candidate pool from the product of marginals."""
    if size < 1:
        raise DomainError("pool size must be at least 1")

    rng = derive_rng(seed, STREAM_POOL, generation)
    points = np.empty((size, spec.dimension))
    for j, marginal in enumerate(spec.marginals):
        if marginal.kind == MarginalKind.STANDARD_GAUSSIAN:
            points[:, j] = rng.standard_normal(size)
        else:
            points[:, j] = rng.uniform(marginal.lower, marginal.upper, size)

    return CandidatePool(points=points, seed=seed, generation=generation)


def initial_design(
    spec: RandomInputSpec,
    size: int,
    seed: int,
    method: DesignMethod = DesignMethod.SOBOL,
) -> np.ndarray:
    """Space-filling initial design mapped onto the input marginals."""
    if size < 2:
        raise DomainError("initial design needs at least 2 points")

    rng = derive_rng(seed, STREAM_DESIGN)
    if method == DesignMethod.SOBOL:
        sampler = qmc.Sobol(d=spec.dimension, scramble=True, seed=rng)
        with warnings.catch_warnings():
            # Sobol balance warning for sizes that are not powers of two
            warnings.simplefilter("ignore", UserWarning)
            unit = sampler.random(size)
    else:
        unit = qmc.LatinHypercube(d=spec.dimension, seed=rng).random(size)

    design = map_to_marginals(spec, unit)
    if np.unique(design, axis=0).shape[0] != size:
        raise DomainError("initial design contains duplicate points")

    logger.debug(f"Generated {method.value} initial design of {size} points in {spec.dimension}-D")
    return design
