"""
Vectorized draws and densities for the built-in distributions.

Parameters arrive as arrays with one entry per sample row, already
evaluated against the parents' sampled values. ``normal(mu, sigma)`` takes
the standard deviation. Discrete supports are embedded in floats; the
"no outcome" value of a sub-stochastic ``finite`` is NaN.
"""
from typing import List, Sequence

import numpy as np
from scipy import stats

from core.exceptions import InvalidParameter

CONTINUOUS = frozenset({'normal', 'beta', 'uniform'})
FINITE = frozenset({'flip', 'finite', 'uniform_list'})
COUNTABLE = frozenset({'poisson', 'delta'}) | FINITE

MASS_TOLERANCE = 1e-9


def _invalid(kind: str, message: str):
    raise InvalidParameter(f'{kind}: {message}')


def check_parameters(kind: str, params: Sequence[np.ndarray]):
    """Raise InvalidParameter when any row holds parameters outside the domain"""
    for param in params:
        if np.any(np.isnan(param)):
            _invalid(kind, 'parameter is not a number')
    if kind == 'normal':
        if np.any(params[1] <= 0):
            _invalid(kind, f'standard deviation must be positive, got {np.min(params[1]):g}')
    elif kind == 'beta':
        if np.any(params[0] <= 0) or np.any(params[1] <= 0):
            _invalid(kind, 'shape parameters must be positive')
    elif kind == 'poisson':
        if np.any(params[0] < 0):
            _invalid(kind, f'rate must be non-negative, got {np.min(params[0]):g}')
    elif kind == 'uniform':
        if np.any(params[0] >= params[1]):
            _invalid(kind, 'lower bound must be below the upper bound')
    elif kind in ('flip', 'finite'):
        for weight in params:
            if np.any(weight < 0) or np.any(weight > 1):
                _invalid(kind, 'probabilities must lie in [0,1]')
        if kind == 'finite' and np.any(np.sum(params, axis=0) > 1 + MASS_TOLERANCE):
            _invalid(kind, 'probabilities sum to more than 1')


def list_weights(kind: str, params: Sequence[np.ndarray], outcomes: np.ndarray, size: int) -> np.ndarray:
    """Weights of a list distribution as a (number of outcomes, rows) matrix"""
    if kind == 'uniform_list':
        return np.full((len(outcomes), size), 1.0 / len(outcomes))
    return np.vstack([np.broadcast_to(weight, (size,)) for weight in params])


def draw(kind: str, params: List[np.ndarray], outcomes: np.ndarray, size: int,
         rng: np.random.Generator) -> np.ndarray:
    """One value per row; ``outcomes`` are the codes of a list distribution"""
    if kind == 'normal':
        return stats.norm.rvs(loc=params[0], scale=params[1], size=size, random_state=rng)
    if kind == 'beta':
        return stats.beta.rvs(params[0], params[1], size=size, random_state=rng)
    if kind == 'uniform':
        return stats.uniform.rvs(loc=params[0], scale=params[1] - params[0], size=size, random_state=rng)
    if kind == 'poisson':
        return stats.poisson.rvs(params[0], size=size, random_state=rng).astype(float)
    if kind == 'flip':
        return (rng.random(size) < params[0]).astype(float)
    if kind in ('finite', 'uniform_list'):
        weights = list_weights(kind, params, outcomes, size)
        cumulative = np.cumsum(weights, axis=0)
        u = rng.random(size)
        index = np.sum(u[None, :] >= cumulative, axis=0)
        extended = np.append(outcomes, np.nan)
        return extended[np.minimum(index, len(outcomes))]
    if kind == 'delta':
        return np.broadcast_to(np.asarray(params[0], dtype=float), (size,)).copy()
    raise InvalidParameter(f'Unknown distribution {kind}')


def density(kind: str, params: List[np.ndarray], x: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """Density (continuous kinds) or mass (countable kinds) at ``x``; zero outside the support"""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid='ignore'):
        if kind == 'normal':
            return stats.norm.pdf(x, loc=params[0], scale=params[1])
        if kind == 'beta':
            return stats.beta.pdf(x, params[0], params[1])
        if kind == 'uniform':
            return stats.uniform.pdf(x, loc=params[0], scale=params[1] - params[0])
        if kind == 'poisson':
            return stats.poisson.pmf(x, params[0])
        if kind == 'flip':
            p = params[0]
            return np.where(x == 1, p, np.where(x == 0, 1 - p, 0.0))
        if kind in ('finite', 'uniform_list'):
            weights = list_weights(kind, params, outcomes, np.size(x))
            matches = np.asarray(outcomes)[:, None] == x[None, :]
            return np.sum(np.where(matches, weights, 0.0), axis=0)
        if kind == 'delta':
            return (x == params[0]).astype(float)
    raise InvalidParameter(f'Unknown distribution {kind}')


def outcome_weights(kind: str, params: List[np.ndarray], outcomes: np.ndarray, size: int):
    """
    Finite support of a distribution with per-row weights, for enumeration:
    a list of ``(value, weights)`` pairs, NaN standing for "no outcome".
    """
    if kind == 'flip':
        p = np.broadcast_to(params[0], (size,))
        return [(1.0, p), (0.0, 1.0 - p)]
    weights = list_weights(kind, params, outcomes, size)
    pairs = [(float(value), weights[k]) for k, value in enumerate(outcomes)]
    leftover = 1.0 - weights.sum(axis=0)
    if np.any(leftover > MASS_TOLERANCE):
        pairs.append((np.nan, np.clip(leftover, 0.0, 1.0)))
    return pairs
