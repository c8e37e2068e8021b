"""Brownian paths on nested dyadic partitions, ODE/SDE target generation,
and the fine-grid reference evaluation of signature functionals.

Randomness is counter-based: every Gaussian variate is addressed by the key
(seed, sample_index, refinement_level, position, coordinate), hashed through
SplitMix64.  The variate is produced by the Marsaglia polar method from pairs
of 64-bit uniforms drawn from the key's private counter stream, so samples
are bit-reproducible regardless of batching or evaluation order, and the
restriction of a depth-n lattice to a coarser dyadic grid is bit-identical
to the lattice generated directly at that depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .paths import PiecewiseLinearPath, dyadic_times
from .signature import LinearFunctional, stream_table

__all__ = [
    "BrownianLattice",
    "VectorField",
    "OdeBlowupError",
    "sample_brownian",
    "sample_brownian_batch",
    "interpolate",
    "make_vector_field",
    "solve_ode_pl",
    "solve_ode_batch",
    "sde_exact_gbm",
    "stratonovich_reference",
]

MAX_DEPTH = 24

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ABSORB = np.uint64(0xC2B2AE3D27D4EB4F)


def _mix(z: np.ndarray) -> np.ndarray:
    # SplitMix64 output function (Steele, Lea, Flood 2014); uint64 arithmetic
    # wraps by design.
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _derive_keys(seed, sample, level, position, coordinate) -> np.ndarray:
    """One 64-bit key per (seed, sample, level, position, coordinate);
    the integer arguments broadcast.

    (level, position, coordinate) pack injectively into one word (level and
    coordinate below 2**8, position below 2**48), so two mixing rounds
    separate every event of a sample's lattice.
    """
    with np.errstate(over="ignore"):
        base = _mix(np.uint64(seed) + _GAMMA)
        base = _mix(base ^ (np.asarray(sample, dtype=np.uint64) * _ABSORB))
        packed = (
            (np.asarray(level, dtype=np.uint64) << np.uint64(56))
            | (np.asarray(position, dtype=np.uint64) << np.uint64(8))
            | np.asarray(coordinate, dtype=np.uint64)
        )
        return _mix(base ^ (packed * _ABSORB))


def _uniform(keys: np.ndarray, draw: int) -> np.ndarray:
    """draw-th U[0,1) variate of each key's counter stream."""
    with np.errstate(over="ignore"):
        bits = _mix(keys + np.uint64(draw + 1) * _GAMMA)
    return (bits >> np.uint64(11)) * 2.0**-53


def standard_normal(keys) -> np.ndarray:
    """One N(0,1) variate per key via the Marsaglia polar method.

    Rejected pairs advance the key's own counter, so each entry is a pure
    function of its key.
    """
    keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
    flat_keys = keys.reshape(-1)
    u = 2.0 * _uniform(flat_keys, 0) - 1.0
    v = 2.0 * _uniform(flat_keys, 1) - 1.0
    s = u * u + v * v
    ok = (s > 0.0) & (s < 1.0)
    s_safe = np.where(ok, s, 0.5)
    out = u * np.sqrt(-2.0 * np.log(s_safe) / s_safe)
    pending = np.flatnonzero(~ok)
    for draw in range(1, 128):
        if pending.size == 0:
            break
        k = flat_keys[pending]
        u = 2.0 * _uniform(k, 2 * draw) - 1.0
        v = 2.0 * _uniform(k, 2 * draw + 1) - 1.0
        s = u * u + v * v
        ok = (s > 0.0) & (s < 1.0)
        s_safe = np.where(ok, s, 0.5)
        value = u * np.sqrt(-2.0 * np.log(s_safe) / s_safe)
        out[pending[ok]] = value[ok]
        pending = pending[~ok]
    if pending.size:
        raise RuntimeError("polar sampler failed to accept after 128 rounds")
    return out.reshape(keys.shape)


@dataclass(frozen=True)
class BrownianLattice:
    """Brownian values on the finest dyadic grid of one sample path."""

    seed: int
    sample_index: int
    d: int
    T: float
    n_max: int
    values: np.ndarray  # (2**n_max + 1, d)

    @property
    def times(self) -> np.ndarray:
        return dyadic_times(self.T, self.n_max)

    def restrict(self, depth: int) -> np.ndarray:
        if depth > self.n_max:
            raise ValueError(f"depth {depth} exceeds n_max {self.n_max}")
        stride = 2 ** (self.n_max - depth)
        return self.values[::stride]


def sample_brownian_batch(seed, sample_indices, d, T, n_max) -> np.ndarray:
    """Brownian lattices for several sample indices; shape (B, 2**n_max+1, d).

    Depth 0 draws the endpoint as N(0, T I); each refinement level fills the
    midpoints with the bridge law mid = (left+right)/2 + sqrt(h/4) Z, h the
    parent spacing.
    """
    if n_max > MAX_DEPTH:
        raise ValueError(f"n_max {n_max} exceeds {MAX_DEPTH}")
    if n_max < 0 or d < 1 or T <= 0:
        raise ValueError("need n_max >= 0, d >= 1, T > 0")
    samples = np.asarray(sample_indices, dtype=np.int64)
    if (samples < 0).any() or int(seed) < 0:
        raise ValueError("seed and sample indices must be non-negative")
    n_pts = 2**n_max + 1
    coords = np.arange(d)
    w = np.zeros((samples.size, n_pts, d))
    z_end = standard_normal(
        _derive_keys(seed, samples[:, None], 0, 0, coords[None, :])
    )
    w[:, -1, :] = np.sqrt(T) * z_end
    for level in range(1, n_max + 1):
        n_pos = 2 ** (level - 1)
        stride = 2 ** (n_max - level + 1)
        half = stride // 2
        keys = _derive_keys(
            seed,
            samples[:, None, None],
            level,
            np.arange(n_pos)[None, :, None],
            coords[None, None, :],
        )
        z = standard_normal(keys)
        parent_h = T / n_pos
        left = w[:, : n_pts - 1 : stride, :]
        right = w[:, stride::stride, :]
        w[:, half::stride, :] = 0.5 * (left + right) + np.sqrt(parent_h / 4.0) * z
    return w


def sample_brownian(seed, sample_index, d, T, n_max) -> BrownianLattice:
    values = sample_brownian_batch(seed, [sample_index], d, T, n_max)[0]
    return BrownianLattice(int(seed), int(sample_index), d, float(T), n_max, values)


def interpolate(lattice: BrownianLattice, depth: int) -> PiecewiseLinearPath:
    """Piecewise linear interpolation along the depth-n dyadic partition."""
    return PiecewiseLinearPath(dyadic_times(lattice.T, depth), lattice.restrict(depth))


# -- vector fields and the segment ODE ----------------------------------------


class OdeBlowupError(RuntimeError):
    """Non-finite state during ODE integration."""


@dataclass(frozen=True)
class VectorField:
    """Drift (t, y) -> (..., m) and diffusion (t, y) -> (..., m, d), plus the
    constant C of the linear growth bound |mu| + |sigma| <= C (1 + |y|)."""

    name: str
    m: int
    d: int
    drift: Callable
    diffusion: Callable
    growth_const: float


def make_vector_field(name: str, d: int = 1, a: float = 0.0, b: float = 1.0) -> VectorField:
    """Named built-in fields; `a` and `b` parameterize the linear field."""
    if name == "zero-drift-identity":
        eye = np.eye(d)

        def drift(t, y):
            return np.zeros_like(y)

        def diffusion(t, y):
            return np.broadcast_to(eye, y.shape[:-1] + (d, d))

        return VectorField(name, d, d, drift, diffusion, 1.0)
    if name == "linear":
        if d != 1:
            raise ValueError("linear field is scalar (d = 1)")

        def drift(t, y):
            return a * y

        def diffusion(t, y):
            return (b * y)[..., None]

        return VectorField(name, 1, 1, drift, diffusion, abs(a) + abs(b))
    if name == "tanh-bounded":
        if d != 1:
            raise ValueError("tanh-bounded field is scalar (d = 1)")

        def drift(t, y):
            return np.tanh(y)

        def diffusion(t, y):
            return np.tanh(y)[..., None]

        return VectorField(name, 1, 1, drift, diffusion, 2.0)
    raise ValueError(f"unknown vector field {name!r}")


def solve_ode_batch(times, raw_values, vf: VectorField, y0, substeps: int):
    """Classical RK4 along a piecewise linear driver, batched over paths.

    times : (K,) shared partition; raw_values : (..., K, d) spatial
    coordinates of the driver.  On each segment the driver contributes the
    constant slope v, giving dY = (mu(t, Y) + sigma(t, Y) v) dt.

    Returns (Y, blown) where Y is (..., K, m) and `blown` flags paths that
    left the finite range (their trailing values are frozen at the last
    finite state).
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    times = np.asarray(times, dtype=float)
    raw_values = np.asarray(raw_values, dtype=float)
    batch = raw_values.shape[:-2]
    n_pts = times.size
    y = np.broadcast_to(np.asarray(y0, dtype=float), batch + (vf.m,)).copy()
    out = np.empty(batch + (n_pts, vf.m))
    out[..., 0, :] = y
    blown = np.zeros(batch, dtype=bool)

    def rhs(t, state, slope):
        sig = vf.diffusion(t, state)
        return vf.drift(t, state) + np.einsum("...md,...d->...m", sig, slope)

    for k in range(n_pts - 1):
        dt = times[k + 1] - times[k]
        slope = (raw_values[..., k + 1, :] - raw_values[..., k, :]) / dt
        h = dt / substeps
        for j in range(substeps):
            t = times[k] + j * h
            k1 = rhs(t, y, slope)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1, slope)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2, slope)
            k4 = rhs(t + h, y + h * k3, slope)
            y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            bad = ~np.isfinite(y_new).all(axis=-1)
            y = np.where(bad[..., None], y, y_new)
            blown |= bad
        out[..., k + 1, :] = y
    return out, blown


def solve_ode_pl(
    driver: PiecewiseLinearPath, vf: VectorField, y0, substeps: int = 4
) -> np.ndarray:
    """Solve dY = mu dt + sigma dX along one time-extended driver; returns Y
    at every driver breakpoint, shape (K, m)."""
    if driver.dim != vf.d + 1:
        raise ValueError(
            f"driver has {driver.dim - 1} spatial coordinates, field wants {vf.d}"
        )
    raw = driver.values[:, 1:]
    y, blown = solve_ode_batch(driver.times, raw, vf, y0, substeps)
    if blown:
        finite = np.isfinite(y).all(axis=-1)
        first_bad = int(np.argmin(finite)) if not finite.all() else driver.n_segments
        raise OdeBlowupError(f"non-finite state near segment {first_bad}")
    return y


def sde_exact_gbm(lattice: BrownianLattice, a: float, b: float, y0: float, eval_times):
    """Exact Stratonovich geometric Brownian motion y0 exp(a t + b W_t),
    with W read from the finest-grid interpolation at eval_times."""
    if lattice.d != 1:
        raise ValueError("geometric Brownian target is scalar (d = 1)")
    eval_times = np.asarray(eval_times, dtype=float)
    w = interpolate(lattice, lattice.n_max).eval(eval_times)[..., 0]
    return y0 * np.exp(a * eval_times + b * w)


def _nearest_indices(times: np.ndarray, query: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(times, query)
    pos = np.clip(pos, 1, times.size - 1)
    left_closer = np.abs(query - times[pos - 1]) <= np.abs(times[pos] - query)
    return np.where(left_closer, pos - 1, pos)


def stratonovich_reference(
    lattice: BrownianLattice, functional: LinearFunctional, eval_times
) -> np.ndarray:
    """Evaluate a linear functional on the signature stream of the finest
    time-extended interpolation, at the breakpoints nearest eval_times.

    Serves as the fine-grid proxy for the corresponding functional of the
    underlying Brownian signature.
    """
    eval_times = np.asarray(eval_times, dtype=float)
    if (eval_times < 0).any() or (eval_times > lattice.T).any():
        raise ValueError(f"eval times outside [0, {lattice.T}]")
    if functional.dim != lattice.d + 1:
        raise ValueError("functional must act on the time-extended alphabet")
    times = lattice.times
    hat = np.concatenate([times[:, None], lattice.values], axis=1)
    idx = _nearest_indices(times, eval_times)
    order = np.argsort(idx, kind="stable")
    unique_idx, inverse = np.unique(idx[order], return_inverse=True)
    table = stream_table(hat, functional.level, eval_idx=unique_idx)
    values = table @ functional.coefficient_vector()
    out = np.empty(eval_times.shape)
    out[order] = values[inverse]
    return out
