"""Exact fractional Gaussian noise on uniform grids.

Two exact-in-law samplers share one Gaussian transform: a Cholesky
oracle for small n and the Davies-Harte circulant embedding for large n.
Multi-resolution coupling is done by summing fine increments in blocks
(coarsen), never by regenerating.
"""

from concurrent.futures import ThreadPoolExecutor
import functools
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy.fft
import scipy.linalg
from scipy.linalg import lapack

from dsmve.errors import DomainError, EmbeddingError, NumericalDegeneracyError, UsageError
from dsmve.models.noise import GeneratorMethod, Hurst, NoiseBlock
from dsmve.rng_util import standard_normals

log = logging.getLogger("dsmve.fgn")

HurstLike = Union[Hurst, float]

# largest n generate_cholesky accepts without allow_large
CHOLESKY_MAX_N = 4096

# relative eigenvalue tolerance for the circulant embedding
EIGENVALUE_TOLERANCE = 1e-8
MAX_EMBEDDING_RETRIES = 3

# bits of lattice resolution below the increment scale
LATTICE_BITS = 32


def as_hurst(hurst: HurstLike) -> Hurst:
    return hurst if isinstance(hurst, Hurst) else Hurst(float(hurst))


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def fbm_covariance(t: float, s: float, hurst: HurstLike) -> float:
    "returns R_H(t, s) = (t^2H + s^2H - |t - s|^2H) / 2"
    if t < 0 or s < 0:
        raise DomainError(f"fBm covariance needs non-negative times got t={t!r} s={s!r}")
    two_h = 2.0 * as_hurst(hurst).h
    return 0.5 * (t ** two_h + s ** two_h - abs(t - s) ** two_h)


def fgn_autocovariance(k: Union[int, np.ndarray], dt: float, hurst: HurstLike) -> Union[float, np.ndarray]:
    """returns gamma(k) = Cov(B_{(k+1)dt} - B_{k dt}, B_dt) for integer lags
    k >= 0 (scalar or array)
    """
    if dt <= 0:
        raise DomainError(f"step must be positive got {dt!r}")
    if np.any(np.asarray(k) < 0):
        raise DomainError(f"lags must be non-negative got {k!r}")
    lags = np.asarray(k, dtype=np.float64)
    two_h = 2.0 * as_hurst(hurst).h
    gamma = (dt ** two_h / 2.0) * (
        np.abs(lags + 1.0) ** two_h - 2.0 * lags ** two_h + np.abs(lags - 1.0) ** two_h
    )
    return float(gamma) if gamma.ndim == 0 else gamma


def fgn_covariance_matrix(n: int, dt: float, hurst: HurstLike) -> np.ndarray:
    "the n x n Toeplitz covariance of n consecutive increments"
    if n < 1:
        raise DomainError(f"need at least one increment got n={n}")
    return scipy.linalg.toeplitz(fgn_autocovariance(np.arange(n), dt, hurst))


def lattice_spacing(dt: float, hurst: HurstLike) -> float:
    """Power-of-two spacing the increments are rounded to. Sums of lattice
    values are exact in float64 while partial sums stay below 2^21 increment
    scales, which makes block summation (coarsen) associative.
    """
    scale = dt ** as_hurst(hurst).h
    return float(2.0 ** (np.floor(np.log2(scale)) - LATTICE_BITS))


def snap_to_lattice(values: np.ndarray, dt: float, hurst: HurstLike) -> np.ndarray:
    spacing = lattice_spacing(dt, hurst)
    return np.round(values / spacing) * spacing


@functools.lru_cache(maxsize=32)
def cholesky_factor(n: int, dt: float, h: float) -> np.ndarray:
    "lower Cholesky factor of the fGn covariance (cached, read-only)"
    cov = fgn_covariance_matrix(n, dt, h)
    factor, info = lapack.dpotrf(cov, lower=1, clean=1)
    if info > 0:
        raise NumericalDegeneracyError(pivot=info - 1, size=n)
    elif info < 0:
        raise UsageError(f"invalid argument {-info} to dpotrf")
    factor.setflags(write=False)
    log.debug(f"factored {n}x{n} fGn covariance for dt={dt} H={h}")
    return factor


def generate_cholesky(
    n: int, dt: float, hurst: HurstLike, seed: int, stream_id: int, allow_large: bool = False
) -> NoiseBlock:
    hurst = as_hurst(hurst)
    if n < 1:
        raise DomainError(f"need at least one increment got n={n}")
    if n > CHOLESKY_MAX_N and not allow_large:
        raise UsageError(
            f"Cholesky generation is O(n^3); n={n} exceeds {CHOLESKY_MAX_N}. Use davies-harte."
        )
    factor = cholesky_factor(int(n), float(dt), hurst.h)
    increments = factor @ standard_normals(seed, stream_id, n)
    return NoiseBlock(
        increments=snap_to_lattice(increments, dt, hurst),
        step=dt,
        hurst=hurst,
        stream_id=stream_id,
        seed=seed,
        method=GeneratorMethod.CHOLESKY,
    )


def circulant_first_row(n: int, dt: float, hurst: HurstLike, m: Optional[int] = None) -> np.ndarray:
    """first row of the size m circulant embedding of the n x n fGn
    covariance; m defaults to 2 * next_power_of_two(n)
    """
    m = m or 2 * next_power_of_two(n)
    half = m // 2
    gamma = fgn_autocovariance(np.arange(half + 1), dt, hurst)
    return np.concatenate([gamma, gamma[1:half][::-1]])


@functools.lru_cache(maxsize=32)
def _embedding_eigenvalues(n: int, dt: float, h: float, m: int) -> np.ndarray:
    eigenvalues = scipy.fft.fft(circulant_first_row(n, dt, h, m)).real
    tolerance = EIGENVALUE_TOLERANCE * float(eigenvalues.max())
    min_eigenvalue = float(eigenvalues.min())
    if min_eigenvalue < -tolerance:
        raise EmbeddingError(embedding_size=m, min_eigenvalue=min_eigenvalue, tolerance=tolerance)
    if min_eigenvalue < 0:
        log.debug(f"clamping {int((eigenvalues < 0).sum())} round-off negative eigenvalues for m={m}")
    clamped = np.where(eigenvalues < 0, 0.0, eigenvalues)
    clamped.setflags(write=False)
    return clamped


def davies_harte_eigenvalues(n: int, dt: float, hurst: HurstLike, m: Optional[int] = None) -> np.ndarray:
    """clamped circulant eigenvalues; on an embedding failure retries with
    a doubled embedding at most MAX_EMBEDDING_RETRIES times
    """
    if n < 1:
        raise DomainError(f"need at least one increment got n={n}")
    m = m or 2 * next_power_of_two(n)
    h = as_hurst(hurst).h
    for attempt in range(MAX_EMBEDDING_RETRIES + 1):
        try:
            return _embedding_eigenvalues(int(n), float(dt), h, int(m))
        except EmbeddingError as e:
            if attempt == MAX_EMBEDDING_RETRIES:
                raise
            log.warning(f"{e}; retrying")
            m *= 2
    raise AssertionError("unreachable")


def davies_harte_implied_covariance(n: int, dt: float, hurst: HurstLike) -> np.ndarray:
    """Covariance of the first n output coordinates implied by the clamped
    eigenvalue spectrum, reconstructed by transforming unit vectors (no
    sampling)
    """
    eigenvalues = davies_harte_eigenvalues(n, dt, hurst)
    m = len(eigenvalues)
    unit_vectors = np.eye(m)[:, :n]
    columns = scipy.fft.ifft(eigenvalues[:, None] * scipy.fft.fft(unit_vectors, axis=0), axis=0)
    return columns.real[:n, :n]


def generate_davies_harte(n: int, dt: float, hurst: HurstLike, seed: int, stream_id: int) -> NoiseBlock:
    hurst = as_hurst(hurst)
    eigenvalues = davies_harte_eigenvalues(n, dt, hurst)
    m = len(eigenvalues)
    normals = standard_normals(seed, stream_id, 2 * m)
    weights = np.sqrt(eigenvalues / m) * (normals[:m] + 1j * normals[m:])
    increments = scipy.fft.fft(weights).real[:n]
    return NoiseBlock(
        increments=snap_to_lattice(increments, dt, hurst),
        step=dt,
        hurst=hurst,
        stream_id=stream_id,
        seed=seed,
        method=GeneratorMethod.DAVIES_HARTE,
    )


GENERATORS = {
    GeneratorMethod.CHOLESKY: generate_cholesky,
    GeneratorMethod.DAVIES_HARTE: generate_davies_harte,
}


def default_method(n: int) -> GeneratorMethod:
    return GeneratorMethod.CHOLESKY if n <= CHOLESKY_MAX_N else GeneratorMethod.DAVIES_HARTE


def generate(
    n: int,
    dt: float,
    hurst: HurstLike,
    seed: int,
    stream_id: int,
    method: Optional[GeneratorMethod] = None,
) -> NoiseBlock:
    method = method or default_method(n)
    return GENERATORS[method](n, dt, hurst, seed, stream_id)


def generate_streams(
    n: int,
    dt: float,
    hurst: HurstLike,
    seed: int,
    stream_ids: Iterable[int],
    method: Optional[GeneratorMethod] = None,
    threads: int = 1,
) -> List[NoiseBlock]:
    """generates one block per stream id; output order follows stream_ids
    and does not depend on threads
    """
    hurst = as_hurst(hurst)
    stream_ids = list(stream_ids)
    method = method or default_method(n)
    # warm the per-(n, dt, H) caches once before fanning out
    if method == GeneratorMethod.DAVIES_HARTE:
        davies_harte_eigenvalues(n, dt, hurst)
    gen = functools.partial(generate, n, dt, hurst, seed, method=method)
    if threads <= 1 or len(stream_ids) < 2:
        return [gen(stream_id=i) for i in stream_ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: gen(stream_id=i), stream_ids))


def coarsen(block: NoiseBlock, factor: int) -> NoiseBlock:
    """sums consecutive groups of factor increments: the same fBm path
    observed on a grid with step block.step * factor
    """
    if factor < 1 or len(block) % factor != 0:
        raise UsageError(f"coarsening factor {factor} does not divide block length {len(block)}")
    if factor == 1:
        return block
    return NoiseBlock(
        increments=block.increments.reshape(-1, factor).sum(axis=1),
        step=block.step * factor,
        hurst=block.hurst,
        stream_id=block.stream_id,
        seed=block.seed,
        method=block.method,
    )


def path_from_increments(block: Union[NoiseBlock, Sequence[float], np.ndarray]) -> np.ndarray:
    "B_0 = 0 followed by the running sums; length n + 1"
    increments = block.increments if isinstance(block, NoiseBlock) else np.asarray(block, dtype=np.float64)
    return np.concatenate([[0.0], np.cumsum(increments)])


def normalized_increment_moments(
    blocks: Sequence[NoiseBlock], lags: Sequence[int], p: float
) -> Dict[int, float]:
    """Monte Carlo E|B_{t+L dt} - B_t|^p / (L dt)^{pH} over all windows of
    all blocks, for each lag L (in steps). Bounded and roughly constant for
    fBm.
    """
    if not blocks:
        raise UsageError("need at least one noise block")
    dt, h = blocks[0].step, blocks[0].hurst.h
    paths = np.stack([path_from_increments(b) for b in blocks])
    moments = {}
    for lag in lags:
        if not (0 < lag < paths.shape[1]):
            raise UsageError(f"lag {lag} outside 1..{paths.shape[1] - 1}")
        diffs = paths[:, lag:] - paths[:, :-lag]
        moments[int(lag)] = float(np.mean(np.abs(diffs) ** p) / (lag * dt) ** (p * h))
    return moments
