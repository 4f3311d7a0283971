"""Eigen-spectrum analysis and noise cleaning of correlation matrices.

The solver is a cyclic Jacobi sweep shared with the compiled kernels, so
results are bit-identical across backends. Eigenvalues come back in
descending order with a sign convention on the vectors, which makes the
decomposition deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import BinnedReturnPanel, CorrelationMatrix, _check_square
from .errors import EstimationWarning, NumericalError, ValidationError

# Convergence threshold on the off-diagonal Frobenius norm, and the sweep
# budget after which the solver gives up.
JACOBI_TOL = 1e-12
MAX_SWEEPS = 60


@dataclass(frozen=True)
class EigenSpectrum:
    """Descending eigenvalues and matching eigenvectors of one matrix.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``; each vector's
    largest-magnitude component is made positive. ``source_tag`` names
    the estimator that produced the matrix.
    """

    symbols: tuple[str, ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_tag: str

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.eigenvalues, dtype=np.float64)
        vecs = np.ascontiguousarray(self.eigenvectors, dtype=np.float64)
        n = len(self.symbols)
        if vals.shape != (n,) or vecs.shape != (n, n):
            raise ValidationError(
                f"spectrum shapes {vals.shape}, {vecs.shape} for {n} symbols"
            )
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)


def _generic_symbols(n: int) -> tuple[str, ...]:
    width = max(2, len(str(n - 1)))
    return tuple(f"V{i:0{width}d}" for i in range(n))


def eigendecompose(matrix: CorrelationMatrix | np.ndarray) -> EigenSpectrum:
    """Full eigen-decomposition of a symmetric matrix via Jacobi rotations.

    Accepts a correlation matrix, which must have no undefined entries,
    or a raw symmetric array. Raises ``NumericalError`` if the sweeps do
    not converge within the budget.
    """
    if isinstance(matrix, CorrelationMatrix):
        if np.isnan(matrix.values).any():
            raise ValidationError(
                "matrix has undefined entries, call drop_undefined() first"
            )
        symbols = matrix.symbols
        tag = matrix.estimator
        a = np.array(matrix.values, copy=True)
    else:
        a = np.asarray(matrix, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"matrix shape {a.shape} is not square")
        if np.isnan(a).any():
            raise ValidationError("matrix has NaN entries")
        a = _check_square(a, a.shape[0], "matrix")
        symbols = _generic_symbols(a.shape[0])
        tag = "matrix"
    n = a.shape[0]
    v = np.eye(n)
    sweeps, converged = kernels.jacobi_sweeps(a, v, JACOBI_TOL, MAX_SWEEPS)
    if not converged:
        raise NumericalError(
            f"eigen-solver did not converge in {sweeps} sweeps"
        )
    vals = np.diagonal(a).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = v[:, order]
    # fix each vector's sign by its largest-magnitude component
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[lead, np.arange(n)])
    signs[signs == 0.0] = 1.0
    vecs = vecs * signs
    return EigenSpectrum(symbols, vals, vecs, tag)


def market_mode_strength(spectrum: EigenSpectrum) -> float:
    """Fraction of total variance in the leading mode: lambda_1 / N."""
    if spectrum.n_assets == 0:
        raise ValidationError("empty spectrum")
    return float(spectrum.eigenvalues[0] / spectrum.n_assets)


def binwise_spectrum_series(panels: BinnedReturnPanel | list[CorrelationMatrix],
                            n_top: int = 7,
                            min_days: int = 2) -> np.ndarray:
    """Top eigenvalues over N for each bin, shape (n_bins, n_top).

    Accepts a binned panel, from which binwise correlations are built,
    or a prebuilt list of per-bin matrices. Matrices with undefined
    entries make their bin fail, as does a short panel; rows are padded
    with NaN when a matrix has fewer than ``n_top`` assets.
    """
    from .estimators import binwise_correlations

    if isinstance(panels, BinnedReturnPanel):
        mats = binwise_correlations(panels, min_days)
    else:
        mats = list(panels)
    if not mats:
        raise ValidationError("no bins to analyze")
    if n_top < 1:
        raise ValidationError(f"n_top must be >= 1, got {n_top}")
    out = np.full((len(mats), n_top), np.nan)
    for k, corr in enumerate(mats):
        spectrum = eigendecompose(corr)
        m = min(n_top, spectrum.n_assets)
        out[k, :m] = spectrum.eigenvalues[:m] / spectrum.n_assets
    return out


def mp_upper_edge(q: float) -> float:
    """Upper edge of the pure-noise eigenvalue band for aspect ratio q = N/T."""
    if q <= 0:
        raise ValidationError(f"aspect ratio must be positive, got {q}")
    return float((1.0 + np.sqrt(q)) ** 2)


def clean_spectrum(spectrum: EigenSpectrum, q: float) -> CorrelationMatrix:
    """Rebuild a correlation matrix with its noise-band eigenvalues flattened.

    Eigenvalues at or below the noise edge for aspect ratio ``q`` are
    replaced by their mean, which preserves the trace, and the matrix is
    reassembled and rescaled to an exact unit diagonal.
    """
    edge = mp_upper_edge(q)
    vals = spectrum.eigenvalues.copy()
    noise = vals <= edge
    if noise.all():
        warnings.warn(
            "every eigenvalue sits in the noise band, result is near-diagonal",
            EstimationWarning,
            stacklevel=2,
        )
    if noise.any():
        vals[noise] = vals[noise].mean()
    vecs = spectrum.eigenvectors
    rebuilt = (vecs * vals) @ vecs.T
    diag = np.diagonal(rebuilt)
    if np.any(diag <= 0.0):
        raise NumericalError("cleaned matrix lost a positive diagonal")
    scale = 1.0 / np.sqrt(diag)
    rebuilt = rebuilt * np.outer(scale, scale)
    rebuilt = 0.5 * (rebuilt + rebuilt.T)
    np.fill_diagonal(rebuilt, 1.0)
    tag = spectrum.source_tag
    if not tag.endswith("+cleaned"):
        tag = tag + "+cleaned"
    return CorrelationMatrix(spectrum.symbols, rebuilt, tag)
