"""Similarity graph over local models and its spectral decomposition.

The graph is fully connected with cosine-similarity edge weights. Its
Laplacian is factored symmetrically into an orthogonal basis that transforms
stacked model vectors to and from the spectral domain. A deterministic sign
convention removes the factorization's column-sign ambiguity so that equal
Laplacians always yield the identical basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateInputError, NumericError

SYMMETRY_TOL = 1e-10


def _as_model_matrix(models) -> np.ndarray:
    stacked = np.ascontiguousarray(models, dtype=np.float64)
    if stacked.ndim != 2:
        raise ContractError(f"expected a stack of model vectors, got shape {stacked.shape}")
    return stacked


def _check_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"{name} must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=SYMMETRY_TOL, rtol=0.0):
        raise ContractError(f"{name} is not symmetric within {SYMMETRY_TOL}")
    return a


def cosine_adjacency(models) -> np.ndarray:
    """Pairwise cosine similarities of the given model vectors (J x J).

    Symmetric with unit diagonal; entries clipped into [-1, 1]. Raises for
    fewer than two models or any zero-norm model.
    """
    stacked = _as_model_matrix(models)
    if stacked.shape[0] < 2:
        raise ContractError(f"need at least 2 models, got {stacked.shape[0]}")
    norms = np.linalg.norm(stacked, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise DegenerateInputError(f"model {zero[0]} has zero norm")
    unit = stacked / norms[:, None]
    adj = unit @ unit.T
    adj = np.clip((adj + adj.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(adj, 1.0)
    return adj


def laplacian(adjacency: np.ndarray, mode: str = "degree") -> np.ndarray:
    """Graph Laplacian of a symmetric adjacency matrix.

    ``degree`` (default) subtracts the adjacency from the diagonal matrix of
    row sums, so every row sums to zero. ``elementwise`` uses the adjacency's
    own diagonal instead, preserving the literal reading of the construction.
    """
    adjacency = _check_symmetric(adjacency, "adjacency")
    if mode == "degree":
        diag = adjacency.sum(axis=1)
    elif mode == "elementwise":
        diag = np.diag(adjacency).copy()
    else:
        raise ContractError(f"unknown laplacian mode {mode!r}")
    lap = np.diag(diag) - adjacency
    return (lap + lap.T) / 2.0


@dataclass(frozen=True)
class SpectralBasis:
    """Orthogonal transform basis with the Laplacian's spectrum.

    ``vectors`` holds the basis columns, ``sigma`` the spectrum magnitudes
    sorted non-increasing, and ``signs`` the original eigenvalue signs so
    ``vectors @ diag(sigma * signs) @ vectors.T`` reconstructs the operator.
    """

    vectors: np.ndarray  # (J, J) orthogonal
    sigma: np.ndarray  # (J,) non-increasing, >= 0
    signs: np.ndarray  # (J,) in {-1, +1}

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def signed_spectrum(self) -> np.ndarray:
        return self.sigma * self.signs

    def reconstruct(self) -> np.ndarray:
        """The operator this basis factors: B diag(sigma * signs) B^T."""
        return (self.vectors * self.signed_spectrum) @ self.vectors.T


def _apply_sign_convention(vectors: np.ndarray) -> np.ndarray:
    # Make the largest-magnitude entry of each column positive; exact-magnitude
    # ties resolve to the lowest row index, which argmax picks first.
    flips = np.ones(vectors.shape[1])
    for k in range(vectors.shape[1]):
        lead = np.argmax(np.abs(vectors[:, k]))
        if vectors[lead, k] < 0:
            flips[k] = -1.0
    return vectors * flips


def spectral_basis(lap: np.ndarray) -> SpectralBasis:
    """Factor a symmetric Laplacian into an orthogonal basis and spectrum.

    Uses the symmetric eigendecomposition; magnitudes are sorted
    non-increasing and eigenvalue signs kept separately so reconstruction is
    exact even for indefinite operators. An exactly zero operator yields the
    identity basis. Deterministic for identical inputs.
    """
    lap = _check_symmetric(lap, "laplacian")
    size = lap.shape[0]
    if np.max(np.abs(lap)) == 0.0:
        return SpectralBasis(np.eye(size), np.zeros(size), np.ones(size))
    try:
        values, vectors = np.linalg.eigh((lap + lap.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(-np.abs(values), kind="stable")
    values = values[order]
    vectors = _apply_sign_convention(vectors[:, order])
    signs = np.where(values < 0.0, -1.0, 1.0)
    return SpectralBasis(vectors, np.abs(values), signs)


def forward_gft(basis: SpectralBasis, features: np.ndarray) -> np.ndarray:
    """Spectral features S = B^T F of stacked model rows F."""
    features = _as_model_matrix(features)
    if features.shape[0] != basis.size:
        raise ContractError(
            f"basis of size {basis.size} cannot transform {features.shape[0]} rows"
        )
    return basis.vectors.T @ features


def inverse_gft(basis: SpectralBasis, spectral: np.ndarray) -> np.ndarray:
    """Reassembled feature rows B S from spectral features S."""
    spectral = _as_model_matrix(spectral)
    if spectral.shape[0] != basis.size:
        raise ContractError(
            f"basis of size {basis.size} cannot invert {spectral.shape[0]} rows"
        )
    return basis.vectors @ spectral
