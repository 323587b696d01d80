"""Multivariate Gaussians in mean-covariance or mean-precision form.

A :class:`Gaussian` represents a possibly unnormalized Gaussian function

    f(x) = exp(log_weight) * N(x | mean, V)

so ``log_weight`` is the log of its total mass. Improper messages (singular
precision) are allowed in precision form; they are normalized over the range
of the precision, i.e. with ``(2 pi)^(-r/2) pdet(W)^(1/2)`` for rank ``r``.
Degenerate distributions (singular covariance) are allowed in covariance form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))

# eigenvalues below RANK_RTOL * max eigenvalue count as zero
RANK_RTOL = 1e-12
PSD_RTOL = 1e-10


class SingularGaussianError(np.linalg.LinAlgError):
    """Raised when an operation needs an inverse that does not exist."""


class DimensionError(ValueError):
    """Raised on non-conforming matrix or vector shapes."""


@dataclass(frozen=True)
class MatrixDims:
    n_x: int
    n_u: int
    n_y: int

    def __post_init__(self):
        for name in ("n_x", "n_u", "n_y"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DimensionError(f"{name} must be a positive integer, got {value!r}")


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return (M + M.T) / 2.0


def is_symmetric(M, rtol=1e-10) -> bool:
    M = np.asarray(M, dtype=float)
    scale = max(np.abs(M).max(initial=0.0), 1.0)
    return bool(np.abs(M - M.T).max(initial=0.0) <= rtol * scale)


def is_psd(M, rtol=PSD_RTOL) -> bool:
    """Eigenvalues >= -rtol * ||M||_2."""
    M = symmetrize(M)
    if M.size == 0:
        return True
    eig = np.linalg.eigvalsh(M)
    norm = np.abs(eig).max()
    return bool(eig.min() >= -rtol * norm)


def is_pd(M) -> bool:
    try:
        np.linalg.cholesky(symmetrize(M))
    except np.linalg.LinAlgError:
        return False
    return True


def _check_square(M, n, name):
    if M.shape != (n, n):
        raise DimensionError(f"{name} must be {n}x{n}, got {M.shape}")


def _range_eig(W):
    """Eigen-decomposition of a symmetric PSD matrix restricted to its range."""
    s, U = np.linalg.eigh(W)
    smax = s.max(initial=0.0)
    mask = s > RANK_RTOL * smax if smax > 0 else np.zeros_like(s, dtype=bool)
    return s[mask], U[:, mask]


class Gaussian:
    """Gaussian with an authoritative covariance or precision parameterization.

    Exactly one of ``cov`` and ``prec`` must be passed; the other is derived on
    first access and cached.
    """

    def __init__(self, mean, cov=None, prec=None, log_weight=0.0):
        mean = np.atleast_1d(np.asarray(mean, dtype=float)).copy()
        if mean.ndim != 1:
            raise DimensionError(f"mean must be a vector, got shape {mean.shape}")
        if (cov is None) == (prec is None):
            raise ValueError("pass exactly one of cov= or prec=")
        n = mean.shape[0]
        if cov is not None:
            self.form = "cov"
            M = symmetrize(np.atleast_2d(cov))
            _check_square(M, n, "cov")
            self.__dict__["cov"] = M
        else:
            self.form = "prec"
            M = symmetrize(np.atleast_2d(prec))
            _check_square(M, n, "prec")
            self.__dict__["prec"] = M
        M.setflags(write=False)
        mean.setflags(write=False)
        self.mean = mean
        self.log_weight = float(log_weight)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @cached_property
    def cov(self) -> np.ndarray:
        V = _inverse(self.prec, "precision")
        V.setflags(write=False)
        return V

    @cached_property
    def prec(self) -> np.ndarray:
        W = _inverse(self.cov, "covariance")
        W.setflags(write=False)
        return W

    @property
    def is_proper(self) -> bool:
        M = self.__dict__["cov" if self.form == "cov" else "prec"]
        return is_pd(M)

    def normalized(self) -> "Gaussian":
        return self.with_log_weight(0.0)

    def with_log_weight(self, log_weight) -> "Gaussian":
        if self.form == "cov":
            return Gaussian(self.mean, cov=self.cov, log_weight=log_weight)
        return Gaussian(self.mean, prec=self.prec, log_weight=log_weight)

    def log_density(self, x) -> float:
        """log f(x); needs a canonical form (precision, or invertible covariance)."""
        W, h, g = self.canonical()
        x = np.asarray(x, dtype=float)
        return float(g - 0.5 * x @ W @ x + h @ x)

    def canonical(self):
        """Return ``(W, h, g)`` with ``log f(x) = g - x'Wx/2 + h'x``."""
        W = self.prec
        s, _ = _range_eig(W)
        m = self.mean
        g = (
            self.log_weight
            - 0.5 * len(s) * LOG_2PI
            + 0.5 * float(np.sum(np.log(s)))
            - 0.5 * float(m @ W @ m)
        )
        return W, W @ m, g

    @classmethod
    def from_canonical(cls, W, h, g) -> "Gaussian":
        W = symmetrize(W)
        h = np.asarray(h, dtype=float)
        s, U = _range_eig(W)
        m = U @ ((U.T @ h) / s)
        log_weight = g + 0.5 * len(s) * LOG_2PI - 0.5 * float(np.sum(np.log(s))) + 0.5 * float(h @ m)
        return cls(m, prec=W, log_weight=log_weight)

    def __repr__(self):
        M = self.__dict__["cov" if self.form == "cov" else "prec"]
        return (
            f"Gaussian(mean={self.mean!r}, {self.form}={M!r}, "
            f"log_weight={self.log_weight!r})"
        )


def _inverse(M, what):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SingularGaussianError(f"{what} matrix is singular or not PD") from exc
    Linv = np.linalg.solve(L, np.eye(M.shape[0]))
    return symmetrize(Linv.T @ Linv)


def _conform(a: Gaussian, b: Gaussian):
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def multiply(a: Gaussian, b: Gaussian, allow_improper=False) -> Gaussian:
    """Pointwise product of two Gaussian functions (equality-node rule).

    The result is in precision form with ``W = W_a + W_b`` and
    ``W m = W_a m_a + W_b m_b``; its log weight picks up the product
    normalizer. Raises :class:`SingularGaussianError` if the product
    precision is singular, unless ``allow_improper`` is set.
    """
    _conform(a, b)
    Wa, ha, ga = a.canonical()
    Wb, hb, gb = b.canonical()
    W = Wa + Wb
    if not allow_improper and not is_pd(W):
        raise SingularGaussianError("product of Gaussians has singular precision")
    return Gaussian.from_canonical(W, ha + hb, ga + gb)


def affine_push(g: Gaussian, M, offset=None) -> Gaussian:
    """Distribution of ``M x + offset`` for ``x ~ g``; mass is preserved."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != g.dim:
        raise DimensionError(f"M has {M.shape[1]} columns, Gaussian has dim {g.dim}")
    mean = M @ g.mean
    if offset is not None:
        offset = np.atleast_1d(np.asarray(offset, dtype=float))
        if offset.shape != mean.shape:
            raise DimensionError(f"offset shape {offset.shape} != {mean.shape}")
        mean = mean + offset
    return Gaussian(mean, cov=M @ g.cov @ M.T, log_weight=g.log_weight)


def affine_pull(g: Gaussian, M) -> Gaussian:
    """The function ``x -> g(M x)``, in precision form.

    Precision becomes ``M' W M`` and the information vector ``M' W m``.
    This is the backward rule through a gain node; a likelihood
    ``N(y | C x, V)`` is ``affine_pull(Gaussian(y, cov=V), C)``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != g.dim:
        raise DimensionError(f"M has {M.shape[0]} rows, Gaussian has dim {g.dim}")
    W, h, c = g.canonical()
    return Gaussian.from_canonical(M.T @ W @ M, M.T @ h, c)


def convolve(g: Gaussian, noise_cov, offset=None) -> Gaussian:
    """Add independent Gaussian noise ``N(offset, noise_cov)`` to ``g``.

    Covers the noise node and the backward rule through an addition node.
    Precision-form inputs stay in precision form via
    ``W' = (I + W V)^-1 W``, which never inverts ``W``.
    """
    Vn = symmetrize(np.atleast_2d(noise_cov))
    _check_square(Vn, g.dim, "noise_cov")
    mean = g.mean if offset is None else g.mean + np.asarray(offset, dtype=float)
    if g.form == "cov":
        return Gaussian(mean, cov=g.cov + Vn, log_weight=g.log_weight)
    W = g.prec
    I = np.eye(g.dim)
    Wn = symmetrize(np.linalg.solve(I + W @ Vn, W))
    s, _ = _range_eig(W)
    sn, _ = _range_eig(Wn)
    _, logdet = np.linalg.slogdet(I + W @ Vn)
    log_weight = (
        g.log_weight
        + 0.5 * float(np.sum(np.log(s)))
        - 0.5 * logdet
        - 0.5 * float(np.sum(np.log(sn)))
    )
    return Gaussian(mean, prec=Wn, log_weight=log_weight)


def log_partition(g: Gaussian) -> float:
    """Log of the total mass of ``g``.

    Requires a full-rank covariance; improper or degenerate inputs raise.
    """
    if not g.is_proper:
        raise SingularGaussianError("log partition needs a full-rank covariance")
    return g.log_weight


def woodbury_inverse(W, U, C, V):
    """``(W + U C V)^-1`` via the Woodbury identity."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n, k = U.shape
    if W.shape != (n, n) or C.shape != (k, k) or V.shape != (k, n):
        raise DimensionError(
            f"woodbury shapes W{W.shape} U{U.shape} C{C.shape} V{V.shape} do not conform"
        )
    try:
        Winv = np.linalg.inv(W)
        Cinv = np.linalg.inv(C)
        inner = Cinv + V @ Winv @ U
        return Winv - Winv @ U @ np.linalg.solve(inner, V @ Winv)
    except np.linalg.LinAlgError as exc:
        raise SingularGaussianError("singular term in Woodbury inverse") from exc


def searle_combine(Pa, Pb):
    """``(Pa^-1 + Pb^-1)^-1`` computed as ``Pa (Pa + Pb)^-1 Pb``.

    Only ``Pa + Pb`` has to be invertible, so either input may be singular.
    """
    Pa = symmetrize(np.atleast_2d(Pa))
    Pb = symmetrize(np.atleast_2d(Pb))
    if Pa.shape != Pb.shape:
        raise DimensionError(f"shape mismatch {Pa.shape} vs {Pb.shape}")
    try:
        return symmetrize(Pa @ np.linalg.solve(Pa + Pb, Pb))
    except np.linalg.LinAlgError as exc:
        raise SingularGaussianError("Pa + Pb is singular") from exc
