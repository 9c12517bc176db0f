"""Boundary functions ``g(u; w)``: a quadratic polynomial and a one hidden
layer tanh network.

Both parameter classes are immutable, evaluate on a single point or an
(n, m) array of points, and expose a flat parameter vector so that the
optimizers can treat them uniformly. The points with ``g <= 0`` form
side 1, the rest side 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import CorruptResultFile, DimensionMismatch, InputError

__all__ = [
    "QPParams",
    "NNParams",
    "BoundaryParams",
    "FAMILIES",
    "qp_eval",
    "qp_grad_params",
    "nn_eval",
    "nn_grad_params",
    "init_params",
    "params_from_vector",
    "params_from_dict",
    "n_params",
]

FAMILIES = ("qp", "nn")
DEFAULT_HIDDEN = 32


def _as_points(u, m: int) -> tuple[np.ndarray, bool]:
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    U = u[None, :] if single else u
    if U.ndim != 2 or U.shape[1] != m:
        raise DimensionMismatch(f"boundary has dimension {m}, got input of shape {u.shape}")
    return U, single


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QPParams:
    """Quadratic boundary ``u'Au + b'u + c`` with symmetric ``A``.

    ``A`` is symmetrized on construction. The flat vector holds the upper
    triangle of ``A`` (row-major), then ``b``, then ``c``.
    """

    A: np.ndarray
    b: np.ndarray
    c: float

    family = "qp"

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape != (b.size, b.size):
            raise DimensionMismatch(f"A has shape {A.shape} but b has {b.size} entries")
        object.__setattr__(self, "A", _readonly((A + A.T) / 2))
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "c", float(self.c))
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b)) and np.isfinite(self.c)):
            raise InputError("QP parameters must be finite")

    @property
    def m(self) -> int:
        return self.b.size

    @classmethod
    def from_conic(cls, a, b, c, d, e, f) -> "QPParams":
        """Two-dimensional form ``a x^2 + b xy + c y^2 + d x + e y + f``."""
        return cls([[a, b / 2], [b / 2, c]], [d, e], f)

    def to_conic(self) -> tuple[float, ...]:
        if self.m != 2:
            raise DimensionMismatch("conic coefficients only exist for m = 2")
        A = self.A
        return (A[0, 0], 2 * A[0, 1], A[1, 1], self.b[0], self.b[1], self.c)

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius=1.0) -> "QPParams":
        """Sphere ``|u - center|^2 - radius^2``; negative inside."""
        center = np.asarray(center, dtype=float)
        m = center.size
        return cls(np.eye(m), -2 * center, float(center @ center - radius**2))

    def value(self, u) -> np.ndarray | float:
        U, single = _as_points(u, self.m)
        g = np.einsum("ij,jk,ik->i", U, self.A, U) + U @ self.b + self.c
        return float(g[0]) if single else g

    def jacobian(self, u) -> np.ndarray:
        """d g / d(flat params), shape (n, n_params) or (n_params,)."""
        U, single = _as_points(u, self.m)
        iu, ju = np.triu_indices(self.m)
        quad = U[:, iu] * U[:, ju]
        quad[:, iu != ju] *= 2
        J = np.hstack([quad, U, np.ones((U.shape[0], 1))])
        return J[0] if single else J

    def value_and_jacobian(self, U) -> tuple[np.ndarray, np.ndarray]:
        return self.value(U), self.jacobian(U)

    def to_vector(self) -> np.ndarray:
        iu, ju = np.triu_indices(self.m)
        return np.concatenate([self.A[iu, ju], self.b, [self.c]])

    @classmethod
    def from_vector(cls, vec, m: int) -> "QPParams":
        vec = np.asarray(vec, dtype=float)
        k = m * (m + 1) // 2
        if vec.size != k + m + 1:
            raise DimensionMismatch(f"QP with m={m} needs {k + m + 1} parameters, got {vec.size}")
        A = np.zeros((m, m))
        iu, ju = np.triu_indices(m)
        A[iu, ju] = vec[:k]
        A[ju, iu] = vec[:k]
        return cls(A, vec[k : k + m], vec[-1])

    def scaled(self, factor: float) -> "QPParams":
        return QPParams(self.A * factor, self.b * factor, self.c * factor)

    def negated(self) -> "QPParams":
        return self.scaled(-1.0)

    def to_dict(self) -> dict:
        iu, ju = np.triu_indices(self.m)
        return {
            "family": "qp",
            "dim": self.m,
            "A_upper": self.A[iu, ju].tolist(),
            "b": self.b.tolist(),
            "c": self.c,
        }


@dataclass(frozen=True, eq=False)
class NNParams:
    """Tanh network ``w2' tanh(W1 u + b1) + b2`` with ``H`` hidden units.

    Flat layout: ``W1`` (row-major, H x m), ``b1``, ``w2``, ``b2``.
    """

    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    family = "nn"

    def __post_init__(self):
        W1 = np.atleast_2d(np.asarray(self.W1, dtype=float))
        H = W1.shape[0]
        b1 = np.atleast_1d(np.asarray(self.b1, dtype=float))
        w2 = np.atleast_1d(np.asarray(self.w2, dtype=float))
        if H < 1 or b1.shape != (H,) or w2.shape != (H,):
            raise DimensionMismatch(
                f"inconsistent network shapes W1={W1.shape}, b1={b1.shape}, w2={w2.shape}"
            )
        object.__setattr__(self, "W1", _readonly(W1))
        object.__setattr__(self, "b1", _readonly(b1))
        object.__setattr__(self, "w2", _readonly(w2))
        object.__setattr__(self, "b2", float(self.b2))
        if not all(np.all(np.isfinite(a)) for a in (self.W1, self.b1, self.w2, [self.b2])):
            raise InputError("network parameters must be finite")

    @property
    def m(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    def value(self, u) -> np.ndarray | float:
        U, single = _as_points(u, self.m)
        g = np.tanh(U @ self.W1.T + self.b1) @ self.w2 + self.b2
        return float(g[0]) if single else g

    def value_and_jacobian(self, u) -> tuple[np.ndarray, np.ndarray]:
        U, single = _as_points(u, self.m)
        n, H = U.shape[0], self.hidden
        act = np.tanh(U @ self.W1.T + self.b1)
        g = act @ self.w2 + self.b2
        # d g / d pre-activation
        dpre = (1.0 - act**2) * self.w2
        dW1 = (dpre[:, :, None] * U[:, None, :]).reshape(n, H * self.m)
        J = np.hstack([dW1, dpre, act, np.ones((n, 1))])
        if single:
            return float(g[0]), J[0]
        return g, J

    def jacobian(self, u) -> np.ndarray:
        return self.value_and_jacobian(u)[1]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def from_vector(cls, vec, m: int, hidden: int = DEFAULT_HIDDEN) -> "NNParams":
        vec = np.asarray(vec, dtype=float)
        H = hidden
        if vec.size != H * m + 2 * H + 1:
            raise DimensionMismatch(
                f"network with m={m}, H={H} needs {H * m + 2 * H + 1} parameters, got {vec.size}"
            )
        k = H * m
        return cls(vec[:k].reshape(H, m), vec[k : k + H], vec[k + H : k + 2 * H], vec[-1])

    def scaled(self, factor: float) -> "NNParams":
        return NNParams(self.W1, self.b1, self.w2 * factor, self.b2 * factor)

    def negated(self) -> "NNParams":
        return self.scaled(-1.0)

    def to_dict(self) -> dict:
        return {
            "family": "nn",
            "dim": self.m,
            "hidden": self.hidden,
            "W1": self.W1.ravel().tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2,
        }


BoundaryParams = Union[QPParams, NNParams]


def qp_eval(p: QPParams, u):
    return p.value(u)


def qp_grad_params(p: QPParams, u) -> np.ndarray:
    return p.jacobian(u)


def nn_eval(p: NNParams, u):
    return p.value(u)


def nn_grad_params(p: NNParams, u) -> np.ndarray:
    return p.jacobian(u)


def n_params(family: str, m: int, hidden: int = DEFAULT_HIDDEN) -> int:
    if family == "qp":
        return m * (m + 1) // 2 + m + 1
    if family == "nn":
        return hidden * m + 2 * hidden + 1
    raise InputError(f"unknown boundary family {family!r}; expected one of {FAMILIES}")


def params_from_vector(family: str, vec, m: int, hidden: int = DEFAULT_HIDDEN) -> BoundaryParams:
    if family == "qp":
        return QPParams.from_vector(vec, m)
    if family == "nn":
        return NNParams.from_vector(vec, m, hidden)
    raise InputError(f"unknown boundary family {family!r}; expected one of {FAMILIES}")


def params_from_dict(d: dict) -> BoundaryParams:
    try:
        family, m = d["family"], int(d["dim"])
        if family == "qp":
            vec = list(d["A_upper"]) + list(d["b"]) + [d["c"]]
            return QPParams.from_vector(vec, m)
        if family == "nn":
            vec = list(d["W1"]) + list(d["b1"]) + list(d["w2"]) + [d["b2"]]
            return NNParams.from_vector(vec, m, int(d["hidden"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptResultFile(f"malformed boundary parameters: {exc}") from exc
    raise CorruptResultFile(f"unknown boundary family {family!r}")


def init_params(
    family: str,
    m: int,
    hidden: int = DEFAULT_HIDDEN,
    strategy: str = "axis-lines",
    rng=None,
    index: int = 0,
) -> BoundaryParams:
    """Starting parameters for one optimizer restart.

    QP ``"axis-lines"``: the first ``2m`` indices give the hyperplanes
    ``+-u_k = 0`` through the origin (A = 0, c = 0); later indices use a
    random unit normal ``b``.
    QP ``"random"``: every entry ~ N(0, 0.5^2).
    NN: weights ~ N(0, 1/fan_in), ``b2 = 0``.
    """
    rng = np.random.default_rng(rng)
    if family == "qp":
        if strategy == "axis-lines":
            b = np.zeros(m)
            if index < 2 * m:
                b[index // 2] = 1.0 if index % 2 == 0 else -1.0
            else:
                b = rng.normal(size=m)
                b /= np.linalg.norm(b)
            return QPParams(np.zeros((m, m)), b, 0.0)
        if strategy == "random":
            return QPParams.from_vector(rng.normal(0.0, 0.5, n_params("qp", m)), m)
        raise InputError(f"unknown init strategy {strategy!r}")
    if family == "nn":
        W1 = rng.normal(0.0, 1.0 / np.sqrt(m), (hidden, m))
        b1 = rng.normal(0.0, 1.0 / np.sqrt(m), hidden)
        w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), hidden)
        return NNParams(W1, b1, w2, 0.0)
    raise InputError(f"unknown boundary family {family!r}; expected one of {FAMILIES}")
