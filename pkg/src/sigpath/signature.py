"""Exact truncated signatures of piecewise linear paths.

Each segment contributes the tensor exponential of its increment; the path
signature is the ordered product of the segment exponentials (Chen), which
equals the iterated Riemann-Stieltjes integrals of the interpolated path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import PiecewiseLinearPath
from .tensor import (
    GroupLikeTensor,
    TruncatedTensor,
    add,
    flatten_blocks,
    mul,
    mul_blocks,
    norm,
    scale,
    total_entries,
    unit,
    unit_blocks,
)
from .words import check_word, word_to_offset

__all__ = [
    "SignatureStream",
    "LinearFunctional",
    "segment_signature",
    "signature",
    "signature_stream",
    "stream_table",
    "reverse_check",
    "levy_area_functional",
]


def segment_exp_blocks(increment: np.ndarray, level: int):
    """Blocks of exp of a level-1 increment: level n is incr^(x n) / n!.

    `increment` may carry a batch prefix: shape (..., m).
    """
    increment = np.asarray(increment, dtype=float)
    m = increment.shape[-1]
    batch = increment.shape[:-1]
    blocks = [np.ones(batch + (1,))]
    for n in range(1, level + 1):
        nxt = np.einsum("...i,...j->...ij", blocks[-1], increment / n)
        blocks.append(nxt.reshape(batch + (m**n,)))
    return blocks


def segment_signature(increment, level: int) -> GroupLikeTensor:
    """Signature of a single line segment with the given increment."""
    if level < 0:
        raise ValueError("level must be >= 0")
    increment = np.atleast_1d(np.asarray(increment, dtype=float))
    return TruncatedTensor(increment.size, level, segment_exp_blocks(increment, level))


def signature(path: PiecewiseLinearPath, level: int) -> GroupLikeTensor:
    """Signature of the whole path on [0, T], truncated at `level`."""
    if level < 0:
        raise ValueError("level must be >= 0")
    cur = unit_blocks(path.dim, level)
    for k in range(path.n_segments):
        seg = segment_exp_blocks(path.values[k + 1] - path.values[k], level)
        cur = mul_blocks(cur, seg, path.dim)
    return TruncatedTensor(path.dim, level, cur)


def stream_table(values: np.ndarray, level: int, eval_idx=None) -> np.ndarray:
    """Signature stream of the piecewise linear path through `values`.

    values : (..., K, m) absolute breakpoint values, arbitrary batch prefix.
    eval_idx : increasing breakpoint indices at which rows are kept
        (default: all K breakpoints).

    Returns (..., len(eval_idx), D) with the D = total_entries(m, level)
    coefficients flattened level-major.  One Chen product per breakpoint;
    only the requested rows are stored.
    """
    values = np.asarray(values, dtype=float)
    n_pts, m = values.shape[-2], values.shape[-1]
    batch = values.shape[:-2]
    if eval_idx is None:
        eval_idx = np.arange(n_pts)
    eval_idx = np.asarray(eval_idx, dtype=int)
    if eval_idx.size and (
        (np.diff(eval_idx) <= 0).any()
        or eval_idx[0] < 0
        or eval_idx[-1] >= n_pts
    ):
        raise ValueError("eval_idx must be increasing breakpoint indices")
    width = total_entries(m, level)
    out = np.empty(batch + (eval_idx.size, width))
    keep = np.full(n_pts, -1, dtype=int)
    keep[eval_idx] = np.arange(eval_idx.size)

    cur = unit_blocks(m, level, batch)
    if keep[0] >= 0:
        out[..., keep[0], :] = flatten_blocks(cur)
    for k in range(n_pts - 1):
        incr = values[..., k + 1, :] - values[..., k, :]
        cur = mul_blocks(cur, segment_exp_blocks(incr, level), m)
        if keep[k + 1] >= 0:
            out[..., keep[k + 1], :] = flatten_blocks(cur)
    return out


@dataclass(frozen=True)
class SignatureStream:
    """Signatures on [0, t_k] for every breakpoint t_k of one path."""

    times: np.ndarray
    dim: int
    level: int
    tensors: list

    def __len__(self):
        return len(self.tensors)

    def terminal(self) -> GroupLikeTensor:
        return self.tensors[-1]


def signature_stream(path: PiecewiseLinearPath, level: int) -> SignatureStream:
    if level < 0:
        raise ValueError("level must be >= 0")
    table = stream_table(path.values, level)
    sizes = [path.dim**n for n in range(level + 1)]
    splits = np.cumsum(sizes)[:-1]
    tensors = [
        TruncatedTensor(path.dim, level, np.split(row, splits))
        for row in table
    ]
    return SignatureStream(path.times.copy(), path.dim, level, tensors)


@dataclass(frozen=True)
class LinearFunctional:
    """Sparse word -> coefficient map; acts on group-like tensors by the
    dot product against the addressed signature coordinates."""

    dim: int
    level: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for word, value in self.coeffs.items():
            word = tuple(int(l) for l in word)
            check_word(word, self.dim)
            if len(word) > self.level:
                raise ValueError(
                    f"word {word} longer than level {self.level}"
                )
            clean[word] = float(value)
        object.__setattr__(self, "coeffs", clean)

    def apply(self, g: GroupLikeTensor) -> float:
        if g.dim != self.dim:
            raise ValueError(f"dim mismatch: {g.dim} vs {self.dim}")
        if g.level < self.level:
            raise ValueError(
                f"tensor level {g.level} below functional level {self.level}"
            )
        return sum(c * g.coefficient(w) for w, c in self.coeffs.items())

    def coefficient_vector(self) -> np.ndarray:
        """Dense coefficients over all words of length <= level, level-major."""
        vec = np.zeros(total_entries(self.dim, self.level))
        starts = np.concatenate(
            [[0], np.cumsum([self.dim**n for n in range(self.level + 1)])]
        )
        for word, value in self.coeffs.items():
            n, off = word_to_offset(word, self.dim)
            vec[starts[n] + off] = value
        return vec

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "level": self.level,
            "coeffs": {
                ",".join(str(l) for l in w): c
                for w, c in sorted(self.coeffs.items())
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LinearFunctional":
        coeffs = {}
        for key, value in payload["coeffs"].items():
            word = tuple(int(l) for l in key.split(",")) if key else ()
            coeffs[word] = float(value)
        return cls(int(payload["dim"]), int(payload["level"]), coeffs)


def levy_area_functional(dim: int = 3, first: int = 1, second: int = 2) -> LinearFunctional:
    """Antisymmetric level-2 combination 0.5*(<e_(i,j)> - <e_(j,i)>)."""
    return LinearFunctional(
        dim, 2, {(first, second): 0.5, (second, first): -0.5}
    )


def reverse_check(path: PiecewiseLinearPath, level: int) -> float:
    """Norm of sig(path) (x) sig(reversed path) minus the unit tensor."""
    fwd = signature(path, level)
    bwd = signature(path.reversed(), level)
    residual = add(mul(fwd, bwd), scale(-1.0, unit(path.dim, level)))
    return norm(residual)
