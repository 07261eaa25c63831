"""Dense three-way tensors and the matrix algebra consumed by the CP solver.

Index convention: an entry is addressed as (i, j, k) over axes
(sender, receiver, time slot).  Unfolding a tensor along a mode orders the
remaining axes with the lower-numbered one varying fastest, which makes the
unfolding commute with mode products: unfold(t x_n M, n) == M @ unfold(t, n).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor3",
    "frobenius_norm",
    "matricize",
    "refold",
    "n_mode_product",
    "kronecker",
    "khatri_rao",
    "dump_sparse_csv",
    "load_sparse_csv",
]


class Tensor3:
    """Dense (I, J, K) array of 64-bit floats.

    Instances are treated as immutable values: every operation returns a new
    tensor and never mutates its inputs, so sharing across threads is safe.
    Amount tensors (what ingest produces and the CP solver consumes) are
    non-negative; use :meth:`require_nonnegative` where that contract applies.
    Mode products with general matrices may leave the non-negative cone, so
    the constructor only enforces shape and finiteness.
    """

    __slots__ = ("data",)

    def __init__(self, data, copy: bool = True):
        arr = np.array(data, dtype=np.float64, copy=copy)
        if arr.ndim != 3:
            raise ValueError(f"expected a 3-way array, got {arr.ndim} dims")
        if min(arr.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("tensor entries must be finite")
        arr.flags.writeable = False
        self.data = arr

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def is_nonnegative(self) -> bool:
        return bool((self.data >= 0.0).all())

    def require_nonnegative(self) -> "Tensor3":
        if not self.is_nonnegative():
            raise ValueError("tensor entries must be non-negative")
        return self

    @classmethod
    def zeros(cls, dims) -> "Tensor3":
        return cls(np.zeros(dims, dtype=np.float64), copy=False)

    def __getitem__(self, key):
        return self.data[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor3):
            return NotImplemented
        return self.dims == other.dims and bool((self.data == other.data).all())

    def __repr__(self) -> str:
        return f"Tensor3(dims={self.dims})"


def frobenius_norm(t: Tensor3) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(t.data.ravel()))


def _check_mode(mode: int) -> None:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def matricize(t: Tensor3, mode: int) -> np.ndarray:
    """Unfold along `mode` (1-based) into a matrix.

    Mode 1 gives I x (J*K), mode 2 gives J x (I*K), mode 3 gives K x (I*J).
    Column order puts the lower-numbered remaining axis fastest, e.g. the
    mode-1 column for (j, k) is j + k*J.
    """
    _check_mode(mode)
    moved = np.moveaxis(t.data, mode - 1, 0)
    return np.asarray(moved.reshape(moved.shape[0], -1, order="F"))


def refold(m: np.ndarray, mode: int, dims) -> Tensor3:
    """Inverse of :func:`matricize` for the given original dims."""
    _check_mode(mode)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError("dims must have three components")
    moved_shape = (dims[mode - 1],) + tuple(d for i, d in enumerate(dims) if i != mode - 1)
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (moved_shape[0], moved_shape[1] * moved_shape[2]):
        raise ValueError(f"matrix shape {m.shape} does not refold to dims {dims} along mode {mode}")
    arr = np.moveaxis(m.reshape(moved_shape, order="F"), 0, mode - 1)
    return Tensor3(np.ascontiguousarray(arr), copy=False)


_MODE_SUBSCRIPTS = {1: "ajk,ia->ijk", 2: "iak,ja->ijk", 3: "ija,ka->ijk"}


def n_mode_product(t: Tensor3, m: np.ndarray, mode: int) -> Tensor3:
    """Contract the mode-th axis of `t` with the columns of `m`.

    The mode-th dimension I_n becomes m.shape[0]; entry (.., j, ..) of the
    result is sum over i_n of x[.., i_n, ..] * m[j, i_n].
    """
    _check_mode(mode)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("m must be a matrix")
    if m.shape[1] != t.dims[mode - 1]:
        raise ValueError(
            f"m has {m.shape[1]} columns but mode {mode} of the tensor has size {t.dims[mode - 1]}"
        )
    out = np.einsum(_MODE_SUBSCRIPTS[mode], t.data, m)
    return Tensor3(np.ascontiguousarray(out), copy=False)


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product: blocks a[i, j] * b."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    return np.kron(a, b)


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    # (i, j, r) -> row i*J + j, matching per-column kron.
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def dump_sparse_csv(t: Tensor3, path, extra_comments=()) -> None:
    """Debug dump: one `i,j,k,value` line per nonzero, 0-based, C-order scan."""
    i, j, k = np.nonzero(t.data)
    vals = t.data[i, j, k]
    with open(path, "w", encoding="utf-8") as fh:
        for comment in extra_comments:
            fh.write(f"# {comment}\n")
        fh.write("# dims=%d,%d,%d\n" % t.dims)
        fh.write("i,j,k,value\n")
        for ii, jj, kk, v in zip(i, j, k, vals):
            fh.write(f"{ii},{jj},{kk},{float(v)!r}\n")


def load_sparse_csv(path) -> Tensor3:
    """Read a tensor written by :func:`dump_sparse_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        dims = None
        line = fh.readline()
        while line.startswith("#"):
            if line.startswith("# dims="):
                dims = tuple(int(x) for x in line.strip()[len("# dims=") :].split(","))
            line = fh.readline()
        if dims is None or len(dims) != 3:
            raise ValueError(f"{path}: missing or bad '# dims=' header")
        if line.strip() != "i,j,k,value":
            raise ValueError(f"{path}: unexpected column header {line.strip()!r}")
        data = np.zeros(dims, dtype=np.float64)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, j, k, v = line.split(",")
            data[int(i), int(j), int(k)] = float(v)
    return Tensor3(data, copy=False)
