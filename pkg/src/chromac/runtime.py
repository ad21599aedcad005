"""Reference interpreter for IR graphs, plus PNG and ``.cten`` tensor I/O.

Tensors are plain float64 numpy arrays. Elementwise ops broadcast the
smaller operand (see :func:`chromac.ir.broadcastable`); ``matmul`` contracts
the trailing two axes of its left operand against a ``[k, n]`` right operand;
``select(c, a, b)`` takes ``a`` where ``c >= 0`` and ``b`` elsewhere.
"""

from __future__ import annotations

import struct
from typing import Mapping

import numpy as np

from .errors import (
    InternalError,
    InvalidInputError,
    NonFiniteError,
    PowDomainError,
    TensorFormatError,
)
from .ir import IRGraph, IRNode

# negative pow bases this close to zero are rounding noise of an exact zero
POW_ZERO_TOL = 1e-12


def _pow(base: np.ndarray, exp: np.ndarray, node_id: int | None) -> np.ndarray:
    b, e = np.broadcast_arrays(base, exp)
    bad = (b < 0) & (e != np.round(e))
    if bad.any():
        tol = POW_ZERO_TOL * max(1.0, float(np.abs(b).max()))
        if np.any(b[bad] < -tol):
            worst = float(b[bad].min())
            raise PowDomainError(
                f"pow of negative base {worst:.6g} with non-integer exponent", node_id
            )
        b = np.where(bad, 0.0, b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.power(b, e)


def apply_op(op: str, args: list[np.ndarray], node_id: int | None = None) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if op == "add":
            return args[0] + args[1]
        if op == "sub":
            return args[0] - args[1]
        if op == "mul":
            return args[0] * args[1]
        if op == "div":
            return args[0] / args[1]
        if op == "pow":
            return _pow(args[0], args[1], node_id)
        if op == "matmul":
            return np.matmul(args[0], args[1])
        if op == "max":
            return np.maximum(args[0], args[1])
        if op == "min":
            return np.minimum(args[0], args[1])
        if op == "floor_mod":
            return np.mod(args[0], args[1])
        if op == "select":
            return np.where(args[0] >= 0, args[1], args[2])
    raise InternalError(f"no evaluation rule for op {op!r}")


def _check_input(node: IRNode, value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != node.shape:
        raise InvalidInputError(
            f"input {node.name!r} expects shape {list(node.shape)}, got {list(arr.shape)}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"input {node.name!r} contains non-finite values")
    if node.nonneg and np.any(arr < 0):
        raise InvalidInputError(f"input {node.name!r} must be nonnegative")
    return arr


def evaluate_nodes(g: IRGraph, inputs: Mapping[str, np.ndarray], only=None) -> dict[int, np.ndarray]:
    """Evaluate nodes in id order and return every computed value.

    ``only`` restricts evaluation to a set of node ids (operands must be
    included); by default everything reachable from an output is computed.
    """
    wanted = set(g.reachable()) if only is None else set(only)
    values: dict[int, np.ndarray] = {}
    for n in g.nodes:
        if n.id not in wanted:
            continue
        if n.op == "const":
            values[n.id] = n.value
            continue
        if n.op == "input":
            if n.name not in inputs:
                raise InvalidInputError(f"missing input {n.name!r}")
            values[n.id] = _check_input(n, inputs[n.name])
            continue
        out = apply_op(n.op, [values[o] for o in n.operands], n.id)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(f"{n.op} produced a non-finite value", n.id)
        if out.shape != n.shape:
            raise InternalError(
                f"node {n.id}: {n.op} produced shape {list(out.shape)}, annotated {list(n.shape)}"
            )
        values[n.id] = out
    return values


def evaluate(g: IRGraph, inputs: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Run a graph on named inputs; returns named outputs."""
    declared = {p.name for p in g.inputs}
    for name in inputs:
        if name not in declared:
            raise InvalidInputError(f"unknown input {name!r}")
    for p in g.inputs:
        if p.name not in inputs:
            raise InvalidInputError(f"missing input {p.name!r}")
    values = evaluate_nodes(g, inputs)
    return {p.name: values[p.node] for p in g.outputs}


# -- PNG -------------------------------------------------------------------


def load_png(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("RGB", "RGBA"):
                raise TensorFormatError(f"{path}: expected 8-bit RGB(A) PNG, got mode {im.mode}")
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except (OSError, UnidentifiedImageError) as e:
        raise TensorFormatError(f"cannot read image {path}: {e}") from None
    return arr


def save_png(path, t) -> None:
    from PIL import Image

    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise TensorFormatError(f"PNG output needs shape [H, W, 3], got {list(arr.shape)}")
    if not np.all(np.isfinite(arr)):
        raise TensorFormatError("cannot save non-finite values as PNG")
    pixels = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")


# -- .cten -----------------------------------------------------------------

CTEN_MAGIC = b"CTEN"
CTEN_VERSION = 1


def tensor_to_bytes(t) -> bytes:
    arr = np.asarray(t, dtype="<f8", order="C")
    head = CTEN_MAGIC + struct.pack("<II", CTEN_VERSION, arr.ndim)
    head += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + arr.tobytes()


def tensor_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < 12:
        raise TensorFormatError("truncated tensor header")
    if data[:4] != CTEN_MAGIC:
        raise TensorFormatError("bad magic, not a .cten tensor")
    version, rank = struct.unpack_from("<II", data, 4)
    if version != CTEN_VERSION:
        raise TensorFormatError(f"unsupported .cten version {version}")
    off = 12 + 8 * rank
    if len(data) < off:
        raise TensorFormatError("truncated tensor header")
    dims = struct.unpack_from(f"<{rank}Q", data, 12)
    count = int(np.prod(dims, dtype=np.int64))
    if len(data) < off + 8 * count:
        raise TensorFormatError(
            f"truncated payload: need {8 * count} bytes, have {len(data) - off}"
        )
    if len(data) > off + 8 * count:
        raise TensorFormatError("trailing bytes after tensor payload")
    arr = np.frombuffer(data, dtype="<f8", count=count, offset=off)
    return arr.astype(np.float64).reshape(dims)


def save_tensor(path, t) -> None:
    with open(path, "wb") as f:
        f.write(tensor_to_bytes(t))


def load_tensor(path) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise TensorFormatError(f"cannot read tensor {path}: {e}") from None
    return tensor_from_bytes(data)
