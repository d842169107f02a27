"""Reverse-mode autodiff on float64 numpy arrays.

Every value is a `Tensor` wrapping an ndarray; ops build a DAG whose leaves
are inputs/parameters. `Tensor.backward()` walks the graph once in reverse
topological order and accumulates gradients. Images are NHWC, convolutions
use SAME padding (output spatial = ceil(in / stride)), and `deconv2d` is the
exact adjoint of the matching `conv2d`, so conv(deconv(h)) == h for every
spatial size h and stride.

The op set is deliberately small: what the fused-autoencoder losses need and
nothing else. No broadcasting beyond python scalars; shape mismatches raise
immediately with both shapes in the message.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided


class Tensor:
    """A node in the autodiff graph.

    Parameters
    ----------
    data : array_like
        Converted to a float64 ndarray.
    name : str, optional
        Used in diagnostics (optimizer NaN reports, grad checks).
    """

    __slots__ = ("data", "grad", "name", "_parents", "_backward")

    def __init__(self, data, name=None, _parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.name = name
        self._parents = _parents
        self._backward = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape})"

    # -- elementwise arithmetic ----------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        _check_same_shape("add", self, other)
        out = Tensor(self.data + other.data, _parents=(self, other))

        def backward():
            _accumulate(self, out.grad)
            _accumulate(other, out.grad)

        out._backward = backward
        return out

    def __sub__(self, other):
        other = _as_tensor(other)
        _check_same_shape("sub", self, other)
        out = Tensor(self.data - other.data, _parents=(self, other))

        def backward():
            _accumulate(self, out.grad)
            _accumulate(other, -out.grad)

        out._backward = backward
        return out

    def __mul__(self, scalar):
        if isinstance(scalar, Tensor):
            raise TypeError("mul: only python scalars; use matmul for tensors")
        c = float(scalar)
        out = Tensor(self.data * c, _parents=(self,))

        def backward():
            _accumulate(self, c * out.grad)

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    # -- linear algebra --------------------------------------------------------

    def matmul(self, other):
        """2-D matrix product self @ other."""
        other = _as_tensor(other)
        if self.ndim != 2 or other.ndim != 2:
            raise ValueError(
                f"matmul: expects 2-D operands, got {self.shape} @ {other.shape}"
            )
        if self.shape[1] != other.shape[0]:
            raise ValueError(
                f"matmul: inner dims disagree, {self.shape} @ {other.shape}"
            )
        out = Tensor(self.data @ other.data, _parents=(self, other))

        def backward():
            _accumulate(self, out.grad @ other.data.T)
            _accumulate(other, self.data.T @ out.grad)

        out._backward = backward
        return out

    def __matmul__(self, other):
        return self.matmul(other)

    @property
    def T(self):
        """2-D transpose."""
        if self.ndim != 2:
            raise ValueError(f"transpose: expects a 2-D tensor, got {self.shape}")
        out = Tensor(self.data.T.copy(), _parents=(self,))

        def backward():
            _accumulate(self, out.grad.T)

        out._backward = backward
        return out

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        src = self.shape
        out = Tensor(self.data.reshape(shape), _parents=(self,))

        def backward():
            _accumulate(self, out.grad.reshape(src))

        out._backward = backward
        return out

    # -- nonlinearities and reductions -----------------------------------------

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), _parents=(self,))
        mask = self.data > 0.0  # subgradient 0 at the kink

        def backward():
            _accumulate(self, out.grad * mask)

        out._backward = backward
        return out

    def sum(self):
        out = Tensor(self.data.sum(), _parents=(self,))

        def backward():
            _accumulate(self, np.full(self.shape, float(out.grad)))

        out._backward = backward
        return out

    def frob2(self):
        """Squared Frobenius norm, sum of squared entries, as a 0-d tensor."""
        out = Tensor(np.sum(self.data * self.data), _parents=(self,))

        def backward():
            _accumulate(self, (2.0 * float(out.grad)) * self.data)

        out._backward = backward
        return out

    def pnorm(self, p):
        """Entrywise p-norm regularizer as a 0-d tensor.

        For p >= 1 this is (sum |x|^p)^(1/p); for 0 < p < 1 the quasi-norm
        sum |x|^p is used directly and its gradient magnitude is clamped by
        evaluating |x|^(p-1) at max(|x|, 1e-6). The subgradient at 0 is 0.
        """
        value, grad = _pnorm_value_grad(self.data, p)
        out = Tensor(value, _parents=(self,))

        def backward():
            _accumulate(self, float(out.grad) * grad)

        out._backward = backward
        return out

    # -- convolution -------------------------------------------------------------

    def conv2d(self, kernel, stride):
        """SAME-padded 2-D convolution.

        Parameters
        ----------
        kernel : Tensor
            Shape (kh, kw, din, dout); din must match the input channels.
        stride : int
            1 or 2 in practice; output spatial dims are ceil(in / stride).
        """
        kernel = _as_tensor(kernel)
        x, k = self.data, kernel.data
        if x.ndim != 4 or k.ndim != 4:
            raise ValueError(
                f"conv2d: input must be NHWC and kernel 4-D, got {x.shape} / {k.shape}"
            )
        if x.shape[3] != k.shape[2]:
            raise ValueError(
                f"conv2d: channel mismatch, input {x.shape} vs kernel {k.shape}"
            )
        y, cols = _conv_fwd(x, k, stride)
        out = Tensor(y, _parents=(self, kernel))

        def backward():
            g = out.grad
            _accumulate(self, _conv_bwd_x(g, k, stride, x.shape))
            _accumulate(kernel, _conv_bwd_k(cols, g, k.shape))

        out._backward = backward
        return out

    def deconv2d(self, kernel, stride):
        """Transposed convolution, the exact adjoint of `conv2d`.

        Parameters
        ----------
        kernel : Tensor
            Shape (kh, kw, dout, din); din must match the input channels.
            This is the same layout a mirrored encoder conv would use.
        stride : int
            Output spatial dims are exactly in * stride.
        """
        kernel = _as_tensor(kernel)
        x, k = self.data, kernel.data
        if x.ndim != 4 or k.ndim != 4:
            raise ValueError(
                f"deconv2d: input must be NHWC and kernel 4-D, got {x.shape} / {k.shape}"
            )
        if x.shape[3] != k.shape[3]:
            raise ValueError(
                f"deconv2d: channel mismatch, input {x.shape} vs kernel {k.shape}"
            )
        n, h, w, _ = x.shape
        out_shape = (n, h * stride, w * stride, k.shape[2])
        y = _conv_bwd_x(x, k, stride, out_shape)
        out = Tensor(y, _parents=(self, kernel))

        def backward():
            g = out.grad
            gy, gcols = _conv_fwd(g, k, stride)
            _accumulate(self, gy)
            _accumulate(kernel, _conv_bwd_k(gcols, x, k.shape))

        out._backward = backward
        return out

    # -- backward pass -------------------------------------------------------------

    def backward(self):
        """Populate `.grad` on every tensor reachable from this scalar.

        Nodes that receive no gradient contribution keep `.grad = None`;
        consumers (the optimizer, grad_check) treat that as zero.
        """
        if self.size != 1:
            raise ValueError(f"backward: loss must be scalar, got shape {self.shape}")
        order = _topo_order(self)
        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    def item(self):
        return float(self.data)


# -- multi-input ops -----------------------------------------------------------


def concat_channels(tensors):
    """Concatenate NHWC tensors along channels, in list order."""
    tensors = [_as_tensor(t) for t in tensors]
    base = tensors[0].shape
    for t in tensors[1:]:
        if t.shape[:3] != base[:3]:
            raise ValueError(
                f"concat: spatial/batch dims disagree, {base} vs {t.shape}"
            )
    out = Tensor(
        np.concatenate([t.data for t in tensors], axis=-1),
        _parents=tuple(tensors),
    )
    splits = np.cumsum([t.shape[-1] for t in tensors])[:-1]

    def backward():
        for t, g in zip(tensors, np.split(out.grad, splits, axis=-1)):
            _accumulate(t, g)

    out._backward = backward
    return out


def elementwise_sum(tensors):
    """Sum a list of same-shape tensors."""
    tensors = [_as_tensor(t) for t in tensors]
    for t in tensors[1:]:
        _check_same_shape("elementwise_sum", tensors[0], t)
    out = Tensor(sum(t.data for t in tensors), _parents=tuple(tensors))

    def backward():
        for t in tensors:
            _accumulate(t, out.grad)

    out._backward = backward
    return out


def elementwise_max(tensors):
    """Entrywise max of same-shape tensors; ties route to the lowest index."""
    tensors = [_as_tensor(t) for t in tensors]
    for t in tensors[1:]:
        _check_same_shape("elementwise_max", tensors[0], t)
    stacked = np.stack([t.data for t in tensors], axis=0)
    winner = np.argmax(stacked, axis=0)  # argmax returns the first maximum
    out = Tensor(stacked.max(axis=0), _parents=tuple(tensors))

    def backward():
        for m, t in enumerate(tensors):
            _accumulate(t, out.grad * (winner == m))

    out._backward = backward
    return out


# -- gradient checking -----------------------------------------------------------


def grad_check(f, args, h=1e-5, sample=None, seed=0):
    """Compare analytic gradients of `f` against central finite differences.

    Parameters
    ----------
    f : callable
        Called as f(**tensors) with keyword Tensors named like `args`; must
        return a scalar Tensor and be pure: it is re-evaluated many times on
        perturbed copies.
    args : dict of str -> ndarray
        The point at which to check. Keep coordinates at least 10*h away
        from kinks (relu, |.| at 0) or the numeric quotient is meaningless.
    h : float
        Central-difference step.
    sample : int, optional
        If given, check only this many randomly chosen coordinates per
        argument instead of all of them (seeded).

    Returns
    -------
    float
        max over checked coordinates of |analytic - numeric| / max(1, |numeric|).
    """
    args = {k: np.asarray(v, dtype=np.float64) for k, v in args.items()}
    tensors = {k: Tensor(v.copy(), name=k) for k, v in args.items()}
    loss = f(**tensors)
    loss.backward()
    analytic = {
        k: (np.zeros_like(args[k]) if tensors[k].grad is None
            else np.array(tensors[k].grad, copy=True))
        for k in args
    }

    rng = np.random.default_rng(seed)
    worst = 0.0
    for key, base in args.items():
        flat = base.reshape(-1)
        idx = np.arange(flat.size)
        if sample is not None and flat.size > sample:
            idx = rng.choice(flat.size, size=sample, replace=False)
        for i in idx:
            for sign, store in ((+1.0, "hi"), (-1.0, "lo")):
                probe = {k: v.copy() for k, v in args.items()}
                probe[key].reshape(-1)[i] += sign * h
                val = float(f(**{k: Tensor(v) for k, v in probe.items()}).data)
                if store == "hi":
                    hi = val
                else:
                    lo = val
            numeric = (hi - lo) / (2.0 * h)
            ana = analytic[key].reshape(-1)[i]
            err = abs(ana - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst


# -- internals -----------------------------------------------------------------


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_same_shape(op, a, b):
    if a.shape != b.shape:
        raise ValueError(f"{op}: shapes disagree, {a.shape} vs {b.shape}")


def _accumulate(node, g):
    # Lazy init: copy on first contribution (g may alias another buffer),
    # accumulate in place afterwards.
    if node.grad is None:
        node.grad = np.array(np.broadcast_to(g, node.data.shape), dtype=np.float64)
    else:
        node.grad += g


def _topo_order(root):
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order  # parents appear before consumers


def _pnorm_value_grad(x, p):
    if p <= 0:
        raise ValueError(f"pnorm: p must be positive, got {p}")
    ax = np.abs(x)
    sg = np.sign(x)
    if p >= 1.0:
        s = np.sum(ax**p)
        value = s ** (1.0 / p)
        if s == 0.0:
            grad = np.zeros_like(x)
        else:
            grad = s ** (1.0 / p - 1.0) * ax ** (p - 1.0) * sg
    else:
        value = np.sum(ax**p)
        grad = p * np.maximum(ax, 1e-6) ** (p - 1.0) * sg
    return value, grad


def _same_pad(size, k, stride):
    out = -(-size // stride)  # ceil
    total = max((out - 1) * stride + k - size, 0)
    lo = total // 2
    return out, lo, total - lo


def _conv_geometry(x_shape, k_shape, stride):
    n, h, w, cin = x_shape
    kh, kw, _, cout = k_shape
    ho, pt, pb = _same_pad(h, kh, stride)
    wo, pl, pr = _same_pad(w, kw, stride)
    return n, h, w, cin, kh, kw, cout, ho, wo, pt, pb, pl, pr


def _im2col(xp, kh, kw, ho, wo, stride):
    n, _, _, c = xp.shape
    sn, sh, sw, sc = xp.strides
    windows = as_strided(
        xp,
        shape=(n, ho, wo, kh, kw, c),
        strides=(sn, sh * stride, sw * stride, sh, sw, sc),
    )
    return windows.reshape(n * ho * wo, kh * kw * c)


def _conv_fwd(x, k, stride):
    n, h, w, cin, kh, kw, cout, ho, wo, pt, pb, pl, pr = _conv_geometry(
        x.shape, k.shape, stride
    )
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    cols = _im2col(xp, kh, kw, ho, wo, stride)
    y = (cols @ k.reshape(kh * kw * cin, cout)).reshape(n, ho, wo, cout)
    return y, cols


def _conv_bwd_k(cols, dy, k_shape):
    cout = k_shape[3]
    return (cols.T @ dy.reshape(-1, cout)).reshape(k_shape)


def _conv_bwd_x(dy, k, stride, x_shape):
    n, h, w, cin, kh, kw, cout, ho, wo, pt, pb, pl, pr = _conv_geometry(
        x_shape, k.shape, stride
    )
    if dy.shape != (n, ho, wo, cout):
        raise ValueError(
            f"conv adjoint: gradient shape {dy.shape} does not match output "
            f"({n}, {ho}, {wo}, {cout})"
        )
    dcols = dy.reshape(-1, cout) @ k.reshape(kh * kw * cin, cout).T
    dcols = dcols.reshape(n, ho, wo, kh, kw, cin)
    dxp = np.zeros((n, h + pt + pb, w + pl + pr, cin))
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :] += (
                dcols[:, :, :, i, j, :]
            )
    return dxp[:, pt : pt + h, pl : pl + w, :]


def conv_output_size(size, stride):
    """Spatial size produced by a SAME-padded conv."""
    return -(-size // stride)


def deconv_output_size(size, stride):
    """Spatial size produced by the matching transposed conv."""
    return size * stride
