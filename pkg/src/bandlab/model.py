"""Variance profiles, Gaussian band matrices and matrix Brownian increments."""
import json
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .lattice import TorusGeometry

_MAGIC = b"BANDLABH"


@dataclass(frozen=True)
class VarianceProfile:
    """Block variance profile ``S = S^(B) (x) S_W``.

    The block matrix is stored as a circulant stencil on ``Z_L^d``.  The
    stencil is accumulated, so on a torus with ``L = 2`` the two neighbours
    ``a + e_i`` and ``a - e_i`` coincide and their weights add; every row
    then still sums to one.
    """

    geo: TorusGeometry
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @cached_property
    def stencil(self):
        """First row of ``S^(B)`` as an array of shape ``(L,)*d``, FFT ordering."""
        d, L = self.geo.d, self.geo.L
        lam2 = self.lam ** 2
        st = np.zeros((L,) * d)
        st[(0,) * d] += 1.0 / (1 + 2 * d * lam2)
        for i in range(d):
            for s in (1, -1):
                idx = [0] * d
                idx[i] = s % L
                st[tuple(idx)] += lam2 / (1 + 2 * d * lam2)
        return st

    @cached_property
    def symbol(self):
        """Fourier symbol of ``S^(B)`` (real, since the stencil is symmetric)."""
        return np.fft.fftn(self.stencil).real

    @cached_property
    def sB(self):
        """Dense ``L^d x L^d`` block variance matrix."""
        return circulant_dense(self.stencil, self.geo)

    @property
    def sW(self):
        return self.geo.W ** (-self.geo.d)

    def S(self):
        """Dense ``N x N`` variance matrix in block-major site order."""
        n = self.geo.block_size
        return np.kron(self.sB, np.full((n, n), 1.0 / n))

    @cached_property
    def sqrt_S(self):
        return np.sqrt(self.S())


def circulant_dense(first_row, geo):
    """Expand a circulant kernel on ``Z_L^d`` into a dense block matrix.

    ``first_row[c]`` is the kernel at offset ``c`` (FFT ordering); the
    result satisfies ``M[a, b] = first_row[b - a]``.
    """
    C = geo.block_table - geo.block_low
    diff = np.mod(C[None, :, :] - C[:, None, :], geo.L)
    return first_row[tuple(np.moveaxis(diff, -1, 0))]


def build_variance(geo, lam):
    """Construct the variance profile for coupling ``lam``."""
    return VarianceProfile(geo, float(lam))


def _rng(seed, *keys):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def _hermitian_gaussian(sqrt_S, rng):
    # off-diagonal CN(0, S): real and imaginary parts each of variance S/2
    N = sqrt_S.shape[0]
    X = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    A = np.triu(X * (sqrt_S / np.sqrt(2.0)), 1)
    H = A + A.conj().T
    H[np.diag_indices(N)] = rng.standard_normal(N) * np.diag(sqrt_S)
    return H


@dataclass
class BandMatrix:
    """Dense Hermitian band matrix with its provenance."""

    geo: TorusGeometry
    lam: float
    H: np.ndarray
    seed: int = 0
    sample: int = 0
    meta: dict = field(default_factory=dict)

    def header(self):
        return {"d": self.geo.d, "W": self.geo.W, "L": self.geo.L, "lambda": self.lam,
                "seed": self.seed, "sample": self.sample, "N": self.geo.N, "dtype": "<c16",
                "order": "row-major", **self.meta}

    def dump(self, path):
        """Write the binary dump: magic, header length, JSON header, ``<c16`` data."""
        head = json.dumps(self.header(), sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<Q", len(head)))
            fh.write(head)
            fh.write(np.ascontiguousarray(self.H, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(len(_MAGIC)) != _MAGIC:
                raise ValueError(f"{path}: not a bandlab matrix dump")
            (n,) = struct.unpack("<Q", fh.read(8))
            head = json.loads(fh.read(n))
            data = np.frombuffer(fh.read(), dtype="<c16")
        geo = TorusGeometry(head["d"], head["W"], head["L"])
        H = data.reshape(geo.N, geo.N).astype(complex)
        return cls(geo, head["lambda"], H, head["seed"], head["sample"])


def sample_h(profile, seed, sample=0):
    """Draw a Gaussian band matrix; deterministic in ``(seed, sample)``."""
    H = _hermitian_gaussian(profile.sqrt_S, _rng(seed, sample))
    return BandMatrix(profile.geo, profile.lam, H, int(seed), int(sample))


def brownian_increment(profile, dt, rng):
    """Increment ``sqrt(S) dB`` of the matrix Brownian motion over time ``dt``.

    ``rng`` is a ``numpy.random.Generator``.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return np.zeros((profile.geo.N,) * 2, dtype=complex)
    return np.sqrt(dt) * _hermitian_gaussian(profile.sqrt_S, rng)


def increment_stream(seed, sample):
    """Generator dedicated to the Brownian increments of one trajectory."""
    return _rng(seed, sample, 1)
