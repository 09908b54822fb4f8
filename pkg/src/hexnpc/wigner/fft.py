"""In-place orthonormal 3D FFTs.

pyFFTW is used when installed (measured plans, wisdom cached on disk so that
separate processes pick identical plans and stay bit-reproducible); otherwise
``scipy.fft``.
"""

from __future__ import annotations

import logging
import os
import pickle
from pathlib import Path

import numpy as np
import scipy.fft

log = logging.getLogger(__name__)

try:  # optional
    import pyfftw
except ImportError:  # pragma: no cover
    pyfftw = None

__all__ = ["FFTBackend", "make_backend"]


def _wisdom_path() -> Path:
    root = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(root) / "hexnpc" / "fftw_wisdom.pkl"


class FFTBackend:
    """Forward/backward orthonormal FFTs over all axes of fixed-shape arrays.

    The time axis uses the physics convention (``exp(-i Omega t)``) only
    through the frequency grid definition in :class:`GridSpec`; here
    ``forward`` is the plain DFT.
    """

    name = "scipy"

    def __init__(self, shape, dtype=np.complex64, threads: int = 1):
        self.shape = tuple(shape)
        self.dtype = np.dtype(dtype)
        self.threads = max(1, int(threads))

    def empty(self):
        return np.empty(self.shape, self.dtype)

    def forward(self, a):
        a[...] = scipy.fft.fftn(a, norm="ortho", workers=self.threads, overwrite_x=True)
        return a

    def backward(self, a):
        a[...] = scipy.fft.ifftn(a, norm="ortho", workers=self.threads, overwrite_x=True)
        return a


class PyFFTWBackend(FFTBackend):
    name = "pyfftw"

    def __init__(self, shape, dtype=np.complex64, threads: int = 1):
        super().__init__(shape, dtype, threads)
        self._load_wisdom()
        buf = pyfftw.empty_aligned(self.shape, self.dtype)
        kw = dict(axes=tuple(range(len(self.shape))), flags=("FFTW_MEASURE",),
                  threads=self.threads, ortho=True, normalise_idft=False)
        self._fwd = pyfftw.FFTW(buf, buf, direction="FFTW_FORWARD", **kw)
        self._bwd = pyfftw.FFTW(buf, buf, direction="FFTW_BACKWARD", **kw)
        self._save_wisdom()

    @staticmethod
    def _load_wisdom():
        path = _wisdom_path()
        try:
            pyfftw.import_wisdom(pickle.loads(path.read_bytes()))
        except (OSError, pickle.UnpicklingError, ValueError, TypeError):
            pass

    @staticmethod
    def _save_wisdom():
        path = _wisdom_path()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(pickle.dumps(pyfftw.export_wisdom()))
        except OSError as exc:  # read-only home etc.
            log.debug("could not store FFTW wisdom: %s", exc)

    def empty(self):
        return pyfftw.empty_aligned(self.shape, self.dtype)

    def _run(self, plan, a):
        if pyfftw.is_byte_aligned(a, plan.input_alignment) and a.flags.c_contiguous:
            plan(input_array=a, output_array=a, normalise_idft=False, ortho=True)
        else:
            a[...] = plan(a, normalise_idft=False, ortho=True)
        return a

    def forward(self, a):
        return self._run(self._fwd, a)

    def backward(self, a):
        return self._run(self._bwd, a)


def make_backend(shape, dtype=np.complex64, threads: int = 1, prefer: str = "auto") -> FFTBackend:
    """Pick ``pyfftw`` when available (``prefer="auto"``) or force ``"scipy"``."""
    if prefer not in ("auto", "pyfftw", "scipy"):
        raise ValueError(f"unknown FFT backend {prefer!r}")
    if prefer != "scipy" and pyfftw is not None:
        return PyFFTWBackend(shape, dtype, threads)
    if prefer == "pyfftw":
        raise RuntimeError("pyfftw requested but not installed")
    return FFTBackend(shape, dtype, threads)
