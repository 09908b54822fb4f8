"""Monte-Carlo ensembles over vacuum realizations, with resumable checkpoints."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .analysis import EnsembleAccumulator, SpectralMap, far_field_spectra
from .propagation import SplitStepModel

log = logging.getLogger(__name__)

__all__ = ["EnsembleResult", "run_ensemble", "model_fingerprint"]


def model_fingerprint(model: SplitStepModel, seed: int) -> str:
    """Hash of everything that determines the ensemble output."""
    doc = {
        "grid": model.grid.to_dict(),
        "pulse": model.pulse.to_dict(),
        "steps": model.steps,
        "depletion": model.depletion,
        "dtype": model.dtype.name,
        "carriers": [model.crystal.carrier(r) for r in ("pump", "signal", "idler")],
        "lattice": [model.crystal.lattice.poling_period, model.crystal.lattice.d01],
        "mask": None if model.mask is None else hashlib.sha256(
            np.packbits(model.mask.signal).tobytes() + np.packbits(model.mask.idler).tobytes()
        ).hexdigest(),
        "seed": int(seed),
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


@dataclass
class EnsembleResult:
    spectral_map: SpectralMap
    # per-realization |A|^2 on the q_y = 0 plane, shape (R, n_x, n_t), FFT order
    signal_slices: np.ndarray
    idler_slices: np.ndarray
    seconds: float
    resumed_from: int = 0
    meta: dict = field(default_factory=dict)


class _Checkpoint:
    def __init__(self, root: Path, fingerprint: str):
        self.root = Path(root)
        self.fingerprint = fingerprint
        self.state = self.root / "state.npz"
        self.done = self.root / "done"

    def load(self, acc: EnsembleAccumulator, limit: int):
        if not self.state.exists():
            return 0, [], []
        with np.load(self.state) as z:
            if str(z["fingerprint"]) != self.fingerprint:
                log.warning("checkpoint in %s belongs to a different run; starting over", self.root)
                return 0, [], []
            count = int(z["count"])
            if count > limit:
                log.warning("checkpoint holds %d realizations, %d requested; starting over",
                            count, limit)
                return 0, [], []
            markers = sorted(self.done.glob("*.done")) if self.done.exists() else []
            if len(markers) < count:
                log.warning("checkpoint markers incomplete; starting over")
                return 0, [], []
            acc.signal[...] = z["signal"]
            acc.idler[...] = z["idler"]
            acc.count = count
            return count, list(z["signal_slices"]), list(z["idler_slices"])

    def save(self, acc: EnsembleAccumulator, s_slices, i_slices, index: int):
        self.root.mkdir(parents=True, exist_ok=True)
        self.done.mkdir(exist_ok=True)
        tmp = self.root / "state.tmp.npz"
        np.savez(tmp, fingerprint=np.array(self.fingerprint), count=acc.count,
                 signal=acc.signal, idler=acc.idler,
                 signal_slices=np.asarray(s_slices), idler_slices=np.asarray(i_slices))
        os.replace(tmp, self.state)
        (self.done / f"{index:06d}.done").write_text(time.strftime("%Y-%m-%dT%H:%M:%S"))


def _one(model: SplitStepModel, seed: int, r: int):
    S, I, _, _ = model.run_spectral(model.seed(seed, r))
    return S, I


def run_ensemble(
    model: SplitStepModel,
    seed: int,
    n_realizations: int,
    checkpoint_dir=None,
    progress: Callable[[int, int], None] | None = None,
    workers: int = 1,
    model_factory: Callable[[], SplitStepModel] | None = None,
) -> EnsembleResult:
    """Run ``n_realizations`` independent vacuum realizations.

    Realization ``r`` draws its noise from the stream keyed by ``(seed, r)``,
    and contributions are added strictly in index order, so the result is
    bit-identical for any ``workers`` count and across resumed runs. With
    ``checkpoint_dir`` the running sums are stored after every realization
    together with a completion marker, and a rerun resumes after the last
    completed index. ``workers > 1`` requires ``model_factory`` (one model,
    with its own FFT plans and buffers, per worker).
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    t0 = time.perf_counter()
    acc = EnsembleAccumulator(model.grid)
    fp = model_fingerprint(model, seed)
    ckpt = _Checkpoint(checkpoint_dir, fp) if checkpoint_dir is not None else None
    start, s_slices, i_slices = (0, [], [])
    if ckpt is not None:
        start, s_slices, i_slices = ckpt.load(acc, n_realizations)
        if start:
            log.info("resuming ensemble at realization %d", start)

    def consume(r, S, I):
        acc.add(S, I)
        s_slices.append((np.abs(S[:, 0, :]) ** 2).astype(np.float32))
        i_slices.append((np.abs(I[:, 0, :]) ** 2).astype(np.float32))
        if ckpt is not None:
            ckpt.save(acc, s_slices, i_slices, r)
        if progress is not None:
            progress(r + 1, n_realizations)

    todo = range(start, n_realizations)
    if workers <= 1:
        for r in todo:
            consume(r, *_one(model, seed, r))
    else:
        if model_factory is None:
            raise ValueError("workers > 1 needs a model_factory")
        import threading

        local = threading.local()

        def task(r):
            if not hasattr(local, "model"):
                local.model = model_factory()
            return _one(local.model, seed, r)

        with ThreadPoolExecutor(workers) as pool:
            for r, (S, I) in zip(todo, pool.map(task, todo)):  # ordered
                consume(r, S, I)

    smap = far_field_spectra(acc, model.crystal, {"seed": int(seed), "fingerprint": fp})
    return EnsembleResult(
        smap,
        np.asarray(s_slices),
        np.asarray(i_slices),
        time.perf_counter() - t0,
        start,
        {"fingerprint": fp},
    )
