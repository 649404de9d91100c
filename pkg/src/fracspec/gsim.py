"""Exact simulation of stationary Gaussian sequences and of the limit process.

Stationary paths come from circulant embedding of the autocovariance sequence,
which is exact in law whenever the embedding is nonnegative definite; padding
is doubled (up to a cap) until it is. Randomness is drawn from the
counter-based Philox generator keyed by (seed, stream), so replications are
reproducible independently of scheduling.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SamplingError
from .specmodel import LimitCovariance, SpectralModel, autocovariance_batch

#: embedding eigenvalues above this are clipped to 0, below it the embedding fails
EIG_TOL = -1e-8

#: maximum number of padding doublings before giving up
MAX_DOUBLINGS = 6


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) | ((int(stream) & 0xFFFFFFFFFFFFFFFF) << 64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One realization of the stationary Gaussian sequence plus provenance."""

    n: int
    values: np.ndarray
    seed: int
    model_id: str
    centered: bool = False
    added_mean: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).copy()
        if vals.size != self.n:
            raise SamplingError(f"length {vals.size} != n = {self.n}")
        if not np.all(np.isfinite(vals)):
            raise SamplingError("sample path contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def to_csv_text(self, comments: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in comments:
            buf.write(f"# {line}\n")
        buf.write(f"# seed = {self.seed}\n")
        buf.write(f"# model_id = {self.model_id}\n")
        buf.write(f"# centered = {self.centered}\n")
        buf.write(f"# added_mean = {self.added_mean:.17g}\n")
        buf.write("eta\n")
        for v in self.values:
            buf.write(f"{v:.17g}\n")
        return buf.getvalue()

    def to_csv(self, path: str | Path, comments: Sequence[str] = ()) -> None:
        Path(path).write_text(self.to_csv_text(comments), encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path) -> "SamplePath":
        meta = {"seed": "0", "model_id": "unknown", "centered": "False", "added_mean": "0"}
        vals = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
            elif line and line != "eta":
                vals.append(float(line))
        return cls(
            n=len(vals),
            values=np.array(vals),
            seed=int(meta["seed"]),
            model_id=meta["model_id"],
            centered=meta["centered"] == "True",
            added_mean=float(meta["added_mean"]),
        )


@lru_cache(maxsize=32)
def _embedding_sqrt_eigs(model: SpectralModel, n: int) -> np.ndarray:
    """sqrt of circulant eigenvalues for an M-point embedding of r(0..n-1)."""
    m = 1
    while m < 2 * n:
        m *= 2
    for _ in range(MAX_DOUBLINGS + 1):
        r = autocovariance_batch(model, m // 2)
        circ = np.concatenate((r, r[-2:0:-1]))
        eigs = np.fft.fft(circ).real
        if eigs.min() >= EIG_TOL * max(1.0, eigs.max()):
            out = np.sqrt(np.clip(eigs, 0.0, None))
            out.setflags(write=False)
            return out
        m *= 2
    raise SamplingError(
        f"circulant embedding stayed indefinite for model {model.model_id} at n={n} "
        f"after {MAX_DOUBLINGS} padding doublings (min eigenvalue {eigs.min():g})"
    )


def sample_path(
    model: SpectralModel, n: int, seed: int, mean: float = 0.0, stream: int = 0
) -> SamplePath:
    """Draw one exact stationary Gaussian path of length n with the given mean."""
    if int(n) < 1:
        raise SamplingError(f"sample_path needs n >= 1, got {n!r}")
    n = int(n)
    sqrt_eigs = _embedding_sqrt_eigs(model, n)
    m = sqrt_eigs.size
    rng = make_rng(seed, stream)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    path = np.sqrt(m) * np.fft.ifft(sqrt_eigs * z).real[:n] + mean
    return SamplePath(n=n, values=path, seed=seed, model_id=model.model_id, added_mean=mean)


def sample_limit_process(cov: LimitCovariance, seed: int, stream: int = 0) -> np.ndarray:
    """One draw of the limit Gaussian process restricted to the probe grid."""
    rng = make_rng(seed, stream)
    return cov.factor @ rng.standard_normal(cov.factor.shape[1])


def center_sample(path: SamplePath) -> SamplePath:
    """Subtract the sample mean; idempotent."""
    centered = path.values - path.values.mean()
    return replace(path, values=centered, centered=True)
