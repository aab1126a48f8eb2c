"""Benchmark data from additive-noise SDEs.

Integration uses the second-order stochastic Runge-Kutta scheme for
additive noise (Heun predictor/corrector sharing one Gaussian draw).

Randomness comes from Philox4x32-10 evaluated directly on counters
``(draw index, series index, stream tag)`` with the seed as key, so every
series owns an independent substream and results do not depend on how the
series are chunked or ordered.  Normals are produced by inverse CDF.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .dataset import Dataset, reindex_interleave
from .errors import IntegrationError, ParameterError

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

TAG_INIT = 0
TAG_NOISE = 1


def philox4x32(c0, c1, c2, c3, k0, k1, rounds=10):
    """Philox4x32 block function on arrays of 32-bit words held in uint64."""
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in (c0, c1, c2, c3))
    k0 = np.uint64(int(k0) & 0xFFFFFFFF)
    k1 = np.uint64(int(k1) & 0xFFFFFFFF)
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _SHIFT32) ^ c1 ^ k0, p1 & _MASK32,
                          (p0 >> _SHIFT32) ^ c3 ^ k1, p0 & _MASK32)
    return c0, c1, c2, c3


def _unit_pair(x0, x1):
    """53-bit uniform strictly inside (0, 1) from two 32-bit words."""
    k = (x0 >> np.uint64(5)) * np.uint64(1 << 26) + (x1 >> np.uint64(6))
    return (k.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def uniforms(seed, series, index, tag, count):
    """``(len(series), count)`` uniforms for the given draw ``index`` block."""
    series = np.asarray(series, dtype=np.uint64)
    blocks = (count + 1) // 2
    out = np.empty((series.size, 2 * blocks))
    for b in range(blocks):
        idx = np.uint64(index * blocks + b)
        x0, x1, x2, x3 = philox4x32(idx & _MASK32, idx >> _SHIFT32, series, tag,
                                    seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF)
        out[:, 2 * b] = _unit_pair(x0, x1)
        out[:, 2 * b + 1] = _unit_pair(x2, x3)
    return out[:, :count]


def normals(seed, series, index, count):
    return ndtri(uniforms(seed, series, index, TAG_NOISE, count))


@dataclass(frozen=True)
class SdeModel:
    name: str
    dim: int
    drift: Callable[[np.ndarray], np.ndarray]  # (n, dim) -> (n, dim)
    sigma: float

    def with_sigma(self, sigma) -> SdeModel:
        return replace(self, sigma=float(sigma))


def _double_well(x):
    return x * (1.0 - x * x)


def _saddle(z):
    x, y = z[:, 0], z[:, 1]
    return np.stack([y, -4.0 * y + x * (1.0 - x * x)], axis=1)


def double_well_1d(sigma=math.sqrt(0.2)) -> SdeModel:
    """``dx = x (1 - x^2) dt + sigma dB``: sinks at +-1, source at 0."""
    return SdeModel("dw1d", 1, _double_well, float(sigma))


def saddle_2d(sigma=math.sqrt(0.08)) -> SdeModel:
    """``dx = y dt + sigma dB^x``, ``dy = (-4y + x(1 - x^2)) dt + sigma dB^y``."""
    return SdeModel("saddle2d", 2, _saddle, float(sigma))


MODELS = {"dw1d": double_well_1d, "saddle2d": saddle_2d}


def srk2_step(model: SdeModel, state, dt, xi) -> np.ndarray:
    """One additive-noise RK2 step for a batch of states (shape (n, dim))."""
    if not dt > 0:
        raise ParameterError(f"time step must be positive, got {dt}")
    x = np.asarray(state, dtype=float)
    noise = model.sigma * math.sqrt(dt) * np.asarray(xi, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        f1 = model.drift(x)
        f2 = model.drift(x + dt * f1 + noise)
        out = x + 0.5 * dt * (f1 + f2) + noise
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state after integration step")
    return out


@dataclass(frozen=True)
class SimConfig:
    n_series: int
    steps: int
    dt_out: float
    dt_int: float
    sigma: float | None = None   # None keeps the model's own sigma
    box: tuple[tuple[float, float], ...] = ((-2.0, 2.0),)
    seed: int = 0

    def __post_init__(self):
        if self.n_series < 0 or self.steps < 0:
            raise ParameterError("n_series and steps must be non-negative")
        if not 0 < self.dt_int <= self.dt_out + 1e-15:
            raise ParameterError("need 0 < dt_int <= dt_out")
        if abs(self.substeps * self.dt_int - self.dt_out) > 1e-9 * self.dt_out:
            raise ParameterError(
                f"dt_out={self.dt_out} is not an integer multiple of dt_int={self.dt_int}")
        if not 0 <= self.seed < 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    @property
    def substeps(self) -> int:
        return max(1, int(round(self.dt_out / self.dt_int)))

    def to_dict(self, model_name=None) -> dict:
        out = {"model": model_name, "n_series": self.n_series, "steps": self.steps,
               "dt_out": self.dt_out, "dt_int": self.dt_int,
               "sigma2": None if self.sigma is None else self.sigma ** 2,
               "box": [list(b) for b in self.box], "seed": self.seed}
        return out

    def to_json(self, model_name=None) -> str:
        return json.dumps(self.to_dict(model_name), indent=2)


CHUNK = 1 << 16


def simulate(model: SdeModel, cfg: SimConfig) -> Dataset:
    """Uniform initial points in ``cfg.box`` advanced ``cfg.steps`` output steps.

    Each series is recorded at its initial point and after every output
    step, so it has ``steps + 1`` points.
    """
    if cfg.sigma is not None:
        model = model.with_sigma(cfg.sigma)
    if len(cfg.box) != model.dim:
        raise ParameterError(f"box has {len(cfg.box)} intervals for a {model.dim}-d model")
    lo = np.array([b[0] for b in cfg.box], dtype=float)
    hi = np.array([b[1] for b in cfg.box], dtype=float)
    n, dim, npts = cfg.n_series, model.dim, cfg.steps + 1
    out = np.empty((n, npts, dim))
    sub = cfg.substeps
    for start in range(0, n, CHUNK):
        ser = np.arange(start, min(n, start + CHUNK), dtype=np.uint64)
        x = lo + (hi - lo) * uniforms(cfg.seed, ser, 0, TAG_INIT, dim)
        out[start:start + ser.size, 0] = x
        t = 0
        for step in range(1, npts):
            for _ in range(sub):
                xi = normals(cfg.seed, ser, t, dim)
                try:
                    x = srk2_step(model, x, cfg.dt_int, xi)
                except IntegrationError:
                    bad = int(start + np.flatnonzero(~np.all(np.isfinite(
                        srk2_step_unchecked(model, x, cfg.dt_int, xi)), axis=1))[0])
                    raise IntegrationError(
                        f"series {bad} blew up at output step {step}") from None
                t += 1
            out[start:start + ser.size, step] = x
    offsets = np.arange(n + 1, dtype=np.int64) * npts
    return Dataset(out.reshape(n * npts, dim), offsets, tuple(str(k) for k in range(n)))


def srk2_step_unchecked(model, x, dt, xi):
    with np.errstate(all="ignore"):
        noise = model.sigma * math.sqrt(dt) * xi
        f1 = model.drift(x)
        f2 = model.drift(x + dt * f1 + noise)
        return x + 0.5 * dt * (f1 + f2) + noise


# Experiment configurations: D1 = many one-step pairs, D2 = few long runs
# re-indexed into interleaved series.
PRESETS = {
    ("dw1d", "D1"): dict(n_series=1_000_000, steps=1, dt_out=0.1, dt_int=0.001,
                         sigma=math.sqrt(0.2), box=((-2.0, 2.0),), stride=1),
    ("dw1d", "D2"): dict(n_series=30, steps=399, dt_out=0.025, dt_int=0.001,
                         sigma=math.sqrt(0.2), box=((-2.0, 2.0),), stride=4),
    ("saddle2d", "D1"): dict(n_series=1_000_000, steps=1, dt_out=0.1, dt_int=0.001,
                             sigma=math.sqrt(0.08), box=((-2.0, 2.0), (-2.0, 2.0)), stride=1),
    ("saddle2d", "D2"): dict(n_series=30, steps=399, dt_out=0.025, dt_int=0.001,
                             sigma=math.sqrt(0.08), box=((-2.0, 2.0), (-2.0, 2.0)), stride=4),
}


def preset_config(model_name, preset, seed=0, n_series=None) -> tuple[SdeModel, SimConfig, int]:
    """Model, simulation config and interleave stride of a named experiment."""
    try:
        params = dict(PRESETS[(model_name, preset)])
    except KeyError:
        raise ParameterError(f"unknown model/preset {model_name!r}/{preset!r}") from None
    stride = params.pop("stride")
    if n_series is not None:
        params["n_series"] = int(n_series)
    model = MODELS[model_name]()
    return model, SimConfig(seed=int(seed), **params), stride


def generate_preset(model_name, preset, seed=0, n_series=None) -> Dataset:
    model, cfg, stride = preset_config(model_name, preset, seed, n_series)
    return reindex_interleave(simulate(model, cfg), stride)
