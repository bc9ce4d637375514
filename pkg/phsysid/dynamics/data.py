"""
Dataset Generation and Persistence
Seeded trajectory simulation with Gaussian measurement noise, CSV + JSON sidecar storage
"""

import json
import os
from math import sqrt
from typing import Optional

import numpy as np
from loguru import logger

from phsysid.core.errors import ConfigError, DimensionError

from .types import Dataset, OdeSystem, Trajectory

CSV_FORMAT = "%.17g"


def two_point_noise_std(sigma: float) -> float:
    """Standard deviation of the noise on the average of two independently noisy samples"""
    if sigma < 0:
        raise ConfigError(f"sigma must be nonnegative, got {sigma}")
    return sigma / sqrt(2.0)


def _child_rngs(seed: int, count: int):
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(count)]


def generate_dataset(
    system: OdeSystem,
    n_traj: int,
    t_end: float,
    dt: float,
    init_low: float = -1.0,
    init_high: float = 1.0,
    sigma: float = 0.0,
    seed: int = 0,
    substeps: int = 100,
) -> Dataset:
    """
    Simulate trajectories from uniformly drawn initial states and add noise

    Trajectory i draws its initial state and then its noise from the i-th child
    of SeedSequence(seed), so the data of one index does not depend on n_traj.

    Args:
        system: System to simulate
        n_traj: Number of trajectories
        t_end: Final time of every trajectory (a multiple of dt)
        dt: Sampling step
        init_low: Lower bound of each initial coordinate
        init_high: Upper bound of each initial coordinate
        sigma: Standard deviation of the additive Gaussian noise
        seed: Master seed
        substeps: Reference RK4 steps per sampling interval

    Returns:
        Dataset with clean_copy holding the noise-free states
    """
    from phsysid.integrators.reference import simulate_batch

    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if n_traj < 1:
        raise ConfigError(f"n_traj must be >= 1, got {n_traj}")
    if not init_low < init_high:
        raise ConfigError(f"init_low must be below init_high, got [{init_low}, {init_high}]")
    if sigma < 0:
        raise ConfigError(f"sigma must be nonnegative, got {sigma}")

    d = system.dimension
    rngs = _child_rngs(seed, n_traj)
    x0s = np.stack([rng.uniform(init_low, init_high, size=d) for rng in rngs])
    times, states, _ = simulate_batch(system.rhs, x0s, t_end, dt, substeps=substeps)

    clean, noisy = [], []
    for i, rng in enumerate(rngs):
        clean_states = states[:, i, :].copy()
        clean.append(Trajectory(times=times.copy(), states=clean_states, dt=dt))
        if sigma > 0:
            noisy_states = clean_states + rng.normal(0.0, sigma, size=clean_states.shape)
        else:
            noisy_states = clean_states.copy()
        noisy.append(Trajectory(times=times.copy(), states=noisy_states, dt=dt))

    common = dict(
        seed=seed,
        system_name=system.name,
        system_params=dict(system.params),
        init_low=init_low,
        init_high=init_high,
    )
    clean_copy = Dataset(trajectories=clean, noise_sigma=0.0, **common)
    dataset = Dataset(trajectories=noisy, noise_sigma=float(sigma), clean_copy=clean_copy, **common)
    logger.info(
        f"Generated dataset for {system.name}: {n_traj} trajectories x {len(times)} points, "
        f"dt={dt}, sigma={sigma}, seed={seed}"
    )
    return dataset


def _meta_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + ".meta.json"


def _clean_path(path: str) -> str:
    root, ext = os.path.splitext(path)
    return root + ".clean" + (ext or ".csv")


def _write_csv(dataset: Dataset, path: str) -> None:
    d = dataset.dimension
    rows = [
        np.column_stack([np.full(len(traj), i, dtype=float), traj.times, traj.states])
        for i, traj in enumerate(dataset.trajectories)
    ]
    header = ",".join(["traj_id", "t"] + [f"x{k}" for k in range(d)])
    np.savetxt(path, np.vstack(rows), delimiter=",", header=header, comments="", fmt=["%d"] + [CSV_FORMAT] * (d + 1))


def _read_csv(path: str, dt: float):
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ids = table[:, 0].astype(int)
    trajectories = []
    for traj_id in np.unique(ids):
        rows = table[ids == traj_id]
        trajectories.append(Trajectory(times=rows[:, 1], states=rows[:, 2:], dt=dt))
    return trajectories


def save_dataset(dataset: Dataset, path: str) -> str:
    """
    Write a dataset as CSV plus a JSON metadata sidecar

    When the dataset is noisy its clean copy is written next to it.

    Args:
        dataset: Dataset to store
        path: CSV file path

    Returns:
        Path of the metadata file
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    _write_csv(dataset, path)
    has_clean = dataset.clean_copy is not None and dataset.noise_sigma > 0
    if has_clean:
        _write_csv(dataset.clean_copy, _clean_path(path))
    meta = {
        "system": dataset.system_name,
        "params": dataset.system_params,
        "dt": dataset.dt,
        "sigma": dataset.noise_sigma,
        "seed": dataset.seed,
        "n_traj": len(dataset.trajectories),
        "dimension": dataset.dimension,
        "init_low": dataset.init_low,
        "init_high": dataset.init_high,
        "clean_file": os.path.basename(_clean_path(path)) if has_clean else None,
    }
    meta_path = _meta_path(path)
    with open(meta_path, "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    logger.info(f"Saved dataset to {path}")
    return meta_path


def load_dataset(path: str, meta_path: Optional[str] = None) -> Dataset:
    """
    Read a dataset written by save_dataset

    Args:
        path: CSV file path
        meta_path: Sidecar path (defaults to <stem>.meta.json)

    Returns:
        Dataset, with clean_copy when a clean file was stored
    """
    meta_path = meta_path or _meta_path(path)
    if not os.path.exists(path) or not os.path.exists(meta_path):
        raise ConfigError(f"dataset files not found: {path}, {meta_path}")
    with open(meta_path) as f:
        meta = json.load(f)
    dt = float(meta["dt"])
    common = dict(
        seed=int(meta["seed"]),
        system_name=meta.get("system", ""),
        system_params=meta.get("params", {}),
        init_low=float(meta.get("init_low", -1.0)),
        init_high=float(meta.get("init_high", 1.0)),
    )
    trajectories = _read_csv(path, dt)
    if trajectories and trajectories[0].dimension != int(meta["dimension"]):
        raise DimensionError(f"CSV has dimension {trajectories[0].dimension}, metadata says {meta['dimension']}")
    sigma = float(meta["sigma"])
    if meta.get("clean_file"):
        clean = Dataset(trajectories=_read_csv(os.path.join(os.path.dirname(path), meta["clean_file"]), dt), noise_sigma=0.0, **common)
    else:
        clean = Dataset(trajectories=[Trajectory(t.times.copy(), t.states.copy(), dt) for t in trajectories], noise_sigma=0.0, **common)
    return Dataset(trajectories=trajectories, noise_sigma=sigma, clean_copy=clean, **common)
