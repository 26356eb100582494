"""Synthetic datasets and dataset file IO.

Generators: a driven frictionless pendulum integrated with classic RK4,
and linear systems built from a prescribed eigenvalue spectrum (the oracle
for DMD and operator-identification tests). Splitting is per trajectory so
no training window leaks into validation or test; standardisation uses
training-split statistics only.

The on-disk format ``KDS1`` is documented in ``save_dataset``.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError, ParameterError

DATASET_MAGIC = b"KDS1"
DATASET_VERSION = 1

SPLIT_TRAIN = 0
SPLIT_VAL = 1
SPLIT_TEST = 2
SPLIT_NAMES = {"train": SPLIT_TRAIN, "val": SPLIT_VAL, "test": SPLIT_TEST}


@dataclass
class Trajectory:
    """Time-ordered snapshots of one run: ``states`` is (steps, dim)."""

    states: np.ndarray
    dt: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.states.ndim != 2 or self.states.shape[0] < 2:
            raise DimensionError(
                f"trajectory needs >= 2 states of equal dimension, got {self.states.shape}")
        if not np.all(np.isfinite(self.states)):
            raise ParameterError("trajectory contains non-finite states")
        if self.dt <= 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")


@dataclass
class Dataset:
    """Trajectories plus split tags and (optional) standardisation stats."""

    trajectories: list
    splits: np.ndarray = None            # uint8 tags per trajectory
    mean: np.ndarray = None              # per-feature, from the train split
    std: np.ndarray = None
    constant_mask: np.ndarray = None     # features left unscaled (std == 0)
    standardized: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.trajectories:
            raise ParameterError("dataset needs at least one trajectory")
        dims = {t.states.shape[1] for t in self.trajectories}
        if len(dims) != 1:
            raise DimensionError(f"mixed state dimensions {sorted(dims)}")
        dts = {t.dt for t in self.trajectories}
        if len(dts) != 1:
            raise ParameterError(f"mixed time steps {sorted(dts)}")
        if self.splits is None:
            self.splits = np.zeros(len(self.trajectories), dtype=np.uint8)
        else:
            self.splits = np.asarray(self.splits, dtype=np.uint8)
            if self.splits.shape != (len(self.trajectories),):
                raise DimensionError("one split tag per trajectory required")

    @property
    def state_dim(self):
        return self.trajectories[0].states.shape[1]

    @property
    def dt(self):
        return self.trajectories[0].dt

    @property
    def n_trajectories(self):
        return len(self.trajectories)

    def indices(self, split):
        tag = SPLIT_NAMES[split] if isinstance(split, str) else int(split)
        return np.flatnonzero(self.splits == tag)


@dataclass(frozen=True)
class PendulumParams:
    """Driven frictionless pendulum x'' + omega0^2 x = f0 sin(omega t)."""

    omega0: float = 3.13
    f0: float = 1.0
    omega: float = 1.0
    dt: float = 0.02
    steps: int = 600
    x_range: tuple = (-np.pi, np.pi)
    v_range: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if self.steps < 2:
            raise ParameterError(f"steps must be >= 2, got {self.steps}")


def simulate_pendulum(params, n_traj, rng):
    """Integrate the driven pendulum with classic RK4.

    The forcing is evaluated at the substep times, so the integrator keeps
    its fourth order for the time-dependent term. ``steps`` counts stored
    states (steps - 1 integration steps). Initial conditions are uniform
    over the configured ranges.
    """
    if n_traj < 1:
        raise ParameterError(f"n_traj must be >= 1, got {n_traj}")
    omega0_sq = params.omega0 ** 2

    def deriv(t, state):
        out = np.empty_like(state)
        out[:, 0] = state[:, 1]
        out[:, 1] = -omega0_sq * state[:, 0] + params.f0 * np.sin(params.omega * t)
        return out

    x0 = rng.uniform(params.x_range[0], params.x_range[1], n_traj)
    v0 = rng.uniform(params.v_range[0], params.v_range[1], n_traj)
    state = np.stack([x0, v0], axis=1)
    states = np.empty((n_traj, params.steps, 2))
    states[:, 0] = state
    dt = params.dt
    t = 0.0
    for k in range(1, params.steps):
        k1 = deriv(t, state)
        k2 = deriv(t + 0.5 * dt, state + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, state + 0.5 * dt * k2)
        k4 = deriv(t + dt, state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[:, k] = state
        t += dt

    meta = {"generator": "pendulum", "omega0": params.omega0, "f0": params.f0,
            "omega": params.omega, "dt": params.dt, "steps": params.steps}
    trajs = [Trajectory(states[i], params.dt, {"x0": float(x0[i]), "v0": float(v0[i])})
             for i in range(n_traj)]
    return Dataset(trajs, metadata=meta)


def _spectrum_units(spectrum, tol=1e-12):
    """Group a conjugate-closed spectrum into real values and (a, b) pairs."""
    values = [complex(v) for v in spectrum]
    used = [False] * len(values)
    reals, pairs = [], []
    for i, v in enumerate(values):
        if used[i]:
            continue
        if abs(v.imag) <= tol:
            reals.append(v.real)
            used[i] = True
            continue
        match = None
        for j in range(i + 1, len(values)):
            if not used[j] and abs(values[j] - v.conjugate()) <= tol:
                match = j
                break
        if match is None:
            raise ParameterError(
                f"spectrum is not closed under conjugation: no partner for {v}")
        used[i] = used[match] = True
        a, b = v.real, abs(v.imag)
        pairs.append((a, b))
    return reals, pairs


def gen_linear_dataset(spectrum, dim, n_traj, steps, rng):
    """Trajectories of ``x_{k+1} = A x_k`` for a matrix with the given spectrum.

    A is block diagonal (2x2 rotation-scalings for conjugate pairs, scalars
    for real eigenvalues) conjugated by a random orthogonal matrix; initial
    states are uniform on the unit sphere. Returns ``(dataset, A)``.
    """
    spectrum = list(spectrum)
    if len(spectrum) != dim:
        raise ParameterError(f"need {dim} eigenvalues, got {len(spectrum)}")
    if n_traj < 1 or steps < 2:
        raise ParameterError("need n_traj >= 1 and steps >= 2")
    reals, pairs = _spectrum_units(spectrum)

    blocks = np.zeros((dim, dim))
    pos = 0
    for a, b in pairs:
        blocks[pos:pos + 2, pos:pos + 2] = [[a, -b], [b, a]]
        pos += 2
    for r in reals:
        blocks[pos, pos] = r
        pos += 1

    g = rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    q = q * np.where(np.diag(r) >= 0, 1.0, -1.0)[None, :]
    a_mat = q @ blocks @ q.T

    states = np.empty((n_traj, steps, dim))
    x0 = rng.normal(size=(n_traj, dim))
    x0 /= np.linalg.norm(x0, axis=1, keepdims=True)
    states[:, 0] = x0
    for k in range(1, steps):
        states[:, k] = states[:, k - 1] @ a_mat.T

    meta = {"generator": "linear",
            "spectrum": [[complex(v).real, complex(v).imag] for v in spectrum],
            "steps": steps}
    trajs = [Trajectory(states[i], 1.0, {"index": i}) for i in range(n_traj)]
    return Dataset(trajs, metadata=meta), a_mat


def standardize_split(dataset, fractions=(0.7, 0.15, 0.15)):
    """Assign contiguous train/val/test splits and standardise features.

    Per-feature mean/std come from the training split only; every split is
    transformed with them. Features with zero spread are flagged constant
    and left unscaled. Returns a new dataset; the input is untouched.
    """
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or min(fr) <= 0 or abs(sum(fr) - 1.0) > 1e-9:
        raise ParameterError(f"fractions must be 3 positive values summing to 1, got {fractions}")
    n = dataset.n_trajectories
    n_train = int(round(fr[0] * n))
    n_val = int(round(fr[1] * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise ParameterError(
            f"{n} trajectories cannot give every split at least one trajectory "
            f"under fractions {fractions}")
    splits = np.concatenate([
        np.full(n_train, SPLIT_TRAIN, dtype=np.uint8),
        np.full(n_val, SPLIT_VAL, dtype=np.uint8),
        np.full(n_test, SPLIT_TEST, dtype=np.uint8),
    ])

    train_states = np.concatenate([dataset.trajectories[i].states
                                   for i in range(n_train)], axis=0)
    mean = train_states.mean(axis=0)
    std = train_states.std(axis=0)
    constant = std == 0.0
    mean = np.where(constant, 0.0, mean)
    scale = np.where(constant, 1.0, std)

    trajs = [Trajectory((t.states - mean) / scale, t.dt, dict(t.metadata))
             for t in dataset.trajectories]
    return Dataset(trajs, splits=splits, mean=mean, std=std,
                   constant_mask=constant, standardized=True,
                   metadata=dict(dataset.metadata))


def inverse_standardize(dataset):
    """Undo ``standardize_split``'s transform (splits and stats retained)."""
    if not dataset.standardized:
        return dataset
    scale = np.where(dataset.constant_mask, 1.0, dataset.std)
    trajs = [Trajectory(t.states * scale + dataset.mean, t.dt, dict(t.metadata))
             for t in dataset.trajectories]
    return Dataset(trajs, splits=dataset.splits.copy(), mean=dataset.mean,
                   std=dataset.std, constant_mask=dataset.constant_mask,
                   standardized=False, metadata=dict(dataset.metadata))


def windows_from_dataset(dataset, split, length, stride=1):
    """Stack all stride-1 (by default) windows of ``length`` states from the
    trajectories of one split into an array (n_windows, length, dim)."""
    if length < 1:
        raise ParameterError(f"window length must be >= 1, got {length}")
    chunks = []
    for i in dataset.indices(split):
        states = dataset.trajectories[i].states
        for start in range(0, states.shape[0] - length + 1, stride):
            chunks.append(states[start:start + length])
    if not chunks:
        return np.empty((0, length, dataset.state_dim))
    return np.stack(chunks, axis=0)


def save_dataset(path, dataset):
    """Write the ``KDS1`` format.

    Layout (little-endian): magic ``KDS1``; u32 version; u32 n_traj; u32
    state dim; f64 dt; u8 standardized flag; u32 metadata length and UTF-8
    JSON ``{"dataset": ..., "trajectories": [...]}``; per trajectory u32
    length, u8 split tag, row-major f64 states; footer u8 stats flag then,
    if set, f64 means, f64 stds, u8 constant-feature mask.
    """
    meta = {"dataset": dataset.metadata,
            "trajectories": [t.metadata for t in dataset.trajectories]}
    meta_blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    dim = dataset.state_dim
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<III", DATASET_VERSION, dataset.n_trajectories, dim))
        fh.write(struct.pack("<d", dataset.dt))
        fh.write(struct.pack("<B", 1 if dataset.standardized else 0))
        fh.write(struct.pack("<I", len(meta_blob)))
        fh.write(meta_blob)
        for traj, tag in zip(dataset.trajectories, dataset.splits):
            fh.write(struct.pack("<IB", traj.states.shape[0], int(tag)))
            fh.write(np.ascontiguousarray(traj.states, dtype="<f8").tobytes())
        if dataset.mean is not None:
            fh.write(struct.pack("<B", 1))
            fh.write(np.ascontiguousarray(dataset.mean, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(dataset.std, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(dataset.constant_mask, dtype=np.uint8).tobytes())
        else:
            fh.write(struct.pack("<B", 0))


def load_dataset(path):
    """Read a ``KDS1`` file; raises FormatError (with byte offset) on damage."""
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0

    def take(count, what):
        nonlocal pos
        if pos + count > len(blob):
            raise FormatError(f"truncated dataset while reading {what}", offset=pos)
        chunk = blob[pos:pos + count]
        pos += count
        return chunk

    magic = take(4, "magic")
    if magic != DATASET_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {DATASET_MAGIC!r}", offset=0)
    version, n_traj, dim = struct.unpack("<III", take(12, "header"))
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    (dt,) = struct.unpack("<d", take(8, "dt"))
    (standardized,) = struct.unpack("<B", take(1, "standardized flag"))
    (meta_len,) = struct.unpack("<I", take(4, "metadata length"))
    try:
        meta = json.loads(take(meta_len, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt metadata: {exc}", offset=pos - meta_len) from None
    traj_meta = meta.get("trajectories", [{} for _ in range(n_traj)])

    trajs = []
    tags = np.empty(n_traj, dtype=np.uint8)
    for i in range(n_traj):
        length, tag = struct.unpack("<IB", take(5, f"trajectory {i} header"))
        if tag not in (SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST):
            raise FormatError(f"invalid split tag {tag}", offset=pos - 1)
        data = take(length * dim * 8, f"trajectory {i} states")
        states = np.frombuffer(data, dtype="<f8").reshape(length, dim).copy()
        trajs.append(Trajectory(states, dt, traj_meta[i]))
        tags[i] = tag

    (has_stats,) = struct.unpack("<B", take(1, "stats flag"))
    mean = std = mask = None
    if has_stats:
        mean = np.frombuffer(take(dim * 8, "means"), dtype="<f8").copy()
        std = np.frombuffer(take(dim * 8, "stds"), dtype="<f8").copy()
        mask = np.frombuffer(take(dim, "constant mask"), dtype=np.uint8).astype(bool)
    if pos != len(blob):
        raise FormatError(f"{len(blob) - pos} trailing bytes after footer", offset=pos)
    return Dataset(trajs, splits=tags, mean=mean, std=std, constant_mask=mask,
                   standardized=bool(standardized), metadata=meta.get("dataset", {}))
