"""Seeded synthetic datasets with a planted correlation structure.

Within every instance the latent series are centered and exactly orthonormal,
so the correlation between two variables is fixed by how they mix the
latents and does not depend on the draw. Only the class signal and the
per-variable scale/offset vary between instances.
"""

from __future__ import annotations

import numpy as np

from .mts import MtsDataset

MASTITIS_VARIABLES = (
    "Milk Index",
    "Rumination Index",
    "Adjusted Temperature",
    "Temperature Excluding Drinking",
    "Raw Temperature",
    "Activity",
)


def orthonormal_latents(rng: np.random.Generator, n_timesteps: int, k: int, lead: np.ndarray | None = None) -> np.ndarray:
    """``k`` centered series with unit population variance and zero mutual correlation.

    If ``lead`` is given, the first latent is ``lead`` itself (centered and scaled).
    """
    if n_timesteps <= k:
        raise ValueError(f"need more than {k} timesteps for {k} orthogonal latents")
    raw = rng.standard_normal((n_timesteps, k))
    if lead is not None:
        raw[:, 0] = lead
    raw -= raw.mean(axis=0)
    q, r = np.linalg.qr(raw)
    q = q * np.sign(np.diag(r))
    return (q * np.sqrt(n_timesteps)).T


def _class_wave(label: int, n_timesteps: int, rng, jitter: float) -> np.ndarray:
    t = np.arange(n_timesteps) / n_timesteps
    freq = 2 + label
    phase = 0.3 * label + jitter * rng.standard_normal()
    return np.sin(2 * np.pi * freq * t + phase) + 0.3 * rng.standard_normal(n_timesteps)


def make_block_dataset(n_instances: int = 40, n_timesteps: int = 64, n_block: int = 5, n_noise: int = 1,
                       ring_scale: float = 0.2, n_classes: int = 2, class_offset: float = 0.0,
                       noise_amplitude: float = 1.0, exact_noise: bool = True, jitter: float = 0.3,
                       seed: int = 0) -> MtsDataset:
    """A correlated block of ``n_block`` variables plus ``n_noise`` independent ones.

    Block variable k is ``a + ring_scale * (cos(phi_k) b + sin(phi_k) c)`` with
    ``phi_k = 2 pi k / n_block``, where ``a`` carries the class signal. Its
    correlation with block variable j is
    ``(1 + ring_scale**2 cos(phi_k - phi_j)) / (1 + ring_scale**2)``, which places
    the block on a small circle and gives it one loop. Noise variables are
    uncorrelated with everything (exactly so when ``exact_noise``; otherwise
    plain i.i.d. draws).
    """
    rng = np.random.default_rng(seed)
    labels = [k % n_classes for k in range(n_instances)]
    phi = 2 * np.pi * np.arange(n_block) / n_block
    values = np.empty((n_instances, n_block + n_noise, n_timesteps))
    n_lat = 3 + (n_noise if exact_noise else 0)
    for i, lab in enumerate(labels):
        lat = orthonormal_latents(rng, n_timesteps, n_lat, lead=_class_wave(lab, n_timesteps, rng, jitter))
        a, b, c = lat[:3]
        for k in range(n_block):
            values[i, k] = a + ring_scale * (np.cos(phi[k]) * b + np.sin(phi[k]) * c) + class_offset * lab
        for k in range(n_noise):
            noise = lat[3 + k] if exact_noise else rng.standard_normal(n_timesteps)
            values[i, n_block + k] = noise_amplitude * noise
        scale = rng.uniform(0.5, 2.0, size=n_block + n_noise)
        shift = rng.uniform(-1.0, 1.0, size=n_block + n_noise)
        values[i] = values[i] * scale[:, None] + shift[:, None]
    names = [f"block{k}" for k in range(n_block)] + [f"noise{k}" for k in range(n_noise)]
    return MtsDataset(values, tuple(names), tuple(f"i{k:03d}" for k in range(n_instances)),
                      tuple(f"c{lab}" for lab in labels))


def make_mastitis_like(n_instances: int = 30, n_timesteps: int = 48, fever: float = 1.5, seed: int = 0) -> MtsDataset:
    """Six sensor-like variables arranged as two correlated groups and one loner.

    Milk and rumination indices form one pair; the three temperature readings
    form a path through "Temperature Excluding Drinking"; activity is
    uncorrelated with the rest. The median-death-time pipeline keeps exactly
    the three edges of that structure and prunes activity. Sick instances get
    their temperatures shifted up by ``fever``.
    """
    rng = np.random.default_rng(seed)
    values = np.empty((n_instances, 6, n_timesteps))
    labels = []
    t = np.arange(n_timesteps) / n_timesteps
    for i in range(n_instances):
        sick = i % 2
        lead = np.sin(2 * np.pi * t) + (0.8 * t if sick else 0) + 0.2 * rng.standard_normal(n_timesteps)
        temp_lat, milk, milk_dev, adj_dev, raw_dev, act = orthonormal_latents(rng, n_timesteps, 6, lead=lead)
        values[i, 0] = milk
        values[i, 1] = milk + 0.2 * milk_dev
        values[i, 2] = temp_lat + 0.25 * adj_dev
        values[i, 3] = temp_lat
        values[i, 4] = temp_lat + 0.3 * raw_dev
        values[i, 5] = act
        values[i] = values[i] * rng.uniform(0.5, 2.0, size=(6, 1)) + rng.uniform(-1, 1, size=(6, 1))
        values[i, 2:5] += fever * sick
        labels.append("mastitis" if sick else "healthy")
    return MtsDataset(values, MASTITIS_VARIABLES, tuple(f"cow{k:03d}" for k in range(n_instances)), tuple(labels))


def make_uncorrelated(n_instances: int = 2, n_vars: int = 4, n_timesteps: int = 16) -> MtsDataset:
    """Variables whose pairwise correlation is exactly 0 (rows of a Hadamard matrix)."""
    from scipy.linalg import hadamard

    h = hadamard(n_timesteps).astype(float)
    if n_vars >= n_timesteps:
        raise ValueError("need n_vars < n_timesteps")
    panel = h[1:n_vars + 1]
    values = np.stack([panel * (k + 1) for k in range(n_instances)])
    return MtsDataset(values, tuple(f"v{k}" for k in range(n_vars)))


def make_square_fixture(n_instances: int = 1, n_timesteps: int = 16) -> MtsDataset:
    """Four variables whose correlation distances are exactly a unit square.

    Adjacent variables correlate at 0.5 (distance 1) and opposite ones at 0
    (distance sqrt(2)). Built from integer Hadamard rows so every step of the
    correlation is exact in floating point.
    """
    from scipy.linalg import hadamard

    h = hadamard(n_timesteps).astype(float)[1:5]
    panel = np.stack([h[0], h[0] + h[1] + h[2] + h[3], h[1], h[0] + h[1] - h[2] - h[3]])
    return MtsDataset(np.stack([panel] * n_instances), ("north", "east", "south", "west"))
