"""Item catalog: clustered unit-norm content vectors plus a category id."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from est.data.config import GenConfig
from est.errors import ConfigError
from est.seeding import rng_for


@dataclass
class Catalog:
    content: np.ndarray         # (num_items, d_m) float32, unit rows
    item_category: np.ndarray   # (num_items,) uint32, the item's cluster
    cluster_centers: np.ndarray  # (clusters, d_m) float32, unit rows

    @property
    def num_items(self) -> int:
        return self.content.shape[0]

    @property
    def d_m(self) -> int:
        return self.content.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, Catalog)
            and np.array_equal(self.content, other.content)
            and np.array_equal(self.item_category, other.item_category)
            and np.array_equal(self.cluster_centers, other.cluster_centers)
        )


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return x / norms


def generate_catalog(cfg: GenConfig) -> Catalog:
    """Items = normalize(cluster center + Gaussian noise), clusters uniform on
    the sphere; fully determined by cfg.seed."""
    cfg.validate()
    if cfg.num_items < cfg.clusters:
        raise ConfigError(f"num_items={cfg.num_items} < clusters={cfg.clusters}")
    rng = rng_for(cfg.seed, "catalog")
    centers = _unit_rows(rng.standard_normal((cfg.clusters, cfg.d_m)))
    category = (np.arange(cfg.num_items) % cfg.clusters).astype(np.uint32)
    rng.shuffle(category)
    noise = rng.standard_normal((cfg.num_items, cfg.d_m)) * cfg.content_noise
    content = _unit_rows(centers[category] + noise)
    return Catalog(
        content=content.astype(np.float32),
        item_category=category,
        cluster_centers=centers.astype(np.float32),
    )
