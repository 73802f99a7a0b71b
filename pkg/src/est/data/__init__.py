from est.data.catalog import Catalog, generate_catalog
from est.data.config import PAD_SENTINEL, GenConfig
from est.data.generate import (
    Candidate,
    Request,
    Sample,
    click_probability,
    generate_dataset,
    generate_requests,
    gsu_retrieve,
    interaction_score,
    request_samples,
    valid_items,
)
from est.data.io import export_truth_csv, read_dataset, write_dataset

__all__ = [
    "Catalog",
    "generate_catalog",
    "PAD_SENTINEL",
    "GenConfig",
    "Candidate",
    "Request",
    "Sample",
    "click_probability",
    "generate_dataset",
    "generate_requests",
    "gsu_retrieve",
    "interaction_score",
    "request_samples",
    "valid_items",
    "export_truth_csv",
    "read_dataset",
    "write_dataset",
]
