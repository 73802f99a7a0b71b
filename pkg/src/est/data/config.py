"""Generator configuration and the categorical feature schema."""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields

from est.errors import ConfigError

PAD_SENTINEL = 0xFFFFFFFF


@dataclass
class GenConfig:
    """Knobs for the synthetic CTR log generator.

    The planted click model is
        p = sigmoid((w_int * s_bar + w_prof * g + bias) / label_temperature)
    where s_bar is the mean cosine similarity between the candidate's content
    vector and the top-5 most similar items in the user's history, and g is a
    fixed user-group x item-category affinity. s_bar is what makes token-level
    candidate-behavior interaction informative beyond pooled summaries.
    """

    num_users: int = 50_000
    num_items: int = 20_000
    clusters: int = 8
    d_m: int = 32
    l_max_u: int = 64
    l_max_l: int = 512
    l_bc: int = 16
    n_requests: int = 100_000
    candidates_per_request: int = 10
    user_groups: int = 16
    activity_buckets: int = 8
    pop_buckets: int = 8
    interests_per_user: int = 2
    w_int: float = 4.0
    w_prof: float = 1.0
    bias: float = -2.0
    label_temperature: float = 1.0
    content_noise: float = 0.35
    candidate_interest_prob: float = 0.5
    behavior_noise_prob: float = 0.1
    seed: int = 0

    # serialized layout: these u32/u64 fields, then the f64 fields, in order
    U32_FIELDS = (
        "num_users", "num_items", "clusters", "d_m", "l_max_u", "l_max_l",
        "l_bc", "n_requests", "candidates_per_request", "user_groups",
        "activity_buckets", "pop_buckets", "interests_per_user",
    )
    F64_FIELDS = (
        "w_int", "w_prof", "bias", "label_temperature", "content_noise",
        "candidate_interest_prob", "behavior_noise_prob",
    )

    def validate(self):
        if self.clusters < 1 or self.num_items < self.clusters:
            raise ConfigError(f"need num_items >= clusters >= 1, got {self.num_items} and {self.clusters}")
        if self.num_users < 1 or self.n_requests < 1 or self.candidates_per_request < 1:
            raise ConfigError("num_users, n_requests and candidates_per_request must be positive")
        if self.l_bc > self.l_max_l:
            raise ConfigError(f"l_bc={self.l_bc} exceeds l_max_l={self.l_max_l}")
        if self.d_m < 1 or self.l_max_u < 1 or self.l_max_l < 1 or self.l_bc < 1:
            raise ConfigError("dimensions and sequence capacities must be positive")
        for name in self.F64_FIELDS:
            v = float(getattr(self, name))
            if not (v == v and abs(v) != float("inf")):
                raise ConfigError(f"{name} must be finite")
        if self.label_temperature <= 0:
            raise ConfigError("label_temperature must be positive")
        if self.interests_per_user < 1 or self.interests_per_user > self.clusters:
            raise ConfigError("interests_per_user must be in [1, clusters]")
        return self

    def field_schema(self):
        """Non-behavioral categorical fields: (name, vocabulary size, side)."""
        return [
            ("user_group", self.user_groups, "user"),
            ("user_activity", self.activity_buckets, "user"),
            ("cand_category", self.clusters, "candidate"),
            ("cand_pop", self.pop_buckets, "candidate"),
        ]

    def user_field_names(self):
        return [n for n, _, side in self.field_schema() if side == "user"]

    def candidate_field_names(self):
        return [n for n, _, side in self.field_schema() if side == "candidate"]


def gen_config_field_names():
    return [f.name for f in dc_fields(GenConfig)]
