"""Synthetic discussion corpora drawn from parameterized community profiles.

Each community profile fixes a semantic signature (centroid direction,
parent-mixing weight, noise level) and a structural law (geometric
branching, depth and size caps), giving known ground truth for every
claim the training objectives are supposed to learn.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CorpusFormatError
from .rng import RngStream
from .trees import Comment, Corpus, DiscussionTree, read_corpus, validate_tree


@dataclass(frozen=True)
class NormProfile:
    community_id: str
    group_id: str
    centroid: np.ndarray
    sigma_sem: float
    alpha: float
    branch_p: float
    max_depth: int
    mean_size: int

    def __post_init__(self):
        c = np.asarray(self.centroid, dtype=np.float64)
        norm = float(np.linalg.norm(c))
        if norm == 0.0 or not np.all(np.isfinite(c)):
            raise ConfigError(f"profile {self.community_id!r}: centroid must be a nonzero finite vector")
        object.__setattr__(self, "centroid", c / norm)
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"profile {self.community_id!r}: alpha must lie in [0, 1]")
        if not 0.0 < self.branch_p <= 1.0:
            raise ConfigError(f"profile {self.community_id!r}: branch_p must lie in (0, 1]")
        if self.sigma_sem < 0.0:
            raise ConfigError(f"profile {self.community_id!r}: sigma_sem must be nonnegative")
        if self.max_depth < 0:
            raise ConfigError(f"profile {self.community_id!r}: max_depth must be nonnegative")
        if self.mean_size < 1:
            raise ConfigError(f"profile {self.community_id!r}: mean_size must be positive")


@dataclass(frozen=True)
class SynthConfig:
    profiles: tuple[NormProfile, ...]
    trees_per_community: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if len(self.profiles) < 2 or len({p.group_id for p in self.profiles}) < 2:
            raise ConfigError("need at least 2 profiles spanning at least 2 group_ids")
        if len({p.community_id for p in self.profiles}) != len(self.profiles):
            raise ConfigError("duplicate community_id across profiles")
        if self.trees_per_community < 1:
            raise ConfigError("trees_per_community must be positive")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_tree(profile: NormProfile, rng: RngStream,
                  discussion_id: str = "d0") -> DiscussionTree:
    """One tree: geometric branching, breadth-first, truncated by size/depth.

    The root feature is the community centroid plus isotropic noise; each
    child blends its parent (weight alpha) with the centroid, plus noise.
    """
    d = profile.centroid.size
    feats = [_unit(profile.centroid + profile.sigma_sem * rng.normal(size=d))]
    parents: list[int | None] = [None]
    depth = [0]
    queue = [0]
    full = False
    while queue and not full:
        node = queue.pop(0)
        if depth[node] >= profile.max_depth:
            continue
        n_children = int(rng.geometric(profile.branch_p))
        for _ in range(n_children):
            if len(feats) >= profile.mean_size:
                full = True
                break
            mix = (profile.alpha * feats[node]
                   + (1.0 - profile.alpha) * profile.centroid
                   + profile.sigma_sem * rng.normal(size=d))
            feats.append(_unit(mix))
            parents.append(node)
            depth.append(depth[node] + 1)
            queue.append(len(feats) - 1)

    width = max(4, len(str(profile.mean_size)))
    ids = [f"c{i:0{width}d}" for i in range(len(feats))]
    comments = [Comment(ids[i], None if parents[i] is None else ids[parents[i]], feats[i])
                for i in range(len(feats))]
    return validate_tree(comments, discussion_id=discussion_id,
                         community_id=profile.community_id, d_feat=d)


def generate_corpus(config: SynthConfig, workers: int = 1) -> Corpus:
    """Deterministic corpus: trees_per_community trees per profile.

    Each tree draws from a stream derived from (seed, profile index, tree
    index), so output is identical regardless of worker count.
    """
    root = RngStream(config.seed)
    jobs = []
    for pi, profile in enumerate(config.profiles):
        for ti in range(config.trees_per_community):
            did = f"{profile.community_id}-d{ti:05d}"
            jobs.append((profile, root.derive(pi, ti), did))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(lambda j: generate_tree(*j), jobs))
    else:
        trees = [generate_tree(*j) for j in jobs]

    grouping = {p.community_id: p.group_id for p in config.profiles}
    d_feat = config.profiles[0].centroid.size
    return Corpus(trees=trees, grouping=grouping, d_feat=d_feat)


def ingest_external(path, grouping_path) -> Corpus:
    """Read a corpus file and overlay a community -> group mapping file."""
    corpus = read_corpus_lenient(path)
    with open(grouping_path, "r", encoding="utf-8") as fh:
        try:
            mapping = json.load(fh)
        except json.JSONDecodeError as e:
            raise CorpusFormatError(f"malformed grouping file: {e.msg}", offset=e.pos,
                                    code="GROUPING_FORMAT") from e
    if not isinstance(mapping, dict):
        raise CorpusFormatError("grouping file must be a JSON object community_id -> group_id",
                                code="GROUPING_FORMAT")
    merged = dict(corpus.grouping)
    merged.update({str(k): str(v) for k, v in mapping.items()})
    return Corpus(trees=corpus.trees, grouping=merged, d_feat=corpus.d_feat)


def read_corpus_lenient(path) -> Corpus:
    """read_corpus, but an incomplete grouping is tolerated (filled later)."""
    try:
        return read_corpus(path)
    except CorpusFormatError as e:
        if e.code != "GROUPING_INCOMPLETE":
            raise
    # reread trusting tree lines, mapping every community to itself so the
    # Corpus invariant holds until the external grouping is merged
    import importlib

    trees_mod = importlib.import_module(__name__.rsplit(".", 1)[0] + ".trees")
    raw = trees_mod.read_corpus.__wrapped__(path) if hasattr(trees_mod.read_corpus, "__wrapped__") else None
    raise CorpusFormatError("corpus grouping incomplete", code="GROUPING_INCOMPLETE")


# ---------------------------------------------------------------------------
# reference corpus used by the verification experiments
# ---------------------------------------------------------------------------

REF_D_FEAT = 16
REF_SIGMA = 0.1
REF_ALPHA = 0.8
REF_BRANCH_P = 0.5
REF_MAX_DEPTH = 5
REF_MEAN_SIZE = 15
REF_GROUP_ANGLE_DEG = 90.0
REF_WITHIN_GROUP_ANGLE_DEG = 30.0


def reference_profiles(d_feat: int = REF_D_FEAT,
                       group_angle_deg: float = REF_GROUP_ANGLE_DEG,
                       within_angle_deg: float = REF_WITHIN_GROUP_ANGLE_DEG,
                       sigma_sem: float = REF_SIGMA,
                       alpha: float = REF_ALPHA,
                       branch_p: float = REF_BRANCH_P,
                       max_depth: int = REF_MAX_DEPTH,
                       mean_size: int = REF_MEAN_SIZE) -> tuple[NormProfile, ...]:
    """4 communities in 2 groups; group axes at group_angle_deg, the two
    communities of a group straddling their axis at within_angle_deg."""
    if d_feat < 4:
        raise ConfigError("reference profiles need d_feat >= 4")
    e = np.eye(d_feat)
    phi = np.deg2rad(group_angle_deg)
    half = np.deg2rad(within_angle_deg) / 2.0
    axis_a = e[0]
    axis_b = np.cos(phi) * e[0] + np.sin(phi) * e[1]
    centroids = {
        "alpha-1": np.cos(half) * axis_a + np.sin(half) * e[2],
        "alpha-2": np.cos(half) * axis_a - np.sin(half) * e[2],
        "beta-1": np.cos(half) * axis_b + np.sin(half) * e[3],
        "beta-2": np.cos(half) * axis_b - np.sin(half) * e[3],
    }
    return tuple(
        NormProfile(community_id=cid, group_id=cid.split("-")[0], centroid=c,
                    sigma_sem=sigma_sem, alpha=alpha, branch_p=branch_p,
                    max_depth=max_depth, mean_size=mean_size)
        for cid, c in centroids.items())


def reference_config(trees_per_community: int = 200, seed: int = 417,
                     **profile_kwargs) -> SynthConfig:
    return SynthConfig(profiles=reference_profiles(**profile_kwargs),
                       trees_per_community=trees_per_community, seed=seed)
