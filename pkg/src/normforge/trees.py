"""Rooted discussion trees: validation, topology queries, and corpus I/O.

A discussion tree is one root post plus reply comments; every comment's
parent appears earlier in the comment list, so the structure is acyclic
and connected by construction. All types are immutable after validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, CorpusFormatError, TreeValidationError

FORMAT_VERSION = 1
UNIT_NORM_TOL = 1e-9


def fmt17(x: float) -> str:
    """Decimal with 17 significant digits; round-trips float64 exactly."""
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class Comment:
    id: str
    parent_id: str | None
    features: np.ndarray
    author_id: str | None = None
    timestamp: int | None = None


@dataclass(eq=False)
class DiscussionTree:
    discussion_id: str
    community_id: str
    comments: tuple[Comment, ...]
    # derived, filled in __post_init__
    index_of: dict[str, int] = field(init=False, repr=False)
    parent_index: np.ndarray = field(init=False, repr=False)
    children: list[list[int]] = field(init=False, repr=False)
    depths: np.ndarray = field(init=False, repr=False)
    root_index: int = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.comments)
        self.index_of = {c.id: i for i, c in enumerate(self.comments)}
        self.parent_index = np.full(n, -1, dtype=np.intp)
        self.children = [[] for _ in range(n)]
        self.depths = np.zeros(n, dtype=np.intp)
        for i, c in enumerate(self.comments):
            if c.parent_id is None:
                self.root_index = i
            else:
                p = self.index_of[c.parent_id]
                self.parent_index[i] = p
                self.children[p].append(i)
                self.depths[i] = self.depths[p] + 1
        # sibling order is by comment id, independent of list order
        for ch in self.children:
            ch.sort(key=lambda j: self.comments[j].id)

    def __len__(self) -> int:
        return len(self.comments)

    @property
    def n_edges(self) -> int:
        return len(self.comments) - 1

    def feature_matrix(self) -> np.ndarray:
        return np.stack([c.features for c in self.comments])


def validate_tree(raw_comments, discussion_id: str = "", community_id: str = "",
                  d_feat: int | None = None) -> DiscussionTree:
    """Validate raw comments into a DiscussionTree, normalizing features.

    Collects every violation (duplicate id, missing parent, multiple
    roots, cycle, dimension mismatch, bad features) before raising.
    """
    comments = list(raw_comments)
    violations = []
    seen: dict[str, int] = {}
    roots = []
    for pos, c in enumerate(comments):
        if c.id in seen:
            violations.append(("duplicate-id", c.id, "comment id appears more than once"))
        else:
            seen[c.id] = pos
        if c.parent_id is None:
            roots.append(c.id)

    if not roots:
        violations.append(("no-root", "", "no comment with absent parent_id"))
    for extra in roots[1:]:
        violations.append(("multiple-roots", extra, "more than one root comment"))

    for pos, c in enumerate(comments):
        if c.parent_id is None:
            continue
        if c.parent_id == c.id:
            violations.append(("cycle", c.id, "comment is its own parent"))
        elif c.parent_id not in seen:
            violations.append(("missing-parent", c.id, f"parent {c.parent_id!r} not in tree"))
        elif seen[c.parent_id] >= pos:
            violations.append(("cycle", c.id, "parent does not precede comment (order is not topological)"))

    dim = d_feat
    normalized = []
    for c in comments:
        f = np.asarray(c.features, dtype=np.float64)
        if f.ndim != 1:
            violations.append(("bad-features", c.id, f"features must be a vector, got shape {f.shape}"))
            normalized.append(c)
            continue
        if dim is None:
            dim = f.size
        if f.size != dim:
            violations.append(("dim-mismatch", c.id, f"feature dim {f.size} != expected {dim}"))
        if not np.all(np.isfinite(f)):
            violations.append(("bad-features", c.id, "non-finite feature entries"))
            normalized.append(c)
            continue
        norm = float(np.linalg.norm(f))
        if norm == 0.0:
            violations.append(("bad-features", c.id, "zero feature vector cannot be normalized"))
            normalized.append(c)
            continue
        normalized.append(Comment(c.id, c.parent_id, f / norm, c.author_id, c.timestamp))

    if violations:
        raise TreeValidationError(violations)
    return DiscussionTree(discussion_id, community_id, tuple(normalized))


def _require_node(tree: DiscussionTree, node_id: str) -> int:
    if node_id not in tree.index_of:
        raise ContractError(f"unknown node id {node_id!r} in discussion {tree.discussion_id!r}",
                            module="trees", code="UNKNOWN_NODE")
    return tree.index_of[node_id]


def depth_of(tree: DiscussionTree, node_id: str) -> int:
    return int(tree.depths[_require_node(tree, node_id)])


def lca_index(tree: DiscussionTree, i: int, j: int) -> int:
    """Lowest common ancestor by walking the deeper node up first."""
    di, dj = int(tree.depths[i]), int(tree.depths[j])
    while di > dj:
        i = int(tree.parent_index[i])
        di -= 1
    while dj > di:
        j = int(tree.parent_index[j])
        dj -= 1
    while i != j:
        i = int(tree.parent_index[i])
        j = int(tree.parent_index[j])
    return i

def tree_distance(tree: DiscussionTree, u: str, v: str) -> int:
    """Path length between u and v: depth(u) + depth(v) - 2*depth(lca)."""
    i = _require_node(tree, u)
    j = _require_node(tree, v)
    a = lca_index(tree, i, j)
    return int(tree.depths[i] + tree.depths[j] - 2 * tree.depths[a])


def branches(tree: DiscussionTree) -> list[set[str]]:
    """One id-set per depth-1 child: the full subtree under that child."""
    out = []
    for child in tree.children[tree.root_index]:
        members = set()
        stack = [child]
        while stack:
            k = stack.pop()
            members.add(tree.comments[k].id)
            stack.extend(tree.children[k])
        out.append(members)
    return out


@dataclass(eq=False)
class Corpus:
    trees: list[DiscussionTree]
    grouping: dict[str, str]
    d_feat: int

    def __post_init__(self):
        unmapped = sorted({t.community_id for t in self.trees} - set(self.grouping))
        if unmapped:
            raise CorpusFormatError(
                f"grouping is missing communities: {', '.join(unmapped)}",
                code="GROUPING_INCOMPLETE")
        bad = [t.discussion_id for t in self.trees
               if t.comments and t.comments[0].features.size != self.d_feat]
        if bad:
            raise CorpusFormatError(
                f"trees with feature dim != {self.d_feat}: {', '.join(bad[:5])}",
                code="DIM_MISMATCH")

    def group_of(self, tree: DiscussionTree) -> str:
        return self.grouping[tree.community_id]

    def group_ids(self) -> list[str]:
        return sorted(set(self.grouping[t.community_id] for t in self.trees))

    def trees_by_group(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, t in enumerate(self.trees):
            out.setdefault(self.group_of(t), []).append(i)
        return {g: out[g] for g in sorted(out)}


def _comment_json(c: Comment) -> str:
    parts = [f'"id":{json.dumps(c.id)}',
             f'"parent_id":{json.dumps(c.parent_id)}',
             '"features":[' + ",".join(fmt17(x) for x in c.features) + "]"]
    if c.author_id is not None:
        parts.append(f'"author_id":{json.dumps(c.author_id)}')
    if c.timestamp is not None:
        parts.append(f'"timestamp":{int(c.timestamp)}')
    return "{" + ",".join(parts) + "}"


def _tree_json(tree: DiscussionTree) -> str:
    comments = ",".join(_comment_json(c) for c in tree.comments)
    return ('{"discussion_id":' + json.dumps(tree.discussion_id)
            + ',"community_id":' + json.dumps(tree.community_id)
            + ',"comments":[' + comments + "]}")


def write_corpus(corpus: Corpus, path) -> None:
    """JSON-lines: a header object, then one discussion tree per line."""
    grouping = ",".join(f"{json.dumps(k)}:{json.dumps(corpus.grouping[k])}"
                        for k in sorted(corpus.grouping))
    header = (f'{{"format_version":{FORMAT_VERSION},"d_feat":{corpus.d_feat},'
              + '"grouping":{' + grouping + "}}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for tree in corpus.trees:
            fh.write(_tree_json(tree) + "\n")


def _parse_comment(obj, line_no: int) -> Comment:
    try:
        return Comment(id=str(obj["id"]),
                       parent_id=None if obj["parent_id"] is None else str(obj["parent_id"]),
                       features=np.asarray(obj["features"], dtype=np.float64),
                       author_id=obj.get("author_id"),
                       timestamp=obj.get("timestamp"))
    except KeyError as e:
        raise CorpusFormatError(f"comment missing key {e}", line=line_no) from e


def read_corpus_parts(path) -> tuple[int, dict[str, str], list[DiscussionTree]]:
    """Parse a corpus file without enforcing grouping completeness."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorpusFormatError("empty corpus file", code="CORPUS_EMPTY")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"malformed header: {e.msg}", line=1, offset=e.pos) from e
    if not isinstance(header, dict) or "d_feat" not in header:
        raise CorpusFormatError("header must carry d_feat", line=1, code="HEADER_MISSING_DFEAT")
    if header.get("format_version") != FORMAT_VERSION:
        raise CorpusFormatError(f"unsupported format_version {header.get('format_version')!r}",
                                line=1, code="FORMAT_VERSION")
    d_feat = int(header["d_feat"])
    grouping = {str(k): str(v) for k, v in header.get("grouping", {}).items()}

    trees = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorpusFormatError(f"malformed tree line: {e.msg}", line=line_no, offset=e.pos) from e
        try:
            comments = [_parse_comment(c, line_no) for c in obj["comments"]]
            tree = validate_tree(comments, discussion_id=str(obj["discussion_id"]),
                                 community_id=str(obj["community_id"]), d_feat=d_feat)
        except KeyError as e:
            raise CorpusFormatError(f"tree object missing key {e}", line=line_no) from e
        except TreeValidationError as e:
            raise CorpusFormatError(f"invalid tree: {e}", line=line_no, code="TREE_INVALID") from e
        trees.append(tree)
    return d_feat, grouping, trees


def read_corpus(path) -> Corpus:
    d_feat, grouping, trees = read_corpus_parts(path)
    return Corpus(trees=trees, grouping=grouping, d_feat=d_feat)


def split_corpus(corpus: Corpus, holdout_fraction: float, rng) -> tuple[Corpus, Corpus]:
    """Deterministic per-community split into (train, holdout)."""
    by_community: dict[str, list[int]] = {}
    for i, t in enumerate(corpus.trees):
        by_community.setdefault(t.community_id, []).append(i)
    hold: set[int] = set()
    for community in sorted(by_community):
        idx = by_community[community]
        order = rng.derive(hash_str(community)).permutation(len(idx))
        k = int(round(holdout_fraction * len(idx)))
        hold.update(idx[order[j]] for j in range(k))
    train = [t for i, t in enumerate(corpus.trees) if i not in hold]
    held = [t for i, t in enumerate(corpus.trees) if i in hold]
    return (Corpus(train, dict(corpus.grouping), corpus.d_feat),
            Corpus(held, dict(corpus.grouping), corpus.d_feat))


def hash_str(s: str) -> int:
    """Stable 63-bit FNV-1a hash (Python's hash() is salted per process)."""
    h = 0xcbf29ce484222325
    for b in s.encode("utf-8"):
        h = ((h ^ b) * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h >> 1
