"""File ingestion and export.

Formats (all plain text, '#' starts a comment):
  edges   : one "src dst" pair per line, whitespace separated, undirected
  features: CSV, one row per node in id order (optional single header row)
  labels  : "node_id label_id" per line; absent nodes are unlabeled
  splits  : "node_id {train|val|test}" per line

A comment of the form "# nodes: N" (or "# nodes=N") in the edge file
overrides the inferred node count (1 + max node id). Non-integer node ids
are remapped to dense 0-based integers in first-seen order and the mapping
is persisted next to the edge file as <edge_path>.idmap.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError
from .graph import Graph, IngestStats, canonical_edges

log = logging.getLogger(__name__)

_NODES_HEADER = re.compile(r"#\s*nodes\s*[:=]\s*(\d+)")

__all__ = ["load_graph", "save_edge_list", "convert_webkb"]


def _strip(line: str) -> str:
    hash_pos = line.find("#")
    if hash_pos >= 0:
        line = line[:hash_pos]
    return line.strip()


class _IdMapper:
    """Maps raw node tokens to dense ids; integers pass through when the
    whole file is integral, otherwise everything is remapped."""

    def __init__(self):
        self.mapping: dict[str, int] = {}
        self.all_int = True

    def resolve(self, token: str) -> int:
        if token not in self.mapping:
            self.mapping[token] = len(self.mapping)
        return self.mapping[token]


def _read_edge_file(path):
    raw_lines = 0
    pairs = []
    header_nodes = None
    mapper = _IdMapper()
    tokens_seen = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            m = _NODES_HEADER.search(line)
            if m:
                header_nodes = int(m.group(1))
            body = _strip(line)
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ParseError(path, line_no, f"expected 2 tokens, got {len(parts)}")
            raw_lines += 1
            tokens_seen.append((line_no, parts[0], parts[1]))
    try:
        pairs = [(int(a), int(b)) for _, a, b in tokens_seen]
        if pairs and min(min(p) for p in pairs) < 0:
            raise ValueError
        remapped = 0
    except ValueError:
        pairs = [(mapper.resolve(a), mapper.resolve(b)) for _, a, b in tokens_seen]
        remapped = len(mapper.mapping)
    edges = canonical_edges(np.array(pairs, dtype=np.int64).reshape(-1, 2))
    inferred = 0 if edges.size == 0 else int(edges.max()) + 1
    n = header_nodes if header_nodes is not None else inferred
    if edges.size and inferred > n:
        raise DataError(
            f"{path}: header says {n} nodes but max node id is {inferred - 1}"
        )
    return n, edges, raw_lines, mapper.mapping if remapped else None


def _resolve_id(token: str, idmap, n: int, path, line_no: int) -> int:
    if idmap is not None:
        if token not in idmap:
            raise ParseError(path, line_no, f"unknown node id {token!r}")
        return idmap[token]
    try:
        i = int(token)
    except ValueError:
        raise ParseError(path, line_no, f"non-integer node id {token!r}") from None
    if not 0 <= i < n:
        raise ParseError(path, line_no, f"node id {i} out of range [0, {n})")
    return i


def _read_features(path, n: int, skip_header: bool) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if skip_header and line_no == 1:
                continue
            body = _strip(line)
            if not body:
                continue
            try:
                rows.append([float(t) for t in body.split(",")])
            except ValueError as exc:
                raise ParseError(path, line_no, f"bad feature value ({exc})") from None
    if len(rows) != n:
        raise DataError(f"{path}: feature row count {len(rows)} != node count {n}")
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise DataError(f"{path}: inconsistent feature row widths {sorted(widths)}")
    return np.array(rows, dtype=np.float64)


def _read_labels(path, n: int, idmap) -> np.ndarray:
    y = np.full(n, -1, dtype=np.int64)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = _strip(line)
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ParseError(path, line_no, f"expected 2 tokens, got {len(parts)}")
            i = _resolve_id(parts[0], idmap, n, path, line_no)
            try:
                y[i] = int(parts[1])
            except ValueError:
                raise ParseError(path, line_no, f"bad label {parts[1]!r}") from None
            if y[i] < 0:
                raise ParseError(path, line_no, f"label must be >= 0, got {y[i]}")
    return y


def _read_splits(path, n: int, idmap):
    masks = {
        "train": np.zeros(n, dtype=bool),
        "val": np.zeros(n, dtype=bool),
        "test": np.zeros(n, dtype=bool),
    }
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = _strip(line)
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2 or parts[1] not in masks:
                raise ParseError(
                    path, line_no, "expected 'node_id {train|val|test}'"
                )
            masks[parts[1]][_resolve_id(parts[0], idmap, n, path, line_no)] = True
    return masks


def load_graph(
    edge_path,
    feature_path=None,
    label_path=None,
    split_path=None,
    skip_feature_header: bool = False,
    idmap_path=None,
) -> Graph:
    """Load a Graph from text files. See the module docstring for formats.

    Duplicate edges are deduplicated; both the raw line count and the
    deduplicated count are reported in Graph.ingest.
    """
    n, edges, raw_lines, idmap = _read_edge_file(edge_path)
    if idmap:
        target = Path(idmap_path) if idmap_path else Path(str(edge_path) + ".idmap")
        try:
            with open(target, "w", encoding="utf-8") as fh:
                for token, idx in sorted(idmap.items(), key=lambda kv: kv[1]):
                    fh.write(f"{token}\t{idx}\n")
        except OSError as exc:  # mapping still usable in-memory
            log.warning("could not persist id map to %s: %s", target, exc)
    features = labels = None
    masks = {"train": None, "val": None, "test": None}
    if feature_path is not None:
        features = _read_features(feature_path, n, skip_feature_header)
    if label_path is not None:
        labels = _read_labels(label_path, n, idmap)
    if split_path is not None:
        masks = _read_splits(split_path, n, idmap)
    self_loops = int(np.sum(edges[:, 0] == edges[:, 1])) if edges.size else 0
    stats = IngestStats(
        raw_edge_lines=raw_lines,
        dedup_edges=int(edges.shape[0]),
        self_loops=self_loops,
        remapped_ids=len(idmap) if idmap else 0,
    )
    return Graph(
        num_nodes=n,
        edges=edges,
        features=features,
        labels=labels,
        train_mask=masks["train"],
        val_mask=masks["val"],
        test_mask=masks["test"],
        ingest=stats,
    )


def save_edge_list(path, num_nodes: int, edges, header_comment: str | None = None):
    """Write an edge list in the native format, with a node-count header."""
    e = canonical_edges(edges)
    with open(path, "w", encoding="utf-8") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"# nodes: {num_nodes}\n")
        for u, v in e:
            fh.write(f"{u} {v}\n")


def convert_webkb(graph_edges_path, node_feature_label_path, out_dir):
    """Convert the common out1_graph_edges.txt / out1_node_feature_label.txt
    layout into the native edges/features/labels files. Returns the three
    output paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs = []
    with open(graph_edges_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.strip()
            if not body:
                continue
            parts = body.split()
            if line_no == 1 and not all(p.lstrip("-").isdigit() for p in parts):
                continue  # header row
            if len(parts) != 2:
                raise ParseError(graph_edges_path, line_no, "expected 2 tokens")
            pairs.append((int(parts[0]), int(parts[1])))
    feats = {}
    labels = {}
    with open(node_feature_label_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.strip()
            if not body:
                continue
            parts = body.split("\t")
            if line_no == 1 and not parts[0].isdigit():
                continue
            if len(parts) != 3:
                raise ParseError(
                    node_feature_label_path, line_no, "expected 3 tab-separated fields"
                )
            i = int(parts[0])
            feats[i] = parts[1].replace(",", " ").split()
            labels[i] = int(parts[2])
    n = max(max(feats), max(u for p in pairs for u in p)) + 1
    edge_out = out / "edges.txt"
    save_edge_list(edge_out, n, np.array(pairs, dtype=np.int64))
    feat_out = out / "features.csv"
    width = len(next(iter(feats.values())))
    with open(feat_out, "w", encoding="utf-8") as fh:
        for i in range(n):
            row = feats.get(i, ["0"] * width)
            fh.write(",".join(row) + "\n")
    label_out = out / "labels.txt"
    with open(label_out, "w", encoding="utf-8") as fh:
        for i in range(n):
            if i in labels:
                fh.write(f"{i} {labels[i]}\n")
    return edge_out, feat_out, label_out
