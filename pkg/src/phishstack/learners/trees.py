"""Flat-array tree ensembles.

Fitted scikit-learn trees are flattened into parallel node arrays so that
inference and serialization do not depend on estimator internals. Thresholds
are compared against float32-rounded inputs, as scikit-learn does, which
keeps predictions identical to the fitted estimator.
"""

import numpy as np

LEAF = -1
_CHUNK = 4096


def flatten_trees(trees, leaf_value):
    """Concatenate sklearn ``Tree`` objects into one node table.

    ``leaf_value(tree)`` maps a tree to its per-node output vector.
    """
    left, right, feature, threshold, value, roots = [], [], [], [], [], []
    offset = 0
    for t in trees:
        n = t.node_count
        l = t.children_left.astype(np.int64)
        r = t.children_right.astype(np.int64)
        left.append(np.where(l == LEAF, LEAF, l + offset))
        right.append(np.where(r == LEAF, LEAF, r + offset))
        feature.append(np.maximum(t.feature.astype(np.int64), 0))
        threshold.append(t.threshold.astype(np.float64))
        value.append(np.asarray(leaf_value(t), dtype=np.float64))
        roots.append(offset)
        offset += n
    return {
        "tree_left": np.concatenate(left),
        "tree_right": np.concatenate(right),
        "tree_feature": np.concatenate(feature),
        "tree_threshold": np.concatenate(threshold),
        "tree_value": np.concatenate(value),
        "tree_roots": np.asarray(roots, dtype=np.int64),
    }


def classifier_p1(tree):
    v = tree.value[:, 0, :]
    tot = v.sum(axis=1)
    return np.divide(v[:, 1], tot, out=np.zeros_like(tot), where=tot > 0)


def classifier_vote(tree):
    v = tree.value[:, 0, :]
    # sklearn's predict takes argmax, first class on ties
    return (v[:, 1] > v[:, 0]).astype(np.float64)


def regressor_value(tree):
    return tree.value[:, 0, 0]


def leaf_outputs(state, X):
    """``(q, n_trees)`` matrix of leaf values reached by every row in every tree."""
    X = np.asarray(X, dtype=np.float32).astype(np.float64)
    left = state["tree_left"]
    right = state["tree_right"]
    feat = state["tree_feature"]
    thr = state["tree_threshold"]
    roots = state["tree_roots"]
    out = np.empty((X.shape[0], roots.shape[0]), dtype=np.float64)
    for start in range(0, X.shape[0], _CHUNK):
        xs = X[start:start + _CHUNK]
        node = np.broadcast_to(roots, (xs.shape[0], roots.shape[0])).copy()
        active = left[node] != LEAF
        while active.any():
            r_idx, t_idx = np.nonzero(active)
            cur = node[r_idx, t_idx]
            go_left = xs[r_idx, feat[cur]] <= thr[cur]
            node[r_idx, t_idx] = np.where(go_left, left[cur], right[cur])
            active[r_idx, t_idx] = left[node[r_idx, t_idx]] != LEAF
        out[start:start + xs.shape[0]] = state["tree_value"][node]
    return out
