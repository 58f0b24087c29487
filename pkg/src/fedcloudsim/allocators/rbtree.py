"""Red-black tree keyed by host residual capacity.

Each node groups the PM ids currently sitting at one residual value, so
the tree answers "which host has the smallest residual >= demand" in
O(log n). Deletion and re-insertion keep a host under exactly one key
equal to its live residual.
"""

from __future__ import annotations

import bisect
import math

RED = 0
BLACK = 1


class _Node:
    __slots__ = ("key", "pm_ids", "color", "left", "right", "parent")

    def __init__(self, key, nil=None):
        self.key = key
        self.pm_ids = []
        self.color = RED
        self.left = nil
        self.right = nil
        self.parent = nil


class CapacityTree:
    """Ordered multimap residual -> [pm_id], balanced as a red-black tree."""

    def __init__(self):
        self.nil = _Node(None)
        self.nil.color = BLACK
        self.nil.left = self.nil.right = self.nil.parent = self.nil
        self.root = self.nil
        self._n_keys = 0
        self._n_pms = 0

    def __len__(self):
        return self._n_pms

    @property
    def key_count(self):
        return self._n_keys

    # ------------------------------------------------------------------
    # queries

    def _find_node(self, key):
        node = self.root
        while node is not self.nil:
            if key == node.key:
                return node
            node = node.left if key < node.key else node.right
        return None

    def successor_node(self, key):
        """Node with the smallest key >= ``key``, or None."""
        node, best = self.root, None
        while node is not self.nil:
            if node.key >= key:
                best = node
                node = node.left
            else:
                node = node.right
        return best

    def next_node(self, node):
        """In-order successor of ``node``, or None at the maximum."""
        if node.right is not self.nil:
            node = node.right
            while node.left is not self.nil:
                node = node.left
            return node
        parent = node.parent
        while parent is not self.nil and node is parent.right:
            node, parent = parent, parent.parent
        return parent if parent is not self.nil else None

    def find_min_at_least(self, demand):
        """(key, first pm_id) at the smallest key >= demand, or None."""
        node = self.successor_node(demand)
        if node is None:
            return None
        return node.key, node.pm_ids[0]

    def items(self):
        """(key, pm_ids) pairs in ascending key order."""
        out = []

        def walk(node):
            if node is self.nil:
                return
            walk(node.left)
            out.append((node.key, list(node.pm_ids)))
            walk(node.right)

        walk(self.root)
        return out

    # ------------------------------------------------------------------
    # updates

    def insert(self, key, pm_id):
        node = self._find_node(key)
        if node is not None:
            bisect.insort(node.pm_ids, pm_id)
            self._n_pms += 1
            return
        node = _Node(key, self.nil)
        node.pm_ids.append(pm_id)
        parent, cursor = self.nil, self.root
        while cursor is not self.nil:
            parent = cursor
            cursor = cursor.left if key < cursor.key else cursor.right
        node.parent = parent
        if parent is self.nil:
            self.root = node
        elif key < parent.key:
            parent.left = node
        else:
            parent.right = node
        self._n_keys += 1
        self._n_pms += 1
        self._insert_fixup(node)

    def remove(self, key, pm_id):
        node = self._find_node(key)
        if node is None or pm_id not in node.pm_ids:
            raise KeyError(f"{pm_id} not present at key {key}")
        node.pm_ids.remove(pm_id)
        self._n_pms -= 1
        if not node.pm_ids:
            self._delete_node(node)
            self._n_keys -= 1

    def move(self, old_key, new_key, pm_id):
        self.remove(old_key, pm_id)
        self.insert(new_key, pm_id)

    # ------------------------------------------------------------------
    # classic red-black machinery

    def _rotate_left(self, x):
        y = x.right
        x.right = y.left
        if y.left is not self.nil:
            y.left.parent = x
        y.parent = x.parent
        if x.parent is self.nil:
            self.root = y
        elif x is x.parent.left:
            x.parent.left = y
        else:
            x.parent.right = y
        y.left = x
        x.parent = y

    def _rotate_right(self, x):
        y = x.left
        x.left = y.right
        if y.right is not self.nil:
            y.right.parent = x
        y.parent = x.parent
        if x.parent is self.nil:
            self.root = y
        elif x is x.parent.right:
            x.parent.right = y
        else:
            x.parent.left = y
        y.right = x
        x.parent = y

    def _insert_fixup(self, z):
        while z.parent.color == RED:
            if z.parent is z.parent.parent.left:
                uncle = z.parent.parent.right
                if uncle.color == RED:
                    z.parent.color = BLACK
                    uncle.color = BLACK
                    z.parent.parent.color = RED
                    z = z.parent.parent
                else:
                    if z is z.parent.right:
                        z = z.parent
                        self._rotate_left(z)
                    z.parent.color = BLACK
                    z.parent.parent.color = RED
                    self._rotate_right(z.parent.parent)
            else:
                uncle = z.parent.parent.left
                if uncle.color == RED:
                    z.parent.color = BLACK
                    uncle.color = BLACK
                    z.parent.parent.color = RED
                    z = z.parent.parent
                else:
                    if z is z.parent.left:
                        z = z.parent
                        self._rotate_right(z)
                    z.parent.color = BLACK
                    z.parent.parent.color = RED
                    self._rotate_left(z.parent.parent)
        self.root.color = BLACK

    def _transplant(self, u, v):
        if u.parent is self.nil:
            self.root = v
        elif u is u.parent.left:
            u.parent.left = v
        else:
            u.parent.right = v
        v.parent = u.parent

    def _delete_node(self, z):
        y = z
        y_color = y.color
        if z.left is self.nil:
            x = z.right
            self._transplant(z, z.right)
        elif z.right is self.nil:
            x = z.left
            self._transplant(z, z.left)
        else:
            y = z.right
            while y.left is not self.nil:
                y = y.left
            y_color = y.color
            x = y.right
            if y.parent is z:
                x.parent = y
            else:
                self._transplant(y, y.right)
                y.right = z.right
                y.right.parent = y
            self._transplant(z, y)
            y.left = z.left
            y.left.parent = y
            y.color = z.color
        if y_color == BLACK:
            self._delete_fixup(x)

    def _delete_fixup(self, x):
        while x is not self.root and x.color == BLACK:
            if x is x.parent.left:
                sib = x.parent.right
                if sib.color == RED:
                    sib.color = BLACK
                    x.parent.color = RED
                    self._rotate_left(x.parent)
                    sib = x.parent.right
                if sib.left.color == BLACK and sib.right.color == BLACK:
                    sib.color = RED
                    x = x.parent
                else:
                    if sib.right.color == BLACK:
                        sib.left.color = BLACK
                        sib.color = RED
                        self._rotate_right(sib)
                        sib = x.parent.right
                    sib.color = x.parent.color
                    x.parent.color = BLACK
                    sib.right.color = BLACK
                    self._rotate_left(x.parent)
                    x = self.root
            else:
                sib = x.parent.left
                if sib.color == RED:
                    sib.color = BLACK
                    x.parent.color = RED
                    self._rotate_right(x.parent)
                    sib = x.parent.left
                if sib.right.color == BLACK and sib.left.color == BLACK:
                    sib.color = RED
                    x = x.parent
                else:
                    if sib.left.color == BLACK:
                        sib.right.color = BLACK
                        sib.color = RED
                        self._rotate_left(sib)
                        sib = x.parent.left
                    sib.color = x.parent.color
                    x.parent.color = BLACK
                    sib.left.color = BLACK
                    self._rotate_right(x.parent)
                    x = self.root
        x.color = BLACK

    # ------------------------------------------------------------------
    # structural validation (test hook)

    def assert_valid(self):
        """Check every red-black and ordering invariant; raise on violation."""
        assert self.root.color == BLACK, "root must be black"

        def walk(node):
            if node is self.nil:
                return 1, 0, []
            if node.color == RED:
                assert node.left.color == BLACK and node.right.color == BLACK, \
                    "red node with red child"
            lbh, lh, lkeys = walk(node.left)
            rbh, rh, rkeys = walk(node.right)
            assert lbh == rbh, "black-height mismatch"
            assert node.pm_ids, "empty key node"
            assert node.pm_ids == sorted(node.pm_ids), "pm ids not sorted"
            keys = lkeys + [node.key] + rkeys
            bh = lbh + (1 if node.color == BLACK else 0)
            return bh, max(lh, rh) + 1, keys

        _, height, keys = walk(self.root)
        assert keys == sorted(keys), "in-order keys not ascending"
        assert len(keys) == len(set(keys)) == self._n_keys, "key count drift"
        if self._n_keys:
            assert height <= 2 * math.log2(self._n_keys + 1) + 1e-9, \
                f"height {height} exceeds balance bound"
