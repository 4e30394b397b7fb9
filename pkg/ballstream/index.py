"""Exact nearest-center search over ball centers."""

import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, List, NamedTuple, Optional

from .config import config
from .errors import InvalidInputError, InvalidStateError
from .metric import EUCLIDEAN, FeatureVector, Metric, distance

logger = logging.getLogger(__name__)

# Relative slack on pruning bounds so floating-point rounding in the triangle
# inequality never prunes an exact tie.
_PRUNE_SLACK = 1e-12


class Neighbor(NamedTuple):
    ball_id: int
    distance: float


class CenterIndex(ABC):
    """
    Nearest-center queries keyed by ball id.

    Distance ties are broken by the smaller ball id. Ball ids are handed out
    in creation order, so the older ball wins.
    """

    def __init__(self, metric: Metric = EUCLIDEAN):
        self.metric = metric
        self.distance_evaluations = 0

    def _dist(self, a: FeatureVector, b: FeatureVector) -> float:
        self.distance_evaluations += 1
        return distance(a, b, self.metric)

    @abstractmethod
    def insert(self, ball_id: int, center: FeatureVector) -> None:
        """Add an entry. Raises InvalidInputError if ball_id is present."""

    @abstractmethod
    def remove(self, ball_id: int) -> None:
        """Remove an entry. Raises InvalidInputError if ball_id is missing."""

    @abstractmethod
    def nearest(self, q: FeatureVector) -> Optional[Neighbor]:
        """Closest entry to q, or None when the index is empty."""

    @abstractmethod
    def clear(self) -> None:
        """Remove every entry."""

    @abstractmethod
    def __len__(self) -> int:
        ...

    @abstractmethod
    def __contains__(self, ball_id: int) -> bool:
        ...

    def relocate(self, ball_id: int, center: FeatureVector) -> None:
        """Move an entry to a new center."""
        self.remove(ball_id)
        self.insert(ball_id, center)


class LinearScanIndex(CenterIndex):
    """Brute-force index; the reference every other index must agree with."""

    def __init__(self, metric: Metric = EUCLIDEAN):
        super().__init__(metric)
        self._centers: Dict[int, FeatureVector] = {}

    def insert(self, ball_id: int, center: FeatureVector) -> None:
        if ball_id in self._centers:
            raise InvalidInputError(f"ball id {ball_id} already indexed")
        self._centers[ball_id] = center

    def remove(self, ball_id: int) -> None:
        if ball_id not in self._centers:
            raise InvalidInputError(f"ball id {ball_id} not indexed")
        del self._centers[ball_id]

    def relocate(self, ball_id: int, center: FeatureVector) -> None:
        if ball_id not in self._centers:
            raise InvalidInputError(f"ball id {ball_id} not indexed")
        self._centers[ball_id] = center

    def nearest(self, q: FeatureVector) -> Optional[Neighbor]:
        best = None
        for ball_id, center in self._centers.items():
            candidate = (self._dist(center, q), ball_id)
            if best is None or candidate < best:
                best = candidate
        if best is None:
            return None
        return Neighbor(best[1], best[0])

    def clear(self) -> None:
        self._centers.clear()

    def __len__(self) -> int:
        return len(self._centers)

    def __contains__(self, ball_id: int) -> bool:
        return ball_id in self._centers


class _Node:
    __slots__ = ("ball_id", "center", "level", "children", "parent", "maxdist")

    def __init__(self, ball_id: int, center: FeatureVector):
        self.ball_id = ball_id
        self.center = center
        self.level = 0
        self.children: List["_Node"] = []
        self.parent: Optional["_Node"] = None
        # Upper bound on the distance from this node to any descendant.
        self.maxdist = 0.0

    @property
    def covdist(self) -> float:
        return 2.0 ** self.level

    @property
    def sepdist(self) -> float:
        return 2.0 ** (self.level - 1)


class CoverTreeIndex(CenterIndex):
    """
    Simplified cover tree over ball centers.

    Every node has an integer level. The tree keeps three invariants:

    * leveling: a child sits exactly one level below its parent
    * covering: a child is within 2**level(parent) of its parent
    * separation: siblings are more than 2**(level(parent) - 1) apart

    Nodes also carry maxdist, an upper bound on the distance to their
    descendants, which the exact branch-and-bound search prunes with.
    Removing an inner node re-hangs each child subtree whole under a node one
    level up. A subtree with no such host has its top node re-inserted and
    its own children placed the same way. Removing the root promotes its
    first child subtree.
    """

    def __init__(self, metric: Metric = EUCLIDEAN):
        super().__init__(metric)
        self._root: Optional[_Node] = None
        self._nodes: Dict[int, _Node] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, ball_id: int) -> bool:
        return ball_id in self._nodes

    def clear(self) -> None:
        self._root = None
        self._nodes.clear()

    def insert(self, ball_id: int, center: FeatureVector) -> None:
        if ball_id in self._nodes:
            raise InvalidInputError(f"ball id {ball_id} already indexed")
        node = _Node(ball_id, center)
        self._nodes[ball_id] = node
        self._insert_node(node)

    def remove(self, ball_id: int) -> None:
        node = self._nodes.pop(ball_id, None)
        if node is None:
            raise InvalidInputError(f"ball id {ball_id} not indexed")

        if node.parent is None:
            self._root = None
        else:
            node.parent.children.remove(node)
            node.parent = None
        subtrees, node.children = node.children, []

        for subtree in subtrees:
            subtree.parent = None
            if self._root is None:
                self._root = subtree
            else:
                self._place(subtree)

    def relocate(self, ball_id: int, center: FeatureVector) -> None:
        node = self._nodes.get(ball_id)
        if node is None:
            raise InvalidInputError(f"ball id {ball_id} not indexed")

        shift = self._dist(node.center, center)
        if shift == 0.0:
            node.center = center
            return
        if not self._fits(node, center):
            self.remove(ball_id)
            self.insert(ball_id, center)
            return

        node.center = center
        if node.children:
            node.maxdist += shift
        ancestor = node.parent
        while ancestor is not None:
            ancestor.maxdist = max(ancestor.maxdist, self._dist(ancestor.center, center))
            ancestor = ancestor.parent

    def nearest(self, q: FeatureVector) -> Optional[Neighbor]:
        if self._root is None:
            return None

        root_distance = self._dist(self._root.center, q)
        best_distance, best_id = root_distance, self._root.ball_id
        stack = [(root_distance, self._root)]

        while stack:
            node_distance, node = stack.pop()
            if self._pruned(node_distance - node.maxdist, best_distance):
                continue

            scored = []
            for child in node.children:
                child_distance = self._dist(child.center, q)
                if (child_distance, child.ball_id) < (best_distance, best_id):
                    best_distance, best_id = child_distance, child.ball_id
                scored.append((child_distance, child.ball_id, child))

            # Farthest first onto the stack, so the closest child is expanded next.
            scored.sort(key=lambda entry: (entry[0], entry[1]), reverse=True)
            for child_distance, _, child in scored:
                if child.children and not self._pruned(child_distance - child.maxdist, best_distance):
                    stack.append((child_distance, child))

        return Neighbor(best_id, best_distance)

    def check_invariants(self) -> None:
        """
        Verify leveling, covering, separation and maxdist bounds.

        Raises:
            InvalidStateError: on the first violated invariant
        """
        if self._root is None:
            if self._nodes:
                raise InvalidStateError("empty tree with registered nodes")
            return
        if self._root.parent is not None:
            raise InvalidStateError("root has a parent")

        seen = 0
        tolerance = 1e-9
        for node in self._walk(self._root):
            seen += 1
            if self._nodes.get(node.ball_id) is not node:
                raise InvalidStateError(f"node {node.ball_id} not registered")
            for child in node.children:
                if child.parent is not node:
                    raise InvalidStateError(f"node {child.ball_id} has a stale parent link")
                if child.level != node.level - 1:
                    raise InvalidStateError(f"leveling violated below node {node.ball_id}")
                if distance(node.center, child.center, self.metric) > node.covdist * (1 + tolerance):
                    raise InvalidStateError(f"covering violated below node {node.ball_id}")
            for i, first in enumerate(node.children):
                for second in node.children[i + 1:]:
                    if distance(first.center, second.center, self.metric) <= node.sepdist * (1 - tolerance):
                        raise InvalidStateError(f"separation violated below node {node.ball_id}")
            for descendant in self._descendants(node):
                gap = distance(node.center, descendant.center, self.metric)
                if gap > node.maxdist * (1 + tolerance) + tolerance:
                    raise InvalidStateError(f"maxdist bound violated at node {node.ball_id}")

        if seen != len(self._nodes):
            raise InvalidStateError(f"{len(self._nodes) - seen} nodes unreachable from the root")

    def depth(self) -> int:
        """Number of levels on the longest root-to-leaf path."""
        if self._root is None:
            return 0
        deepest = 0
        stack = [(self._root, 1)]
        while stack:
            node, depth = stack.pop()
            deepest = max(deepest, depth)
            stack.extend((child, depth + 1) for child in node.children)
        return deepest

    @staticmethod
    def _pruned(lower_bound: float, best_distance: float) -> bool:
        return lower_bound > best_distance + _PRUNE_SLACK * (1.0 + best_distance)

    @staticmethod
    def _walk(node: _Node):
        stack = [node]
        while stack:
            current = stack.pop()
            yield current
            stack.extend(reversed(current.children))

    def _descendants(self, node: _Node) -> List[_Node]:
        """Descendants of node, breadth first."""
        found: List[_Node] = []
        frontier = list(node.children)
        while frontier:
            found.extend(frontier)
            frontier = [child for parent in frontier for child in parent.children]
        return found

    def _fits(self, node: _Node, center: FeatureVector) -> bool:
        """Whether node can sit at center without breaking any invariant."""
        parent = node.parent
        if parent is not None:
            if self._dist(parent.center, center) > parent.covdist:
                return False
            for sibling in parent.children:
                if sibling is not node and self._dist(sibling.center, center) <= parent.sepdist:
                    return False
        for child in node.children:
            if self._dist(center, child.center) > node.covdist:
                return False
        return True

    def _hang(self, sub: _Node) -> bool:
        """
        Attach sub, descendants included, below a node one level above it.

        Returns:
            False, leaving the tree untouched, when no node on the covering
            path can host sub without breaking separation
        """
        node = self._root
        if node is None or node.level <= sub.level:
            return False
        gap = self._dist(node.center, sub.center)
        if gap > node.covdist:
            return False

        path = [(node, gap)]
        while node.level > sub.level + 1:
            step = None
            for child in node.children:
                child_gap = self._dist(child.center, sub.center)
                if child_gap <= child.covdist:
                    step = (child, child_gap)
                    break
            if step is None:
                return False
            node, gap = step
            path.append(step)

        for child in node.children:
            if self._dist(child.center, sub.center) <= node.sepdist:
                return False
        for ancestor, ancestor_gap in path:
            ancestor.maxdist = max(ancestor.maxdist, ancestor_gap + sub.maxdist)
        sub.parent = node
        node.children.append(sub)
        return True

    def _place(self, sub: _Node) -> None:
        """Hang sub whole if possible, else insert its top node and place each child subtree."""
        pending = [sub]
        while pending:
            current = pending.pop()
            if self._hang(current):
                continue
            children, current.children = current.children, []
            current.maxdist = 0.0
            self._insert_node(current)
            for child in children:
                child.parent = None
            pending.extend(reversed(children))

    def _detach_leaf(self, top: _Node) -> Optional[_Node]:
        """Unlink and return some leaf below top, or None if top has no children."""
        if not top.children:
            return None
        leaf = top
        while leaf.children:
            leaf = leaf.children[-1]
        leaf.parent.children.remove(leaf)
        leaf.parent = None
        return leaf

    def _insert_node(self, x: _Node) -> None:
        if self._root is None:
            x.level = 0
            self._root = x
            return

        top = self._root
        gap = self._dist(top.center, x.center)

        if gap > top.covdist:
            # Grow the tree upward until the root is within reach of x.
            while gap > 2 * top.covdist:
                leaf = self._detach_leaf(top)
                if leaf is None:
                    top.level = max(top.level, math.ceil(math.log2(gap)))
                    break
                leaf.level = top.level + 1
                leaf.children = [top]
                leaf.maxdist = self._dist(leaf.center, top.center) + top.maxdist
                top.parent = leaf
                self._root = top = leaf
                gap = self._dist(top.center, x.center)

            if gap > top.covdist:
                x.level = top.level + 1
                x.children = [top]
                x.maxdist = gap + top.maxdist
                top.parent = x
                self._root = x
                return

        node, node_gap = top, gap
        while True:
            node.maxdist = max(node.maxdist, node_gap)
            step = None
            for child in node.children:
                child_gap = self._dist(child.center, x.center)
                if child_gap <= child.covdist:
                    step = (child, child_gap)
                    break
            if step is None:
                x.level = node.level - 1
                x.parent = node
                node.children.append(x)
                return
            node, node_gap = step


def make_index(metric: Metric = EUCLIDEAN, linear: Optional[bool] = None) -> CenterIndex:
    """Build the configured index; linear=None defers to BALLSTREAM_LINEAR_INDEX."""
    if linear is None:
        linear = config.linear_index
    if linear:
        logger.debug("Using linear-scan center index")
        return LinearScanIndex(metric)
    return CoverTreeIndex(metric)
