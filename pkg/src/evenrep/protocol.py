"""Per-node sleep/sense decision rules.

Each protocol is a pure function from a node's local view (its alive
neighbors within communication range) to a mode decision.  Probabilistic
decisions are resolved against a caller-supplied uniform draw so that the
engine fully controls the random streams.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateDistanceError
from .seeding import NS_INIT_MODE, stream
from .targets import KIND_HEX, TargetDistanceFunction


class NodeMode(enum.IntEnum):
    SLEEP = 0
    ACTIVE = 1
    DEAD = 2  # absorbing; a dead node never decides or communicates


class Action(enum.Enum):
    GO_ACTIVE = "go-active"
    GO_SLEEP = "go-sleep"
    STAY = "stay"


@dataclass(frozen=True)
class Decision:
    """A mode decision, possibly probabilistic.

    ``probability is None`` means the action is certain.  Probabilistic
    decisions only arise for threshold gaps below 0.5, so p is always in
    (0, 0.5).
    """

    action: Action
    probability: float | None = None

    def resolve(self, draw: float) -> "Decision":
        """Collapse a probabilistic decision using a uniform [0,1) draw."""
        if self.probability is None:
            return self
        if draw < self.probability:
            return Decision(self.action)
        return STAY


GO_ACTIVE = Decision(Action.GO_ACTIVE)
GO_SLEEP = Decision(Action.GO_SLEEP)
STAY = Decision(Action.STAY)


@dataclass(frozen=True)
class LocalView:
    """A node's view of its alive neighbors within communication range.

    Neighbor arrays are aligned and ordered by ascending (distance, id);
    ``offsets`` holds displacement vectors from the node to each neighbor
    (wrap-aware under the toroidal metric), which the disc-cover check of
    Sponsored Cover needs in addition to the distances.
    """

    self_id: int
    self_mode: int
    neighbor_ids: np.ndarray
    neighbor_dists: np.ndarray
    neighbor_modes: np.ndarray
    comm_radius: float
    offsets: np.ndarray | None = None


@dataclass(frozen=True)
class ProtocolParams:
    """Shared protocol inputs.

    ``c_z = z * area / n`` is the desired active node ratio matching the
    desired active density ``z``.  ``L`` caps how many active neighbors a
    node considers.  ``sensing_radius`` is only used by Sponsored Cover.
    """

    z: float
    c_z: float
    L: int = 3
    f: TargetDistanceFunction | None = None
    sensing_radius: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.c_z <= 1.0:
            raise ValueError("c_z must lie in [0, 1]")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.f is not None and self.f.kind == KIND_HEX and self.L > 6:
            raise ValueError("hexagonal targets support at most L = 6")
        if self.sensing_radius is not None and self.sensing_radius <= 0:
            raise ValueError("sensing_radius must be positive")


def init_mode(params: ProtocolParams, seed: int, node_id: int) -> NodeMode:
    """Initial mode: active with probability ``c_z``, deterministic per (seed, id)."""
    draw = stream(seed, NS_INIT_MODE, node_id).random()
    return NodeMode.ACTIVE if draw < params.c_z else NodeMode.SLEEP


def compute_q(view: LocalView, params: ProtocolParams):
    """Local density score Q, the K-th active-neighbor distance, and K.

    Q = delta + sum_{k<=K} T_k / X_k with delta = 1 for an active node,
    K = min(L, number of visible active neighbors).  With K = 0 the score
    is just delta and X_K is undefined (returned as None).
    """
    delta = 1.0 if view.self_mode == NodeMode.ACTIVE else 0.0
    active = view.neighbor_modes == NodeMode.ACTIVE
    k = min(params.L, int(active.sum()))
    if k == 0:
        return delta, None, 0
    xd = view.neighbor_dists[active][:k]
    if xd[0] == 0.0:
        raise DegenerateDistanceError(f"active neighbor co-located with node {view.self_id}")
    q = delta + float((params.f.table(k) / xd).sum())
    return q, float(xd[-1]), k


def threshold_decision(diff: float) -> Decision:
    """Decision from the gap ``diff = Q - z pi X_K^2``.

    A gap of 0.5 or more forces the matching mode; a smaller nonzero gap
    sets it with probability equal to the gap; a zero gap changes nothing.
    Monotone in ``diff``: increasing it never moves the decision toward
    activity.
    """
    if diff >= 0.5:
        return GO_SLEEP
    if diff > 0.0:
        return Decision(Action.GO_SLEEP, diff)
    if diff == 0.0:
        return STAY
    if diff <= -0.5:
        return GO_ACTIVE
    return Decision(Action.GO_ACTIVE, -diff)


def evenrep_intent(view: LocalView, params: ProtocolParams) -> Decision:
    """EvenRep decision before resolving any probabilistic branch.

    Compares Q against the active-node count a disc of radius X_K would
    hold at the desired density (z pi X_K^2).  A node with no visible
    active neighbor activates: it is the only representative of its area.
    """
    q, x_k, k = compute_q(view, params)
    if k == 0:
        return GO_ACTIVE
    return threshold_decision(q - params.z * math.pi * x_k * x_k)


def evenrep_decide(view: LocalView, params: ProtocolParams, draw: float) -> Decision:
    """EvenRep decision with probabilistic branches resolved by ``draw``."""
    return evenrep_intent(view, params).resolve(draw)


def flip_decide(view: LocalView, params: ProtocolParams, draw: float = 0.0) -> Decision:
    """Flip rule: match the neighborhood active fraction to the desired ratio.

    The fraction counts the node itself; above the ratio sleep, below it
    activate, exactly at it stay.
    """
    delta = 1 if view.self_mode == NodeMode.ACTIVE else 0
    n_active = int((view.neighbor_modes == NodeMode.ACTIVE).sum()) + delta
    fraction = n_active / (len(view.neighbor_ids) + 1)
    if fraction > params.c_z:
        return GO_SLEEP
    if fraction < params.c_z:
        return GO_ACTIVE
    return STAY


def _cover_test_points(radius: float, n_angles: int, n_radii: int) -> np.ndarray:
    angles = np.arange(n_angles) * (2.0 * math.pi / n_angles)
    radii = radius * (np.arange(1, n_radii + 1) / n_radii)
    pts = [(0.0, 0.0)]
    for r in radii:
        pts.extend(zip(r * np.cos(angles), r * np.sin(angles)))
    return np.asarray(pts)


def sponsored_decide(
    view: LocalView,
    params: ProtocolParams,
    draw: float = 0.0,
    n_angles: int = 16,
    n_radii: int = 4,
) -> Decision:
    """Sponsored coverage rule: sleep iff the node's sensing disc is covered.

    Coverage is checked on a deterministic polar grid of test points
    (n_angles x n_radii plus the center); a point counts as covered when
    some active neighbor's sensing disc contains it, with a relative 1e-9
    slack so exact tangency counts as covered.
    """
    s = params.sensing_radius
    if s is None:
        raise ValueError("sponsored_decide requires params.sensing_radius")
    if s > view.comm_radius:
        raise ValueError("sensing_radius must not exceed comm_radius")
    active = view.neighbor_modes == NodeMode.ACTIVE
    if not active.any():
        return GO_ACTIVE
    if view.offsets is None:
        raise ValueError("sponsored_decide requires neighbor offsets in the view")
    sponsors = view.offsets[active]
    pts = _cover_test_points(s, n_angles, n_radii)
    dx = pts[:, 0, None] - sponsors[None, :, 0]
    dy = pts[:, 1, None] - sponsors[None, :, 1]
    covered = (dx * dx + dy * dy).min(axis=1) <= (s * s) * (1.0 + 1e-9)
    return GO_SLEEP if covered.all() else GO_ACTIVE


@dataclass(frozen=True)
class ProtocolDef:
    """Registry entry binding a protocol name to its decision rule."""

    name: str
    decide: Callable[[LocalView, ProtocolParams, float], Decision]
    needs_ratio: bool = True
    start_all_active: bool = False
    target_kind: Optional[str] = None


PROTOCOLS = {
    p.name: p
    for p in (
        ProtocolDef("evenrep-h", evenrep_decide, target_kind="H"),
        ProtocolDef("evenrep-p", evenrep_decide, target_kind="P"),
        ProtocolDef("flip", flip_decide),
        ProtocolDef("sponsored", sponsored_decide, needs_ratio=False, start_all_active=True),
    )
}


def get_protocol(name: str) -> ProtocolDef:
    try:
        return PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None
