"""Simulation engine: asynchronous event loop, rounds mode, energy accounting.

Two scheduling modes share one ``Simulation`` object:

* event mode (``step_event``/``run_until``): each node re-decides at
  independent uniform random intervals in (0, T); no energy is spent.
  Used for the convergence and comparison experiments.
* rounds mode (``step_round``): once per round every alive node picks a
  start time in [0, T) and decides in start-time order, seeing the state
  as updated so far within the round.  A node whose resolved decision is
  "go active" broadcasts its status: it pays the transmission cost and
  every alive neighbor in range pays the reception cost.  Sleep and stay
  outcomes broadcast nothing.  Used for the lifetime experiment.

All randomness is drawn from streams keyed by (seed, node, counter), so a
trajectory is a pure function of (layout, params, seed).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import metrics
from .errors import GiniUndefinedError
from .geometry import Layout
from .protocol import (
    Action,
    Decision,
    LocalView,
    NodeMode,
    ProtocolDef,
    ProtocolParams,
    get_protocol,
    init_mode,
)
from .seeding import NS_EVENT, NS_FIRST_WAKE, NS_ROUND, stream


@dataclass
class EnergyModel:
    """First-order radio energy model.

    Transmission to radius d costs ``e_elec * bits + eps_amp * bits * d^2``
    joules; reception costs ``e_elec * bits``.  ``coord_scale`` converts
    layout length units to meters (default 1 unit = 1 m; the amplifier
    term is then negligible against the electronics term for sub-meter
    radii, so the electronics cost dominates).
    """

    e_elec: float = 50e-9  # J/bit
    eps_amp: float = 10e-12  # J/bit/m^2
    msg_bits: int = 2000
    budget: float = 0.05  # J per node
    coord_scale: float = 1.0  # layout units -> meters

    def __post_init__(self):
        for name in ("e_elec", "eps_amp", "msg_bits", "budget", "coord_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def tx_cost(self, d: float) -> float:
        dm = d * self.coord_scale
        return self.e_elec * self.msg_bits + self.eps_amp * self.msg_bits * dm * dm

    def rx_cost(self) -> float:
        return self.e_elec * self.msg_bits

    @property
    def exhausted_below(self) -> float:
        # Tolerance for "all power consumed": absorbs float residue from
        # repeated debits so an exact-multiple budget empties exactly.
        return self.budget * 1e-12


class NetworkState:
    """Per-node mode and residual energy plus the simulation clock."""

    def __init__(self, modes: np.ndarray, energy: np.ndarray, clock: float = 0.0):
        self.modes = np.asarray(modes, dtype=np.int8)
        self.energy = np.asarray(energy, dtype=np.float64)
        self.clock = float(clock)

    @classmethod
    def initial(cls, n: int, budget: float = math.inf) -> "NetworkState":
        return cls(np.zeros(n, dtype=np.int8), np.full(n, budget))

    @property
    def n(self) -> int:
        return len(self.modes)

    @property
    def active_mask(self) -> np.ndarray:
        return self.modes == NodeMode.ACTIVE

    @property
    def alive_mask(self) -> np.ndarray:
        return self.modes != NodeMode.DEAD

    @property
    def active_count(self) -> int:
        return int(self.active_mask.sum())

    @property
    def alive_count(self) -> int:
        return int(self.alive_mask.sum())

    def copy(self) -> "NetworkState":
        return NetworkState(self.modes.copy(), self.energy.copy(), self.clock)


class EventQueue:
    """Pending (wake-time, node, wake-counter) events, time then id order."""

    def __init__(self):
        self._heap: list[tuple[float, int, int]] = []

    def push(self, time: float, node: int, counter: int) -> None:
        heapq.heappush(self._heap, (time, node, counter))

    def pop(self) -> tuple[float, int, int]:
        return heapq.heappop(self._heap)

    def peek_time(self) -> float | None:
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


class NeighborTable:
    """Static per-node neighbor lists within the communication radius.

    For each node: neighbor ids ordered by ascending (distance, id), the
    matching distances, and displacement vectors.  Computed once per
    (layout, radius); views filter these by current mode at lookup time.
    """

    def __init__(self, layout: Layout, comm_radius: float):
        self.comm_radius = comm_radius
        n = layout.n
        pos = layout.positions
        region = layout.region
        self.ids: list[np.ndarray] = []
        self.dists: list[np.ndarray] = []
        self.offsets: list[np.ndarray] = []
        chunk = max(1, 4_000_000 // max(n, 1))
        r2 = comm_radius * comm_radius
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            dx = pos[None, :, 0] - pos[lo:hi, 0, None]
            dy = pos[None, :, 1] - pos[lo:hi, 1, None]
            if region.toroidal:
                dx -= region.width * np.round(dx / region.width)
                dy -= region.height * np.round(dy / region.height)
            d2 = dx * dx + dy * dy
            for row, i in enumerate(range(lo, hi)):
                m = d2[row] <= r2
                m[i] = False
                ids = np.flatnonzero(m)
                d = np.sqrt(d2[row, ids])
                order = np.lexsort((ids, d))
                ids = ids[order]
                self.ids.append(ids.astype(np.int32))
                self.dists.append(d[order])
                self.offsets.append(np.column_stack((dx[row, ids], dy[row, ids])))


class SnapshotRow(NamedTuple):
    t: float
    d_value: float  # nan when undefined (no active nodes)
    u_value: float
    active_count: int
    alive_fraction: float


def snapshot_metrics(
    state: NetworkState,
    layout: Layout,
    z: float,
    m: int,
    seed: int,
    bootstrap_resamples: int = metrics.DEFAULT_BOOTSTRAP,
):
    """Estimate (D, U) over the current active set, plus population counts.

    Returns ``(D, U, alive_fraction, active_count)`` where D and U are
    :class:`~evenrep.metrics.MetricEstimate` or ``None`` when undefined
    (no active nodes).  Pure read: neither the state nor any of its random
    streams is touched; sampling uses the supplied seed.
    """
    active_count = state.active_count
    alive_fraction = state.alive_count / state.n
    if active_count == 0:
        return None, None, alive_fraction, 0
    sample = metrics.sample_nearest_distances(state.active_mask, layout, m, seed)
    d_est = metrics.avg_rep_error(sample, z)
    try:
        u_est = metrics.unevenness(sample, bootstrap_resamples)
    except GiniUndefinedError:
        u_est = None
    return d_est, u_est, alive_fraction, active_count


class Simulation:
    """One protocol run over one layout, in event mode or rounds mode."""

    def __init__(
        self,
        layout: Layout,
        params: ProtocolParams,
        protocol: ProtocolDef | str,
        comm_radius: float,
        seed: int,
        t_period: float = 10.0,
        energy_model: Optional[EnergyModel] = None,
        neighbor_table: Optional[NeighborTable] = None,
        charge_initial_broadcast: bool = False,
    ):
        self.layout = layout
        self.params = params
        self.protocol = get_protocol(protocol) if isinstance(protocol, str) else protocol
        self.comm_radius = comm_radius
        self.seed = seed
        self.t_period = t_period
        self.energy = energy_model
        self.charge_initial_broadcast = charge_initial_broadcast
        self.neighbors = neighbor_table or NeighborTable(layout, comm_radius)
        if self.neighbors.comm_radius != comm_radius:
            raise ValueError("neighbor table was built for a different radius")

        n = layout.n
        budget = energy_model.budget if energy_model else math.inf
        modes = np.empty(n, dtype=np.int8)
        if self.protocol.start_all_active:
            modes[:] = NodeMode.ACTIVE
        else:
            for i in range(n):
                modes[i] = init_mode(params, seed, i)
        self.state = NetworkState(modes, np.full(n, budget))

        self.queue = EventQueue()
        for i in range(n):
            self.queue.push(stream(seed, NS_FIRST_WAKE, i).uniform(0.0, t_period), i, 0)
        self.wake_counts = np.zeros(n, dtype=np.int64)
        self.round_index = 0
        self.tx_count = 0
        self.rx_count = 0
        self.clamp_excess = 0.0

        # The mode drawn at t=0 is an assignment, not a decision; by
        # default it is not announced and costs nothing.
        if charge_initial_broadcast and energy_model is not None:
            for i in np.flatnonzero(self.state.active_mask):
                self._broadcast(int(i))

    # -- shared ---------------------------------------------------------

    def _view(self, i: int) -> LocalView:
        ids = self.neighbors.ids[i]
        alive = self.state.modes[ids] != NodeMode.DEAD
        ids = ids[alive]
        return LocalView(
            self_id=i,
            self_mode=int(self.state.modes[i]),
            neighbor_ids=ids,
            neighbor_dists=self.neighbors.dists[i][alive],
            neighbor_modes=self.state.modes[ids],
            comm_radius=self.comm_radius,
            offsets=self.neighbors.offsets[i][alive],
        )

    def _apply(self, i: int, decision: Decision) -> None:
        if decision.action is Action.GO_ACTIVE:
            self.state.modes[i] = NodeMode.ACTIVE
        elif decision.action is Action.GO_SLEEP:
            self.state.modes[i] = NodeMode.SLEEP

    # -- event (asynchronous) mode: no energy accounting -----------------

    def step_event(self) -> float | None:
        """Process the earliest pending wake; returns its time, or None."""
        if not len(self.queue):
            return None
        t, i, counter = self.queue.pop()
        self.state.clock = t
        rng = stream(self.seed, NS_EVENT, i, counter)
        draw = rng.random()
        wait = rng.uniform(0.0, self.t_period)
        decision = self.protocol.decide(self._view(i), self.params, draw)
        self._apply(i, decision)
        self.wake_counts[i] += 1
        self.queue.push(t + wait, i, counter + 1)
        return t

    def run_until(self, t_end: float) -> None:
        """Process every wake with time <= t_end."""
        while True:
            head = self.queue.peek_time()
            if head is None or head > t_end:
                break
            self.step_event()
        self.state.clock = max(self.state.clock, t_end)

    # -- rounds mode: decisions once per round, with energy debits -------

    def _debit(self, i: int, amount: float) -> None:
        e = self.state.energy[i] - amount
        if e <= self.energy.exhausted_below:
            self.clamp_excess += -e if e < 0 else 0.0
            self.state.energy[i] = 0.0
            self.state.modes[i] = NodeMode.DEAD
        else:
            self.state.energy[i] = e

    def _broadcast(self, i: int) -> None:
        self._debit(i, self.energy.tx_cost(self.comm_radius))
        self.tx_count += 1
        for j in self.neighbors.ids[i]:
            if self.state.modes[j] != NodeMode.DEAD:
                self._debit(int(j), self.energy.rx_cost())
                self.rx_count += 1

    def step_round(self) -> int:
        """Run one full round; returns the new round index."""
        self.round_index += 1
        r = self.round_index
        alive = np.flatnonzero(self.state.alive_mask)
        starts = []
        for i in alive:
            rng = stream(self.seed, NS_ROUND, i, r)
            starts.append((rng.uniform(0.0, self.t_period), int(i), rng.random()))
        starts.sort()
        for _, i, draw in starts:
            if self.state.modes[i] == NodeMode.DEAD:
                continue  # died earlier this round
            decision = self.protocol.decide(self._view(i), self.params, draw)
            self._apply(i, decision)
            if decision.action is Action.GO_ACTIVE and self.energy is not None:
                self._broadcast(i)
        self.state.clock += self.t_period
        return r


def write_trajectory_csv(path, rows, header_lines=()) -> None:
    """Write snapshot rows as ``t,D,U,active_count,alive_fraction``."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t,D,U,active_count,alive_fraction\n")
        for row in rows:
            fh.write(
                f"{row.t!r},{row.d_value!r},{row.u_value!r},"
                f"{row.active_count},{row.alive_fraction!r}\n"
            )


def write_state_csv(path, state: NetworkState, layout: Layout) -> None:
    """Write a point-in-time node dump as ``id,x,y,mode,energy``."""
    with open(path, "w", newline="") as fh:
        fh.write("id,x,y,mode,energy\n")
        for i in range(state.n):
            x, y = layout.positions[i]
            mode = NodeMode(state.modes[i]).name.lower()
            fh.write(f"{i},{x:.17g},{y:.17g},{mode},{state.energy[i]!r}\n")
