"""Experiment harness: configs, the four experiment families, batch stats.

Experiments:

* ``bounds``   -- Monte Carlo validation of the six closed-form metric
  constants on disc / hexagonal-torus / Poisson-torus scenarios.
* ``converge`` -- D and U trajectories of a protocol over time, swept over
  communication radii (at a fixed ratio) and desired ratios (at a fixed
  radius).
* ``compare``  -- single-time-point D and U for several protocols across
  communication radii.
* ``lifetime`` -- rounds mode with the radio energy model: alive fraction
  and metric degradation per round, with the active ratio calibrated from
  what Sponsored Cover achieves at the chosen radius.

Each trial is a pure function of (config, trial index), so batches can be
dispatched to a process pool and still produce byte-identical outputs for
any worker count: workers return rows, and the parent writes all files in
trial order.
"""

from __future__ import annotations

import configparser
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.stats

from . import engine, geometry, metrics
from .protocol import ProtocolParams, get_protocol
from .seeding import NS_LAYOUT, NS_POINTS, NS_TRIAL, derive_seed
from .targets import TargetDistanceFunction, analytic_bounds

EXPERIMENTS = ("bounds", "converge", "compare", "lifetime")


@dataclass
class ExperimentConfig:
    """Fully resolved settings for one experiment run.

    Exactly one of ``active_ratio`` and ``density`` may be set; the other
    is derived through ratio = density * area / n.
    """

    experiment: str = "converge"
    seed: int = 20260809
    trials: int = 30
    samples: int = 100_000
    bootstrap: int = 100
    workers: int = 1
    out_dir: str = ""
    save_states: bool = False

    n: int = 1000
    width: float = 1.0
    height: float = 1.0
    metric: str = geometry.EUCLIDEAN
    active_ratio: float | None = 0.35
    density: float | None = None
    comm_radius: tuple[float, ...] = (0.05, 0.06, 0.07, 0.08)
    protocols: tuple[str, ...] = ("evenrep-h",)
    L: int = 3
    sensing_radius_factor: float = 0.5

    t_period: float = 10.0
    horizon: int = 10  # multiples of t_period
    compare_at: int = 5  # multiples of t_period
    max_rounds: int = 1000
    stop_alive: float = 0.0
    snapshot_every: int = 1
    calib_trials: int = 5
    calib_rounds: int = 5

    e_elec: float = 50e-9
    eps_amp: float = 10e-12
    msg_bits: int = 2000
    budget: float = 0.05
    coord_scale: float = 1.0
    charge_initial_broadcast: bool = False

    ratios: tuple[float, ...] = (0.15, 0.35, 0.55, 0.8)
    anchor_radius: float = 0.08
    anchor_ratio: float = 0.35

    bounds_m: int = 1_000_000
    poisson_n: int = 4000
    poisson_seeds: int = 10
    hex_z: float = 350.0
    disc_radius: float = 0.5

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if (self.active_ratio is None) == (self.density is None):
            raise ValueError("set exactly one of active_ratio and density")
        if not self.out_dir:
            self.out_dir = f"out/{self.experiment}"
        for p in self.protocols:
            get_protocol(p)

    @property
    def region(self) -> geometry.Region:
        return geometry.Region(self.width, self.height, self.metric)

    @property
    def ratio(self) -> float:
        if self.active_ratio is not None:
            return self.active_ratio
        return self.density * self.region.area / self.n

    def z_for(self, ratio: float) -> float:
        return ratio * self.n / self.region.area

    def energy_model(self) -> engine.EnergyModel:
        return engine.EnergyModel(
            self.e_elec, self.eps_amp, self.msg_bits, self.budget, self.coord_scale
        )

    # -- (de)serialization -------------------------------------------------

    _SECTIONS = {
        "experiment": (
            "experiment", "seed", "trials", "samples", "bootstrap",
            "workers", "out_dir", "save_states",
        ),
        "network": (
            "n", "width", "height", "metric", "active_ratio", "density",
            "comm_radius", "protocols", "L", "sensing_radius_factor",
        ),
        "schedule": (
            "t_period", "horizon", "compare_at", "max_rounds", "stop_alive",
            "snapshot_every", "calib_trials", "calib_rounds",
        ),
        "energy": (
            "e_elec", "eps_amp", "msg_bits", "budget", "coord_scale",
            "charge_initial_broadcast",
        ),
        "sweep": ("ratios", "anchor_radius", "anchor_ratio"),
        "bounds": (
            "bounds_m", "poisson_n", "poisson_seeds", "hex_z", "disc_radius",
        ),
    }

    def to_file(self, path) -> None:
        cp = configparser.ConfigParser()
        for section, names in self._SECTIONS.items():
            cp[section] = {}
            for name in names:
                value = getattr(self, name)
                if value is None:
                    continue
                if isinstance(value, tuple):
                    value = " ".join(str(v) for v in value)
                cp[section][name] = str(value)
        with open(path, "w") as fh:
            cp.write(fh)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_file(fh)
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for section in cp.sections():
            for name, raw in cp[section].items():
                if name not in types:
                    raise ValueError(f"unknown config key {name!r}")
                kwargs[name] = _parse_value(types[name], raw)
        if "active_ratio" in kwargs and "density" not in kwargs:
            kwargs.setdefault("density", None)
        if "density" in kwargs and "active_ratio" not in kwargs:
            kwargs.setdefault("active_ratio", None)
        return cls(**kwargs)

    def header_lines(self) -> list[str]:
        lines = []
        for section, names in self._SECTIONS.items():
            for name in names:
                value = getattr(self, name)
                if value is None:
                    continue
                if isinstance(value, tuple):
                    value = " ".join(str(v) for v in value)
                lines.append(f"{section}.{name} = {value}")
        return lines


def _parse_value(typ: str, raw: str):
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    if "bool" in typ:
        return raw.lower() in ("1", "true", "yes", "on")
    if "tuple[float" in typ:
        return tuple(float(v) for v in raw.split())
    if "tuple[str" in typ:
        return tuple(raw.split())
    if "int" in typ:
        return int(raw)
    if "float" in typ:
        return float(raw)
    return raw


# -- batch statistics -----------------------------------------------------


def batch_mean_ci(values, n_batches: int = 10, confidence: float = 0.95):
    """Mean and confidence half-width by the method of batch means.

    Values are grouped in order into up to ``n_batches`` batches; the
    half-width is the t-interval over the batch means.  NaNs are dropped.
    A single value yields half-width 0.
    """
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan, 0
    if v.size == 1:
        return float(v[0]), 0.0, 1
    nb = min(n_batches, v.size)
    means = [chunk.mean() for chunk in np.array_split(v, nb)]
    sem = scipy.stats.sem(means)
    hw = float(sem * scipy.stats.t.ppf(0.5 + confidence / 2.0, nb - 1))
    return float(v.mean()), hw, int(v.size)


@dataclass(frozen=True)
class AggRow:
    protocol: str
    radius: float
    ratio: float | None  # None when the protocol takes no ratio input
    t: float
    metric: str
    mean: float
    ci95: float
    trials: int


@dataclass
class BatchResult:
    """Aggregated per-time-point statistics across trials."""

    experiment: str
    rows: list[AggRow] = field(default_factory=list)

    def cells(self):
        seen = []
        for r in self.rows:
            key = (r.protocol, r.radius, r.ratio)
            if key not in seen:
                seen.append(key)
        return seen

    def series(self, protocol, radius, ratio, metric):
        """(t, mean, ci95) triples for one cell and metric, in t order."""
        rows = [
            r
            for r in self.rows
            if r.protocol == protocol
            and r.radius == radius
            and r.ratio == ratio
            and r.metric == metric
        ]
        rows.sort(key=lambda r: r.t)
        return [(r.t, r.mean, r.ci95) for r in rows]

    def value(self, protocol, radius, ratio, metric, t):
        for r in self.rows:
            if (
                r.protocol == protocol
                and r.radius == radius
                and r.ratio == ratio
                and r.metric == metric
                and r.t == t
            ):
                return r
        raise KeyError((protocol, radius, ratio, metric, t))

    def write_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("protocol,radius,ratio,t,metric,mean,ci95,trials\n")
            for r in self.rows:
                ratio = "" if r.ratio is None else repr(r.ratio)
                fh.write(
                    f"{r.protocol},{r.radius!r},{ratio},{r.t!r},{r.metric},"
                    f"{r.mean!r},{r.ci95!r},{r.trials}\n"
                )


# -- shared trial plumbing --------------------------------------------------


@dataclass(frozen=True)
class Cell:
    protocol: str
    radius: float
    ratio: float | None  # None: protocol ignores the ratio input

    def tag(self) -> str:
        tag = f"{self.protocol}_r{self.radius:g}"
        if self.ratio is not None:
            tag += f"_c{self.ratio:g}"
        return tag


def _cells_converge(config: ExperimentConfig) -> list[Cell]:
    cells = []
    for proto in config.protocols:
        needs_ratio = get_protocol(proto).needs_ratio
        for radius in config.comm_radius:
            ratio = config.anchor_ratio if needs_ratio else None
            cells.append(Cell(proto, radius, ratio))
        if needs_ratio and len(config.ratios) > 1:
            for ratio in config.ratios:
                cell = Cell(proto, config.anchor_radius, ratio)
                if cell not in cells:
                    cells.append(cell)
    return cells


def _cells_compare(config: ExperimentConfig) -> list[Cell]:
    return [
        Cell(p, r, config.anchor_ratio if get_protocol(p).needs_ratio else None)
        for p in config.protocols
        for r in config.comm_radius
    ]


def _trial_seed(config: ExperimentConfig, trial: int) -> int:
    return derive_seed(config.seed, NS_TRIAL, trial)


def _trial_layout(config: ExperimentConfig, trial: int, measure_ratio: float) -> geometry.Layout:
    layout_seed = derive_seed(_trial_seed(config, trial), NS_LAYOUT)
    return geometry.place_poisson(
        config.n,
        config.region,
        layout_seed,
        expected_active=max(1, int(config.n * measure_ratio)),
    )


def _make_params(config: ExperimentConfig, cell: Cell, measure_z: float) -> ProtocolParams:
    proto = get_protocol(cell.protocol)
    if proto.needs_ratio:
        c_z = cell.ratio
        z = config.z_for(c_z)
    else:
        c_z = 1.0
        z = measure_z
    f = None
    if proto.target_kind is not None:
        f = TargetDistanceFunction(proto.target_kind, z)
    return ProtocolParams(
        z=z,
        c_z=c_z,
        L=config.L,
        f=f,
        sensing_radius=cell.radius * config.sensing_radius_factor,
    )


@dataclass
class TrialOutput:
    cell: Cell
    trial: int
    snapshots: list[engine.SnapshotRow]
    metric_rows: list[tuple]  # (t, metric, value, std_error, samples, seed)
    final_state: engine.NetworkState | None = None


def _snapshot(state, layout, z, config, trial_seed, point_key, t) -> tuple:
    seed = derive_seed(trial_seed, NS_POINTS, point_key)
    d_est, u_est, alive_fraction, active_count = engine.snapshot_metrics(
        state, layout, z, config.samples, seed, config.bootstrap
    )
    row = engine.SnapshotRow(
        t,
        d_est.value if d_est else math.nan,
        u_est.value if u_est else math.nan,
        active_count,
        alive_fraction,
    )
    mrows = []
    for name, est in (("D", d_est), ("U", u_est)):
        if est is not None:
            mrows.append((t, name, est.value, est.std_error, est.samples, est.seed))
    return row, mrows


def _sample_times(config: ExperimentConfig) -> list[float]:
    # 0, T/2, T, 2T, ... horizon*T
    times = [0.0, config.t_period / 2.0]
    times += [k * config.t_period for k in range(1, config.horizon + 1)]
    return times


def _run_async_trial(config: ExperimentConfig, cell: Cell, trial: int, times) -> TrialOutput:
    measure_ratio = config.ratio if cell.ratio is None else cell.ratio
    measure_z = config.z_for(measure_ratio)
    layout = _trial_layout(config, trial, measure_ratio)
    params = _make_params(config, cell, measure_z)
    trial_seed = _trial_seed(config, trial)
    sim = engine.Simulation(
        layout, params, cell.protocol, cell.radius, trial_seed, config.t_period
    )
    snapshots, metric_rows = [], []
    for k, t in enumerate(times):
        sim.run_until(t)
        row, mrows = _snapshot(sim.state, layout, measure_z, config, trial_seed, k, t)
        snapshots.append(row)
        metric_rows.extend(mrows)
    final = sim.state.copy() if config.save_states and trial == 0 else None
    return TrialOutput(cell, trial, snapshots, metric_rows, final)


def _run_lifetime_trial(config: ExperimentConfig, cell: Cell, trial: int, calibrated_ratio: float) -> TrialOutput:
    measure_z = config.z_for(calibrated_ratio)
    layout = _trial_layout(config, trial, calibrated_ratio)
    params = _make_params(config, cell, measure_z)
    trial_seed = _trial_seed(config, trial)
    sim = engine.Simulation(
        layout,
        params,
        cell.protocol,
        cell.radius,
        trial_seed,
        config.t_period,
        energy_model=config.energy_model(),
        charge_initial_broadcast=config.charge_initial_broadcast,
    )
    snapshots, metric_rows = [], []
    row, mrows = _snapshot(sim.state, layout, measure_z, config, trial_seed, 0, 0.0)
    snapshots.append(row)
    metric_rows.extend(mrows)
    while sim.round_index < config.max_rounds:
        r = sim.step_round()
        alive_fraction = sim.state.alive_count / sim.state.n
        if r % config.snapshot_every == 0 and sim.state.active_count > 0:
            row, mrows = _snapshot(
                sim.state, layout, measure_z, config, trial_seed, r, sim.state.clock
            )
            snapshots.append(row)
            metric_rows.extend(mrows)
        else:
            snapshots.append(
                engine.SnapshotRow(
                    sim.state.clock, math.nan, math.nan, sim.state.active_count, alive_fraction
                )
            )
        if sim.state.alive_count == 0 or alive_fraction < config.stop_alive:
            break
    final = sim.state.copy() if config.save_states and trial == 0 else None
    return TrialOutput(cell, trial, snapshots, metric_rows, final)


def _worker(args):
    kind, config, cell, trial, extra = args
    if kind == "async":
        return _run_async_trial(config, cell, trial, extra)
    return _run_lifetime_trial(config, cell, trial, extra)


def _map_trials(config: ExperimentConfig, tasks):
    if config.workers <= 1:
        return [_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_worker, tasks, chunksize=1))


def _write_raw(config: ExperimentConfig, outputs: list[TrialOutput]) -> None:
    out = Path(config.out_dir)
    header = config.header_lines()
    by_cell: dict[Cell, list[TrialOutput]] = {}
    for o in outputs:
        by_cell.setdefault(o.cell, []).append(o)
    for cell, outs in by_cell.items():
        cell_dir = out / "raw" / cell.tag()
        cell_dir.mkdir(parents=True, exist_ok=True)
        outs.sort(key=lambda o: o.trial)
        with open(cell_dir / "metrics.csv", "w", newline="") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            fh.write("t,metric,value,std_error,samples,seed\n")
            for o in outs:
                engine.write_trajectory_csv(
                    cell_dir / f"trial_{o.trial:03d}.csv", o.snapshots, header
                )
                for t, name, value, se, m, seed in o.metric_rows:
                    fh.write(f"{t!r},{name},{value!r},{se!r},{m},{seed}\n")
                if o.final_state is not None:
                    measure_ratio = config.ratio if o.cell.ratio is None else o.cell.ratio
                    layout = _trial_layout(config, o.trial, measure_ratio)
                    engine.write_state_csv(
                        cell_dir / f"state_{o.trial:03d}.csv", o.final_state, layout
                    )


def _aggregate(experiment: str, config: ExperimentConfig, outputs: list[TrialOutput]) -> BatchResult:
    batch = BatchResult(experiment)
    by_cell: dict[Cell, list[TrialOutput]] = {}
    for o in outputs:
        by_cell.setdefault(o.cell, []).append(o)
    for cell, outs in by_cell.items():
        outs.sort(key=lambda o: o.trial)
        times: dict[float, list[engine.SnapshotRow]] = {}
        for o in outs:
            for row in o.snapshots:
                times.setdefault(row.t, []).append(row)
        for t in sorted(times):
            rows = times[t]
            for name, values in (
                ("D", [r.d_value for r in rows]),
                ("U", [r.u_value for r in rows]),
                ("active_count", [float(r.active_count) for r in rows]),
                ("alive_fraction", [r.alive_fraction for r in rows]),
            ):
                mean, hw, used = batch_mean_ci(values)
                if used == 0:
                    continue
                batch.rows.append(
                    AggRow(cell.protocol, cell.radius, cell.ratio, t, name, mean, hw, used)
                )
    return batch


# -- experiment families ----------------------------------------------------


@dataclass(frozen=True)
class BoundsRow:
    scenario: str
    metric: str
    analytic: float
    estimate: float
    std_error: float
    lo: float
    hi: float

    @property
    def passed(self) -> bool:
        return self.lo <= self.estimate <= self.hi


def _disc_distance_sample(config: ExperimentConfig, seed: int) -> metrics.DistanceSample:
    """Uniform points in a disc with one active node at its center."""
    region = geometry.Region(1.0, 1.0, geometry.EUCLIDEAN)
    cx = cy = 0.5
    layout = geometry.Layout(np.array([[cx, cy]]), region, expected_active=1)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(NS_POINTS,)))
    rho = config.disc_radius * np.sqrt(rng.random(config.bounds_m))
    theta = rng.random(config.bounds_m) * (2.0 * math.pi)
    pts = np.column_stack((cx + rho * np.cos(theta), cy + rho * np.sin(theta)))
    d = metrics.nearest_distances_at(pts, np.ones(1, dtype=bool), layout)
    return metrics.DistanceSample(d, seed)


def run_bounds(config: ExperimentConfig) -> list[BoundsRow]:
    """Validate all six analytic constants by Monte Carlo; write bounds.csv."""
    ab = analytic_bounds()
    rows: list[BoundsRow] = []

    def add(scenario, metric_name, analytic, est, lo, hi):
        rows.append(BoundsRow(scenario, metric_name, analytic, est.value, est.std_error, lo, hi))

    # Disc: one node at the center of a disc; D and U hit their lower bounds.
    sample = _disc_distance_sample(config, derive_seed(config.seed, 1))
    z = 1.0 / (math.pi * config.disc_radius**2)
    d_est = metrics.avg_rep_error(sample, z)
    u_est = metrics.unevenness(sample, config.bootstrap)
    add("disc", "D", ab.lb_D, d_est, ab.lb_D - 0.002, ab.lb_D + 0.002)
    add("disc", "U", ab.lb_U, u_est, ab.lb_U - 0.002, ab.lb_U + 0.002)

    # Hexagonal lattice on a torus at the configured density.
    layout = geometry.hex_torus_layout(config.hex_z)
    all_on = np.ones(layout.n, dtype=bool)
    sample = metrics.sample_nearest_distances(
        all_on, layout, config.bounds_m, derive_seed(config.seed, 2)
    )
    d_est = metrics.avg_rep_error(sample, config.hex_z)
    u_est = metrics.unevenness(sample, config.bootstrap)
    add("hex", "D", ab.hex_lb_D, d_est, ab.hex_lb_D - 0.002, ab.hex_lb_D + 0.002)
    add("hex", "U", ab.hex_lb_U_upper, u_est, 0.195, 0.2068)

    # Poisson placement on a torus, averaged over several seeds.
    region = geometry.Region(1.0, 1.0, geometry.TOROIDAL)
    d_values, u_values = [], []
    for k in range(config.poisson_seeds):
        seed = derive_seed(config.seed, 3, k)
        lay = geometry.place_poisson(config.poisson_n, region, seed, expected_active=config.poisson_n)
        sample = metrics.sample_nearest_distances(
            np.ones(lay.n, dtype=bool), lay, config.bounds_m, derive_seed(seed, 4)
        )
        d_values.append(metrics.avg_rep_error(sample, float(config.poisson_n)).value)
        u_values.append(metrics.gini(sample.values))
    k = config.poisson_seeds
    d_mean = float(np.mean(d_values))
    u_mean = float(np.mean(u_values))
    d_se = float(np.std(d_values, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    u_se = float(np.std(u_values, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    rows.append(BoundsRow("poisson", "D", ab.poisson_D, d_mean, d_se, ab.poisson_D - 0.005, ab.poisson_D + 0.005))
    rows.append(BoundsRow("poisson", "U", ab.poisson_U, u_mean, u_se, ab.poisson_U - 0.005, ab.poisson_U + 0.005))

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bounds.csv", "w", newline="") as fh:
        for line in config.header_lines():
            fh.write(f"# {line}\n")
        fh.write("scenario,metric,analytic,estimate,std_error,lo,hi,status\n")
        for r in rows:
            fh.write(
                f"{r.scenario},{r.metric},{r.analytic!r},{r.estimate!r},"
                f"{r.std_error!r},{r.lo!r},{r.hi!r},{'pass' if r.passed else 'fail'}\n"
            )
    return rows


def _finish_batch(config: ExperimentConfig, experiment: str, outputs) -> BatchResult:
    Path(config.out_dir).mkdir(parents=True, exist_ok=True)
    config.to_file(Path(config.out_dir) / "resolved_config.ini")
    _write_raw(config, outputs)
    batch = _aggregate(experiment, config, outputs)
    batch.write_csv(Path(config.out_dir) / "aggregated.csv", config.header_lines())
    emit_plots(batch, config.out_dir)
    return batch


def run_converge(config: ExperimentConfig) -> BatchResult:
    """Metric trajectories over time for each (protocol, radius/ratio) cell."""
    times = _sample_times(config)
    tasks = [
        ("async", config, cell, trial, times)
        for cell in _cells_converge(config)
        for trial in range(config.trials)
    ]
    return _finish_batch(config, "converge", _map_trials(config, tasks))


def run_compare(config: ExperimentConfig) -> BatchResult:
    """Single-time-point (compare_at * T) metrics per protocol per radius."""
    if len(config.protocols) < 2:
        raise ValueError("compare needs at least two protocols")
    t_star = config.compare_at * config.t_period
    tasks = [
        ("async", config, cell, trial, [0.0, t_star])
        for cell in _cells_compare(config)
        for trial in range(config.trials)
    ]
    return _finish_batch(config, "compare", _map_trials(config, tasks))


def calibrate_sponsored_ratio(config: ExperimentConfig, radius: float) -> float:
    """Active ratio Sponsored Cover settles to at ``radius`` (no energy)."""
    ratios = []
    cell = Cell("sponsored", radius, None)
    for trial in range(config.calib_trials):
        measure_z = config.z_for(config.ratio)
        layout = _trial_layout(config, trial, 1.0)
        params = _make_params(config, cell, measure_z)
        sim = engine.Simulation(
            layout, params, "sponsored", radius, _trial_seed(config, trial), config.t_period
        )
        for _ in range(config.calib_rounds):
            sim.step_round()
        ratios.append(sim.state.active_count / sim.state.n)
    return float(np.mean(ratios))


def time_to_dead_fraction(output: TrialOutput, fraction: float = 0.5) -> float:
    """First snapshot time at which the alive fraction drops below ``fraction``."""
    for row in output.snapshots:
        if row.alive_fraction < fraction:
            return row.t
    return math.inf


def run_lifetime(config: ExperimentConfig) -> BatchResult:
    """Rounds-mode lifetime study with the radio energy model.

    The Sponsored Cover calibration runs first; its achieved ratio becomes
    the input ratio for the ratio-taking protocols, so all protocols hold
    comparable active populations.
    """
    radius = config.comm_radius[0]
    calibrated = calibrate_sponsored_ratio(config, radius)
    tasks = []
    for proto in config.protocols:
        needs_ratio = get_protocol(proto).needs_ratio
        cell = Cell(proto, radius, calibrated if needs_ratio else None)
        for trial in range(config.trials):
            tasks.append(("lifetime", config, cell, trial, calibrated))
    outputs = _map_trials(config, tasks)
    batch = _finish_batch(config, "lifetime", outputs)

    t50: dict[str, list[float]] = {}
    for o in outputs:
        t50.setdefault(o.cell.protocol, []).append(time_to_dead_fraction(o))
    ref = "evenrep-h" if "evenrep-h" in t50 else config.protocols[0]
    ref_mean = float(np.mean(t50[ref]))
    with open(Path(config.out_dir) / "lifetime_summary.csv", "w", newline="") as fh:
        for line in config.header_lines():
            fh.write(f"# {line}\n")
        fh.write(f"# calibrated_ratio = {calibrated!r}\n")
        fh.write(f"protocol,t50_mean,t50_ci95,lifetime_ratio_vs_{ref}\n")
        for proto in config.protocols:
            mean, hw, _ = batch_mean_ci(t50[proto])
            fh.write(f"{proto},{mean!r},{hw!r},{ref_mean / mean!r}\n")
    return batch


def run_experiment(config: ExperimentConfig):
    runner = {
        "bounds": run_bounds,
        "converge": run_converge,
        "compare": run_compare,
        "lifetime": run_lifetime,
    }[config.experiment]
    return runner(config)


# -- plots -------------------------------------------------------------------


def emit_plots(batch: BatchResult, out_dir) -> list[Path]:
    """One SVG line chart per metric, with 95% confidence bands.

    Chart points are exactly the aggregated rows; nothing is resampled.
    Empty series produce no file and a warning on stderr.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "evenrep"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    metric_names = ["D", "U"] + (["alive_fraction"] if batch.experiment == "lifetime" else [])
    for metric_name in metric_names:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        drew = False
        for protocol, radius, ratio in batch.cells():
            series = batch.series(protocol, radius, ratio, metric_name)
            series = [(t, m, c) for t, m, c in series if not math.isnan(m)]
            if not series:
                continue
            label = f"{protocol} r={radius:g}"
            if ratio is not None:
                label += f" C={ratio:g}"
            if batch.experiment == "compare":
                continue  # compare charts are drawn against radius below
            t = [s[0] for s in series]
            mean = [s[1] for s in series]
            lo = [s[1] - s[2] for s in series]
            hi = [s[1] + s[2] for s in series]
            ax.plot(t, mean, label=label, linewidth=1.3)
            ax.fill_between(t, lo, hi, alpha=0.2)
            drew = True
        if batch.experiment == "compare":
            protocols = sorted({c[0] for c in batch.cells()})
            t_star = max(r.t for r in batch.rows)
            for protocol in protocols:
                pts = []
                for proto, radius, ratio in batch.cells():
                    if proto != protocol:
                        continue
                    series = [
                        s
                        for s in batch.series(proto, radius, ratio, metric_name)
                        if s[0] == t_star and not math.isnan(s[1])
                    ]
                    if series:
                        pts.append((radius, series[0][1], series[0][2]))
                if not pts:
                    continue
                pts.sort()
                r = [p[0] for p in pts]
                mean = [p[1] for p in pts]
                ax.errorbar(r, mean, yerr=[p[2] for p in pts], label=protocol, marker="o")
                drew = True
            ax.set_xlabel("communication radius")
        else:
            ax.set_xlabel("time")
        if not drew:
            plt.close(fig)
            print(f"emit_plots: no data for metric {metric_name}, skipping", file=sys.stderr)
            continue
        ax.set_ylabel(metric_name)
        ax.legend(fontsize=7)
        ax.grid(alpha=0.3)
        path = out / f"{batch.experiment}_{metric_name}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written
