"""Degree statistics, tail fits, attack experiments and parameter sweeps.

Sweeps fan out over independent jobs (one grown topology per ``(p, trial)`` or
``(p, m, trial)``). Job seeds come from :func:`~vanetsched.engine.derive_seed`
applied to the template's base seed and the trial index, so the same trial
sees the same seed at every ``p`` and results do not depend on ``jobs``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .config import SimConfig
from .engine import derive_seed, run
from .graph import DEFAULT_APL_SOURCES, DynamicGraph, average_path_length, lcc_fraction
from .theory import bin_probability, tunable_params

UNIT_BIN_LIMIT = 50
# bins whose tail holds fewer nodes than this are too noisy to regress on
MIN_TAIL_COUNT = 20
DEFAULT_INTENSITIES = (0.05, 0.10, 0.20)
STRATEGIES = ("random", "targeted")

# sub-stream tags for derive_seed
_ATTACK_STREAM = 7


class NotEnoughDataError(ValueError):
    pass


# -- histograms and fits ----------------------------------------------------------


@dataclass(frozen=True)
class HistBin:
    k_lo: int
    k_hi: int
    count: int
    density: float

    @property
    def width(self) -> int:
        return self.k_hi - self.k_lo


@dataclass(frozen=True)
class DegreeHistogram:
    bins: tuple[HistBin, ...]
    binning: str
    total: int

    def occupied(self) -> list[HistBin]:
        return [b for b in self.bins if b.count > 0]

    def ccdf(self) -> list[tuple[HistBin, float]]:
        """Each bin paired with the fraction of nodes whose degree is at least ``k_lo``."""
        out = []
        remaining = self.total
        for b in self.bins:
            out.append((b, remaining / self.total))
            remaining -= b.count
        return out

    def to_csv(self, header: Iterable[str] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k_lo", "k_hi", "count", "density"])
        for b in self.bins:
            w.writerow([b.k_lo, b.k_hi, b.count, repr(b.density)])
        return buf.getvalue()


def _bin_edges(kmax: int, binning: str) -> list[int]:
    if binning == "unit":
        return list(range(kmax + 2))
    if binning != "log":
        raise ValueError(f"binning must be 'unit' or 'log', got {binning!r}")
    edges = list(range(min(kmax, UNIT_BIN_LIMIT) + 2))
    while edges[-1] <= kmax:
        edges.append(edges[-1] * 2)
    return edges


def histogram_from_degrees(degrees, binning: str = "unit") -> DegreeHistogram:
    """Contiguous bins from 0 up past the largest degree.

    ``unit`` uses width-1 bins throughout; ``log`` keeps width-1 bins up to
    degree 50 and doubles the bin edge after that.
    """
    degs = np.asarray(degrees, dtype=np.int64)
    if degs.size == 0:
        raise ValueError("no degrees to bin")
    if degs.min() < 0:
        raise ValueError("degrees must be non-negative")
    edges = _bin_edges(int(degs.max()), binning)
    counts, _ = np.histogram(degs, bins=np.array(edges, dtype=np.float64))
    n = degs.size
    bins = tuple(
        HistBin(lo, hi, int(c), c / (n * (hi - lo)))
        for lo, hi, c in zip(edges[:-1], edges[1:], counts)
    )
    return DegreeHistogram(bins, binning, n)


def degree_histogram(g: DynamicGraph, binning: str = "unit") -> DegreeHistogram:
    return histogram_from_degrees(g.degrees(), binning)


@dataclass(frozen=True)
class TailFit:
    model: str
    value: float  # exponential: decay rate; power laws: pdf exponent gamma
    r_squared: float
    slope: float
    points: int


def fit_tail(
    hist: DegreeHistogram,
    model: str,
    k_min: float,
    a: Optional[float] = None,
    min_tail: int = MIN_TAIL_COUNT,
) -> TailFit:
    """Least-squares line through the log tail fraction of occupied bins with ``k_lo >= k_min``.

    ``exponential`` regresses on ``k`` and reports the decay rate;
    ``powerlaw`` regresses on ``ln k`` and ``shifted_powerlaw`` on
    ``ln(k + a)``, both reporting ``gamma = 1 - slope``. Bins with fewer
    than ``min_tail`` nodes at or above them are skipped: the handful of
    extreme degrees that survive there sit above the true tail and flatten
    the slope.
    """
    pts = [
        (b.k_lo, frac)
        for b, frac in hist.ccdf()
        if b.count > 0 and b.k_lo >= k_min and frac * hist.total >= min_tail
    ]
    if len(pts) < 5:
        raise NotEnoughDataError(f"need at least 5 occupied bins at k >= {k_min}, have {len(pts)}")
    k = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.log([p[1] for p in pts])
    if model == "exponential":
        x = k
    elif model == "powerlaw":
        if k.min() <= 0:
            raise ValueError("power-law fit needs k_min > 0")
        x = np.log(k)
    elif model == "shifted_powerlaw":
        if a is None:
            raise ValueError("shifted_powerlaw needs the shift a")
        if (k + a).min() <= 0:
            raise ValueError("k + a must stay positive")
        x = np.log(k + a)
    else:
        raise ValueError(f"unknown model {model!r}")
    res = stats.linregress(x, y)
    value = -res.slope if model == "exponential" else 1.0 - res.slope
    return TailFit(model, float(value), float(res.rvalue**2), float(res.slope), len(pts))


def fit_regime(degrees, m: int, p: float, binning: str = "log") -> TailFit:
    """Fit the tail model the theory predicts for ``p`` (shift taken from theory)."""
    hist = histogram_from_degrees(degrees, binning)
    if p == 1.0:
        return fit_tail(hist, "exponential", m)
    if p == 0.0:
        return fit_tail(hist, "powerlaw", m)
    return fit_tail(hist, "shifted_powerlaw", m, a=tunable_params(m, p).a)


def theory_overlay(hist: DegreeHistogram, m: int, p: float) -> list[float]:
    """Expected node fraction per bin, integrating the theory density over each bin."""
    return [bin_probability(b.k_lo, b.k_hi, m, p) for b in hist.bins]


# -- attacks -------------------------------------------------------------------


@dataclass(frozen=True)
class AttackResult:
    strategy: str
    f: float
    lcc_after: float
    removed: tuple[int, ...]
    seed: Optional[int] = None


def _n_remove(g: DynamicGraph, f: float) -> int:
    if not 0.0 < f < 1.0:
        raise ValueError(f"attack intensity must lie in (0, 1), got {f}")
    if len(g) == 0:
        raise ValueError("cannot attack an empty graph")
    return int(math.floor(f * len(g)))


def _after_removal(g: DynamicGraph, removed: Sequence[int]) -> float:
    h = g.copy()
    for n in removed:
        h.remove_node(n)
    return lcc_fraction(h) if len(h) else 0.0


def random_attack(g: DynamicGraph, f: float, seed: int) -> AttackResult:
    """Remove ``floor(f n)`` uniformly chosen nodes from a copy of ``g``."""
    k = _n_remove(g, f)
    nodes = g.node_array()
    rng = np.random.default_rng(seed)
    removed = tuple(sorted(nodes[rng.choice(nodes.size, size=k, replace=False)].tolist()))
    return AttackResult("random", f, _after_removal(g, removed), removed, seed)


def targeted_attack(g: DynamicGraph, f: float) -> AttackResult:
    """Remove the ``floor(f n)`` highest-degree nodes, ranked once (ties: lower id first)."""
    k = _n_remove(g, f)
    nodes = g.node_array()
    degs = g.degrees()
    order = np.lexsort((nodes, -degs))
    removed = tuple(nodes[order[:k]].tolist())
    return AttackResult("targeted", f, _after_removal(g, removed), removed)


# -- sweeps -------------------------------------------------------------------------


def _map(fn: Callable, jobs_args: list, jobs: int) -> list:
    if jobs <= 1 or len(jobs_args) <= 1:
        return [fn(a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, jobs_args))


def trial_config(template: SimConfig, trial: int, **changes) -> SimConfig:
    return template.replace(seed=derive_seed(template.seed, trial), **changes).validate()


@dataclass(frozen=True)
class AttackRow:
    p: float
    strategy: str
    f: float
    trials: int
    lcc_mean: float
    lcc_sd: float


def _attack_job(args) -> list[tuple[str, float, float]]:
    cfg, intensities = args
    _, state = run(cfg)
    g = state.graph
    out = []
    for fi, f in enumerate(intensities):
        out.append(("random", f, random_attack(g, f, derive_seed(cfg.seed, _ATTACK_STREAM, fi)).lcc_after))
        out.append(("targeted", f, targeted_attack(g, f).lcc_after))
    return out


def attack_sweep(
    template: SimConfig,
    p_values: Sequence[float],
    intensities: Sequence[float] = DEFAULT_INTENSITIES,
    trials: int = 1,
    jobs: int = 1,
) -> list[AttackRow]:
    """Mean and sample sd of post-attack LCC fraction per ``(p, strategy, f)``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not p_values or not intensities:
        raise ValueError("need at least one p value and one intensity")
    for f in intensities:
        if not 0.0 < f < 1.0:
            raise ValueError(f"attack intensity must lie in (0, 1), got {f}")
    intensities = tuple(intensities)
    work = [(trial_config(template, t, p=p), intensities) for p in p_values for t in range(trials)]
    results = _map(_attack_job, work, jobs)
    rows = []
    for pi, p in enumerate(p_values):
        per_trial = results[pi * trials:(pi + 1) * trials]
        for strategy in STRATEGIES:
            for f in intensities:
                vals = [v for res in per_trial for s, ff, v in res if s == strategy and ff == f]
                rows.append(AttackRow(p, strategy, f, trials, float(np.mean(vals)), _sd(vals)))
    return rows


@dataclass(frozen=True)
class AplRow:
    p: float
    m: int
    trials: int
    apl_mean: float
    apl_sd: float


def _apl_job(args) -> float:
    cfg, window, source_sample = args
    values = []
    first = cfg.steps - window + 1

    def hook(state, rec):
        if rec.step >= first:
            values.append(average_path_length(state.graph, source_sample, rng_seed=rec.step))

    run(cfg, on_step=hook)
    return float(np.mean(values))


def apl_sweep(
    template: SimConfig,
    p_values: Sequence[float],
    m_values: Sequence[int],
    window: int = 10,
    trials: int = 1,
    jobs: int = 1,
    source_sample: Optional[int] = DEFAULT_APL_SOURCES,
) -> list[AplRow]:
    """Average path length over the last ``window`` steps, averaged again over trials."""
    if window < 1:
        raise ValueError("window must be at least 1")
    if template.steps < window:
        raise ValueError(f"window={window} exceeds steps={template.steps}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not p_values or not m_values:
        raise ValueError("need at least one p value and one m value")
    cells = [(p, m) for p in p_values for m in m_values]
    work = [
        (trial_config(template, t, p=p, m=m), window, source_sample)
        for p, m in cells
        for t in range(trials)
    ]
    results = _map(_apl_job, work, jobs)
    rows = []
    for ci, (p, m) in enumerate(cells):
        vals = results[ci * trials:(ci + 1) * trials]
        rows.append(AplRow(p, m, trials, float(np.mean(vals)), _sd(vals)))
    return rows


@dataclass(frozen=True)
class VarianceRow:
    p: float
    trials: int
    var_all_mean: float
    var_rsu_mean: float


def _variance_job(cfg: SimConfig) -> tuple[float, float]:
    records, _ = run(cfg)
    return records[-1].degree_variance_all, records[-1].degree_variance_rsu


def variance_sweep(template: SimConfig, p_values: Sequence[float], trials: int = 1, jobs: int = 1) -> list[VarianceRow]:
    """Final-step degree variance (all nodes and RSUs only), ensemble-averaged per ``p``."""
    if template.steps < 1:
        raise ValueError("variance sweep needs at least one step")
    work = [trial_config(template, t, p=p) for p in p_values for t in range(trials)]
    results = _map(_variance_job, work, jobs)
    rows = []
    for pi, p in enumerate(p_values):
        chunk = results[pi * trials:(pi + 1) * trials]
        rows.append(VarianceRow(
            p,
            trials,
            float(np.mean([c[0] for c in chunk])),
            float(np.mean([c[1] for c in chunk])),
        ))
    return rows


def pooled_degrees(template: SimConfig, trials: int, jobs: int = 1) -> np.ndarray:
    """Final degrees of ``trials`` independently grown topologies, concatenated."""
    work = [trial_config(template, t) for t in range(trials)]
    return np.concatenate(_map(_degrees_job, work, jobs))


def _degrees_job(cfg: SimConfig) -> np.ndarray:
    _, state = run(cfg)
    return state.graph.degrees()


def _sd(values: Sequence[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def rows_csv(rows: Sequence, header: Iterable[str] = ()) -> str:
    """CSV for a list of dataclass rows, floats written with repr for exact round-trips."""
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    if rows:
        names = list(rows[0].__dataclass_fields__)
        w.writerow(names)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in (getattr(r, n) for n in names)])
    return buf.getvalue()
