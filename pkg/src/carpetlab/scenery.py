"""Magnification dynamics and the symbolic window measures they generate.

One magnification step conditions the current measure on the grid cell of
the tracked point, blows the cell up to the unit square, advances the point
by the corresponding digit shift, and rotates the phase.  The vertical digit
always advances; the horizontal one advances exactly when the phase is about
to wrap, so the conditioning cells stay comparable to squares.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, fields
from typing import Mapping

import numpy as np

from .carpet import Carpet, box_packing_dimension, hausdorff_chain, hausdorff_dimension, packing_chain
from .errors import BlockTooDeep, WordTooShort, ZeroMassCell
from .measures import DiscreteMeasure, GridPartition, cell_mask, condition_rescale, entropy
from .symbolic import ApproxSquare, SymbolWord, carry_shift, shift

MAX_STEPS = 10**5
SLACK_TOL = 1e-9


@dataclass(frozen=True)
class SceneryState:
    """Measure, digit-addressed point, rotation phase, and constraint word.

    ``x_word``/``y_word`` are the expansions of the tracked point; ``omega``
    is the vertical digit word as seen by the horizontal side, which lags
    behind ``y_word`` because it only advances on carry steps.
    """

    mu: DiscreteMeasure
    x_word: SymbolWord
    y_word: SymbolWord
    u: float
    omega: SymbolWord

    @property
    def m(self) -> int:
        return self.x_word.alphabet_size

    @property
    def n(self) -> int:
        return self.y_word.alphabet_size

    def point(self) -> tuple[float, float]:
        x = sum(s / self.m ** (i + 1) for i, s in enumerate(self.x_word.symbols))
        y = sum(s / self.n ** (i + 1) for i, s in enumerate(self.y_word.symbols))
        return x, y


def _point_cell(state: SceneryState, carry: bool) -> ApproxSquare:
    x_prefix = state.x_word.prefix(1) if carry else SymbolWord(state.m, ())
    return ApproxSquare(x_prefix, state.y_word.prefix(1))


def _cell_mass(mu: DiscreteMeasure, sq: ApproxSquare) -> float:
    return float(mu.weights[cell_mask(mu, sq)].sum())


def magnify_step(state: SceneryState, theta: float) -> SceneryState:
    """One magnification step; raises ZeroMassCell if the point's cell is empty."""
    carry = state.u >= 1.0 - theta
    cell = _point_cell(state, carry)
    mu = condition_rescale(state.mu, cell)
    new_x = shift(state.x_word) if carry else state.x_word
    new_y = shift(state.y_word)
    new_u = (state.u + theta) % 1.0
    new_omega = carry_shift(state.omega, state.u, theta)
    return SceneryState(mu=mu, x_word=new_x, y_word=new_y, u=new_u, omega=new_omega)


def state_from_cell(
    c: Carpet, cell: ApproxSquare, mu: DiscreteMeasure, u0: float, length: int
) -> SceneryState:
    """Scenery start whose point extends the given cover cell.

    The digit words are extended deterministically with carpet-consistent
    digits (smallest admissible, then the sorted digit list cyclically) so
    the point genuinely lies in the carpet and the orbit can run ``length``
    steps without running out of symbols.
    """
    xw = list(cell.x_word.symbols)
    yw = list(cell.y_word.symbols)
    while len(xw) < len(yw):
        xw.append(min(c.row_digits(yw[len(xw)])))
    while len(yw) < len(xw):
        yw.append(min(c.column_rows(xw[len(yw)])))
    pairs = sorted(c.digits)
    i = len(yw)
    while i < length:
        a, b = pairs[i % len(pairs)]
        xw.append(a)
        yw.append(b)
        i += 1
    state = SceneryState(
        mu=mu,
        x_word=SymbolWord(c.m, tuple(xw)),
        y_word=SymbolWord(c.n, tuple(yw)),
        u=u0,
        omega=SymbolWord(c.n, tuple(yw)),
    )
    if _cell_mass(mu, cell) <= 0.0:
        raise ZeroMassCell("starting point's cell carries no mass")
    return state


@dataclass
class ScenerySummary:
    """Decimated probe records plus the full phase and symbol tracks."""

    records: list[dict]
    phases: np.ndarray
    symbols: tuple[int, ...]
    exhausted_at: int | None
    probe_level: int
    stride: int

    def to_jsonl(self) -> str:
        lines = []
        for rec in self.records:
            payload = {"schema": "carpet-lab/1"}
            payload.update(rec)
            lines.append(json.dumps(payload, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")


def run_scenery(
    initial: SceneryState,
    steps: int,
    theta: float,
    probe_level: int = 2,
    stride: int = 1,
) -> ScenerySummary:
    """Iterate the magnification map and record probe entropies.

    Stops early (recording the step index) when conditioning finds an empty
    cell, i.e. the double-precision support of the measure is exhausted.
    """
    if steps > MAX_STEPS:
        raise ValueError(f"steps capped at {MAX_STEPS}")
    part = GridPartition.square(initial.n, probe_level)
    records: list[dict] = []
    phases = [initial.u]
    symbols: list[int] = []
    exhausted_at: int | None = None

    def record(step: int, state: SceneryState, cell_mass: float):
        rep = entropy(state.mu, part)
        records.append(
            {
                "step": step,
                "u": state.u,
                "probe_entropy": rep.normalized,
                "probe_cells": rep.cell_count,
                "cell_mass": cell_mass,
            }
        )

    state = initial
    record(0, state, 1.0)
    for j in range(1, steps + 1):
        carry = state.u >= 1.0 - theta
        mass = _cell_mass(state.mu, _point_cell(state, carry))
        consumed = state.y_word[0]
        try:
            state = magnify_step(state, theta)
        except ZeroMassCell:
            exhausted_at = j
            if records[-1]["step"] != j - 1:
                # last reached state, with the empty cell's mass
                record(j - 1, state, mass)
            break
        phases.append(state.u)
        symbols.append(consumed)
        if j % stride == 0 or j == steps:
            record(j, state, mass)
    return ScenerySummary(
        records=records,
        phases=np.array(phases),
        symbols=tuple(symbols),
        exhausted_at=exhausted_at,
        probe_level=probe_level,
        stride=stride,
    )


def star_discrepancy(values: np.ndarray) -> float:
    """Star discrepancy of a sample in [0, 1); small for equidistributed orbits."""
    xs = np.sort(np.asarray(values, dtype=np.float64))
    n = len(xs)
    if n == 0:
        return 1.0
    i = np.arange(1, n + 1)
    return float(np.maximum(i / n - xs, xs - (i - 1) / n).max())


# ---------------------------------------------------------------------------
# window measures over symbol words


@dataclass(frozen=True)
class BlockTable:
    """Empirical block frequencies of a shift window, lengths 1..depth.

    Prefix marginals are exact: the length-(b-1) table is the first-symbol
    marginal of the length-b table, because both average the same shifts.
    """

    depth: int
    tables: Mapping[int, Mapping[tuple[int, ...], float]]

    def vector(self, alphabet: tuple[int, ...]) -> np.ndarray:
        t1 = self.tables[1]
        return np.array([t1.get((a,), 0.0) for a in alphabet])

    def entropy(self, b: int) -> float:
        if b > self.depth:
            raise BlockTooDeep(f"table depth {self.depth} < requested block {b}")
        probs = np.array([p for p in self.tables[b].values() if p > 0.0])
        if len(probs) == 0:
            return 0.0
        return float(-(probs * np.log(probs)).sum())

    def rate_curve(self) -> list[float]:
        """Block entropy over block length, for each available length."""
        return [self.entropy(b) / b for b in range(1, self.depth + 1)]

    @property
    def total(self) -> float:
        return float(sum(self.tables[1].values()))


def _window_table(symbols: tuple[int, ...], start: int, stop: int, depth: int) -> BlockTable:
    """Block table of shifts start..stop (inclusive, 0-based first symbol)."""
    width = stop - start + 1
    tables: dict[int, dict[tuple[int, ...], float]] = {}
    for b in range(1, depth + 1):
        counts: Counter = Counter()
        for i in range(start, stop + 1):
            counts[symbols[i : i + b]] += 1
        tables[b] = {w: cnt / width for w, cnt in counts.items()} if width > 0 else {}
    return BlockTable(depth=depth, tables=tables)


def _empty_table(depth: int) -> BlockTable:
    return BlockTable(depth=depth, tables={b: {} for b in range(1, depth + 1)})


def mix_tables(t1: BlockTable, w1: float, t2: BlockTable, w2: float) -> BlockTable:
    depth = min(t1.depth, t2.depth)
    mixed: dict[int, dict[tuple[int, ...], float]] = {}
    for b in range(1, depth + 1):
        keys = set(t1.tables[b]) | set(t2.tables[b])
        mixed[b] = {k: w1 * t1.tables[b].get(k, 0.0) + w2 * t2.tables[b].get(k, 0.0) for k in keys}
    return BlockTable(depth=depth, tables=mixed)


def tv_distance(t1: BlockTable, t2: BlockTable, b: int) -> float:
    keys = set(t1.tables[b]) | set(t2.tables[b])
    return 0.5 * sum(abs(t1.tables[b].get(k, 0.0) - t2.tables[b].get(k, 0.0)) for k in keys)


@dataclass(frozen=True)
class EmpiricalTriple:
    """Early-window, late-window, and full-window block tables of one word."""

    nu: BlockTable
    eta: BlockTable
    rho: BlockTable
    theta: float
    kind: str  # "linear" | "exponential"
    index: int  # N for linear windows, k for exponential ones
    window_nu: tuple[int, int]
    window_eta: tuple[int, int]
    residual_tv: float | None

    def to_dict(self) -> dict:
        def vec(t: BlockTable) -> dict:
            return {",".join(map(str, k)): v for k, v in sorted(t.tables[1].items())}

        out = {
            "schema": "carpet-lab/1",
            "kind": self.kind,
            "index": self.index,
            "theta": self.theta,
            "window_nu": list(self.window_nu),
            "window_eta": list(self.window_eta),
            "nu": vec(self.nu),
            "eta": vec(self.eta),
            "rho": vec(self.rho),
            "residual_tv": self.residual_tv,
        }
        if self.kind == "exponential":
            # make the window convention explicit: stage k averages shifts
            # 1..floor(theta^-(k-1)), the late window continues to floor(theta^-k)
            out["window_rule"] = "early 1..floor(theta^-(k-1)); late ..floor(theta^-k)"
        return out


def empirical_measures_linear(
    omega: SymbolWord, n_steps: int, theta: float, block: int = 6
) -> EmpiricalTriple:
    """Window tables over shifts [1, floor(N theta)], the rest, and all of [1, N].

    Also reports the total-variation residual (on length-``block`` blocks)
    between the full-window table and the theta-weighted mix of the two
    partial windows; it vanishes as N grows, at the speed of the floor error.
    """
    if len(omega) < n_steps + block:
        raise WordTooShort(f"need {n_steps + block} symbols, have {len(omega)}")
    split = math.floor(n_steps * theta)
    if split < 1 or split >= n_steps:
        raise ValueError(f"N={n_steps} leaves an empty window for theta={theta}")
    nu = _window_table(omega.symbols, 1, split, block)
    eta = _window_table(omega.symbols, split + 1, n_steps, block)
    rho = _window_table(omega.symbols, 1, n_steps, block)
    mixed = mix_tables(nu, theta, eta, 1.0 - theta)
    return EmpiricalTriple(
        nu=nu,
        eta=eta,
        rho=rho,
        theta=theta,
        kind="linear",
        index=n_steps,
        window_nu=(1, split),
        window_eta=(split + 1, n_steps),
        residual_tv=tv_distance(rho, mixed, block),
    )


def exponential_windows(k: int, theta: float) -> tuple[int, int]:
    """(floor(theta^-(k-1)), floor(theta^-k)): window edges at stage k."""
    return math.floor(theta ** (-(k - 1))), math.floor(theta ** (-k))


def empirical_measures_exponential(
    omega: SymbolWord, k: int, theta: float, block: int = 6
) -> EmpiricalTriple:
    """Stage-k exponential windows: early shifts 1..floor(theta^-(k-1)),
    late shifts up to floor(theta^-k).

    The late window may be empty at small k; its table is then empty and the
    combined table falls back to the early one.
    """
    lo, hi = exponential_windows(k, theta)
    if len(omega) < hi + block:
        raise WordTooShort(f"need {hi + block} symbols, have {len(omega)}")
    nu = _window_table(omega.symbols, 1, lo, block)
    if hi > lo:
        eta = _window_table(omega.symbols, lo + 1, hi, block)
        rho = mix_tables(nu, theta, eta, 1.0 - theta)
    else:
        eta = _empty_table(block)
        rho = nu
    return EmpiricalTriple(
        nu=nu,
        eta=eta,
        rho=rho,
        theta=theta,
        kind="exponential",
        index=k,
        window_nu=(1, lo),
        window_eta=(lo + 1, hi),
        residual_tv=None,
    )


def select_entropy_subsequence(
    omega: SymbolWord, k_max: int, theta: float, eps: float
) -> list[int]:
    """Stages k <= k_max where the late window's one-symbol entropy does not
    exceed the early window's by more than eps.

    An empty result is legitimate for adversarial prefixes and short k_max;
    callers report it rather than fail.  The convex-combination identity
    linking consecutive stages is re-checked numerically at every k.
    """
    _, hi_max = exponential_windows(k_max, theta)
    if len(omega) < hi_max + 1:
        raise WordTooShort(f"need {hi_max + 1} symbols, have {len(omega)}")
    selected = []
    prev: tuple[float, float, int, int] | None = None  # (H_nu, H_eta, lo, hi)
    for k in range(1, k_max + 1):
        triple = empirical_measures_exponential(omega, k, theta, block=1)
        h_nu = triple.nu.entropy(1)
        h_eta = triple.eta.entropy(1)
        lo, hi = triple.window_nu[1], triple.window_eta[1]
        if prev is not None:
            # this stage's early window is the convex mix of the previous
            # stage's two windows, so its entropy cannot undercut the mix
            h_nu_prev, h_eta_prev, lo_prev, hi_prev = prev
            if hi_prev > 0:
                w = lo_prev / hi_prev
                bound = w * h_nu_prev + (1.0 - w) * h_eta_prev
                assert h_nu - bound >= -SLACK_TOL, (
                    f"window concavity violated at k={k}: {h_nu} < {bound}"
                )
        if h_eta - h_nu <= eps:
            selected.append(k)
        prev = (h_nu, h_eta, lo, hi)
    return selected


# ---------------------------------------------------------------------------
# bound-chain verification


@dataclass(frozen=True)
class BoundChainReport:
    """Numerical audit of the entropy chains bounding a slice dimension.

    ``packing_form`` and ``hausdorff_form`` are the row-energy functionals
    of the early-window vector; both are bounded by the corresponding
    carpet dimension by pure convexity algebra, so their slacks are hard
    assertions.  The mixed form additionally uses the late window and is
    only guaranteed when its entropy does not exceed the early one
    (``entropy_gap <= 0``).
    """

    gamma_proxy: float | None
    rhs_entropy_rate: float
    h_rate_estimate: float
    h_rate_curve: list[float]  # block entropy over block length, the B-sensitivity
    block: int
    dim_h: float
    dim_bp: float
    packing_form: float
    hausdorff_form: float
    hausdorff_form_mixed: float
    slack_packing: float
    slack_hausdorff: float
    slack_hausdorff_mixed: float
    entropy_gap: float

    def to_dict(self) -> dict:
        payload = {"schema": "carpet-lab/1"}
        payload.update({f.name: getattr(self, f.name) for f in fields(self)})
        return payload


def bound_chain_report(
    c: Carpet, triple: EmpiricalTriple, block: int, gamma_proxy: float | None = None
) -> BoundChainReport:
    if block > triple.rho.depth:
        raise BlockTooDeep(f"tables go to depth {triple.rho.depth}, requested {block}")
    log_m = math.log(c.m)
    log_n = math.log(c.n)
    nu_vec = triple.nu.vector(c.rows)
    log_a = np.log([float(c.row_count[j]) for j in c.rows])

    h_rate = triple.rho.entropy(block) / block
    rhs = float(nu_vec @ log_a) / log_m + h_rate / log_n

    h_nu = triple.nu.entropy(1)
    h_eta = triple.eta.entropy(1)
    packing_form = float(packing_chain(c, nu_vec))
    hausdorff_form = float(hausdorff_chain(c, nu_vec))
    mixed = float(nu_vec @ log_a) / log_m + (c.theta * h_nu + (1.0 - c.theta) * h_eta) / log_n

    dim_h = hausdorff_dimension(c)
    dim_bp = box_packing_dimension(c)
    slack_packing = dim_bp - packing_form
    slack_hausdorff = dim_h - hausdorff_form
    slack_mixed = dim_h - mixed
    entropy_gap = h_eta - h_nu
    assert slack_packing >= -SLACK_TOL, f"packing chain violated: slack {slack_packing}"
    assert slack_hausdorff >= -SLACK_TOL, f"entropy chain violated: slack {slack_hausdorff}"
    if entropy_gap <= 0.0:
        assert slack_mixed >= -SLACK_TOL, f"mixed chain violated: slack {slack_mixed}"
    return BoundChainReport(
        gamma_proxy=gamma_proxy,
        rhs_entropy_rate=rhs,
        h_rate_estimate=h_rate,
        h_rate_curve=triple.rho.rate_curve()[:block],
        block=block,
        dim_h=dim_h,
        dim_bp=dim_bp,
        packing_form=packing_form,
        hausdorff_form=hausdorff_form,
        hausdorff_form_mixed=mixed,
        slack_packing=slack_packing,
        slack_hausdorff=slack_hausdorff,
        slack_hausdorff_mixed=slack_mixed,
        entropy_gap=entropy_gap,
    )
