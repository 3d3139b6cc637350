"""Disorder-ensemble sweeps over (size, error-strength) grids.

A sweep cell is one (size, E, kind) combination evaluated over K disorder
realizations. Realization k of cell c draws from the stream (master seed,
c * K + k), so the numbers cannot depend on how cells are distributed over
workers. Completed cells are checkpointed to disk (write-temp-then-rename)
and skipped on resume.
"""

from __future__ import annotations

import json
import multiprocessing
import os
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .config import ConfigError, SweepConfig, mirror_tokens, parse_time_expression
from .disorder import DisorderSpec, SeededRng, sample_disorder
from .dynamics import PureState, replace_samples, run_schedule
from .observables import EnsembleAccumulator, eof_pair, fidelity
from .protocols import FigureOfMerit, ProtocolResult, build_protocol, phase_scan_setting


def merit_value(state: PureState, merit: FigureOfMerit) -> float:
    if merit.kind == "fidelity":
        return fidelity(state, merit.target)
    return eof_pair(state, *merit.pair)


def ensemble_merit(
    result: ProtocolResult,
    disorder_spec: DisorderSpec,
    realizations: int,
    master_seed: int,
    stream_base: int = 0,
    observe_time: float | None = None,
    merit: FigureOfMerit | None = None,
) -> EnsembleAccumulator:
    """Run one protocol K times under fresh disorder and collect its merit."""
    merit = merit or result.merit
    t = merit.time if observe_time is None else observe_time
    graph = result.graph()
    protocol = replace_samples(result.protocol, (t,))
    acc = EnsembleAccumulator()
    for k in range(realizations):
        g = sample_disorder(graph, disorder_spec, SeededRng(master_seed, stream_base + k))
        state = run_schedule(g, protocol).states[0]
        acc.add(merit_value(state, merit))
        if disorder_spec.kind == "none" or disorder_spec.strength == 0.0:
            acc.extend(acc.values * (realizations - 1))  # clean runs are identical
            break
    return acc


def resolve_merit(
    result: ProtocolResult,
    observable: str = "auto",
    eof_pair: tuple[int, int] | None = None,
    observe: str | float | None = None,
) -> FigureOfMerit:
    """The figure of merit a sweep actually records for one protocol."""
    if observable == "auto":
        merit = result.merit
    elif observable == "fidelity":
        merit = FigureOfMerit("fidelity", result.expected_time, target=result.expected_state)
    elif observable == "eof":
        pair = eof_pair or result.merit.pair
        if pair is None:
            raise ConfigError(
                f"protocol {result.name!r} has no natural site pair; set sweep.eof_pair"
            )
        merit = FigureOfMerit("eof", result.merit.time, pair=pair)
    else:
        raise ConfigError(f"unknown observable {observable!r}")
    if observe is not None:
        t = parse_time_expression(observe, mirror_tokens(result.network))
        merit = FigureOfMerit(merit.kind, t, target=merit.target, pair=merit.pair)
    return merit


@dataclass(frozen=True)
class SweepCell:
    """One grid cell: identity, addressing, and its task payload."""

    index: int
    size: int
    e: float
    kind: str
    protocol_name: str
    params: dict[str, Any]
    axis: str
    realizations: int
    master_seed: int
    stream_base: int
    observable: str
    eof_pair: tuple[int, int] | None
    observe: str | float | None


def sweep_cells(
    protocol_name: str,
    params: dict[str, Any],
    sweep: SweepConfig,
    master_seed: int,
) -> list[SweepCell]:
    """Enumerate the grid; cell order fixes the seed streams."""
    cells = []
    index = 0
    for kind in sweep.kinds:
        for size in sweep.sizes:
            for e in sweep.e_values:
                cells.append(
                    SweepCell(
                        index=index,
                        size=size,
                        e=e,
                        kind=kind,
                        protocol_name=protocol_name,
                        params=dict(params),
                        axis=sweep.axis,
                        realizations=sweep.realizations,
                        master_seed=master_seed,
                        stream_base=index * sweep.realizations,
                        observable=sweep.observable,
                        eof_pair=sweep.eof_pair,
                        observe=sweep.observe,
                    )
                )
                index += 1
    return cells


def run_cell(cell: SweepCell) -> dict[str, Any]:
    """Evaluate one cell; returns a plain dict so it survives any transport."""
    params = dict(cell.params)
    params[cell.axis] = cell.size
    result = build_protocol(cell.protocol_name, params)
    merit = resolve_merit(result, cell.observable, cell.eof_pair, cell.observe)
    spec = DisorderSpec(kind=cell.kind, strength=cell.e)
    acc = ensemble_merit(
        result,
        spec,
        cell.realizations,
        cell.master_seed,
        stream_base=cell.stream_base,
        merit=merit,
    )
    return {
        "index": cell.index,
        "size": cell.size,
        "e": cell.e,
        "kind": cell.kind,
        "mean": acc.mean,
        "std": acc.std,
        "std_of_mean": acc.std_of_mean,
        "k": acc.count,
        "stream_base": cell.stream_base,
    }


def run_cells(
    cells: Sequence[SweepCell],
    workers: int = 1,
    checkpoint_dir: str | None = None,
    on_cell: Callable[[dict[str, Any]], None] | None = None,
) -> list[dict[str, Any]]:
    """Evaluate cells, resuming from and writing per-cell checkpoints."""
    rows: dict[int, dict[str, Any]] = {}
    pending = []
    for cell in cells:
        cached = _load_checkpoint(checkpoint_dir, cell.index)
        if cached is not None:
            rows[cell.index] = cached
        else:
            pending.append(cell)

    def record(row: dict[str, Any]) -> None:
        rows[row["index"]] = row
        _write_checkpoint(checkpoint_dir, row)
        if on_cell is not None:
            on_cell(row)

    if workers <= 1 or len(pending) <= 1:
        for cell in pending:
            record(run_cell(cell))
    else:
        with multiprocessing.Pool(processes=workers) as pool:
            for row in pool.imap_unordered(run_cell, pending, chunksize=1):
                record(row)
    return [rows[cell.index] for cell in cells]


def _checkpoint_path(checkpoint_dir: str, index: int) -> str:
    return os.path.join(checkpoint_dir, f"cell_{index:05d}.json")


def _load_checkpoint(checkpoint_dir: str | None, index: int) -> dict[str, Any] | None:
    if checkpoint_dir is None:
        return None
    path = _checkpoint_path(checkpoint_dir, index)
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_checkpoint(checkpoint_dir: str | None, row: dict[str, Any]) -> None:
    if checkpoint_dir is None:
        return
    os.makedirs(checkpoint_dir, exist_ok=True)
    path = _checkpoint_path(checkpoint_dir, row["index"])
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(row, fh, sort_keys=True)
    os.replace(tmp, path)


# --- phase scan ------------------------------------------------------------

def phase_scan_rows(
    n_total: int,
    thetas_deg: tuple[float, ...],
    settings: Sequence[DisorderSpec],
    realizations: int,
    master_seed: int,
) -> list[dict[str, Any]]:
    """One row per (disorder setting, scanned angle)."""
    rows = []
    for setting_index, spec in enumerate(settings):
        clean = spec.kind == "none" or spec.strength == 0.0
        k = 1 if clean else realizations
        stream_base = setting_index * realizations
        stats = phase_scan_setting(
            n_total, thetas_deg, spec, k, master_seed, stream_base=stream_base
        )
        for theta, (mean, std, sem) in zip(thetas_deg, stats):
            rows.append(
                {
                    "kind": spec.kind,
                    "e": spec.strength,
                    "theta_deg": theta,
                    "theta_mean_deg": mean,
                    "std_deg": std,
                    "std_of_mean_deg": sem,
                    "k": k,
                    "stream_base": stream_base,
                }
            )
    return rows


# --- threshold contour ------------------------------------------------------

def threshold_contour(
    xs: Sequence[float],
    ys: Sequence[float],
    values: Sequence[Sequence[float]],
    level: float = 0.9,
) -> list[tuple[float, float, float, float]]:
    """Marching-squares segments of the level set over the cell grid.

    ``values[iy][ix]`` sits at (xs[ix], ys[iy]). Crossings are placed at
    edge midpoints - cell resolution, no subcell interpolation. Returns
    (x1, y1, x2, y2) segments.
    """
    segments: list[tuple[float, float, float, float]] = []
    for iy in range(len(ys) - 1):
        for ix in range(len(xs) - 1):
            corners = (
                values[iy][ix] >= level,        # bottom-left
                values[iy][ix + 1] >= level,    # bottom-right
                values[iy + 1][ix + 1] >= level,  # top-right
                values[iy + 1][ix] >= level,    # top-left
            )
            case = sum(1 << k for k, hot in enumerate(corners) if hot)
            if case in (0, 15):
                continue
            x_mid = (xs[ix] + xs[ix + 1]) / 2.0
            y_mid = (ys[iy] + ys[iy + 1]) / 2.0
            bottom = (x_mid, ys[iy])
            right = (xs[ix + 1], y_mid)
            top = (x_mid, ys[iy + 1])
            left = (xs[ix], y_mid)
            edges = {
                1: (left, bottom), 2: (bottom, right), 3: (left, right),
                4: (right, top), 6: (bottom, top), 7: (left, top),
                8: (top, left), 9: (top, bottom), 11: (top, right),
                12: (right, left), 13: (right, bottom), 14: (bottom, left),
            }
            if case in (5, 10):
                center_hot = (
                    values[iy][ix] + values[iy][ix + 1]
                    + values[iy + 1][ix] + values[iy + 1][ix + 1]
                ) / 4.0 >= level
                if case == 5:
                    pairs = [(left, top), (right, bottom)] if center_hot else [
                        (left, bottom), (right, top)]
                else:
                    pairs = [(bottom, right), (top, left)] if center_hot else [
                        (bottom, left), (top, right)]
                for a, b in pairs:
                    segments.append((a[0], a[1], b[0], b[1]))
            else:
                a, b = edges[case]
                segments.append((a[0], a[1], b[0], b[1]))
    return segments
