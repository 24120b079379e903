"""CSV Builder - Assembles byte-stable CSV documents from trajectories and reports"""

import math
import os
from typing import Iterable, List, Sequence, Union

import numpy as np

from .models.spectral import ChRun
from .solvers.geodesic import ResidualRow, TowerTrajectory, TransportPath
from .solvers.integrators import Trajectory
from .utils.logger import setup_logger

logger = setup_logger(__name__)


def format_number(value) -> str:
    """Shortest round-trip decimal for floats, plain digits for integers"""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


class CsvBuilder:
    """CSV Builder"""

    def __init__(self, header: Sequence[str]):
        """
        Initialize CSV builder

        Args:
            header: Column names; the header row is always written
        """
        self.header = list(header)
        self.rows: List[List[str]] = []
        self.logger = logger

    def add_row(self, values: Iterable):
        """Add one row of numbers or labels"""
        row = [format_number(v) for v in values]
        if len(row) != len(self.header):
            raise ValueError(f"Row has {len(row)} fields, header has {len(self.header)}")
        self.rows.append(row)

    def build(self) -> str:
        """
        Build complete CSV document

        Returns:
            CSV text with LF line endings and a trailing newline
        """
        lines = [",".join(self.header)] + [",".join(row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def get_stats(self) -> dict:
        return {"columns": len(self.header), "rows": len(self.rows)}


def trajectory_builder(trajectories: Sequence[Trajectory], dim: int) -> CsvBuilder:
    """
    Rows t,level,x_0..x_{n-1},y_0..y_{n-1} for one or more trajectories

    Trajectories of a coarser level leave their missing coordinates empty.
    """
    builder = CsvBuilder(
        ["t", "level"] + [f"x_{i}" for i in range(dim)] + [f"y_{i}" for i in range(dim)]
    )
    for trajectory in trajectories:
        if trajectory.dim > dim:
            raise ValueError(f"Trajectory dim {trajectory.dim} exceeds the table width {dim}")
        pad = [""] * (dim - trajectory.dim)
        for t, x, y in zip(trajectory.times, trajectory.positions, trajectory.velocities):
            builder.add_row([t, trajectory.level, *x, *pad, *y, *pad])
    return builder


def transport_builder(path: TransportPath, curve: Trajectory = None) -> CsvBuilder:
    """Rows t,level,[x_*],v_* for a transported vector path"""
    dim = path.vectors.shape[1]
    columns = ["t", "level"]
    if curve is not None:
        columns += [f"x_{i}" for i in range(curve.dim)]
    builder = CsvBuilder(columns + [f"v_{i}" for i in range(dim)])
    for n, (t, v) in enumerate(zip(path.times, path.vectors)):
        position = list(curve.positions[n]) if curve is not None else []
        builder.add_row([t, path.level, *position, *v])
    return builder


def residual_builder(rows: Sequence[ResidualRow]) -> CsvBuilder:
    """Rows t,j,i,residual"""
    builder = CsvBuilder(["t", "j", "i", "residual"])
    for row in rows:
        builder.add_row([row.t, row.j, row.i, row.residual])
    return builder


def ch_builder(run: ChRun) -> CsvBuilder:
    """Rows t,energy,a_0,a_1,b_1,...,a_N,b_N"""
    modes = run.model.modes
    columns = ["t", "energy", "a_0"]
    for m in range(1, modes + 1):
        columns += [f"a_{m}", f"b_{m}"]
    builder = CsvBuilder(columns)
    for t, e, c in zip(run.times, run.energies, run.states):
        builder.add_row([t, e, *c])
    return builder


Emittable = Union[CsvBuilder, Trajectory, TowerTrajectory, ChRun]


def emit_csv(item: Emittable, path: str) -> str:
    """
    Write a trajectory, tower report, CH run or prepared builder as CSV

    Args:
        item: What to write; a TowerTrajectory writes its residual report
        path: Output file path

    Returns:
        The path written
    """
    if isinstance(item, CsvBuilder):
        builder = item
    elif isinstance(item, Trajectory):
        builder = trajectory_builder([item], item.dim)
    elif isinstance(item, TowerTrajectory):
        builder = residual_builder(item.residuals)
    elif isinstance(item, ChRun):
        builder = ch_builder(item)
    else:
        raise TypeError(f"Cannot emit {type(item).__name__} as CSV")

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(builder.build())

    logger.debug(f"Wrote {path}: {builder.get_stats()['rows']} rows")
    return path
