"""Extended Fourier Amplitude Sensitivity Test (eFAST).

Each parameter in turn is driven at a high frequency ``omega`` along a
search curve while the others move at low complementary frequencies. The
output spectrum of that block gives:

* first-order index: power at harmonics ``p * omega`` (p = 1..M) over total power;
* total-order index: one minus the power at frequencies up to ``omega / 2``,
  which belongs to the complementary parameters alone.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVarianceError, ParseError, ValidationError

__all__ = [
    "ParameterSpec",
    "SampleMatrix",
    "ParameterIndices",
    "SensitivityResult",
    "search_curve",
    "search_grid",
    "block_frequencies",
    "efast_samples",
    "analyze",
    "fourier_coefficients",
    "load_samples_csv",
    "FLAG_LOW",
    "FLAG_HIGH",
]

FLAG_LOW, FLAG_HIGH = -0.05, 1.05
ORDER_TOLERANCE = 0.05


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    min: float
    max: float

    def __post_init__(self):
        if not self.name:
            raise ValidationError("parameter name must be non-empty")
        if not (np.isfinite(self.min) and np.isfinite(self.max) and self.min < self.max):
            raise ValidationError(f"parameter {self.name!r}: need min < max, got [{self.min}, {self.max}]")

    def scale(self, unit):
        return self.min + (self.max - self.min) * np.asarray(unit)


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """Runs x parameters design, in blocks of ``ns_per_param`` rows per target parameter.

    ``omegas[b, j]`` and ``phases[b, j]`` are the frequency and phase of
    parameter ``j`` within block ``b``; phases are NaN when the matrix was
    read back from CSV.
    """

    names: tuple[str, ...]
    values: np.ndarray
    block: np.ndarray
    s_index: np.ndarray
    s: np.ndarray
    omegas: np.ndarray
    phases: np.ndarray
    ns_per_param: int
    interference: int

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_params(self) -> int:
        return len(self.names)

    def row(self, i: int) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values[i])}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([*self.names, "block", "s_index"])
            for vals, b, k in zip(self.values, self.block, self.s_index):
                w.writerow([*(repr(float(v)) for v in vals), int(b), int(k)])


@dataclass(frozen=True)
class ParameterIndices:
    s_first: float
    s_total: float
    interaction: float
    flagged: bool


@dataclass(frozen=True)
class SensitivityResult:
    indices: dict[str, ParameterIndices]
    total_variance: float

    def __getitem__(self, name: str) -> ParameterIndices:
        return self.indices[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.indices)

    def to_dict(self) -> dict:
        out = {
            name: {"s_first": p.s_first, "s_total": p.s_total, "interaction": p.interaction, "flagged": p.flagged}
            for name, p in self.indices.items()
        }
        out["total_variance"] = self.total_variance
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def search_curve(s, omega, phi=0.0):
    """Triangle-wave search curve mapping to [0, 1]; uniform over a full period."""
    x = 0.5 + np.arcsin(np.sin(np.asarray(omega) * np.asarray(s) + phi)) / np.pi
    # arcsin rounding can overshoot the unit interval by an ulp
    x = np.clip(x, 0.0, 1.0)
    return float(x) if np.ndim(x) == 0 else x


def search_grid(ns: int) -> np.ndarray:
    """``ns`` equispaced points in (-pi, pi), symmetric about zero."""
    return np.pi * (2.0 * np.arange(ns) + 1.0 - ns) / ns


def _max_frequency(ns: int, interference: int) -> int:
    return (ns - 1) // (2 * interference)


def _check_design(ns: int, interference: int) -> None:
    if interference < 2:
        raise ValidationError(f"interference factor M must be >= 2, got {interference}")
    bound = 4 * interference**2 + 1
    if ns < bound or ns % 2 == 0:
        raise ValidationError(
            f"ns_per_param must be odd and >= 4*M^2 + 1 = {bound} for M={interference}, got {ns}"
        )


def block_frequencies(n_params: int, ns: int, interference: int) -> np.ndarray:
    """Frequency matrix ``(block, parameter)``.

    The target gets ``(ns - 1) // (2M)``. The others get frequencies in
    ``1 .. omega // (2M)``: spread evenly over that range when it has room for
    all of them, otherwise cycled. Assignment starts after the target.
    """
    omega = _max_frequency(ns, interference)
    max_comp = omega // (2 * interference)
    n_other = n_params - 1
    if n_other and max_comp >= n_other:
        comp = np.floor(np.linspace(1, max_comp, n_other)).astype(np.int64)
    else:
        comp = np.arange(n_other) % max_comp + 1
    out = np.empty((n_params, n_params), dtype=np.int64)
    for b in range(n_params):
        others = [(b + j) % n_params for j in range(1, n_params)]
        out[b, others] = comp
        out[b, b] = omega
    return out


def efast_samples(specs, ns_per_param: int = 65, interference: int = 4, seed: int = 0) -> SampleMatrix:
    specs = list(specs)
    if not specs:
        raise ValidationError("need at least one parameter")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValidationError(f"parameter names must be unique: {names}")
    ns, m = int(ns_per_param), int(interference)
    _check_design(ns, m)
    p = len(specs)

    omegas = block_frequencies(p, ns, m)
    gen = np.random.default_rng(seed)
    phases = gen.uniform(0.0, 2.0 * np.pi, size=(p, p))
    # the driven parameter keeps phase 0 so its sweep is symmetric about the midpoint
    np.fill_diagonal(phases, 0.0)

    s = search_grid(ns)
    unit = search_curve(s[None, :, None], omegas[:, None, :], phases[:, None, :])  # (block, ns, param)
    lo = np.array([sp.min for sp in specs])
    hi = np.array([sp.max for sp in specs])
    values = np.clip(lo + (hi - lo) * unit, lo, hi).reshape(p * ns, p)

    return SampleMatrix(
        names=tuple(names),
        values=values,
        block=np.repeat(np.arange(p), ns),
        s_index=np.tile(np.arange(ns), p),
        s=np.tile(s, p),
        omegas=omegas,
        phases=phases,
        ns_per_param=ns,
        interference=m,
    )


def fourier_coefficients(y, s) -> tuple[np.ndarray, np.ndarray]:
    """Real Fourier coefficients A_j, B_j (j = 1..(ns-1)/2) of samples on the grid ``s``."""
    y = np.asarray(y, dtype=float)
    ns = y.size
    j = np.arange(1, (ns - 1) // 2 + 1)
    phase = np.outer(j, s)
    return np.cos(phase) @ y / ns, np.sin(phase) @ y / ns


def analyze(matrix: SampleMatrix, outputs, interference: int | None = None) -> SensitivityResult:
    m = matrix.interference if interference is None else int(interference)
    y = np.asarray(outputs, dtype=float)
    if y.shape != (len(matrix),):
        raise ValidationError(f"expected {len(matrix)} outputs, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValidationError("outputs must all be finite")
    ns = matrix.ns_per_param
    _check_design(ns, m)
    omega = _max_frequency(ns, m)
    s = search_grid(ns)

    indices = {}
    for b, name in enumerate(matrix.names):
        rows = np.flatnonzero(matrix.block == b)
        yb = np.empty(ns)
        yb[matrix.s_index[rows]] = y[rows]
        if np.ptp(yb) == 0:
            raise DegenerateVarianceError(
                f"constant output over the {name!r} block; sensitivity indices are undefined"
            )
        a, bcoef = fourier_coefficients(yb, s)
        power = a**2 + bcoef**2  # power[j-1] belongs to frequency j
        d_total = 2.0 * power.sum()
        harmonics = omega * np.arange(1, m + 1)
        d_first = 2.0 * power[harmonics[harmonics <= power.size] - 1].sum()
        d_comp = 2.0 * power[: omega // 2].sum()
        s_first = d_first / d_total
        s_total = 1.0 - d_comp / d_total
        flagged = bool(
            not (FLAG_LOW <= s_first <= FLAG_HIGH)
            or not (FLAG_LOW <= s_total <= FLAG_HIGH)
            or s_first > s_total + ORDER_TOLERANCE
        )
        indices[name] = ParameterIndices(float(s_first), float(s_total), float(s_total - s_first), flagged)
    return SensitivityResult(indices=indices, total_variance=float(np.var(y)))


def load_samples_csv(path, interference: int = 4) -> SampleMatrix:
    """Read a sample matrix written by :meth:`SampleMatrix.to_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if header[-2:] != ["block", "s_index"] or len(header) < 3:
            raise ParseError(f"{path}: header must end with 'block,s_index'")
        names = tuple(header[:-2])
        vals, blocks, sidx = [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            try:
                vals.append([float(v) for v in row[:-2]])
                blocks.append(int(row[-2]))
                sidx.append(int(row[-1]))
            except ValueError as exc:
                raise ParseError(f"{path}: row {row_no}: {exc}") from None
            if len(vals[-1]) != len(names):
                raise ParseError(f"{path}: row {row_no}: expected {len(names)} values")
    p = len(names)
    if not vals or len(vals) % p:
        raise ParseError(f"{path}: row count {len(vals)} is not a multiple of {p} parameters")
    ns = len(vals) // p
    _check_design(ns, interference)
    block = np.array(blocks)
    s_index = np.array(sidx)
    for b in range(p):
        got = np.sort(s_index[block == b])
        if not np.array_equal(got, np.arange(ns)):
            raise ParseError(f"{path}: block {b} does not hold s_index 0..{ns - 1}")
    return SampleMatrix(
        names=names,
        values=np.array(vals),
        block=block,
        s_index=s_index,
        s=search_grid(ns)[s_index],
        omegas=block_frequencies(p, ns, interference),
        phases=np.full((p, p), np.nan),
        ns_per_param=ns,
        interference=interference,
    )
