"""Rectangular domain discretization, density grids, and divergence measures.

Densities live on a cell-centered grid over [0, L1] x [0, L2]. All integrals
are midpoint quadrature: sum of cell values times the cell area. A grid is a
valid pdf when that sum equals one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative floor applied to a reference density before it is used as the
# second argument of a KL divergence (keeps log(gamma/xi) finite where the
# reference underflows to zero while making visits there very expensive).
KL_FLOOR_REL = 1e-10

# Inner Bhattacharyya coefficient is clamped here before the log so that
# disjoint supports give a large finite distance instead of infinity.
BHATTACHARYYA_CLAMP = 1e-300


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned rectangle [0, L1] x [0, L2] split into n1 x n2 cells."""

    lengths: tuple[float, float]
    resolution: tuple[int, int]

    def __post_init__(self):
        L1, L2 = self.lengths
        n1, n2 = self.resolution
        if not (L1 > 0.0 and L2 > 0.0):
            raise ValueError(f"domain lengths must be positive, got {self.lengths}")
        if n1 < 2 or n2 < 2:
            raise ValueError(f"resolution must be >= 2 per axis, got {self.resolution}")

    @property
    def cell_size(self) -> tuple[float, float]:
        return (self.lengths[0] / self.resolution[0],
                self.lengths[1] / self.resolution[1])

    @property
    def cell_area(self) -> float:
        cw, ch = self.cell_size
        return cw * ch

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """1-D arrays of the cell-center coordinates along x and along y."""
        n1, n2 = self.resolution
        cw, ch = self.cell_size
        return (np.arange(n1) + 0.5) * cw, (np.arange(n2) + 0.5) * ch

    def contains(self, x: float, y: float) -> bool:
        """Membership in the closed rectangle."""
        return 0.0 <= x <= self.lengths[0] and 0.0 <= y <= self.lengths[1]

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        """Indices (i, j) of the cell containing (x, y); boundary points are
        assigned to the adjacent interior cell."""
        if not self.contains(x, y):
            raise ValueError(f"point ({x}, {y}) outside domain {self.lengths}")
        n1, n2 = self.resolution
        cw, ch = self.cell_size
        i = min(int(x / cw), n1 - 1)
        j = min(int(y / ch), n2 - 1)
        return i, j


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Nonnegative scalar field on a domain grid, values indexed [j, i] with
    j the y index and i the x index (units 1/m^2 for a pdf)."""

    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n1, n2 = self.domain.resolution
        if vals.shape != (n2, n1):
            raise ValueError(f"values shape {vals.shape} does not match resolution "
                             f"(n2, n1) = {(n2, n1)}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite")
        if np.any(vals < 0.0):
            raise ValueError("density values must be nonnegative")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def total_mass(self) -> float:
        """Integral of the field over the domain (1.0 for a pdf)."""
        return float(self.values.sum()) * self.domain.cell_area

    def max_cell(self) -> tuple[int, int]:
        """(i, j) of the cell holding the maximum value (first on ties)."""
        j, i = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return int(i), int(j)


@dataclass(frozen=True)
class GmmComponent:
    """One Gaussian mixture component in the plane."""

    mean: tuple[float, float]
    covariance: tuple[tuple[float, float], tuple[float, float]]
    weight: float

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2):
            raise ValueError(f"covariance must be 2x2, got shape {cov.shape}")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, abs(cov[0, 1])):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError(f"covariance {self.covariance} is not positive-definite") from None
        if self.weight <= 0.0:
            raise ValueError(f"component weight must be positive, got {self.weight}")

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float)


def _pdf_values(values: np.ndarray, cell_area: float) -> np.ndarray:
    """Scale a nonnegative field so it integrates to one (shared by every
    normalization path so results are bit-identical across call sites)."""
    total = float(values.sum()) * cell_area
    if not np.isfinite(total) or total <= 0.0:
        raise ValueError("cannot normalize a field with no positive mass")
    return values / total


def normalize(values, domain: DomainSpec) -> DensityGrid:
    """Rescale a nonnegative cell field into a pdf over the domain.

    Raises ValueError when any value is negative or the field has zero mass.
    """
    vals = np.asarray(values, dtype=float)
    n1, n2 = domain.resolution
    if vals.shape != (n2, n1):
        raise ValueError(f"values shape {vals.shape} does not match resolution "
                         f"(n2, n1) = {(n2, n1)}")
    if np.any(vals < 0.0):
        raise ValueError("normalize requires nonnegative values")
    return DensityGrid(domain, _pdf_values(vals, domain.cell_area))


def gmm_pdf_on_grid(domain: DomainSpec, components) -> np.ndarray:
    """Evaluate a Gaussian mixture pdf at every cell center, shape (n2, n1)."""
    xs, ys = domain.cell_centers()
    X, Y = np.meshgrid(xs, ys)
    out = np.zeros_like(X)
    for comp in components:
        mx, my = comp.mean
        cov = comp.cov_array()
        det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
        dx = X - mx
        dy = Y - my
        quad = (cov[1, 1] * dx * dx - 2.0 * cov[0, 1] * dx * dy
                + cov[0, 0] * dy * dy) / det
        out += comp.weight * np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))
    return out


def build_gmm_density(domain: DomainSpec, components) -> DensityGrid:
    """Discretize a Gaussian mixture onto the grid and renormalize.

    The mixture is truncated to the domain, so the returned grid integrates
    to one even when the components put mass outside.
    """
    comps = list(components)
    if not comps:
        raise ValueError("at least one mixture component is required")
    wsum = sum(c.weight for c in comps)
    if abs(wsum - 1.0) > 1e-6:
        raise ValueError(f"component weights must sum to 1, got {wsum}")
    return normalize(gmm_pdf_on_grid(domain, comps), domain)


def epsilon_floor(grid: DensityGrid, rel: float = KL_FLOOR_REL) -> DensityGrid:
    """Floor cells at rel * max(value) and renormalize.

    Applied to a reference density before KL so it is strictly positive
    everywhere.
    """
    floored = np.maximum(grid.values, rel * float(grid.values.max()))
    return normalize(floored, grid.domain)


def _require_same_domain(a: DensityGrid, b: DensityGrid) -> None:
    if a.domain != b.domain:
        raise ValueError(f"density domains differ: {a.domain} vs {b.domain}")


def _kl_sum(gamma_values: np.ndarray, log_xi: np.ndarray, cell_area: float) -> float:
    # cells with gamma == 0 contribute exactly 0 (0 * log 0 convention)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = gamma_values * (np.log(gamma_values) - log_xi)
    total = float(np.where(gamma_values > 0.0, terms, 0.0).sum()) * cell_area
    return max(0.0, total)


def kl_divergence(gamma: DensityGrid, xi: DensityGrid) -> float:
    """Relative entropy of gamma with respect to xi, both grid pdfs.

    xi must be strictly positive everywhere (use :func:`epsilon_floor`).
    The quadrature sum is truncated at zero, since the exact value cannot
    be negative for two pdfs on a shared grid.
    """
    _require_same_domain(gamma, xi)
    if float(xi.values.min()) <= 0.0:
        raise ValueError("kl_divergence requires a strictly positive reference; "
                         "apply epsilon_floor to xi first")
    return _kl_sum(gamma.values, np.log(xi.values), gamma.domain.cell_area)


def bhattacharyya(gamma: DensityGrid, xi: DensityGrid) -> float:
    """Bhattacharyya distance -ln(integral of sqrt(gamma * xi)).

    The inner integral is clamped below at BHATTACHARYYA_CLAMP, so disjoint
    supports give a value near 690 rather than infinity. Truncated at zero
    like :func:`kl_divergence`.
    """
    _require_same_domain(gamma, xi)
    inner = float(np.sqrt(gamma.values * xi.values).sum()) * gamma.domain.cell_area
    return max(0.0, -np.log(max(inner, BHATTACHARYYA_CLAMP)))


# ---------------------------------------------------------------------------
# Grid dump format: line 1 is "L1 L2 n1 n2", then n2 lines of n1 values,
# y-major ascending. 17 significant digits, bit-exact round trip. Comment
# lines starting with '#' may precede the header.

def dump_grid_text(domain: DomainSpec, values: np.ndarray, comments=()) -> str:
    n1, n2 = domain.resolution
    vals = np.asarray(values, dtype=float)
    if vals.shape != (n2, n1):
        raise ValueError(f"values shape {vals.shape} does not match resolution")
    lines = [f"# {c}" for c in comments]
    lines.append(f"{domain.lengths[0]:.17g} {domain.lengths[1]:.17g} {n1} {n2}")
    for j in range(n2):
        lines.append(" ".join(f"{v:.17g}" for v in vals[j]))
    return "\n".join(lines) + "\n"


def parse_grid_text(text: str) -> tuple[DomainSpec, np.ndarray, list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    comments = []
    while lines and lines[0].lstrip().startswith("#"):
        comments.append(lines.pop(0).lstrip()[1:].strip())
    if not lines:
        raise ValueError("grid dump has no header line")
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"malformed grid header: {lines[0]!r}")
    L1, L2 = float(head[0]), float(head[1])
    n1, n2 = int(head[2]), int(head[3])
    if len(lines) - 1 != n2:
        raise ValueError(f"expected {n2} data rows, found {len(lines) - 1}")
    vals = np.empty((n2, n1))
    for j in range(n2):
        row = np.array(lines[1 + j].split(), dtype=float)
        if row.size != n1:
            raise ValueError(f"row {j} has {row.size} values, expected {n1}")
        vals[j] = row
    return DomainSpec((L1, L2), (n1, n2)), vals, comments


def write_grid(path, domain: DomainSpec, values: np.ndarray, comments=()) -> None:
    with open(path, "w") as fh:
        fh.write(dump_grid_text(domain, values, comments))


def read_grid(path) -> tuple[DomainSpec, np.ndarray, list[str]]:
    with open(path) as fh:
        return parse_grid_text(fh.read())


def write_density(path, grid: DensityGrid) -> None:
    write_grid(path, grid.domain, grid.values)


def read_density(path) -> DensityGrid:
    domain, vals, _ = read_grid(path)
    return DensityGrid(domain, vals)
