"""Source/target configurations and the mirror-image construction.

A ``PointSystem`` holds N point singularities inside a box of edge L.
Stokeslets carry a force vector ``f`` per point; stresslets and rotlets
carry a strength/orientation pair ``(g, q)``.  In half-space geometry the
wall is the plane x3 = 0 and every source has y3 > 0.

Random systems are generated with numpy's default PCG64 generator so runs
are reproducible across platforms for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ParameterError

STOKESLET = "stokeslet"
STRESSLET = "stresslet"
ROTLET = "rotlet"
KINDS = (STOKESLET, STRESSLET, ROTLET)

FREE_SPACE = "free"
HALF_SPACE = "half"
GEOMETRIES = (FREE_SPACE, HALF_SPACE)

# mirror operator diag(1, 1, -1) applied to positions and to all image vectors
MIRROR = np.array([1.0, 1.0, -1.0])


def _as_points(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[1] != 3:
        raise ParameterError(f"{name} must have shape (n, 3), got {a.shape}")
    return a


@dataclass
class PointSystem:
    """N singularities with strengths, a box edge and a geometry."""

    kind: str
    geometry: str
    box_length: float
    positions: np.ndarray
    f: np.ndarray | None = None
    g: np.ndarray | None = None
    q: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown kernel kind {self.kind!r}")
        if self.geometry not in GEOMETRIES:
            raise GeometryError(f"unknown geometry {self.geometry!r}")
        if self.box_length <= 0:
            raise ParameterError("box_length must be positive")
        self.positions = _as_points(self.positions, "positions")
        n = self.positions.shape[0]
        if self.kind == STOKESLET:
            if self.f is None:
                raise ParameterError("stokeslet system needs forces f")
            self.f = _as_points(self.f, "f")
            if self.f.shape[0] != n:
                raise ParameterError("positions and f lengths differ")
        else:
            if self.g is None or self.q is None:
                raise ParameterError(f"{self.kind} system needs g and q")
            self.g = _as_points(self.g, "g")
            self.q = _as_points(self.q, "q")
            if self.g.shape[0] != n or self.q.shape[0] != n:
                raise ParameterError("positions and g/q lengths differ")
        L = self.box_length
        if np.any(self.positions < 0) or np.any(self.positions >= L):
            raise ParameterError("positions must lie in [0, L)^3")
        if self.geometry == HALF_SPACE and np.any(self.positions[:, 2] <= 0):
            raise GeometryError("half-space sources must have y3 > 0")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def scaled(self, factor: float) -> "PointSystem":
        """Copy with all strengths multiplied by ``factor``."""
        kw = dict(kind=self.kind, geometry=self.geometry,
                  box_length=self.box_length, positions=self.positions.copy())
        if self.kind == STOKESLET:
            kw["f"] = factor * self.f
        else:
            kw["g"] = factor * self.g
            kw["q"] = self.q.copy()
        return PointSystem(**kw)

    # --- JSON wire format -------------------------------------------------
    def to_dict(self) -> dict:
        pts = []
        for m in range(self.n):
            entry = {"y": self.positions[m].tolist()}
            if self.kind == STOKESLET:
                entry["f"] = self.f[m].tolist()
            else:
                entry["g"] = self.g[m].tolist()
                entry["q"] = self.q[m].tolist()
            pts.append(entry)
        d = {"kind": self.kind, "geometry": self.geometry,
             "L": self.box_length, "points": pts}
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "PointSystem":
        pts = d["points"]
        y = np.array([p["y"] for p in pts], dtype=float)
        kw = dict(kind=d["kind"], geometry=d["geometry"], box_length=d["L"],
                  positions=y, seed=d.get("seed"))
        if d["kind"] == STOKESLET:
            kw["f"] = np.array([p["f"] for p in pts], dtype=float)
        else:
            kw["g"] = np.array([p["g"] for p in pts], dtype=float)
            kw["q"] = np.array([p["q"] for p in pts], dtype=float)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "PointSystem":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ImageSystem:
    """Kernel-plus-image sources folded into a single 2N-term sum.

    ``combined_*`` hold the original N entries followed by their mirror
    images; the image strengths absorb the minus sign of the image kernel
    term.  ``image_positions`` / ``image_*`` keep the raw N image entries
    (without that sign) for the harmonic-correction sums.
    """

    kind: str
    combined_positions: np.ndarray      # (2N, 3)
    combined_f: np.ndarray | None       # (2N, 3), stokeslet: [f; -f^I]
    combined_g: np.ndarray | None       # (2N, 3), [g; g^I]
    combined_q: np.ndarray | None       # (2N, 3), [q; q^I]
    combined_sign: np.ndarray           # (2N,), [+1; -1]
    image_positions: np.ndarray         # (N, 3) = y^I
    image_f: np.ndarray | None = None   # f^I
    image_g: np.ndarray | None = None   # g^I
    image_q: np.ndarray | None = None   # q^I
    source_y3: np.ndarray = field(default=None)  # y3 of the originals

    @property
    def n_combined(self) -> int:
        return self.combined_positions.shape[0]


def reflect(system: PointSystem) -> ImageSystem:
    """Mirror a half-space system through the wall into a folded 2N sum."""
    if system.geometry != HALF_SPACE:
        raise GeometryError("reflect requires a half-space system")
    y = system.positions
    yI = y * MIRROR
    zz = np.vstack([y, yI])
    n = system.n
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    if system.kind == STOKESLET:
        fI = system.f * MIRROR
        return ImageSystem(kind=system.kind,
                           combined_positions=zz,
                           combined_f=np.vstack([system.f, -fI]),
                           combined_g=None, combined_q=None,
                           combined_sign=sign,
                           image_positions=yI, image_f=fI,
                           source_y3=y[:, 2].copy())
    gI = system.g * MIRROR
    qI = system.q * MIRROR
    return ImageSystem(kind=system.kind,
                       combined_positions=zz,
                       combined_f=None,
                       combined_g=np.vstack([system.g, gI]),
                       combined_q=np.vstack([system.q, qI]),
                       combined_sign=sign,
                       image_positions=yI, image_g=gI, image_q=qI,
                       source_y3=y[:, 2].copy())


def generate_system(n: int, box_length: float, kind: str, geometry: str = FREE_SPACE,
                    seed: int = 0) -> PointSystem:
    """Uniform random system: positions in [0, L)^3, strengths in [-1, 1]."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if box_length <= 0:
        raise ParameterError("box_length must be positive")
    rng = np.random.default_rng(seed)
    y = rng.uniform(0.0, box_length, size=(n, 3))
    if geometry == HALF_SPACE:
        # open interval (0, L): sources strictly above the wall
        z = rng.uniform(0.0, box_length, size=n)
        while np.any(z == 0.0):
            z[z == 0.0] = rng.uniform(0.0, box_length, size=np.sum(z == 0.0))
        y[:, 2] = z
    kw = dict(kind=kind, geometry=geometry, box_length=box_length,
              positions=y, seed=seed)
    if kind == STOKESLET:
        kw["f"] = rng.uniform(-1.0, 1.0, size=(n, 3))
    elif kind in (STRESSLET, ROTLET):
        kw["g"] = rng.uniform(-1.0, 1.0, size=(n, 3))
        kw["q"] = rng.uniform(-1.0, 1.0, size=(n, 3))
    else:
        raise ParameterError(f"unknown kernel kind {kind!r}")
    return PointSystem(**kw)


@dataclass
class VelocityResult:
    """Per-target velocities plus a breakdown of how they were assembled."""

    velocities: np.ndarray              # (n_targets, 3)
    parts: dict = field(default_factory=dict)   # e.g. real/fourier/self arrays
    meta: dict = field(default_factory=dict)    # timings, fft counts, params

    @property
    def n_targets(self) -> int:
        return self.velocities.shape[0]
