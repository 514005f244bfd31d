"""Classical configuration space, lattice geometry and model specification.

Each site carries one of 6 states: an axis in {x, y, z} and a sign in {+, -}.
The fixed enumeration is (x,+)=0, (x,-)=1, (y,+)=2, (y,-)=3, (z,+)=4, (z,-)=5.
Configurations are packed 3 bits per site into 64-bit words, 21 sites per
word, with earlier sites in more significant bits so that comparing the word
tuples is the same as comparing site sequences lexicographically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

AXES = ("x", "y", "z")
SIGNS = (+1, -1)

SITES_PER_WORD = 21
MAX_SITES = 64 * SITES_PER_WORD


def state_index(axis: str, sign: int) -> int:
    """Index in 0..5 of an (axis, sign) pair."""
    return 2 * AXES.index(axis) + (0 if sign > 0 else 1)


def state_axis_sign(idx: int) -> tuple[str, int]:
    """Inverse of :func:`state_index`."""
    if not 0 <= idx < 6:
        raise ValueError(f"site state index out of range: {idx}")
    return AXES[idx // 2], SIGNS[idx % 2]


@dataclass(frozen=True, order=True)
class SiteState:
    """One (axis, sign) pair; exactly 6 distinct values."""

    index: int

    def __post_init__(self):
        if not 0 <= self.index < 6:
            raise ValueError(f"site state index out of range: {self.index}")

    @classmethod
    def of(cls, axis: str, sign: int) -> "SiteState":
        return cls(state_index(axis, sign))

    @property
    def axis(self) -> str:
        return AXES[self.index // 2]

    @property
    def sign(self) -> int:
        return SIGNS[self.index % 2]

    def __repr__(self):
        return f"({'+' if self.sign > 0 else '-'}{self.axis})"


def _shift(site_in_word: int) -> int:
    return 3 * (SITES_PER_WORD - 1 - site_in_word)


@dataclass(frozen=True, order=True)
class Configuration:
    """A packed spin configuration; total order is lexicographic on sites."""

    n_sites: int
    words: tuple[int, ...]

    @classmethod
    def from_states(cls, states) -> "Configuration":
        states = list(states)
        n = len(states)
        if not 1 <= n <= MAX_SITES:
            raise ValueError(f"number of sites out of range: {n}")
        n_words = (n + SITES_PER_WORD - 1) // SITES_PER_WORD
        words = [0] * n_words
        for i, st in enumerate(states):
            idx = st.index if isinstance(st, SiteState) else int(st)
            if not 0 <= idx < 6:
                raise ValueError(f"site state index out of range: {idx}")
            words[i // SITES_PER_WORD] |= idx << _shift(i % SITES_PER_WORD)
        return cls(n, tuple(words))

    @classmethod
    def from_indices(cls, indices) -> "Configuration":
        return cls.from_states(indices)

    def site(self, i: int) -> SiteState:
        if not 0 <= i < self.n_sites:
            raise IndexError(i)
        w = self.words[i // SITES_PER_WORD]
        return SiteState((w >> _shift(i % SITES_PER_WORD)) & 0b111)

    def site_index(self, i: int) -> int:
        w = self.words[i // SITES_PER_WORD]
        return (w >> _shift(i % SITES_PER_WORD)) & 0b111

    def states(self) -> list[SiteState]:
        return [self.site(i) for i in range(self.n_sites)]

    def indices(self) -> list[int]:
        return [self.site_index(i) for i in range(self.n_sites)]

    @property
    def key(self) -> int:
        """Single-integer key (concatenated words, big-endian)."""
        k = 0
        for w in self.words:
            k = (k << 64) | w
        return k

    def replace_site(self, i: int, new_state: int) -> "Configuration":
        words = list(self.words)
        sh = _shift(i % SITES_PER_WORD)
        wi = i // SITES_PER_WORD
        words[wi] = (words[wi] & ~(0b111 << sh)) | (int(new_state) << sh)
        return Configuration(self.n_sites, tuple(words))

    def words_array(self) -> np.ndarray:
        return np.array(self.words, dtype=np.uint64)

    def __repr__(self):
        return "".join(repr(s) for s in self.states())


def encode(states) -> Configuration:
    """Pack a sequence of site states; decode(encode(s)) == s."""
    return Configuration.from_states(states)


def decode(config: Configuration) -> list[SiteState]:
    return config.states()


def all_configurations(n_sites: int):
    """All 6^n configurations in key order (small n only)."""
    for combo in itertools.product(range(6), repeat=n_sites):
        yield Configuration.from_indices(combo)


@dataclass(frozen=True)
class Lattice:
    """Cubic lattice in 1 or 2 dimensions with an ordered link list.

    Sites are indexed row-major.  Under periodic boundaries every site has
    degree 2d; with open boundaries edge sites have lower degree.
    """

    kind: str  # "chain1D" | "square2D"
    extent: tuple[int, ...]
    boundary: str  # "periodic" | "open"
    links: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        if self.kind not in ("chain1D", "square2D"):
            raise ValueError(f"unknown lattice kind: {self.kind}")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary: {self.boundary}")
        dims = 1 if self.kind == "chain1D" else 2
        if len(self.extent) != dims:
            raise ValueError(f"{self.kind} needs {dims} extent value(s)")
        if any(L < 1 for L in self.extent):
            raise ValueError("extents must be positive")
        if self.boundary == "periodic" and any(L < 2 for L in self.extent):
            raise ValueError("periodic extent < 2 would create a self-link")
        object.__setattr__(self, "links", tuple(self._build_links()))

    def _build_links(self):
        links = []
        if self.kind == "chain1D":
            (L,) = self.extent
            for i in range(L - 1):
                links.append((i, i + 1))
            if self.boundary == "periodic" and L > 1:
                links.append((L - 1, 0))
        else:
            Lx, Ly = self.extent  # Lx rows, Ly columns, row-major
            def sid(r, c):
                return r * Ly + c
            for r in range(Lx):
                for c in range(Ly):
                    if c + 1 < Ly:
                        links.append((sid(r, c), sid(r, c + 1)))
                    elif self.boundary == "periodic":
                        links.append((sid(r, c), sid(r, 0)))
                    if r + 1 < Lx:
                        links.append((sid(r, c), sid(r + 1, c)))
                    elif self.boundary == "periodic":
                        links.append((sid(r, c), sid(0, c)))
        return links

    @property
    def dim(self) -> int:
        return 1 if self.kind == "chain1D" else 2

    @property
    def n_sites(self) -> int:
        n = 1
        for L in self.extent:
            n *= L
        return n

    def degree(self, site: int) -> int:
        return sum(1 for (i, j) in self.links if site in (i, j))


def build_lattice(kind: str, extent, boundary: str) -> Lattice:
    return Lattice(kind, tuple(extent), boundary)


# Jump-operator family labels.  Single-site families act per site, pair
# families act per link (first label = first site of the link).
SINGLE_FAMILIES = ("x", "y", "z", "+", "-")
PAIR_FAMILIES = tuple((a, b) for a in AXES for b in AXES)


@dataclass(frozen=True)
class ModelSpec:
    """Lattice + Hamiltonian coefficients + Lindblad weights.

    local_fields maps site -> (h_x, h_y, h_z); pair_couplings maps link ->
    3x3 array J[a, b]; local_noise maps site -> {family: weight} over
    SINGLE_FAMILIES; pair_noise maps link -> {(a, b): weight}; gamma is a
    global prefactor on all noise weights.
    """

    lattice: Lattice
    local_fields: dict
    pair_couplings: dict
    local_noise: dict
    pair_noise: dict
    gamma: float = 1.0

    def __post_init__(self):
        n = self.lattice.n_sites
        links = set(self.lattice.links)
        for site in itertools.chain(self.local_fields, self.local_noise):
            if not 0 <= site < n:
                raise ValueError(f"site out of range: {site}")
        for link in itertools.chain(self.pair_couplings, self.pair_noise):
            if tuple(link) not in links:
                raise ValueError(f"not a lattice link: {link}")
        for h in self.local_fields.values():
            if len(h) != 3 or not all(np.isfinite(h)):
                raise ValueError(f"bad local field: {h}")
        for J in self.pair_couplings.values():
            J = np.asarray(J, dtype=float)
            if J.shape != (3, 3) or not np.all(np.isfinite(J)):
                raise ValueError("pair coupling must be a finite 3x3 matrix")
        for w in self.local_noise.values():
            _check_weights(w, SINGLE_FAMILIES)
        for w in self.pair_noise.values():
            _check_weights(w, PAIR_FAMILIES)
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"gamma must be finite and >= 0: {self.gamma}")


def _check_weights(weights: dict, allowed) -> None:
    for fam, w in weights.items():
        if fam not in allowed:
            raise ValueError(f"unknown jump family: {fam}")
        if not (np.isfinite(w) and w >= 0):
            raise ValueError(f"noise weight must be finite and >= 0: {fam}={w}")


def tfim_model(lattice: Lattice, J: float, h: float, gamma: float = 0.0,
               with_noise: bool = False) -> ModelSpec:
    """Transverse-field Ising model H = sum_j h sigma_z + sum_<ij> J sigma_x sigma_x.

    With with_noise=True, every link additionally carries the classicalizing
    pair-noise template (see noise.tfim_noise_template) scaled by gamma.
    """
    local_fields = {i: (0.0, 0.0, h) for i in range(lattice.n_sites)}
    pair = {}
    for link in lattice.links:
        Jm = np.zeros((3, 3))
        Jm[0, 0] = J
        pair[link] = Jm
    pair_noise = {}
    local_noise = {}
    if with_noise:
        from .noise import tfim_noise_template
        template = tfim_noise_template(J, h, lattice.dim)
        pair_noise = {link: dict(template) for link in lattice.links}
    return ModelSpec(lattice, local_fields, pair, local_noise, pair_noise,
                     gamma=gamma)
