"""State families, blind phase channels, Kraus channels and noise mixing.

The state families here share one structural idea: a pure state with all of
its weight on a small "diagonal" subspace (|00>/|11>, |0...0>/|1...1>, the
three-excitation W block, or |jj...j> for qudits), pushed through a *blind
channel* — an unknown probabilistic mixture of local diagonal phase
unitaries.  Such channels leave computational-basis populations untouched
and can only shrink the modulus of off-diagonal elements, so everything a
verifier can rely on lives in the populations and the surviving coherences.
:func:`subspace_elements` extracts exactly those numbers, plus a leakage
scalar measuring how much population sits outside the family's subspace.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .qmat import Array, DensityMatrix, as_density, basis_index, pure_density

__all__ = [
    "BlindChannel",
    "ChannelTerm",
    "KrausChannel",
    "StateSpec",
    "SubspaceView",
    "apply_blind_channel",
    "apply_kraus_channel",
    "build_state",
    "channel_from_dict",
    "compose_blind_channels",
    "epr_state",
    "family_basis",
    "ghz_state",
    "identity_channel",
    "parse_state_spec",
    "qudit_ghz_state",
    "spec_to_dict",
    "subspace_elements",
    "w_state",
    "werner_mix",
]

PROB_TOL = 1e-12
BOUNDARY_TOL = 1e-12


# ---------------------------------------------------------------------------
# state descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSpec:
    """Parsed description of a state family member.

    ``kind`` is one of ``epr``, ``ghz``, ``w``, ``qudit_ghz``; the raw
    parameters are kept as given so a spec can be serialized back bit-for-bit.
    """

    kind: str
    theta: float | None = None
    n: int | None = None
    d: int | None = None
    amplitudes: tuple[float, ...] | None = None

    def site_dims(self) -> tuple[int, ...]:
        if self.kind == "epr":
            return (2, 2)
        if self.kind == "ghz":
            return (2,) * int(self.n)
        if self.kind == "w":
            return (2, 2, 2)
        if self.kind == "qudit_ghz":
            return (int(self.d),) * int(self.n)
        raise ValueError(f"unknown state kind {self.kind!r}")


def parse_state_spec(data: Mapping) -> StateSpec:
    """Build a :class:`StateSpec` from its JSON dictionary form."""
    try:
        kind = data["kind"]
    except KeyError:
        raise ValueError("state spec needs a 'kind' entry") from None
    if kind == "epr":
        return StateSpec(kind="epr", theta=float(data["theta"]))
    if kind == "ghz":
        n = int(data["n"])
        return StateSpec(kind="ghz", theta=float(data["theta"]), n=n)
    if kind == "w":
        a = tuple(float(x) for x in data["a"])
        if len(a) != 4:
            raise ValueError(f"W-type state takes 4 amplitudes, got {len(a)}")
        return StateSpec(kind="w", amplitudes=a)
    if kind == "qudit_ghz":
        n = int(data["n"])
        d = int(data["d"])
        alpha = tuple(float(x) for x in data["alpha"])
        return StateSpec(kind="qudit_ghz", n=n, d=d, amplitudes=alpha)
    raise ValueError(f"unknown state kind {kind!r}")


def spec_to_dict(spec: StateSpec) -> dict:
    """Inverse of :func:`parse_state_spec` (round-trips exactly)."""
    if spec.kind == "epr":
        return {"kind": "epr", "theta": spec.theta}
    if spec.kind == "ghz":
        return {"kind": "ghz", "n": spec.n, "theta": spec.theta}
    if spec.kind == "w":
        return {"kind": "w", "a": list(spec.amplitudes)}
    if spec.kind == "qudit_ghz":
        return {"kind": "qudit_ghz", "n": spec.n, "d": spec.d, "alpha": list(spec.amplitudes)}
    raise ValueError(f"unknown state kind {spec.kind!r}")


def epr_state(theta: float) -> DensityMatrix:
    """cos(theta)|00> + sin(theta)|11> as a density matrix.

    Angles where cos or sin vanishes give a product state; the output is
    still returned but carries a ``boundary`` flag.
    """
    return ghz_state(2, theta)


def ghz_state(n: int, theta: float) -> DensityMatrix:
    """cos(theta)|0...0> + sin(theta)|1...1> on n qubits."""
    if n < 2:
        raise ValueError(f"need at least 2 sites, got n={n}")
    c, s = np.cos(theta), np.sin(theta)
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = c
    vec[-1] = s
    flags = ("boundary",) if abs(c * s) <= BOUNDARY_TOL else ()
    return pure_density(vec, (2,) * n, flags)


def w_state(a: Sequence[float]) -> DensityMatrix:
    """a0|001> + a1|010> + a2|100> + a3|111> with real amplitudes."""
    a = np.asarray(a, dtype=float)
    if a.shape != (4,):
        raise ValueError(f"expected 4 real amplitudes, got shape {a.shape}")
    if abs(float(a @ a) - 1.0) > PROB_TOL:
        raise ValueError(f"amplitudes must be normalized, got sum of squares {float(a @ a)}")
    vec = np.zeros(8, dtype=complex)
    vec[[1, 2, 4, 7]] = a
    return pure_density(vec, (2, 2, 2))


def qudit_ghz_state(n: int, d: int, alpha: Sequence[float]) -> DensityMatrix:
    """sum_j alpha_j |j...j> on n d-level sites with real amplitudes."""
    if n < 2:
        raise ValueError(f"need at least 2 sites, got n={n}")
    if d < 2:
        raise ValueError(f"need local dimension >= 2, got d={d}")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (d,):
        raise ValueError(f"expected {d} amplitudes, got shape {alpha.shape}")
    if abs(float(alpha @ alpha) - 1.0) > PROB_TOL:
        raise ValueError("amplitudes must be normalized")
    sites = (d,) * n
    vec = np.zeros(d**n, dtype=complex)
    for j in range(d):
        vec[basis_index((j,) * n, sites)] = alpha[j]
    flags = ("boundary",) if np.count_nonzero(np.abs(alpha) > BOUNDARY_TOL) <= 1 else ()
    return pure_density(vec, sites, flags)


def build_state(spec: StateSpec) -> DensityMatrix:
    """Construct the pure density matrix described by ``spec``."""
    if spec.kind == "epr":
        return epr_state(spec.theta)
    if spec.kind == "ghz":
        return ghz_state(spec.n, spec.theta)
    if spec.kind == "w":
        return w_state(spec.amplitudes)
    if spec.kind == "qudit_ghz":
        return qudit_ghz_state(spec.n, spec.d, spec.amplitudes)
    raise ValueError(f"unknown state kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# blind phase channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelTerm:
    """One mixture term: probability plus one phase vector per site.

    A qubit site carries two phases (theta, vartheta) defining
    diag(e^{i theta}, e^{i vartheta}); a d-level site carries d phases.
    """

    p: float
    site_phases: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class BlindChannel:
    """Probabilistic mixture of local diagonal phase unitaries.

    Applying the channel leaves every computational-basis population exactly
    invariant and cannot increase the modulus of any off-diagonal element
    (each term multiplies it by a unit-modulus phase; mixing averages them).
    """

    terms: tuple[ChannelTerm, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("channel needs at least one term")
        probs = np.array([t.p for t in self.terms], dtype=float)
        if np.any(probs < -PROB_TOL):
            raise ValueError(f"negative term probability: {probs.min()}")
        if abs(float(probs.sum()) - 1.0) > PROB_TOL:
            raise ValueError(f"term probabilities sum to {float(probs.sum())}, expected 1")
        widths = {tuple(len(p) for p in t.site_phases) for t in self.terms}
        if len(widths) != 1:
            raise ValueError("all terms must carry phases for the same sites")
        for t in self.terms:
            for phases in t.site_phases:
                if not all(np.isfinite(phases)):
                    raise ValueError("phases must be finite reals")

    def site_dims(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.terms[0].site_phases)


def identity_channel(site_dims: Sequence[int]) -> BlindChannel:
    """Single-term channel with all phases 0 (acts as the identity map)."""
    return BlindChannel(
        (ChannelTerm(1.0, tuple(tuple(0.0 for _ in range(d)) for d in site_dims)),)
    )


def channel_from_dict(data: Mapping) -> BlindChannel:
    """Parse the JSON form ``{"terms": [{"p": ..., "site_phases": [[...], ...]}]}``."""
    try:
        raw_terms = data["terms"]
    except KeyError:
        raise ValueError("channel spec needs a 'terms' entry") from None
    terms = []
    for t in raw_terms:
        phases = tuple(tuple(float(x) for x in site) for site in t["site_phases"])
        terms.append(ChannelTerm(float(t["p"]), phases))
    return BlindChannel(tuple(terms))


def _term_diagonal(term: ChannelTerm) -> Array:
    """Flattened diagonal of the term's tensor-product phase unitary."""
    diag = np.ones(1, dtype=complex)
    for phases in term.site_phases:
        diag = np.kron(diag, np.exp(1j * np.asarray(phases, dtype=float)))
    return diag


def apply_blind_channel(rho: DensityMatrix, ch: BlindChannel) -> DensityMatrix:
    """sum_j p_j (U_j) rho (U_j)^dag with diagonal phase unitaries U_j."""
    if ch.site_dims() != rho.sites:
        raise ValueError(
            f"channel sites {ch.site_dims()} do not match state sites {rho.sites}"
        )
    out = np.zeros_like(rho.mat)
    for term in ch.terms:
        diag = _term_diagonal(term)
        # diag(u) rho diag(u)^dag is an elementwise product: u_a conj(u_b) rho_ab
        out += term.p * (np.outer(diag, diag.conj()) * rho.mat)
    return as_density(out, rho.sites, rho.flags)


def compose_blind_channels(first: BlindChannel, second: BlindChannel) -> BlindChannel:
    """The channel equal to applying ``first`` then ``second`` (term products)."""
    if first.site_dims() != second.site_dims():
        raise ValueError("channels act on different site layouts")
    terms = []
    for t2 in second.terms:
        for t1 in first.terms:
            phases = tuple(
                tuple(a + b for a, b in zip(p1, p2))
                for p1, p2 in zip(t1.site_phases, t2.site_phases)
            )
            terms.append(ChannelTerm(t1.p * t2.p, phases))
    return BlindChannel(tuple(terms))


# ---------------------------------------------------------------------------
# diagonal Kraus channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KrausChannel:
    """Mixture of products of diagonal nonnegative Kraus operators.

    ``terms[j]`` holds one weight vector per site; term j applies
    ``diag(w_site1) (x) diag(w_site2) (x) ...``.  The enforced invariant is
    joint completeness, ``sum_j (x)_sites diag(w)^2 = I`` — exactly the
    condition that makes the map trace preserving.  (Per-site completeness
    of correlated terms neither implies nor follows from it; channels built
    from independent per-site operator families via
    :meth:`from_site_channels` are jointly complete by construction.)
    """

    terms: tuple[tuple[tuple[float, ...], ...], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("channel needs at least one term")
        widths = {tuple(len(w) for w in t) for t in self.terms}
        if len(widths) != 1:
            raise ValueError("all terms must carry weights for the same sites")
        for t in self.terms:
            for w in t:
                if any(x < 0 for x in w):
                    raise ValueError("Kraus weights must be nonnegative")
        dims = widths.pop()
        acc = np.zeros(int(np.prod(dims)))
        for t in self.terms:
            v = np.ones(1)
            for w in t:
                v = np.kron(v, np.asarray(w, dtype=float) ** 2)
            acc = acc + v
        if float(np.max(np.abs(acc - 1.0))) > 1e-10:
            raise ValueError("completeness violated (map would not preserve trace)")

    def site_dims(self) -> tuple[int, ...]:
        return tuple(len(w) for w in self.terms[0])

    @classmethod
    def from_site_channels(
        cls, site_channels: Sequence[Sequence[Sequence[float]]]
    ) -> "KrausChannel":
        """Tensor independent per-site diagonal channels into one channel.

        ``site_channels[s]`` lists the weight vectors of site s's channel
        and must itself be complete (``sum_k diag(w_k)^2 = I``); the
        combined channel has one term per cross-product combination.
        """
        for s, ops in enumerate(site_channels):
            acc = np.zeros(len(ops[0]))
            for w in ops:
                acc = acc + np.asarray(w, dtype=float) ** 2
            if float(np.max(np.abs(acc - 1.0))) > 1e-10:
                raise ValueError(f"site {s + 1} operator family is not complete")
        combos = itertools.product(*[range(len(ops)) for ops in site_channels])
        terms = []
        for combo in combos:
            terms.append(
                tuple(
                    tuple(float(x) for x in site_channels[s][k])
                    for s, k in enumerate(combo)
                )
            )
        return cls(tuple(terms))


def apply_kraus_channel(rho: DensityMatrix, ch: KrausChannel) -> DensityMatrix:
    """sum_j (M_j1 (x) M_j2 (x) ...) rho (same)^dag for diagonal M's."""
    if ch.site_dims() != rho.sites:
        raise ValueError(
            f"channel sites {ch.site_dims()} do not match state sites {rho.sites}"
        )
    out = np.zeros_like(rho.mat)
    for t in ch.terms:
        diag = np.ones(1, dtype=complex)
        for w in t:
            diag = np.kron(diag, np.asarray(w, dtype=complex))
        out += np.outer(diag, diag.conj()) * rho.mat
    return as_density(out, rho.sites, rho.flags)


# ---------------------------------------------------------------------------
# white noise
# ---------------------------------------------------------------------------


def werner_mix(rho: DensityMatrix, v: float) -> DensityMatrix:
    """v * rho + (1 - v)/D * I — white-noise mixing at visibility v."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must be in [0, 1], got {v}")
    d = rho.dim
    mat = v * rho.mat + (1.0 - v) / d * np.eye(d)
    return as_density(mat, rho.sites, rho.flags)


# ---------------------------------------------------------------------------
# subspace matrix elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubspaceView:
    """Named matrix elements of a state relative to a family subspace.

    ``basis`` lists the flat computational indices spanning the subspace;
    ``populations`` maps each of them to its diagonal element, and
    ``coherences`` maps index pairs (a, b) with a < b to rho[a, b].
    ``leakage`` is the total population outside the subspace — it is always
    reported, never raised as an error.
    """

    basis: tuple[int, ...]
    populations: dict[int, float]
    coherences: dict[tuple[int, int], complex]
    leakage: float

    def coherence(self, a: int, b: int) -> complex:
        if a == b:
            raise ValueError("coherence needs two distinct indices")
        if a < b:
            return self.coherences[(a, b)]
        return np.conj(self.coherences[(b, a)])


def family_basis(family: str, sites: Sequence[int]) -> tuple[int, ...]:
    """Flat indices of the subspace basis for a family on the given sites."""
    sites = tuple(sites)
    n = len(sites)
    if family in ("epr", "ghz", "qudit"):
        d = sites[0]
        if any(s != d for s in sites):
            raise ValueError(f"family {family!r} needs uniform site dimensions, got {sites}")
        if family == "epr" and (n != 2 or d != 2):
            raise ValueError(f"family 'epr' is a two-qubit family, got sites {sites}")
        if family == "ghz" and d != 2:
            raise ValueError(f"family 'ghz' is a qubit family, got sites {sites}")
        if family in ("epr", "ghz"):
            return (0, 2**n - 1)
        return tuple(basis_index((j,) * n, sites) for j in range(d))
    if family == "w":
        if sites != (2, 2, 2):
            raise ValueError(f"family 'w' is a three-qubit family, got sites {sites}")
        # the odd-excitation block: |001>, |010>, |100>, |111>
        return (1, 2, 4, 7)
    raise ValueError(f"unknown family {family!r}")


def subspace_elements(rho: DensityMatrix, family: str) -> SubspaceView:
    """Extract the family's populations and coherences plus the leakage."""
    basis = family_basis(family, rho.sites)
    pops = {b: float(np.real(rho.mat[b, b])) for b in basis}
    cohs = {
        (a, b): complex(rho.mat[a, b])
        for i, a in enumerate(basis)
        for b in basis[i + 1 :]
    }
    leakage = float(max(0.0, 1.0 - sum(pops.values())))
    return SubspaceView(basis, pops, cohs, leakage)
