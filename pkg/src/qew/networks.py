"""Quantum-network model: sources, local controlled-phase gates, reductions.

A network is a list of named parties, a list of entangled sources whose
qubits are handed to parties in declared order, and a set of local
controlled-phase gates (each acting on two qubits held by *one* party).
Qubits are numbered globally, 1-based, in source declaration order.

Two LOCC reductions connect the multipartite families back to shared pairs:

* :func:`reduce_ghz_to_epr` — measure all but two qubits of a GHZ-type
  state in the +/- basis; an outcome-conditioned sign flip on one kept
  qubit restores the original coherence exactly, on every branch.
* :func:`entanglement_swap` — Bell-measure the inner qubits of two
  |00>/|11>-supported pairs; conditional Z/X corrections turn every branch
  into a pair whose coherence is the (normalized) product of the input
  coherences.

Correction table used for the Bell outcomes (first kept qubit = left input's
remaining qubit, second = right input's):

    phi+ : none            phi- : Z on first kept
    psi+ : X on second     psi- : X on second, then Z on first
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .qmat import (
    BELL_LABELS,
    PAULI_X,
    PAULI_Z,
    Array,
    DensityMatrix,
    _sandwich,
    as_density,
    apply_local_unitaries,
    bell_basis,
    joint_measure_two_sites,
    plusminus_basis,
)
from .states import (
    BlindChannel,
    StateSpec,
    apply_blind_channel,
    build_state,
    parse_state_spec,
    spec_to_dict,
    subspace_elements,
)
from .witnesses import (
    EPS_EQ,
    EPS_NZ,
    LEAKAGE_TOL,
    ParadoxBattery,
    battery_epr,
    battery_ghz,
    battery_qudit_2,
    battery_qudit_n,
    battery_w,
    reindex_battery,
)

__all__ = [
    "CpGate",
    "NetworkSpec",
    "ReductionResult",
    "SourceSpec",
    "build_network_state",
    "connectivity_check",
    "cp_gate",
    "entanglement_swap",
    "generate_cluster",
    "network_to_dict",
    "parse_network_spec",
    "qubit_owners",
    "reduce_ghz_to_epr",
    "sample_branch",
    "source_batteries",
    "swap_branches",
]

MAX_DIM = 4096  # 12 qubits
ZERO_BRANCH = 1e-12


# ---------------------------------------------------------------------------
# network description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceSpec:
    """One entangled source and the party receiving each of its qubits."""

    state: StateSpec
    owners: tuple[str, ...]


@dataclass(frozen=True)
class CpGate:
    """A controlled-phase gate applied by ``party`` to two of its qubits.

    ``qubits`` are global 1-based indices into the concatenated source
    order.  The gate is symmetric, so the pair order is irrelevant.
    """

    party: str
    theta: float
    qubits: tuple[int, int]


@dataclass(frozen=True)
class NetworkSpec:
    parties: tuple[str, ...]
    sources: tuple[SourceSpec, ...]
    cp_gates: tuple[CpGate, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.parties)) != len(self.parties):
            raise ValueError("duplicate party names")
        if not self.sources:
            raise ValueError("network needs at least one source")
        owners = qubit_owners(self)
        known = set(self.parties)
        for q, (owner, _dim) in enumerate(owners, start=1):
            if owner not in known:
                raise ValueError(f"qubit {q} owned by undeclared party {owner!r}")
        for g in self.cp_gates:
            a, b = g.qubits
            if a == b:
                raise ValueError("controlled-phase gate needs two distinct qubits")
            for q in (a, b):
                if not 1 <= q <= len(owners):
                    raise ValueError(f"gate qubit {q} out of range")
                if owners[q - 1][1] != 2:
                    raise ValueError(f"gate qubit {q} is not a qubit site")
                if owners[q - 1][0] != g.party:
                    raise ValueError(
                        f"gate by {g.party!r} touches qubit {q} owned by {owners[q - 1][0]!r}"
                    )
            if not np.isfinite(g.theta):
                raise ValueError("gate angle must be finite")


def qubit_owners(spec: NetworkSpec) -> list[tuple[str, int]]:
    """Per global qubit: (owning party, local dimension), in source order."""
    out: list[tuple[str, int]] = []
    for src in spec.sources:
        dims = src.state.site_dims()
        if len(src.owners) != len(dims):
            raise ValueError(
                f"source with {len(dims)} sites assigned to {len(src.owners)} owners"
            )
        out.extend((owner, d) for owner, d in zip(src.owners, dims))
    return out


def parse_network_spec(data: Mapping) -> NetworkSpec:
    """Parse the JSON network form (parties / sources / cp_gates)."""
    try:
        parties = tuple(str(p) for p in data["parties"])
        raw_sources = data["sources"]
    except KeyError as exc:
        raise ValueError(f"network spec missing entry: {exc}") from None
    sources = tuple(
        SourceSpec(parse_state_spec(s["state"]), tuple(str(o) for o in s["owners"]))
        for s in raw_sources
    )
    gates = tuple(
        CpGate(str(g["party"]), float(g["theta"]), (int(g["qubits"][0]), int(g["qubits"][1])))
        for g in data.get("cp_gates", ())
    )
    return NetworkSpec(parties, sources, gates)


def network_to_dict(spec: NetworkSpec) -> dict:
    """Inverse of :func:`parse_network_spec` (round-trips exactly)."""
    return {
        "parties": list(spec.parties),
        "sources": [
            {"state": spec_to_dict(s.state), "owners": list(s.owners)}
            for s in spec.sources
        ],
        "cp_gates": [
            {"party": g.party, "theta": g.theta, "qubits": list(g.qubits)}
            for g in spec.cp_gates
        ],
    }


# ---------------------------------------------------------------------------
# state assembly
# ---------------------------------------------------------------------------


def build_network_state(spec: NetworkSpec) -> DensityMatrix:
    """Tensor product of all source states in declared qubit order."""
    dims = tuple(d for _owner, d in qubit_owners(spec))
    if int(np.prod(dims)) > MAX_DIM:
        raise ValueError(
            f"qubit budget exceeded: total dimension {int(np.prod(dims))} > {MAX_DIM}"
        )
    mat = np.ones((1, 1), dtype=complex)
    flags: frozenset[str] = frozenset()
    for src in spec.sources:
        rho = build_state(src.state)
        mat = np.kron(mat, rho.mat)
        flags |= rho.flags
    return as_density(mat, dims, flags)


def cp_gate(theta: float) -> Array:
    """diag(1, 1, 1, e^{i theta}) — symmetric two-qubit controlled phase."""
    return np.diag(np.array([1.0, 1.0, 1.0, np.exp(1j * theta)], dtype=complex))


def _gates_diagonal(spec: NetworkSpec, dims: tuple[int, ...]) -> Array:
    """Flattened diagonal of the product of all gate unitaries.

    Every gate is diagonal, so the whole gate layer is one phase vector:
    entry I picks up e^{i theta} for each gate whose two qubits are both 1
    in I's digit expansion.
    """
    dim = int(np.prod(dims))
    diag = np.ones(dim, dtype=complex)
    idx = np.arange(dim)
    for g in spec.cp_gates:
        bits = []
        for q in g.qubits:
            stride = int(np.prod(dims[q:])) if q < len(dims) else 1
            bits.append((idx // stride) % dims[q - 1])
        both = (bits[0] == 1) & (bits[1] == 1)
        diag[both] *= np.exp(1j * g.theta)
    return diag


def generate_cluster(spec: NetworkSpec, ch: BlindChannel | None = None) -> DensityMatrix:
    """Apply all controlled-phase gates, then the blind channel.

    Both layers are diagonal-phase maps, so they commute; applying the
    channel first gives the same matrix to floating-point accuracy.  Gates
    with angles outside (0, pi) are allowed but flag the output.
    """
    rho = build_network_state(spec)
    diag = _gates_diagonal(spec, rho.sites)
    mat = np.outer(diag, diag.conj()) * rho.mat
    flags = set(rho.flags)
    if any(not 0.0 < g.theta < np.pi for g in spec.cp_gates):
        flags.add("gate-angle-boundary")
    out = as_density(mat, rho.sites, flags)
    if ch is not None:
        out = apply_blind_channel(out, ch)
    return out


# ---------------------------------------------------------------------------
# LOCC reductions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReductionResult:
    """A corrected two-qubit state distilled from one measurement branch.

    ``corrections`` lists the conditional Paulis applied, as (name, output
    qubit) pairs; ``outcome`` is the measurement record ("+-+" style for
    +/- reductions, a Bell label for swaps).
    """

    pair: tuple[int, int]
    state: DensityMatrix
    corrections: tuple[tuple[str, int], ...]
    probability: float
    outcome: str

    def __post_init__(self) -> None:
        if not 0.0 < self.probability <= 1.0 + 1e-12:
            raise ValueError(f"branch probability {self.probability} outside (0, 1]")


def _require_edge_support(rho: DensityMatrix, leakage_tol: float, what: str) -> None:
    family = "epr" if rho.sites == (2, 2) else "ghz"
    leak = subspace_elements(rho, family).leakage
    if leak > leakage_tol:
        raise ValueError(
            f"{what} requires support on the edge subspace; leakage {leak:.3e} "
            f"exceeds {leakage_tol:.1e}"
        )


def reduce_ghz_to_epr(
    rho: DensityMatrix,
    keep: tuple[int, int],
    outcomes: Sequence[int] | None = None,
    *,
    leakage_tol: float = LEAKAGE_TOL,
) -> ReductionResult | list[ReductionResult]:
    """Measure all qubits except ``keep`` in the +/- basis and correct.

    ``outcomes`` (one 0/+ or 1/- entry per measured qubit, in site order)
    selects a single branch; ``None`` returns every branch.  An odd number
    of ``-`` outcomes flips the sign of the surviving coherence, so those
    branches get a Z on the first kept qubit; afterwards every branch
    carries the input's |0..0>/|1..1> coherence unchanged.
    """
    if any(d != 2 for d in rho.sites):
        raise ValueError(f"qubit state required, got sites {rho.sites}")
    n = rho.n_sites
    i, j = keep
    if i == j:
        raise ValueError("keep indices must be distinct")
    for q in (i, j):
        if not 1 <= q <= n:
            raise ValueError(f"keep index {q} out of range")
    if n < 3:
        raise ValueError("nothing to measure: state already has 2 qubits")
    _require_edge_support(rho, leakage_tol, "reduction")
    i, j = min(i, j), max(i, j)
    others = [q for q in range(1, n + 1) if q not in (i, j)]

    def one_branch(bits: tuple[int, ...]) -> ReductionResult:
        pm = plusminus_basis()
        vec = np.ones(1, dtype=complex)
        for b in bits:
            vec = np.kron(vec, pm[b])
        # <v| rho |v> over all measured sites at once (a joint projection).
        sub = _sandwich(rho, others, vec)
        p = float(np.real(np.trace(sub)))
        if p <= ZERO_BRANCH:
            raise ValueError(f"branch {bits} has zero probability")
        state = as_density(sub / p, (2, 2))
        corrections: tuple[tuple[str, int], ...] = ()
        if sum(bits) % 2 == 1:
            state = apply_local_unitaries(state, [(1, PAULI_Z)])
            corrections = (("Z", 1),)
        label = "".join("+" if b == 0 else "-" for b in bits)
        return ReductionResult((i, j), state, corrections, p, label)

    if outcomes is not None:
        bits = tuple(int(b) for b in outcomes)
        if len(bits) != len(others) or any(b not in (0, 1) for b in bits):
            raise ValueError(
                f"outcomes must be {len(others)} entries of 0 (+) or 1 (-), got {outcomes}"
            )
        return one_branch(bits)
    all_bits = [
        tuple((k >> (len(others) - 1 - t)) & 1 for t in range(len(others)))
        for k in range(2 ** len(others))
    ]
    return [one_branch(bits) for bits in all_bits]


_SWAP_CORRECTIONS: dict[str, tuple[tuple[str, int], ...]] = {
    "phi+": (),
    "phi-": (("Z", 1),),
    "psi+": (("X", 2),),
    "psi-": (("X", 2), ("Z", 1)),
}
_PAULI_BY_NAME = {"Z": PAULI_Z, "X": PAULI_X}


def swap_branches(
    rho_ab: DensityMatrix,
    rho_cd: DensityMatrix,
    *,
    leakage_tol: float = LEAKAGE_TOL,
) -> list[ReductionResult]:
    """All nonzero Bell branches of an entanglement swap, corrected.

    The two pair states (on qubits A,B and C,D) must live in the
    |00>/|11> span up to ``leakage_tol``.  B and C are jointly measured in
    the Bell basis; the table at the top of this module maps each outcome
    to its correction.  On every returned branch the output coherence is
    rho_00;11 * rho'_00;11 / norm (the psi branches see the conjugate of
    the second factor, which coincides for real coherences).
    """
    for rho, name in ((rho_ab, "first"), (rho_cd, "second")):
        if rho.sites != (2, 2):
            raise ValueError(f"{name} input must be a two-qubit state, got {rho.sites}")
        _require_edge_support(rho, leakage_tol, "entanglement swap")
    joint = as_density(np.kron(rho_ab.mat, rho_cd.mat), (2, 2, 2, 2))
    branches = joint_measure_two_sites(joint, (2, 3), bell_basis())
    out = []
    for k, br in enumerate(branches):
        if br.flagged_zero:
            continue
        label = BELL_LABELS[k]
        state = br.state
        corrections = _SWAP_CORRECTIONS[label]
        for name, q in corrections:
            state = apply_local_unitaries(state, [(q, _PAULI_BY_NAME[name])])
        out.append(ReductionResult((1, 4), state, corrections, br.probability, label))
    return out


def entanglement_swap(
    rho_ab: DensityMatrix,
    rho_cd: DensityMatrix,
    outcome: str,
    *,
    leakage_tol: float = LEAKAGE_TOL,
) -> ReductionResult:
    """Single corrected Bell branch of the swap; see :func:`swap_branches`."""
    if outcome not in BELL_LABELS:
        raise ValueError(f"outcome must be one of {BELL_LABELS}, got {outcome!r}")
    for br in swap_branches(rho_ab, rho_cd, leakage_tol=leakage_tol):
        if br.outcome == outcome:
            return br
    raise ValueError(f"branch {outcome!r} has zero probability")


def sample_branch(
    branches: Sequence[ReductionResult], seed: int, index: int = 0
) -> ReductionResult:
    """Pick one branch by its probability; deterministic in (seed, index)."""
    if not branches:
        raise ValueError("no branches to sample from")
    probs = np.array([b.probability for b in branches], dtype=float)
    u = np.random.default_rng((seed, index)).uniform(0.0, float(probs.sum()))
    return branches[int(np.searchsorted(np.cumsum(probs), u))]


# ---------------------------------------------------------------------------
# per-source verification batteries and connectivity
# ---------------------------------------------------------------------------


def source_batteries(
    spec: NetworkSpec,
    *,
    eps_eq: float = EPS_EQ,
    eps_nz: float = EPS_NZ,
    imag_companion: bool = True,
) -> list[ParadoxBattery]:
    """One paradox battery per source, re-indexed to global qubit numbers.

    Each source contributes its family's battery (pairwise ZZ equalities,
    ZX/XZ zeros, and the source-wide X-string NonZero line), shifted onto
    the source's qubits.  Evaluating them against the network state checks
    every source independently.
    """
    out = []
    offset = 0
    for src in spec.sources:
        dims = src.state.site_dims()
        kind = src.state.kind
        if kind in ("epr", "ghz"):
            battery = battery_ghz(
                len(dims), eps_eq=eps_eq, eps_nz=eps_nz, imag_companion=imag_companion
            )
        elif kind == "w":
            battery = battery_w(
                eps_eq=eps_eq, eps_nz=eps_nz, imag_companion=imag_companion
            )
        elif kind == "qudit_ghz":
            if len(dims) == 2:
                battery = battery_qudit_2(dims[0], eps_eq=eps_eq, eps_nz=eps_nz)
            else:
                battery = battery_qudit_n(len(dims), dims[0], eps_eq=eps_eq, eps_nz=eps_nz)
        else:
            raise ValueError(f"no battery known for source kind {kind!r}")
        out.append(reindex_battery(battery, offset))
        offset += len(dims)
    return out


def connectivity_check(spec: NetworkSpec) -> tuple[bool, list[list[str]]]:
    """Whether shared sources connect all parties; also the components.

    Parties are graph nodes; every source adds edges among its owners.
    Returns (single component?, components in first-appearance order).
    """
    adj: dict[str, set[str]] = {p: set() for p in spec.parties}
    for src in spec.sources:
        owners = set(src.owners)
        for a in owners:
            adj[a] |= owners - {a}
    seen: set[str] = set()
    components: list[list[str]] = []
    for start in spec.parties:
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nxt in sorted(adj[node]):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        components.append(sorted(comp, key=spec.parties.index))
    return len(components) == 1, components
