"""Encoded connection: correctable-error counting and the swapped states.

Two encoded pairs meet at a middle station where three Bell-measurement
CNOTs join them.  Correlated two-qubit Pauli errors at a CNOT commute into
harmless errors on the X-basis control / Z-basis target measurements, and
single X errors flip exactly one of the three majority-voted Z outcomes,
so error pairs from a six-element set are classically correctable as long
as at most one CNOT sees an outcome-flipping pair.

Register conventions: each encoded pair has qubits 0-2 at its left station
and 3-5 at its right station.  Bell-measurement CNOT k uses the left
pair's qubit 3+k as control and the right pair's qubit k as target.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .encgen import EncodedPair, encoded_bell_state, encoded_pair
from .qstate import DensityOperator

ERROR_PAIR_LABELS = ("XX", "YY", "ZZ", "II", "IX", "XI")
_FLIP_LABELS = frozenset({"IX", "XI"})

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class ErrorPair:
    """(control Pauli, target Pauli) at one Bell-measurement CNOT."""

    label: str

    def __post_init__(self):
        if self.label not in ERROR_PAIR_LABELS:
            raise ValueError(f"label must be one of {ERROR_PAIR_LABELS}, got {self.label!r}")

    @property
    def control(self) -> str:
        return self.label[0]

    @property
    def target(self) -> str:
        return self.label[1]

    @property
    def flips_outcome(self) -> bool:
        """True if the pair flips one majority-voted Z measurement outcome."""
        return self.label in _FLIP_LABELS


@dataclass(frozen=True)
class PauliCombo:
    """One error pair per Bell-measurement CNOT."""

    pairs: tuple[ErrorPair, ErrorPair, ErrorPair]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if len(self.pairs) != 3:
            raise ValueError("a combo assigns exactly three error pairs")

    @property
    def is_admissible(self) -> bool:
        """Correctable iff at most one pair flips a majority-vote outcome."""
        return sum(p.flips_outcome for p in self.pairs) <= 1

    def labels(self) -> tuple[str, str, str]:
        return tuple(p.label for p in self.pairs)


@dataclass(frozen=True)
class ComboCounts:
    raw_count: int
    admissible_count: int
    paper_permutation_count: int
    admissible: tuple[PauliCombo, ...]


def enumerate_combos() -> ComboCounts:
    """All 6^3 error-pair assignments and the 160 correctable ones.

    The 160 x 6 = 960 figure counts position permutations separately and is
    reported only for parity with that convention; the physics below uses
    the 64 deduplicated states.
    """
    all_combos = [
        PauliCombo(tuple(ErrorPair(lbl) for lbl in labels))
        for labels in itertools.product(ERROR_PAIR_LABELS, repeat=3)
    ]
    admissible = tuple(c for c in all_combos if c.is_admissible)
    return ComboCounts(
        raw_count=len(all_combos),
        admissible_count=len(admissible),
        paper_permutation_count=len(admissible) * 6,
        admissible=admissible,
    )


def _apply_pauli_vec(vec: np.ndarray, pauli: str, qubit: int, n: int) -> np.ndarray:
    if pauli == "I":
        return vec
    a, b = 2**qubit, 2 ** (n - 1 - qubit)
    t = vec.reshape(a, 2, b)
    out = np.tensordot(_PAULI[pauli], t, axes=([1], [1]))  # i a b
    return np.moveaxis(out, 0, 1).reshape(-1)


@dataclass(frozen=True)
class CorrectableStateSet:
    """The 64 mutually orthogonal correctable states, factorized per pair.

    Row i of ``left`` (``right``) holds the 64-dim factor acting on the
    left (right) encoded pair; the full 4096-dim state is their Kronecker
    product.  ``phase_trivial`` marks the 32 states whose generating error
    applies no net phase flip (an even number of correlated YY/ZZ pairs);
    the other 32 are their phase-flipped partners.
    """

    left: np.ndarray   # (64, 64)
    right: np.ndarray  # (64, 64)
    phase_trivial: np.ndarray  # (64,) bool

    def __len__(self) -> int:
        return self.left.shape[0]

    def full_vector(self, i: int) -> np.ndarray:
        return np.kron(self.left[i], self.right[i])


@lru_cache(maxsize=1)
def correctable_states() -> CorrectableStateSet:
    """Deduplicated correctable states from the admissible combos.

    Each combo's Paulis act on the left pair's qubits 3-5 (CNOT controls)
    and the right pair's qubits 0-2 (CNOT targets) of the ideal double
    pair.  States equal up to global phase collapse to one representative;
    anything other than exactly 64 distinct states means a register or
    labeling convention broke, so that is a hard failure.
    """
    base = encoded_bell_state().vector
    lefts, rights, parities = [], [], []
    for combo in enumerate_combos().admissible:
        lv, rv = base, base
        phase_pairs = 0
        for k, pair in enumerate(combo.pairs):
            lv = _apply_pauli_vec(lv, pair.control, 3 + k, 6)
            rv = _apply_pauli_vec(rv, pair.target, k, 6)
            if pair.label in ("YY", "ZZ"):
                phase_pairs ^= 1
        lefts.append(lv)
        rights.append(rv)
        parities.append(phase_pairs)
    lefts = np.array(lefts)
    rights = np.array(rights)

    kept: list[int] = []
    for i in range(len(lefts)):
        duplicate = False
        for j in kept:
            ov = np.vdot(lefts[j], lefts[i]) * np.vdot(rights[j], rights[i])
            if abs(abs(ov) - 1.0) < 1e-9:
                duplicate = True
                break
        if not duplicate:
            kept.append(i)
    states = CorrectableStateSet(
        left=lefts[kept].copy(),
        right=rights[kept].copy(),
        phase_trivial=np.array([parities[i] == 0 for i in kept]),
    )
    if len(states) != 64 or int(states.phase_trivial.sum()) != 32:
        raise RuntimeError(
            f"expected 64 distinct correctable states (32 phase trivial), "
            f"found {len(states)} ({int(states.phase_trivial.sum())}); "
            "register or error-labeling convention is inconsistent"
        )
    return states


def swap_success_prob(
    rho_enc: EncodedPair | DensityOperator, *, phase_trivial_only: bool = False
) -> float:
    """Probability that the joint error pattern of two encoded pairs is
    classically correctable at the swap station.

    Computed in factorized form: the expectation of each 4096-dim
    correctable state against rho_enc (x) rho_enc is the product of two
    64-dim expectations.  With ``phase_trivial_only`` the sum is restricted
    to the 32 states carrying no net phase flip; the multi-station rate
    pipeline uses that restriction (see the chain accounting note in
    :mod:`repeater_keyrate.rates`).
    """
    rho = rho_enc.state if isinstance(rho_enc, EncodedPair) else rho_enc
    if rho.dim != 64:
        raise ValueError("swap_success_prob needs a 64-dim encoded pair")
    states = correctable_states()
    mat = rho.matrix
    left_exp = np.einsum("id,de,ie->i", states.left.conj(), mat, states.left, optimize=True).real
    right_exp = np.einsum("id,de,ie->i", states.right.conj(), mat, states.right, optimize=True).real
    products = left_exp * right_exp
    if phase_trivial_only:
        products = products[states.phase_trivial]
    return float(np.sum(products))


def chain_success_prob(p_s: float, r: int) -> float:
    """Success probability over r independent swap stations: p_s ** r."""
    if r < 1 or int(r) != r:
        raise ValueError(f"r must be a positive integer, got {r}")
    if not 0.0 <= p_s <= 1.0 + 1e-12:
        raise ValueError(f"p_s must be a probability, got {p_s}")
    return float(min(p_s, 1.0) ** r)


def _ideal_projector() -> np.ndarray:
    v = encoded_bell_state().vector
    return np.outer(v, v.conj())


def swapped_state_ideal(p_r: float) -> DensityOperator:
    """Perfect pair with probability P_r, uniform junk on the complement else."""
    if not 0.0 <= p_r <= 1.0:
        raise ValueError(f"P_r must be a probability, got {p_r}")
    proj = _ideal_projector()
    comp = (np.eye(64, dtype=complex) - proj) / 63.0
    return DensityOperator(p_r * proj + (1.0 - p_r) * comp)


def rho_s_weights(beta: float, r: int) -> tuple[float, float, float]:
    """(ideal, dephased, mixed-remainder) weights of the swapped state after
    r stations, each with three first-order-noisy Bell-measurement CNOTs.

    Evaluated in log space so large r underflows cleanly to zero instead of
    overflowing intermediate powers.
    """
    if r < 1 or int(r) != r:
        raise ValueError(f"r must be a positive integer, got {r}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if beta == 0.0:
        return 1.0, 0.0, 0.0
    if beta == 1.0:
        return 0.0, 0.0, 1.0
    log1m = np.log1p(-beta)
    w_ideal = float(np.exp(3 * r * log1m))
    w_deph = float(np.exp(r * (np.log(3.0) + np.log(beta)) + 2 * r * log1m))
    q_r = 1.0 - w_ideal - w_deph
    assert q_r >= -1e-12, f"remainder weight {q_r} negative"
    return w_ideal, w_deph, max(q_r, 0.0)


def rho_s(beta: float, r: int) -> DensityOperator:
    """Swapped state conditioned on correctable errors, r stations deep."""
    w_ideal, w_deph, q_r = rho_s_weights(beta, r)
    proj = _ideal_projector()
    deph = np.zeros((64, 64), dtype=complex)
    deph[0, 0] = deph[63, 63] = 0.5
    return DensityOperator(
        w_ideal * proj + w_deph * deph + q_r * np.eye(64, dtype=complex) / 64.0
    )


def swapped_state_nonideal(
    beta: float, f0: float, r: int, *, p_s: float | None = None
) -> DensityOperator:
    """State after r swaps with noisy Bell-measurement CNOTs.

    ``p_s`` may be passed in to reuse an already computed encoded pair;
    otherwise the full generation pipeline runs.
    """
    if p_s is None:
        p_s = swap_success_prob(encoded_pair(beta, f0))
    p_r = chain_success_prob(p_s, r)
    proj = _ideal_projector()
    comp = (np.eye(64, dtype=complex) - proj) / 63.0
    return DensityOperator(p_r * rho_s(beta, r).matrix + (1.0 - p_r) * comp)
