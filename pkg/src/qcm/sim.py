"""Seeded statevector simulation of 1-8 qubits.

Measurements are against arbitrary single-qubit orthonormal bases and follow
the Born rule; the collapsed state is the renormalized projection, so
entangled partners update automatically. States are immutable; measuring
returns a new state.

Randomness comes from SplitMix64, a fixed 64-bit generator, so outcome
sequences are bit-identical across platforms for a given seed. Doubles are
produced as (x >> 11) * 2**-53 and an outcome is 1 exactly when the draw is
strictly below the probability of outcome 1.  Every measurement consumes
exactly one draw, even when the probability is 0 or 1, so log replay never
depends on floating-point noise.

Qubit 0 is the most significant bit of the amplitude index: the two-qubit
basis state |q0 q1> = |10> is amplitudes[2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MAX_QUBITS = 8

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """The SplitMix64 generator: z += golden; mix with xor-shifts."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """A double in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    @staticmethod
    def derive(seed: int, stream: int) -> int:
        """A substream seed: deterministic, documented derivation."""
        rng = SplitMix64((seed ^ (_GOLDEN * (stream + 1))) & _MASK64)
        rng.next_u64()
        return rng.next_u64()


class InvalidQubitIndex(IndexError):
    pass


@dataclass(frozen=True, slots=True)
class StateVector:
    """Unit-norm amplitudes over n qubits (2**n complex numbers)."""

    amplitudes: tuple[complex, ...]
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}")
        if len(self.amplitudes) != 1 << self.n:
            raise ValueError("amplitude count must be 2**n")
        norm = math.fsum(abs(a) ** 2 for a in self.amplitudes)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm} is not 1 within 1e-12")

    @classmethod
    def of(cls, amplitudes) -> "StateVector":
        amps = tuple(complex(a) for a in amplitudes)
        n = (len(amps) - 1).bit_length()
        return cls(amps, n)

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(a) ** 2 for a in self.amplitudes))


@dataclass(frozen=True, slots=True)
class MeasurementBasis:
    """Two orthonormal single-qubit eigenstates with outcome labels."""

    label: str
    eigenstates: tuple[tuple[complex, complex], tuple[complex, complex]]
    outcome_labels: tuple[str, str] = ("0", "1")

    def __post_init__(self):
        e0, e1 = self.eigenstates
        n0 = abs(e0[0]) ** 2 + abs(e0[1]) ** 2
        n1 = abs(e1[0]) ** 2 + abs(e1[1]) ** 2
        ip = e0[0].conjugate() * e1[0] + e0[1].conjugate() * e1[1]
        if abs(n0 - 1) > 1e-12 or abs(n1 - 1) > 1e-12 or abs(ip) > 1e-12:
            raise ValueError("eigenstates must be orthonormal within 1e-12")

    def relabel(self, outcome_labels: tuple[str, str]) -> "MeasurementBasis":
        return MeasurementBasis(self.label, self.eigenstates, outcome_labels)


def z_basis(labels: tuple[str, str] = ("0", "1")) -> MeasurementBasis:
    return MeasurementBasis("Z", (((1 + 0j), 0j), (0j, (1 + 0j))), labels)


def x_basis(labels: tuple[str, str] = ("+", "-")) -> MeasurementBasis:
    r = 1 / math.sqrt(2)
    return MeasurementBasis("X", ((complex(r), complex(r)), (complex(r), complex(-r))), labels)


def rotated_basis(theta: float, labels: tuple[str, str] | None = None) -> MeasurementBasis:
    """Basis rotated by theta in the real plane: eigenvectors
    (cos t, sin t) and (-sin t, cos t).  The Bloch vector sits at angle
    2*theta from +Z on the Z-X great circle, so theta=0 is Z and theta=pi/4
    is X; the textbook optimum for the Bell test is (0, pi/4, pi/8, 3pi/8).
    """
    c, s = math.cos(theta), math.sin(theta)
    return MeasurementBasis(
        f"angle({theta:g})",
        ((complex(c), complex(s)), (complex(-s), complex(c))),
        labels or ("0", "1"),
    )


@dataclass(frozen=True, slots=True)
class Outcome:
    index: int
    label: str
    probability: float


_INV_SQRT2 = 1 / math.sqrt(2)
_BELL_PAIR = StateVector((complex(_INV_SQRT2), 0j, 0j, complex(_INV_SQRT2)), 2)


def make_bell_pair() -> StateVector:
    """(|00> + |11>)/sqrt(2)."""
    return _BELL_PAIR


def bell_pair_through(u: tuple[tuple[complex, complex], tuple[complex, complex]]) -> StateVector:
    """(I (x) U) applied to the Bell pair: sum_i |i> U|i> / sqrt(2)."""
    amps = [0j] * 4
    for i in (0, 1):
        for j in (0, 1):
            amps[2 * i + j] = complex(u[j][i]) * _INV_SQRT2
    return StateVector(tuple(amps), 2)


def born_probabilities(state: StateVector, qubit: int, basis: MeasurementBasis) -> tuple[float, float]:
    """Born-rule probabilities of the two outcomes, without sampling."""
    _, p0, p1, _, _ = _project(state, qubit, basis)
    return p0, p1


def _project(state: StateVector, qubit: int, basis: MeasurementBasis):
    """Overlap amplitudes of each eigenstate with the state, per rest-index."""
    n = state.n
    if not 0 <= qubit < n:
        raise InvalidQubitIndex(f"qubit {qubit} out of range for {n} qubits")
    shift = n - 1 - qubit
    low_mask = (1 << shift) - 1
    (e00, e01), (e10, e11) = basis.eigenstates
    c00, c01 = e00.conjugate(), e01.conjugate()
    c10, c11 = e10.conjugate(), e11.conjugate()
    amps = state.amplitudes
    over0 = []
    over1 = []
    p0 = 0.0
    p1 = 0.0
    for r in range(1 << (n - 1)):
        i0 = ((r >> shift) << (shift + 1)) | (r & low_mask)
        i1 = i0 | (1 << shift)
        a, b = amps[i0], amps[i1]
        o0 = c00 * a + c01 * b
        o1 = c10 * a + c11 * b
        over0.append(o0)
        over1.append(o1)
        p0 += abs(o0) ** 2
        p1 += abs(o1) ** 2
    return shift, p0, p1, over0, over1


def _collapsed(state: StateVector, shift: int, eigenstate, overlaps, prob: float) -> StateVector:
    n = state.n
    low_mask = (1 << shift) - 1
    e0, e1 = eigenstate
    scale = 1.0 / math.sqrt(prob)
    amps = [0j] * (1 << n)
    for r in range(1 << (n - 1)):
        i0 = ((r >> shift) << (shift + 1)) | (r & low_mask)
        i1 = i0 | (1 << shift)
        o = overlaps[r] * scale
        amps[i0] = e0 * o
        amps[i1] = e1 * o
    return StateVector(tuple(amps), n)


def measure(
    state: StateVector, qubit: int, basis: MeasurementBasis, rng: SplitMix64
) -> tuple[Outcome, StateVector]:
    """Sample one measurement; returns the outcome and the collapsed state.

    The outcome is 1 iff the rng draw is strictly below p1. Exactly one draw
    is consumed per call.
    """
    shift, p0, p1, over0, over1 = _project(state, qubit, basis)
    u = rng.random()
    if u < p1:
        outcome = Outcome(1, basis.outcome_labels[1], p1)
        post = _collapsed(state, shift, basis.eigenstates[1], over1, p1)
    else:
        outcome = Outcome(0, basis.outcome_labels[0], p0)
        post = _collapsed(state, shift, basis.eigenstates[0], over0, p0)
    return outcome, post


class ImpossibleOutcome(ValueError):
    pass


def project_outcome(
    state: StateVector, qubit: int, basis: MeasurementBasis, index: int
) -> tuple[Outcome, StateVector]:
    """Deterministic collapse onto a chosen outcome (manual injection mode).

    No rng draw is consumed. Raises ImpossibleOutcome if the chosen outcome
    has Born probability below 1e-12 (the projection cannot be normalized).
    """
    shift, p0, p1, over0, over1 = _project(state, qubit, basis)
    prob, overlaps = (p0, over0) if index == 0 else (p1, over1)
    if prob < 1e-12:
        raise ImpossibleOutcome(f"outcome {index} has probability {prob:g}")
    outcome = Outcome(index, basis.outcome_labels[index], prob)
    return outcome, _collapsed(state, shift, basis.eigenstates[index], overlaps, prob)


def apply_one_qubit(state: StateVector, qubit: int, u) -> StateVector:
    """Apply a 2x2 unitary to one qubit."""
    n = state.n
    if not 0 <= qubit < n:
        raise InvalidQubitIndex(f"qubit {qubit} out of range for {n} qubits")
    shift = n - 1 - qubit
    low_mask = (1 << shift) - 1
    (u00, u01), (u10, u11) = u
    amps = list(state.amplitudes)
    for r in range(1 << (n - 1)):
        i0 = ((r >> shift) << (shift + 1)) | (r & low_mask)
        i1 = i0 | (1 << shift)
        a, b = amps[i0], amps[i1]
        amps[i0] = u00 * a + u01 * b
        amps[i1] = u10 * a + u11 * b
    return StateVector(tuple(amps), n)


def correlation_experiment(
    basis1: MeasurementBasis, basis2: MeasurementBasis, trials: int, seed: int
) -> float:
    """Fraction of trials in which both halves of a fresh Bell pair give the
    same outcome index, measuring qubit 0 first."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = SplitMix64(seed)
    pair = make_bell_pair()
    agree = 0
    for _ in range(trials):
        o1, post = measure(pair, 0, basis1, rng)
        o2, _ = measure(post, 1, basis2, rng)
        if o1.index == o2.index:
            agree += 1
    return agree / trials


def chsh_value(
    angles: tuple[float, float, float, float], trials: int, seed: int
) -> float:
    """The Bell-test statistic S from four correlation experiments.

    ``angles`` is (a, a', b, b'): the first party measures at a or a', the
    second at b or b' (rotated_basis convention). Each of the four settings
    runs ``trials`` fresh pairs on its own derived substream.
    S = E(a,b) - E(a,b') + E(a',b) + E(a',b') with E = 2*agreement - 1.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a, a2, b, b2 = angles
    settings = [(a, b), (a, b2), (a2, b), (a2, b2)]
    es = []
    for k, (t1, t2) in enumerate(settings):
        f = correlation_experiment(
            rotated_basis(t1), rotated_basis(t2), trials, SplitMix64.derive(seed, k)
        )
        es.append(2.0 * f - 1.0)
    return es[0] - es[1] + es[2] + es[3]
