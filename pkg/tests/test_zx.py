import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcm import zx
from qcm.zx import Colour, Direction, WireKind

from _diagrams import random_diagram

H2 = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

# Frozen by hand from the spider definition: Z(a) = |0..0><0..0| + e^{ia}|1..1><1..1|,
# X(a) the same conjugated by H on every leg.
IDENTITY2 = np.eye(2, dtype=complex)
CUP = np.array([[1], [0], [0], [1]], dtype=complex)
# X(0) state: H @ (1,1)^T = (sqrt(2), 0)^T, i.e. proportional to |0>.
X0_STATE = np.array([[math.sqrt(2)], [0]], dtype=complex)
# Doubled measurement spider: sends the doubled basis effect |ii> to |i>.
MEASURE_Z_DOUBLED = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex
)


class TestPhase:
    def test_normalizes_into_range(self):
        assert zx.Phase(zx.TWO_PI).value == 0.0
        assert zx.Phase(-math.pi).value == pytest.approx(math.pi)
        assert 0.0 <= zx.Phase(123.456).value < zx.TWO_PI

    def test_addition_wraps(self):
        p = zx.Phase(1.5 * math.pi) + zx.Phase(math.pi)
        assert p.value == pytest.approx(0.5 * math.pi)

    @given(
        st.floats(-100.0, 100.0, allow_nan=False),
        st.floats(-100.0, 100.0, allow_nan=False),
    )
    def test_addition_matches_modular_sum(self, a, b):
        got = (zx.Phase(a) + zx.Phase(b)).value
        want = (a + b) % zx.TWO_PI
        diff = abs(got - want) % zx.TWO_PI
        assert min(diff, zx.TWO_PI - diff) < 1e-9


class TestValidation:
    def test_hadamard_needs_degree_two(self):
        with pytest.raises(zx.DiagramError):
            zx.build_diagram(
                {0: zx.Hadamard(), 1: zx.Boundary(Direction.OUTPUT, WireKind.QUANTUM)},
                [(0, 1, WireKind.QUANTUM)],
                outputs=[1],
            )

    def test_hadamard_rejects_classical_wire(self):
        with pytest.raises(zx.DiagramError):
            zx.build_diagram(
                {
                    0: zx.Boundary(Direction.INPUT, WireKind.CLASSICAL),
                    1: zx.Hadamard(),
                    2: zx.Boundary(Direction.OUTPUT, WireKind.CLASSICAL),
                },
                [(0, 1, WireKind.CLASSICAL), (1, 2, WireKind.CLASSICAL)],
                inputs=[0],
                outputs=[2],
            )

    def test_boundary_degree_one(self):
        with pytest.raises(zx.DiagramError):
            zx.build_diagram(
                {
                    0: zx.ZSpider(),
                    1: zx.Boundary(Direction.OUTPUT, WireKind.QUANTUM),
                },
                [(0, 1, WireKind.QUANTUM), (0, 1, WireKind.QUANTUM)],
                outputs=[1],
            )

    def test_edge_to_missing_node_rejected(self):
        with pytest.raises(zx.DiagramError):
            zx.build_diagram({0: zx.ZSpider()}, [(0, 7, WireKind.QUANTUM)])


class TestCompose:
    def test_identity_wire_composes_to_identity_wire(self):
        composed = zx.compose(zx.wire(), zx.wire())
        assert zx.canonical_text(composed) == zx.canonical_text(zx.wire())
        assert np.allclose(zx.evaluate_pure(composed), IDENTITY2)

    def test_z_spider_chain_is_identity(self):
        z = zx.spider(Colour.Z, 1, 1, 0.0)
        assert np.allclose(zx.evaluate_pure(zx.compose(z, z)), IDENTITY2)

    def test_measure_then_encode_has_classical_middle_wire(self):
        d = zx.compose(zx.measurement_spider(Colour.Z), zx.encoding_spider(Colour.Z))
        spider_ids = [i for i, n in d.nodes if isinstance(n, (zx.ZSpider, zx.XSpider))]
        middle = [
            e
            for e in d.edges
            if {e.a, e.b} == set(spider_ids)
        ]
        assert len(middle) == 1 and middle[0].kind is WireKind.CLASSICAL
        # collapse then re-prepare: keeps |ii><ii|, kills off-diagonals
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = expected[3, 3] = 1
        assert np.allclose(zx.evaluate_doubled(d), expected)

    def test_arity_mismatch(self):
        with pytest.raises(zx.ArityMismatch):
            zx.compose(zx.wire(), zx.tensor(zx.wire(), zx.wire()))

    def test_wire_kind_mismatch(self):
        with pytest.raises(zx.WireKindMismatch):
            zx.compose(zx.wire(WireKind.QUANTUM), zx.wire(WireKind.CLASSICAL))

    def test_cup_cap_composes_to_circle_scalar(self):
        cup = zx.build_diagram(
            {
                0: zx.Boundary(Direction.OUTPUT, WireKind.QUANTUM),
                1: zx.Boundary(Direction.OUTPUT, WireKind.QUANTUM),
            },
            [(0, 1, WireKind.QUANTUM)],
            outputs=[0, 1],
        )
        cap = zx.build_diagram(
            {
                0: zx.Boundary(Direction.INPUT, WireKind.QUANTUM),
                1: zx.Boundary(Direction.INPUT, WireKind.QUANTUM),
            },
            [(0, 1, WireKind.QUANTUM)],
            inputs=[0, 1],
        )
        loop = zx.compose(cup, cap)
        assert loop.inputs == () and loop.outputs == ()
        assert zx.evaluate_pure(loop) == pytest.approx(np.array([[2.0]]))
        assert zx.evaluate_doubled(loop) == pytest.approx(np.array([[4.0]]))


class TestTensor:
    def test_empty_is_unit(self):
        d = zx.spider(Colour.Z, 1, 2, 0.7)
        assert zx.canonical_text(zx.tensor(zx.empty_diagram(), d)) == zx.canonical_text(d)

    def test_two_wires_give_4x4_identity(self):
        d = zx.tensor(zx.wire(), zx.wire())
        assert np.allclose(zx.evaluate_pure(d), np.eye(4))

    def test_states_tensor_to_kronecker_product(self):
        z_state = zx.spider(Colour.Z, 0, 1)
        x_state = zx.spider(Colour.X, 0, 1)
        got = zx.evaluate_pure(zx.tensor(z_state, x_state))
        want = np.kron(zx.evaluate_pure(z_state), zx.evaluate_pure(x_state))
        assert np.allclose(got, want)


class TestFusion:
    def test_same_colour_chain_fuses_phases(self):
        quarter = zx.spider(Colour.Z, 1, 1, math.pi / 2)
        chain = zx.compose(quarter, quarter)
        fused = zx.fuse_spiders(chain)
        spiders = [n for _, n in fused.nodes if isinstance(n, zx.ZSpider)]
        assert len(spiders) == 1
        assert spiders[0].phase.value == pytest.approx(math.pi)
        assert zx.equal_up_to_scalar(zx.evaluate_pure(chain), zx.evaluate_pure(fused))

    def test_different_colours_do_not_fuse(self):
        d = zx.compose(zx.spider(Colour.Z, 1, 1, 0.3), zx.spider(Colour.X, 1, 1, 0.4))
        assert zx.fuse_spiders(d) == d

    def test_measurement_equation_fuses_to_compact_form(self):
        eq = zx.measurement_equation(Colour.Z)
        assert zx.canonical_text(zx.fuse_spiders(eq.unfolded)) == zx.canonical_text(
            zx.fuse_spiders(eq.compact)
        )
        # chain mirrors the proof: same-gate absorbed, then the collapse fusion
        assert len(eq.unfolded_steps) == 3

    def test_parallel_wires_vanish_as_scalar_one(self):
        # two spiders joined by two parallel wires: fusion drops both loops
        d = zx.build_diagram(
            {
                0: zx.ZSpider(zx.Phase(0.0)),
                1: zx.ZSpider(zx.Phase(0.0)),
                2: zx.Boundary(Direction.INPUT, WireKind.QUANTUM),
                3: zx.Boundary(Direction.OUTPUT, WireKind.QUANTUM),
            },
            [
                (0, 1, WireKind.QUANTUM),
                (0, 1, WireKind.QUANTUM),
                (2, 0, WireKind.QUANTUM),
                (1, 3, WireKind.QUANTUM),
            ],
            inputs=[2],
            outputs=[3],
        )
        fused = zx.fuse_spiders(d)
        assert np.allclose(zx.evaluate_pure(fused), zx.evaluate_pure(d))

    @pytest.mark.parametrize("seed", range(60))
    def test_fusion_soundness_doubled(self, seed):
        d = random_diagram(seed, mixed_kinds=True)
        assert zx.equal_up_to_scalar(
            zx.evaluate_doubled(d), zx.evaluate_doubled(zx.fuse_spiders(d)), 1e-9
        )

    @pytest.mark.parametrize("seed", range(60, 120))
    def test_fusion_soundness_pure(self, seed):
        d = random_diagram(seed, mixed_kinds=False)
        assert zx.equal_up_to_scalar(
            zx.evaluate_pure(d), zx.evaluate_pure(zx.fuse_spiders(d)), 1e-9
        )

    @pytest.mark.parametrize("seed", range(40))
    def test_fusion_order_does_not_matter(self, seed):
        import random as _random

        d = random_diagram(seed + 7000, mixed_kinds=True)
        rng = _random.Random(seed)
        shuffled = d
        while True:
            candidates = [
                e
                for e in shuffled.edges
                if e.a != e.b
                and zx._spider_colour(shuffled.node_map[e.a]) is not None
                and zx._spider_colour(shuffled.node_map[e.a])
                is zx._spider_colour(shuffled.node_map[e.b])
            ]
            if not candidates:
                break
            shuffled = zx._fuse_once(shuffled, rng.choice(candidates))
        assert zx.equal_up_to_scalar(
            zx.evaluate_doubled(shuffled), zx.evaluate_doubled(zx.fuse_spiders(d)), 1e-9
        )


class TestEvaluatePure:
    def test_z_identity(self):
        assert np.allclose(zx.evaluate_pure(zx.spider(Colour.Z, 1, 1)), IDENTITY2)

    def test_bell_cup(self):
        assert np.allclose(zx.evaluate_pure(zx.bell_state()), CUP)

    def test_x_state_is_hadamard_of_z_state(self):
        # by expanding the conjugation: H @ (1,1)^T = (sqrt2, 0)^T
        got = zx.evaluate_pure(zx.spider(Colour.X, 0, 1))
        assert np.allclose(got, X0_STATE)
        assert zx.equal_up_to_scalar(got, np.array([[1], [0]], dtype=complex))

    def test_rejects_classical_wires(self):
        with pytest.raises(zx.ClassicalWirePresent):
            zx.evaluate_pure(zx.wire(WireKind.CLASSICAL))

    def test_phased_spider_matrix(self):
        a = 0.9
        got = zx.evaluate_pure(zx.spider(Colour.Z, 1, 1, a))
        want = np.diag([1, np.exp(1j * a)])
        assert np.allclose(got, want)

    def test_self_loop_is_scalar_one(self):
        plain = zx.spider(Colour.Z, 1, 1, 0.4)
        looped = zx.build_diagram(
            {
                0: zx.ZSpider(zx.Phase(0.4)),
                1: zx.Boundary(Direction.INPUT, WireKind.QUANTUM),
                2: zx.Boundary(Direction.OUTPUT, WireKind.QUANTUM),
            },
            [(0, 0, WireKind.QUANTUM), (1, 0, WireKind.QUANTUM), (0, 2, WireKind.QUANTUM)],
            inputs=[1],
            outputs=[2],
        )
        assert np.allclose(zx.evaluate_pure(looped), zx.evaluate_pure(plain))

    @pytest.mark.parametrize("seed", range(20))
    def test_matrix_shape_matches_boundary_dims(self, seed):
        d = random_diagram(seed + 500, mixed_kinds=False)
        m = zx.evaluate_pure(d)
        assert m.shape == (2 ** len(d.outputs), 2 ** len(d.inputs))


class TestEvaluateDoubled:
    def test_measure_spider_matrix(self):
        got = zx.evaluate_doubled(zx.measurement_spider(Colour.Z))
        assert np.allclose(got, MEASURE_Z_DOUBLED)

    def test_encode_spider_is_transpose_shaped(self):
        got = zx.evaluate_doubled(zx.encoding_spider(Colour.Z))
        assert np.allclose(got, MEASURE_Z_DOUBLED.T)

    def test_quantum_wire_is_dim_four(self):
        assert zx.evaluate_doubled(zx.wire()).shape == (4, 4)
        assert zx.evaluate_doubled(zx.wire(WireKind.CLASSICAL)).shape == (2, 2)

    def test_all_quantum_spider_doubles_pure_semantics(self):
        for colour in Colour:
            d = zx.spider(colour, 1, 2, 0.8)
            assert np.allclose(
                zx.evaluate_doubled(d),
                _doubled_permuted(zx.evaluate_pure(d), n_out=2, n_in=1),
            )

    def test_measurement_equation_both_variants(self):
        for colour in Colour:
            eq = zx.measurement_equation(colour)
            lhs = zx.evaluate_doubled(eq.unfolded)
            rhs = zx.evaluate_doubled(eq.compact)
            assert zx.equal_up_to_scalar(lhs, rhs, 1e-9)

    def test_x_measurement_projects_onto_plus_minus(self):
        # the red measure spider maps doubled |+><+| to outcome 0, |-><-| to 1
        got = zx.evaluate_doubled(zx.measurement_spider(Colour.X))
        plus = H2 @ np.array([1, 0])
        minus = H2 @ np.array([0, 1])
        for idx, v in enumerate((plus, minus)):
            doubled_state = np.kron(v, v.conj()).reshape(4, 1)
            out = got @ doubled_state
            want = np.zeros((2, 1), dtype=complex)
            want[idx] = 1
            assert np.allclose(out, want)


def _doubled_permuted(pure: np.ndarray, n_out: int, n_in: int) -> np.ndarray:
    """Oracle: double a pure matrix and regroup leg copies to (4,)*legs."""
    m = np.kron(pure, pure.conj())
    t = m.reshape((2,) * (2 * (n_out + n_in)))
    # kron layout: [outs, outs', ins, ins']; want [out pairs..., in pairs...]
    perm = []
    for k in range(n_out):
        perm += [k, n_out + k]
    for k in range(n_in):
        perm += [2 * n_out + k, 2 * n_out + n_in + k]
    t = t.transpose(perm)
    return t.reshape(4 ** n_out, 4 ** n_in)


class TestEqualUpToScalar:
    def test_scalar_multiple(self):
        assert zx.equal_up_to_scalar(np.eye(2), 3 * np.eye(2), 1e-9)

    def test_identity_vs_hadamard(self):
        assert not zx.equal_up_to_scalar(np.eye(2), H2, 1e-9)

    def test_zero_only_equals_zero(self):
        z = np.zeros((2, 2))
        assert zx.equal_up_to_scalar(z, z, 1e-9)
        assert not zx.equal_up_to_scalar(z, np.eye(2), 1e-9)
        assert not zx.equal_up_to_scalar(np.eye(2), z, 1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(zx.DimensionMismatch):
            zx.equal_up_to_scalar(np.eye(2), np.eye(4))

    @given(
        st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False),
        st.integers(0, 10_000),
    )
    @settings(max_examples=50)
    def test_any_nonzero_scalar_multiple_compares_equal(self, lam, seed):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert zx.equal_up_to_scalar(lam * m, m, 1e-6)


class TestTiltEquality:
    def test_two_legged_spider_tilts_agree(self):
        straight = zx.evaluate_pure(zx.spider(Colour.Z, 1, 1))
        # legs as (output, input): same spider read the other way
        reversed_legs = zx.evaluate_pure(zx.spider(Colour.Z, 1, 1))
        bent = zx.evaluate_pure(zx.spider(Colour.Z, 0, 2)).reshape(2, 2)
        caps = zx.evaluate_pure(zx.spider(Colour.Z, 2, 0)).reshape(2, 2)
        assert zx.equal_up_to_scalar(straight, reversed_legs.T)
        assert zx.equal_up_to_scalar(straight, bent)
        assert zx.equal_up_to_scalar(straight, caps)


class TestColourChange:
    @pytest.mark.parametrize("n_in,n_out", [(1, 1), (2, 1), (0, 2), (1, 2)])
    @pytest.mark.parametrize("phase", [0.0, math.pi / 2, 1.234])
    def test_hadamard_on_every_leg_swaps_colour(self, n_in, n_out, phase):
        z = zx.spider(Colour.Z, n_in, n_out, phase)
        x = zx.spider(Colour.X, n_in, n_out, phase)
        h_in = zx.empty_diagram()
        for _ in range(n_in):
            h_in = zx.tensor(h_in, zx.hadamard_box())
        h_out = zx.empty_diagram()
        for _ in range(n_out):
            h_out = zx.tensor(h_out, zx.hadamard_box())
        conjugated = zx.compose(zx.compose(h_in, z), h_out)
        assert zx.equal_up_to_scalar(
            zx.evaluate_pure(conjugated), zx.evaluate_pure(x), 1e-9
        )


class TestUnitaryChains:
    CASES = [
        np.eye(2),
        H2,
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
        np.diag([1, np.exp(1j * 0.77)]),
    ]

    @pytest.mark.parametrize("u", CASES)
    def test_named_unitaries(self, u):
        self._check(np.asarray(u, dtype=complex))

    @pytest.mark.parametrize("seed", range(25))
    def test_random_unitaries(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, _ = np.linalg.qr(m)
        self._check(q)

    def _check(self, u):
        alpha, beta, gamma = zx.euler_zxz(u)
        built = zx._z_rot(alpha) @ zx._x_rot(beta) @ zx._z_rot(gamma)
        assert zx.equal_up_to_scalar(built, u, 1e-9)
        chain = zx.unitary_chain(u)
        assert zx.equal_up_to_scalar(zx.evaluate_pure(chain), u, 1e-9)
        assert zx.equal_up_to_scalar(
            zx.evaluate_doubled(chain), zx.doubled_matrix(u), 1e-9
        )

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            zx.euler_zxz(np.array([[1, 1], [0, 1]], dtype=complex))


class TestTextFormat:
    @pytest.mark.parametrize(
        "d",
        [
            zx.wire(),
            zx.spider(Colour.X, 2, 1, 0.6),
            zx.measurement_equation(Colour.Z).unfolded,
            zx.measurement_equation(Colour.X).compact,
        ],
    )
    def test_round_trip(self, d):
        assert zx.diagram_from_text(zx.diagram_to_text(d)) == d

    def test_deterministic(self):
        d = zx.measurement_equation(Colour.Z).unfolded
        assert zx.diagram_to_text(d) == zx.diagram_to_text(d)

    def test_bad_text_raises(self):
        with pytest.raises(zx.DiagramError):
            zx.diagram_from_text("zx {\n  node 0 Q\n}\n")
