import numpy as np
import pytest
from pydantic import ValidationError

from mevhas.codec import (
    BASE_VALUE_BITS,
    MT_SPLITS,
    CodingBlock,
    CodingUnit,
    EncoderConfig,
    EncodeStats,
    FrameEncoder,
    IntraMode,
    PartitionRecord,
    PartitionRecordError,
    PolicyMapMismatchError,
    SplitType,
    allowed_splits,
    encode_frame,
    encode_sequence,
    evaluate_modes,
    fetch_neighbors,
    forward_dct,
    inverse_dct,
    lambda_of_qp,
    predict,
    qstep_of_qp,
    transform_quant,
)
from mevhas.media_io import LumaFrame
from mevhas.partition_map import PartitionMap
from mevhas.policy import FullRdoPolicy, GateDecision, MevhasPolicy

ALL_SPLITS = frozenset(SplitType)


def mode_oracle(original, top, left, config):
    """Brute-force J over the four modes, coded one at a time"""
    costs = []
    for mode in IntraMode:
        prediction = predict(mode, top, left)
        result = transform_quant(original - prediction, config.qp, prediction, config.rounding_offset)
        costs.append(result.distortion + config.lam * result.bits)
    return costs


def assert_no_qt_below_mt(record):
    for cus in record.frames:
        for cu in cus:
            seen_mt = False
            for split in cu.path:
                if split in MT_SPLITS:
                    seen_mt = True
                assert not (seen_mt and split is SplitType.QT), cu


class TestRateModel:
    """Test quantizer step, lambda and the transform/rate engine"""

    def test_qstep(self):
        """Test closed-form quantizer steps"""
        assert qstep_of_qp(4) == 1.0
        assert qstep_of_qp(16) == 4.0

    def test_lambda(self):
        """Test the lambda model"""
        assert lambda_of_qp(12) == pytest.approx(0.57)
        assert lambda_of_qp(15) == pytest.approx(2 * lambda_of_qp(12))
        assert lambda_of_qp(32) == pytest.approx(0.57 * 2 ** (20 / 3))
        assert lambda_of_qp(12, lambda_scale=2.0) == pytest.approx(1.14)

    def test_lambda_range(self):
        """Test QPs outside [0, 51] are rejected"""
        with pytest.raises(ValueError):
            lambda_of_qp(52)

    def test_dct_orthonormal(self):
        """Test the transform keeps energy and inverts exactly"""
        rng = np.random.default_rng(2)
        for n in (8, 16, 32, 64, 128):
            block = rng.normal(size=(n, n // 2 if n > 8 else n))
            coeffs = forward_dct(block)
            assert np.sum(coeffs ** 2) == pytest.approx(np.sum(block ** 2))
            assert np.allclose(inverse_dct(coeffs), block)

    def test_dct_batched(self):
        """Test a stack of blocks transforms like each block alone"""
        rng = np.random.default_rng(3)
        stack = rng.normal(size=(4, 8, 16))
        batched = forward_dct(stack)
        for index in range(4):
            assert np.allclose(batched[index], forward_dct(stack[index]))

    def test_zero_residual(self):
        """Test zero residual costs the header only"""
        result = transform_quant(np.zeros((16, 8)), 32)
        assert result.distortion == 0
        assert result.bits == 16

    def test_single_coefficient_bits(self):
        """Test the per-level bit formula on one coefficient"""
        coeffs = np.zeros((8, 8))
        coeffs[1, 2] = 10.0
        residual = inverse_dct(coeffs)

        result = transform_quant(residual, 4)

        assert np.count_nonzero(result.levels) == 1
        assert result.bits == 16 + 3 + 2 * int(np.ceil(np.log2(10 + 1)))

    @pytest.mark.parametrize("coefficient, level", [(21.2, 10), (21.5, 11), (-21.2, -10), (1.2, 0), (1.4, 1)])
    def test_dead_zone_rounding(self, coefficient, level):
        """Test levels round down unless the quotient's fraction reaches 2/3"""
        coeffs = np.zeros((8, 8))
        coeffs[1, 2] = coefficient

        result = transform_quant(inverse_dct(coeffs), 10)

        assert qstep_of_qp(10) == 2.0
        assert result.levels[1, 2] == level
        expected_bits = 16 + (3 + 2 * int(np.ceil(np.log2(abs(level) + 1))) if level else 0)
        assert result.bits == expected_bits

    def test_dead_zone(self):
        """Test a coefficient just under 2/3 of a step quantizes to zero"""
        coeffs = np.zeros((8, 8))
        coeffs[0, 0] = 0.6
        residual = inverse_dct(coeffs)
        assert transform_quant(residual, 4).bits == 16

    def test_prediction_clamps_to_pixels(self):
        """Test reconstructions with a prediction stay in [0, 255]"""
        prediction = np.full((8, 8), 250)
        original = np.full((8, 8), 255)
        result = transform_quant(original - prediction, 40, prediction)
        assert result.reconstruction.max() <= 255
        assert result.reconstruction.min() >= 0


class TestAllowedSplits:
    """Test split legality"""

    @pytest.fixture
    def config(self):
        return EncoderConfig(qp=32)

    def test_root(self, config):
        """Test an interior CTU allows everything"""
        assert allowed_splits(CodingBlock(0, 0, 128, 128), config) == ALL_SPLITS

    def test_mt_subtree(self, config):
        """Test QT is prohibited below BT/TT and TT_H needs height 32"""
        block = CodingBlock(0, 0, 32, 16, qt_depth=2, mt_depth=1, in_mt_subtree=True)
        splits = allowed_splits(block, config)
        assert SplitType.QT not in splits
        assert SplitType.TT_H not in splits
        assert splits == {SplitType.NS, SplitType.BT_H, SplitType.BT_V, SplitType.TT_V}

    def test_minimum(self, config):
        """Test 8x8 blocks only code"""
        assert allowed_splits(CodingBlock(0, 0, 8, 8), config) == {SplitType.NS}

    def test_mt_depth_limit(self):
        """Test BT/TT stop at max_mt_depth"""
        config = EncoderConfig(qp=32, max_mt_depth=0)
        assert allowed_splits(CodingBlock(0, 0, 64, 64), config) == {SplitType.NS, SplitType.QT}

    def test_boundary_forces_qt(self, config):
        """Test a CTU crossing the right edge must quad split"""
        block = CodingBlock(128, 0, 128, 128)
        assert allowed_splits(block, config, frame_width=200, frame_height=128) == {SplitType.QT}

    def test_boundary_forces_bt_toward_edge(self, config):
        """Test BT toward the edge when QT is illegal"""
        right = CodingBlock(0, 0, 32, 32, mt_depth=1, in_mt_subtree=True)
        bottom = CodingBlock(0, 0, 32, 32, mt_depth=1, in_mt_subtree=True)
        assert allowed_splits(right, config, frame_width=24, frame_height=64) == {SplitType.BT_V}
        assert allowed_splits(bottom, config, frame_width=64, frame_height=24) == {SplitType.BT_H}

    def test_boundary_cannot_split(self, config):
        """Test an 8x8 block over the edge keeps NS"""
        block = CodingBlock(0, 0, 8, 8)
        assert allowed_splits(block, config, frame_width=4, frame_height=8) == {SplitType.NS}


class TestCodingBlock:
    """Test CodingBlock geometry"""

    def test_tt_parts(self):
        """Test TT gives quarter, half, quarter"""
        parts = CodingBlock(0, 0, 32, 32).split(SplitType.TT_H)
        assert [(p.y, p.height) for p in parts] == [(0, 8), (8, 16), (24, 8)]
        assert all(p.in_mt_subtree and p.mt_depth == 1 for p in parts)

    def test_qt_children(self):
        """Test QT gives four half-size squares"""
        parts = CodingBlock(0, 0, 64, 64).split(SplitType.QT)
        assert [(p.x, p.y, p.width) for p in parts] == [(0, 0, 32), (32, 0, 32), (0, 32, 32), (32, 32, 32)]
        assert all(p.qt_depth == 1 and not p.in_mt_subtree for p in parts)

    def test_invalid_subtree_flag(self):
        """Test in_mt_subtree needs an MT ancestor"""
        with pytest.raises(ValueError):
            CodingBlock(0, 0, 16, 16, in_mt_subtree=True)


class TestEncoderConfig:
    """Test EncoderConfig validation"""

    def test_defaults(self):
        """Test default geometry"""
        config = EncoderConfig(qp=27)
        assert (config.ctu_size, config.min_cu, config.max_mt_depth) == (128, 8, 3)

    def test_bad_min_cu(self):
        """Test min_cu must be a power of two dividing the CTU"""
        with pytest.raises(ValidationError):
            EncoderConfig(qp=27, min_cu=12)

    def test_bad_qp(self):
        """Test QP range"""
        with pytest.raises(ValidationError):
            EncoderConfig(qp=60)

    def test_with_qp(self):
        """Test with_qp keeps the other fields"""
        config = EncoderConfig(qp=27, max_mt_depth=1).with_qp(42)
        assert config.qp == 42 and config.max_mt_depth == 1


class TestEvaluateModes:
    """Test the four-mode intra decision"""

    def test_constant_block(self, fast_config):
        """Test DC wins a flat block with zero distortion"""
        original = np.full((8, 8), 90)
        decision = evaluate_modes(original, np.full(8, 90), np.full(8, 90), fast_config)
        assert decision.mode is IntraMode.DC
        assert decision.distortion == 0
        assert decision.bits == 16

    def test_vertical_stripes(self, fast_config):
        """Test vertical prediction wins when the top row matches"""
        row = np.array([50, 200] * 4)
        original = np.tile(row, (8, 1))
        decision = evaluate_modes(original, row, np.full(8, 50), fast_config)
        costs = mode_oracle(original, row, np.full(8, 50), fast_config)

        assert decision.mode is IntraMode.VERTICAL
        assert decision.distortion == 0
        assert decision.cost <= min(costs) + 1e-9

    def test_matches_oracle(self, fast_config):
        """Test the chosen J equals the brute-force minimum"""
        rng = np.random.default_rng(21)
        for _ in range(20):
            original = rng.integers(0, 256, size=(8, 8))
            top = rng.integers(0, 256, size=8)
            left = rng.integers(0, 256, size=8)
            costs = mode_oracle(original, top, left, fast_config)

            decision = evaluate_modes(original, top, left, fast_config)

            assert decision.cost == pytest.approx(min(costs))
            assert decision.mode == IntraMode(int(np.argmin(costs)))

    def test_neighbors_missing(self):
        """Test the frame corner falls back to 128"""
        recon = np.zeros((16, 16), dtype=np.int32)
        top, left = fetch_neighbors(recon, 0, 0, 8, 8)
        assert np.all(top == 128) and np.all(left == 128)

    def test_neighbors_missing_base_value(self):
        """Test the frame corner uses the supplied base value"""
        recon = np.zeros((16, 16), dtype=np.int32)
        top, left = fetch_neighbors(recon, 0, 0, 8, 8, missing=77)
        assert np.all(top == 77) and np.all(left == 77)

    def test_neighbors_replicated(self):
        """Test a missing side copies the available one"""
        recon = np.arange(256).reshape(16, 16)
        top, left = fetch_neighbors(recon, 8, 0, 8, 8)
        assert np.all(top == recon[0, 7])
        assert np.array_equal(left, recon[0:8, 7])


class TestEncodeFrame:
    """Test whole-frame encoding"""

    @pytest.mark.parametrize("value", [0, 1, 100, 128, 200, 255])
    @pytest.mark.parametrize("qp", [0, 4, 12, 22, 32, 37, 42, 51])
    def test_constant_frame(self, value, qp):
        """Test flat content is one NS CU per CTU and decodes exactly"""
        frame = LumaFrame(np.full((128, 256), value, dtype=np.uint8))
        recon, stats, record = encode_frame(frame, EncoderConfig(qp=qp, max_mt_depth=1))

        assert recon == frame
        assert [(cu.x, cu.y, cu.width, cu.height) for cu in record.frame(0)] == [(0, 0, 128, 128), (128, 0, 128, 128)]
        assert all(cu.path == () and cu.mode is IntraMode.DC for cu in record.frame(0))
        assert stats.total_bits == BASE_VALUE_BITS + 32
        assert stats.sse == 0
        assert stats.mode_evaluations > 0

    def test_sse_matches_record(self):
        """Test recon SSE equals the sum of per-CU SSE"""
        rng = np.random.default_rng(4)
        frame = LumaFrame(rng.integers(0, 256, size=(128, 256), dtype=np.uint8))
        recon, stats, record = encode_frame(frame, EncoderConfig(qp=32, max_mt_depth=1))

        diff = recon.samples.astype(np.int64) - frame.samples.astype(np.int64)
        assert int(np.sum(diff * diff)) == sum(cu.sse for cu in record.frame(0))
        assert stats.sse == sum(cu.sse for cu in record.frame(0))
        assert stats.total_bits == BASE_VALUE_BITS + sum(cu.bits for cu in record.frame(0))

    def test_tiling_and_qt_prohibition(self, textured_frame):
        """Test records tile the padded frame with no QT under BT/TT"""
        _, _, record = encode_frame(textured_frame, EncoderConfig(qp=27, max_mt_depth=2))
        record.validate_tiling()
        assert_no_qt_below_mt(record)

    def test_padding(self):
        """Test odd-sized content pads to whole CTUs and crops back"""
        rng = np.random.default_rng(8)
        frame = LumaFrame(rng.integers(0, 256, size=(40, 72), dtype=np.uint8))
        recon, _, record = encode_frame(frame, EncoderConfig(qp=37, max_mt_depth=1))

        assert (recon.width, recon.height) == (72, 40)
        assert (record.width, record.height) == (128, 128)
        record.validate_tiling()
        outside = [cu for cu in record.frame(0) if cu.x >= 72 or cu.y >= 40]
        assert outside and all(cu.mode is None and cu.bits == 0 for cu in outside)

    def test_deterministic(self, noise_frame, fast_config):
        """Test repeated encodes agree on everything but wall time"""
        first = encode_frame(noise_frame, fast_config)
        second = encode_frame(noise_frame, fast_config)

        assert first.recon == second.recon
        assert first.record == second.record
        assert first.stats.model_dump(exclude={"wall_time"}) == second.stats.model_dump(exclude={"wall_time"})

    def test_policy_off_equivalence(self, noise_frame, fast_config):
        """Test no policy, FullRdoPolicy and a disabled MEVHAS policy agree"""
        plain = encode_frame(noise_frame, fast_config)
        full = encode_frame(noise_frame, fast_config, FullRdoPolicy())
        disabled = encode_frame(
            noise_frame, fast_config, MevhasPolicy(PartitionMap.uniform(128, 128, 8, 8), enabled=False)
        )

        for other in (full, disabled):
            assert other.record == plain.record
            assert other.recon == plain.recon
            assert other.stats.total_bits == plain.stats.total_bits
            assert other.stats.sse == plain.stats.sse
            assert other.stats.mode_evaluations == plain.stats.mode_evaluations

    def test_full_ctu_map_gates(self, noise_frame, fast_config):
        """Test a map of whole-CTU CUs prunes small blocks only"""
        plain = encode_frame(noise_frame, fast_config)
        gated = encode_frame(noise_frame, fast_config, MevhasPolicy(PartitionMap.uniform(128, 128, 128, 128)))

        gated.record.validate_tiling()
        assert gated.stats.gate_counts.get("Prune", 0) > 0
        assert "SkipModesAllowSplit" not in gated.stats.gate_counts
        assert gated.stats.mode_evaluations < plain.stats.mode_evaluations

    def test_smallest_cu_map(self, noise_frame, fast_config):
        """Test an all-8x8 map still yields a tiling"""
        result = encode_frame(noise_frame, fast_config, MevhasPolicy(PartitionMap.uniform(128, 128, 8, 8)))
        result.record.validate_tiling()
        assert result.stats.gate_counts["SkipModesAllowSplit"] > 0

    def test_map_mismatch(self, noise_frame, fast_config):
        """Test a map for other padded dims names both sizes"""
        policy = MevhasPolicy(PartitionMap.uniform(256, 128, 128, 128))
        with pytest.raises(PolicyMapMismatchError, match="256x128.*128x128"):
            encode_frame(noise_frame, fast_config, policy)

    def test_prune_everywhere_falls_back(self, noise_frame, fast_config, mocker):
        """Test a policy pruning every node falls back to the plain search"""
        policy = mocker.Mock()
        policy.partition_map = None
        policy.decide.return_value = GateDecision.PRUNE

        plain = encode_frame(noise_frame, fast_config)
        pruned = encode_frame(noise_frame, fast_config, policy)

        assert pruned.record == plain.record
        assert pruned.stats.fallbacks == 1
        assert pruned.stats.total_bits == plain.stats.total_bits

    def test_skip_everywhere_falls_back(self, noise_frame, fast_config, mocker):
        """Test skipping every mode search still codes unsplittable leaves"""
        policy = mocker.Mock()
        policy.partition_map = None
        policy.decide.return_value = GateDecision.SKIP_MODES_ALLOW_SPLIT

        result = encode_frame(noise_frame, fast_config, policy)

        result.record.validate_tiling()
        assert result.stats.fallbacks > 0
        assert all(
            allowed_splits(CodingBlock(cu.x, cu.y, cu.width, cu.height, cu.qt_depth, cu.mt_depth,
                                       cu.mt_depth > 0), fast_config, 64, 64) == {SplitType.NS}
            for cu in result.record.frame(0) if cu.mode is not None
        )

    def test_qt_restricted_flag(self, noise_frame, fast_config, mocker):
        """Test the encoder flags nodes where QT is not allowed"""
        policy = mocker.Mock()
        policy.partition_map = None
        policy.decide.return_value = GateDecision.FULL_RDO

        encode_frame(noise_frame, fast_config, policy)

        calls = policy.decide.call_args_list
        assert calls[0].args[0] == CodingBlock(0, 0, 128, 128)
        for call in calls:
            block, restricted = call.args
            assert restricted == (SplitType.QT not in allowed_splits(block, fast_config, 64, 64))

    def test_rdo_node_leaf(self, fast_config):
        """Test an 8x8 node equals the four-mode decision"""
        rng = np.random.default_rng(2)
        frame = LumaFrame(rng.integers(0, 256, size=(8, 8), dtype=np.uint8))
        encoder = FrameEncoder(fast_config)
        encoder.prepare(frame)

        result = encoder.rdo_node(CodingBlock(0, 0, 8, 8))
        decision = evaluate_modes(frame.samples, np.full(8, 128), np.full(8, 128), fast_config)

        assert result.cost == pytest.approx(decision.cost)
        assert result.cus[0].mode is decision.mode

    def test_monotone_qp(self, textured_frame):
        """Test bits never grow as QP rises"""
        bits = [
            encode_frame(textured_frame, EncoderConfig(qp=qp, max_mt_depth=0)).stats.total_bits
            for qp in (22, 27, 32, 37, 42)
        ]
        assert bits == sorted(bits, reverse=True)


class TestEncodeSequence:
    """Test multi-frame encoding"""

    def test_frames_and_stats(self, moving_clip, fast_config):
        """Test every frame is recorded and stats are summed"""
        result = encode_sequence(moving_clip, fast_config)
        singles = [encode_frame(frame, fast_config) for frame in moving_clip]

        assert len(result.recon) == 2
        assert result.record.num_frames == 2
        assert result.stats.frames == 2
        assert result.stats.total_bits == sum(s.stats.total_bits for s in singles)
        assert result.record.frames == [s.record.frame(0) for s in singles]


class TestTilingFuzz:
    """Test random content, QPs and maps always produce a tiling"""

    SIZES = np.array([8, 16, 32, 64, 128])

    def random_map(self, rng, kind):
        if kind == 0:
            return PartitionMap.uniform(128, 128, 8, 8)
        if kind == 1:
            return PartitionMap.uniform(128, 128, 128, 128)
        return PartitionMap(128, 128, rng.choice(self.SIZES, size=(16, 16)), rng.choice(self.SIZES, size=(16, 16)))

    def test_fuzzed_encodes(self):
        """Test 500 gated encodes tile the padded frame with no QT under BT/TT"""
        rng = np.random.default_rng(21)
        for index in range(500):
            width, height = (int(v) for v in rng.integers(8, 65, size=2))
            samples = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
            if index % 4 == 0:
                samples[:] = samples[0, 0]
            config = EncoderConfig(qp=int(rng.integers(0, 52)), max_mt_depth=int(rng.integers(0, 2)))
            policy = MevhasPolicy(self.random_map(rng, index % 3))

            result = encode_frame(LumaFrame(samples), config, policy)

            result.record.validate_tiling()
            assert_no_qt_below_mt(result.record)
            assert 0 <= result.stats.fallbacks < result.stats.nodes_visited


class TestPartitionRecord:
    """Test PartitionRecord checks and serialization"""

    def test_jsonl_round_trip(self, noise_frame, fast_config):
        """Test JSON lines keep every CU field"""
        record = encode_frame(noise_frame, fast_config).record
        text = record.to_jsonl()

        assert text.splitlines()[0].startswith('{"frame":0,"x":0,"y":0')
        assert PartitionRecord.from_jsonl(text) == record

    def test_overlap_detected(self):
        """Test overlapping CUs fail the tiling check"""
        cus = [CodingUnit(0, 0, 8, 8), CodingUnit(0, 0, 8, 8), CodingUnit(8, 0, 8, 8)]
        with pytest.raises(PartitionRecordError, match="multiply covered"):
            PartitionRecord(16, 8, [cus]).validate_tiling()

    def test_hole_detected(self):
        """Test uncovered pixels fail the tiling check"""
        record = PartitionRecord(16, 8, [[CodingUnit(0, 0, 8, 8)]])
        assert not record.is_tiling()

    def test_outside_detected(self):
        """Test CUs leaving the frame fail the tiling check"""
        with pytest.raises(PartitionRecordError, match="leaves"):
            PartitionRecord(8, 8, [[CodingUnit(0, 0, 16, 8)]]).validate_tiling()


class TestEncodeStats:
    """Test EncodeStats"""

    def test_merge(self):
        """Test merge sums counters and gate counts"""
        a = EncodeStats(mode_evaluations=4, total_bits=10, frames=1, gate_counts={"Prune": 2})
        b = EncodeStats(mode_evaluations=8, total_bits=5, frames=1, gate_counts={"Prune": 1, "FullRdo": 3})
        merged = a.merge(b)
        assert merged.mode_evaluations == 12
        assert merged.total_bits == 15
        assert merged.frames == 2
        assert merged.gate_counts == {"FullRdo": 3, "Prune": 3}
