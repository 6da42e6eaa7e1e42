"""Position codec round trips, confidence behavior, layout recovery."""

import numpy as np
import pytest

from vidmark import poscodec
from vidmark.poscodec import (
    DecodedPatch,
    assign_positions,
    decode_position,
    encode_position,
    recover_layout,
)


def make_decoded(index, confidence, slot=(0, 0), value=None, ps=4, channels=1):
    content = np.full((ps, ps, channels), value if value is not None else index / 300.0)
    return DecodedPatch(
        content=content, prob=np.full(8, 0.5), confidence=confidence,
        index=index, slot=slot,
    )


class TestEncodePosition:
    def test_index_zero_all_zero_plane(self):
        assert np.all(encode_position(0, 256, 16) == 0.0)

    def test_index_255_all_one_plane(self):
        assert np.all(encode_position(255, 256, 16) == 1.0)

    def test_index_one_block_layout(self):
        plane = encode_position(1, 256, 16).ravel()
        assert np.all(plane[: 7 * 32] == 0.0)
        assert np.all(plane[7 * 32:] == 1.0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            encode_position(256, 256, 16)

    def test_trailing_cells_repeat_last_bit(self):
        # 5 positions -> K=3 bits, 16 cells / 3 = 5-cell blocks, one spare
        plane = encode_position(1, 5, 4).ravel()
        assert np.all(plane[:10] == 0.0)
        assert np.all(plane[10:] == 1.0)  # last block plus the trailing cell


class TestDecodePosition:
    def test_clean_round_trip(self):
        prob, confidence, index = decode_position(encode_position(37, 256, 16), 256)
        assert index == 37
        assert confidence == pytest.approx(0.5)
        assert np.all((prob == 0.0) | (prob == 1.0))

    def test_all_indices_round_trip(self):
        for i in range(256):
            _, _, index = decode_position(encode_position(i, 256, 16), 256)
            assert index == i

    def test_half_plane_threshold_convention(self):
        prob, confidence, index = decode_position(np.full((16, 16), 0.5), 256)
        assert confidence == 0.0
        assert index == 255  # p >= 0.5 maps to bit 1

    def test_values_clipped_before_decode(self):
        plane = encode_position(0, 256, 16)
        plane = plane - 0.4  # negative values must clip to 0
        _, _, index = decode_position(plane, 256)
        assert index == 0

    def test_noise_monte_carlo(self):
        # 25% of cells replaced by uniform noise: the per-block average
        # stays on the right side of 0.5 essentially always.
        hits = 0
        trials = 1000
        cells = 256
        for t in range(trials):
            rng = np.random.default_rng(10_000 + t)
            plane = encode_position(37, 256, 16).ravel()
            idx = rng.choice(cells, size=cells // 4, replace=False)
            plane[idx] = rng.uniform(size=idx.size)
            _, _, index = decode_position(plane.reshape(16, 16), 256)
            hits += index == 37
        assert hits / trials >= 0.99

    def test_confidence_non_increasing_in_erasure(self):
        plane = encode_position(170, 256, 16).ravel()
        last = 0.51
        for cells in (0, 32, 64, 128, 192, 256):
            corrupted = plane.copy()
            corrupted[:cells] = 0.5
            _, confidence, _ = decode_position(corrupted.reshape(16, 16), 256)
            assert confidence <= last + 1e-12
            last = confidence


class TestAssignPositions:
    def test_identity_when_all_distinct(self):
        pos = assign_positions(list(range(16)), [0.5] * 16, 16)
        assert pos.tolist() == list(range(16))

    def test_two_patch_conflict_hand_trace(self):
        # patches decode to [0..4, 5, 5, 7]; the second claim on 5 has
        # lower confidence and must move to the only vacancy, 6.
        indices = [0, 1, 2, 3, 4, 5, 5, 7]
        confidences = [0.5, 0.5, 0.5, 0.5, 0.5, 0.4, 0.2, 0.5]
        pos = assign_positions(indices, confidences, 8)
        assert pos[5] == 5
        assert pos[6] == 6

    def test_conflict_higher_confidence_arrives_second(self):
        pos = assign_positions([1, 1], [0.2, 0.4], 2)
        assert pos[1] == 1  # stronger claim displaces the earlier one
        assert pos[0] == 0  # displaced patch takes the vacancy

    def test_equal_confidence_first_wins(self):
        pos = assign_positions([1, 1], [0.3, 0.3], 2)
        assert pos[0] == 1
        assert pos[1] == 0

    def test_all_same_index_fills_everything(self):
        pos = assign_positions([0] * 16, [0.25] * 16, 16)
        assert sorted(pos.tolist()) == list(range(16))

    def test_nearest_vacancy_tie_goes_lower(self):
        # occupied: 5; vacancies 4 and 6 equidistant from 5
        indices = [0, 1, 2, 3, 5, 5, 7]
        confidences = [0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.5]
        pos = assign_positions(indices, confidences, 7)
        assert pos[5] == 4

    def test_out_of_range_index_goes_to_pool(self):
        pos = assign_positions([0, 9], [0.5, 0.5], 2)
        assert pos[0] == 0
        assert pos[1] == 1

    def test_wrong_count_rejected(self):
        with pytest.raises(ValueError):
            assign_positions([0, 1], [0.5, 0.5], 3)

    def test_always_bijective_randomized(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            p = int(rng.integers(1, 40))
            indices = rng.integers(0, p, size=p)
            confidences = rng.uniform(0, 0.5, size=p)
            pos = assign_positions(indices, confidences, p)
            assert sorted(pos.tolist()) == list(range(p))

    def test_unique_claims_keep_their_position(self):
        rng = np.random.default_rng(100)
        for _ in range(100):
            p = 32
            indices = rng.integers(0, p, size=p)
            confidences = rng.uniform(0, 0.5, size=p)
            pos = assign_positions(indices, confidences, p)
            counts = np.bincount(indices, minlength=p)
            for i in range(p):
                if counts[indices[i]] == 1:
                    assert pos[i] == indices[i]


class TestRecoverLayout:
    def test_identity_reassembly_bit_exact(self):
        rng = np.random.default_rng(0)
        tiles = rng.uniform(size=(4, 4, 4, 1))
        decoded = [
            DecodedPatch(content=tiles[i], prob=np.full(2, 1.0), confidence=0.5,
                         index=i, slot=(0, i))
            for i in range(4)
        ]
        wm = recover_layout(decoded, 4, grid=(2, 2))
        expected = np.block([[tiles[0, :, :, 0], tiles[1, :, :, 0]],
                             [tiles[2, :, :, 0], tiles[3, :, :, 0]]])
        assert np.array_equal(wm.samples[:, :, 0], expected)

    def test_square_grid_inferred(self):
        decoded = [make_decoded(i, 0.5, value=i / 10) for i in range(9)]
        wm = recover_layout(decoded, 9)
        assert wm.samples.shape == (12, 12, 1)

    def test_patch_count_mismatch(self):
        decoded = [make_decoded(0, 0.5)]
        with pytest.raises(ValueError):
            recover_layout(decoded, 2)
