"""Tests for counter-based random streams."""

import numpy as np

from measure_flow_lab.utils.rng import BOOTSTRAP_TAG, SIMULATION_TAG, block_bounds, derived_seed, scheme_name, stream


class TestStream:
    """Tests for stream."""

    def test_same_key_same_draws(self):
        """Test that a (seed, block, tag) key always gives the same draws."""
        first = stream(5, 3).standard_normal(10)
        second = stream(5, 3).standard_normal(10)

        assert np.array_equal(first, second)

    def test_blocks_differ(self):
        """Test that different blocks give different draws."""
        assert not np.array_equal(stream(5, 0).random(4), stream(5, 1).random(4))

    def test_tags_differ(self):
        """Test that tags separate simulation from bootstrap streams."""
        assert not np.array_equal(
            stream(5, 0, SIMULATION_TAG).random(4), stream(5, 0, BOOTSTRAP_TAG).random(4)
        )

    def test_uses_philox(self):
        """Test that the generator is Philox-based."""
        assert isinstance(stream(0, 0).bit_generator, np.random.Philox)

    def test_derived_seed_is_deterministic(self):
        """Test that a replicate key always maps to the same seed."""
        assert derived_seed(7, 1, 2, 3) == derived_seed(7, 1, 2, 3)

    def test_derived_seeds_are_distinct(self):
        """Test that replicate keys and base seeds give distinct seeds."""
        seeds = {derived_seed(7, i, j, r) for i in range(3) for j in range(4) for r in range(8)}

        assert len(seeds) == 96
        assert derived_seed(7, 0, 0, 0) != derived_seed(8, 0, 0, 0)


class TestBlocks:
    """Tests for block helpers."""

    def test_block_bounds_cover_range(self):
        """Test that blocks tile the path range with a short last block."""
        assert block_bounds(10, 4) == [(0, 4), (4, 8), (8, 10)]

    def test_single_block(self):
        """Test a range smaller than one block."""
        assert block_bounds(3, 4096) == [(0, 3)]

    def test_scheme_name_records_block_size(self):
        """Test that the scheme identifier embeds the block size."""
        assert scheme_name(512).endswith("block=512")
