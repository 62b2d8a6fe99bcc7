"""Partition construction, validation, and JSON round trips."""

import json
import math

import numpy as np
import pytest

from prior_forge import Bin, CovariateSet, Partition, SampleSpace, interval_bin
from prior_forge.errors import (CoverageGap, DimensionMismatch, OverlappingBins,
                                PartitionError)
from prior_forge.partition import validate_partition

INF = math.inf


class TestBin:
    def test_rejects_empty_interval(self):
        with pytest.raises(PartitionError):
            Bin((0.0,), (0.0,))
        with pytest.raises(PartitionError):
            Bin((1.0,), (0.0,))

    def test_half_open_membership(self):
        b = interval_bin(0.0, 1.0)
        assert not b.contains((0.0,))     # lower edge excluded
        assert b.contains((1.0,))         # upper edge included
        assert b.contains((0.5,))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            Bin((0.0, 0.0), (1.0,))

    def test_overlap_detection(self):
        a = Bin((0.0, 0.0), (2.0, 2.0))
        b = Bin((1.0, 1.0), (3.0, 3.0))
        c = Bin((2.0, 0.0), (3.0, 2.0))   # shares only the x=2 face
        assert a.overlaps(b)
        assert not a.overlaps(c)


class TestValidatePartition:
    def test_two_half_lines_valid(self):
        part = Partition(bins=(interval_bin(-INF, 0.0), interval_bin(0.0, INF)))
        out = validate_partition(part, SampleSpace.real_line())
        assert out.size == 2

    def test_gap_reported(self):
        part = Partition(bins=(interval_bin(-INF, 0.0), interval_bin(1.0, INF)))
        with pytest.raises(CoverageGap) as err:
            validate_partition(part, SampleSpace.real_line())
        gap = err.value.gap
        assert gap.lower == (0.0,) and gap.upper == (1.0,)

    def test_atoms_valid(self):
        part = Partition(atoms=(0.0, 1.0))
        out = validate_partition(part, SampleSpace.discrete((0, 1)))
        assert out.atoms == (0.0, 1.0)

    def test_atoms_missing(self):
        with pytest.raises(CoverageGap):
            validate_partition(Partition(atoms=(0.0,)),
                               SampleSpace.discrete((0, 1)))

    def test_overlap_raises_with_pair(self):
        part = Partition(bins=(interval_bin(-INF, 1.0), interval_bin(0.0, INF)))
        with pytest.raises(OverlappingBins) as err:
            validate_partition(part, SampleSpace.real_line())
        assert err.value.pair == (0, 1)

    def test_canonical_order(self):
        part = Partition(bins=(interval_bin(0.0, INF), interval_bin(-INF, 0.0)))
        out = validate_partition(part, SampleSpace.real_line())
        assert out.bins[0].lower == (-INF,)

    def test_2d_grid_cover(self):
        quads = Partition(bins=(
            Bin((-INF, -INF), (0.0, 0.0)), Bin((0.0, -INF), (INF, 0.0)),
            Bin((-INF, 0.0), (0.0, INF)), Bin((0.0, 0.0), (INF, INF))))
        out = validate_partition(quads, SampleSpace((-INF, -INF), (INF, INF)))
        assert out.size == 4

    def test_2d_gap(self):
        part = Partition(bins=(
            Bin((-INF, -INF), (0.0, 0.0)), Bin((0.0, -INF), (INF, 0.0)),
            Bin((0.0, 0.0), (INF, INF))))
        with pytest.raises(CoverageGap):
            validate_partition(part, SampleSpace((-INF, -INF), (INF, INF)))


class TestJson:
    def test_bin_round_trip_with_sentinels(self):
        b = interval_bin(-INF, 2.5)
        doc = b.to_json()
        assert doc["lower"] == ["-inf"] and doc["upper"] == [2.5]
        assert Bin.from_json(doc) == b

    def test_partition_round_trip(self):
        part = Partition(bins=(interval_bin(-INF, 0.0), interval_bin(0.0, INF)))
        blob = json.dumps(part.to_json())
        assert Partition.from_json(json.loads(blob)) == part

    def test_atoms_round_trip(self):
        part = Partition(atoms=(0.0, 1.0))
        assert Partition.from_json(part.to_json()) == part

    def test_covariate_round_trip(self):
        c = CovariateSet((1.0, -2.0), "x1")
        assert CovariateSet.from_json(c.to_json()) == c

    def test_covariate_rejects_nonfinite(self):
        with pytest.raises(PartitionError):
            CovariateSet((np.nan,), "bad")
