import csv
import math
from pathlib import Path

import numpy as np
import pytest

from hapsim.samples import (
    CHANNEL_WEIGHTS,
    DEFAULT_GEOMETRY,
    GeometryConfig,
    SensorRange,
    aggregate_max,
    catalog,
    clip_to_range,
    compress,
    default_counts_per_newton,
    shore_to_stiffness,
    squeeze_counts,
)

FIXTURE = Path(__file__).parent / "fixtures" / "stiffness_catalog.csv"


def test_catalog_has_five_entries_in_order():
    specs = catalog()
    assert [s.label for s in specs] == ["1-US", "2-S", "3-M", "4-LH", "5-H"]
    assert [s.stiffness_level for s in specs] == [1, 2, 3, 4, 5]


def test_catalog_shore_values():
    specs = {s.label: s for s in catalog()}
    assert (specs["1-US"].shore_scale, specs["1-US"].shore_value) == ("OO", 10.0)
    assert (specs["2-S"].shore_scale, specs["2-S"].shore_value) == ("OO", 30.0)
    assert (specs["3-M"].shore_scale, specs["3-M"].shore_value) == ("OO", 50.0)
    assert (specs["4-LH"].shore_scale, specs["4-LH"].shore_value) == ("A", 20.0)
    assert (specs["5-H"].shore_scale, specs["5-H"].shore_value) == ("A", 30.0)


def test_catalog_stiffness_strictly_increasing():
    ks = [s.stiffness for s in catalog()]
    assert all(a < b for a, b in zip(ks, ks[1:]))


def test_stiffness_matches_versioned_fixture():
    with open(FIXTURE, newline="") as fh:
        rows = {r["label"]: r for r in csv.DictReader(fh)}
    for s in catalog():
        expected = float(rows[s.label]["stiffness_n_per_mm"])
        assert s.stiffness == pytest.approx(expected, rel=1e-12)


def test_shore_mapping_monotone_within_scale():
    assert shore_to_stiffness("OO", 10) < shore_to_stiffness("OO", 30)
    values = [shore_to_stiffness("A", v) for v in range(0, 101, 5)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_shore_scale_a_above_scale_oo():
    # the two scales form one monotone axis; within the catalog's range every
    # A reading sits above every OO reading (the scales meet at OO-100/A-0)
    assert shore_to_stiffness("OO", 50) < shore_to_stiffness("A", 20)
    assert shore_to_stiffness("OO", 99.9) < shore_to_stiffness("A", 0.1)
    assert shore_to_stiffness("OO", 100) <= shore_to_stiffness("A", 0)


def test_shore_to_stiffness_hand_computation():
    # independent arithmetic: modulus fit and flat-punch formula spelled out
    g = DEFAULT_GEOMETRY
    e_kpa = g.base_modulus_kpa * math.exp(g.hardness_rate * (100 + 30))
    k = 2 * (e_kpa * 1e-3 / (1 - g.poisson_ratio**2)) * g.contact_radius_mm
    assert shore_to_stiffness("A", 30) == pytest.approx(k, rel=1e-12)


def test_shore_value_out_of_range():
    with pytest.raises(ValueError):
        shore_to_stiffness("A", 101)
    with pytest.raises(ValueError):
        shore_to_stiffness("A", -1)
    with pytest.raises(ValueError):
        shore_to_stiffness("B", 50)


@pytest.fixture
def sensor():
    return SensorRange(counts_per_newton=100.0)


def test_compress_zero_depth_is_all_zero(sensor):
    reading = compress(catalog()[0], 0.0, sensor, rng=3)
    assert reading.z_forces == (0.0, 0.0, 0.0, 0.0)


def test_compress_noiseless_sum_exact(sensor):
    spec = catalog()[2]
    depth = 4.0
    reading = compress(spec, depth, sensor, rng=5, noise_sigma=0.0)
    assert sum(reading.z_forces) == pytest.approx(
        spec.stiffness * depth * sensor.counts_per_newton, rel=1e-12
    )


def test_compress_noiseless_linear_in_depth(sensor):
    spec = catalog()[3]
    z1 = squeeze_counts(spec, np.array([2.0]), sensor, 9, noise_sigma=0.0, perm=np.arange(4))
    z2 = squeeze_counts(spec, np.array([4.0]), sensor, 9, noise_sigma=0.0, perm=np.arange(4))
    assert z2.sum() == pytest.approx(2 * z1.sum(), rel=1e-9)


def test_compress_monotone_in_depth_noiseless(sensor):
    spec = catalog()[1]
    sums = [
        squeeze_counts(spec, np.array([d]), sensor, 0, noise_sigma=0.0).sum()
        for d in (0.5, 1.0, 2.0, 5.0)
    ]
    assert all(a < b for a, b in zip(sums, sums[1:]))


def test_compress_rejects_negative_depth(sensor):
    with pytest.raises(ValueError):
        compress(catalog()[0], -0.1, sensor, rng=0)


def test_compress_channel_weights_permuted(sensor):
    spec = catalog()[4]
    perms = set()
    for seed in range(40):
        reading = compress(spec, 3.0, sensor, rng=seed, noise_sigma=0.0)
        total = sum(reading.z_forces)
        fracs = tuple(round(z / total, 6) for z in reading.z_forces)
        perms.add(fracs)
        assert sorted(fracs, reverse=True) == [round(w, 6) for w in CHANNEL_WEIGHTS]
    assert len(perms) > 1


def test_aggregate_max_simple_cases(sensor):
    from hapsim.samples import FingertipReading

    reading = compress(catalog()[0], 0.0, sensor, rng=1)
    assert aggregate_max(reading) == 0.0
    frame = FingertipReading(finger=None, z_forces=(30.0, 12.0, 5.0, 7.0), xy_forces=())
    assert aggregate_max(frame) == 30.0


def test_aggregate_max_matches_bruteforce_scan(sensor):
    from hapsim.samples import FingertipReading

    rng = np.random.default_rng(12)
    for _ in range(1000):
        z = tuple(float(v) for v in rng.uniform(0, 1500, size=4))
        frame = FingertipReading(finger=None, z_forces=z, xy_forces=())
        best = z[0]
        for v in z[1:]:
            if v > best:
                best = v
        assert aggregate_max(frame) == best
        assert aggregate_max(frame) >= max(z)
        assert aggregate_max(frame) in z


def test_clip_to_range(sensor):
    assert clip_to_range(1001.0, sensor) == 1000.0
    assert clip_to_range(1000.0, sensor) == 1000.0
    assert clip_to_range(500.0, sensor) == 500.0
    assert clip_to_range(10.0, sensor) == 10.0  # below f_min passes through


def test_clip_idempotent(sensor):
    rng = np.random.default_rng(5)
    for f in rng.uniform(0, 3000, size=200):
        once = clip_to_range(f, sensor)
        assert clip_to_range(once, sensor) == once


def test_sensor_range_validation():
    with pytest.raises(ValueError):
        SensorRange(f_min=0.0, f_max=1000.0, counts_per_newton=1.0)
    with pytest.raises(ValueError):
        SensorRange(f_min=50.0, f_max=40.0, counts_per_newton=1.0)


def test_default_calibration_tops_out_hardest_sample():
    depth = 30.0
    cpn = default_counts_per_newton(depth)
    k_max = max(s.stiffness for s in catalog())
    assert max(CHANNEL_WEIGHTS) * k_max * depth * cpn == pytest.approx(1000.0, rel=1e-12)
