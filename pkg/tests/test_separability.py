import numpy as np
import pytest

from prune_planner import (
    Dataset,
    InsufficientGridError,
    analyze_separability,
    eval_separable,
    DimTriple,
)
from conftest import random_separable_map


def product_grid(rng, d_vals, w_vals, r_vals, bump_at=None, bump=0.0):
    surface = random_separable_map(rng)
    rows, acc = [], []
    for d in d_vals:
        for w in w_vals:
            for r in r_vals:
                rows.append([d, w, r])
                value = eval_separable(surface, DimTriple(d, w, r))
                if bump_at is not None and (d, w, r) == bump_at:
                    value += bump
                acc.append(min(max(value, 0.0), 1.0))
    return Dataset.from_arrays(rows, acc)


class TestExactSeparability:
    def test_product_surface_has_constant_cross_ratios(self):
        rng = np.random.default_rng(0)
        data = product_grid(rng, (0.4, 0.7, 1.0), (0.5, 0.8, 1.0), (0.6, 0.9, 1.0))
        report = analyze_separability(data)
        assert report.max_rel_dev <= 1e-12

    def test_corruption_is_detected_and_localized(self):
        rng = np.random.default_rng(0)
        # +5 accuracy points at one cell of an otherwise exact product grid
        data = product_grid(
            rng,
            (0.4, 0.7, 1.0),
            (0.5, 0.8, 1.0),
            (0.6, 0.9, 1.0),
            bump_at=(0.7, 0.8, 0.9),
            bump=0.05,
        )
        report = analyze_separability(data)
        assert report.max_rel_dev > 0.03
        assert not report.passes()
        worst_coords = {
            report.worst_slice.value,
            *report.worst.rows,
            *report.worst.cols,
        }
        assert worst_coords & {0.7, 0.8, 0.9}

    def test_insufficient_grid_structure(self):
        # all samples on one line: no 2x2 rectangle anywhere
        data = Dataset.from_arrays(
            [[x, 1.0, 1.0] for x in (0.2, 0.5, 0.8)], [0.8, 0.9, 0.92]
        )
        with pytest.raises(InsufficientGridError):
            analyze_separability(data)


class TestPublishedGrids:
    def test_depth_slice_ratio_anchor(self, resnet_slice_b):
        # ratio pair 93.63/92.84 vs 87.48/86.56 across the resolution extremes
        report = analyze_separability(resnet_slice_b)
        [w_slice] = [s for s in report.slices if s.axis == "w" and s.value == 1.0]
        [anchor] = [
            dev
            for dev in w_slice.deviations
            if dev.rows == (0.55, 1.0) and dev.cols == (0.5, 1.0)
        ]
        assert anchor.ratios[0] == pytest.approx(86.56 / 87.48, rel=1e-12)
        assert anchor.ratios[1] == pytest.approx(92.84 / 93.63, rel=1e-12)
        assert anchor.deviation == pytest.approx(0.0021, abs=0.0002)

    def test_resnet_grid_passes_default_thresholds(self, resnet_merged):
        report = analyze_separability(resnet_merged)
        assert report.median_rel_dev < 0.01
        assert report.max_rel_dev < 0.03
        assert report.passes()

    def test_densenet_grid_passes_default_thresholds(self, densenet_merged):
        report = analyze_separability(densenet_merged)
        assert report.median_rel_dev < 0.01
        assert report.max_rel_dev < 0.03

    def test_report_serializes(self, resnet_slice_b):
        doc = analyze_separability(resnet_slice_b).to_json_dict()
        assert doc["summary"]["max_rel_dev"] > 0
        assert doc["summary"]["n_comparisons"] == sum(
            len(s["deviations"]) for s in doc["slices"]
        )
        assert {"axis", "value", "rows", "cols", "deviation"} <= set(
            doc["summary"]["worst"]
        )


class TestDuplicateHandling:
    def test_remeasurements_are_averaged_within_slices(self):
        rows = [
            [1.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
            [1.0, 0.5, 1.0],
            [1.0, 1.0, 0.5],
            [1.0, 0.5, 0.5],
        ]
        acc = [0.90, 0.94, 0.46, 0.46, 0.23]
        # after averaging the base cell to 0.92, the d=1.0 slice is exactly
        # separable: 0.92 * (0.5, 0.5) scaling per axis
        report = analyze_separability(Dataset.from_arrays(rows, acc))
        assert report.max_rel_dev <= 1e-12
