import numpy as np
import pytest

from conftest import CONFIG_DIR, random_box
from Tracking.Adapters.Outbound.yaml_config_adapter import YamlConfigAdapter
from Tracking.Domain import evaluation
from Tracking.Domain.errors import LengthMismatchError, StreamFormatError, UnknownSequenceError
from Tracking.Domain.evaluation import SequenceResult, SubsetSpec
from Tracking.Domain.geometry import Box
from Tracking.Domain.utils.report_markdown import rows_to_markdown

GT = Box(x=0, y=0, w=10, h=10)

# IoU, center error and normalized error per frame:
# (1, 0, 0), (0.5, 2.5, 0.25), (0, 20, 2), (0, 30, 3), (0.5, 2.5, 0.25)
FIXTURE_TRAJ = [
    Box(x=0, y=0, w=10, h=10),
    Box(x=0, y=0, w=10, h=5),
    Box(x=20, y=0, w=10, h=10),
    Box(x=30, y=0, w=10, h=10),
    Box(x=0, y=0, w=5, h=10),
]
FIXTURE_GT = [GT] * 5


def test_perfect_trajectory():
    traj = [Box(x=t, y=2 * t, w=10 + t, h=8) for t in range(20)]
    assert evaluation.success_curve(traj, traj).summary == pytest.approx(100 / 101)
    assert evaluation.precision_curve(traj, traj).summary == 1.0
    assert evaluation.norm_precision_curve(traj, traj).summary == 1.0


def test_disjoint_trajectory():
    traj = [Box(x=100, y=100, w=10, h=10)] * 4
    assert evaluation.success_curve(traj, [GT] * 4).summary == 0.0


def test_two_frame_success_curve():
    curve = evaluation.success_curve([GT, Box(x=0, y=0, w=10, h=5)], [GT, GT])
    assert curve.values[:50] == [1.0] * 50
    assert curve.values[50:100] == [0.5] * 50
    assert curve.values[100] == 0.0
    assert curve.summary == pytest.approx(75 / 101)


def test_precision_examples():
    offset = [Box(x=25, y=0, w=10, h=10)] * 3
    curve = evaluation.precision_curve(offset, [GT] * 3)
    assert curve.summary == 0.0
    assert curve.values[24] == 0.0
    assert curve.values[25] == 1.0
    mixed = evaluation.precision_curve([GT, Box(x=30, y=0, w=10, h=10)], [GT, GT])
    assert mixed.summary == 0.5


def test_norm_precision_examples():
    gt = [Box(x=0, y=0, w=100, h=100)] * 3
    quarter = evaluation.norm_precision_curve([Box(x=25, y=0, w=100, h=100)] * 3, gt)
    assert quarter.values[49] == 0.0
    assert quarter.values[50] == 1.0
    assert quarter.summary == pytest.approx(51 / 101)
    out_of_range = evaluation.norm_precision_curve([Box(x=100, y=0, w=100, h=100)] * 3, gt)
    assert out_of_range.summary == 0.0


def test_norm_precision_skips_degenerate_ground_truth():
    curve = evaluation.norm_precision_curve([GT, GT], [GT, Box(x=0, y=0, w=0, h=10)])
    assert curve.skipped == 1
    assert curve.summary == 1.0
    result = evaluation.evaluate_sequence("seq", [GT, GT], [GT, Box(x=0, y=0, w=0, h=10)])
    assert result.skipped_frames == 1
    assert result.frames == 2


def test_hand_built_fixture():
    result = evaluation.evaluate_sequence("fixture", FIXTURE_TRAJ, FIXTURE_GT)
    assert result.auc == pytest.approx((50 * 0.6 + 50 * 0.2) / 101, abs=1e-12)
    assert result.precision == pytest.approx(0.8)
    assert result.norm_precision == pytest.approx((50 * 0.2 + 51 * 0.6) / 101, abs=1e-12)


def test_length_mismatch_names_both_lengths():
    with pytest.raises(LengthMismatchError, match="3 frames but ground truth has 4"):
        evaluation.success_curve([GT] * 3, [GT] * 4)


def test_empty_trajectory_is_rejected():
    with pytest.raises(StreamFormatError):
        evaluation.evaluate_sequence("empty", [], [])


def test_curve_shapes_and_monotonicity(rng):
    gt = [random_box(rng) for _ in range(40)]
    traj = [random_box(rng) for _ in range(40)]
    success = evaluation.success_curve(traj, gt)
    precision = evaluation.precision_curve(traj, gt)
    norm = evaluation.norm_precision_curve(traj, gt)
    assert (len(success.values), len(precision.values), len(norm.values)) == (101, 51, 101)
    assert all(b <= a for a, b in zip(success.values, success.values[1:]))
    assert all(b >= a for a, b in zip(precision.values, precision.values[1:]))
    assert all(b >= a for a, b in zip(norm.values, norm.values[1:]))
    assert all(0.0 <= v <= 1.0 for v in success.values + precision.values + norm.values)


def test_summaries_ignore_frame_order(rng):
    gt = [random_box(rng) for _ in range(30)]
    traj = [random_box(rng) for _ in range(30)]
    order = rng.permutation(30)
    shuffled = evaluation.evaluate_sequence("s", [traj[i] for i in order], [gt[i] for i in order])
    assert shuffled.model_dump(exclude={"name"}) == pytest.approx(
        evaluation.evaluate_sequence("s", traj, gt).model_dump(exclude={"name"})
    )


def results(rng, count: int = 12) -> list[SequenceResult]:
    return [
        SequenceResult(name=f"seq{i:02d}", frames=100, auc=float(rng.random()), precision=float(rng.random()), norm_precision=float(rng.random()))
        for i in range(count)
    ]


def test_subset_and_complement_reconstruct_overall(rng):
    rows = results(rng)
    members = [r.name for r in rows[::3]]
    report = evaluation.attribute_report(rows, [SubsetSpec(name="similar", sequences=members)])
    subset, complement = report.subsets[0], report.complements[0]
    assert subset.count + complement.count == report.overall.count
    for key in ("auc", "precision", "norm_precision"):
        combined = (subset.count * getattr(subset, key) + complement.count * getattr(complement, key)) / report.overall.count
        assert combined == pytest.approx(getattr(report.overall, key), abs=1e-9)


def test_subset_of_everything_equals_overall(rng):
    rows = results(rng)
    report = evaluation.attribute_report(rows, [SubsetSpec(name="all", sequences=[r.name for r in rows])])
    assert report.subsets[0].auc == pytest.approx(report.overall.auc)
    assert report.complements[0].count == 0
    assert report.complements[0].auc is None


def test_unknown_subset_sequence(rng):
    with pytest.raises(UnknownSequenceError, match="nope, other"):
        evaluation.attribute_report(results(rng), [SubsetSpec(name="x", sequences=["seq01", "other", "nope"])])


def test_bundled_similar_subsets():
    subsets = YamlConfigAdapter().load_subsets(str(CONFIG_DIR / "uot100_similar_subsets.yaml"))
    assert [s.name for s in subsets] == ["similar"]
    assert len(subsets[0].sequences) == 28
    assert len(set(subsets[0].sequences)) == 28
    assert {"ArmyDiver1", "MantaRescue4", "WhiteShark"} <= set(subsets[0].sequences)


def test_evaluate_many_is_sorted_and_parallel():
    pairs = {name: (FIXTURE_TRAJ, FIXTURE_GT) for name in ("b", "a", "c")}
    found = evaluation.evaluate_many(pairs, max_workers=3)
    assert [r.name for r in found] == ["a", "b", "c"]
    assert len({r.auc for r in found}) == 1


def test_build_and_compare_reports():
    base = evaluation.build_report(
        [evaluation.evaluate_sequence("a", [Box(x=30, y=0, w=10, h=10)] * 5, FIXTURE_GT),
         evaluation.evaluate_sequence("b", FIXTURE_TRAJ, FIXTURE_GT)],
        [SubsetSpec(name="hard", sequences=["a"])],
        label="dbpp",
    )
    better = evaluation.build_report(
        [evaluation.evaluate_sequence("a", FIXTURE_GT, FIXTURE_GT),
         evaluation.evaluate_sequence("b", FIXTURE_TRAJ, FIXTURE_GT)],
        [SubsetSpec(name="hard", sequences=["a"])],
        label="mbpp",
    )
    assert base.conventions == evaluation.CONVENTIONS
    rows = evaluation.compare_reports([base, better])
    assert [(r.scope, r.label) for r in rows] == [
        ("overall", "dbpp"), ("overall", "mbpp"),
        ("hard", "dbpp"), ("hard", "mbpp"),
        ("hard (complement)", "dbpp"), ("hard (complement)", "mbpp"),
    ]
    assert rows[0].d_auc is None
    assert rows[3].d_auc == pytest.approx(100 / 101)
    assert rows[5].d_auc == 0.0
    assert evaluation.compare_reports([]) == []


def test_comparison_markdown():
    rows = [
        {"scope": "overall", "label": "dbpp", "auc": 0.5, "d_auc": None},
        {"scope": "overall", "label": "a|b", "auc": 0.61234, "d_auc": 0.11234},
    ]
    text = rows_to_markdown(rows, ["scope", "label", "auc", "d_auc"], title="Runs", headers={"auc": "AUC"}, notes={"protocol": "OPE"})
    lines = text.splitlines()
    assert lines[0] == "## Runs"
    assert "- protocol: OPE" in lines
    assert "| scope | label | AUC | d_auc |" in lines
    assert "| overall | dbpp | 50.00 | - |" in lines
    assert "| overall | a\\|b | 61.23 | +11.23 |" in lines
    assert text.endswith("\n")
