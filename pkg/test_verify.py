"""Tests for the verification suite runner and a sample of its checks."""

import json

import pytest
from pydantic import ValidationError

from spdgeo.core.errors import DomainError, PreconditionError, UnknownCheckError
from spdgeo.models.schemas import CheckReport, CheckSpec
from spdgeo.services.verify_service import PATH_SAMPLE_CAP, VerificationService

CATALOG = [
    "lem1_1_tangent_split",
    "thm2_1_pullback",
    "lem2_2_monotone",
    "prop2_3_reflection",
    "rem2_4_power",
    "lem2_5_crossover",
    "thm3_1_completeness",
    "lem3_2_distance_to_identity",
    "thm3_3_alpha",
    "lie_trotter",
    "thm4_1_equivalence",
    "lem4_2_slope",
    "ex4_7_table",
    "thm4_8_commuting",
    "prop5_2_pd",
    "prop5_4_theta_norms",
    "skew_ordering",
]

# checks without a path search, cheap enough for a few samples each
CLOSED_FORM_CHECKS = [
    "lem1_1_tangent_split",
    "thm2_1_pullback",
    "lem2_2_monotone",
    "prop2_3_reflection",
    "rem2_4_power",
    "lem2_5_crossover",
    "thm3_3_alpha",
    "lie_trotter",
    "ex4_7_table",
    "prop5_2_pd",
    "prop5_4_theta_norms",
    "skew_ordering",
]


@pytest.fixture(scope="module")
def service():
    return VerificationService()


def test_catalog_order(service):
    assert service.catalog == CATALOG


@pytest.mark.parametrize("name", CLOSED_FORM_CHECKS)
def test_check_passes(service, name):
    report = service.run_check(CheckSpec(name=name, seed=7, dimension=3, samples=3))
    assert report.passed, f"{report.criterion} = {report.worst_margin} exceeds {report.tolerance}"
    assert report.name == name
    assert report.criterion in report.tolerances
    assert report.samples <= 3


def test_deterministic(service):
    spec = CheckSpec(name="prop5_4_theta_norms", seed=11, dimension=3, samples=2)
    first, second = service.run_check(spec), service.run_check(spec)
    assert first.worst_margin == second.worst_margin
    assert first.witness == second.witness


def test_sample_cap(service):
    report = service.run_check(CheckSpec(name="lem3_2_distance_to_identity", seed=1, dimension=2, samples=50))
    assert report.samples == 4


@pytest.mark.parametrize(
    "name, cap",
    [("lem3_2_distance_to_identity", 4), ("lem4_2_slope", PATH_SAMPLE_CAP), ("thm4_8_commuting", PATH_SAMPLE_CAP)],
)
def test_path_search_sample_caps(service, name, cap):
    assert service.checks[name].sample_cap == cap


def test_report_serializes_with_pass_alias(service):
    report = service.run_check(CheckSpec(name="skew_ordering", seed=7, dimension=2, samples=1))
    payload = json.loads(report.model_dump_json(by_alias=True))
    assert payload["pass"] is True
    assert "passed" not in payload
    assert payload["seed"] == 7
    assert "wyd_constancy" in payload["tolerances"]
    assert CheckReport.model_validate(payload).passed


def test_witness_matrices_are_matrix_files(service):
    report = service.run_check(CheckSpec(name="lie_trotter", seed=3, dimension=2, samples=2))
    matrices = [value for value in report.witness.values() if isinstance(value, dict) and "data" in value]
    assert matrices
    for matrix in matrices:
        assert len(matrix["data"]) == matrix["n"] ** 2


def test_tolerance_override_can_fail_a_check(service):
    spec = CheckSpec(name="prop5_4_theta_norms", seed=7, dimension=3, samples=2, tolerances={"monotone": -1.0})
    report = service.run_check(spec)
    assert not report.passed
    assert report.criterion == "monotone"
    assert report.tolerance == -1.0


def test_unknown_tolerance_key(service):
    with pytest.raises(DomainError):
        service.run_check(CheckSpec(name="skew_ordering", tolerances={"nonsense": 1.0}))


def test_unknown_check(service):
    with pytest.raises(UnknownCheckError) as excinfo:
        service.run_check(CheckSpec(name="no_such_check"))
    assert excinfo.value.exit_code == 2
    assert "skew_ordering" in excinfo.value.details["available"]


@pytest.mark.parametrize("field, value", [("samples", 0), ("dimension", 1), ("seed", -1)])
def test_invalid_check_spec(field, value):
    with pytest.raises(ValidationError):
        CheckSpec(name="skew_ordering", **{field: value})


@pytest.mark.asyncio
async def test_run_all_rejects_dimension_one(service):
    with pytest.raises(PreconditionError):
        await service.run_all_async(seed=0, dimension=1)


@pytest.mark.asyncio
async def test_run_all_reports_in_catalog_order(service):
    reports = await service.run_all_async(seed=5, dimension=2, samples=1)
    assert [report.name for report in reports] == CATALOG
    assert all(report.dimension == 2 and report.seed == 5 for report in reports)
