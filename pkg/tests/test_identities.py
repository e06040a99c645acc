import copy

import pytest

from utils.identity_validator import IdentityValidator

EXPECTED_IDENTITIES = [
    "trace_minor",
    "skew",
    "expansion_consistency",
    "closed_form_2x2",
    "sos_2x2",
    "rotation_zeros_2x2",
    "reflection_positive",
    "frame_invariance_2x2",
    "closed_form_3x3",
    "isotropy_3x3",
    "frame_invariance_3x3",
    "cofactor_conjugation",
    "cofactor_trace",
    "p3_shifted_identity",
    "p3_nonpoly_hessian",
]


@pytest.fixture(scope="module")
def results(config):
    return IdentityValidator(config).validate_all(seed=0)


def test_every_identity_is_reported(results):
    assert list(results) == EXPECTED_IDENTITIES


@pytest.mark.parametrize("name", EXPECTED_IDENTITIES)
def test_identity_within_tolerance(results, name):
    entry = results[name]
    assert entry["passed"], f"{name}: residual {entry['max_residual']:.3e} > {entry['tolerance']:.3e}"


@pytest.mark.parametrize("name", [n for n in EXPECTED_IDENTITIES if n != "p3_nonpoly_hessian"])
def test_exact_identities_leave_roundoff_residuals(results, name):
    assert results[name]["max_residual"] <= 1e-9


def test_sample_counts(results, config):
    assert results["trace_minor"]["samples"] == 1000
    assert results["rotation_zeros_2x2"]["samples"] == config["identities"]["rotations"]
    assert results["p3_nonpoly_hessian"]["samples"] == 9
    assert results["p3_shifted_identity"]["max_residual"] == 0.0


def test_suite_is_deterministic_per_seed(config, results):
    assert IdentityValidator(config).validate_all(seed=0) == results


def test_failed_identity_is_reported(config):
    strict = copy.deepcopy(config)
    strict["identities"]["tolerances"]["p3_nonpoly_hessian"] = 0.0
    validator = IdentityValidator(strict)
    outcome = validator.validate_all(seed=1)
    assert not outcome["p3_nonpoly_hessian"]["passed"]
    assert not validator.all_passed(outcome)
