import math

import numpy as np
import pytest

from mesofluct import models, verify


@pytest.fixture(scope="module")
def full_results():
    return verify.run_checks(fast=False)


def test_registry_sizes():
    fast = verify.registered_checks(fast=True)
    full = verify.registered_checks(fast=False)
    assert len(fast) >= 25
    assert set(fast) < set(full)
    assert len(set(full)) == len(full)


def test_all_checks_pass(full_results):
    failed = [r.line() for r in full_results if not r.passed]
    assert not failed, "\n".join(failed)


def test_fast_mode_is_a_subset_with_the_same_verdicts(full_results):
    fast = verify.run_checks(fast=True)
    assert [r.name for r in fast] == verify.registered_checks(fast=True)
    assert all(r.passed for r in fast)


def test_seed_changes_nothing_in_the_verdict():
    assert all(r.passed for r in verify.run_checks(fast=True, seed=7))


def test_sign_flip_is_caught(monkeypatch):
    original = models.closed_form_L

    def flipped(spec, eps):
        L = original(spec, eps).copy()
        if spec.variant == 1:
            L[0, 6] *= -1
        return L

    monkeypatch.setattr(models, "closed_form_L", flipped)
    by_name = {r.name: r for r in verify.run_checks(fast=True)}
    assert not by_name["model1.oracle_L"].passed
    assert by_name["model1.oracle_L"].residual == pytest.approx(1.0, rel=1e-6)
    assert by_name["model2.oracle_L"].passed


def test_crashing_check_is_reported_as_failure(monkeypatch):
    def boom(ctx):
        raise RuntimeError("kaput")

    monkeypatch.setattr(verify, "_REGISTRY", list(verify._REGISTRY) + [("test.crash", 1.0, True, boom)])
    result = verify.run_checks(fast=True)[-1]
    assert result.name == "test.crash"
    assert not result.passed
    assert math.isnan(result.residual)
    assert "kaput" in result.detail
    assert result.line().startswith("FAIL test.crash")


def test_nonfinite_residual_fails(monkeypatch):
    monkeypatch.setattr(verify, "_REGISTRY", [("test.nan", 1.0, True, lambda ctx: np.nan)])
    assert not verify.run_checks()[0].passed
