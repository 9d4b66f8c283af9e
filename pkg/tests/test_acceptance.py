"""Formal acceptance gate: thirteen criteria over one shared suite run.

The suite is executed once per pytest session at seed 0 and full replica
counts; each test below reports and asserts a single criterion. Set
PPW_ACCEPT_QUICK=1 to smoke-test the wiring with reduced replicas; that mode
is for development only and is not the gate. In particular the
model-comparison criterion (5) usually lacks statistical power at quick-mode
replica counts and can fail there while passing the full run.
"""
import os

import pytest

from ppw.acceptance import run_all

QUICK = os.environ.get("PPW_ACCEPT_QUICK", "") == "1"


@pytest.fixture(scope="session")
def results():
    return run_all(seed=0, quick=QUICK)


def _check(results, idx):
    r = next(x for x in results if x.index == idx)
    verdict = "PASS" if r.passed else "FAIL"
    print(f"[{verdict}] criterion {r.index}: {r.name}: {r.details}")
    assert r.passed, f"criterion {r.index} ({r.name}): {r.details}"


def test_criterion_01_harmonic_sphere_rate(results):
    _check(results, 1)


def test_criterion_02_spherical_ensemble_rate(results):
    _check(results, 2)


def test_criterion_03_random_polynomial_zero_rate(results):
    _check(results, 3)


def test_criterion_04_torus_harmonic_rates(results):
    _check(results, 4)


def test_criterion_05_independent_sampling_contrast(results):
    _check(results, 5)


def test_criterion_06_stratified_rate_dimension_three(results):
    _check(results, 6)


def test_criterion_07_smoothing_bound_soundness(results):
    _check(results, 7)


def test_criterion_08_variance_exact_vs_mc(results):
    _check(results, 8)


def test_criterion_09_zero_ensemble_variance_bound(results):
    _check(results, 9)


def test_criterion_10_lattice_counting_suite(results):
    _check(results, 10)


def test_criterion_11_transport_oracle(results):
    _check(results, 11)


def test_criterion_12_orthogonal_polynomial_envelopes(results):
    _check(results, 12)


def test_criterion_13_bracket_above_packing_floor(results):
    _check(results, 13)
