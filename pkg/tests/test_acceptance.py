"""The acceptance suite: every criterion runs at its stated tolerance and
prints one pass/fail line.  The shared reference case is solved once per
session."""

import pytest

import fbstab.acceptance as acc


@pytest.fixture(scope="module")
def case():
    return acc.ReferenceCase()


@pytest.mark.parametrize("criterion", acc.CRITERIA,
                         ids=[fn.__name__.replace("criterion_", "")
                              for fn in acc.CRITERIA])
def test_criterion(case, criterion):
    result = criterion(case)
    status = "PASS" if result.passed else "FAIL"
    print(f"{status}  {result.name}  ({result.elapsed:.1f}s)  {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"


def test_negative_control_coarse_grid():
    """A deliberately coarse simulation grid must trip the radial criterion:
    the discrete stationary radius then carries an O(h^2) bias above the
    1e-5 acceptance bound."""
    coarse = acc.ReferenceCase(radial_grid_n=64)
    result = acc.criterion_radial_convergence(coarse)
    print(f"negative control (grid 64): passed={result.passed}  {result.detail}")
    assert not result.passed
