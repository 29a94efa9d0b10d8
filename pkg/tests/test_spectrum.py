import math

import numpy as np
import pytest

from perbif import (asymptotic_density, count_lower_bound, degeneracy_instant, eigenfunction_even,
                    eigenvalue)
from perbif.spectrum import eigenfunction_odd

TWO_PI = 2.0 * math.pi


def test_degeneracy_instant_examples():
    assert degeneracy_instant(3.0, TWO_PI, 1).mu_k == pytest.approx(0.5, rel=1e-15)
    assert degeneracy_instant(2.0, TWO_PI, 3).mu_k == pytest.approx(9.0, rel=1e-15)
    assert degeneracy_instant(3.0, math.pi, 1).mu_k == pytest.approx(2.0, rel=1e-15)
    inst = degeneracy_instant(3.0, TWO_PI, 2)
    assert inst.k == 2 and inst.omega_k == pytest.approx(2.0)


def test_instants_strictly_increasing_and_exact():
    q, T = 2.7, 4.1
    mus = [degeneracy_instant(q, T, k).mu_k for k in range(1, 30)]
    assert np.all(np.diff(mus) > 0)
    for k, mu in enumerate(mus, start=1):
        assert mu * (q - 1) * T * T == pytest.approx(4 * math.pi ** 2 * k * k, rel=1e-14)


@pytest.mark.parametrize("args", [(1.0, TWO_PI, 1), (3.0, 0.0, 1), (3.0, TWO_PI, 0),
                                  (3.0, TWO_PI, 1.5)])
def test_degeneracy_instant_rejects(args):
    with pytest.raises(ValueError):
        degeneracy_instant(*args)


def test_eigenvalue_examples():
    assert eigenvalue(3.0, TWO_PI, 0.5, 1) == pytest.approx(0.0, abs=1e-15)
    assert eigenvalue(3.0, TWO_PI, 1.0, 0) == -2.0
    assert eigenvalue(2.0, TWO_PI, 4.5, 2) == pytest.approx(-0.5, abs=1e-15)


def test_eigenfunction_zeros():
    f = eigenfunction_even(TWO_PI, 1)
    assert f(0.0) == 1.0
    g = eigenfunction_even(TWO_PI, 2)
    t = np.linspace(0.0, TWO_PI, 4001)[:-1]
    vals = g(t)
    assert np.count_nonzero(np.sign(vals) != np.sign(np.roll(vals, -1))) == 4
    np.testing.assert_allclose(g(np.array([1, 3, 5, 7]) * math.pi / 4), 0.0, atol=1e-15)
    h = eigenfunction_odd(TWO_PI, 1)
    assert h(0.0) == 0.0


def test_count_lower_bound_examples():
    assert count_lower_bound(3.0, TWO_PI, 0.5) == 0
    assert count_lower_bound(3.0, TWO_PI, 0.3) == 0
    assert count_lower_bound(2.0, TWO_PI, 4.5) == 2
    assert count_lower_bound(2.0, TWO_PI, 4.0) == 1
    assert count_lower_bound(3.0, TWO_PI, 2.0) == 1
    assert count_lower_bound(3.0, TWO_PI, 3.0) == 2


def test_count_lower_bound_at_every_instant():
    # mu exactly at mu_k counts k - 1, just above counts k
    for q, T in ((3.0, TWO_PI), (2.0, 1.7), (5.0, 9.3), (1.1, TWO_PI)):
        for k in range(1, 40):
            mu = degeneracy_instant(q, T, k).mu_k
            assert count_lower_bound(q, T, mu) == k - 1
            assert count_lower_bound(q, T, math.nextafter(mu, math.inf)) == k


def test_count_lower_bound_rejects():
    with pytest.raises(ValueError):
        count_lower_bound(3.0, TWO_PI, 0.0)
    with pytest.raises(ValueError, match="q must exceed 1"):
        count_lower_bound(0.5, TWO_PI, 1.0)


def test_asymptotic_density_examples():
    assert asymptotic_density(2.0, TWO_PI) == pytest.approx(1.0, rel=1e-15)
    assert asymptotic_density(3.0, TWO_PI) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert asymptotic_density(5.0, math.pi) == pytest.approx(1.0, rel=1e-15)


def test_count_density_limit():
    q, T = 3.0, TWO_PI
    for mu in (1e2, 1e4, 1e6):
        ratio = count_lower_bound(q, T, mu) / math.sqrt(mu)
        assert ratio <= asymptotic_density(q, T)
        assert ratio >= asymptotic_density(q, T) * (1 - 2 / math.sqrt((q - 1) * mu)) - 1e-12
