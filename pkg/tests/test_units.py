import math

import numpy as np
import pytest
from hypothesis import given, strategies as st_h

import susytweezer as st

# hand-computed from CODATA constants: k_R = 2 pi / 810 nm,
# E_R = hbar^2 k_R^2 / 2m, t = hbar / E_R
RB87_ER_J = 2.318447534306144e-30
RB87_TUNIT_S = 4.548611957103289e-05
LI6_TUNIT_S = 3.1481668244834023e-06
KR_810NM = 7757018.897752576


def test_rb87_derived_constants(rb_units):
    assert rb_units.k_R == pytest.approx(KR_810NM, rel=1e-12)
    assert rb_units.E_R == pytest.approx(RB87_ER_J, rel=1e-9)
    assert rb_units.t_unit == pytest.approx(RB87_TUNIT_S, rel=1e-9)


def test_70ms_in_internal_units(rb_units):
    assert rb_units.time_to_internal(70e-3) == pytest.approx(
        70e-3 / RB87_TUNIT_S, rel=1e-12)


def test_li_rb_time_unit_ratio(li_units, rb_units):
    # t_unit scales with mass; the species ratio is ~14.45, which is what
    # makes 7 ms of Li worth more protocol time than 70 ms of Rb
    ratio = rb_units.t_unit / li_units.t_unit
    assert ratio == pytest.approx(86.909180531 / 6.0151228874, rel=1e-9)
    assert li_units.t_unit == pytest.approx(LI6_TUNIT_S, rel=1e-9)
    assert li_units.time_to_internal(7e-3) > rb_units.time_to_internal(70e-3)


def test_recoil_energy_maps_to_one(li_units):
    assert li_units.energy_to_internal(li_units.E_R) == pytest.approx(1.0, rel=1e-15)


def test_w0_one_micron(li_units):
    assert li_units.length_to_internal(1e-6) == pytest.approx(7.757018897752575,
                                                              rel=1e-12)


@given(q=st_h.floats(min_value=1e-9, max_value=1e9,
                     allow_nan=False, allow_infinity=False))
def test_round_trips(q):
    u = st.make_unit_system(810e-9, 6.0151228874 * 1.66053906660e-27)
    for to_i, to_s in ((u.energy_to_internal, u.energy_to_si),
                       (u.length_to_internal, u.length_to_si),
                       (u.time_to_internal, u.time_to_si)):
        assert to_i(to_s(q)) == pytest.approx(q, rel=1e-12)
        assert to_s(to_i(q)) == pytest.approx(q, rel=1e-12)


@pytest.mark.parametrize("wl,mass", [(-1.0, 1e-26), (0.0, 1e-26),
                                     (810e-9, 0.0), (810e-9, -2e-26)])
def test_invalid_inputs(wl, mass):
    with pytest.raises(ValueError):
        st.make_unit_system(wl, mass)


def test_unknown_species():
    with pytest.raises(ValueError, match="unknown species"):
        st.unit_system_for_species("Cs133", 810e-9)
