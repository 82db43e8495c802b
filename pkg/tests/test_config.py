import math

import pytest

from risisac.config import (ParseError, ScenarioConfig, ValidationError,
                            apply_sweep, load_config)
from risisac.optimizer import Scheme


def test_defaults_are_valid():
    cfg = ScenarioConfig()
    assert cfg.n_ap == 8
    assert cfg.m_ris == 32
    assert cfg.k_devices == 3
    assert cfg.wavelength == pytest.approx(0.0107068735)
    assert cfg.ap_spacing == pytest.approx(0.5 / 7)
    assert cfg.ris_spacing == pytest.approx(cfg.wavelength / 2)
    assert len(cfg.scheme_list()) == 5


def test_explicit_ris_spacing_wins():
    cfg = ScenarioConfig(ris_spacing_m=0.01)
    assert cfg.ris_spacing == 0.01


def test_load_config_yaml(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text("n_ap: 16\nrate_k_th_bps: 4.0e6\nseeds: [3, 4]\n")
    cfg = load_config(p)
    assert cfg.n_ap == 16
    assert cfg.rate_k_th_bps == 4e6
    assert cfg.seeds == (3, 4)
    assert cfg.m_ris == 32  # untouched default


def test_load_config_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    assert load_config(p) == ScenarioConfig()


def test_load_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("n_antennas: 8\n")
    with pytest.raises(ValidationError, match="n_antennas"):
        load_config(p)


def test_load_config_rejects_malformed_yaml(tmp_path):
    p = tmp_path / "broken.yaml"
    p.write_text("n_ap: [unclosed\n")
    with pytest.raises(ParseError):
        load_config(p)


def test_load_config_rejects_non_mapping(tmp_path):
    p = tmp_path / "list.yaml"
    p.write_text("- a\n- b\n")
    with pytest.raises(ParseError):
        load_config(p)


@pytest.mark.parametrize("kwargs", [
    {"n_ap": 1},
    {"k_devices": 0},
    {"m_ris": 33},
    {"bandwidth_hz": -1.0},
    {"alpha_step": 1.5},
    {"band_offset_hz": 1e6},
    {"device_arc_rad": (1.0, 1.0)},
    {"sweep_var": "bogus"},
    {"sweep_var": "m_ris"},  # missing sweep_values
    {"seeds": ()},
    {"schemes": ("proposed", "mystery")},
    {"fim_n_scaling": "other"},
    {"q_ap": (0.0, 0.0)},
])
def test_validation_rejections(kwargs):
    with pytest.raises(ValidationError):
        ScenarioConfig(**kwargs)


def test_apply_sweep_variants():
    cfg = ScenarioConfig(sweep_var="m_ris", sweep_values=(16, 32))
    assert apply_sweep(cfg, 16).m_ris == 16
    cfg = ScenarioConfig(sweep_var="x_ris", sweep_values=(10.0,))
    swept = apply_sweep(cfg, 10.0)
    assert swept.q_ris == (10.0, 0.0, 10.0)
    cfg = ScenarioConfig(sweep_var="p_k_dbm", sweep_values=(5.0,))
    assert apply_sweep(cfg, 5.0).p_k_dbm == 5.0
    cfg = ScenarioConfig()
    assert apply_sweep(cfg, 123.0) is cfg  # sweep disabled


def test_arc_default_full_circle():
    cfg = ScenarioConfig()
    assert cfg.device_arc_rad == (0.0, 2.0 * math.pi)


def test_scheme_list_values():
    assert ScenarioConfig(schemes=("full-so",)).scheme_list() == [Scheme.FULL_SO]
