import json
from importlib import resources

import numpy as np
import pytest

from ltvgain import LtvSystem, Signal
from ltvgain.errors import ValidationError
from ltvgain.examples import g1, sine_ltv
from ltvgain.io import load_spec, parse_spec, read_signal_csv, report_dict, save_spec, spec_to_dict, write_signal_csv
from ltvgain.rde import GainBounds


def fixture_path(name):
    return resources.files("ltvgain") / "fixtures" / name


@pytest.mark.parametrize("name", ["g1.json", "g2.json", "sine_ltv.json", "scalar.json"])
def test_shipped_fixtures_load(name):
    sys, options = load_spec(fixture_path(name))
    assert sys.check() is sys
    assert options.divergence_threshold == 1e9


def test_round_trip_matches_builder(tmp_path):
    save_spec(tmp_path / "sine_ltv.json", sine_ltv())
    sys, _ = load_spec(tmp_path / "sine_ltv.json")
    ref = sine_ltv()
    assert np.array_equal(sys.A.samples, ref.A.samples) and np.array_equal(sys.A.times, ref.A.times)
    assert (sys.n_I, sys.n_E) == (2, 0)


def test_absent_channels_default_to_zero_dimensions():
    doc = {
        "horizon": 1.0,
        "dims": {"n_x": 1, "n_d": 1, "n_E": 1},
        "matrices": {"A": {"constant": [[-1]]}, "B": {"constant": [[1]]}, "C_E": {"constant": [[1]]}},
        "solver": {"steps": 500},
        "seed": 7,
    }
    sys, options = parse_spec(doc)
    assert sys.n_I == 0 and sys.C_I.shape == (0, 1) and sys.D_I.shape == (0, 1)
    assert options.steps == 500 and options.seed == 7
    assert spec_to_dict(sys)["matrices"].keys() == {"A", "B", "C_E"}


def test_errors_are_path_qualified():
    doc = {
        "horizon": "ten",
        "dims": {"n_x": 2, "n_d": 1},
        "matrices": {"A": {"constant": [[0]]}, "B": {"gridded": {"times": [0, 1]}}, "Z": {}},
        "solver": {"steps": 0},
    }
    with pytest.raises(ValidationError) as info:
        parse_spec(doc)
    text = "\n".join(info.value.violations)
    for fragment in ("horizon:", "matrices.B.gridded", "matrices.Z", "solver.steps"):
        assert fragment in text


def test_dimension_mismatch_names_field():
    doc = spec_to_dict(g1())
    doc["dims"]["n_x"] = 3
    with pytest.raises(ValidationError) as info:
        parse_spec(doc)
    assert any(v.startswith("matrices.A:") for v in info.value.violations)


def test_gridded_ordering_error(tmp_path):
    doc = spec_to_dict(LtvSystem.create([[0.0]], [[1.0]], [[1.0]], horizon=1.0))
    doc["matrices"]["A"] = {"gridded": {"times": [0, 0, 1], "samples": [[[0]], [[0]], [[0]]]}}
    with pytest.raises(ValidationError) as info:
        parse_spec(doc)
    assert any("times not strictly increasing" in v for v in info.value.violations)


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    with pytest.raises(ValidationError):
        load_spec(path)


def test_signal_csv_round_trip_is_exact(tmp_path):
    t = np.linspace(0.0, 1.0, 7)
    sig = Signal(t, np.column_stack([np.sin(t) / 3, np.exp(t) * 1e-9]))
    write_signal_csv(tmp_path / "d.csv", sig)
    back = read_signal_csv(tmp_path / "d.csv")
    assert np.array_equal(back.times, sig.times) and np.array_equal(back.samples, sig.samples)
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "t,d1,d2"


def test_report_omits_missing_fields():
    res = GainBounds(gamma_lb=1.0, gamma_ub=float("inf"), algorithm="power", tolerance=0.1)
    doc = report_dict(res)
    assert "gamma_ub" not in doc and "disturbance_csv" not in doc
    assert None not in doc.values()
    json.dumps(doc)
