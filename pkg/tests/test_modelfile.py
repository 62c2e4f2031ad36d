from pathlib import Path

import numpy as np
import pytest

from gaussrd.duality import DirectModel
from gaussrd.errors import ModelFileError
from gaussrd.gauss_model import SourceModel
from gaussrd.modelfile import dump_model, load_model, parse_model

DATA = Path(__file__).parent / "data"


def test_load_samples():
    m1 = load_model(DATA / "M1.model")
    assert isinstance(m1, SourceModel) and (m1.k, m1.l) == (1, 2)
    m2 = load_model(DATA / "M2.model")
    np.testing.assert_array_equal(m2.noise_var, [1.0, 0.25])
    cyc = load_model(DATA / "cyc2.model")
    assert isinstance(cyc, DirectModel) and cyc.l == 2


@pytest.mark.parametrize("path", sorted(DATA.glob("*.model")))
def test_round_trip(path):
    model = load_model(path)
    again = parse_model(dump_model(model))
    np.testing.assert_array_equal(again.sigma_x, model.sigma_x)
    np.testing.assert_array_equal(again.noise_var, model.noise_var)


def test_scalar_direct_noise_broadcasts():
    dm = parse_model("kind: direct\nl: 3\nsigma_x: [[1,0,0],[0,1,0],[0,0,1]]\nnoise_var: 0.2\n")
    np.testing.assert_array_equal(dm.noise_var, [0.2, 0.2, 0.2])


GOOD = ["k: 1", "l: 2", "sigma_x: [[1.0]]", "a: [[1], [1]]", "noise_var: [1, 1]"]


def _with(line_no, text):
    lines = list(GOOD)
    lines[line_no - 1] = text
    return "\n".join(lines) + "\n"


@pytest.mark.parametrize(
    "text, line, field",
    [
        (_with(3, "sigma_x: [[-1.0]]"), 3, "sigma_x"),
        (_with(4, "a: [[1], [1], [1]]"), 4, "a"),
        (_with(5, "noise_var: [1, 0]"), 5, "noise_var"),
        (_with(5, "noise_var: [1, "), 5, "noise_var"),
        (_with(1, "k: 1.5"), 1, "k"),
        (_with(2, "this line has no separator"), 2, None),
        ("\n".join(GOOD[:4]) + "\n", None, "noise_var"),
        ("\n".join(GOOD) + "\nextra: 1\n", 6, "extra"),
        ("\n".join(GOOD) + "\nk: 1\n", 6, "k"),
    ],
)
def test_errors_cite_line_and_field(text, line, field):
    with pytest.raises(ModelFileError) as exc:
        parse_model(text)
    assert exc.value.line == line
    assert exc.value.field == field
    if line is not None:
        assert f"line {line}" in str(exc.value)
    if field is not None:
        assert f"'{field}'" in str(exc.value)


def test_comments_and_blank_lines():
    text = "# header\n\n" + "\n".join(g + "  # note" for g in GOOD) + "\n"
    assert parse_model(text).l == 2


def test_non_symmetric_names_field():
    with pytest.raises(ModelFileError) as exc:
        parse_model("k: 2\nl: 1\nsigma_x: [[1, 0.5], [0, 1]]\na: [[1, 0]]\nnoise_var: [1]\n")
    assert exc.value.field == "sigma_x" and exc.value.line == 3
