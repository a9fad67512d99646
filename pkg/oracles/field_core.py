"""Bilinear sampling and forward differences, evaluated by hand formula."""

from .registry import fixture


def _bilinear_inputs():
    return {"grid": [[0.0, 1.0], [2.0, 3.0]], "x": 0.5, "y": 0.5}


@fixture("field_core.bilinear_2x2", 1e-12, "hand evaluation of the bilinear formula",
         _bilinear_inputs)
def bilinear_2x2(inp):
    g, x, y = inp["grid"], inp["x"], inp["y"]
    top = (1 - x) * g[0][0] + x * g[0][1]
    bottom = (1 - x) * g[1][0] + x * g[1][1]
    return {"value": (1 - y) * top + y * bottom}


def _diff_inputs():
    return {"grid": [[0.0, 1.0], [2.0, 3.0]], "axis": "y"}


@fixture("field_core.forward_diff_y", 0.0, "per-column subtraction of row i from row i+1",
         _diff_inputs)
def forward_diff_y(inp):
    g = inp["grid"]
    return {"diff": [[g[i + 1][j] - g[i][j] for j in range(len(g[0]))] for i in range(len(g) - 1)]}
