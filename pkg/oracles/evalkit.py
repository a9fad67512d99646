"""Per-pixel enumeration of EPE / BP-X / D1 over NOC, OCC and ALL."""

from .registry import fixture


def _metrics_inputs():
    return {"pred": [[1.0, 5.0, 10.0], [104.0, 2.0, 0.0], [7.5, 50.0, 106.0]],
            "gt": [[1.0, 2.0, 4.0], [100.0, 2.5, 3.0], [7.0, 45.0, 100.0]],
            "occ": [[False, False, True], [False, False, False], [False, True, False]],
            "thresholds": [1.0, 2.0, 3.0]}


@fixture("evalkit.metrics_3x3_hand", 1e-12,
         "loop over pixels, bucket by region, strict > for BP-X and for both D1 conditions",
         _metrics_inputs)
def metrics_3x3_hand(inp):
    out = {}
    regions = {"NOC": lambda o: not o, "OCC": lambda o: o, "ALL": lambda o: True}
    for name, keep in regions.items():
        errs = []
        for prow, grow, orow in zip(inp["pred"], inp["gt"], inp["occ"]):
            for p, g, o in zip(prow, grow, orow):
                if keep(o):
                    errs.append((abs(p - g), g))
        n = len(errs)
        out[name] = {
            "count": n,
            "epe": sum(e for e, _ in errs) / n,
            "bp": {f"{t:g}": sum(1 for e, _ in errs if e > t) / n for t in inp["thresholds"]},
            "d1": sum(1 for e, g in errs if e > 3 and e > 0.05 * g) / n,
        }
    return out
