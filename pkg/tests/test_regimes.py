import json
import math

import numpy as np
import pytest

from hco.cycles import PhaseClass
from hco.model import TWO_PI, Params
from hco.portrait import BracketInvalid
from hco.regimes import (UNDECIDED, Label, SweepGrid, classify_regime,
                         locate_boundary, sweep_plane, sweep_settings, symmetry_fold)

FAST = sweep_settings(Params())


@pytest.mark.parametrize("alpha,delta,d,label", [
    (1.5 * math.pi, 1.5 * math.pi, 1.0, Label.C),
    (math.pi / 4, math.pi, 0.29, Label.B),
    (math.pi / 4, math.pi, 0.31, Label.A),
    (math.pi + 0.01, math.pi, 1.0, Label.D),
    (math.pi - 0.01, math.pi, 1.0, Label.B),
    (4.15, 0.75 * math.pi, 1.0, Label.B),
    (4.28, 0.75 * math.pi, 1.0, Label.D),
])
def test_landmarks(alpha, delta, d, label):
    r = classify_regime(Params(alpha=alpha, delta=delta, d=d), ic_grid=8, settings=FAST)
    assert r.label is label


def test_report_invariants():
    r = classify_regime(Params(alpha=math.pi + 0.01, delta=math.pi), ic_grid=8, settings=FAST)
    assert sum(r.basin_votes.values()) == pytest.approx(1.0)
    # bistability: exactly a rest state and the anti-phase cycle are reached
    kinds = sorted(rid.split(":")[0] for rid in r.reached)
    assert kinds == ["cycle", "eq"]
    assert [c for c, _ in r.stable_cycles] == [PhaseClass.ANTI_PHASE.value]
    assert sum(c.phase_class is PhaseClass.ANTI_PHASE for c in r.cycles) <= 1
    doc = r.to_dict()
    json.dumps(doc)
    assert doc["label"] == "D"


def test_votes_cover_all_probes():
    r = classify_regime(Params(alpha=1.0, delta=0.53), ic_grid=4, settings=FAST)
    assert UNDECIDED not in r.basin_votes
    assert sum(r.basin_votes.values()) == pytest.approx(1.0)


def test_below_threshold_always_excitable():
    rng = np.random.default_rng(31)
    for _ in range(10):
        p = Params(d=float(rng.uniform(0, 0.29)), alpha=float(rng.uniform(0, TWO_PI)),
                   delta=float(rng.uniform(0, TWO_PI)))
        assert classify_regime(p, ic_grid=4, settings=FAST).label is Label.B


def test_neutral_family_is_other():
    r = classify_regime(Params(alpha=1.75 * math.pi, delta=1.5 * math.pi), ic_grid=4,
                        settings=FAST)
    assert r.label is Label.OTHER and r.neutral


def test_ic_grid_minimum():
    with pytest.raises(ValueError):
        classify_regime(Params(), ic_grid=3)


def test_inventory_counts():
    r = classify_regime(Params(alpha=math.pi + 0.01, delta=math.pi), ic_grid=4, settings=FAST)
    n_eq, n_saddle, n_in, n_anti, n_other = r.inventory
    assert n_eq == len(r.equilibria) and n_saddle == n_eq // 2
    assert n_anti == 1


@pytest.fixture(scope="module")
def small_grid():
    return sweep_plane(Params(), (6, 6), ic_grid=4)


def test_sweep_shape_and_determinism(small_grid):
    again = sweep_plane(Params(), (6, 6), ic_grid=4)
    assert small_grid.labels.shape == (6, 6)
    assert np.array_equal(small_grid.labels, again.labels)
    assert np.array_equal(small_grid.inventory, again.inventory)
    assert UNDECIDED.upper() not in small_grid.label_set()


def test_sweep_parallel_matches_serial(small_grid):
    par = sweep_plane(Params(), (6, 6), ic_grid=4, jobs=2)
    assert np.array_equal(par.labels, small_grid.labels)
    assert np.array_equal(par.n_cycles, small_grid.n_cycles)


def test_sweep_csv(tmp_path, small_grid):
    small_grid.to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "alpha,delta,label,n_stable_eq,n_cycles"
    assert len(rows) == 37
    side = json.loads((tmp_path / "s.json").read_text())
    assert side["params"]["d"] == 1.0 and side["resolution"] == [6, 6]


def test_sweep_rejects_bad_range():
    with pytest.raises(ValueError):
        sweep_plane(Params(), (2, 2), alpha_range=(0.0, 7.0))


def test_fold_uncoupled_is_symmetric():
    g = sweep_plane(Params(d=0.0), (8, 8), ic_grid=4)
    assert g.label_set() == {"B"}
    assert symmetry_fold(g) == 0.0


def synthetic_grid(inv):
    n = inv.shape[0]
    return SweepGrid("alpha", "delta", (0.0, TWO_PI), (0.0, TWO_PI), (n, n),
                     np.full((n, n), "B", dtype=object), np.zeros((n, n)), np.zeros((n, n)),
                     inv, Params(), FAST)


def test_fold_zero_for_mirror_invariant_grid():
    # the mirror sends alpha + delta/2 to pi - (alpha + delta/2), which keeps its sine
    n = 32
    a = TWO_PI * np.arange(n) / n
    centre = a[:, None] + 0.5 * a[None, :]
    inv = np.zeros((n, n, 5), dtype=int)
    inv[..., 3] = np.sin(centre) > 0.3
    assert symmetry_fold(synthetic_grid(inv)) == 0.0


def test_fold_detects_asymmetry():
    n = 16
    inv = np.zeros((n, n, 5), dtype=int)
    inv[: n // 4, :, 3] = 1  # a band with no mirror image
    assert symmetry_fold(synthetic_grid(inv)) > 0.1


def test_locate_boundary_snic():
    value, labels = locate_boundary("alpha", (0.875, 0.885), Params(delta=math.pi), ic_grid=4,
                                    settings=FAST, width=1e-3, detail=True)
    assert 0.875 < value < 0.885
    assert labels == ("A", "B")


def test_locate_boundary_narrow_window():
    # the bistable side lies at the smaller alpha
    value, labels = locate_boundary("alpha", (1.0, 1.02), Params(delta=0.53), ic_grid=4,
                                    settings=FAST, width=1e-3, detail=True)
    assert 1.0 < value < 1.02
    assert labels == ("D", "B")


def test_locate_boundary_same_label():
    with pytest.raises(BracketInvalid):
        locate_boundary("alpha", (4.0, 4.05), Params(delta=0.75 * math.pi), ic_grid=4,
                        settings=FAST)
    with pytest.raises(ValueError):
        locate_boundary("beta", (0, 1), Params())
