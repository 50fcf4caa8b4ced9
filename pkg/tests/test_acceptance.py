"""End-to-end acceptance checks, one group per criterion.

The trained surrogates are shared session fixtures; the surrogate quality,
search and ranking groups reuse them.
"""
import math

import numpy as np
import pytest

from interlock.dataset import designs_of, flatten_runs, generate_dataset, split
from interlock.design_space import GRID_SIZES, PanelDesign, encode_features, enumerate_grid
from interlock.metrics import evaluate, mean_squared_error, r_squared
from interlock.nn import Adam, CNNSurrogate, MLPSurrogate, build_cnn, build_mlp
from interlock.oracle import CHANNELS, MaterialSpec, PanelModel, ThermalState, simulate, step_thermal
from interlock.search import (
    IMPROVEMENT_BENCHMARK_PCT,
    PoolStats,
    Scenario,
    predict_grid_maxima,
    orient_and_normalize,
    rank_grid,
    rank_order,
    search_grid,
    validate_with_oracle,
    weighted_score,
)

from gradcheck import gradient_check, toy_batch

pytestmark = pytest.mark.acceptance

DESK_DESIGNS = 200
DESK_SAMPLE_STEP = 10.0
DESK_EPOCHS = 2000
KEY_CHANNELS = ("edge_temperature", "internal_energy", "elastic_energy")
R2_FLOOR = 0.90
SCALED_MSE_CEILING = 1e-3
TRAIN_OPTIONS = dict(epochs=DESK_EPOCHS, batch_size=256, learning_rate=1e-3, dtype="float32", eval_every=50, seed=0)


@pytest.fixture(scope="session")
def desk_table():
    return generate_dataset(3, DESK_DESIGNS, seed=2024, sample_step=DESK_SAMPLE_STEP)


@pytest.fixture(scope="session")
def desk_split(desk_table):
    return split(desk_table, 0.8, seed=0)


def _fit(cls, desk_table, desk_split):
    train, test = desk_split
    return cls(**TRAIN_OPTIONS).fit(
        train.features, train.targets, test.features, test.targets,
        feature_names=desk_table.feature_names, target_names=desk_table.target_names,
    )


@pytest.fixture(scope="session")
def trained_mlp(desk_table, desk_split):
    return _fit(MLPSurrogate, desk_table, desk_split)


@pytest.fixture(scope="session")
def trained_cnn(desk_table, desk_split):
    return _fit(CNNSurrogate, desk_table, desk_split)


# ---------------------------------------------------------------- criterion 1
EXPECTED_SHAPES = {3: (2_625_000, 7), 5: (65_625_000, 9), 7: (1_640_625_000, 11)}


@pytest.mark.criterion(1)
@pytest.mark.parametrize("n", GRID_SIZES)
def test_grid_shapes(n, note):
    grid = enumerate_grid(n)
    assert grid.shape == EXPECTED_SHAPES[n]
    # closed form: 5 angle levels per symmetry class, 7 length ratios, 600 time samples
    assert grid.row_count == 5 ** (n + 1) * 7 * 600
    note(f"N={n}: shape {grid.shape}")


@pytest.mark.criterion(1)
@pytest.mark.parametrize("n", [5, 7])
def test_grid_spot_checks(n):
    grid = enumerate_grid(n)
    rng = np.random.default_rng(n)
    for index in rng.integers(0, grid.row_count, 200):
        row = grid.rows(int(index), int(index) + 1)[0]
        design = grid.design(int(index) // grid.n_times)
        expected = encode_features(design, float(index % grid.n_times))
        np.testing.assert_array_equal(row, expected)
        assert grid.design_index(design) == index // grid.n_times
    last = grid.rows(grid.row_count - 1, grid.row_count)[0]
    assert list(last[:-3]) == [25.0] * grid.n_angles and last[-3:].tolist() == [2.0, n * n, 599.0]


@pytest.mark.criterion(1)
def test_grid_full_stream_small():
    grid = enumerate_grid(3)
    count = 0
    seen_designs = set()
    for block in grid.iter_rows(rows_per_shard=600 * 875):
        assert block.shape[1] == 7
        t = block[:, -1].reshape(-1, 600)
        assert np.all(t == np.arange(600.0))
        count += len(block)
        seen_designs.update(map(tuple, block[::600, :5]))
    assert count == 2_625_000
    assert len(seen_designs) == 4375


# ---------------------------------------------------------------- criterion 2
@pytest.mark.criterion(2)
def test_gradient_check_mlp(note):
    net = build_mlp(7, hidden=(8, 4), seed=11)
    assert net.shape_chain() == [(7,), (8,), (4,), (9,)]
    err = gradient_check(net, *toy_batch(7, seed=11))
    note(f"MLP 7-8-4-9 max relative gradient error {err:.2e}")
    assert err < 1e-4


@pytest.mark.criterion(2)
def test_gradient_check_cnn(note):
    net = build_cnn(7, filters=(4, 3), kernel_size=3, pool=2, dense_units=5, seed=12)
    assert net.shape_chain() == [(7,), (5, 4), (3, 3), (1, 3), (3,), (5,), (9,)]
    err = gradient_check(net, *toy_batch(7, seed=12))
    note(f"CNN 7-conv4-conv3-pool-5-9 max relative gradient error {err:.2e}")
    assert err < 1e-4


# ---------------------------------------------------------------- criterion 3
@pytest.mark.criterion(3)
def test_adam_quadratic(note):
    theta = np.array([0.0])
    opt = Adam(lr=1e-3)
    steps = None
    for step in range(1, 10_001):
        opt.step([theta], [2.0 * (theta - 3.0)])
        if abs(theta[0] - 3.0) < 1e-6:
            steps = step
            break
    note(f"|theta - 3| < 1e-6 after {steps} steps")
    assert steps is not None


# ---------------------------------------------------------------- criterion 4
@pytest.mark.criterion(4)
def test_oracle_energy_conservation(note):
    lossless = MaterialSpec(emissivity=0.0, convection_W_m2K=0.0)
    run = simulate(PanelDesign(3, (5.0, 15.0, 25.0, 10.0), 1.5), material=lossless)
    assert run.times[-1] == 600.0
    gained = run.channel("internal_energy")[-1] - run.channel("internal_energy")[0]
    supplied = float(np.sum(run.channel("input_power")[1:]) * (run.times[1] - run.times[0]))
    rel = abs(gained - supplied) / supplied
    note(f"energy gained {gained:.6g} J vs supplied {supplied:.6g} J, relative gap {rel:.1e}")
    assert rel < 0.01


@pytest.mark.criterion(4)
def test_oracle_unloaded_fixed_point():
    model = PanelModel(PanelDesign(5, (5, 10, 15, 20, 25, 5), 0.75))
    state = ThermalState(model.initial_state().temperature, 100.0)
    for _ in range(50):
        nxt = step_thermal(state, 0.1, model)
        assert np.array_equal(nxt.temperature, state.temperature)
        state = nxt


# ---------------------------------------------------------------- criterion 5
@pytest.mark.criterion(5)
@pytest.mark.parametrize("kind", ["mlp", "cnn"])
def test_surrogate_quality(kind, request, desk_table, desk_split, note):
    model = request.getfixturevalue(f"trained_{kind}")
    train, test = desk_split
    report = evaluate(test.targets, model.predict(test.features), desk_table.target_names)
    val_mse = model.curve_.val_mse[-1]
    train_mse = model.curve_.train_mse[-1]
    r2 = {c: report.r2_of(c) for c in KEY_CHANNELS}
    note(
        f"{kind.upper()}: held-out R2 " + ", ".join(f"{c} {v:.4f}" for c, v in r2.items())
        + f"; scaled MSE train {train_mse:.2e}, held-out {val_mse:.2e} (target 1e-4 .. 1e-3)"
    )
    note(f"{kind.upper()}: all-channel R2 " + ", ".join(f"{c} {v:.3f}" for c, v in zip(report.channels, report.r2) if v is not None))
    assert model.curve_.train_mse[-1] <= model.curve_.train_mse[0]
    assert all(v >= R2_FLOOR for v in r2.values()), r2
    assert val_mse <= SCALED_MSE_CEILING


# ---------------------------------------------------------------- criterion 6
@pytest.mark.criterion(6)
def test_architecture_shapes():
    mlp = build_mlp(7)
    assert mlp.shape_chain() == [(7,), (256,), (256,), (256,), (128,), (64,), (32,), (16,), (8,), (9,)]
    cnn = build_cnn(7)
    assert cnn.shape_chain() == [(7,), (5, 256), (3, 32), (1, 32), (32,), (80,), (9,)]
    probe = np.zeros((3, 7))
    assert mlp.trace_shapes(probe) == mlp.shape_chain()
    assert cnn.trace_shapes(probe) == cnn.shape_chain()


# ---------------------------------------------------------------- criterion 7
@pytest.fixture(scope="session")
def shield_ranking(trained_mlp):
    return rank_grid(trained_mlp, search_grid(3), Scenario("shield", (1.0, 0.0)), k=100)


@pytest.mark.criterion(7)
def test_search_beats_training_pool(shield_ranking, desk_table, note):
    training = list(designs_of(desk_table).values())
    record = validate_with_oracle(shield_ranking, training, top=10)
    note(
        f"validated best max edge temperature {record.oracle_maxima[0]:.2f} C "
        f"(predicted {record.predicted_maxima[0]:.2f} C) vs best of {len(training)} training designs "
        f"{record.training_best_maxima[0]:.2f} C"
    )
    note(f"improvement {record.improvement_pct[0]:.2f}% (reference figure {IMPROVEMENT_BENCHMARK_PCT:.0f}%)")
    assert record.oracle_maxima[0] <= record.training_best_maxima[0]


# ---------------------------------------------------------------- criterion 8
@pytest.mark.criterion(8)
def test_single_objective_weights_are_sorts(trained_mlp, shield_ranking):
    grid = search_grid(3)
    maxima = predict_grid_maxima(trained_mlp, grid, Scenario("shield"))
    keys = grid.design_features(0, grid.n_designs)[:, :-1]
    for w, col in (((1.0, 0.0), 0), ((0.0, 1.0), 1)):
        ranking = rank_grid(trained_mlp, grid, Scenario("shield", w), k=100) if col else shield_ranking
        expected = rank_order(maxima[:, col], keys)[:100]
        assert [c.design_index for c in ranking.candidates] == list(expected)


@pytest.mark.criterion(8)
def test_top_100_stable_across_shards_and_workers(trained_mlp, note):
    grid = search_grid(3)
    scenario = Scenario("shield", (0.75, 0.25))
    base = rank_grid(trained_mlp, grid, scenario, k=100, designs_per_shard=1024)
    ids = [c.design_index for c in base.candidates]
    n_shards = math.ceil(grid.n_designs / 1024)
    order = list(np.random.default_rng(3).permutation(n_shards))
    for kw in (dict(designs_per_shard=1024, shard_order=order), dict(designs_per_shard=512, workers=2), dict(designs_per_shard=4096)):
        other = rank_grid(trained_mlp, grid, scenario, k=100, **kw)
        assert [c.design_index for c in other.candidates] == ids, kw
    note(f"top-100 identical over {len(order)} reordered shards, 2 workers and a single shard")


@pytest.mark.criterion(8)
def test_constructed_ties_break_on_design_vector():
    maxima = np.array([[3.0, 1.0], [1.0, 3.0], [2.0, 2.0], [1.0, 3.0]])
    keys = np.array([[10.0, 5.0, 5.0], [5.0, 5.0, 5.0], [5.0, 5.0, 1.0], [5.0, 4.0, 9.0]])
    scores = weighted_score(orient_and_normalize(maxima, [False, False], PoolStats.of(maxima)), (0.5, 0.5))
    assert np.all(scores == 0.5)
    # lexicographic on the design vector: (5,4,9) < (5,5,1) < (5,5,5) < (10,5,5)
    expected = [3, 2, 1, 0]
    assert list(rank_order(scores, keys)) == expected
    perm = np.array([3, 1, 0, 2])
    assert list(perm[rank_order(scores[perm], keys[perm])]) == expected


# ---------------------------------------------------------------- criterion 9
@pytest.mark.criterion(9)
def test_metric_examples():
    y = np.array([1.0, 4.0, 2.0, 8.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(4, y.mean())) == 0.0
    assert r_squared([1, 2, 3], [1, 2, 4]) == 0.5
    assert mean_squared_error([3.0, 1.0], [3.0, 1.0]) == 0.0
    assert mean_squared_error([0, 2], [0, 0]) == 2.0


# --------------------------------------------------------------- criterion 10
@pytest.mark.criterion(10)
def test_repeat_runs_bracket_prediction(note):
    design = PanelDesign(3, (10.0, 20.0, 15.0, 5.0), 1.25)
    # two re-runs of the same design that differ only in mesh density
    runs = [simulate(design, nodes_per_tile=s) for s in (3, 4)]
    table = flatten_runs([(design, r) for r in runs])
    train, test = split(table, 0.8, seed=1)
    model = MLPSurrogate(epochs=DESK_EPOCHS, batch_size=64, dtype="float32", seed=0).fit(train.features, train.targets)
    band = np.sqrt(np.mean((model.predict(test.features) - test.targets) ** 2, axis=0))

    times = runs[0].times
    pred = model.predict(np.array([encode_features(design, t) for t in times]))
    lo = np.minimum(runs[0].values, runs[1].values) - band
    hi = np.maximum(runs[0].values, runs[1].values) + band
    inside = (pred >= lo) & (pred <= hi)
    fraction = inside.mean()
    worst = min(zip(inside.mean(axis=0), CHANNELS))
    note(f"{fraction:.1%} of {inside.size} channel samples inside the repeat-run band widened by test RMSE; "
         f"lowest channel {worst[1]} {worst[0]:.1%}")
    assert fraction >= 0.95
