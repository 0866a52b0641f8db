import math

import numpy as np
import pytest

import vpce


def test_render_and_features():
    arena = vpce.open_arena()
    assert arena.width == 6.0 and arena.n_landmarks > 0
    img = vpce.render(arena, 3.0, 3.0, 0.0, width=64, height=48)
    assert img.shape == (48, 64, 3) and img.dtype == np.uint8
    f = vpce.features(img)
    assert f.shape == (vpce.feature_dim(64, 48),)
    assert np.all(np.isfinite(f))
    again = vpce.features(vpce.render(arena, 3.0, 3.0, 0.0, width=64, height=48))
    assert np.array_equal(f, again)


def test_walls_and_exploration():
    walled = vpce.walled_arena()
    assert len(walled.walls) == 2
    opened = walled.without_wall(0)
    assert len(opened.walls) == 1
    back = opened.with_wall((3.0, 1.2), (3.0, 4.8))
    assert len(back.walls) == 2
    assert vpce.Arena.from_json(walled.to_json()).walls == walled.walls
    path = vpce.explore(vpce.open_arena(), n_steps=200, seed=3)
    assert path.shape[1] == 2 and 0 < len(path) <= 200
    assert np.all((path > 0) & (path < 6))


def test_kmeans_metrics_and_ensemble():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-4, 0.3, (30, 3)), rng.normal(4, 0.3, (30, 3))])
    model = vpce.kmeans(X, 2, seed=1)
    labels = np.asarray(model.labels)
    assert len(set(labels[:30])) == 1 and len(set(labels[30:])) == 1
    assert vpce.silhouette(X, labels) > 0.9
    assert vpce.davies_bouldin(X, labels) < 0.2
    assert vpce.calinski_harabasz(X, labels) > 100
    assert all(b <= a for a, b in zip(model.inertia_history, model.inertia_history[1:]))

    ens = vpce.Ensemble(model, X)
    assert len(ens) == 2 and ens.dim == 3
    centre = ens.centers[0]
    raw = ens.activate(centre, raw=True)
    assert raw[0] == 1.0
    direction = np.array([1.0, 0.0, 0.0])
    assert ens.activate(centre + ens.alphas[0] * direction, raw=True)[0] == pytest.approx(math.exp(-0.5), abs=1e-12)
    A = ens.activate(X)
    assert A.shape == (60, 2)
    assert A.min() == 0.0 and A.max() == 1.0


def test_similarity_and_ttest():
    a = np.array([1.0, 2.0, 3.0])
    assert vpce.cosine(a, a) == pytest.approx(1.0)
    assert vpce.pearson(a, -a) == pytest.approx(-1.0)
    assert vpce.euclidean(a, a) == 0.0
    t = vpce.students_t([1, 2, 3, 4, 5], [11, 12, 13, 14, 15])
    assert t["t"] == pytest.approx(-10.0) and t["dof"] == 8.0
    assert t["p"] == pytest.approx(8.4881815276285e-06, rel=1e-9)
    same = vpce.students_t([1, 2, 3], [1, 2, 3])
    assert same["t"] == 0.0 and same["p"] == 1.0


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        vpce.kmeans(np.zeros((3, 2)), 5)
    with pytest.raises(ValueError):
        vpce.cosine([1.0, 2.0], [1.0])
    with pytest.raises(ArithmeticError):
        vpce.cosine([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        vpce.RunConfig.from_json('{"nope": 1}')


def test_small_pipeline(tmp_path):
    cfg = vpce.RunConfig()
    cfg.out = str(tmp_path / "run")
    cfg.n_steps = 30
    cfg.image_size = (32, 24)
    cfg.k = 6
    cfg.eval_k = [3, 6]
    assert "observations" in vpce.simulate(cfg)
    vpce.extract(cfg)
    vpce.cluster(cfg)
    vpce.build(cfg)
    vpce.activate(cfg)
    rows = vpce.eval_clusters(cfg)
    assert [r["k"] for r in rows] == [3, 6]
    ens = vpce.Ensemble.load(tmp_path / "run" / "ensemble")
    assert len(ens) == 6
    assert (tmp_path / "run" / "activations.csv").exists()
