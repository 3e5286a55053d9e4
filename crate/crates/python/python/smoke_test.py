"""Smoke test for the qdlab_py extension module.

Build and run:
    cargo build -p qdlab-py --release --features extension-module
    cp target/release/libqdlab_py.so qdlab_py.so   # from the workspace root
    PYTHONPATH=. python3 crates/python/python/smoke_test.py
or `maturin develop -m crates/python/Cargo.toml` and run the script directly.
"""

import math

import qdlab_py as q


def main():
    assert q.param_count(1, [], 1) == 2
    assert q.reward_value(0.0, 0.1) == 1.0
    assert q.reward_value(0.05, 0.1) == 0.5
    assert q.reward_value(0.2, 0.1) == 0.0

    assert q.novelty((0.0, 0.0), []) == 0.0
    assert math.isclose(q.novelty((0.0, 0.0), [(3.0, 4.0)], k=15), 5.0)
    assert q.coverage([(0.0, 0.0), (0.01, 0.01)], ((-1.0, -1.0), (1.0, 1.0))) == 1 / 2500
    assert q.pareto_front([(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)]) == [0, 1, 2]

    for name, n in [("curling", 107), ("hardmaze", 72), ("redundant_arm", 255)]:
        env = q.Env(name)
        assert env.param_count == n, (name, env.param_count)
        (x, y), reward, area = env.run_episode([0.0] * n)
        (x0, y0), (x1, y1) = env.bounds
        assert x0 <= x <= x1 and y0 <= y <= y1
        assert 0.0 <= reward <= 1.0
        assert env.reward_areas and not env.without_rewards().reward_areas

    try:
        q.Env("curling").run_episode([0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("wrong genome length accepted")

    rows = q.run("serene", q.Env("redundant_arm"), 3000, seed=1)
    assert rows[-1]["evaluations"] >= 3000
    assert rows[-1]["split_exploration"] + sum(rows[-1]["split_areas"].values()) == rows[-1]["evaluations"]
    print("ok:", len(rows), "rows, final coverage", round(rows[-1]["coverage"], 3))


if __name__ == "__main__":
    main()
