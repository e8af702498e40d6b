import math

import pytest

import nav3d


def test_action_table():
    assert nav3d.num_actions == 28
    assert nav3d.action_from_index(3) == (0.0, 0.0)
    assert nav3d.action_from_index(10) == (0.2, 0.0)
    assert nav3d.action_from_index(0) == (0.0, -0.9)
    assert nav3d.action_from_index(27) == (0.6, 0.9)
    vs = {nav3d.action_from_index(i) for i in range(28)}
    assert len(vs) == 28
    with pytest.raises(Exception):
        nav3d.action_from_index(28)


def test_reward_terms():
    r = nav3d.compute_reward(2.0, 1.9, 1.0, 1.0, False, False)
    assert r["r_goal"] == pytest.approx(20.0)
    assert r["r_step"] == -5.0
    assert r["total"] == pytest.approx(15.0)

    goal = nav3d.compute_reward(0.35, 0.25, 1.0, 1.0, True, False)
    assert goal["r_goal"] == 500.0

    crash = nav3d.compute_reward(1.0, 1.0, 1.0, 1.0, False, True)
    assert crash["r_collision"] == -500.0


def test_relative_goal():
    rho, phi = nav3d.relative_goal(0.0, 0.0, 0.0, 3.0, 0.0)
    assert rho == pytest.approx(3.0)
    assert phi == pytest.approx(0.0)
    rho, phi = nav3d.relative_goal(0.0, 0.0, math.pi / 2, 0.0, 2.0)
    assert rho == pytest.approx(2.0)
    assert phi == pytest.approx(0.0)


def test_perception_pipeline():
    merged = nav3d.voxel_downsample([[0.01, 0.01, 0.01], [0.04, 0.04, 0.04]], 0.05)
    assert len(merged) == 1
    assert merged[0] == pytest.approx([0.025, 0.025, 0.025])

    cluster = [[0.01 * i, 0.0, 0.0] for i in range(20)]
    kept = nav3d.remove_statistical_outliers(cluster + [[50.0, 50.0, 50.0]], 5, 1.0)
    assert [50.0, 50.0, 50.0] not in kept
    assert len(kept) == 20

    low = nav3d.height_filter([[0, 0, 0.5], [0, 0, 2.0]], 1.35)
    assert low == [[0, 0, 0.5]]

    img = nav3d.costmap_image([[1.0, 0.0, 0.5], [2.0, 0.0, 0.01]])
    assert isinstance(img, bytes) and len(img) == 3600
    values = set(img)
    assert values <= {0, 127, 255}
    assert 0 in values and 255 in values  # one obstacle cell, one free cell


def test_environment_rollout():
    env = nav3d.Environment("desk")
    obs = env.reset("random", 0, 1)
    assert len(obs["frames"]) == 3 * 3600
    assert obs["goal"][0] > 0.0
    assert obs["vel"] == (0.0, 0.0)

    res = env.step(10)  # forward at 0.2 m/s
    assert set(res) >= {"frames", "goal", "vel", "reward", "outcome", "done"}
    assert res["outcome"] in {"running", "goal", "collision", "timeout"}
    x, y, theta = env.pose
    assert (x, y) != (0.0, 0.0) or theta != 0.0  # the robot moved

    # Same seed replays the same episode.
    env2 = nav3d.Environment("desk")
    obs2 = env2.reset("random", 0, 1)
    assert obs2["frames"] == obs["frames"]
    assert env2.step(10)["reward"] == res["reward"]


def test_policy_roundtrip(tmp_path):
    ckpt = tmp_path / "fresh.bin"
    nav3d.init_checkpoint(str(ckpt), "desk", 7)
    policy = nav3d.Policy(str(ckpt))

    env = nav3d.Environment("desk")
    obs = env.reset("coffee", 0, 5)
    a = policy.act(obs)
    assert 0 <= a < nav3d.num_actions

    # Greedy policies are deterministic given the same observation history.
    policy.reset()
    assert policy.act(obs) == a
