"""Smoke test for the deep_nitsche extension module."""

import math
import os
import tempfile

import deep_nitsche as dn


def main():
    assert dn.param_count(2, 10, 3) == 701
    assert dn.param_count(3, 20, 3) == 2621
    k1, k2 = dn.kappa(1.0, 10.0)
    assert abs(k1 - 10 / 11) < 1e-15 and abs(k1 + k2 - 1.0) < 1e-15

    flower = dn.Benchmark("flower2d")
    assert flower.betas == (1.0, 10.0)
    omega1, omega2, gamma, boundary = flower.measures()
    assert abs(omega1 - 51 * math.pi / 196) < 1e-12
    assert abs(omega1 + omega2 - 4.0) < 1e-12
    est, se = flower.hit_or_miss("inner", 200_000, 1)
    assert abs(est - omega1) < 4 * se, (est, se)
    assert flower.region([0.0, 0.0]) == "inner"
    value, grad = flower.exact("inner", [0.3, 0.1])
    assert abs(value - math.exp(0.3**2 + 0.1**2)) < 1e-14 and len(grad) == 2

    pair = dn.NetworkPair(2, 10, 3, seed=0)
    assert pair.param_count == 2 * 701
    loss = dn.Loss(flower, 1000.0, 5000.0, domain_total=256, n_interface=64, n_boundary=32, seed=3)
    value, grad = loss.value_and_gradient(pair)
    assert abs(value - loss.value(pair)) <= 1e-10 * abs(value)
    assert len(grad) == pair.param_count

    # one finite-difference probe of the gradient
    theta = pair.params()
    i, h = 5, 1e-5
    probe = dn.NetworkPair(2, 10, 3)
    up = list(theta)
    up[i] += h
    probe.set_params(up)
    f_up = loss.value(probe)
    up[i] -= 2 * h
    probe.set_params(up)
    f_down = loss.value(probe)
    fd = (f_up - f_down) / (2 * h)
    assert abs(fd - grad[i]) <= 1e-5 * max(abs(fd), 1.0), (fd, grad[i])

    circle = dn.Benchmark("circle2d", beta1=1.0, beta2=1000.0)
    ok, report = circle.verify()
    assert ok, report

    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "tiny.toml")
        with open(cfg, "w") as f:
            f.write(
                'benchmark = "flower2d"\ngamma_f = 1000.0\ngamma_b = 5000.0\n'
                f'output_dir = "{tmp}/run"\n'
                "[arch]\nwidth = 5\nblocks = 1\n"
                "[plan]\ndomain_total = 128\nn_interface = 32\nn_boundary = 16\n"
                "[schedule]\nepochs = 50\nrecord_every = 10\neval_points = 500\n"
            )
        err, out = dn.run_config(cfg)
        with open(os.path.join(out, "history.csv")) as f:
            rows = f.read().splitlines()
        assert rows[0] == "epoch,loss,rel_l2_error_pct,wall_seconds" and len(rows) == 6
        trained = dn.NetworkPair.load(out)
        again = trained.relative_error(flower, 500, 0)
        assert abs(again - err) < 1e-9 * max(err, 1.0), (again, err)

    try:
        dn.Benchmark("disc")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown benchmark accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
