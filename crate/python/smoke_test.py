"""Smoke test for the smoothdiv Python module.

Build and install with `maturin develop -m crates/python/Cargo.toml`, or put
the compiled shared library on PYTHONPATH as `smoothdiv.so`.
"""

import math
import tempfile
from pathlib import Path

import smoothdiv


def main():
    model = smoothdiv.Model()
    truth = model.truth()
    assert abs(truth.mass() - 1.0) < 1e-12
    assert abs(truth.mean() - 0.4) < 1e-12
    a, b, c = truth.coefficients
    assert abs(a - 4.0) < 1e-12 and abs(b + 5.2) < 1e-12

    # Divergence vanishes on the diagonal and matches the L2 distance at alpha = 1.
    q = smoothdiv.Quadratic.from_constraints(2.0, 0.45)
    assert abs(smoothdiv.d_alpha(truth, truth, 0.5)) < 1e-12
    d = [x - y for x, y in zip(q.coefficients, truth.coefficients)]
    l2 = d[0] ** 2 / 5 + d[0] * d[1] / 2 + (d[1] ** 2 + 2 * d[0] * d[2]) / 3 + d[1] * d[2] + d[2] ** 2
    assert abs(smoothdiv.d_alpha(q, truth, 1.0) - l2) < 1e-10

    data = smoothdiv.sample(truth, 5000, seed=11)
    assert len(data) == 5000 and data.seed == 11
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "sample.csv"
        data.write_csv(str(path))
        again = smoothdiv.Sample.read_csv(str(path))
        assert again.points == data.points

        est = smoothdiv.estimate(model, data)
        assert abs(est.theta_hat - 0.4) < 0.03, est
        assert len(est.profile) == 41

        pop = smoothdiv.estimate(model)
        assert abs(pop.theta_hat - 0.4) < 1e-6 and abs(pop.a_hat - 4.0) < 1e-4

        proj = smoothdiv.project(model, 0.4, data)
        lo, hi = proj.feasible_interval
        assert lo <= proj.a_star <= hi
        assert math.isclose(smoothdiv.r_alpha(proj.density, data, 0.5), proj.objective, rel_tol=1e-9)

        csv = smoothdiv.run_experiment(model, [100, 1000], 2, 5, str(Path(tmp) / "exp"))
        assert csv == (Path(tmp) / "exp" / "sweep.csv").read_text()

    passed, report = smoothdiv.check_model(model)
    assert passed, report
    passed, report = smoothdiv.check_model(smoothdiv.Model(gamma=0.0))
    assert not passed

    try:
        smoothdiv.estimate(model, smoothdiv.Sample([0.5, 1.5]))
    except smoothdiv.SmoothdivError as e:
        print("expected error:", e)
    else:
        raise AssertionError("out-of-support sample accepted")

    print(est.summary(), end="")
    print("smoke test passed")


if __name__ == "__main__":
    main()
