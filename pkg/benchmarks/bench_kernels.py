"""Head-to-head benchmark of the numba and pure-numpy kernel backends.

Run from the repo root:  python benchmarks/bench_kernels.py
(Selecting a backend for the package itself is done via TWIN_NUMBA=0; this
script imports both explicitly and times the same workloads.)
"""

import time
from importlib import resources

import numpy as np

from evbtwin.kernels import numba_impl, numpy_impl
from evbtwin.kinematics import load_robot

ROBOT = str(resources.files("evbtwin") / "fixtures" / "kr10_track.twin.json")


def bench(fn, *args, repeat=5):
    fn(*args)                      # warm (JIT compile / cache touch)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    model = load_robot(ROBOT)
    rng = np.random.default_rng(0)

    n_states = 20_000
    Q = rng.uniform(model.limits_lo, model.limits_hi, size=(n_states, 7))

    n_rows = 200_000
    A = rng.uniform(-1, 1, (n_rows, 3))
    B = A + rng.uniform(-0.5, 0.5, (n_rows, 3))
    RAD = rng.uniform(0.02, 0.1, n_rows)
    n_boxes = 16
    box_c = rng.uniform(-1, 1, (n_boxes, 3))
    box_rt = np.broadcast_to(np.eye(3), (n_boxes, 3, 3)).copy()
    box_h = rng.uniform(0.05, 0.5, (n_boxes, 3))
    cyl_c = rng.uniform(-1, 1, (n_boxes, 3))
    cyl_rt = box_rt.copy()
    cyl_r = rng.uniform(0.05, 0.3, n_boxes)
    cyl_hl = rng.uniform(0.1, 0.5, n_boxes)

    n_cycles = 50_000
    desired = np.cumsum(rng.uniform(-1e-3, 1e-3, (n_cycles, 7)), axis=0) \
        + (model.limits_lo + model.limits_hi) / 2

    cases = [
        (f"fk_frames_batch        ({n_states} states)",
         lambda impl: impl.fk_frames_batch(Q, model.joint_pos, model.joint_rot,
                                           model.joint_axes, model.joint_types,
                                           model.flange_pos, model.flange_rot)),
        (f"capsules_vs_boxes      ({n_rows} x {n_boxes})",
         lambda impl: impl.capsules_vs_boxes(A, B, RAD, box_c, box_rt, box_h)),
        (f"capsules_vs_cylinders  ({n_rows} x {n_boxes})",
         lambda impl: impl.capsules_vs_cylinders(A, B, RAD, cyl_c, cyl_rt,
                                                 cyl_r, cyl_hl)),
        (f"seg_seg_dist           ({n_rows} pairs)",
         lambda impl: impl.seg_seg_dist(A, B, B, A)),
        (f"run_tracking_cycles    ({n_cycles} cycles)",
         lambda impl: impl.run_tracking_cycles(
             desired, desired[0].copy(), np.zeros(7),
             model.limits_lo, model.limits_hi)),
    ]

    print(f"{'kernel':44s} {'numba':>10s} {'numpy':>10s} {'speedup':>9s}")
    for name, call in cases:
        t_nb = bench(lambda: call(numba_impl))
        t_np = bench(lambda: call(numpy_impl))
        print(f"{name:44s} {t_nb * 1e3:9.1f}ms {t_np * 1e3:9.1f}ms "
              f"{t_np / t_nb:8.1f}x")

    # agreement spot check between the backends
    ca = numba_impl.capsules_vs_boxes(A[:2000], B[:2000], RAD[:2000],
                                      box_c, box_rt, box_h)
    cb = numpy_impl.capsules_vs_boxes(A[:2000], B[:2000], RAD[:2000],
                                      box_c, box_rt, box_h)
    print(f"\nbackend agreement (capsules_vs_boxes, lower-bound rows may "
          f"differ): max |delta| on colliding rows = "
          f"{np.max(np.abs(np.minimum(ca, 0) - np.minimum(cb, 0))):.2e}")


if __name__ == "__main__":
    main()
