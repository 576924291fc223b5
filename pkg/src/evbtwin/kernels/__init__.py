"""Hot numeric kernels with selectable backend.

Default backend is numba (JIT-compiled loops). Set ``TWIN_NUMBA=0`` to force
the pure-NumPy vectorized fallback; the flag is read once at import. Both
backends implement the same functions with identical semantics —
``benchmarks/bench_kernels.py`` compares them head to head.
"""

import os

if os.environ.get("TWIN_NUMBA", "1") == "0":
    from . import numpy_impl as _impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:
        from . import numpy_impl as _impl

BACKEND = _impl.NAME

fk_frames = _impl.fk_frames
fk_frames_batch = _impl.fk_frames_batch
seg_seg_dist = _impl.seg_seg_dist
seg_box_sdf = _impl.seg_box_sdf
seg_cyl_sdf = _impl.seg_cyl_sdf
capsules_vs_boxes = _impl.capsules_vs_boxes
capsules_vs_cylinders = _impl.capsules_vs_cylinders
run_tracking_cycles = _impl.run_tracking_cycles

__all__ = [
    "BACKEND",
    "fk_frames",
    "fk_frames_batch",
    "seg_seg_dist",
    "seg_box_sdf",
    "seg_cyl_sdf",
    "capsules_vs_boxes",
    "capsules_vs_cylinders",
    "run_tracking_cycles",
]
