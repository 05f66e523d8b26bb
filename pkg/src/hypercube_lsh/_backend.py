"""Select the kernel implementation at import time.

The compiled extension is used when it imports; set
``HYPERCUBE_LSH_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _core_py

if os.environ.get("HYPERCUBE_LSH_PURE_PYTHON") == "1":
    core = _core_py
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        core = _core_py

BACKEND = core.BACKEND

philox4x32 = core.philox4x32
counter_normals = core.counter_normals
count_collisions = core.count_collisions
sample_angles = core.sample_angles
fwht = core.fwht
reduce_against = core.reduce_against
