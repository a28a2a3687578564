"""Selects the compiled Hausdorff kernel when available.

Set MIML_NO_EXT=1 to force the NumPy fallback (used by tests and the
benchmark to compare both paths).
"""

import os

from ._hausdorff_np import pairwise_sq_hausdorff as pairwise_sq_hausdorff_np

HAVE_EXT = False
pairwise_sq_hausdorff = pairwise_sq_hausdorff_np

if not os.environ.get("MIML_NO_EXT"):
    try:
        from ._hausdorff_cy import pairwise_sq_hausdorff as _cy_impl

        pairwise_sq_hausdorff = _cy_impl
        HAVE_EXT = True
    except ImportError:
        pass

__all__ = ["pairwise_sq_hausdorff", "pairwise_sq_hausdorff_np", "HAVE_EXT"]
