"""Optimality-criteria update for compliance problems."""
from __future__ import annotations

import numpy as np

from vemtopo.errors import OptimizerError

OC_MOVE = 0.2
OC_ETA = 0.5
VOLUME_TOL = 1e-4


def oc_update(x, dc, volume_of, volume_fraction, xmin, xmax=1.0, move=OC_MOVE, eta=OC_ETA,
              max_bisect=200) -> np.ndarray:
    """Heuristic fixed-point update x * (-dc / (lambda dv))^eta with bisection on lambda.

    ``volume_of(x)`` returns ``(volume, gradient)`` for a candidate raw design,
    so filtered and masked volumes are handled by the caller. Multipliers are
    bracketed geometrically; the returned design has volume within
    ``VOLUME_TOL`` of ``volume_fraction`` unless the bound is inactive.
    """
    x = np.asarray(x, dtype=float)
    dc = np.asarray(dc, dtype=float)
    _, dv = volume_of(x)
    dv = np.maximum(np.asarray(dv, dtype=float), 1e-30)
    lo_box = np.maximum(xmin, x - move)
    hi_box = np.minimum(xmax, x + move)
    ratio = np.maximum(-dc, 0.0) / dv

    def candidate(lmid):
        return np.clip(x * (ratio / lmid) ** eta, lo_box, hi_box)

    if volume_of(hi_box)[0] <= volume_fraction + VOLUME_TOL:
        # constraint cannot become active inside the move limits
        return np.where(ratio > 0, hi_box, lo_box)
    if volume_of(lo_box)[0] > volume_fraction + VOLUME_TOL:
        raise OptimizerError(
            "OC bisection bracket failure: lowest admissible design violates the volume bound",
            iterate={"x": x.copy()},
        )
    positive = ratio[ratio > 0]
    if positive.size == 0:
        return lo_box
    l1 = positive.min() * 1e-12
    l2 = positive.max() * 1e12
    for _ in range(max_bisect):
        lmid = np.sqrt(l1 * l2)
        xnew = candidate(lmid)
        vol = volume_of(xnew)[0]
        if abs(vol - volume_fraction) <= 0.1 * VOLUME_TOL:
            return xnew
        if vol > volume_fraction:
            l1 = lmid
        else:
            l2 = lmid
        if l2 / l1 - 1.0 < 1e-15:
            break
    if abs(vol - volume_fraction) > VOLUME_TOL:
        raise OptimizerError(f"OC bisection stalled at volume {vol:.6g}", iterate={"x": x.copy()})
    return xnew
