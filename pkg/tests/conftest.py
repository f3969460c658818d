import itertools

import numpy as np
import pytest

from combo_kernel_lab.core import EventRecord, canonicalize


def random_combinations(rng, n, n_drugs, max_order=5, min_order=1):
    out = []
    for _ in range(n):
        k = int(rng.integers(min_order, max_order + 1))
        out.append(canonicalize(rng.choice(n_drugs, size=k, replace=False).tolist()))
    return out


def random_sds(rng, n_drugs, psd=False):
    if psd:
        x = rng.random((n_drugs, 4))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        s = x @ x.T
    else:
        s = rng.random((n_drugs, n_drugs))
        s = np.triu(s, 1)
        s = s + s.T
    np.fill_diagonal(s, 1.0)
    return s


def events_from(spec):
    """``spec`` is a list of ``(drugs, adr)``; ids are E0, E1, ..."""
    return [EventRecord(f"E{i}", canonicalize(d), bool(a)) for i, (d, a) in enumerate(spec)]


def quadrant_event_log(n_mplus=1200, n_mzero_sig=1200, n_mzero_weak=200, n_nzero=1200, n_nminus=2500):
    """Event log whose mined quadrants hold at least the requested sizes.

    Each combination is a distinct 3-subset of 40 drugs.
    * M+ combos appear in 1 to 3 case events only.
    * Significant M0 combos: 3 case events and 1 control event.
    * Weak M0 combos: 1 case and 2 controls. OR > 1 but Fisher p is large.
    * N0 combos: 1 case and 20 controls.
    * N- combos: 1 or 2 control events only.
    """
    combos = itertools.combinations(range(40), 3)
    spec = []
    for i in range(n_mplus):
        spec += [(next(combos), 1)] * (1 + i % 3)
    for _ in range(n_mzero_sig):
        c = next(combos)
        spec += [(c, 1)] * 3 + [(c, 0)]
    for _ in range(n_mzero_weak):
        c = next(combos)
        spec += [(c, 1)] + [(c, 0)] * 2
    for _ in range(n_nzero):
        c = next(combos)
        spec += [(c, 1)] + [(c, 0)] * 20
    for i in range(n_nminus):
        spec += [(next(combos), 0)] * (1 + i % 2)
    return events_from(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
