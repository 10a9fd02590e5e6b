import numpy as np
import pytest

from symon.sympgroup import GroupContext, scan_entries


@pytest.fixture(scope="session")
def gsp4_f3():
    """Full brute-force enumeration of the 4x4 similitudes over F_3.

    One 3^16-candidate scan per test session; returns (entries, multipliers)
    with entries shaped (103680, 4, 4) in canonical scan order.
    """
    parts_e, parts_l = [], []
    for a, lam in scan_entries(GroupContext.of(2, 3)):
        parts_e.append(a)
        parts_l.append(lam)
    return np.concatenate(parts_e), np.concatenate(parts_l)
