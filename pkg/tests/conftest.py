import numpy as np
import pytest

from idt import SymbolizedTransition, WindowMetrics


def assert_window_identities(wm: WindowMetrics):
    """Structural invariants every window must satisfy."""
    assert -1e-12 <= wm.P <= 0.5 + 1e-12, f"P={wm.P!r} outside [0, 1/2]"
    assert abs(wm.H_Snext - (wm.MI + wm.Hf)) < 1e-9
    assert abs(wm.H_SA - (wm.MI + wm.Hb)) < 1e-9
    assert wm.dH == wm.Hf - wm.Hb
    assert wm.MI >= 0.0 and wm.Hf >= 0.0 and wm.Hb >= 0.0
    assert wm.C >= 0.0


def symbol_stream(s, a, s_next, rewards=None, t0=0):
    """Build a symbolized stream from per-step group-symbol tuples."""
    out = []
    for i, (ss, aa, nn) in enumerate(zip(s, a, s_next)):
        ss = ss if isinstance(ss, tuple) else (int(ss),)
        aa = aa if isinstance(aa, tuple) else (int(aa),)
        nn = nn if isinstance(nn, tuple) else (int(nn),)
        r = None if rewards is None else rewards[i]
        out.append(SymbolizedTransition(t=t0 + i, s_sym=ss, a_sym=aa, s_next_sym=nn, reward=r))
    return out


def copy_stream(n, n_symbols=4, seed=0):
    """S uniform, A constant, S' = S: the saturation case."""
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, n_symbols, size=n)
    return symbol_stream(xs, np.zeros(n, dtype=int), xs)


def iid_stream(n, n_symbols=3, seed=0):
    """Independent uniform S, A, S'."""
    rng = np.random.default_rng(seed)
    return symbol_stream(
        rng.integers(0, n_symbols, size=n),
        rng.integers(0, n_symbols, size=n),
        rng.integers(0, n_symbols, size=n),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
