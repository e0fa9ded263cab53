"""Smoke test for the pulsetone extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/pulsetone-*.whl
"""

import math

import pulsetone as pt


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    p = pt.Pattern("1001 1001")
    assert str(p) == "10011001"
    assert p.n_bits == 8 and p.set_bits == 4
    assert str(p.canonical()) == "00110011"
    assert p.distance_set() == [3, 1, 3, 1]
    assert pt.Pattern.from_distances([3, 1, 3, 1]) == p

    freqs, amps = pt.tone_spectrum(p, 10.0)
    powers = [abs(c) ** 2 for c in amps]
    live = [f for f, w in zip(freqs, powers) if w > 1e-9 * max(powers)]
    assert live == [0.0, 2.5, 7.5], live

    _, filtered = pt.tone_spectrum("10011001", 10.0, combs=[(1 / 3, 1.0)])
    assert abs(filtered[6]) ** 2 < 1e-20
    assert close(abs(filtered[2]) ** 2, 24.0)
    assert abs(pt.comb_response(7.5, 1 / 3)) < 1e-12

    classes = pt.enumerate_unique(8)
    assert any(c["canonical"] == "00110011" for c in classes)
    lower, upper = pt.count_bounds(8)
    assert lower == 6 and lower <= len(classes) <= upper

    delay, value, degenerate = pt.optimize_delay(p, 10.0, "max-separation", 2.5, 7.5)
    assert close(delay, 1 / 15), delay
    assert not degenerate

    times, volts = pt.render(p, 10.0, 5.0, v_c=2.0)
    grid = [0.025 * k for k in range(1, 441)]
    power = pt.lomb_scargle(times, volts, grid)
    center, peak, fwhm = pt.tone_metrics(grid, power, 2.5, 1.25)
    assert close(center, 2.5, 1e-6) and 0.1 < fwhm < 0.3

    ev = pt.event_times(p, 10.0, 5.0)
    sim = pt.simulate_csr(p, "symmetric", 10.0, 5.0)
    offset = sim[0] - ev[0]
    assert len(sim) == len(ev)
    assert all(math.isclose(a - b, offset, abs_tol=1e-12) for a, b in zip(sim, ev))

    report = pt.check_timing(8, "symmetric", 10.0)
    assert report["total_skew"] == 0.0 and report["ok"]
    assert pt.splitter_count("binary-tree", 8) == 7
    assert pt.splitter_count("symmetric", 8) == 4

    for bad in (lambda: pt.Pattern("10x1"), lambda: pt.tone_spectrum(p, -1.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        pt.comb_response(1.0, 0.1, 1.0, "feedback")
    except RuntimeError:
        pass
    else:
        raise AssertionError("expected RuntimeError")

    print("pulsetone smoke test passed")


if __name__ == "__main__":
    main()
