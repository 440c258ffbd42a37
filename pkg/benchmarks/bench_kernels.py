"""Time the numba and pure-numpy ensemble kernels on the Gaussian
double-rephasing workload (41 x 281 trajectories, 13 us).

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from echoform import kernels
from echoform._backend import USE_NUMBA
from echoform.grids import build_spatial_profile, build_spectral_grid
from echoform.presets import fig3_spec
from echoform.sequence import build_timeline


def workload():
    st = build_timeline(fig3_spec(1.0)).compile()
    sg = build_spectral_grid()
    sp = build_spatial_profile()
    return (st.dur, st.rabi, st.phase, st.follow, st.rec, st.n_rec,
            sg.detunings, sg.weights, sp.amplitudes, 0.0)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    work = workload()
    n_traj = len(work[6]) * len(work[8])
    t_np, out_np = best_of(kernels.evolve_groups_numpy, work, args.repeat)
    print(f"numpy : {t_np:8.3f} s  ({n_traj / t_np:10.0f} trajectories/s)")
    if not USE_NUMBA:
        print("numba : unavailable (not installed or ECHOFORM_NUMBA=0)")
        return
    kernels.evolve_groups_numba(*work)  # compile outside the timing
    t_nb, out_nb = best_of(kernels.evolve_groups_numba, work, args.repeat)
    print(f"numba : {t_nb:8.3f} s  ({n_traj / t_nb:10.0f} trajectories/s)")
    print(f"speed-up {t_np / t_nb:.1f}x")
    dev = max(float(np.max(np.abs(a - b))) for a, b in zip(out_np, out_nb))
    print(f"max |numba - numpy| = {dev:.2e}")


if __name__ == "__main__":
    main()
