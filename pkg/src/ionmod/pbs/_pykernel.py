"""NumPy fallback implementation of the particle-stepping kernel.

Kept operation-for-operation identical to the compiled kernel in
``_ckernel.pyx`` (same expressions, same evaluation order, no fused
multiply-adds there), so both backends produce bit-identical trajectories
from the same pre-drawn random arrays.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def step_chunk(
    pos: np.ndarray,        # (cap, 3) float64, mutated in place
    status: np.ndarray,     # (cap,) int8: 0 dead, 1 inside, 2 outside
    normals: np.ndarray,    # (n_steps, cap, 3) standard normals
    uniforms: np.ndarray,   # (n_steps, cap) uniforms for membrane draws
    births: np.ndarray,     # (n_steps,) int64 new particles per step
    birth_dirs: np.ndarray, # (sum(births), 3) standard normals
    bin_idx: np.ndarray,    # (n_steps,) int64 tally bin per step
    out_counts: np.ndarray, # (n_bins,) int64, mutated
    in_counts: np.ndarray,  # (n_bins,) int64, mutated
    sigma1: float,
    sigma2: float,
    r_m: float,
    r_s: float,
    kill_radius: float,
    z: float,
) -> tuple[int, int, int]:
    """Advance all particles by the chunk of steps; returns
    (n_retired, n_born, birth_dirs_consumed)."""
    x, y, w = pos[:, 0], pos[:, 1], pos[:, 2]
    r_m2 = r_m * r_m
    kill2 = kill_radius * kill_radius
    two_rm = 2.0 * r_m
    n_steps = normals.shape[0]
    retired = 0
    born = 0
    cursor = 0

    for i in range(n_steps):
        g = normals[i]
        u = uniforms[i]
        inside = status == 1
        outside = status == 2
        alive = inside | outside
        sig = np.where(inside, sigma1, sigma2)
        nx = x + sig * g[:, 0]
        ny = y + sig * g[:, 1]
        nz = w + sig * g[:, 2]
        r2 = nx * nx + ny * ny + nz * nz

        cross_out = inside & (r2 > r_m2)
        cross_in = outside & (r2 <= r_m2)
        crossing = cross_out | cross_in
        passing = crossing & (u < z)
        move = passing | (alive & ~crossing)

        x[move] = nx[move]
        y[move] = ny[move]
        w[move] = nz[move]
        pass_out = passing & cross_out
        pass_in = passing & cross_in
        status[pass_out] = 2
        status[pass_in] = 1
        b = int(bin_idx[i])
        out_counts[b] += int(np.count_nonzero(pass_out))
        in_counts[b] += int(np.count_nonzero(pass_in))

        # Specular radial reflection r -> 2 r_m - r along the same ray; a
        # proposal landing exactly on the origin keeps its old position.
        refl = crossing & ~passing & (r2 > 0.0)
        if np.any(refl):
            r = np.sqrt(r2[refl])
            scale = (two_rm - r) / r
            x[refl] = nx[refl] * scale
            y[refl] = ny[refl] * scale
            w[refl] = nz[refl] * scale

        # retirement on the final radius (reflected particles end at 2 r_m - r)
        fr2 = np.where(move, r2, 0.0)
        if np.any(refl):
            rr = np.sqrt(r2[refl])
            fr2[refl] = (two_rm - rr) * (two_rm - rr)
        retire = (status == 2) & (fr2 > kill2)
        n_ret = int(np.count_nonzero(retire))
        if n_ret:
            status[retire] = 0
            x[retire] = 0.0
            y[retire] = 0.0
            w[retire] = 0.0
            retired += n_ret

        k = int(births[i])
        if k:
            free = np.flatnonzero(status == 0)[:k]
            if free.size < k:
                raise RuntimeError("particle capacity exceeded; enlarge the slot arrays")
            d = birth_dirs[cursor : cursor + k]
            dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]
            nrm = np.sqrt(dx * dx + dy * dy + dz * dz)
            zero = nrm == 0.0
            nrm[zero] = 1.0
            scale = r_s / nrm
            bx = dx * scale
            by = dy * scale
            bz = dz * scale
            bx[zero] = r_s  # degenerate draw lands on the +x axis
            by[zero] = 0.0
            bz[zero] = 0.0
            x[free] = bx
            y[free] = by
            w[free] = bz
            status[free] = 1
            born += k
            cursor += k

    return retired, born, cursor
