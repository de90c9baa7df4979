# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled particle-stepping kernel.

Operation-for-operation twin of ``_pykernel.step_chunk``; compiled with
-ffp-contract=off so results stay bit-identical to the NumPy fallback.
"""
from libc.math cimport sqrt

import numpy as np

BACKEND = "compiled"


def step_chunk(
    double[:, ::1] pos,
    signed char[::1] status,
    double[:, :, ::1] normals,
    double[:, ::1] uniforms,
    long long[::1] births,
    double[:, ::1] birth_dirs,
    long long[::1] bin_idx,
    long long[::1] out_counts,
    long long[::1] in_counts,
    double sigma1,
    double sigma2,
    double r_m,
    double r_s,
    double kill_radius,
    double z,
):
    cdef Py_ssize_t n_steps = normals.shape[0]
    cdef Py_ssize_t cap = pos.shape[0]
    cdef double r_m2 = r_m * r_m
    cdef double kill2 = kill_radius * kill_radius
    cdef double two_rm = 2.0 * r_m
    cdef long long retired = 0
    cdef long long born = 0
    cdef Py_ssize_t cursor = 0
    cdef Py_ssize_t i, j, m, b
    cdef Py_ssize_t k, free_scan
    cdef double sig, nx, ny, nz, r2, r, scale, rf, fr2
    cdef double dx, dy, dz, nrm
    cdef signed char st
    cdef bint crossing, is_in

    for i in range(n_steps):
        b = <Py_ssize_t> bin_idx[i]
        for j in range(cap):
            st = status[j]
            if st == 0:
                continue
            is_in = st == 1
            sig = sigma1 if is_in else sigma2
            nx = pos[j, 0] + sig * normals[i, j, 0]
            ny = pos[j, 1] + sig * normals[i, j, 1]
            nz = pos[j, 2] + sig * normals[i, j, 2]
            r2 = nx * nx + ny * ny + nz * nz
            if is_in:
                crossing = r2 > r_m2
            else:
                crossing = r2 <= r_m2
            fr2 = 0.0
            if not crossing:
                pos[j, 0] = nx
                pos[j, 1] = ny
                pos[j, 2] = nz
                fr2 = r2
            elif uniforms[i, j] < z:
                pos[j, 0] = nx
                pos[j, 1] = ny
                pos[j, 2] = nz
                fr2 = r2
                if is_in:
                    status[j] = 2
                    out_counts[b] += 1
                else:
                    status[j] = 1
                    in_counts[b] += 1
            elif r2 > 0.0:
                r = sqrt(r2)
                scale = (two_rm - r) / r
                pos[j, 0] = nx * scale
                pos[j, 1] = ny * scale
                pos[j, 2] = nz * scale
                rf = two_rm - r
                fr2 = rf * rf
            # (a proposal exactly on the origin keeps the old position)
            if status[j] == 2 and fr2 > kill2:
                status[j] = 0
                pos[j, 0] = 0.0
                pos[j, 1] = 0.0
                pos[j, 2] = 0.0
                retired += 1

        k = <Py_ssize_t> births[i]
        if k > 0:
            free_scan = 0
            for m in range(k):
                while free_scan < cap and status[free_scan] != 0:
                    free_scan += 1
                if free_scan >= cap:
                    raise RuntimeError("particle capacity exceeded; enlarge the slot arrays")
                dx = birth_dirs[cursor, 0]
                dy = birth_dirs[cursor, 1]
                dz = birth_dirs[cursor, 2]
                nrm = sqrt(dx * dx + dy * dy + dz * dz)
                if nrm == 0.0:
                    pos[free_scan, 0] = r_s  # degenerate draw lands on the +x axis
                    pos[free_scan, 1] = 0.0
                    pos[free_scan, 2] = 0.0
                else:
                    scale = r_s / nrm
                    pos[free_scan, 0] = dx * scale
                    pos[free_scan, 1] = dy * scale
                    pos[free_scan, 2] = dz * scale
                status[free_scan] = 1
                born += 1
                cursor += 1

    return int(retired), int(born), int(cursor)
