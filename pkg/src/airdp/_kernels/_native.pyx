# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled round-loop kernels.

Mirrors ``airdp._kernels._fallback`` exactly: same entry points, same draw
protocol (documented there), same elementwise arithmetic.  Random numbers
come from the caller's ``numpy.random.Generator`` streams through numpy's
own C distribution routines, so both backends consume bitwise-identical
random sequences; elementwise results (the fading chain) match bitwise and
reductions match to floating-point reassociation error.
"""
import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport INFINITY, expm1, fmax, fmin, hypot, log1p, sqrt
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (random_standard_normal,
                                           random_standard_uniform)

cnp.import_array()

__all__ = ["fading_chain", "mc_estimator_rounds", "train_quadratic"]


cdef bitgen_t* _bitgen(object rng) except NULL:
    """Raw bit-generator state behind a numpy Generator."""
    capsule = rng.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("stream does not expose a BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


def fading_chain(scatter, double rician_factor, double time_correlation,
                 Py_ssize_t steps, rng):
    """Advance the scatter chain ``steps`` rounds; returns
    (gains matrix of shape (steps, K), final scatter state)."""
    if rician_factor < 0:
        raise ValueError("rician_factor must be >= 0")
    if not 0.0 <= time_correlation < 1.0:
        raise ValueError("time_correlation must be in [0, 1)")
    s = np.asarray(scatter, dtype=complex)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("scatter must be a non-empty 1-d vector")
    cdef double[::1] s_re = np.ascontiguousarray(s.real)
    cdef double[::1] s_im = np.ascontiguousarray(s.imag)
    cdef Py_ssize_t num_users = s_re.shape[0]
    gains_arr = np.empty((steps, num_users))
    cdef double[:, ::1] gains = gains_arr
    cdef bitgen_t* bg = _bitgen(rng)
    cdef double rho = time_correlation
    cdef double innov_scale = sqrt(0.5)
    cdef double drift = sqrt(1.0 - rho * rho)
    cdef double los = sqrt(rician_factor / (rician_factor + 1.0))
    cdef double sc = sqrt(1.0 / (rician_factor + 1.0))
    cdef Py_ssize_t t, k
    cdef double in_re, in_im
    with nogil:
        for t in range(steps):
            for k in range(num_users):
                in_re = innov_scale * random_standard_normal(bg)
                in_im = innov_scale * random_standard_normal(bg)
                s_re[k] = rho * s_re[k] + drift * in_re
                s_im[k] = rho * s_im[k] + drift * in_im
                gains[t, k] = hypot(los + sc * s_re[k], sc * s_im[k])
    return gains_arr, np.asarray(s_re) + 1j * np.asarray(s_im)


def mc_estimator_rounds(gradients, probs, double noise_std,
                        double channel_noise_var, Py_ssize_t rounds, streams):
    """Monte Carlo moments of both gradient estimators; see the fallback
    docstring for the contract and the returned accumulator dict."""
    g_arr = np.ascontiguousarray(gradients, dtype=float)
    p_arr = np.ascontiguousarray(probs, dtype=float)
    if g_arr.ndim != 2 or p_arr.ndim != 1 or g_arr.shape[0] != p_arr.shape[0]:
        raise ValueError("gradients must be (users, dim) matching probs")
    cdef double[:, ::1] g = g_arr
    cdef double[::1] p = p_arr
    cdef Py_ssize_t num_users = g.shape[0]
    cdef Py_ssize_t dim = g.shape[1]

    cdef double mu = 0.0
    cdef double log_all_out = 0.0
    cdef Py_ssize_t k
    for k in range(num_users):
        mu += p[k]
        log_all_out += log1p(-p[k])
    if mu <= 0:
        raise ValueError("expected participant count must be > 0")
    cdef double zeta = -expm1(log_all_out)

    cdef bitgen_t* part_bg = _bitgen(streams[0])
    cdef bitgen_t* noise_bg = _bitgen(streams[2])
    cdef bitgen_t* recv_bg = _bitgen(streams[3])

    coord_sum_u_arr = np.zeros(dim)
    coord_sq_u_arr = np.zeros(dim)
    coord_sum_k_arr = np.zeros(dim)
    coord_sq_k_arr = np.zeros(dim)
    counts_arr = np.empty(rounds, dtype=np.int64)
    y_arr = np.empty(dim)
    sel_arr = np.empty(num_users, dtype=np.uint8)
    cdef double[::1] coord_sum_u = coord_sum_u_arr
    cdef double[::1] coord_sq_u = coord_sq_u_arr
    cdef double[::1] coord_sum_k = coord_sum_k_arr
    cdef double[::1] coord_sq_k = coord_sq_k_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double[::1] y = y_arr
    cdef cnp.uint8_t[::1] sel = sel_arr

    cdef double normsq_u = 0.0, normsq_sq_u = 0.0
    cdef double normsq_k = 0.0, normsq_sq_k = 0.0
    cdef double sqrt_n0 = sqrt(channel_noise_var)
    cdef Py_ssize_t t, j, m
    cdef double est, sq, denom
    with nogil:
        for t in range(rounds):
            m = 0
            for k in range(num_users):
                if random_standard_uniform(part_bg) < p[k]:
                    sel[k] = 1
                    m += 1
                else:
                    sel[k] = 0
            counts[t] = m
            for j in range(dim):
                y[j] = 0.0
            for k in range(num_users):
                if sel[k]:
                    for j in range(dim):
                        y[j] += g[k, j]
            if m > 0:
                for k in range(num_users):
                    if sel[k]:
                        for j in range(dim):
                            y[j] += noise_std * random_standard_normal(noise_bg)
            if channel_noise_var > 0.0:
                for j in range(dim):
                    y[j] += sqrt_n0 * random_standard_normal(recv_bg)
            sq = 0.0
            for j in range(dim):
                est = y[j] / mu
                coord_sum_u[j] += est
                coord_sq_u[j] += est * est
                sq += est * est
            normsq_u += sq
            normsq_sq_u += sq * sq
            if m > 0:
                denom = zeta * m
                sq = 0.0
                for j in range(dim):
                    est = y[j] / denom
                    coord_sum_k[j] += est
                    coord_sq_k[j] += est * est
                    sq += est * est
                normsq_k += sq
                normsq_sq_k += sq * sq
    return {
        "coord_sum_unknown": coord_sum_u_arr,
        "coord_sq_sum_unknown": coord_sq_u_arr,
        "coord_sum_known": coord_sum_k_arr,
        "coord_sq_sum_known": coord_sq_k_arr,
        "normsq_sum_unknown": normsq_u,
        "normsq_sq_sum_unknown": normsq_sq_u,
        "normsq_sum_known": normsq_k,
        "normsq_sq_sum_known": normsq_sq_k,
        "counts": counts_arr,
    }


def train_quadratic(curv, shard_means, w0, w_star, double f_star,
                    probs_matrix, double gain_threshold, double lipschitz,
                    double noise_std, double channel_noise_var,
                    double rician_factor, double time_correlation,
                    scatter0, double power, bint estimator_known,
                    eta, streams):
    """Full training loop for the diagonal quadratic task; see the fallback
    docstring for the contract."""
    curv_arr = np.ascontiguousarray(curv, dtype=float)
    sm_arr = np.ascontiguousarray(shard_means, dtype=float)
    eta_arr = np.ascontiguousarray(eta, dtype=float)
    w_arr = np.array(w0, dtype=float, copy=True)
    ws_arr = np.ascontiguousarray(w_star, dtype=float)
    s = np.asarray(scatter0, dtype=complex)
    cdef double[::1] cv = curv_arr
    cdef double[:, ::1] sm = sm_arr
    cdef double[::1] eta_v = eta_arr
    cdef double[::1] w = w_arr
    cdef double[::1] ws = ws_arr
    cdef double[::1] s_re = np.ascontiguousarray(s.real)
    cdef double[::1] s_im = np.ascontiguousarray(s.imag)
    cdef Py_ssize_t num_users = sm.shape[0]
    cdef Py_ssize_t dim = cv.shape[0]
    cdef Py_ssize_t rounds = eta_v.shape[0]

    cdef bint has_matrix = probs_matrix is not None
    if has_matrix:
        pm_arr = np.ascontiguousarray(probs_matrix, dtype=float)
    else:
        pm_arr = np.empty((0, num_users))
    cdef double[:, ::1] pm = pm_arr

    cdef bitgen_t* part_bg = _bitgen(streams[0])
    cdef bitgen_t* fade_bg = _bitgen(streams[1])
    cdef bitgen_t* noise_bg = _bitgen(streams[2])
    cdef bitgen_t* recv_bg = _bitgen(streams[3])

    loss_arr = np.empty(rounds)
    gap_arr = np.empty(rounds)
    counts_arr = np.empty(rounds, dtype=np.int64)
    mu_arr = np.empty(rounds)
    maxp_arr = np.empty(rounds)
    effn_arr = np.empty(rounds)
    cdef double[::1] loss = loss_arr
    cdef double[::1] gap = gap_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double[::1] mu_out = mu_arr
    cdef double[::1] maxp = maxp_arr
    cdef double[::1] effn = effn_arr

    gains_arr = np.empty(num_users)
    p_t_arr = np.empty(num_users)
    sel_arr = np.empty(num_users, dtype=np.uint8)
    y_arr = np.empty(dim)
    gbuf_arr = np.empty(dim)
    cdef double[::1] gains = gains_arr
    cdef double[::1] p_t = p_t_arr
    cdef cnp.uint8_t[::1] sel = sel_arr
    cdef double[::1] y = y_arr
    cdef double[::1] gbuf = gbuf_arr

    cdef double rho = time_correlation
    cdef double innov_scale = sqrt(0.5)
    cdef double drift = sqrt(1.0 - rho * rho)
    cdef double los = sqrt(rician_factor / (rician_factor + 1.0))
    cdef double sc = sqrt(1.0 / (rician_factor + 1.0))
    cdef double sigma2 = noise_std * noise_std
    cdef double sqrt_n0 = sqrt(channel_noise_var)
    cdef double sqrt_power = sqrt(power)

    cdef Py_ssize_t t, k, j, m
    cdef double in_re, in_im, mu_t, maxp_t, log_all_out, zeta_t
    cdef double sq, scale, clipped_sq, energy, alpha, h, ha, gain_alpha_sq
    cdef double norm, ghat, diff, acc
    with nogil:
        for t in range(rounds):
            for k in range(num_users):
                in_re = innov_scale * random_standard_normal(fade_bg)
                in_im = innov_scale * random_standard_normal(fade_bg)
                s_re[k] = rho * s_re[k] + drift * in_re
                s_im[k] = rho * s_im[k] + drift * in_im
                gains[k] = hypot(los + sc * s_re[k], sc * s_im[k])
            mu_t = 0.0
            maxp_t = 0.0
            log_all_out = 0.0
            for k in range(num_users):
                if has_matrix:
                    p_t[k] = pm[t, k]
                else:
                    p_t[k] = fmin(1.0, gains[k] / gain_threshold)
                mu_t += p_t[k]
                maxp_t = fmax(maxp_t, p_t[k])
                log_all_out += log1p(-p_t[k])
            zeta_t = -expm1(log_all_out)
            mu_out[t] = mu_t
            maxp[t] = maxp_t

            m = 0
            for k in range(num_users):
                if random_standard_uniform(part_bg) < p_t[k]:
                    sel[k] = 1
                    m += 1
                else:
                    sel[k] = 0
            counts[t] = m

            for j in range(dim):
                y[j] = 0.0
            gain_alpha_sq = 0.0
            for k in range(num_users):
                if not sel[k]:
                    continue
                sq = 0.0
                for j in range(dim):
                    gbuf[j] = w[j] * cv[j] - sm[k, j]
                    sq += gbuf[j] * gbuf[j]
                scale = fmin(1.0, lipschitz / sqrt(sq))
                clipped_sq = sq * scale * scale
                h = gains[k]
                if power == 0.0:
                    alpha = 0.0
                else:
                    energy = clipped_sq + dim * sigma2
                    alpha = fmin(1.0 / h, sqrt_power / sqrt(energy))
                for j in range(dim):
                    y[j] += h * (alpha * (gbuf[j] * scale
                                          + noise_std
                                          * random_standard_normal(noise_bg)))
                ha = h * alpha
                gain_alpha_sq += ha * ha
            if channel_noise_var > 0.0:
                for j in range(dim):
                    y[j] += sqrt_n0 * random_standard_normal(recv_bg)
            effn[t] = sigma2 * gain_alpha_sq + channel_noise_var

            if estimator_known:
                norm = zeta_t * m
            else:
                norm = mu_t
            if norm > 0.0:
                for j in range(dim):
                    ghat = y[j] / norm
                    w[j] = w[j] - eta_v[t] * ghat
            acc = 0.0
            for j in range(dim):
                diff = w[j] - ws[j]
                acc += (cv[j] * diff) * diff
            gap[t] = 0.5 * acc
            loss[t] = gap[t] + f_star
    return (w_arr, loss_arr, gap_arr, counts_arr, mu_arr, maxp_arr, effn_arr)
