"""Numba kernels for orbit iteration and cocycle accumulation.

A composed word is encoded as parallel arrays over factors, applied first to
last: ``kinds[f] == 0`` is a linear factor with matrix ``mats[f]``;
``kinds[f] == 1`` is a shear with strength ``ts[f]``, phase ``phases[f]`` and
translation direction ``bdirs[f]``.  All kernels avoid fastmath so results
are bitwise reproducible for a fixed input.
"""
import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_NO_CONVERGE = 2

_TWO_PI = 2.0 * np.pi
_HUGE = 1e300
_TINY = 1e-300


@njit(cache=True, nogil=True)
def _apply_word(kinds, mats, ts, phases, bdirs, p):
    d = p.shape[0]
    out = p.copy()
    for f in range(kinds.shape[0]):
        if kinds[f] == 0:
            m = mats[f]
            tmp = np.zeros(d)
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += m[i, j] * out[j]
                tmp[i] = acc
            out = tmp
        else:
            s = ts[f] * np.sin(_TWO_PI * (out[0] + phases[f]))
            for i in range(d):
                out[i] = out[i] + s * bdirs[f, i]
        for i in range(d):
            out[i] = out[i] - np.floor(out[i])
            if out[i] >= 1.0 - 1e-15:
                out[i] = 0.0
    return out


@njit(cache=True, nogil=True)
def _apply_word_lift(kinds, mats, ts, phases, bdirs, p):
    # same word on the universal cover: no reduction mod 1
    d = p.shape[0]
    out = p.copy()
    for f in range(kinds.shape[0]):
        if kinds[f] == 0:
            m = mats[f]
            tmp = np.zeros(d)
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += m[i, j] * out[j]
                tmp[i] = acc
            out = tmp
        else:
            s = ts[f] * np.sin(_TWO_PI * (out[0] + phases[f]))
            for i in range(d):
                out[i] = out[i] + s * bdirs[f, i]
    return out


@njit(cache=True, nogil=True)
def _step_with_frame(kinds, mats, ts, phases, bdirs, p, frame):
    """Advance point and push tangent frame columns; returns new point."""
    d = p.shape[0]
    k = frame.shape[1]
    out = p.copy()
    for f in range(kinds.shape[0]):
        if kinds[f] == 0:
            m = mats[f]
            tmp = np.zeros(d)
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += m[i, j] * out[j]
                tmp[i] = acc
            newframe = np.zeros((d, k))
            for c in range(k):
                for i in range(d):
                    acc = 0.0
                    for j in range(d):
                        acc += m[i, j] * frame[j, c]
                    newframe[i, c] = acc
            for c in range(k):
                for i in range(d):
                    frame[i, c] = newframe[i, c]
            out = tmp
        else:
            arg = _TWO_PI * (out[0] + phases[f])
            s = ts[f] * np.sin(arg)
            tau = _TWO_PI * ts[f] * np.cos(arg)
            for c in range(k):
                vx = frame[0, c]
                for i in range(d):
                    frame[i, c] = frame[i, c] + tau * vx * bdirs[f, i]
            for i in range(d):
                out[i] = out[i] + s * bdirs[f, i]
        for i in range(d):
            out[i] = out[i] - np.floor(out[i])
            if out[i] >= 1.0 - 1e-15:
                out[i] = 0.0
    return out


@njit(cache=True, nogil=True)
def _mgs(frame, lognorms):
    """Modified Gram-Schmidt in place; adds log column norms to lognorms.

    Returns 1 if any column norm left [1e-300, 1e300]; a subordinate column
    can hit exact zero by float absorption when the expansion gap over one
    reorthonormalization interval exceeds 1/eps, which signals that the
    interval is too long for this word.
    """
    d = frame.shape[0]
    k = frame.shape[1]
    bad = 0
    for c in range(k):
        for prev in range(c):
            dot = 0.0
            for i in range(d):
                dot += frame[i, prev] * frame[i, c]
            for i in range(d):
                frame[i, c] -= dot * frame[i, prev]
        nrm = 0.0
        for i in range(d):
            nrm += frame[i, c] * frame[i, c]
        nrm = np.sqrt(nrm)
        if not (nrm > _TINY and nrm < _HUGE) or np.isnan(nrm):
            bad = 1
            return bad
        lognorms[c] += np.log(nrm)
        for i in range(d):
            frame[i, c] /= nrm
    return bad


@njit(cache=True, nogil=True)
def orbit_positions(kinds, mats, ts, phases, bdirs, p0, n_steps):
    d = p0.shape[0]
    out = np.empty((n_steps + 1, d))
    out[0] = p0
    p = p0.copy()
    for s in range(n_steps):
        p = _apply_word(kinds, mats, ts, phases, bdirs, p)
        out[s + 1] = p
    return out


@njit(cache=True, nogil=True)
def spectrum_kernel(kinds, mats, ts, phases, bdirs, p0s, k, n_steps, burn_in,
                    reorth, n_blocks, exps, block_rates, status):
    """Benettin/QR exponents for a batch of orbits.

    ``exps[b, :]`` receives the per-orbit exponents (log growth per word
    application).  ``block_rates[b, :, j]`` receives the growth rate over
    block j, used for per-orbit standard errors.  ``status[b]`` is one of the
    STATUS_* codes.
    """
    n_orbits, d = p0s.shape
    block_len = n_steps // n_blocks
    total = block_len * n_blocks
    for b in range(n_orbits):
        p = p0s[b].copy()
        frame = np.zeros((d, k))
        for c in range(k):
            frame[c % d, c] = 1.0
        lognorms = np.zeros(k)
        ok = True
        for s in range(burn_in):
            p = _step_with_frame(kinds, mats, ts, phases, bdirs, p, frame)
            if (s + 1) % reorth == 0:
                if _mgs(frame, lognorms) != 0:
                    status[b] = STATUS_BLOWUP
                    ok = False
                    break
        if not ok:
            continue
        # burn-in length need not be a multiple of the period: restart the
        # accumulation from an orthonormal frame so no growth leaks across
        if _mgs(frame, lognorms) != 0:
            status[b] = STATUS_BLOWUP
            continue
        for c in range(k):
            lognorms[c] = 0.0
        prev = np.zeros(k)
        for s in range(total):
            p = _step_with_frame(kinds, mats, ts, phases, bdirs, p, frame)
            if (s + 1) % reorth == 0 or s == total - 1:
                if _mgs(frame, lognorms) != 0:
                    status[b] = STATUS_BLOWUP
                    ok = False
                    break
            if (s + 1) % block_len == 0:
                j = (s + 1) // block_len - 1
                for c in range(k):
                    block_rates[b, c, j] = (lognorms[c] - prev[c]) / block_len
                    prev[c] = lognorms[c]
        if not ok:
            continue
        for c in range(k):
            exps[b, c] = lognorms[c] / total
        status[b] = STATUS_OK


@njit(cache=True, nogil=True)
def stable_top_kernel(kinds, mats, ts, phases, bdirs,
                      lin2, shear_flag, shear_amp, shear_phase,
                      col_b, dual_a, p0s, angles0, n_steps, burn_in,
                      n_blocks, tops, block_rates, status):
    """Top exponent of the 2x2 stable-plane restriction along orbits.

    The restriction of factor f is ``lin2[f]`` for linear factors; for shears
    it is I + tau * outer(col_b, dual_a) with
    tau = shear_amp[f] * cos(2*pi*(x + shear_phase[f])) evaluated at the
    current x coordinate.  Vectors are tracked in orthonormal plane
    coordinates, so accumulated norms are ambient norms.
    """
    n_orbits, d = p0s.shape
    block_len = n_steps // n_blocks
    total = block_len * n_blocks
    n_factors = kinds.shape[0]
    for b in range(n_orbits):
        p = p0s[b].copy()
        u0 = np.cos(angles0[b])
        u1 = np.sin(angles0[b])
        acc = 0.0
        prev = 0.0
        bad = False
        for s in range(burn_in + total):
            # push the 2-vector through each factor's restriction
            for f in range(n_factors):
                if shear_flag[f] == 1:
                    tau = shear_amp[f] * np.cos(_TWO_PI * (p[0] + shear_phase[f]))
                    scal = dual_a[0] * u0 + dual_a[1] * u1
                    u0 = u0 + tau * scal * col_b[0]
                    u1 = u1 + tau * scal * col_b[1]
                else:
                    w0 = lin2[f, 0, 0] * u0 + lin2[f, 0, 1] * u1
                    w1 = lin2[f, 1, 0] * u0 + lin2[f, 1, 1] * u1
                    u0 = w0
                    u1 = w1
            nrm = np.sqrt(u0 * u0 + u1 * u1)
            if not (nrm > _TINY and nrm < _HUGE) or np.isnan(nrm):
                status[b] = STATUS_BLOWUP
                bad = True
                break
            u0 /= nrm
            u1 /= nrm
            if s >= burn_in:
                acc += np.log(nrm)
                sidx = s - burn_in
                if (sidx + 1) % block_len == 0:
                    j = (sidx + 1) // block_len - 1
                    block_rates[b, j] = (acc - prev) / block_len
                    prev = acc
            p = _apply_word(kinds, mats, ts, phases, bdirs, p)
        if bad:
            continue
        tops[b] = acc / total
        status[b] = STATUS_OK


@njit(cache=True, nogil=True)
def unstable_direction(fw_kinds, fw_mats, fw_ts, fw_phases, fw_bdirs,
                       inv_kinds, inv_mats, inv_ts, inv_phases, inv_bdirs,
                       p, v_seed, depth):
    """Direction of the strongest expanding bundle at p.

    Pulls ``p`` back ``depth`` times with the inverse word, then pushes the
    seed vector forward with the derivative of the forward word; the result
    converges geometrically to the unstable direction.
    """
    d = p.shape[0]
    back = np.empty((depth, d))
    q = p.copy()
    for j in range(depth):
        q = _apply_word(inv_kinds, inv_mats, inv_ts, inv_phases, inv_bdirs, q)
        back[j] = q
    v = v_seed.copy()
    frame = np.empty((d, 1))
    for j in range(depth - 1, -1, -1):
        for i in range(d):
            frame[i, 0] = v[i]
        _step_with_frame(fw_kinds, fw_mats, fw_ts, fw_phases, fw_bdirs,
                         back[j].copy(), frame)
        nrm = 0.0
        for i in range(d):
            nrm += frame[i, 0] * frame[i, 0]
        nrm = np.sqrt(nrm)
        for i in range(d):
            v[i] = frame[i, 0] / nrm
    return v


@njit(cache=True, nogil=True)
def grow_segment_kernel(fw_kinds, fw_mats, fw_ts, fw_phases, fw_bdirs,
                        inv_kinds, inv_mats, inv_ts, inv_phases, inv_bdirs,
                        p0, v_seed, depth, h, n_nodes, nodes, dirs):
    """Integrate the unstable direction field from p0 with arc-length RK4.

    ``nodes`` receives lifted (unreduced) coordinates so strip crossings can
    be counted in the cover; ``dirs`` receives unit tangents.  Returns the
    final status code.
    """
    d = p0.shape[0]

    def direction_at(pt_lift, ref):
        pt = np.empty(d)
        for i in range(d):
            pt[i] = pt_lift[i] - np.floor(pt_lift[i])
            if pt[i] >= 1.0 - 1e-15:
                pt[i] = 0.0
        v = unstable_direction(fw_kinds, fw_mats, fw_ts, fw_phases, fw_bdirs,
                               inv_kinds, inv_mats, inv_ts, inv_phases,
                               inv_bdirs, pt, v_seed, depth)
        dot = 0.0
        for i in range(d):
            dot += v[i] * ref[i]
        if dot < 0.0:
            for i in range(d):
                v[i] = -v[i]
        return v

    p = p0.copy()
    ref = v_seed.copy()
    v = direction_at(p, ref)
    nodes[0] = p
    dirs[0] = v
    for s in range(1, n_nodes):
        ref = dirs[s - 1]
        k1 = direction_at(p, ref)
        k2 = direction_at(p + 0.5 * h * k1, ref)
        k3 = direction_at(p + 0.5 * h * k2, ref)
        k4 = direction_at(p + h * k3, ref)
        for i in range(d):
            p[i] = p[i] + (h / 6.0) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
        v = direction_at(p, ref)
        nodes[s] = p
        dirs[s] = v
    return STATUS_OK


@njit(cache=True, nogil=True)
def rational_orbit_cocycle(a0, q, mult, coeff_cos, coeff_sin, freqs,
                           rho, lam_l, eta, psi_break, psi_vals,
                           n_steps, u0, u1):
    """Birkhoff average of log growth for an expanding-circle cocycle.

    The base orbit is exact rational arithmetic: x = a/q with odd q and
    a -> mult*a (mod q), so floating-point collapse onto dyadics cannot
    occur.  The matrix at x is R(rho*w(x)) @ diag(lam_l, eta) @ R(psi(x))
    where w is a trigonometric polynomial and psi is piecewise constant with
    breakpoints ``psi_break`` (values ``psi_vals``, right-open cells).
    """
    a = a0
    acc = 0.0
    for s in range(n_steps):
        x = a / q
        w = 0.0
        for j in range(freqs.shape[0]):
            w += coeff_cos[j] * np.cos(_TWO_PI * freqs[j] * x) + \
                 coeff_sin[j] * np.sin(_TWO_PI * freqs[j] * x)
        psi = psi_vals[psi_vals.shape[0] - 1]
        for j in range(psi_break.shape[0]):
            if x < psi_break[j]:
                psi = psi_vals[j]
                break
        cp = np.cos(psi)
        sp = np.sin(psi)
        r0 = cp * u0 - sp * u1
        r1 = sp * u0 + cp * u1
        r0 *= lam_l
        r1 *= eta
        th = rho * w
        ct = np.cos(th)
        st = np.sin(th)
        u0 = ct * r0 - st * r1
        u1 = st * r0 + ct * r1
        nrm = np.sqrt(u0 * u0 + u1 * u1)
        acc += np.log(nrm)
        u0 /= nrm
        u1 /= nrm
        a = (mult * a) % q
    return acc / n_steps
