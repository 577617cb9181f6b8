"""Compiled inner loops for the closed-loop 0D integration.

Everything here takes plain scalars and ndarrays so numba can compile the
hot path.  fastmath stays off: results must be bit-reproducible across
repeated runs and thread counts, and the associativity-preserving order of
the reductions below is part of that guarantee.

Scalar heart/aorta parameters travel in a single float64 vector ``hp``
with the layout given by the HP_* indices; per-terminal coronary
parameters travel as parallel arrays ordered like the terminal list.

State vector layout (length 4 + 2*n_terminals):
    y[0] = V_LV   left-ventricular volume [mm^3]
    y[1] = Q_AV   aortic valve flow [mm^3/s]   (0 while the valve is closed)
    y[2] = Q_MV   mitral valve flow [mm^3/s]   (0 while the valve is closed)
    y[3] = P_wk   Windkessel stored pressure [Pa]
    y[4+2i] = P1_i, y[5+2i] = P2_i  coronary LPM node pressures [Pa]
"""

import numpy as np
from numba import njit

# hp vector layout: elastance, fixed heart elements, Windkessel
(
    HP_E_MIN,
    HP_E_MAX,
    HP_T_MAX,
    HP_T_R,
    HP_T,
    HP_R_MV,
    HP_R_AV,
    HP_L_MV,
    HP_L_AV,
    HP_P_LA,
    HP_V0,
    HP_C_S,
    HP_R_SP,
    HP_R_SD,
) = range(14)

N_HP = 14


@njit(cache=True, nogil=True)
def elastance_scalar(t, E_min, E_max, t_max, t_r, T):
    """Half-cosine systolic rise / half-cosine relaxation, E_min in diastole.

    Returns (E, dE/dt) at time t (reduced mod T).  Continuous and T-periodic.
    """
    t_hat = t - T * np.floor(t / T)
    dE = E_max - E_min
    if t_hat <= t_max:
        phase = np.pi * t_hat / t_max
        return (
            E_min + 0.5 * dE * (1.0 - np.cos(phase)),
            0.5 * dE * np.sin(phase) * np.pi / t_max,
        )
    if t_hat <= t_r:
        phase = np.pi * (t_hat - t_max) / (t_r - t_max)
        return (
            E_min + 0.5 * dE * (1.0 + np.cos(phase)),
            -0.5 * dE * np.sin(phase) * np.pi / (t_r - t_max),
        )
    return E_min, 0.0


@njit(cache=True, nogil=True)
def node_pressure(Q_AV, P_wk, y, R_ser, R_sp):
    """Aortic-root pressure from algebraic flux balance at the node.

    Q_AV = (P_ao - P_wk)/R_sp + sum_i (P_ao - P1_i)/R_ser_i, solved for P_ao.
    """
    g = 1.0 / R_sp
    s = Q_AV + P_wk / R_sp
    for i in range(R_ser.shape[0]):
        g += 1.0 / R_ser[i]
        s += y[4 + 2 * i] / R_ser[i]
    return s / g


@njit(cache=True, nogil=True)
def rhs(t, y, dy, ao_open, mv_open, hp, R_ser, R_ap, R_ad, C_a, C_im, alpha):
    """Closed-loop time derivatives; returns the algebraic P_ao [Pa].

    Valve flags are frozen by the caller for the duration of one RK4 step;
    a closed valve contributes zero flow and zero flow derivative.
    """
    E, dEdt = elastance_scalar(t, hp[HP_E_MIN], hp[HP_E_MAX], hp[HP_T_MAX], hp[HP_T_R], hp[HP_T])
    V = y[0]
    Q_AV = y[1] if ao_open else 0.0
    Q_MV = y[2] if mv_open else 0.0
    P_wk = y[3]
    P_LV = E * (V - hp[HP_V0])

    P_ao = node_pressure(Q_AV, P_wk, y, R_ser, hp[HP_R_SP])
    Q_sys = (P_ao - P_wk) / hp[HP_R_SP]

    dy[0] = Q_MV - Q_AV
    dy[1] = (P_LV - P_ao - hp[HP_R_AV] * Q_AV) / hp[HP_L_AV] if ao_open else 0.0
    dy[2] = (hp[HP_P_LA] - P_LV - hp[HP_R_MV] * Q_MV) / hp[HP_L_MV] if mv_open else 0.0
    dy[3] = (Q_sys - P_wk / hp[HP_R_SD]) / hp[HP_C_S]

    # Intramyocardial compression: P_im = alpha*P_LV enters through d(P2-P_im)/dt
    dP_LV = dEdt * (V - hp[HP_V0]) + E * (Q_MV - Q_AV)
    for i in range(R_ser.shape[0]):
        P1 = y[4 + 2 * i]
        P2 = y[5 + 2 * i]
        Q_cor = (P_ao - P1) / R_ser[i]
        Q_mid = (P1 - P2) / R_ap[i]
        dy[4 + 2 * i] = (Q_cor - Q_mid) / C_a[i]
        dy[5 + 2 * i] = (Q_mid - P2 / R_ad[i]) / C_im[i] + alpha[i] * dP_LV
    return P_ao


@njit(cache=True, nogil=True)
def integrate(
    y,
    hp,
    R_ser,
    R_ap,
    R_ad,
    C_a,
    C_im,
    alpha,
    dt,
    n_steps,
    rec_V,
    rec_QAV,
    rec_QMV,
    rec_Pwk,
    rec_PLV,
    rec_Pao,
    rec_P1,
    rec_P2,
    rec_Qcor,
):
    """Fixed-step RK4 with ideal-diode valve switching between steps.

    Records every sample (index 0 = initial condition).  Returns the step
    index of the first non-finite state, or -1 on success.
    """
    n = R_ser.shape[0]
    m = y.shape[0]
    ao_open = False
    mv_open = False

    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    yt = np.empty(m)

    # Initial record (valves closed: Q contributions are zero).
    E0, _ = elastance_scalar(0.0, hp[HP_E_MIN], hp[HP_E_MAX], hp[HP_T_MAX], hp[HP_T_R], hp[HP_T])
    P_ao = node_pressure(0.0, y[3], y, R_ser, hp[HP_R_SP])
    rec_V[0] = y[0]
    rec_QAV[0] = 0.0
    rec_QMV[0] = 0.0
    rec_Pwk[0] = y[3]
    rec_PLV[0] = E0 * (y[0] - hp[HP_V0])
    rec_Pao[0] = P_ao
    for i in range(n):
        rec_P1[0, i] = y[4 + 2 * i]
        rec_P2[0, i] = y[5 + 2 * i]
        rec_Qcor[0, i] = (P_ao - y[4 + 2 * i]) / R_ser[i]

    for step in range(n_steps):
        t = step * dt

        rhs(t, y, k1, ao_open, mv_open, hp, R_ser, R_ap, R_ad, C_a, C_im, alpha)
        for j in range(m):
            yt[j] = y[j] + 0.5 * dt * k1[j]
        rhs(t + 0.5 * dt, yt, k2, ao_open, mv_open, hp, R_ser, R_ap, R_ad, C_a, C_im, alpha)
        for j in range(m):
            yt[j] = y[j] + 0.5 * dt * k2[j]
        rhs(t + 0.5 * dt, yt, k3, ao_open, mv_open, hp, R_ser, R_ap, R_ad, C_a, C_im, alpha)
        for j in range(m):
            yt[j] = y[j] + dt * k3[j]
        rhs(t + dt, yt, k4, ao_open, mv_open, hp, R_ser, R_ap, R_ad, C_a, C_im, alpha)
        for j in range(m):
            y[j] += dt * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0

        # Valve switching at the end of the step.  Aortic: ideal diode on
        # flow — closes when Q_AV decelerates through zero (this closure
        # instant defines the dicrotic notch).  Mitral: closes at the
        # adverse pressure crossover (P_LV reaching P_LA); the Table-3
        # L_MV/R_MV pair is underdamped, and letting inflow momentum run
        # to the flow-zero crossing overfills the ventricle by ~10 ml.
        # Closing clamps the inertance state to zero.
        t_new = t + dt
        E, _ = elastance_scalar(t_new, hp[HP_E_MIN], hp[HP_E_MAX], hp[HP_T_MAX], hp[HP_T_R], hp[HP_T])
        P_LV = E * (y[0] - hp[HP_V0])
        if ao_open and y[1] <= 0.0:
            y[1] = 0.0
            ao_open = False
        if mv_open and (y[2] <= 0.0 or P_LV >= hp[HP_P_LA]):
            y[2] = 0.0
            mv_open = False

        P_ao = node_pressure(y[1] if ao_open else 0.0, y[3], y, R_ser, hp[HP_R_SP])
        if not ao_open and P_LV > P_ao:
            ao_open = True
        if not mv_open and hp[HP_P_LA] > P_LV:
            mv_open = True

        for j in range(m):
            if not np.isfinite(y[j]):
                return step + 1

        k = step + 1
        rec_V[k] = y[0]
        rec_QAV[k] = y[1] if ao_open else 0.0
        rec_QMV[k] = y[2] if mv_open else 0.0
        rec_Pwk[k] = y[3]
        rec_PLV[k] = P_LV
        rec_Pao[k] = P_ao
        for i in range(n):
            rec_P1[k, i] = y[4 + 2 * i]
            rec_P2[k, i] = y[5 + 2 * i]
            rec_Qcor[k, i] = (P_ao - y[4 + 2 * i]) / R_ser[i]

    return -1


@njit(cache=True, nogil=True)
def catheter_mix(Q_cath, Q_ostium, c0):
    """Inlet mixing closure: injected contrast dilutes into ostial inflow.

    c_in = c0 * Q_cath / (Q_cath + max(Q_ostium, 0)), capped at c0; zero
    when the catheter is off.  Backflow at the ostium (Q_ostium <= 0)
    leaves pure contrast filling the inlet.
    """
    if Q_cath <= 0.0:
        return 0.0
    q = Q_cath + max(Q_ostium, 0.0)
    c = c0 * Q_cath / q
    return c if c < c0 else c0


@njit(cache=True, nogil=True)
def transport_span(
    c,
    t0,
    n_steps,
    dt,
    seg_start,
    seg_count,
    seg_dx,
    seg_area,
    children_ptr,
    children_idx,
    Q_seg,
    hemo_dt,
    D,
    c0,
    rate,
    inj_t0,
    inj_t1,
    ledger,
):
    """Advance the donor-cell upwind / central-diffusion scheme n_steps.

    Explicit in time; flows are linearly interpolated from the hemodynamic
    grid (rows of Q_seg) at each sub-step.  Junction nodes mix their inflow
    streams into a single concentration c_J and feed every outflow stream
    from it; the flow through a segment's own distal outlet is the residual
    Q_s - sum(Q_children), which makes every node balance exactly in float
    arithmetic.  Terminal outlets drain c_J (or re-inject the adjacent
    cell's concentration on backflow).  ledger[0] accumulates signed ostium
    boundary mass, ledger[1] signed outlet mass [mg*mm^3/ml].

    The caller guarantees the CFL bound; no stability check here.
    """
    n_seg = seg_start.shape[0]
    N = c.shape[0]
    n_hemo = Q_seg.shape[1]
    dm = np.empty(N)
    qs = np.empty(n_seg)
    ow = np.empty(n_seg)

    for step in range(n_steps):
        t = t0 + step * dt
        k = int(np.floor(t / hemo_dt))
        if k < 0:
            k = 0
        if k > n_hemo - 2:
            k = n_hemo - 2
        w = (t - k * hemo_dt) / hemo_dt
        for s in range(n_seg):
            qs[s] = (1.0 - w) * Q_seg[s, k] + w * Q_seg[s, k + 1]
        for s in range(n_seg):
            q_out = qs[s]
            for p in range(children_ptr[s], children_ptr[s + 1]):
                q_out -= qs[children_idx[p]]
            ow[s] = q_out

        for j in range(N):
            dm[j] = 0.0

        # Intra-segment faces: upwind advection + central diffusion.
        for s in range(n_seg):
            i0 = seg_start[s]
            n = seg_count[s]
            Q = qs[s]
            dA = D * seg_area[s] / seg_dx[s]
            for f in range(1, n):
                left = i0 + f - 1
                right = i0 + f
                adv = Q * (c[left] if Q > 0.0 else c[right])
                F = adv - dA * (c[right] - c[left])
                dm[left] -= F * dt
                dm[right] += F * dt

        # Ostium boundary (proximal face of the root segment): advective
        # flux of mixed catheter/blood concentration; zero diffusive flux.
        Q_root = qs[0]
        Q_cath = rate if (inj_t0 <= t) and (t < inj_t1) else 0.0
        cin = catheter_mix(Q_cath, Q_root, c0)
        first = seg_start[0]
        F_in = Q_root * (cin if Q_root > 0.0 else c[first])
        dm[first] += F_in * dt
        ledger[0] += F_in * dt

        # Distal nodes: junction mixing + terminal outlets.  Streams into
        # the node: parent forward flow, child backflows, outlet backflow
        # (ghost concentration = parent's last cell).  Every outflow stream
        # draws the mixed concentration c_J.
        for s in range(n_seg):
            last = seg_start[s] + seg_count[s] - 1
            q_par = qs[s]
            q_out = ow[s]
            in_q = max(q_par, 0.0) + max(-q_out, 0.0)
            in_m = in_q * c[last]
            for p in range(children_ptr[s], children_ptr[s + 1]):
                ch = children_idx[p]
                q_ch = qs[ch]
                if q_ch < 0.0:
                    in_q += -q_ch
                    in_m += -q_ch * c[seg_start[ch]]
            c_J = in_m / in_q if in_q > 0.0 else 0.0

            dm[last] += (-max(q_par, 0.0) * c[last] + max(-q_par, 0.0) * c_J) * dt
            for p in range(children_ptr[s], children_ptr[s + 1]):
                ch = children_idx[p]
                q_ch = qs[ch]
                firstc = seg_start[ch]
                dm[firstc] += (max(q_ch, 0.0) * c_J - max(-q_ch, 0.0) * c[firstc]) * dt
            ledger[1] += (max(q_out, 0.0) * c_J - max(-q_out, 0.0) * c[last]) * dt

        for s in range(n_seg):
            i0 = seg_start[s]
            vol = seg_area[s] * seg_dx[s]
            for f in range(seg_count[s]):
                c[i0 + f] += dm[i0 + f] / vol


@njit(cache=True, nogil=True)
def raster_capsules(img, u0, v0, u1, v1, radius, intensity):
    """Darkest-wins rasterization of capsules onto a grayscale image.

    Endpoints and radii are in pixel coordinates, with pixel (row, col)
    centered at exactly (row, col).  A pixel belongs to capsule i when its
    center lies within radius[i] of the segment (u0,v0)-(u1,v1); covered
    pixels take min(current, intensity[i]).
    """
    H, W = img.shape
    for i in range(u0.shape[0]):
        r = radius[i]
        ax = u1[i] - u0[i]
        ay = v1[i] - v0[i]
        L2 = ax * ax + ay * ay
        lo_c = int(np.floor(min(u0[i], u1[i]) - r))
        hi_c = int(np.ceil(max(u0[i], u1[i]) + r))
        lo_r = int(np.floor(min(v0[i], v1[i]) - r))
        hi_r = int(np.ceil(max(v0[i], v1[i]) + r))
        if lo_c < 0:
            lo_c = 0
        if hi_c > W - 1:
            hi_c = W - 1
        if lo_r < 0:
            lo_r = 0
        if hi_r > H - 1:
            hi_r = H - 1
        r2 = r * r
        val = intensity[i]
        for row in range(lo_r, hi_r + 1):
            for col in range(lo_c, hi_c + 1):
                px = col - u0[i]
                py = row - v0[i]
                if L2 > 0.0:
                    t = (px * ax + py * ay) / L2
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                else:
                    t = 0.0
                dx = px - t * ax
                dy = py - t * ay
                if dx * dx + dy * dy <= r2 and val < img[row, col]:
                    img[row, col] = val
