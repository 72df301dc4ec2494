"""Compiled inner loop: articulated dynamics, contact, and integration.

Everything here is numba-jitted and operates on packed float64 arrays so a
full trial (hundreds of thousands of steps) runs in seconds.  The public
modules (dynamics, simulate) wrap these kernels with dataclass APIs; tests
exercise both layers against each other.

Generalized coordinates (7 DoF):
    u = [v_hip (world, 3), w_left (world, 3), hip_rate]
where the floating base is the LEFT leg and the base origin is the hip
joint.  The right leg hangs off the hip by a revolute joint about the left
frame's +y axis.  The mass matrix and bias terms are assembled in closed
form from the two-body Jacobians; contact and gravity enter as generalized
forces; a hand-rolled 7x7 Cholesky solves for accelerations (its success is
also the SPD check).

State vector layout (15 floats):
    0:3   hip position (world)
    3:7   left-leg orientation quaternion, w-x-y-z
    7:10  hip linear velocity (world)
    10:13 left-leg angular velocity (world)
    13    hip angle q (right leg relative to left, about +y)
    14    hip rate qdot
plus time carried separately.

Contact is a compliant sphere/ellipsoid-on-plane model: Hunt-Crossley
normal force, tanh-regularized Coulomb friction at the support point, and a
contact moment from the finite elastic patch of radius sqrt(R_eff * depth).
The moment has two parts.  About the normal, a drilling-friction torque
bounded by (3 pi / 16) mu fn r; without it a point-footed walker can
pirouette freely on its stance foot, which no rubber-footed robot does.
About the two tangential axes, a rolling-resistance damping torque
kc * depth * dc * r^2 / 4: the distributed Hunt-Crossley foundation resists
rocking even at constant depth, exactly what a single support point misses.
Every factor scales as torque ~ m L under the standard contact scaling
rules, so both terms preserve dynamic similarity.

Trajectory log columns (one row per decimated step):
    0 t, 1:4 hip position, 4:8 quaternion wxyz, 8:11 linear velocity,
    11:14 angular velocity (left-leg body frame), 14 hip angle, 15 hip rate,
    16 controller torque, 17 hardstop torque,
    18:28 left contact (normal force, friction x, friction y, moment xyz,
    depth, point xyz), 28:38 right contact (same layout),
    38:41 roll/pitch/yaw of the stance-averaged frame (intrinsic Z-Y-X),
    41:44 their rates, 44:47 whole-robot CoM, 47 kinetic energy,
    48 gravitational potential, 49 stored spring energy (contact + hardstop),
    50 accumulated dissipation, 51 accumulated actuator work.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NCOLS = 52

# drilling-friction torque coefficient for a uniform circular pressure patch
SPIN_TORQUE_COEFF = 3.0 * math.pi / 16.0

STATUS_OK = 0
STATUS_FELL = 1
STATUS_DIVERGED = 2

CTRL_SINUSOID = 0
CTRL_BANGBANG = 1


@njit(cache=True, inline="always")
def _quat_to_rot(q, R):
    w, x, y, z = q[0], q[1], q[2], q[3]
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    R[0, 0] = 1.0 - 2.0 * (yy + zz)
    R[0, 1] = 2.0 * (xy - wz)
    R[0, 2] = 2.0 * (xz + wy)
    R[1, 0] = 2.0 * (xy + wz)
    R[1, 1] = 1.0 - 2.0 * (xx + zz)
    R[1, 2] = 2.0 * (yz - wx)
    R[2, 0] = 2.0 * (xz - wy)
    R[2, 1] = 2.0 * (yz + wx)
    R[2, 2] = 1.0 - 2.0 * (xx + yy)


@njit(cache=True, inline="always")
def _rot_y_apply(R, angle, out):
    # out = R @ Ry(angle)
    c = math.cos(angle)
    s = math.sin(angle)
    for i in range(3):
        r0 = R[i, 0]
        r2 = R[i, 2]
        out[i, 0] = r0 * c - r2 * s
        out[i, 1] = R[i, 1]
        out[i, 2] = r0 * s + r2 * c


@njit(cache=True, inline="always")
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True, inline="always")
def _matvec3(A, x, out):
    for i in range(3):
        out[i] = A[i, 0] * x[0] + A[i, 1] * x[1] + A[i, 2] * x[2]


@njit(cache=True, inline="always")
def _rot_inertia(R, I, out, tmp):
    # out = R @ I @ R.T
    for i in range(3):
        for j in range(3):
            tmp[i, j] = R[i, 0] * I[0, j] + R[i, 1] * I[1, j] + R[i, 2] * I[2, j]
    for i in range(3):
        for j in range(3):
            out[i, j] = tmp[i, 0] * R[j, 0] + tmp[i, 1] * R[j, 1] + tmp[i, 2] * R[j, 2]


@njit(cache=True)
def _chol_solve7(M, rhs, x):
    """Solve M x = rhs for SPD M via Cholesky; False if not positive definite."""
    L = np.zeros((7, 7))
    for i in range(7):
        for j in range(i + 1):
            s = M[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return False
                L[i, i] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    y = np.zeros(7)
    for i in range(7):
        s = rhs[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    for i in range(6, -1, -1):
        s = y[i]
        for k in range(i + 1, 7):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return True


@njit(cache=True)
def _support_point(R, center, semi, out_point):
    """Lowest point of an ellipsoid posed by (R, center); returns depth (= -z)."""
    # support direction -z expressed in local axes is -third row of R
    n0 = -R[2, 0]
    n1 = -R[2, 1]
    n2 = -R[2, 2]
    u0 = semi[0] * semi[0] * n0
    u1 = semi[1] * semi[1] * n1
    u2 = semi[2] * semi[2] * n2
    denom = math.sqrt(n0 * u0 + n1 * u1 + n2 * u2)
    l0 = u0 / denom
    l1 = u1 / denom
    l2 = u2 / denom
    out_point[0] = center[0] + R[0, 0] * l0 + R[0, 1] * l1 + R[0, 2] * l2
    out_point[1] = center[1] + R[1, 0] * l0 + R[1, 1] * l1 + R[1, 2] * l2
    out_point[2] = center[2] + R[2, 0] * l0 + R[2, 1] * l1 + R[2, 2] * l2
    return -out_point[2]


@njit(cache=True)
def _controller(kind, p, t, q, qd):
    """Returns (drive torque, hardstop torque) matching control.controller_torque."""
    if kind == CTRL_SINUSOID:
        amp, f, kp, kd, tau_max = p[0], p[1], p[2], p[3], p[4]
        omega = 2.0 * math.pi * f
        q_cmd = amp * math.sin(omega * t)
        qd_cmd = amp * omega * math.cos(omega * t)
        tau = kp * (q_cmd - q) + kd * (qd_cmd - qd)
        if tau > tau_max:
            tau = tau_max
        elif tau < -tau_max:
            tau = -tau_max
        return tau, 0.0
    else:
        tau_bb, f, phi_max, ks, kd = p[0], p[1], p[2], p[3], p[4]
        s = math.sin(2.0 * math.pi * f * t)
        if s > 0.0:
            tau = tau_bb
        elif s < 0.0:
            tau = -tau_bb
        else:
            tau = 0.0
        tau_hs = 0.0
        if q > phi_max:
            tau_hs = -ks * (q - phi_max) - kd * qd
        elif q < -phi_max:
            tau_hs = -ks * (q + phi_max) - kd * qd
        return tau, tau_hs


@njit(cache=True)
def _accel(x, tau_hip, q_ext, m_l, m_r, c_l, c_r, I_l, I_r, g, acc):
    """Forward dynamics: fill acc(7) with du/dt.  Returns False on non-SPD M.

    q_ext is an already-assembled generalized external force (contacts etc.);
    gravity and the hip torque are added here.
    """
    R_l = np.empty((3, 3))
    R_r = np.empty((3, 3))
    tmp = np.empty((3, 3))
    Iw_l = np.empty((3, 3))
    Iw_r = np.empty((3, 3))
    _quat_to_rot(x[3:7], R_l)
    _rot_y_apply(R_l, x[13], R_r)
    _rot_inertia(R_l, I_l, Iw_l, tmp)
    _rot_inertia(R_r, I_r, Iw_r, tmp)

    a_w = np.empty(3)
    a_w[0] = R_l[0, 1]
    a_w[1] = R_l[1, 1]
    a_w[2] = R_l[2, 1]

    r_l = np.empty(3)
    r_r = np.empty(3)
    _matvec3(R_l, c_l, r_l)
    _matvec3(R_r, c_r, r_r)

    w = x[10:13]
    qhd = x[14]
    w_r = np.empty(3)
    for i in range(3):
        w_r[i] = w[i] + qhd * a_w[i]

    axr = np.empty(3)  # a_w x r_r
    _cross(a_w, r_r, axr)

    # --- mass matrix ---
    M = np.zeros((7, 7))
    m_tot = m_l + m_r
    for i in range(3):
        M[i, i] = m_tot
    # coupling -skew(m_l r_l + m_r r_r)
    s0 = m_l * r_l[0] + m_r * r_r[0]
    s1 = m_l * r_l[1] + m_r * r_r[1]
    s2 = m_l * r_l[2] + m_r * r_r[2]
    M[0, 4] = s2
    M[0, 5] = -s1
    M[1, 3] = -s2
    M[1, 5] = s0
    M[2, 3] = s1
    M[2, 4] = -s0
    for i in range(3):
        M[i, 6] = m_r * axr[i]
    # rotational block: Iw_l + Iw_r + m (|r|^2 I - r r^T) for each leg
    rl2 = r_l[0] * r_l[0] + r_l[1] * r_l[1] + r_l[2] * r_l[2]
    rr2 = r_r[0] * r_r[0] + r_r[1] * r_r[1] + r_r[2] * r_r[2]
    for i in range(3):
        for j in range(3):
            v = Iw_l[i, j] + Iw_r[i, j] - m_l * r_l[i] * r_l[j] - m_r * r_r[i] * r_r[j]
            if i == j:
                v += m_l * rl2 + m_r * rr2
            M[3 + i, 3 + j] = v
    # hip couplings
    rxaxr = np.empty(3)
    _cross(r_r, axr, rxaxr)
    Ia = np.empty(3)
    _matvec3(Iw_r, a_w, Ia)
    for i in range(3):
        M[3 + i, 6] = m_r * rxaxr[i] + Ia[i]
    M[6, 6] = m_r * (axr[0] * axr[0] + axr[1] * axr[1] + axr[2] * axr[2]) + (
        a_w[0] * Ia[0] + a_w[1] * Ia[1] + a_w[2] * Ia[2]
    )
    for i in range(7):
        for j in range(i):
            M[i, j] = M[j, i]

    # --- bias forces ---
    t1 = np.empty(3)
    t2 = np.empty(3)
    ab_l = np.empty(3)
    _cross(w, r_l, t1)
    _cross(w, t1, ab_l)  # w x (w x r_l)
    alb_r = np.empty(3)
    _cross(w, a_w, t1)
    for i in range(3):
        alb_r[i] = qhd * t1[i]
    ab_r = np.empty(3)
    _cross(alb_r, r_r, t1)
    _cross(w_r, r_r, t2)
    _cross(w_r, t2, ab_r)
    for i in range(3):
        ab_r[i] += t1[i]
    gyro_l = np.empty(3)
    _matvec3(Iw_l, w, t1)
    _cross(w, t1, gyro_l)
    gyro_r = np.empty(3)
    _matvec3(Iw_r, alb_r, gyro_r)
    _matvec3(Iw_r, w_r, t1)
    _cross(w_r, t1, t2)
    for i in range(3):
        gyro_r[i] += t2[i]

    rhs = np.empty(7)
    # gravity (world -z) and external forces, minus bias
    _cross(r_l, ab_l, t1)
    _cross(r_r, ab_r, t2)
    for i in range(3):
        rhs[i] = q_ext[i] - m_l * ab_l[i] - m_r * ab_r[i]
        rhs[3 + i] = q_ext[3 + i] - m_l * t1[i] - m_r * t2[i] - gyro_l[i] - gyro_r[i]
    rhs[2] -= m_tot * g
    # gravity moment about the hip: r x (m g), g along -z
    rhs[3] += -(m_l * r_l[1] + m_r * r_r[1]) * g
    rhs[4] += (m_l * r_l[0] + m_r * r_r[0]) * g
    rhs[6] = q_ext[6] + tau_hip - m_r * (axr[0] * ab_r[0] + axr[1] * ab_r[1] + axr[2] * ab_r[2]) - (
        a_w[0] * gyro_r[0] + a_w[1] * gyro_r[1] + a_w[2] * gyro_r[2]
    ) - m_r * axr[2] * g

    return _chol_solve7(M, rhs, acc)


@njit(cache=True)
def _integrate(x, acc, dt, out):
    """Semi-implicit Euler: velocities first, then pose from new velocities."""
    for i in range(3):
        out[7 + i] = x[7 + i] + dt * acc[i]
        out[10 + i] = x[10 + i] + dt * acc[3 + i]
    out[14] = x[14] + dt * acc[6]
    for i in range(3):
        out[i] = x[i] + dt * out[7 + i]
    out[13] = x[13] + dt * out[14]
    # quaternion update by the exponential map of the new angular velocity
    p0 = out[10] * dt
    p1 = out[11] * dt
    p2 = out[12] * dt
    angle = math.sqrt(p0 * p0 + p1 * p1 + p2 * p2)
    if angle > 1.0e-12:
        half = 0.5 * angle
        cw = math.cos(half)
        sw = math.sin(half) / angle
    else:
        cw = 1.0 - angle * angle / 8.0
        sw = 0.5 - angle * angle / 48.0
    dw = cw
    dx = sw * p0
    dy = sw * p1
    dz = sw * p2
    qw, qx, qy, qz = x[3], x[4], x[5], x[6]
    nw = dw * qw - dx * qx - dy * qy - dz * qz
    nx = dw * qx + dx * qw + dy * qz - dz * qy
    ny = dw * qy - dx * qz + dy * qw + dz * qx
    nz = dw * qz + dx * qy - dy * qx + dz * qw
    norm = math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
    out[3] = nw / norm
    out[4] = nx / norm
    out[5] = ny / norm
    out[6] = nz / norm


@njit(cache=True)
def _contact_one(R, p, v, w_eff, ctr_local, semi, kc, dc, mu, v_reg, patch, out):
    """Contact force for one foot.
    out = [fn, ftx, fty, tmx, tmy, tmz, depth, px, py, pz].

    patch is the geometry factor sqrt(R_eff) of the foot at its lowest point,
    so the elastic patch radius is patch * sqrt(depth).  The contact moment
    combines rolling-resistance damping about the tangential axes with
    drilling friction about the normal.  Returns the contact-point velocity
    components (vx, vy, vz) so the caller can do energy bookkeeping; force
    entries are zero when separated.
    """
    center = np.empty(3)
    _matvec3(R, ctr_local, center)
    for i in range(3):
        center[i] += p[i]
    point = np.empty(3)
    depth = _support_point(R, center, semi, point)
    out[6] = depth
    out[7] = point[0]
    out[8] = point[1]
    out[9] = point[2]
    for i in range(6):
        out[i] = 0.0
    vpx = 0.0
    vpy = 0.0
    vpz = 0.0
    if depth > 0.0:
        rx = point[0] - p[0]
        ry = point[1] - p[1]
        rz = point[2] - p[2]
        vpx = v[0] + w_eff[1] * rz - w_eff[2] * ry
        vpy = v[1] + w_eff[2] * rx - w_eff[0] * rz
        vpz = v[2] + w_eff[0] * ry - w_eff[1] * rx
        xdot = -vpz
        fn = kc * depth * (1.0 + dc * xdot)
        if fn < 0.0:
            fn = 0.0
        out[0] = fn
        speed = math.sqrt(vpx * vpx + vpy * vpy)
        if speed > 0.0 and fn > 0.0:
            scale = -mu * fn * math.tanh(speed / v_reg) / speed
            out[1] = scale * vpx
            out[2] = scale * vpy
        if fn > 0.0:
            r_patch = patch * math.sqrt(depth)
            c_roll = 0.25 * kc * depth * dc * r_patch * r_patch
            out[3] = -c_roll * w_eff[0]
            out[4] = -c_roll * w_eff[1]
            slip = w_eff[2] * r_patch
            out[5] = -SPIN_TORQUE_COEFF * mu * fn * r_patch * math.tanh(slip / v_reg)
    return vpx, vpy, vpz


@njit(cache=True)
def _attitude(R_l, qh, out_rpy):
    """Roll/pitch/yaw (intrinsic Z-Y-X) of the stance-averaged frame."""
    Rb = np.empty((3, 3))
    _rot_y_apply(R_l, 0.5 * qh, Rb)
    sp = -Rb[2, 0]
    if sp > 1.0:
        sp = 1.0
    elif sp < -1.0:
        sp = -1.0
    out_rpy[0] = math.atan2(Rb[2, 1], Rb[2, 2])
    out_rpy[1] = math.asin(sp)
    out_rpy[2] = math.atan2(Rb[1, 0], Rb[0, 0])
    return Rb


@njit(cache=True)
def simulate_loop(
    x0,
    t0,
    n_steps,
    decim,
    m_l,
    m_r,
    c_l,
    c_r,
    I_l,
    I_r,
    ctr_l,
    semi_l,
    ctr_r,
    semi_r,
    kc,
    dc,
    mu,
    v_reg,
    patch_l,
    patch_r,
    ctrl_kind,
    ctrl_p,
    g,
    dt,
    fall_angle,
    fall_height,
    log,
):
    """Integrate n_steps from x0, logging every decim steps.

    Returns (status, rows_written, t_event, x_final).  n_steps must be a
    multiple of decim so the sample interval stays constant.  fall_height is
    the absolute hip-height threshold (already scaled by leg length).
    """
    x = x0.copy()
    xn = np.empty(15)
    acc = np.empty(7)
    q_ext = np.zeros(7)
    R_l = np.empty((3, 3))
    R_r = np.empty((3, 3))
    rpy = np.empty(3)
    cl_out = np.empty(10)
    cr_out = np.empty(10)
    w_r = np.empty(3)
    t1 = np.empty(3)
    t2 = np.empty(3)
    a_w = np.empty(3)
    r_l = np.empty(3)
    r_r = np.empty(3)
    tmp = np.empty((3, 3))
    Iw_l = np.empty((3, 3))
    Iw_r = np.empty((3, 3))

    d_cum = 0.0
    w_act = 0.0
    t = t0
    rows = 0
    status = STATUS_OK
    t_event = -1.0

    i = 0
    while True:
        _quat_to_rot(x[3:7], R_l)
        _rot_y_apply(R_l, x[13], R_r)
        a_w[0] = R_l[0, 1]
        a_w[1] = R_l[1, 1]
        a_w[2] = R_l[2, 1]
        qhd = x[14]
        for j in range(3):
            w_r[j] = x[10 + j] + qhd * a_w[j]

        tau_ctl, tau_hs = _controller(ctrl_kind, ctrl_p, t, x[13], qhd)
        tau_hip = tau_ctl + tau_hs

        vl = _contact_one(R_l, x[0:3], x[7:10], x[10:13], ctr_l, semi_l, kc, dc, mu, v_reg, patch_l, cl_out)
        vr = _contact_one(R_r, x[0:3], x[7:10], w_r, ctr_r, semi_r, kc, dc, mu, v_reg, patch_r, cr_out)

        # generalized contact forces
        for j in range(7):
            q_ext[j] = 0.0
        for side in range(2):
            out = cl_out if side == 0 else cr_out
            fn = out[0]
            if fn == 0.0 and out[1] == 0.0 and out[2] == 0.0:
                continue
            fx, fy, fz = out[1], out[2], fn
            rx = out[7] - x[0]
            ry = out[8] - x[1]
            rz = out[9] - x[2]
            q_ext[0] += fx
            q_ext[1] += fy
            q_ext[2] += fz
            mx = ry * fz - rz * fy + out[3]
            my = rz * fx - rx * fz + out[4]
            mz = rx * fy - ry * fx + out[5]
            q_ext[3] += mx
            q_ext[4] += my
            q_ext[5] += mz
            if side == 1:
                q_ext[6] += a_w[0] * mx + a_w[1] * my + a_w[2] * mz

        if i % decim == 0:
            row = log[rows]
            row[0] = t
            for j in range(3):
                row[1 + j] = x[j]
            for j in range(4):
                row[4 + j] = x[3 + j]
            for j in range(3):
                row[8 + j] = x[7 + j]
            # body-frame angular velocity of the base (left leg)
            row[11] = R_l[0, 0] * x[10] + R_l[1, 0] * x[11] + R_l[2, 0] * x[12]
            row[12] = R_l[0, 1] * x[10] + R_l[1, 1] * x[11] + R_l[2, 1] * x[12]
            row[13] = R_l[0, 2] * x[10] + R_l[1, 2] * x[11] + R_l[2, 2] * x[12]
            row[14] = x[13]
            row[15] = x[14]
            row[16] = tau_ctl
            row[17] = tau_hs
            for j in range(10):
                row[18 + j] = cl_out[j]
                row[28 + j] = cr_out[j]
            Rb = _attitude(R_l, x[13], rpy)
            row[38] = rpy[0]
            row[39] = rpy[1]
            row[40] = rpy[2]
            # attitude rates from the averaged-frame angular velocity
            for j in range(3):
                t1[j] = x[10 + j] + 0.5 * qhd * a_w[j]
            wbx = Rb[0, 0] * t1[0] + Rb[1, 0] * t1[1] + Rb[2, 0] * t1[2]
            wby = Rb[0, 1] * t1[0] + Rb[1, 1] * t1[1] + Rb[2, 1] * t1[2]
            wbz = Rb[0, 2] * t1[0] + Rb[1, 2] * t1[1] + Rb[2, 2] * t1[2]
            sr = math.sin(rpy[0])
            cr = math.cos(rpy[0])
            cp = math.cos(rpy[1])
            tp = math.tan(rpy[1])
            row[41] = wbx + tp * (wby * sr + wbz * cr)
            row[42] = wby * cr - wbz * sr
            row[43] = (wby * sr + wbz * cr) / cp
            # CoM, energies
            _rot_inertia(R_l, I_l, Iw_l, tmp)
            _rot_inertia(R_r, I_r, Iw_r, tmp)
            _matvec3(R_l, c_l, r_l)
            _matvec3(R_r, c_r, r_r)
            m_tot = m_l + m_r
            for j in range(3):
                row[44 + j] = x[j] + (m_l * r_l[j] + m_r * r_r[j]) / m_tot
            _cross(x[10:13], r_l, t1)
            ke = 0.0
            for j in range(3):
                vcl = x[7 + j] + t1[j]
                ke += 0.5 * m_l * vcl * vcl
            _cross(w_r, r_r, t1)
            for j in range(3):
                vcr = x[7 + j] + t1[j]
                ke += 0.5 * m_r * vcr * vcr
            _matvec3(Iw_l, x[10:13], t1)
            ke += 0.5 * (x[10] * t1[0] + x[11] * t1[1] + x[12] * t1[2])
            _matvec3(Iw_r, w_r, t1)
            ke += 0.5 * (w_r[0] * t1[0] + w_r[1] * t1[1] + w_r[2] * t1[2])
            row[47] = ke
            row[48] = g * (m_l * (x[2] + r_l[2]) + m_r * (x[2] + r_r[2]))
            e_spring = 0.0
            if cl_out[6] > 0.0:
                e_spring += 0.5 * kc * cl_out[6] * cl_out[6]
            if cr_out[6] > 0.0:
                e_spring += 0.5 * kc * cr_out[6] * cr_out[6]
            if ctrl_kind == CTRL_BANGBANG:
                phi_max = ctrl_p[2]
                ks = ctrl_p[3]
                if x[13] > phi_max:
                    dq = x[13] - phi_max
                    e_spring += 0.5 * ks * dq * dq
                elif x[13] < -phi_max:
                    dq = x[13] + phi_max
                    e_spring += 0.5 * ks * dq * dq
            row[49] = e_spring
            row[50] = d_cum
            row[51] = w_act
            rows += 1

        # fall detection on the current state
        _attitude(R_l, x[13], rpy)
        if abs(rpy[0]) > fall_angle or abs(rpy[1]) > fall_angle or x[2] < fall_height:
            status = STATUS_FELL
            t_event = t
            break
        if i == n_steps:
            break

        ok = _accel(x, tau_hip, q_ext, m_l, m_r, c_l, c_r, I_l, I_r, g, acc)
        if not ok:
            status = STATUS_DIVERGED
            t_event = t
            break
        _integrate(x, acc, dt, xn)
        finite = True
        for j in range(15):
            if not math.isfinite(xn[j]):
                finite = False
                break
        if not finite:
            status = STATUS_DIVERGED
            t_event = t
            break

        # energy bookkeeping with the updated velocities (consistent with the
        # semi-implicit position update)
        qhd_new = xn[14]
        w_act += tau_ctl * qhd_new * dt
        if tau_hs != 0.0:
            # damping part of the hardstop dissipates; spring part is potential
            d_cum += ctrl_p[4] * qhd_new * qhd_new * dt
        for j in range(3):
            w_r[j] = xn[10 + j] + qhd_new * a_w[j]
        for side in range(2):
            out = cl_out if side == 0 else cr_out
            depth = out[6]
            if depth <= 0.0:
                continue
            rx = out[7] - x[0]
            ry = out[8] - x[1]
            rz = out[9] - x[2]
            if side == 0:
                wex, wey, wez = xn[10], xn[11], xn[12]
            else:
                wex, wey, wez = w_r[0], w_r[1], w_r[2]
            vpx = xn[7] + wey * rz - wez * ry
            vpy = xn[8] + wez * rx - wex * rz
            vpz = xn[9] + wex * ry - wey * rx
            xdot = -vpz
            d_cum += (out[0] - kc * depth) * xdot * dt
            d_cum += -(out[1] * vpx + out[2] * vpy) * dt
            d_cum += -(out[3] * wex + out[4] * wey + out[5] * wez) * dt

        for j in range(15):
            x[j] = xn[j]
        t = t0 + (i + 1) * dt
        i += 1

    return status, rows, t_event, x


@njit(cache=True)
def single_step(x, t, tau_hip, q_ext, m_l, m_r, c_l, c_r, I_l, I_r, g, dt):
    """One integration step with caller-supplied generalized external forces."""
    acc = np.empty(7)
    ok = _accel(x, tau_hip, q_ext, m_l, m_r, c_l, c_r, I_l, I_r, g, acc)
    out = np.empty(15)
    if not ok:
        return False, out
    _integrate(x, acc, dt, out)
    return True, out


@njit(cache=True)
def forward_dyn(x, tau_hip, q_ext, m_l, m_r, c_l, c_r, I_l, I_r, g):
    acc = np.empty(7)
    ok = _accel(x, tau_hip, q_ext, m_l, m_r, c_l, c_r, I_l, I_r, g, acc)
    return ok, acc
