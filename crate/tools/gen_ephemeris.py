#!/usr/bin/env python3
"""Regenerate the low-accuracy ephemeris tables shipped in crates/core/data/ephemeris.

Solar system: JPL "Keplerian Elements for Approximate Positions of the Major
Planets" (E. M. Standish, Table 1, valid 1800-2050), heliocentric, ecliptic
J2000, two-body velocities with GM_sun + GM_planet.

Jovian system: J. Meeus, Astronomical Algorithms (2nd ed.), ch. 44 low-accuracy
theory for the Galilean satellites. Longitudes are measured in Jupiter's
equatorial plane from a fixed reference direction; only differences between
satellites matter downstream. Velocities are circular.

Usage: python3 tools/gen_ephemeris.py
"""
import math
import os

AU_KM = 149597870.7
GM_SUN = 1.32712440041e11
DEG = math.pi / 180.0

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data", "ephemeris")

# a [au], e, I [deg], L [deg], long.peri [deg], long.node [deg]; then rates per Julian century
STANDISH = {
    "Venus": ((0.72333566, 0.00677672, 3.39467605, 181.97909950, 131.60246718, 76.67984255),
              (0.00000390, -0.00004107, -0.00078890, 58517.81538729, 0.00268329, -0.27769418), 324858.592),
    "Earth": ((1.00000261, 0.01671123, -0.00001531, 100.46457166, 102.93768193, 0.0),
              (0.00000562, -0.00004392, -0.01294668, 35999.37244981, 0.32327364, 0.0), 403503.235502),
    "Mars": ((1.52371034, 0.09339410, 1.84969142, -4.55343205, -23.94362959, 49.55953891),
             (0.00001847, 0.00007882, -0.00813131, 19140.30268499, 0.44441088, -0.29257343), 42828.375816),
    "Jupiter": ((5.20288700, 0.04838624, 1.30439695, 34.39644051, 14.72847983, 100.47390909),
                (-0.00011607, -0.00013253, -0.00183714, 3034.74612775, 0.21252668, 0.20469106), 126712764.1),
    "Saturn": ((9.53667594, 0.05386179, 2.48599187, 49.95424423, 92.59887831, 113.66242448),
               (-0.00125060, -0.00050991, 0.00193609, 1222.49362201, -0.41897216, -0.28867794), 37940584.8418),
    "Uranus": ((19.18916464, 0.04725744, 0.77263783, 313.23810451, 170.95427630, 74.01692503),
               (-0.00196176, -0.00004397, -0.00242939, 428.48202785, 0.40805281, 0.04240589), 5794556.4),
    "Neptune": ((30.06992276, 0.00859048, 1.77004347, -55.12002969, 44.96476227, 131.78422574),
                (0.00026291, 0.00005105, 0.00035372, 218.45945325, -0.32241464, -0.00508664), 6836527.10058),
}


def kepler(m, e):
    ecc = m + e * math.sin(m)
    for _ in range(50):
        d = (ecc - e * math.sin(ecc) - m) / (1.0 - e * math.cos(ecc))
        ecc -= d
        if abs(d) < 1e-15:
            break
    return ecc


def planet_state(name, jd):
    base, rate, gm = STANDISH[name]
    t = (jd - 2451545.0) / 36525.0
    a, e, inc, lon, varpi, node = (b + r * t for b, r in zip(base, rate))
    a_km = a * AU_KM
    omega = (varpi - node) * DEG
    node *= DEG
    inc *= DEG
    m = ((lon - varpi + 180.0) % 360.0 - 180.0) * DEG
    ecc = kepler(m, e)
    mu = GM_SUN + gm
    n = math.sqrt(mu / a_km**3)
    xp = a_km * (math.cos(ecc) - e)
    yp = a_km * math.sqrt(1 - e * e) * math.sin(ecc)
    edot = n / (1 - e * math.cos(ecc))
    vxp = -a_km * math.sin(ecc) * edot
    vyp = a_km * math.sqrt(1 - e * e) * math.cos(ecc) * edot

    co, so = math.cos(omega), math.sin(omega)
    cn, sn = math.cos(node), math.sin(node)
    ci, si = math.cos(inc), math.sin(inc)

    def rot(x, y):
        return (
            (co * cn - so * sn * ci) * x + (-so * cn - co * sn * ci) * y,
            (co * sn + so * cn * ci) * x + (-so * sn + co * cn * ci) * y,
            (so * si) * x + (co * si) * y,
        )

    return rot(xp, yp), rot(vxp, vyp), (inc, omega, node)


def solar_table(jd, label):
    lines = [
        f"# Heliocentric states, {label}",
        "# source: JPL approximate planetary elements (Standish, Table 1), two-body velocities",
        "# frame: ECLIPJ2000",
        "# center: Sun",
        "# columns: jd body x_km y_km z_km vx_kms vy_kms vz_kms",
    ]
    for name in STANDISH:
        r, v, els = planet_state(name, jd)
        lines.append(f"{jd:.1f} {name} " + " ".join(f"{c:.9e}" for c in (*r, *v)))
        if name == "Jupiter":
            i, w, o = (x / DEG for x in els)
            lines.insert(4, f"# jupiter mean elements at epoch: i={i:.8f} deg, omega={w:.8f} deg, node={o:.8f} deg")
    return "\n".join(lines) + "\n"


def jovian_table(jd, label):
    d = jd - 2451545.0
    s = lambda deg: math.sin(deg * DEG)
    c = lambda deg: math.cos(deg * DEG)
    v = 172.74 + 0.00111588 * d
    m = 357.529 + 0.9856003 * d
    n = 20.020 + 0.0830853 * d + 0.329 * s(v)
    j = 66.115 + 0.9025179 * d - 0.329 * s(v)
    a = 1.915 * s(m) + 0.020 * s(2 * m)
    b = 5.555 * s(n) + 0.168 * s(2 * n)
    k = j + a - b
    big_r = 1.00014 - 0.01671 * c(m) - 0.00014 * c(2 * m)
    r = 5.20872 - 0.25208 * c(n) - 0.00611 * c(2 * n)
    delta = math.sqrt(r * r + big_r * big_r - 2 * r * big_r * c(k))
    psi = math.asin(big_r / delta * s(k)) / DEG
    dd = d - delta / 173.0
    u1 = 163.8069 + 203.4058646 * dd + psi - b
    u2 = 358.4140 + 101.2916335 * dd + psi - b
    u3 = 5.7176 + 50.2345180 * dd + psi - b
    u4 = 224.8092 + 21.4879800 * dd + psi - b
    g = 331.18 + 50.310482 * dd
    h = 87.45 + 21.569231 * dd
    u1c = u1 + 0.473 * s(2 * (u1 - u2))
    u2c = u2 + 1.065 * s(2 * (u2 - u3))
    u3c = u3 + 0.165 * s(g)
    u4c = u4 + 0.843 * s(h)
    rj = 71492.0
    radii = {
        "Io": 5.9057 - 0.0244 * c(2 * (u1 - u2)),
        "Europa": 9.3966 - 0.0882 * c(2 * (u2 - u3)),
        "Ganymede": 14.9883 - 0.0216 * c(g),
        "Callisto": 26.3627 - 0.1939 * c(h),
    }
    gms = {"Io": 5959.916, "Europa": 3202.739, "Ganymede": 9887.834, "Callisto": 7179.289}
    gm_j = 126686531.9
    lon = {"Io": u1c, "Europa": u2c, "Ganymede": u3c, "Callisto": u4c}
    laplace = (u1c - 3 * u2c + 2 * u3c) % 360.0
    lines = [
        f"# Jovicentric states, {label}",
        "# source: Meeus low-accuracy Galilean satellite theory, circular velocities",
        "# frame: JUPITER_EQUATOR",
        "# center: Jupiter",
        f"# laplace argument u1 - 3 u2 + 2 u3 = {laplace:.3f} deg",
        "# columns: jd body x_km y_km z_km vx_kms vy_kms vz_kms",
    ]
    for name in ("Io", "Europa", "Ganymede", "Callisto"):
        rad = radii[name] * rj
        th = lon[name] * DEG
        speed = math.sqrt((gm_j + gms[name]) / rad)
        st = (rad * math.cos(th), rad * math.sin(th), 0.0, -speed * math.sin(th), speed * math.cos(th), 0.0)
        lines.append(f"{jd:.1f} {name} " + " ".join(f"{x:.9e}" for x in st))
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "solar_2012-09-30.txt"), "w") as f:
        f.write(solar_table(2456200.5, "2012-09-30 00:00:00 TDB"))
    with open(os.path.join(OUT, "jovian_2016-04-09.txt"), "w") as f:
        f.write(jovian_table(2457487.5, "2016-04-09 00:00:00 TDB"))
